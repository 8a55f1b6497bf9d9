use std::path::PathBuf;

use gafmtf::classifier::{run_experiment, EncodingMode, GridConfig};
use gafmtf::io::dataset::{format_ucr, parse_trajectories, parse_ucr};
use gafmtf::io::export::{format_csv, parse_csv};
use gafmtf::io::{
    export_image, load_trajectories, load_ucr, read_checkpoint, read_csv_matrix, read_report,
    write_checkpoint, write_report, write_trajectories, write_ucr, ImageFormat, Split,
};
use gafmtf::matrix::SquareMatrix;
use gafmtf::synthetic::sine_square;
use proptest::prelude::*;

fn coffee(split: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join(format!("tests/data/coffee/Coffee_{split}.txt"))
}

#[test]
fn coffee_loads_with_expected_shape() {
    for split in ["TRAIN", "TEST"] {
        let d = load_ucr(coffee(split)).unwrap();
        assert_eq!(d.len(), 28);
        assert_eq!(d.series_length(), Some(286));
        let mut classes = d.labels();
        classes.sort();
        classes.dedup();
        assert_eq!(classes.len(), 2);
        assert_eq!(d.name, "Coffee");
        assert_eq!(d.split, if split == "TRAIN" { Split::Train } else { Split::Test });
    }
}

#[test]
fn png_maps_extremes_to_black_and_white() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.png");
    let m = SquareMatrix::from_rows(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
    export_image(&m, &path, ImageFormat::Png).unwrap();
    let img = image::open(&path).unwrap().to_luma8();
    assert_eq!(img.dimensions(), (2, 2));
    assert_eq!(img.into_raw(), vec![0, 255, 255, 0]);
}

#[test]
fn constant_matrix_exports_as_zeros_and_exact_csv() {
    let dir = tempfile::tempdir().unwrap();
    let m = SquareMatrix::from_fn(3, |_, _| 0.7);
    let png = dir.path().join("c.png");
    export_image(&m, &png, ImageFormat::Png).unwrap();
    assert!(image::open(&png).unwrap().to_luma8().into_raw().iter().all(|&v| v == 0));
    let csv = dir.path().join("c.csv");
    export_image(&m, &csv, ImageFormat::Csv).unwrap();
    assert_eq!(read_csv_matrix(&csv).unwrap(), m);
}

#[test]
fn non_finite_matrix_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let m = SquareMatrix::from_fn(2, |i, j| if i == j { f64::NAN } else { 0.0 });
    let err = export_image(&m, dir.path().join("n.png"), ImageFormat::Png).unwrap_err();
    assert!(err.is_numerical());
}

proptest! {
    #[test]
    fn csv_round_trip_is_bit_exact(n in 1usize..8, vals in prop::collection::vec(-1e6f64..1e6, 64)) {
        let m = SquareMatrix::from_fn(n, |i, j| vals[i * 8 + j] / 7.0);
        let back = parse_csv(&format_csv(&m)).unwrap();
        for (a, b) in m.as_slice().iter().zip(back.as_slice()) {
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
    }
}

#[test]
fn ucr_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let d = sine_square(3, 20, 4, Split::Train);
    let path = dir.path().join("Synth_TRAIN.tsv");
    write_ucr(&d, &path).unwrap();
    let back = load_ucr(&path).unwrap();
    assert_eq!(back.split, Split::Train);
    assert_eq!(back.instances, d.instances);
    assert_eq!(parse_ucr(&format_ucr(&d), "x", Split::Unspecified, true).unwrap().instances, d.instances);
}

#[test]
fn ucr_errors_name_the_line() {
    let err = parse_ucr("1,0.5,0.25\n2,0.5,abc\n", "bad", Split::Train, true).unwrap_err();
    assert!(err.to_string().contains("line 2"), "{err}");
    assert!(parse_ucr("1,0.5,0.25\n2,0.5\n", "ragged", Split::Train, true).is_err());
}

#[test]
fn trajectory_round_trip() {
    let text = "traj_id,t,x,y,label\n\
                a,0,1.0,2.0,cat\n\
                b,0,5.0,5.0,dog\n\
                a,1,1.5,2.5,cat\n\
                a,2,2.0,2.0,cat\n\
                b,3,4.0,6.0,dog\n";
    let d = parse_trajectories(text, "pets").unwrap();
    assert_eq!(d.instances.len(), 2);
    assert_eq!(d.instances[0].trajectory.len(), 3);
    assert_eq!(d.labels(), vec!["cat", "dog"]);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("pets.csv");
    write_trajectories(&d, &path).unwrap();
    assert_eq!(load_trajectories(&path).unwrap().instances, d.instances);
}

#[test]
fn checkpoint_and_report_round_trip() {
    let train = sine_square(3, 40, 1, Split::Train);
    let test = sine_square(2, 40, 2, Split::Test);
    let mut grid = GridConfig {
        sizes: vec![16],
        quantiles: vec![4],
        c_values: vec![1.0],
        folds: 2,
        ..GridConfig::default()
    };
    grid.network.tica.max_iters = 3;
    let out = run_experiment(&train, &test, EncodingMode::Dual, &grid, 5, false).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let ck = dir.path().join("net.ckpt");
    write_checkpoint(&out.network, &ck).unwrap();
    assert_eq!(read_checkpoint(&ck).unwrap(), out.network);
    let rp = dir.path().join("report.toml");
    write_report(&out.report, &rp).unwrap();
    assert_eq!(read_report(&rp).unwrap(), out.report);
    let text = std::fs::read_to_string(&rp).unwrap();
    assert!(text.contains("test_error"));
    assert!(!text.contains("wall_time_s"));
}
