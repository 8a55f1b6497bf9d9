//! Full pipeline on synthetic sine-versus-square data.
//!
//! `cargo run --release --example sine_square -- [seed] [sizes...]`

use std::time::Instant;

use gafmtf::classifier::{run_experiment, EncodingMode, GridConfig};
use gafmtf::synthetic::sine_square_split;

fn main() -> gafmtf::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let seed = args.first().and_then(|s| s.parse().ok()).unwrap_or(0);
    let mut grid = GridConfig::default();
    let sizes: Vec<usize> = args.iter().skip(1).filter_map(|s| s.parse().ok()).collect();
    if !sizes.is_empty() {
        grid.sizes = sizes;
    }
    let (train, test) = sine_square_split(20, 20, 128, seed);
    let start = Instant::now();
    let out = run_experiment(&train, &test, EncodingMode::Dual, &grid, seed, true)?;
    let r = &out.report;
    println!(
        "selected S={} Q={:?} C={} cv_error={} test_error={} ({:.1} s)",
        r.selected.size,
        r.selected.quantiles,
        r.selected.c,
        r.cv_error,
        r.test_error,
        start.elapsed().as_secs_f64()
    );
    for p in &r.pretraining {
        println!(
            "layer {}: {} patches, {} iterations ({}), objective {} -> {}",
            p.layer, p.patches, p.iterations, p.termination, p.initial_objective, p.final_objective
        );
    }
    Ok(())
}
