use std::collections::HashMap;

use gafmtf::sfc::{cell_of, linearize, HilbertMap, Trajectory};
use proptest::prelude::*;

mod common;
use common::*;

#[test]
fn matches_recursive_construction_up_to_order_6() {
    for p in 1..=6 {
        let map = HilbertMap::new(p).unwrap();
        let curve = recursive_curve(p);
        assert_eq!(curve.len() as u64, map.cell_count());
        for (d, &(x, y)) in curve.iter().enumerate() {
            assert_eq!(map.index(x, y).unwrap(), d as u64, "order {p} cell ({x},{y})");
            assert_eq!(map.cell(d as u64).unwrap(), (x, y));
        }
    }
}

#[test]
fn bijective_adjacent_and_anchored_up_to_order_6() {
    for p in 1..=6 {
        let map = HilbertMap::new(p).unwrap();
        let side = map.side();
        let mut seen = vec![false; map.cell_count() as usize];
        for x in 0..side {
            for y in 0..side {
                let d = map.index(x, y).unwrap() as usize;
                assert!(!seen[d]);
                seen[d] = true;
            }
        }
        assert!(seen.iter().all(|&s| s));
        for d in 1..map.cell_count() {
            let (a, b) = (map.cell(d - 1).unwrap(), map.cell(d).unwrap());
            assert_eq!(a.0.abs_diff(b.0) + a.1.abs_diff(b.1), 1, "order {p} step {d}");
        }
        assert_eq!(map.cell(0).unwrap(), (0, 0));
        assert_eq!(map.cell(map.cell_count() - 1).unwrap(), (side - 1, 0));
    }
}

#[test]
fn order_two_table() {
    let table: HashMap<(u64, u64), u64> = recursive_curve(2)
        .into_iter()
        .enumerate()
        .map(|(d, c)| (c, d as u64))
        .collect();
    #[rustfmt::skip]
    let rows_top_down = [
        [5, 6, 9, 10],
        [4, 7, 8, 11],
        [3, 2, 13, 12],
        [0, 1, 14, 15],
    ];
    for (r, row) in rows_top_down.iter().enumerate() {
        for (c, &d) in row.iter().enumerate() {
            assert_eq!(table[&(c as u64, 3 - r as u64)], d);
        }
    }
}

#[test]
fn fourteen_point_trajectory_at_order_two() {
    // box [0, 8] x [0, 8]: cell side 2
    let pts = vec![
        (0.0, 0.0),
        (7.0, 1.0),
        (5.5, 3.5),
        (4.5, 2.5),
        (5.9, 2.1),
        (3.0, 5.0),
        (2.5, 6.5),
        (4.1, 4.1),
        (7.9, 6.0),
        (6.0, 2.0),
        (7.5, 3.9),
        (4.0, 2.0),
        (1.0, 3.0),
        (8.0, 8.0),
    ];
    let table: HashMap<(u64, u64), u64> = recursive_curve(2)
        .into_iter()
        .enumerate()
        .map(|(d, c)| (c, d as u64))
        .collect();
    let expected: Vec<f64> = pts
        .iter()
        .map(|&(x, y)| {
            let col = ((x / 2.0) as u64).min(3);
            let row = ((y / 2.0) as u64).min(3);
            table[&(col, row)] as f64
        })
        .collect();
    let t = Trajectory::new(pts).unwrap();
    assert_eq!(linearize(&t, 2).unwrap().values(), expected.as_slice());
    assert_eq!(
        expected,
        vec![0.0, 15.0, 13.0, 13.0, 13.0, 7.0, 6.0, 8.0, 10.0, 12.0, 12.0, 13.0, 3.0, 10.0]
    );
}

proptest! {
    #[test]
    fn linearized_values_in_range(pts in prop::collection::vec((-1e3f64..1e3, -1e3f64..1e3), 1..50), p in 1u32..9) {
        let t = Trajectory::new(pts).unwrap();
        let max = (4u64.pow(p) - 1) as f64;
        let s = linearize(&t, p).unwrap();
        prop_assert_eq!(s.len(), t.len());
        prop_assert!(s.values().iter().all(|&v| (0.0..=max).contains(&v) && v.fract() == 0.0));
    }

    #[test]
    fn cells_stay_on_grid(pts in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 1..30), p in 1u32..7) {
        let t = Trajectory::new(pts).unwrap();
        let map = HilbertMap::new(p).unwrap();
        for &pt in t.points() {
            let (c, r) = cell_of(&map, &t.bounding_box(), pt);
            prop_assert!(c < map.side() && r < map.side());
        }
    }
}
