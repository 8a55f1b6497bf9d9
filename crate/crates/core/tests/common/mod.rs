//! Independent reference implementations shared by the test targets.
#![allow(dead_code)]

use gafmtf::series::{paa, rescale, RangeMode, Series};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// cos(phi_i + phi_j) with phi = arccos of the rescaled PAA values.
pub fn cos_sum(series: &Series, size: usize) -> Vec<Vec<f64>> {
    let reduced = paa(series, size).unwrap();
    let phi: Vec<f64> = rescale(&reduced, RangeMode::MinusOneToOne)
        .values
        .iter()
        .map(|x| x.clamp(-1.0, 1.0).acos())
        .collect();
    phi.iter().map(|a| phi.iter().map(|b| (a + b).cos()).collect()).collect()
}

pub fn random_series(rng: &mut ChaCha8Rng, len: usize) -> Series {
    Series::from_values((0..len).map(|_| rng.random_range(-10.0..10.0)).collect()).unwrap()
}

/// Bin of integer value `x` for integer data, with every cut point kept as
/// an exact rational `num / q`.
pub fn oracle_bins(data: &[i64], q: usize) -> Vec<usize> {
    let n = data.len() as i64;
    let qi = q as i64;
    let mut sorted = data.to_vec();
    sorted.sort();
    // cut i sits at position h = (n - 1) i / q between order statistics
    let cuts: Vec<i64> = (1..qi)
        .map(|i| {
            let pos = (n - 1) * i;
            let lo = (pos / qi) as usize;
            let hi = (lo + 1).min(sorted.len() - 1);
            let frac_num = pos - lo as i64 * qi;
            sorted[lo] * qi + frac_num * (sorted[hi] - sorted[lo])
        })
        .collect();
    data.iter()
        .map(|&x| cuts.iter().filter(|&&c| c < x * qi).count())
        .collect()
}

pub fn oracle_field(data: &[i64], q: usize) -> Vec<Vec<f64>> {
    let bins = oracle_bins(data, q);
    let mut counts = vec![vec![0usize; q]; q];
    for t in 1..bins.len() {
        counts[bins[t - 1]][bins[t]] += 1;
    }
    let w: Vec<Vec<f64>> = counts
        .iter()
        .map(|row| {
            let total: usize = row.iter().sum();
            if total == 0 {
                vec![1.0 / q as f64; q]
            } else {
                row.iter().map(|&c| c as f64 / total as f64).collect()
            }
        })
        .collect();
    bins.iter()
        .map(|&a| bins.iter().map(|&b| w[a][b]).collect())
        .collect()
}

pub fn all_words(len: usize, alphabet: i64) -> Vec<Vec<i64>> {
    let mut out = vec![vec![]];
    for _ in 0..len {
        out = out
            .into_iter()
            .flat_map(|w| {
                (0..alphabet).map(move |c| {
                    let mut w = w.clone();
                    w.push(c);
                    w
                })
            })
            .collect();
    }
    out
}

/// Cells of the order-`p` curve in visiting order, built from four copies
/// of the order-`p-1` curve.
pub fn recursive_curve(p: u32) -> Vec<(u64, u64)> {
    if p == 0 {
        return vec![(0, 0)];
    }
    let prev = recursive_curve(p - 1);
    let h = 1u64 << (p - 1);
    let mut out = Vec::with_capacity(prev.len() * 4);
    // lower left: transpose, so the sub-curve exits upward
    out.extend(prev.iter().map(|&(x, y)| (y, x)));
    // upper left and upper right: translated copies
    out.extend(prev.iter().map(|&(x, y)| (x, y + h)));
    out.extend(prev.iter().map(|&(x, y)| (x + h, y + h)));
    // lower right: anti-transpose, so the curve ends at the lower-right corner
    out.extend(prev.iter().map(|&(x, y)| (2 * h - 1 - y, h - 1 - x)));
    out
}
