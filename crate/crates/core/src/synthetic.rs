//! Synthetic sine-versus-square two-class data.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::io::dataset::{LabeledDataset, Split};
use crate::series::Series;

pub const SINE_LABEL: &str = "1";
pub const SQUARE_LABEL: &str = "2";

/// `per_class` sine waves and `per_class` square waves of `length` points,
/// alternating classes. Period, phase and amplitude are drawn at random; no
/// noise is added.
pub fn sine_square(per_class: usize, length: usize, seed: u64, split: Split) -> LabeledDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut instances = Vec::with_capacity(2 * per_class);
    for _ in 0..per_class {
        for (label, square) in [(SINE_LABEL, false), (SQUARE_LABEL, true)] {
            let period = rng.random_range(24.0..64.0);
            let phase = rng.random_range(0.0..std::f64::consts::TAU);
            let amp = rng.random_range(0.8..1.2);
            let values = (0..length)
                .map(|t| {
                    let s = (std::f64::consts::TAU * t as f64 / period + phase).sin();
                    let v = if square { s.signum() } else { s };
                    amp * v
                })
                .collect();
            let series = Series::from_values(values).expect("finite values");
            instances.push((label.to_string(), series));
        }
    }
    LabeledDataset::new("SineSquare", split, instances)
}

/// Independent train and test sets.
pub fn sine_square_split(per_class_train: usize, per_class_test: usize, length: usize, seed: u64) -> (LabeledDataset, LabeledDataset) {
    (
        sine_square(per_class_train, length, seed, Split::Train),
        sine_square(per_class_test, length, seed.wrapping_add(0x5EED), Split::Test),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_and_balance() {
        let d = sine_square(20, 128, 1, Split::Train);
        assert_eq!(d.len(), 40);
        assert_eq!(d.series_length(), Some(128));
        assert_eq!(d.labels().iter().filter(|l| *l == SINE_LABEL).count(), 20);
        assert_eq!(d, sine_square(20, 128, 1, Split::Train));
    }
}
