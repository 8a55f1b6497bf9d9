//! Hilbert space-filling-curve linearisation of 2D trajectories.
//!
//! Cells are addressed as `(col, row)` with row 0 at the bottom. At every
//! order the curve starts in the lower-left cell (index 0) and ends in the
//! lower-right cell (index `4^p - 1`). The order-1 motif is
//! `(0,0) -> (0,1) -> (1,1) -> (1,0)`; order `p` is built from four order
//! `p-1` copies: the lower-left copy transposed, the two upper copies
//! translated, and the lower-right copy reflected across the anti-diagonal.

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::series::Series;

pub const MAX_ORDER: u32 = 30;

/// Axis-aligned box enclosing a trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingBox {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

impl BoundingBox {
    pub fn of_points<'a>(points: impl IntoIterator<Item = &'a (f64, f64)>) -> Option<Self> {
        points.into_iter().fold(None, |acc, &(x, y)| {
            Some(match acc {
                None => BoundingBox {
                    min_x: x,
                    min_y: y,
                    max_x: x,
                    max_y: y,
                },
                Some(b) => BoundingBox {
                    min_x: b.min_x.min(x),
                    min_y: b.min_y.min(y),
                    max_x: b.max_x.max(x),
                    max_y: b.max_y.max(y),
                },
            })
        })
    }

    pub fn union(&self, other: &BoundingBox) -> BoundingBox {
        BoundingBox {
            min_x: self.min_x.min(other.min_x),
            min_y: self.min_y.min(other.min_y),
            max_x: self.max_x.max(other.max_x),
            max_y: self.max_y.max(other.max_y),
        }
    }

    pub fn contains(&self, (x, y): (f64, f64)) -> bool {
        x >= self.min_x && x <= self.max_x && y >= self.min_y && y <= self.max_y
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    points: Vec<(f64, f64)>,
    bbox: BoundingBox,
}

impl Trajectory {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        if let Some(i) = points
            .iter()
            .position(|(x, y)| !x.is_finite() || !y.is_finite())
        {
            return Err(Error::data(format!("non-finite coordinate at point {i}")));
        }
        let bbox = BoundingBox::of_points(&points)
            .ok_or_else(|| Error::invalid("trajectory must contain at least one point"))?;
        Ok(Trajectory { points, bbox })
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn bounding_box(&self) -> BoundingBox {
        self.bbox
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Hilbert curve of a given order over a `2^p x 2^p` grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HilbertMap {
    order: u32,
}

impl HilbertMap {
    pub fn new(order: u32) -> Result<Self> {
        if order == 0 || order > MAX_ORDER {
            return Err(Error::invalid(format!(
                "Hilbert order must lie in 1..={MAX_ORDER}, got {order}"
            )));
        }
        Ok(HilbertMap { order })
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn side(&self) -> u64 {
        1 << self.order
    }

    pub fn cell_count(&self) -> u64 {
        1 << (2 * self.order)
    }

    /// Curve index of the cell at `(col, row)`.
    pub fn index(&self, col: u64, row: u64) -> Result<u64> {
        let n = self.side();
        if col >= n || row >= n {
            return Err(Error::invalid(format!(
                "cell ({col}, {row}) outside the {n}x{n} grid"
            )));
        }
        let (mut x, mut y) = (col, row);
        let mut d = 0;
        let mut s = n / 2;
        while s > 0 {
            let rx = u64::from(x & s > 0);
            let ry = u64::from(y & s > 0);
            d += s * s * ((3 * rx) ^ ry);
            rotate(n, &mut x, &mut y, rx, ry);
            s /= 2;
        }
        Ok(d)
    }

    /// Inverse of [`HilbertMap::index`].
    pub fn cell(&self, index: u64) -> Result<(u64, u64)> {
        if index >= self.cell_count() {
            return Err(Error::invalid(format!(
                "index {index} outside 0..{}",
                self.cell_count()
            )));
        }
        let n = self.side();
        let (mut x, mut y) = (0, 0);
        let mut t = index;
        let mut s = 1;
        while s < n {
            let rx = 1 & (t / 2);
            let ry = 1 & (t ^ rx);
            rotate(s, &mut x, &mut y, rx, ry);
            x += s * rx;
            y += s * ry;
            t /= 4;
            s *= 2;
        }
        Ok((x, y))
    }
}

fn rotate(n: u64, x: &mut u64, y: &mut u64, rx: u64, ry: u64) {
    if ry == 0 {
        if rx == 1 {
            *x = n - 1 - *x;
            *y = n - 1 - *y;
        }
        std::mem::swap(x, y);
    }
}

/// Equal-width cell of `v` along one axis; the top boundary belongs to the
/// last cell and a zero-width axis collapses to cell 0.
fn axis_cell(v: f64, lo: f64, hi: f64, side: u64) -> u64 {
    let width = hi - lo;
    if width <= 0.0 {
        return 0;
    }
    let c = ((v - lo) / width * side as f64).floor();
    (c.max(0.0) as u64).min(side - 1)
}

/// Grid cell of `point` when `bbox` is split into `2^p x 2^p` equal cells.
pub fn cell_of(map: &HilbertMap, bbox: &BoundingBox, (x, y): (f64, f64)) -> (u64, u64) {
    let side = map.side();
    (
        axis_cell(x, bbox.min_x, bbox.max_x, side),
        axis_cell(y, bbox.min_y, bbox.max_y, side),
    )
}

/// Linearises a trajectory over its own bounding box.
pub fn linearize(trajectory: &Trajectory, order: u32) -> Result<Series> {
    linearize_in(trajectory, &HilbertMap::new(order)?, &trajectory.bounding_box())
}

/// Linearises a trajectory over an explicit (e.g. dataset-wide) box.
pub fn linearize_in(trajectory: &Trajectory, map: &HilbertMap, bbox: &BoundingBox) -> Result<Series> {
    let values = trajectory
        .points
        .iter()
        .map(|&p| {
            if !bbox.contains(p) {
                return Err(Error::invalid(format!(
                    "point ({}, {}) outside the bounding box",
                    p.0, p.1
                )));
            }
            let (col, row) = cell_of(map, bbox, p);
            Ok(map.index(col, row)? as f64)
        })
        .collect::<Result<Vec<_>>>()?;
    Series::from_values(values)
}

/// Stretches a series to exactly `target` points by duplicating points in
/// temporal order.
///
/// When `target - n >= n` every point is repeated `floor(target/n)` or
/// `ceil(target/n)` times (point `i` gets `floor((i+1)T/n) - floor(iT/n)`
/// copies). When `0 < target - n < n`, `target - n` distinct points chosen
/// uniformly at random from `seed` are doubled. Output timestamps are
/// `1..=target`.
pub fn stretch_series(series: &Series, target: usize, seed: u64) -> Result<Series> {
    let n = series.len();
    if target < n {
        return Err(Error::invalid(format!(
            "cannot stretch a series of length {n} to {target}; shrink with PAA instead"
        )));
    }
    if target == n {
        return Ok(series.clone());
    }
    let values = series.values();
    let extra = target - n;
    let mut out = Vec::with_capacity(target);
    if extra >= n {
        for (i, &v) in values.iter().enumerate() {
            let copies = (i + 1) * target / n - i * target / n;
            out.extend(std::iter::repeat_n(v, copies));
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut doubled = vec![false; n];
        for i in index::sample(&mut rng, n, extra) {
            doubled[i] = true;
        }
        for (&v, &twice) in values.iter().zip(&doubled) {
            out.push(v);
            if twice {
                out.push(v);
            }
        }
    }
    Series::from_values(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_one_table() {
        let h = HilbertMap::new(1).unwrap();
        assert_eq!(h.index(0, 0).unwrap(), 0);
        assert_eq!(h.index(0, 1).unwrap(), 1);
        assert_eq!(h.index(1, 1).unwrap(), 2);
        assert_eq!(h.index(1, 0).unwrap(), 3);
    }

    #[test]
    fn order_two_endpoints() {
        let h = HilbertMap::new(2).unwrap();
        assert_eq!(h.index(0, 0).unwrap(), 0);
        assert_eq!(h.index(3, 0).unwrap(), 15);
    }

    #[test]
    fn inverse_round_trip() {
        let h = HilbertMap::new(4).unwrap();
        for d in 0..h.cell_count() {
            let (c, r) = h.cell(d).unwrap();
            assert_eq!(h.index(c, r).unwrap(), d);
        }
    }

    #[test]
    fn rejects_out_of_grid() {
        let h = HilbertMap::new(2).unwrap();
        assert!(h.index(4, 0).is_err());
        assert!(h.cell(16).is_err());
        assert!(HilbertMap::new(0).is_err());
    }

    #[test]
    fn single_point_trajectory() {
        let t = Trajectory::new(vec![(3.5, -2.0)]).unwrap();
        assert_eq!(linearize(&t, 3).unwrap().values(), &[0.0]);
    }

    #[test]
    fn quadrant_centres_at_order_one() {
        let t = Trajectory::new(vec![
            (0.0, 0.0),
            (0.25, 0.25),
            (0.25, 0.75),
            (0.75, 0.75),
            (0.75, 0.25),
            (1.0, 1.0),
        ])
        .unwrap();
        let s = linearize(&t, 1).unwrap();
        assert_eq!(s.values(), &[0.0, 0.0, 1.0, 2.0, 3.0, 2.0]);
    }

    #[test]
    fn degenerate_axis_collapses() {
        // zero-height box: every point lands in row 0
        let t = Trajectory::new(vec![(0.0, 1.0), (1.0, 1.0)]).unwrap();
        assert_eq!(linearize(&t, 1).unwrap().values(), &[0.0, 3.0]);
    }

    #[test]
    fn stretch_examples() {
        let s = Series::from_values(vec![1.0, 2.0]).unwrap();
        assert_eq!(stretch_series(&s, 4, 0).unwrap().values(), &[1.0, 1.0, 2.0, 2.0]);
        let s = Series::from_values(vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(stretch_series(&s, 3, 0).unwrap().values(), &[1.0, 2.0, 3.0]);
        assert_eq!(
            stretch_series(&s, 7, 0).unwrap().values(),
            &[1.0, 1.0, 2.0, 2.0, 3.0, 3.0, 3.0]
        );
        assert!(stretch_series(&s, 2, 0).is_err());
    }

    #[test]
    fn random_duplication_is_seeded() {
        let s = Series::from_values(vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let a = stretch_series(&s, 6, 42).unwrap();
        let b = stretch_series(&s, 6, 42).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 6);
        let mut dedup = a.values().to_vec();
        dedup.dedup();
        assert_eq!(dedup, vec![1.0, 2.0, 3.0, 4.0]);
    }
}
