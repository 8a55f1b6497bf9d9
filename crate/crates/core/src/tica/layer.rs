//! Dense TICA layer: weight matrix `W` (p x q), logical pooling matrix `V`
//! (p x p), per-unit receptive-field footprints and weight-tying classes,
//! together with the projected-gradient pretraining loop.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Ridge added to a rank-deficient Gram matrix before its inverse square root.
pub const ORTHO_RIDGE: f64 = 1e-12;

/// Input indices a unit is connected to, as contiguous `(start, len)` runs.
/// Run order defines the unit's relative weight positions.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Footprint {
    runs: Vec<(usize, usize)>,
}

impl Footprint {
    pub fn new(runs: Vec<(usize, usize)>) -> Self {
        Footprint { runs }
    }

    /// A footprint covering `0..q`.
    pub fn full(q: usize) -> Self {
        Footprint { runs: vec![(0, q)] }
    }

    pub fn runs(&self) -> &[(usize, usize)] {
        &self.runs
    }

    pub fn len(&self) -> usize {
        self.runs.iter().map(|r| r.1).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.runs.iter().flat_map(|&(s, l)| s..s + l)
    }
}

/// Connectivity of a layer: footprints, tie classes and the pooling matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    inputs: usize,
    footprints: Vec<Footprint>,
    tie_classes: Vec<usize>,
    /// Row `i` lists the simple units `k` with `V[i][k] = 1`.
    pooling: Vec<Vec<usize>>,
    overlap: Vec<Vec<usize>>,
    ties: Vec<Vec<usize>>,
}

impl Topology {
    pub fn new(
        inputs: usize,
        footprints: Vec<Footprint>,
        tie_classes: Vec<usize>,
        pooling: Vec<Vec<usize>>,
    ) -> Result<Self> {
        let p = footprints.len();
        if p == 0 || inputs == 0 {
            return Err(Error::invalid("layer needs at least one unit and one input"));
        }
        if tie_classes.len() != p || pooling.len() != p {
            return Err(Error::invalid(format!(
                "{p} units but {} tie classes and {} pooling rows",
                tie_classes.len(),
                pooling.len()
            )));
        }
        for (u, fp) in footprints.iter().enumerate() {
            if fp.indices().any(|j| j >= inputs) {
                return Err(Error::invalid(format!("footprint of unit {u} exceeds {inputs} inputs")));
            }
        }
        if pooling.iter().flatten().any(|&k| k >= p) {
            return Err(Error::invalid("pooling row references a missing unit"));
        }
        let mut class_len = BTreeMap::new();
        for (u, &c) in tie_classes.iter().enumerate() {
            let len = footprints[u].len();
            if *class_len.entry(c).or_insert(len) != len {
                return Err(Error::invalid(format!(
                    "tie class {c} mixes footprints of different sizes"
                )));
            }
        }
        let mut by_fp: BTreeMap<&Footprint, Vec<usize>> = BTreeMap::new();
        for (u, fp) in footprints.iter().enumerate() {
            by_fp.entry(fp).or_default().push(u);
        }
        let overlap = by_fp.into_values().collect();
        let mut by_class: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (u, &c) in tie_classes.iter().enumerate() {
            by_class.entry(c).or_default().push(u);
        }
        let ties = by_class.into_values().collect();
        Ok(Topology {
            inputs,
            footprints,
            tie_classes,
            pooling,
            overlap,
            ties,
        })
    }

    /// One unit per row, every unit fully connected, untied, each pooling unit
    /// reading only its own simple unit.
    pub fn dense(units: usize, inputs: usize) -> Result<Self> {
        Topology::new(
            inputs,
            vec![Footprint::full(inputs); units],
            (0..units).collect(),
            (0..units).map(|u| vec![u]).collect(),
        )
    }

    pub fn units(&self) -> usize {
        self.footprints.len()
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn footprint(&self, unit: usize) -> &Footprint {
        &self.footprints[unit]
    }

    pub fn tie_class(&self, unit: usize) -> usize {
        self.tie_classes[unit]
    }

    pub fn pooling(&self) -> &[Vec<usize>] {
        &self.pooling
    }

    /// `V` as a dense 0/1 matrix.
    pub fn pooling_matrix(&self) -> Vec<Vec<u8>> {
        let p = self.units();
        self.pooling
            .iter()
            .map(|row| {
                let mut v = vec![0; p];
                row.iter().for_each(|&k| v[k] = 1);
                v
            })
            .collect()
    }

    /// Units grouped by identical footprint, in footprint order.
    pub fn overlap_groups(&self) -> &[Vec<usize>] {
        &self.overlap
    }

    /// Units grouped by tie class, in class order.
    pub fn tie_groups(&self) -> &[Vec<usize>] {
        &self.ties
    }

    /// Zeroes every weight outside its unit's footprint. Idempotent.
    pub fn localize(&self, weights: &mut [f64]) {
        let q = self.inputs;
        let mut keep = vec![false; q];
        for (u, row) in weights.chunks_mut(q).enumerate() {
            keep.iter_mut().for_each(|k| *k = false);
            self.footprints[u].indices().for_each(|j| keep[j] = true);
            for (w, &k) in row.iter_mut().zip(&keep) {
                if !k {
                    *w = 0.0;
                }
            }
        }
    }

    /// Replaces every set of tied weights (same tie class, same relative
    /// footprint position) by the set's mean. Idempotent.
    pub fn tie_weights(&self, weights: &mut [f64]) {
        let q = self.inputs;
        for members in &self.ties {
            if members.len() < 2 {
                continue;
            }
            let len = self.footprints[members[0]].len();
            let mut mean = vec![0.0; len];
            for &u in members {
                for (m, j) in mean.iter_mut().zip(self.footprints[u].indices()) {
                    *m += weights[u * q + j];
                }
            }
            let count = members.len() as f64;
            mean.iter_mut().for_each(|m| *m /= count);
            for &u in members {
                for (&m, j) in mean.iter().zip(self.footprints[u].indices()) {
                    weights[u * q + j] = m;
                }
            }
        }
    }

    /// Symmetric orthogonalisation `(R R^T)^(-1/2) R` of the rows of every
    /// group of units sharing a footprint. Rows with a unique footprint are
    /// scaled to unit norm.
    pub fn orthogonalize_local_rf(&self, weights: &mut [f64]) {
        for group in &self.overlap {
            orthonormalize_rows(weights, self.inputs, group);
        }
    }

    /// Localize, tie, orthogonalise, tie.
    pub fn project(&self, weights: &mut [f64]) {
        self.localize(weights);
        self.tie_weights(weights);
        self.orthogonalize_local_rf(weights);
        self.tie_weights(weights);
    }
}

fn orthonormalize_rows(weights: &mut [f64], q: usize, rows: &[usize]) {
    let g = rows.len();
    let r = DMatrix::from_fn(g, q, |a, j| weights[rows[a] * q + j]);
    let gram = &r * r.transpose();
    let eig = SymmetricEigen::new(gram);
    let rank_deficient = eig.eigenvalues.iter().any(|&l| l <= ORTHO_RIDGE);
    let inv_sqrt = eig.eigenvalues.map(|l| {
        let l = l.max(0.0) + if rank_deficient { ORTHO_RIDGE } else { 0.0 };
        1.0 / l.sqrt()
    });
    let u = &eig.eigenvectors;
    let transform = u * DMatrix::from_diagonal(&inv_sqrt) * u.transpose();
    let out = transform * r;
    for (a, &row) in rows.iter().enumerate() {
        for j in 0..q {
            weights[row * q + j] = out[(a, j)];
        }
    }
}

/// Fixed-dimension input vectors stored contiguously.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchSet {
    dim: usize,
    data: Vec<f64>,
}

impl PatchSet {
    pub fn new(dim: usize) -> Self {
        PatchSet {
            dim,
            data: Vec::new(),
        }
    }

    pub fn from_vecs(dim: usize, patches: &[Vec<f64>]) -> Result<Self> {
        let mut set = PatchSet::new(dim);
        for p in patches {
            set.push(p)?;
        }
        Ok(set)
    }

    pub fn push(&mut self, patch: &[f64]) -> Result<()> {
        if patch.len() != self.dim {
            return Err(Error::invalid(format!(
                "patch of length {} where {} was expected",
                patch.len(),
                self.dim
            )));
        }
        self.data.extend_from_slice(patch);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len().checked_div(self.dim).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks(self.dim.max(1))
    }
}

/// Pretraining knobs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TicaConfig {
    pub max_iters: usize,
    /// Stop once an accepted step lowers the objective by less than this
    /// fraction.
    pub tolerance: f64,
    /// Smoothing constant inside the pooling square root.
    pub epsilon: f64,
    pub max_halvings: usize,
}

impl Default for TicaConfig {
    fn default() -> Self {
        TicaConfig {
            max_iters: 200,
            tolerance: 1e-6,
            epsilon: 1e-8,
            max_halvings: 50,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Converged,
    MaxIterations,
    /// No step length in the line search lowered the objective.
    Stalled,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PretrainReport {
    /// Objective at the initial weights followed by every accepted iterate.
    pub objective_history: Vec<f64>,
    pub iterations: usize,
    /// Objective evaluations, line-search candidates included.
    pub evaluations: usize,
    pub termination: Termination,
}

/// A TICA layer: topology plus row-major `p x q` weights.
#[derive(Debug, Clone, PartialEq)]
pub struct TicaLayer {
    pub topology: Topology,
    pub weights: Vec<f64>,
}

impl TicaLayer {
    pub fn with_weights(topology: Topology, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != topology.units() * topology.inputs() {
            return Err(Error::invalid(format!(
                "expected {} weights, got {}",
                topology.units() * topology.inputs(),
                weights.len()
            )));
        }
        Ok(TicaLayer { topology, weights })
    }

    /// Seeded standard-normal weights, projected onto the constraint set once.
    pub fn initialize(topology: Topology, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut weights: Vec<f64> = (0..topology.units() * topology.inputs())
            .map(|_| StandardNormal.sample(&mut rng))
            .collect();
        topology.project(&mut weights);
        TicaLayer { topology, weights }
    }

    pub fn row(&self, unit: usize) -> &[f64] {
        let q = self.topology.inputs();
        &self.weights[unit * q..(unit + 1) * q]
    }

    /// Pooling-unit activations `sqrt(sum_k V_ik z_k^2 + eps)` for one input.
    pub fn activations(&self, x: &[f64], epsilon: f64) -> Vec<f64> {
        let q = self.topology.inputs();
        let z: Vec<f64> = (0..self.topology.units())
            .map(|k| {
                let row = &self.weights[k * q..(k + 1) * q];
                self.topology.footprints[k]
                    .runs()
                    .iter()
                    .map(|&(s, l)| dot(&row[s..s + l], &x[s..s + l]))
                    .sum()
            })
            .collect();
        self.topology
            .pooling
            .iter()
            .map(|row| (row.iter().map(|&k| z[k] * z[k]).sum::<f64>() + epsilon).sqrt())
            .collect()
    }

    /// Sum of pooling activations over all patches, for the current weights.
    pub fn objective(&self, patches: &PatchSet, epsilon: f64) -> f64 {
        let grouped = GroupedPatches::new(&self.topology, patches);
        grouped.objective(&self.topology, &self.weights, epsilon)
    }

    /// Objective and its gradient with respect to the footprint weights.
    /// Entries outside each footprint are reported as zero.
    pub fn objective_and_gradient(&self, patches: &PatchSet, epsilon: f64) -> (f64, Vec<f64>) {
        let grouped = GroupedPatches::new(&self.topology, patches);
        grouped.objective_and_gradient(&self.topology, &self.weights, epsilon)
    }

    /// Batch projected gradient descent with backtracking line search.
    ///
    /// Each outer iteration fixes the gradient `g` at the current weights and
    /// tries `W - alpha g` for `alpha = 1, 1/2, 1/4, ...`, projecting every
    /// candidate by localize, tie, orthogonalise, tie. The first candidate
    /// whose objective does not exceed the current one is accepted.
    pub fn pretrain(&mut self, patches: &PatchSet, config: &TicaConfig) -> Result<PretrainReport> {
        if patches.is_empty() {
            return Err(Error::invalid("pretraining needs at least one patch"));
        }
        if patches.dim() != self.topology.inputs() {
            return Err(Error::invalid(format!(
                "patches have dimension {}, layer expects {}",
                patches.dim(),
                self.topology.inputs()
            )));
        }
        let grouped = GroupedPatches::new(&self.topology, patches);
        let mut history = Vec::new();
        let mut evaluations = 0;
        let mut termination = Termination::MaxIterations;
        let mut iterations = 0;
        let mut candidate = vec![0.0; self.weights.len()];
        while iterations < config.max_iters {
            let (f_old, grad) = grouped.objective_and_gradient(&self.topology, &self.weights, config.epsilon);
            evaluations += 1;
            if !f_old.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::numerical(format!(
                    "non-finite TICA objective or gradient at iteration {iterations} (objective {f_old})"
                )));
            }
            if history.is_empty() {
                history.push(f_old);
            }
            let mut alpha = 1.0;
            let mut accepted = None;
            for _ in 0..config.max_halvings {
                for ((c, &w), &g) in candidate.iter_mut().zip(&self.weights).zip(&grad) {
                    *c = w - alpha * g;
                }
                self.topology.project(&mut candidate);
                let f_new = grouped.objective(&self.topology, &candidate, config.epsilon);
                evaluations += 1;
                if !f_new.is_finite() {
                    return Err(Error::numerical(format!(
                        "non-finite TICA objective in line search at iteration {iterations}"
                    )));
                }
                alpha *= 0.5;
                if f_new <= f_old {
                    accepted = Some(f_new);
                    break;
                }
            }
            let Some(f_new) = accepted else {
                termination = Termination::Stalled;
                break;
            };
            std::mem::swap(&mut self.weights, &mut candidate);
            history.push(f_new);
            iterations += 1;
            if (f_old - f_new) < config.tolerance * f_old.abs() {
                termination = Termination::Converged;
                break;
            }
        }
        Ok(PretrainReport {
            objective_history: history,
            iterations,
            evaluations,
            termination,
        })
    }
}

/// Patches gathered per group of units sharing a footprint, so that the
/// responses of a whole group are one matrix product.
struct GroupedPatches {
    count: usize,
    /// Footprint indices and the `footprint x patches` block of each group.
    blocks: Vec<(Vec<usize>, DMatrix<f64>)>,
}

impl GroupedPatches {
    fn new(topology: &Topology, patches: &PatchSet) -> Self {
        let count = patches.len();
        let blocks = topology
            .overlap
            .iter()
            .map(|group| {
                let idx: Vec<usize> = topology.footprints[group[0]].indices().collect();
                let mut block = DMatrix::zeros(idx.len(), count);
                for (t, x) in patches.iter().enumerate() {
                    for (r, &j) in idx.iter().enumerate() {
                        block[(r, t)] = x[j];
                    }
                }
                (idx, block)
            })
            .collect();
        GroupedPatches { count, blocks }
    }

    /// Simple-unit responses, patch-major: `z[t * p + k]`.
    fn responses(&self, topology: &Topology, weights: &[f64]) -> Vec<f64> {
        let p = topology.units();
        let q = topology.inputs();
        let mut z = vec![0.0; p * self.count];
        for (group, (idx, block)) in topology.overlap.iter().zip(&self.blocks) {
            let w = DMatrix::from_fn(group.len(), idx.len(), |a, r| weights[group[a] * q + idx[r]]);
            let zg = w * block;
            for t in 0..self.count {
                for (a, &k) in group.iter().enumerate() {
                    z[t * p + k] = zg[(a, t)];
                }
            }
        }
        z
    }

    fn objective(&self, topology: &Topology, weights: &[f64], epsilon: f64) -> f64 {
        let p = topology.units();
        let z = self.responses(topology, weights);
        let mut total = 0.0;
        for zt in z.chunks(p) {
            for row in &topology.pooling {
                total += (row.iter().map(|&k| zt[k] * zt[k]).sum::<f64>() + epsilon).sqrt();
            }
        }
        total
    }

    fn objective_and_gradient(&self, topology: &Topology, weights: &[f64], epsilon: f64) -> (f64, Vec<f64>) {
        let p = topology.units();
        let q = topology.inputs();
        let mut z = self.responses(topology, weights);
        let mut total = 0.0;
        let mut coef = vec![0.0; p];
        // overwrite z in place with dF/dz = (sum_i V_ik / r_i) z_k
        for zt in z.chunks_mut(p) {
            coef.iter_mut().for_each(|c| *c = 0.0);
            for row in &topology.pooling {
                let r = (row.iter().map(|&k| zt[k] * zt[k]).sum::<f64>() + epsilon).sqrt();
                total += r;
                for &k in row {
                    coef[k] += 1.0 / r;
                }
            }
            zt.iter_mut().zip(&coef).for_each(|(zk, c)| *zk *= c);
        }
        let mut grad = vec![0.0; p * q];
        for (group, (idx, block)) in topology.overlap.iter().zip(&self.blocks) {
            let ct = DMatrix::from_fn(self.count, group.len(), |t, a| z[t * p + group[a]]);
            let gt = block * ct;
            for (a, &k) in group.iter().enumerate() {
                for (r, &j) in idx.iter().enumerate() {
                    grad[k * q + j] = gt[(r, a)];
                }
            }
        }
        (total, grad)
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        for l in 0..4 {
            acc[l] += a[4 * c + l] * b[4 * c + l];
        }
    }
    let mut tail = 0.0;
    for i in 4 * chunks..a.len() {
        tail += a[i] * b[i];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}
