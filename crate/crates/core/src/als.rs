//! Alternating least squares over the cores of a tensor network.
//!
//! For core `k`, the represented tensor is linear in the core:
//! `W₍ₖ₎ = G₍ₖ₎ · Eₖᵀ`, where `Eₖ` is the contraction of every other core
//! (see [`TensorNetwork::environment`]). Each update solves that linear
//! least-squares problem through an SVD of the design matrix, either
//! against the whole target (squared Frobenius loss) or against the
//! observed entries only (masked mean squared error, one small problem per
//! slice of the core).
//!
//! The masked path materializes the dense environment and gathers the rows
//! of observed entries, so memory grows with the full grid size rather than
//! with the number of observations.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Result, TnError};
use crate::linalg;
use crate::network::{squeeze_dims, TensorNetwork};
use crate::tensor::{fold, frobenius, matricize, DenseTensor};

/// Observed entries of a tensor, stored as row-major offsets.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationSet {
    dims: Vec<usize>,
    offsets: Vec<usize>,
    values: Vec<f64>,
}

impl ObservationSet {
    pub fn new(dims: Vec<usize>, indices: &[Vec<usize>], values: Vec<f64>) -> Result<Self> {
        let mut offsets = Vec::with_capacity(indices.len());
        for ix in indices {
            if ix.len() != dims.len() || ix.iter().zip(&dims).any(|(i, d)| i >= d) {
                return Err(TnError::InvalidObservations(format!(
                    "index {ix:?} outside dims {dims:?}"
                )));
            }
            offsets.push(ix.iter().zip(&dims).fold(0, |acc, (i, d)| acc * d + i));
        }
        Self::from_offsets(dims, offsets, values)
    }

    pub fn from_offsets(dims: Vec<usize>, offsets: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        if offsets.is_empty() {
            return Err(TnError::InvalidObservations("no observations".into()));
        }
        if offsets.len() != values.len() {
            return Err(TnError::InvalidObservations(format!(
                "{} indices but {} values",
                offsets.len(),
                values.len()
            )));
        }
        let n: usize = dims.iter().product();
        let mut sorted = offsets.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(TnError::InvalidObservations("duplicate index".into()));
        }
        if sorted.last().is_some_and(|&o| o >= n) {
            return Err(TnError::InvalidObservations(format!("index outside dims {dims:?}")));
        }
        Ok(Self {
            dims,
            offsets,
            values,
        })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }

    /// Multi-index of observation `n`.
    pub fn index(&self, n: usize) -> Vec<usize> {
        let mut rem = self.offsets[n];
        let mut ix = vec![0; self.dims.len()];
        for m in (0..self.dims.len()).rev() {
            ix[m] = rem % self.dims[m];
            rem /= self.dims[m];
        }
        ix
    }
}

/// A set of entry positions, sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    dims: Vec<usize>,
    offsets: Vec<usize>,
}

impl Mask {
    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }

    /// Reads the masked entries of `t`.
    pub fn observe(&self, t: &DenseTensor) -> Result<ObservationSet> {
        if t.dims() != self.dims.as_slice() {
            return Err(TnError::IncompatibleTarget {
                target: t.dims().to_vec(),
                network: self.dims.clone(),
            });
        }
        let values = self.offsets.iter().map(|&o| t.data()[o]).collect();
        ObservationSet::from_offsets(self.dims.clone(), self.offsets.clone(), values)
    }

    /// Every position not in the mask.
    pub fn complement(&self) -> Mask {
        let n: usize = self.dims.iter().product();
        let mut it = self.offsets.iter().peekable();
        let offsets = (0..n)
            .filter(|o| {
                if it.peek() == Some(&o) {
                    it.next();
                    false
                } else {
                    true
                }
            })
            .collect();
        Mask {
            dims: self.dims.clone(),
            offsets,
        }
    }
}

/// Uniform sample without replacement of `⌈fraction · N⌉` positions.
pub fn sample_mask(dims: &[usize], fraction: f64, seed: u64) -> Result<Mask> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(TnError::InvalidConfig(format!(
            "mask fraction must lie in (0, 1], got {fraction}"
        )));
    }
    let n: usize = dims.iter().product();
    let exact = fraction * n as f64;
    let nearest = exact.round();
    // Guard against 0.1 · 1_080_000 = 108000.00000000001 rounding up.
    let count = if (exact - nearest).abs() <= 1e-9 * (n as f64).max(1.0) {
        nearest as usize
    } else {
        exact.ceil() as usize
    };
    let count = count.clamp(1, n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut offsets = sample(&mut rng, n, count).into_vec();
    offsets.sort_unstable();
    Ok(Mask {
        dims: dims.to_vec(),
        offsets,
    })
}

/// What the network is fitted to.
#[derive(Debug, Clone, PartialEq)]
pub enum Objective {
    /// `‖T − W‖²_F`.
    FullFrobenius(DenseTensor),
    /// `(1/|Ω|) Σ_Ω (W − T)²`.
    MaskedMse(ObservationSet),
}

impl Objective {
    pub fn target_dims(&self) -> &[usize] {
        match self {
            Objective::FullFrobenius(t) => t.dims(),
            Objective::MaskedMse(obs) => obs.dims(),
        }
    }

    /// The loss of a zero prediction: `‖T‖²` or the mean squared observed value.
    pub fn reference_scale(&self) -> f64 {
        match self {
            Objective::FullFrobenius(t) => frobenius(t).powi(2),
            Objective::MaskedMse(obs) => {
                obs.values.iter().map(|v| v * v).sum::<f64>() / obs.len() as f64
            }
        }
    }

    pub fn check_compatible(&self, net: &TensorNetwork) -> Result<()> {
        let target = self.target_dims();
        if squeeze_dims(target) != squeeze_dims(net.dims()) {
            return Err(TnError::IncompatibleTarget {
                target: target.to_vec(),
                network: net.dims().to_vec(),
            });
        }
        Ok(())
    }

    /// Loss of an explicit prediction (same entry count as the target).
    pub fn loss_of(&self, w: &DenseTensor) -> Result<f64> {
        if squeeze_dims(w.dims()) != squeeze_dims(self.target_dims()) {
            return Err(TnError::IncompatibleTarget {
                target: self.target_dims().to_vec(),
                network: w.dims().to_vec(),
            });
        }
        Ok(match self {
            Objective::FullFrobenius(t) => t
                .data()
                .iter()
                .zip(w.data())
                .map(|(a, b)| (a - b) * (a - b))
                .sum(),
            Objective::MaskedMse(obs) => {
                obs.offsets
                    .iter()
                    .zip(&obs.values)
                    .map(|(&o, v)| (w.data()[o] - v).powi(2))
                    .sum::<f64>()
                    / obs.len() as f64
            }
        })
    }

    /// `sqrt(loss / reference_scale)`: the relative error on the target
    /// (full tensor) or on the observed entries.
    pub fn relative_error_of_loss(&self, loss: f64) -> f64 {
        let scale = self.reference_scale();
        if scale == 0.0 {
            if loss == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (loss / scale).sqrt()
        }
    }
}

pub fn loss(net: &TensorNetwork, objective: &Objective) -> Result<f64> {
    objective.check_compatible(net)?;
    objective.loss_of(&net.evaluate())
}

/// `‖evaluate(net) − target‖_F / ‖target‖_F`.
pub fn relative_error(net: &TensorNetwork, target: &DenseTensor) -> Result<f64> {
    if squeeze_dims(target.dims()) != squeeze_dims(net.dims()) {
        return Err(TnError::IncompatibleTarget {
            target: target.dims().to_vec(),
            network: net.dims().to_vec(),
        });
    }
    let norm = frobenius(target);
    if norm == 0.0 {
        return Err(TnError::ZeroNormTarget);
    }
    let w = net.evaluate();
    let diff: f64 = target
        .data()
        .iter()
        .zip(w.data())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(diff.sqrt() / norm)
}

/// Relative error restricted to the positions of `mask`.
pub fn masked_relative_error(net: &TensorNetwork, target: &DenseTensor, mask: &Mask) -> Result<f64> {
    if squeeze_dims(target.dims()) != squeeze_dims(net.dims()) {
        return Err(TnError::IncompatibleTarget {
            target: target.dims().to_vec(),
            network: net.dims().to_vec(),
        });
    }
    let w = net.evaluate();
    let (mut num, mut den) = (0.0, 0.0);
    for &o in mask.offsets() {
        let t = target.data()[o];
        num += (w.data()[o] - t).powi(2);
        den += t * t;
    }
    if den == 0.0 {
        return Err(TnError::ZeroNormTarget);
    }
    Ok((num / den).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlsConfig {
    pub max_sweeps: usize,
    /// Stop once `(previous − current) / previous` falls below this.
    pub rel_improvement_tol: f64,
    /// Tikhonov weight for every core's least-squares problem (0 gives the
    /// plain minimum-norm solution).
    pub ridge: f64,
}

impl Default for AlsConfig {
    fn default() -> Self {
        Self {
            max_sweeps: 200,
            rel_improvement_tol: 1e-8,
            ridge: 0.0,
        }
    }
}

impl AlsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_sweeps == 0 {
            return Err(TnError::InvalidConfig("max_sweeps must be at least 1".into()));
        }
        if !(self.rel_improvement_tol >= 0.0) || !(self.ridge >= 0.0) {
            return Err(TnError::InvalidConfig(
                "tolerance and ridge must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// Result of one pass over all cores.
#[derive(Debug, Clone)]
pub struct SweepResult {
    pub network: TensorNetwork,
    /// Loss right after each core update, in core order.
    pub core_losses: Vec<f64>,
    /// Some design matrix was rank-deficient and the minimum-norm
    /// minimizer was used.
    pub used_pseudo_inverse: bool,
}

/// Result of [`optimize`].
#[derive(Debug, Clone)]
pub struct Optimized {
    pub network: TensorNetwork,
    /// Loss before the first sweep followed by the loss after every sweep.
    pub history: Vec<f64>,
    pub used_pseudo_inverse: bool,
}

impl Optimized {
    pub fn final_loss(&self) -> f64 {
        *self.history.last().expect("history is never empty")
    }
}

fn slice_norms(core: &DenseTensor, mode: usize) -> Vec<f64> {
    let dims = core.dims();
    let inner: usize = dims[mode + 1..].iter().product();
    let mut sq = vec![0.0; dims[mode]];
    for (n, v) in core.data().iter().enumerate() {
        sq[(n / inner) % dims[mode]] += v * v;
    }
    sq.into_iter().map(f64::sqrt).collect()
}

fn scale_slices(core: &mut DenseTensor, mode: usize, factors: &[f64]) {
    let dims = core.dims().to_vec();
    let inner: usize = dims[mode + 1..].iter().product();
    for (n, v) in core.data_mut().iter_mut().enumerate() {
        *v *= factors[(n / inner) % dims[mode]];
    }
}

/// Applies diagonal gauges on every bond so that each bond index carries
/// the same slice norm on both of its cores, then rescales the cores to
/// equal Frobenius norms. The represented tensor is unchanged.
///
/// Without this a freshly grown slice that starts tiny on one side is
/// compensated by a huge slice on the other, and the imbalance compounds
/// with every increment until the least-squares problems lose all
/// precision.
pub fn balance_scales(net: &mut TensorNetwork) -> Result<()> {
    let edges = net.edge_list(false);
    let (ranks, dims, mut cores) = net.clone().into_parts();
    for _ in 0..3 {
        for &(i, j, _) in &edges {
            let a = slice_norms(&cores[i], j);
            let b = slice_norms(&cores[j], i);
            if a.iter().chain(&b).any(|&n| !(n > 0.0 && n.is_finite())) {
                continue;
            }
            let fi: Vec<f64> = a.iter().zip(&b).map(|(x, y)| (y / x).sqrt()).collect();
            let fj: Vec<f64> = fi.iter().map(|f| 1.0 / f).collect();
            scale_slices(&mut cores[i], j, &fi);
            scale_slices(&mut cores[j], i, &fj);
        }
    }
    let norms: Vec<f64> = cores.iter().map(frobenius).collect();
    if norms.iter().all(|&n| n > 0.0 && n.is_finite()) {
        let log_mean = norms.iter().map(|n| n.ln()).sum::<f64>() / norms.len() as f64;
        for (core, n) in cores.iter_mut().zip(&norms) {
            *core = core.scaled((log_mean - n.ln()).exp());
        }
    }
    let last = net.last_increment();
    *net = TensorNetwork::new(ranks, dims, cores)?;
    net.set_last_increment(last);
    Ok(())
}

struct CoreUpdate {
    core: DenseTensor,
    loss: f64,
    used_pseudo_inverse: bool,
}

/// Mode-`k` unfolding of a tensor whose data is laid out over `dims`.
fn unfold(data: &[f64], dims: &[usize], k: usize) -> Result<Vec<f64>> {
    if dims.len() == 1 {
        return Ok(data.to_vec());
    }
    let t = DenseTensor::new(dims.to_vec(), data.to_vec())?;
    Ok(matricize(&t, &[k])?.into_data())
}

fn fold_core(matrix: Vec<f64>, core_dims: &[usize], k: usize) -> Result<DenseTensor> {
    if core_dims.len() == 1 {
        return DenseTensor::new(core_dims.to_vec(), matrix);
    }
    let rows = core_dims[k];
    let cols = matrix.len() / rows;
    let m = DenseTensor::new(vec![rows, cols], matrix)?;
    fold(&m, core_dims, &[k])
}

/// Columns of core `k`'s bond multi-index whose digit for bond mode `j`
/// is the last one (the slice appended by the latest increment).
fn last_slice_columns(net: &TensorNetwork, k: usize, j: usize) -> Vec<usize> {
    let bond_dims: Vec<usize> = (0..net.node_count())
        .filter(|&m| m != k)
        .map(|m| net.rank(k, m))
        .collect();
    let pos = if j < k { j } else { j - 1 };
    let inner: usize = bond_dims[pos + 1..].iter().product();
    let size = bond_dims[pos];
    let total: usize = bond_dims.iter().product();
    (0..total).filter(|c| (c / inner) % size == size - 1).collect()
}

fn update_core(
    net: &TensorNetwork,
    k: usize,
    objective: &Objective,
    ridge: f64,
    free: Option<&[usize]>,
) -> Result<CoreUpdate> {
    let env = net.environment(k);
    let (n_rest, b) = (env.dims()[0], env.dims()[1]);
    let a = env.data();
    let d_k = net.dims()[k];
    let core_dims = net.core(k).dims().to_vec();
    let mut g = unfold(net.core(k).data(), &core_dims, k)?;
    let free_cols: Vec<usize> = free.map(|f| f.to_vec()).unwrap_or_else(|| (0..b).collect());
    let is_free = {
        let mut v = vec![false; b];
        for &c in &free_cols {
            v[c] = true;
        }
        v
    };
    let f = free_cols.len();
    let restricted = f < b;
    let a_free: Vec<f64> = if restricted {
        let mut out = Vec::with_capacity(n_rest * f);
        for r in 0..n_rest {
            out.extend(free_cols.iter().map(|&c| a[r * b + c]));
        }
        out
    } else {
        a.to_vec()
    };
    let mut used_pinv = false;

    match objective {
        Objective::FullFrobenius(target) => {
            let t = unfold(target.data(), net.dims(), k)?;
            // Residual after the frozen columns' contribution.
            let mut resid = t.clone();
            if restricted {
                let mut g_frozen = g.clone();
                for row in 0..d_k {
                    for c in 0..b {
                        if is_free[c] {
                            g_frozen[row * b + c] = 0.0;
                        }
                    }
                }
                let w_frozen = linalg::matmul_nt(d_k, b, n_rest, &g_frozen, a);
                for (r, w) in resid.iter_mut().zip(&w_frozen) {
                    *r -= w;
                }
            }
            let mut rhs = vec![0.0; n_rest * d_k];
            for row in 0..d_k {
                for r in 0..n_rest {
                    rhs[r * d_k + row] = resid[row * n_rest + r];
                }
            }
            let sol = linalg::lstsq(n_rest, f, &a_free, d_k, &rhs, ridge);
            used_pinv |= sol.rank_deficient;
            for row in 0..d_k {
                for (c_local, &c) in free_cols.iter().enumerate() {
                    g[row * b + c] = sol.x[c_local * d_k + row];
                }
            }
            let w = linalg::matmul_nt(d_k, b, n_rest, &g, a);
            let loss: f64 = t.iter().zip(&w).map(|(x, y)| (x - y) * (x - y)).sum();
            Ok(CoreUpdate {
                core: fold_core(g, &core_dims, k)?,
                loss,
                used_pseudo_inverse: used_pinv,
            })
        }
        Objective::MaskedMse(obs) => {
            let dims = net.dims();
            let stride_k: usize = dims[k + 1..].iter().product();
            let mut rows_by_slice: Vec<Vec<(usize, f64)>> = vec![Vec::new(); d_k];
            for (&o, &y) in obs.offsets.iter().zip(&obs.values) {
                let slice = (o / stride_k) % d_k;
                let rest = (o / (stride_k * d_k)) * stride_k + o % stride_k;
                rows_by_slice[slice].push((rest, y));
            }
            for (s, rows) in rows_by_slice.iter().enumerate() {
                if rows.is_empty() {
                    continue;
                }
                let g_row = &g[s * b..(s + 1) * b];
                let mut design = Vec::with_capacity(rows.len() * f);
                let mut y = Vec::with_capacity(rows.len());
                for &(rest, value) in rows {
                    let e = &a[rest * b..(rest + 1) * b];
                    let frozen: f64 = if restricted {
                        (0..b).filter(|&c| !is_free[c]).map(|c| e[c] * g_row[c]).sum()
                    } else {
                        0.0
                    };
                    design.extend(free_cols.iter().map(|&c| e[c]));
                    y.push(value - frozen);
                }
                let sol = linalg::lstsq(rows.len(), f, &design, 1, &y, ridge);
                used_pinv |= sol.rank_deficient;
                for (c_local, &c) in free_cols.iter().enumerate() {
                    g[s * b + c] = sol.x[c_local];
                }
            }
            let mut total = 0.0;
            for (s, rows) in rows_by_slice.iter().enumerate() {
                let g_row = &g[s * b..(s + 1) * b];
                for &(rest, value) in rows {
                    let e = &a[rest * b..(rest + 1) * b];
                    let w: f64 = e.iter().zip(g_row).map(|(x, y)| x * y).sum();
                    total += (w - value).powi(2);
                }
            }
            Ok(CoreUpdate {
                core: fold_core(g, &core_dims, k)?,
                loss: total / obs.len() as f64,
                used_pseudo_inverse: used_pinv,
            })
        }
    }
}

/// One pass of exact least-squares updates over cores `0..p` in order.
pub fn als_sweep(net: &TensorNetwork, objective: &Objective, config: &AlsConfig) -> Result<SweepResult> {
    config.validate()?;
    objective.check_compatible(net)?;
    let mut current = net.clone();
    current.set_last_increment(None);
    let mut core_losses = Vec::with_capacity(net.node_count());
    let mut used_pseudo_inverse = false;
    for k in 0..net.node_count() {
        let update = update_core(&current, k, objective, config.ridge, None)?;
        current.replace_core(k, update.core)?;
        core_losses.push(update.loss);
        used_pseudo_inverse |= update.used_pseudo_inverse;
    }
    Ok(SweepResult {
        network: current,
        core_losses,
        used_pseudo_inverse,
    })
}

/// Repeats [`als_sweep`] until the relative improvement drops below the
/// tolerance, the loss vanishes, or `max_sweeps` is reached.
pub fn optimize(net: &TensorNetwork, objective: &Objective, config: &AlsConfig) -> Result<Optimized> {
    config.validate()?;
    let initial = loss(net, objective)?;
    let floor = 1e-28 * objective.reference_scale();
    let mut history = vec![initial];
    let mut current = net.clone();
    current.set_last_increment(None);
    let mut used_pseudo_inverse = false;
    if initial <= floor {
        return Ok(Optimized {
            network: current,
            history,
            used_pseudo_inverse,
        });
    }
    for _ in 0..config.max_sweeps {
        balance_scales(&mut current)?;
        let sweep = als_sweep(&current, objective, config)?;
        let prev = *history.last().expect("non-empty");
        let now = *sweep.core_losses.last().expect("at least one core");
        used_pseudo_inverse |= sweep.used_pseudo_inverse;
        // A sweep that ends higher (round-off near the optimum) is discarded.
        if !now.is_finite() || now > prev {
            break;
        }
        current = sweep.network;
        history.push(now);
        if now <= floor || prev - now <= config.rel_improvement_tol * prev {
            break;
        }
    }
    balance_scales(&mut current)?;
    Ok(Optimized {
        network: current,
        history,
        used_pseudo_inverse,
    })
}

/// Alternately re-solves only the slices appended by the last increment of
/// edge `(i, j)` (first in core `i`, then in core `j`), `iters` times.
/// Every other entry is left untouched. Returns the network (still marked
/// as incremented on that edge) and its loss.
pub fn optimize_new_slices(
    net: &TensorNetwork,
    edge: (usize, usize),
    objective: &Objective,
    iters: usize,
    ridge: f64,
) -> Result<(TensorNetwork, f64)> {
    let (i, j) = (edge.0.min(edge.1), edge.0.max(edge.1));
    if net.last_increment() != Some((i, j)) {
        return Err(TnError::StaleIncrement {
            i,
            j,
            last: net.last_increment(),
        });
    }
    if iters == 0 {
        return Err(TnError::InvalidConfig("at least one restricted iteration".into()));
    }
    objective.check_compatible(net)?;
    let free_i = last_slice_columns(net, i, j);
    let free_j = last_slice_columns(net, j, i);
    let mut current = net.clone();
    let mut last_loss = f64::NAN;
    for _ in 0..iters {
        for (k, free) in [(i, &free_i), (j, &free_j)] {
            let update = update_core(&current, k, objective, ridge, Some(free))?;
            current.replace_core(k, update.core)?;
            last_loss = update.loss;
        }
    }
    Ok((current, last_loss))
}
