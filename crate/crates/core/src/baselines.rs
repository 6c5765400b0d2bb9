//! Fixed-structure reference models (uniform-rank TT, TR and Tucker) and
//! rank sweeps producing error-versus-parameters curves.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::als::{optimize, AlsConfig, Objective};
use crate::error::{Result, TnError};
use crate::network::{RankMatrix, TensorNetwork};
use crate::seed::derive_seed;

/// Half-width of the uniform initialization of baseline cores.
pub const INIT_SCALE: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Model {
    /// Chain `(0,1), (1,2), ...`.
    Tt,
    /// Chain closed by `(0, p-1)`.
    Tr,
    /// One appended internal node connected to every leaf.
    Tucker,
}

impl Model {
    pub fn as_str(&self) -> &'static str {
        match self {
            Model::Tt => "tt",
            Model::Tr => "tr",
            Model::Tucker => "tucker",
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Model {
    type Err = TnError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tt" => Ok(Model::Tt),
            "tr" => Ok(Model::Tr),
            "tucker" => Ok(Model::Tucker),
            other => Err(TnError::InvalidConfig(format!(
                "unknown model '{other}' (expected tt, tr or tucker)"
            ))),
        }
    }
}

/// Rank matrix and dangling dims of the uniform-rank model over `dims`.
pub fn model_ranks(model: Model, dims: &[usize], rank: usize) -> Result<(RankMatrix, Vec<usize>)> {
    if rank == 0 {
        return Err(TnError::InvalidConfig("rank must be at least 1".into()));
    }
    if dims.is_empty() {
        return Err(TnError::InvalidShape {
            dims: Vec::new(),
            reason: "empty dims".into(),
        });
    }
    let p = dims.len();
    match model {
        Model::Tt | Model::Tr => {
            let mut edges: Vec<(usize, usize, usize)> = (1..p).map(|i| (i - 1, i, rank)).collect();
            if model == Model::Tr && p > 2 {
                edges.push((0, p - 1, rank));
            }
            Ok((RankMatrix::from_edges(p, &edges)?, dims.to_vec()))
        }
        Model::Tucker => {
            let edges: Vec<(usize, usize, usize)> = (0..p).map(|i| (i, p, rank)).collect();
            let mut d = dims.to_vec();
            d.push(1);
            Ok((RankMatrix::from_edges(p + 1, &edges)?, d))
        }
    }
}

/// Uniform-rank model with cores uniform in `[-0.5, 0.5]`.
pub fn make_structure(model: Model, dims: &[usize], rank: usize, seed: u64) -> Result<TensorNetwork> {
    let (ranks, d) = model_ranks(model, dims, rank)?;
    TensorNetwork::random(ranks, d, seed, INIT_SCALE)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RankSweepSpec {
    pub model: Model,
    pub rank_start: usize,
    pub rank_end: usize,
    /// Ranks whose structure exceeds this many parameters are skipped.
    pub param_cap: usize,
}

impl RankSweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.rank_start == 0 || self.rank_start > self.rank_end {
            return Err(TnError::InvalidConfig(format!(
                "invalid rank range {}:{}",
                self.rank_start, self.rank_end
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub rank: usize,
    pub params: usize,
    pub loss: f64,
    /// Relative error on the objective (observed entries if masked).
    pub relative_error: f64,
    /// Value of the optional evaluation callback.
    pub test_error: Option<f64>,
}

/// Fits the model at every rank of the range whose parameter count is
/// within the cap. Ranks are independent and run in parallel; the curve
/// is sorted by parameter count.
pub fn rank_sweep(
    spec: &RankSweepSpec,
    objective: &Objective,
    als: &AlsConfig,
    seed: u64,
    evaluate: Option<&(dyn Fn(&TensorNetwork) -> Result<f64> + Sync)>,
) -> Result<Vec<SweepPoint>> {
    spec.validate()?;
    let dims = objective.target_dims().to_vec();
    let mut ranks = Vec::new();
    for rank in spec.rank_start..=spec.rank_end {
        let (r, d) = model_ranks(spec.model, &dims, rank)?;
        let params: usize = (0..d.len()).map(|k| r.core_dims(k, &d).iter().product::<usize>()).sum();
        if params > spec.param_cap {
            break;
        }
        ranks.push(rank);
    }
    let mut points = ranks
        .par_iter()
        .map(|&rank| {
            let net = make_structure(spec.model, &dims, rank, derive_seed(seed, &[rank as u64]))?;
            let fit = optimize(&net, objective, als)?;
            let loss = fit.final_loss();
            let test_error = evaluate.map(|f| f(&fit.network)).transpose()?;
            Ok(SweepPoint {
                rank,
                params: fit.network.param_count(),
                loss,
                relative_error: objective.relative_error_of_loss(loss),
                test_error,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    points.sort_by_key(|p| (p.params, p.rank));
    Ok(points)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parameter_counts() {
        let tr = make_structure(Model::Tr, &[3, 3, 3, 3], 2, 0).unwrap();
        assert_eq!(tr.param_count(), 48);
        let tucker = make_structure(Model::Tucker, &[7, 7, 7], 2, 0).unwrap();
        assert_eq!(tucker.param_count(), 8 + 42);
        let dims = [7, 6, 5, 4, 3];
        for r in 1..5 {
            let tt = make_structure(Model::Tt, &dims, r, 0).unwrap();
            let expected = dims[0] * r + (1..4).map(|i| r * dims[i] * r).sum::<usize>() + r * dims[4];
            assert_eq!(tt.param_count(), expected);
        }
    }

    #[test]
    fn rank_one_tt_is_the_rank_one_structure() {
        let tt = make_structure(Model::Tt, &[7; 5], 1, 3).unwrap();
        assert_eq!(tt.ranks(), &RankMatrix::ones(5));
        assert!(tt.cores().iter().flat_map(|c| c.data()).all(|v| v.abs() <= 0.5));
    }

    #[test]
    fn sweep_stops_at_cap_and_recovers_uniform_tt() {
        let truth = make_structure(Model::Tt, &[4, 4, 4, 4], 3, 11).unwrap();
        let obj = Objective::FullFrobenius(truth.evaluate());
        let spec = RankSweepSpec {
            model: Model::Tt,
            rank_start: 2,
            rank_end: 10,
            param_cap: 4 * 4 + 4 * 4 * 4 * 2 + 4 * 4,
        };
        let curve = rank_sweep(&spec, &obj, &AlsConfig::default(), 1, None).unwrap();
        assert_eq!(curve.iter().map(|p| p.rank).collect::<Vec<_>>(), vec![2, 3, 4]);
        assert!(curve[1].relative_error < 1e-6, "{:?}", curve[1]);
        assert!(curve[2].relative_error < 1e-6, "{:?}", curve[2]);
        let again = rank_sweep(&spec, &obj, &AlsConfig::default(), 1, None).unwrap();
        assert_eq!(curve, again);
        assert!(rank_sweep(&RankSweepSpec { rank_start: 3, rank_end: 2, ..spec }, &obj, &AlsConfig::default(), 1, None).is_err());
    }
}
