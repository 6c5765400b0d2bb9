//! Greedy structure search.
//!
//! Each iteration scores every feasible rank increment by briefly fitting
//! only the new slices, grows the best edge (keeping the current weights),
//! re-optimizes all cores and then tries to split cores by truncated SVD.

mod split;

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub use split::{split_nodes, SplitEvent, MAX_EXHAUSTIVE_MODES};

pub use crate::als::relative_error;
use crate::als::{loss, optimize, optimize_new_slices, AlsConfig, Objective};
use crate::error::{Result, TnError};
use crate::increment::{increment_cost, increment_edge, SliceInit};
use crate::network::{squeeze_dims, TensorNetwork};
use crate::seed::derive_seed;

const TAG_INIT: u64 = 0x494e4954;
const TAG_REINIT: u64 = 0x5245494e;
const TAG_WALK: u64 = 0x57414c4b;

/// How the edge to grow is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EdgeStrategy {
    /// The best-scoring candidate under [`EdgeScore`].
    #[default]
    BestEdge,
    /// A uniformly random feasible candidate.
    RandomWalk,
}

/// How explored candidates are ranked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EdgeScore {
    /// Largest loss decrease per added parameter.
    #[default]
    DecreasePerParam,
    /// Lowest loss after exploration, whatever the increment costs.
    Loss,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GreedyConfig {
    /// Parameter budget; no state exceeding it is ever produced.
    pub max_params: usize,
    /// Stop once the relative error (on the observed entries for a masked
    /// objective) is at or below this value.
    pub loss_threshold: Option<f64>,
    pub max_iterations: usize,
    /// Restricted update rounds per candidate edge.
    pub edge_search_iters: usize,
    /// Singular values below this are dropped when splitting.
    pub split_threshold: f64,
    pub slice_init: SliceInit,
    /// Only these `(i, j)` pairs may grow.
    pub edge_whitelist: Option<Vec<(usize, usize)>>,
    pub enable_split: bool,
    /// When false, every increment restarts from random cores.
    pub transfer_weights: bool,
    pub strategy: EdgeStrategy,
    pub score: EdgeScore,
    pub rng_seed: u64,
    /// Half-width of the uniform distribution used for random cores.
    pub init_scale: f64,
    pub als: AlsConfig,
}

impl Default for GreedyConfig {
    fn default() -> Self {
        Self {
            max_params: usize::MAX,
            loss_threshold: None,
            max_iterations: 100,
            edge_search_iters: 2,
            split_threshold: 1e-5,
            slice_init: SliceInit::default(),
            edge_whitelist: None,
            enable_split: true,
            transfer_weights: true,
            strategy: EdgeStrategy::BestEdge,
            score: EdgeScore::default(),
            rng_seed: 0,
            init_scale: 0.5,
            als: AlsConfig::default(),
        }
    }
}

impl GreedyConfig {
    pub fn validate(&self, dims: &[usize]) -> Result<()> {
        let min_params: usize = dims.iter().sum();
        if self.max_params < min_params {
            return Err(TnError::InvalidConfig(format!(
                "max_params {} is below the rank-one size {min_params}",
                self.max_params
            )));
        }
        if self.edge_search_iters == 0 {
            return Err(TnError::InvalidConfig("edge_search_iters must be at least 1".into()));
        }
        if !(self.split_threshold >= 0.0) {
            return Err(TnError::InvalidConfig("split_threshold must be non-negative".into()));
        }
        if !(self.init_scale > 0.0 && self.init_scale.is_finite()) {
            return Err(TnError::InvalidConfig("init_scale must be positive".into()));
        }
        if let Some(t) = self.loss_threshold {
            if !(t >= 0.0) {
                return Err(TnError::InvalidConfig("loss_threshold must be non-negative".into()));
            }
        }
        self.als.validate()
    }
}

/// Edge exploration score.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CandidateScore {
    pub edge: (usize, usize),
    pub loss: f64,
    /// Parameters added by the increment.
    pub cost: usize,
}

/// Why the search stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    LossThreshold,
    BudgetExhausted,
    MaxIterations,
}

impl Termination {
    pub fn as_str(&self) -> &'static str {
        match self {
            Termination::LossThreshold => "loss-threshold",
            Termination::BudgetExhausted => "budget-exhausted",
            Termination::MaxIterations => "max-iterations",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "loss-threshold" => Some(Termination::LossThreshold),
            "budget-exhausted" => Some(Termination::BudgetExhausted),
            "max-iterations" => Some(Termination::MaxIterations),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    /// 0 is the optimized rank-one start.
    pub iteration: usize,
    pub edge: Option<(usize, usize)>,
    pub candidate_scores: Vec<CandidateScore>,
    /// Loss after optimization and splitting.
    pub loss: f64,
    pub relative_error: f64,
    pub param_count: usize,
    pub splits: Vec<SplitEvent>,
    /// Seconds since the search started.
    pub elapsed: f64,
    /// Value returned by the monitor, e.g. a held-out error.
    pub test_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchTrace {
    pub records: Vec<IterationRecord>,
    pub termination: Termination,
}

impl SearchTrace {
    pub fn last(&self) -> &IterationRecord {
        self.records.last().expect("the initial record is always present")
    }

    /// Equality ignoring wall-clock times.
    pub fn same_run(&self, other: &SearchTrace) -> bool {
        let strip = |t: &SearchTrace| {
            let mut t = t.clone();
            for r in &mut t.records {
                r.elapsed = 0.0;
            }
            t
        };
        strip(self) == strip(other)
    }
}

/// Growable pairs `(i, j)`, `i < j`, that fit the budget and the whitelist,
/// in lexicographic order.
pub fn feasible_edges(net: &TensorNetwork, config: &GreedyConfig) -> Vec<(usize, usize)> {
    let p = net.node_count();
    let params = net.param_count();
    let mut out = Vec::new();
    for i in 0..p {
        for j in i + 1..p {
            if let Some(w) = &config.edge_whitelist {
                if !w.iter().any(|&(a, b)| (a.min(b), a.max(b)) == (i, j)) {
                    continue;
                }
            }
            if params + increment_cost(net, i, j) <= config.max_params {
                out.push((i, j));
            }
        }
    }
    out
}

fn candidate_seed(config: &GreedyConfig, iteration: usize, (i, j): (usize, usize)) -> u64 {
    derive_seed(config.rng_seed, &[iteration as u64, i as u64, j as u64])
}

/// Scores every feasible candidate (in parallel) and returns the best one
/// under `config.score`; near-ties within `1e-12` of the loss scale go to
/// the lexicographically smallest edge.
pub fn find_best_edge(
    net: &TensorNetwork,
    objective: &Objective,
    config: &GreedyConfig,
    iteration: usize,
) -> Result<((usize, usize), Vec<CandidateScore>)> {
    let edges = feasible_edges(net, config);
    if edges.is_empty() {
        return Err(TnError::BudgetExhausted {
            budget: config.max_params,
        });
    }
    let scores = edges
        .par_iter()
        .map(|&edge| {
            let grown = increment_edge(
                net,
                edge.0,
                edge.1,
                config.slice_init,
                candidate_seed(config, iteration, edge),
            )?;
            let (_, l) = optimize_new_slices(
                &grown,
                edge,
                objective,
                config.edge_search_iters,
                config.als.ridge,
            )?;
            Ok(CandidateScore {
                edge,
                loss: if l.is_finite() { l } else { f64::INFINITY },
                cost: increment_cost(net, edge.0, edge.1),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let tie = 1e-12 * objective.reference_scale();
    let best = match config.score {
        EdgeScore::Loss => {
            let min = scores.iter().map(|s| s.loss).fold(f64::INFINITY, f64::min);
            scores.iter().find(|s| s.loss <= min + tie)
        }
        EdgeScore::DecreasePerParam => {
            let current = loss(net, objective)?;
            let rate = |s: &CandidateScore| (current - s.loss) / s.cost.max(1) as f64;
            let max = scores.iter().map(rate).fold(f64::NEG_INFINITY, f64::max);
            let max_cost = scores.iter().map(|s| s.cost).max().unwrap_or(1).max(1) as f64;
            scores.iter().find(|s| rate(s) >= max - tie / max_cost)
        }
    }
    .map(|s| s.edge)
    .unwrap_or(edges[0]);
    Ok((best, scores))
}

/// A uniformly random feasible edge.
pub fn random_edge(net: &TensorNetwork, config: &GreedyConfig, seed: u64) -> Result<(usize, usize)> {
    let edges = feasible_edges(net, config);
    if edges.is_empty() {
        return Err(TnError::BudgetExhausted {
            budget: config.max_params,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(edges[rng.random_range(0..edges.len())])
}

/// [`greedy_search_with`] without a monitor.
pub fn greedy_search(
    dims: &[usize],
    objective: &Objective,
    config: &GreedyConfig,
) -> Result<(TensorNetwork, SearchTrace)> {
    greedy_search_with(dims, objective, config, |_| None)
}

/// Runs the greedy search from the rank-one network over `dims`. `monitor`
/// is called on the state after every iteration; its value is stored as
/// the record's `test_error`.
pub fn greedy_search_with(
    dims: &[usize],
    objective: &Objective,
    config: &GreedyConfig,
    mut monitor: impl FnMut(&TensorNetwork) -> Option<f64>,
) -> Result<(TensorNetwork, SearchTrace)> {
    config.validate(dims)?;
    if squeeze_dims(dims) != squeeze_dims(objective.target_dims()) {
        return Err(TnError::IncompatibleTarget {
            target: objective.target_dims().to_vec(),
            network: dims.to_vec(),
        });
    }
    let start = Instant::now();
    let init = TensorNetwork::rank_one(dims, derive_seed(config.rng_seed, &[TAG_INIT]), config.init_scale)?;
    let opt = optimize(&init, objective, &config.als)?;
    let first_loss = opt.final_loss();
    let mut net = opt.network;
    let mut records = vec![IterationRecord {
        iteration: 0,
        edge: None,
        candidate_scores: Vec::new(),
        loss: first_loss,
        relative_error: objective.relative_error_of_loss(first_loss),
        param_count: net.param_count(),
        splits: Vec::new(),
        elapsed: start.elapsed().as_secs_f64(),
        test_error: monitor(&net),
    }];
    let reached = |rec: &IterationRecord| config.loss_threshold.is_some_and(|t| rec.relative_error <= t);

    let mut termination = Termination::MaxIterations;
    for iteration in 1..=config.max_iterations {
        if reached(records.last().expect("non-empty")) {
            termination = Termination::LossThreshold;
            break;
        }
        let choice = match config.strategy {
            EdgeStrategy::BestEdge => find_best_edge(&net, objective, config, iteration),
            EdgeStrategy::RandomWalk => {
                random_edge(&net, config, derive_seed(config.rng_seed, &[TAG_WALK, iteration as u64]))
                    .map(|e| (e, Vec::new()))
            }
        };
        let (edge, candidate_scores) = match choice {
            Ok(c) => c,
            Err(TnError::BudgetExhausted { .. }) => {
                termination = Termination::BudgetExhausted;
                break;
            }
            Err(e) => return Err(e),
        };
        let grown = increment_edge(
            &net,
            edge.0,
            edge.1,
            config.slice_init,
            candidate_seed(config, iteration, edge),
        )?;
        let start_state = if config.transfer_weights {
            grown
        } else {
            TensorNetwork::random(
                grown.ranks().clone(),
                grown.dims().to_vec(),
                derive_seed(config.rng_seed, &[TAG_REINIT, iteration as u64]),
                config.init_scale,
            )?
        };
        let opt = optimize(&start_state, objective, &config.als)?;
        let mut current_loss = opt.final_loss();
        net = opt.network;
        let mut splits = Vec::new();
        if config.enable_split {
            let (split_net, events) = split_nodes(&net, config.split_threshold)?;
            if !events.is_empty() {
                net = split_net;
                current_loss = loss(&net, objective)?;
                splits = events;
            }
        }
        records.push(IterationRecord {
            iteration,
            edge: Some(edge),
            candidate_scores,
            loss: current_loss,
            relative_error: objective.relative_error_of_loss(current_loss),
            param_count: net.param_count(),
            splits,
            elapsed: start.elapsed().as_secs_f64(),
            test_error: monitor(&net),
        });
    }
    if reached(records.last().expect("non-empty")) {
        termination = Termination::LossThreshold;
    }
    Ok((net, SearchTrace { records, termination }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::RankMatrix;

    #[test]
    fn feasible_edges_respect_budget_and_whitelist() {
        let net = TensorNetwork::rank_one(&[3, 3, 3], 0, 1.0).unwrap();
        let mut cfg = GreedyConfig::default();
        assert_eq!(feasible_edges(&net, &cfg), vec![(0, 1), (0, 2), (1, 2)]);
        cfg.edge_whitelist = Some(vec![(2, 1)]);
        assert_eq!(feasible_edges(&net, &cfg), vec![(1, 2)]);
        cfg.edge_whitelist = None;
        cfg.max_params = 14;
        assert!(feasible_edges(&net, &cfg).is_empty());
        cfg.max_params = 15;
        assert_eq!(feasible_edges(&net, &cfg).len(), 3);
    }

    #[test]
    fn random_edge_is_deterministic_and_checked() {
        let net = TensorNetwork::rank_one(&[3, 3, 3], 0, 1.0).unwrap();
        let cfg = GreedyConfig::default();
        assert_eq!(random_edge(&net, &cfg, 4).unwrap(), random_edge(&net, &cfg, 4).unwrap());
        let tight = GreedyConfig {
            max_params: 9,
            ..GreedyConfig::default()
        };
        assert!(matches!(random_edge(&net, &tight, 0), Err(TnError::BudgetExhausted { budget: 9 })));
    }

    fn scored(score: EdgeScore) -> GreedyConfig {
        GreedyConfig {
            score,
            ..GreedyConfig::default()
        }
    }

    #[test]
    fn exact_state_ties_go_to_smallest_edge() {
        let truth = TensorNetwork::rank_one(&[3, 4, 3], 2, 1.0).unwrap();
        let obj = Objective::FullFrobenius(truth.evaluate());
        for score in [EdgeScore::DecreasePerParam, EdgeScore::Loss] {
            let (edge, scores) = find_best_edge(&truth, &obj, &scored(score), 1).unwrap();
            assert_eq!(edge, (0, 1));
            assert_eq!(scores.len(), 3);
            assert_eq!(scores[1].cost, 6);
        }
    }

    #[test]
    fn single_edge_target_is_found() {
        let ranks = RankMatrix::from_edges(3, &[(1, 2, 2)]).unwrap();
        let truth = TensorNetwork::random(ranks, vec![4, 4, 4], 9, 1.0).unwrap();
        let obj = Objective::FullFrobenius(truth.evaluate());
        let start = TensorNetwork::rank_one(&[4, 4, 4], 1, 0.5).unwrap();
        let fitted = optimize(&start, &obj, &AlsConfig::default()).unwrap().network;
        for score in [EdgeScore::DecreasePerParam, EdgeScore::Loss] {
            let (edge, _) = find_best_edge(&fitted, &obj, &scored(score), 1).unwrap();
            assert_eq!(edge, (1, 2));
        }
    }

    #[test]
    fn rate_score_picks_the_best_decrease_per_parameter() {
        let ranks = RankMatrix::from_edges(3, &[(0, 1, 2), (1, 2, 2)]).unwrap();
        let truth = TensorNetwork::random(ranks, vec![9, 3, 3], 4, 1.0).unwrap();
        let obj = Objective::FullFrobenius(truth.evaluate());
        let start = TensorNetwork::rank_one(&[9, 3, 3], 1, 0.5).unwrap();
        let fitted = optimize(&start, &obj, &AlsConfig::default()).unwrap().network;
        let (edge, scores) = find_best_edge(&fitted, &obj, &scored(EdgeScore::DecreasePerParam), 1).unwrap();
        let current = loss(&fitted, &obj).unwrap();
        let best_rate = scores
            .iter()
            .map(|s| (current - s.loss) / s.cost as f64)
            .fold(f64::NEG_INFINITY, f64::max);
        let chosen = scores.iter().find(|s| s.edge == edge).unwrap();
        assert!((current - chosen.loss) / chosen.cost as f64 >= best_rate * (1.0 - 1e-9));
    }

    #[test]
    fn tiny_budget_stops_at_iteration_zero() {
        let truth = TensorNetwork::random(
            RankMatrix::from_edges(3, &[(0, 1, 2)]).unwrap(),
            vec![3, 3, 3],
            1,
            1.0,
        )
        .unwrap();
        let obj = Objective::FullFrobenius(truth.evaluate());
        let cfg = GreedyConfig {
            max_params: 9,
            ..GreedyConfig::default()
        };
        let (_, trace) = greedy_search(&[3, 3, 3], &obj, &cfg).unwrap();
        assert_eq!(trace.termination, Termination::BudgetExhausted);
        assert_eq!(trace.records.len(), 1);
    }

    #[test]
    fn small_chain_is_recovered() {
        let ranks = RankMatrix::from_edges(4, &[(0, 1, 2), (1, 2, 3), (2, 3, 2)]).unwrap();
        let truth = TensorNetwork::random(ranks, vec![4, 4, 4, 4], 3, 1.0).unwrap();
        let target = truth.evaluate();
        let obj = Objective::FullFrobenius(target.clone());
        let cfg = GreedyConfig {
            loss_threshold: Some(1e-6),
            max_iterations: 20,
            ..GreedyConfig::default()
        };
        let (net, trace) = greedy_search(&[4, 4, 4, 4], &obj, &cfg).unwrap();
        assert_eq!(trace.termination, Termination::LossThreshold);
        assert!(relative_error(&net, &target).unwrap() < 1e-6);
        let (_, again) = greedy_search(&[4, 4, 4, 4], &obj, &cfg).unwrap();
        assert!(trace.same_run(&again));
    }
}
