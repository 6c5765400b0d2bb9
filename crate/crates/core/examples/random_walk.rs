//! Best-edge selection against a random walk over the same candidate
//! edges, both under the same parameter budget.
//!
//! cargo run --release --example random_walk -- [seed]

use greedy_tn::als::Objective;
use greedy_tn::search::{greedy_search, EdgeStrategy, GreedyConfig};
use greedy_tn::targets::{random_target, TargetKind, TARGET_DIMS};

fn main() -> greedy_tn::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let (_, target) = random_target(TargetKind::Tt, seed)?;
    let objective = Objective::FullFrobenius(target);
    for strategy in [EdgeStrategy::BestEdge, EdgeStrategy::RandomWalk] {
        let config = GreedyConfig {
            loss_threshold: Some(1e-6),
            max_params: 1500,
            strategy,
            rng_seed: seed,
            ..GreedyConfig::default()
        };
        let (net, trace) = greedy_search(&TARGET_DIMS, &objective, &config)?;
        println!("{strategy:?}:");
        for r in &trace.records {
            println!("  params {:>5}  rse {:.3e}", r.param_count, r.relative_error);
        }
        println!("  {} with {} params", trace.termination.as_str(), net.param_count());
    }
    Ok(())
}
