//! Greedy decomposition of a random tensor-train target of size 7^5 with
//! chain ranks (2, 3, 6, 5). Prints one line per iteration.
//!
//! cargo run --release --example decompose_tt -- [seed]

use greedy_tn::als::Objective;
use greedy_tn::search::{greedy_search, GreedyConfig};
use greedy_tn::targets::{random_target, TargetKind, TARGET_DIMS};

fn main() -> greedy_tn::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(3);
    let (truth, target) = random_target(TargetKind::Tt, seed)?;
    let config = GreedyConfig {
        loss_threshold: Some(1e-6),
        rng_seed: seed,
        ..GreedyConfig::default()
    };
    let (net, trace) = greedy_search(&TARGET_DIMS, &Objective::FullFrobenius(target), &config)?;
    for r in &trace.records {
        let edge = r.edge.map(|(i, j)| format!("({i},{j})")).unwrap_or_else(|| "start".into());
        let splits = if r.splits.is_empty() { String::new() } else { format!("  {} split(s)", r.splits.len()) };
        println!("{:>3}  {edge:>6}  params {:>5}  rse {:.3e}{splits}", r.iteration, r.param_count, r.relative_error);
    }
    println!("stopped: {}", trace.termination.as_str());
    println!("target: {} params, edges {:?}", truth.param_count(), truth.edge_list(false));
    println!("found:  {} params, edges {:?}", net.param_count(), net.edge_list(false));
    Ok(())
}
