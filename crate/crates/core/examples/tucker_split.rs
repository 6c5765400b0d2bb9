//! Tucker target: five leaves around an internal core. Node splitting lets
//! the search introduce internal nodes; compare against a run without it.
//!
//! cargo run --release --example tucker_split -- [seed]

use greedy_tn::als::Objective;
use greedy_tn::search::{greedy_search, GreedyConfig};
use greedy_tn::targets::{random_target, TargetKind, TARGET_DIMS};

fn main() -> greedy_tn::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let (truth, target) = random_target(TargetKind::Tucker, seed)?;
    println!("target: {} params, edges {:?}", truth.param_count(), truth.edge_list(false));
    let objective = Objective::FullFrobenius(target);
    for enable_split in [true, false] {
        let config = GreedyConfig {
            loss_threshold: Some(1e-6),
            max_params: 3000,
            enable_split,
            rng_seed: seed,
            ..GreedyConfig::default()
        };
        let (net, trace) = greedy_search(&TARGET_DIMS, &objective, &config)?;
        let splits: usize = trace.records.iter().map(|r| r.splits.len()).sum();
        println!(
            "split {}: {} after {} iterations, rse {:.2e}, {} params, {} nodes, {splits} split(s)",
            if enable_split { "on " } else { "off" },
            trace.termination.as_str(),
            trace.last().iteration,
            trace.last().relative_error,
            net.param_count(),
            net.node_count()
        );
        for r in trace.records.iter().filter(|r| !r.splits.is_empty()) {
            for s in &r.splits {
                println!(
                    "  iteration {}: node {} -> new node {} over modes {:?}, rank {}, params {} -> {}",
                    r.iteration, s.node, s.new_node, s.moved_modes, s.rank, s.params_before, s.params_after
                );
            }
        }
    }
    Ok(())
}
