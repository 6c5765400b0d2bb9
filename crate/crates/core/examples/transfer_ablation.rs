//! Weight transfer ablation: the same greedy search with every increment
//! either starting from the previous weights or from fresh random cores.
//!
//! cargo run --release --example transfer_ablation -- [targets] [iterations]

use greedy_tn::als::Objective;
use greedy_tn::search::{greedy_search, GreedyConfig};
use greedy_tn::targets::{random_tt, TARGET_DIMS};

fn main() -> greedy_tn::Result<()> {
    let mut args = std::env::args().skip(1).map(|s| s.parse::<usize>().ok());
    let targets = args.next().flatten().unwrap_or(3);
    let iterations = args.next().flatten().unwrap_or(6);
    for t in 0..targets as u64 {
        let target = random_tt(&TARGET_DIMS, &[6, 3, 6, 5], 300 + t)?.evaluate();
        let objective = Objective::FullFrobenius(target);
        let mut line = format!("target {t}:");
        for transfer in [true, false] {
            let config = GreedyConfig {
                max_iterations: iterations,
                transfer_weights: transfer,
                rng_seed: t,
                ..GreedyConfig::default()
            };
            let (net, trace) = greedy_search(&TARGET_DIMS, &objective, &config)?;
            line += &format!(
                "  {} rse {:.3e} ({} params)",
                if transfer { "transfer" } else { "fresh" },
                trace.last().relative_error,
                net.param_count()
            );
        }
        println!("{line}");
    }
    Ok(())
}
