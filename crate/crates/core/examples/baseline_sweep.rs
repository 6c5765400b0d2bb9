//! Fixed-structure baselines: TT, TR and Tucker fits over a range of ranks
//! on the tensor-train target, printing error against parameter count.
//!
//! cargo run --release --example baseline_sweep

use greedy_tn::als::{AlsConfig, Objective};
use greedy_tn::baselines::{rank_sweep, Model, RankSweepSpec};
use greedy_tn::targets::{random_target, TargetKind};

fn main() -> greedy_tn::Result<()> {
    let (_, target) = random_target(TargetKind::Tt, 0)?;
    let objective = Objective::FullFrobenius(target);
    // Tucker's core grows as rank^5, and refitting it is the expensive step.
    for (model, rank_end) in [(Model::Tt, 6), (Model::Tr, 6), (Model::Tucker, 3)] {
        let spec = RankSweepSpec {
            model,
            rank_start: 1,
            rank_end,
            param_cap: 5000,
        };
        for p in rank_sweep(&spec, &objective, &AlsConfig::default(), 0, None)? {
            println!("{model:<6} rank {:>2}  params {:>5}  rse {:.3e}", p.rank, p.params, p.relative_error);
        }
    }
    Ok(())
}
