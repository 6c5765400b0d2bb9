//! Image completion: a synthetic 60x60 RGB image is tensorized as
//! 6x10x6x10x3, 10% of the pixels are observed, and greedy is compared
//! with uniform-rank TT fits under the same parameter budget. Errors are
//! measured on the unobserved pixels.
//!
//! cargo run --release --example image_completion -- [budget]

use greedy_tn::als::{masked_relative_error, sample_mask, AlsConfig, Objective};
use greedy_tn::baselines::{rank_sweep, Model, RankSweepSpec};
use greedy_tn::image::{synthetic_image, Tensorization};
use greedy_tn::search::{greedy_search_with, GreedyConfig};
use greedy_tn::TensorNetwork;

fn main() -> greedy_tn::Result<()> {
    let budget: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(2000);
    let image = synthetic_image(60, 60, 3, 7)?;
    let layout: Tensorization = "custom:6x10/6x10".parse()?;
    let tensor = layout.tensorize(&image)?;
    let mask = sample_mask(tensor.dims(), 0.1, 77)?;
    let held_out = mask.complement();
    let objective = Objective::MaskedMse(mask.observe(&tensor)?);
    println!("{} of {} entries observed, dims {:?}", mask.len(), tensor.len(), tensor.dims());

    let config = GreedyConfig {
        max_params: budget,
        max_iterations: 40,
        rng_seed: 7,
        ..GreedyConfig::default()
    };
    let (net, trace) = greedy_search_with(tensor.dims(), &objective, &config, |n| {
        masked_relative_error(n, &tensor, &held_out).ok()
    })?;
    for r in &trace.records {
        println!(
            "greedy {:>3}: params {:>5}  train {:.4}  test {:.4}",
            r.iteration,
            r.param_count,
            r.relative_error,
            r.test_error.unwrap_or(f64::NAN)
        );
    }

    let spec = RankSweepSpec {
        model: Model::Tt,
        rank_start: 1,
        rank_end: 20,
        param_cap: budget,
    };
    let eval = |n: &TensorNetwork| masked_relative_error(n, &tensor, &held_out);
    for p in rank_sweep(&spec, &objective, &AlsConfig::default(), 7, Some(&eval))? {
        println!("TT rank {:>2}: params {:>5}  test {:.4}", p.rank, p.params, p.test_error.unwrap_or(f64::NAN));
    }
    println!("greedy final: {} params, test {:.4}", net.param_count(), masked_relative_error(&net, &tensor, &held_out)?);

    let restored = layout.detensorize(&net.evaluate().reshape(tensor.dims().to_vec())?, Some(3))?;
    println!("restored image dims {:?}", restored.dims());
    Ok(())
}
