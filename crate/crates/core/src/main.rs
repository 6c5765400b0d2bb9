use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use greedy_tn::als::{masked_relative_error, sample_mask, Mask, Objective, ObservationSet};
use greedy_tn::baselines::{rank_sweep, Model, RankSweepSpec};
use greedy_tn::image::Tensorization;
use greedy_tn::io;
use greedy_tn::report::Report;
use greedy_tn::search::{greedy_search_with, EdgeScore, EdgeStrategy, GreedyConfig};
use greedy_tn::seed::derive_seed;
use greedy_tn::{DenseTensor, TensorNetwork};

const MASK_TAG: u64 = 0x4d41534b;

/// Greedy tensor network structure search.
#[derive(Parser)]
#[command(name = "greedy-tn", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a full tensor, growing the network greedily.
    Decompose {
        #[arg(long)]
        target: PathBuf,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Fit a partially observed tensor.
    Complete {
        #[command(flatten)]
        data: CompletionArgs,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Fit a fixed TT, TR or Tucker structure over a range of ranks.
    Baseline {
        #[arg(long)]
        target: PathBuf,
        #[arg(long, value_enum)]
        model: ModelArg,
        /// Inclusive range `a:b`.
        #[arg(long)]
        rank_range: String,
        #[arg(long, default_value_t = usize::MAX)]
        param_cap: usize,
        /// Observe only this fraction and report the error on the rest.
        #[arg(long)]
        mask_fraction: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        report: PathBuf,
    },
    /// Evaluate a network file into a full tensor.
    Contract {
        #[arg(long)]
        network: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Print the structure of a network file.
    Inspect {
        #[arg(long)]
        network: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Reshape an H×W or H×W×C image tensor into a higher-order tensor.
    Tensorize {
        #[arg(long)]
        image: PathBuf,
        /// `einstein`, `live4x8` or `custom:<rows>/<cols>` such as `custom:6x10/6x10`.
        #[arg(long)]
        preset: Tensorization,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Print a report's error-versus-parameters curve as CSV.
    Plot {
        #[arg(long)]
        report: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Tt,
    Tr,
    Tucker,
}

impl From<ModelArg> for Model {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Tt => Model::Tt,
            ModelArg::Tr => Model::Tr,
            ModelArg::Tucker => Model::Tucker,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ScoreArg {
    /// Largest loss decrease per added parameter.
    Rate,
    /// Lowest loss after exploration.
    Loss,
}

#[derive(Clone, Copy, ValueEnum)]
enum Constraint {
    Tt,
    Tr,
}

#[derive(Args)]
struct SearchArgs {
    /// Stop once the relative error reaches this value.
    #[arg(long)]
    loss_threshold: Option<f64>,
    #[arg(long, default_value_t = usize::MAX)]
    max_params: usize,
    #[arg(long, default_value_t = 100)]
    max_iterations: usize,
    /// Restricted sweeps per candidate edge (default 2 for decompose, 10 for complete).
    #[arg(long)]
    edge_search_iters: Option<usize>,
    #[arg(long, default_value_t = 1e-5)]
    split_threshold: f64,
    #[arg(long)]
    no_split: bool,
    #[arg(long)]
    no_transfer: bool,
    #[arg(long)]
    random_walk: bool,
    /// How explored candidate edges are ranked.
    #[arg(long, value_enum, default_value = "rate")]
    edge_score: ScoreArg,
    /// Only grow chain (tt) or ring (tr) edges; implies --no-split.
    #[arg(long, value_enum)]
    constrain: Option<Constraint>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    report: PathBuf,
    /// Also save the final network.
    #[arg(long)]
    out_network: Option<PathBuf>,
}

#[derive(Args)]
struct CompletionArgs {
    /// Either a full tensor (with --mask-fraction) or a vector of observed
    /// values (with --indices and --dims).
    #[arg(long)]
    observations: PathBuf,
    /// One multi-index per line, in the order of the values.
    #[arg(long)]
    indices: Option<PathBuf>,
    /// Comma separated, e.g. `7,7,7`. Reshapes a full tensor when given.
    #[arg(long, value_delimiter = ',')]
    dims: Option<Vec<usize>>,
    #[arg(long)]
    mask_fraction: Option<f64>,
}

impl SearchArgs {
    fn config(&self, order: usize, default_search_iters: usize) -> GreedyConfig {
        let whitelist = self.constrain.map(|c| {
            let mut edges: Vec<(usize, usize)> = (0..order.saturating_sub(1)).map(|i| (i, i + 1)).collect();
            if matches!(c, Constraint::Tr) && order > 2 {
                edges.push((0, order - 1));
            }
            edges
        });
        GreedyConfig {
            max_params: self.max_params,
            loss_threshold: self.loss_threshold,
            max_iterations: self.max_iterations,
            edge_search_iters: self.edge_search_iters.unwrap_or(default_search_iters),
            split_threshold: self.split_threshold,
            enable_split: !self.no_split && self.constrain.is_none(),
            transfer_weights: !self.no_transfer,
            strategy: if self.random_walk { EdgeStrategy::RandomWalk } else { EdgeStrategy::BestEdge },
            score: match self.edge_score {
                ScoreArg::Rate => EdgeScore::DecreasePerParam,
                ScoreArg::Loss => EdgeScore::Loss,
            },
            edge_whitelist: whitelist,
            rng_seed: self.seed,
            ..GreedyConfig::default()
        }
    }
}

fn echo(cfg: &GreedyConfig) -> Vec<(String, String)> {
    let opt = |v: Option<f64>| v.map(|x| format!("{x:e}")).unwrap_or_else(|| "none".into());
    let whitelist = cfg
        .edge_whitelist
        .as_ref()
        .map(|w| w.iter().map(|(i, j)| format!("{i}-{j}")).collect::<Vec<_>>().join(" "))
        .unwrap_or_else(|| "all".into());
    vec![
        ("loss_threshold".into(), opt(cfg.loss_threshold)),
        ("max_params".into(), cfg.max_params.to_string()),
        ("max_iterations".into(), cfg.max_iterations.to_string()),
        ("edge_search_iters".into(), cfg.edge_search_iters.to_string()),
        ("split_threshold".into(), format!("{:e}", cfg.split_threshold)),
        ("split".into(), cfg.enable_split.to_string()),
        ("transfer".into(), cfg.transfer_weights.to_string()),
        (
            "strategy".into(),
            match cfg.strategy {
                EdgeStrategy::BestEdge => "best-edge",
                EdgeStrategy::RandomWalk => "random-walk",
            }
            .into(),
        ),
        (
            "edge_score".into(),
            match cfg.score {
                EdgeScore::DecreasePerParam => "rate",
                EdgeScore::Loss => "loss",
            }
            .into(),
        ),
        ("edges".into(), whitelist),
        ("seed".into(), cfg.rng_seed.to_string()),
        ("slice_noise".into(), format!("{:e}", cfg.slice_init.half_width())),
        ("init_scale".into(), format!("{:e}", cfg.init_scale)),
        ("als_max_sweeps".into(), cfg.als.max_sweeps.to_string()),
        ("als_tol".into(), format!("{:e}", cfg.als.rel_improvement_tol)),
        ("als_ridge".into(), format!("{:e}", cfg.als.ridge)),
    ]
}

fn kv(key: &str, value: impl ToString) -> (String, String) {
    (key.to_string(), value.to_string())
}

fn write_report(path: &Path, report: &Report) -> anyhow::Result<()> {
    std::fs::write(path, report.to_string()).with_context(|| format!("cannot write report {}", path.display()))
}

fn read_tensor(path: &Path) -> anyhow::Result<DenseTensor> {
    io::read_tensor(path).with_context(|| format!("cannot read tensor {}", path.display()))
}

fn read_network(path: &Path) -> anyhow::Result<TensorNetwork> {
    io::read_network(path).with_context(|| format!("cannot read network {}", path.display()))
}

fn run_search(
    command: &str,
    mut config_echo: Vec<(String, String)>,
    dims: &[usize],
    objective: &Objective,
    held_out: Option<(&DenseTensor, &Mask)>,
    args: &SearchArgs,
) -> anyhow::Result<()> {
    let cfg = args.config(dims.len(), if command == "complete" { 10 } else { 2 });
    config_echo.insert(0, kv("command", command));
    config_echo.extend(echo(&cfg));
    let monitor = |net: &TensorNetwork| held_out.and_then(|(t, m)| masked_relative_error(net, t, m).ok());
    let (net, trace) = greedy_search_with(dims, objective, &cfg, monitor)?;
    let last = trace.last();
    let mut report = Report::new(config_echo)
        .with_trace(&trace)
        .with_structure(&net)
        .with_status("relative_error", format!("{:e}", last.relative_error));
    if let Some(e) = last.test_error {
        report = report.with_status("test_error", format!("{e:e}"));
    }
    write_report(&args.report, &report)?;
    if let Some(path) = &args.out_network {
        io::write_network(path, &net).with_context(|| format!("cannot write network {}", path.display()))?;
    }
    println!(
        "{}: relative error {:.3e}, {} parameters, {} iterations",
        trace.termination.as_str(),
        last.relative_error,
        net.param_count(),
        last.iteration
    );
    Ok(())
}

fn complete(data: &CompletionArgs, search: &SearchArgs) -> anyhow::Result<()> {
    let values = read_tensor(&data.observations)?;
    let mut echo = vec![kv("observations", data.observations.display())];
    if let Some(index_path) = &data.indices {
        let dims = data.dims.clone().context("--indices needs --dims")?;
        if data.mask_fraction.is_some() {
            bail!("--mask-fraction applies to a full tensor, not to --indices");
        }
        let text = std::fs::read_to_string(index_path)
            .with_context(|| format!("cannot read index file {}", index_path.display()))?;
        let indices = io::parse_indices(&text)?;
        if values.len() != indices.len() {
            bail!("{} values but {} indices", values.len(), indices.len());
        }
        let obs = ObservationSet::new(dims.clone(), &indices, values.into_data())?;
        echo.push(kv("indices", index_path.display()));
        echo.push(kv("dims", join(&dims)));
        return run_search("complete", echo, &dims, &Objective::MaskedMse(obs), None, search);
    }
    let fraction = data
        .mask_fraction
        .context("a full tensor needs --mask-fraction (or pass --indices and --dims)")?;
    let full = match &data.dims {
        Some(d) => values.reshape(d.clone()).with_context(|| format!("cannot reshape to {}", join(d)))?,
        None => values,
    };
    let dims = full.dims().to_vec();
    echo.push(kv("dims", join(&dims)));
    echo.push(kv("mask_fraction", format!("{fraction:e}")));
    let mask = sample_mask(&dims, fraction, derive_seed(search.seed, &[MASK_TAG]))?;
    let held_out = mask.complement();
    let objective = Objective::MaskedMse(mask.observe(&full)?);
    run_search("complete", echo, &dims, &objective, Some((&full, &held_out)), search)
}

fn join(dims: &[usize]) -> String {
    dims.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(",")
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Decompose { target, search } => {
            let t = read_tensor(&target)?;
            let dims = t.dims().to_vec();
            let echo = vec![kv("target", target.display()), kv("dims", join(&dims))];
            run_search("decompose", echo, &dims, &Objective::FullFrobenius(t), None, &search)
        }
        Command::Complete { data, search } => complete(&data, &search),
        Command::Baseline {
            target,
            model,
            rank_range,
            param_cap,
            mask_fraction,
            seed,
            report,
        } => {
            let t = read_tensor(&target)?;
            let (a, b) = rank_range
                .split_once(':')
                .and_then(|(a, b)| Some((a.trim().parse().ok()?, b.trim().parse().ok()?)))
                .with_context(|| format!("--rank-range expects a:b, got {rank_range:?}"))?;
            let spec = RankSweepSpec {
                model: model.into(),
                rank_start: a,
                rank_end: b,
                param_cap,
            };
            let mut echo = vec![
                kv("command", "baseline"),
                kv("target", target.display()),
                kv("dims", join(t.dims())),
                kv("model", spec.model),
                kv("rank_range", format!("{a}:{b}")),
                kv("param_cap", param_cap),
                kv("seed", seed),
            ];
            let als = Default::default();
            let points = match mask_fraction {
                None => rank_sweep(&spec, &Objective::FullFrobenius(t), &als, seed, None)?,
                Some(f) => {
                    echo.push(kv("mask_fraction", format!("{f:e}")));
                    let mask = sample_mask(t.dims(), f, derive_seed(seed, &[MASK_TAG]))?;
                    let held_out = mask.complement();
                    let objective = Objective::MaskedMse(mask.observe(&t)?);
                    let eval = |net: &TensorNetwork| masked_relative_error(net, &t, &held_out);
                    rank_sweep(&spec, &objective, &als, seed, Some(&eval))?
                }
            };
            write_report(&report, &Report::new(echo).with_curve(&points))?;
            for p in &points {
                println!("rank {} params {} relative error {:.3e}", p.rank, p.params, p.relative_error);
            }
            Ok(())
        }
        Command::Contract { network, out, report } => {
            let net = read_network(&network)?;
            let t = net.evaluate();
            io::write_tensor(&out, &t).with_context(|| format!("cannot write tensor {}", out.display()))?;
            if let Some(path) = report {
                let echo = vec![kv("command", "contract"), kv("network", network.display()), kv("out", out.display())];
                write_report(&path, &Report::new(echo).with_structure(&net))?;
            }
            println!("wrote {} entries of shape {}", t.len(), join(t.dims()));
            Ok(())
        }
        Command::Inspect { network, report } => {
            let net = read_network(&network)?;
            println!("nodes {}", net.node_count());
            println!("dims {}", join(net.dims()));
            for (i, j, r) in net.edge_list(false) {
                println!("edge {i} {j} rank {r}");
            }
            println!("params {}", net.param_count());
            if let Some(path) = report {
                let echo = vec![kv("command", "inspect"), kv("network", network.display())];
                write_report(&path, &Report::new(echo).with_structure(&net))?;
            }
            Ok(())
        }
        Command::Tensorize {
            image,
            preset,
            out,
            report,
        } => {
            let pixels = read_tensor(&image)?;
            let t = preset.tensorize(&pixels)?;
            io::write_tensor(&out, &t).with_context(|| format!("cannot write tensor {}", out.display()))?;
            if let Some(path) = report {
                let echo = vec![
                    kv("command", "tensorize"),
                    kv("image", image.display()),
                    kv("preset", &preset),
                    kv("out", out.display()),
                ];
                write_report(&path, &Report::new(echo).with_status("dims", join(t.dims())))?;
            }
            println!("tensorized to {}", join(t.dims()));
            Ok(())
        }
        Command::Plot { report, out } => {
            let text = std::fs::read_to_string(&report).with_context(|| format!("cannot read report {}", report.display()))?;
            let csv = Report::parse(&text)?.plot_csv();
            match out {
                Some(path) => std::fs::write(&path, csv).with_context(|| format!("cannot write {}", path.display()))?,
                None => print!("{csv}"),
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let threads = std::env::var("TN_THREADS").ok().and_then(|v| v.trim().parse::<usize>().ok()).unwrap_or(0);
    if threads > 0 {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
