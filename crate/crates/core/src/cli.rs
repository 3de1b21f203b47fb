//! The `esn` command line: signal generation, single simulations and the three
//! experiment protocols. Every command writes CSV files plus a manifest that
//! `esn replay` can re-run.

use std::fs;
use std::path::{Path, PathBuf};

use clap::builder::RangedU64ValueParser;
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::analysis::{estimate_delta, memory_curve, JacobianForm, LleOptions, MemoryParams};
use crate::error::EsnError;
use crate::experiments::output::{
    write_delay_memory_csv, write_lle_csv, write_memory_curve_csv, write_spectrum_csv, write_tradeoff_csv, write_trajectory_csv,
    CurveContext, DatasetRecord, RunManifest,
};
use crate::experiments::{
    benchmark_series, child_seed, default_task_grid, delay_memory_experiment, linspace, lle_sweep_experiment, paper_hyperparams,
    series_seed, sr_range, summarize_lle, tradeoff_grid_experiment, with_threads, Execution, Protocol, SweepPlan, SCALING_RANGE,
};
use crate::readout::Regularization;
use crate::reservoir::{build_reservoir, Activation, ReservoirConfig};
use crate::signals::Benchmark;

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Parser, Debug, Clone)]
#[command(name = "esn", version, about = "Echo state networks with spherical, linear and tanh reservoirs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Clone)]
pub enum Command {
    /// Write a benchmark input series.
    Generate(GenerateArgs),
    /// Drive one reservoir, save its states, matrices and memory curve.
    Simulate(SimulateArgs),
    /// Largest Lyapunov exponent and QR spectrum over spectral radii and seeds.
    Lyapunov(LyapunovArgs),
    /// Delay-reconstruction accuracy per delay.
    Memory(MemoryArgs),
    /// Memory/non-linearity trade-off grid search.
    Tradeoff(TradeoffArgs),
    /// Re-run the command recorded in a manifest.
    Replay(ReplayArgs),
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Master seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory.
    #[arg(long, env = "ESN_OUTPUT_DIR", default_value = ".")]
    pub out: PathBuf,
    /// Worker threads (default: one per core).
    #[arg(long, value_parser = RangedU64ValueParser::<usize>::new().range(1..))]
    pub threads: Option<usize>,
    /// Run cells one after another instead of in parallel.
    #[arg(long)]
    pub sequential: bool,
    /// Paper-sized defaults.
    #[arg(long, conflicts_with = "desk_scale")]
    pub paper_scale: bool,
    /// Small defaults that run in minutes (the default).
    #[arg(long)]
    pub desk_scale: bool,
}

impl Common {
    fn exec(&self) -> Execution {
        if self.sequential {
            Execution::Sequential
        } else {
            Execution::Parallel
        }
    }

    fn scale(&self) -> &'static str {
        if self.paper_scale {
            "paper"
        } else {
            "desk"
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct GenerateArgs {
    #[arg(long)]
    pub signal: Benchmark,
    #[arg(long, default_value_t = 1000)]
    pub length: usize,
    /// Center and scale to unit variance, as the experiments do.
    #[arg(long)]
    pub normalize: bool,
    /// Santa Fe laser data file.
    #[arg(long)]
    pub santa_fe: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug, Clone)]
pub struct SimulateArgs {
    #[arg(long, default_value = "spherical")]
    pub family: Activation,
    #[arg(long)]
    pub sr: Option<f64>,
    #[arg(long)]
    pub scaling: Option<f64>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, default_value = "white_noise")]
    pub signal: Benchmark,
    /// Steps after the washout.
    #[arg(long, default_value_t = 1000)]
    pub length: usize,
    #[arg(long, default_value_t = 100)]
    pub washout: usize,
    #[arg(long, default_value_t = 100)]
    pub max_lag: usize,
    #[arg(long)]
    pub santa_fe: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug, Clone)]
pub struct LyapunovArgs {
    #[arg(long, default_value = "spherical")]
    pub family: Activation,
    /// Spectral radii, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub sr: Vec<f64>,
    #[arg(long)]
    pub n: Option<usize>,
    /// Total steps, transient included.
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub transient: Option<usize>,
    #[arg(long)]
    pub seeds: Option<usize>,
    /// Sample the local spectral radius every k-th step.
    #[arg(long)]
    pub eig_stride: Option<usize>,
    /// Leading exponents tracked by the QR method.
    #[arg(long, conflicts_with = "all_exponents")]
    pub exponents: Option<usize>,
    #[arg(long)]
    pub all_exponents: bool,
    #[arg(long, default_value = "printed")]
    pub jacobian: JacobianForm,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug, Clone)]
pub struct Ridge {
    /// Absolute ridge coefficient.
    #[arg(long, conflicts_with = "ridge_relative")]
    pub ridge: Option<f64>,
    /// Ridge coefficient relative to trace(XᵀX).
    #[arg(long)]
    pub ridge_relative: Option<f64>,
}

impl Ridge {
    fn resolve(&self) -> Result<Regularization, Failure> {
        let reg = match (self.ridge, self.ridge_relative) {
            (Some(l), _) => Regularization::Absolute(l),
            (None, Some(c)) => Regularization::RelativeToTrace(c),
            (None, None) => Regularization::default(),
        };
        let v = match reg {
            Regularization::Absolute(v) | Regularization::RelativeToTrace(v) => v,
        };
        if !(v >= 0.0 && v.is_finite()) {
            return Err(usage(format!("ridge coefficient must be non-negative, got {v}")));
        }
        Ok(reg)
    }
}

#[derive(Args, Debug, Clone)]
pub struct MemoryArgs {
    #[arg(long, default_value = "white_noise")]
    pub benchmark: Benchmark,
    /// Families, comma separated (default: all three).
    #[arg(long, value_delimiter = ',')]
    pub family: Vec<Activation>,
    #[arg(long, default_value_t = 100)]
    pub tau_max: usize,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub train: Option<usize>,
    #[arg(long)]
    pub test: Option<usize>,
    #[arg(long)]
    pub washout: Option<usize>,
    #[arg(long)]
    pub runs: Option<usize>,
    /// Spectral radius for every family (default: per-family preset).
    #[arg(long)]
    pub sr: Option<f64>,
    #[arg(long)]
    pub scaling: Option<f64>,
    #[arg(long)]
    pub santa_fe: Option<PathBuf>,
    #[command(flatten)]
    pub ridge: Ridge,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug, Clone)]
pub struct TradeoffArgs {
    #[arg(long, default_value = "spherical")]
    pub family: Activation,
    #[arg(long)]
    pub sr_min: Option<f64>,
    #[arg(long)]
    pub sr_max: Option<f64>,
    #[arg(long)]
    pub sr_steps: Option<usize>,
    #[arg(long)]
    pub scaling_min: Option<f64>,
    #[arg(long)]
    pub scaling_max: Option<f64>,
    #[arg(long)]
    pub scaling_steps: Option<usize>,
    /// Target frequencies, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub nu: Vec<f64>,
    /// Delays, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub tau: Vec<usize>,
    #[arg(long)]
    pub seeds: Option<usize>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub train: Option<usize>,
    #[arg(long)]
    pub test: Option<usize>,
    #[arg(long)]
    pub washout: Option<usize>,
    #[command(flatten)]
    pub ridge: Ridge,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug, Clone)]
pub struct ReplayArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Output directory (default: the manifest's directory).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_parser = RangedU64ValueParser::<usize>::new().range(1..))]
    pub threads: Option<usize>,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Generate(_) => "generate",
            Command::Simulate(_) => "simulate",
            Command::Lyapunov(_) => "lyapunov",
            Command::Memory(_) => "memory",
            Command::Tradeoff(_) => "tradeoff",
            Command::Replay(_) => "replay",
        }
    }

    fn common_mut(&mut self) -> Option<&mut Common> {
        match self {
            Command::Generate(a) => Some(&mut a.common),
            Command::Simulate(a) => Some(&mut a.common),
            Command::Lyapunov(a) => Some(&mut a.common),
            Command::Memory(a) => Some(&mut a.common),
            Command::Tradeoff(a) => Some(&mut a.common),
            Command::Replay(_) => None,
        }
    }
}

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Runtime(EsnError),
}

impl From<EsnError> for Failure {
    fn from(e: EsnError) -> Self {
        Failure::Runtime(e)
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn require(ok: bool, msg: impl FnOnce() -> String) -> Result<(), Failure> {
    if ok {
        Ok(())
    } else {
        Err(usage(msg()))
    }
}

fn positive(name: &str, v: f64) -> Result<(), Failure> {
    require(v > 0.0 && v.is_finite(), || format!("--{name} must be positive, got {v}"))
}

fn non_negative(name: &str, v: f64) -> Result<(), Failure> {
    require(v >= 0.0 && v.is_finite(), || format!("--{name} must be non-negative, got {v}"))
}

fn data_file(benchmark: Benchmark, path: &Option<PathBuf>) -> Result<(), Failure> {
    require(benchmark != Benchmark::SantaFe || path.is_some(), || "santa_fe needs --santa-fe <file>".into())
}

fn at_least(name: &str, v: usize, min: usize) -> Result<(), Failure> {
    require(v >= min, || format!("--{name} must be at least {min}, got {v}"))
}

/// Parses `argv` (program name first), runs the command and returns the exit code.
pub fn run(argv: Vec<String>) -> i32 {
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let result = match &cli.command {
        Command::Replay(r) => replay(r),
        _ => execute(&cli, &argv),
    };
    match result {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            EXIT_OK
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Runtime(e)) => {
            let mut msg = format!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                msg.push_str(&format!("\n  caused by: {s}"));
                source = s.source();
            }
            eprintln!("{msg}");
            EXIT_RUNTIME
        }
    }
}

fn replay(args: &ReplayArgs) -> Result<Vec<PathBuf>, Failure> {
    let manifest = RunManifest::read(&args.manifest)?;
    let bad = |msg: String| Failure::Runtime(EsnError::InvalidConfig(format!("{}: {msg}", args.manifest.display())));
    let mut cli = Cli::try_parse_from(&manifest.argv).map_err(|e| bad(e.to_string()))?;
    let out = match &args.out {
        Some(o) => o.clone(),
        None => args.manifest.parent().map(Path::to_path_buf).unwrap_or_default(),
    };
    let common = cli.command.common_mut().ok_or_else(|| bad("manifest records a replay".into()))?;
    common.out = out;
    if args.threads.is_some() {
        common.threads = args.threads;
    }
    execute(&cli, &manifest.argv)
}

/// Runs a parsed, non-replay command; `argv` is recorded in the manifest.
pub fn execute(cli: &Cli, argv: &[String]) -> Result<Vec<PathBuf>, Failure> {
    let mut cli = cli.clone();
    let common = cli.command.common_mut().ok_or_else(|| usage("replay cannot be executed directly"))?.clone();
    let mut argv = argv.to_vec();
    if let Some(first) = argv.first_mut() {
        *first = "esn".into();
    }
    let ctx = Context {
        argv,
        subcommand: cli.command.name(),
        common,
    };
    let threads = ctx.common.threads;
    with_threads(threads, || match &cli.command {
        Command::Generate(a) => generate(&ctx, a),
        Command::Simulate(a) => simulate(&ctx, a),
        Command::Lyapunov(a) => lyapunov(&ctx, a),
        Command::Memory(a) => memory(&ctx, a),
        Command::Tradeoff(a) => tradeoff(&ctx, a),
        Command::Replay(_) => unreachable!(),
    })?
}

struct Context {
    argv: Vec<String>,
    subcommand: &'static str,
    common: Common,
}

impl Context {
    fn out_dir(&self) -> Result<&Path, Failure> {
        let dir = self.common.out.as_path();
        fs::create_dir_all(dir).map_err(|e| EsnError::io(dir, e))?;
        Ok(dir)
    }

    fn manifest(&self, seeds: Vec<u64>, config: serde_json::Value, datasets: Vec<DatasetRecord>, outputs: &[PathBuf]) -> RunManifest {
        RunManifest {
            tool: "esn".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            argv: self.argv.clone(),
            subcommand: self.subcommand.into(),
            master_seed: self.common.seed,
            seeds,
            config,
            datasets,
            outputs: outputs
                .iter()
                .map(|p| p.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default())
                .collect(),
        }
    }

    /// Writes `<stem>.manifest.json` next to the outputs and returns all paths.
    fn finish(&self, stem: &str, manifest: RunManifest, mut outputs: Vec<PathBuf>) -> Result<Vec<PathBuf>, Failure> {
        let path = self.common.out.join(format!("{stem}.manifest.json"));
        manifest.write(&path)?;
        outputs.push(path);
        Ok(outputs)
    }
}

fn generate(ctx: &Context, a: &GenerateArgs) -> Result<Vec<PathBuf>, Failure> {
    at_least("length", a.length, if a.normalize { 2 } else { 1 })?;
    data_file(a.signal, &a.santa_fe)?;
    let seed = ctx.common.seed;
    let series = if a.normalize {
        benchmark_series(a.signal, a.length, seed, a.santa_fe.as_deref())?
    } else {
        a.signal.generate(a.length, series_seed(seed), a.santa_fe.as_deref())?
    };
    let stem = a.signal.name();
    let path = ctx.out_dir()?.join(format!("{stem}.csv"));
    series.write_csv(&path)?;
    let outputs = vec![path];
    let config = json!({"signal": a.signal, "length": a.length, "normalize": a.normalize, "series_seed": series_seed(seed)});
    let m = ctx.manifest(vec![series_seed(seed)], config, vec![DatasetRecord::of(stem, &series)], &outputs);
    ctx.finish(stem, m, outputs)
}

fn simulate(ctx: &Context, a: &SimulateArgs) -> Result<Vec<PathBuf>, Failure> {
    let (sr0, sc0) = paper_hyperparams(a.family);
    let sr = a.sr.unwrap_or(sr0);
    let scaling = a.scaling.unwrap_or(sc0);
    let n = a.n.unwrap_or(if ctx.common.paper_scale { 1000 } else { 200 });
    positive("sr", sr)?;
    non_negative("scaling", scaling)?;
    at_least("n", n, 1)?;
    at_least("length", a.length, 1)?;
    data_file(a.signal, &a.santa_fe)?;

    let series = benchmark_series(a.signal, a.washout + a.length, ctx.common.seed, a.santa_fe.as_deref())?;
    let config = ReservoirConfig::new(a.family, n, sr, scaling, child_seed(ctx.common.seed, 0));
    let res = build_reservoir(&config)?;
    let traj = res.drive_series(series.as_slice(), &res.default_initial_state(), a.washout)?;
    let max_input = series.as_slice().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let margin = res.contractivity_margin(max_input)?;

    let dir = ctx.out_dir()?;
    let traj_path = dir.join("simulate_trajectory.csv");
    write_trajectory_csv(&traj_path, &traj)?;
    let res_path = dir.join("simulate_reservoir.json");
    res.save_json(&res_path)?;
    let mut outputs = vec![traj_path, res_path];

    let delta = match a.family {
        Activation::Spherical => Some(estimate_delta(&traj, sr)?),
        _ => None,
    };
    let params = match a.family {
        Activation::Spherical => delta.map(|d| MemoryParams::Spherical { alpha: d.alpha(sr) }),
        Activation::Linear => Some(MemoryParams::Linear { rho: sr }),
        Activation::Tanh => Some(MemoryParams::Tanh { rho: sr, magnitude: scaling }),
    };
    let curve = match params.map(|p| memory_curve(&p, a.max_lag)) {
        Some(Ok(c)) => Some(c),
        Some(Err(e)) => {
            eprintln!("note: no closed-form memory curve: {e}");
            None
        }
        None => None,
    };
    if let Some(c) = &curve {
        let path = dir.join("simulate_memory_curve.csv");
        let ctx_row = CurveContext {
            sr,
            seed: config.seed,
            n,
            steps: traj.len(),
        };
        write_memory_curve_csv(&path, &[(c.clone(), ctx_row)])?;
        outputs.push(path);
    }

    let summary = json!({
        "config": config,
        "contractivity_margin": margin,
        "max_input_norm": max_input,
        "delta": delta,
        "alpha": delta.map(|d| d.alpha(sr)),
        "memory_params": curve.as_ref().map(|c| c.params),
    });
    let summary_path = dir.join("simulate_summary.json");
    let text = serde_json::to_string_pretty(&summary).map_err(|e| EsnError::Serialization(e.to_string()))? + "\n";
    fs::write(&summary_path, text).map_err(|e| EsnError::io(&summary_path, e))?;
    outputs.push(summary_path);

    let cfg = json!({"reservoir": config, "signal": a.signal, "length": a.length, "washout": a.washout, "max_lag": a.max_lag});
    let m = ctx.manifest(vec![config.seed, series_seed(ctx.common.seed)], cfg, vec![DatasetRecord::of(a.signal.name(), &series)], &outputs);
    ctx.finish("simulate", m, outputs)
}

fn lyapunov(ctx: &Context, a: &LyapunovArgs) -> Result<Vec<PathBuf>, Failure> {
    let paper = ctx.common.paper_scale;
    let sr_values = if !a.sr.is_empty() {
        a.sr.clone()
    } else if paper {
        vec![0.2, 0.5, 1.0, 2.0, 5.0, 10.0, 15.0, 20.0, 30.0, 50.0]
    } else {
        vec![0.2, 1.0, 5.0, 15.0, 50.0]
    };
    for &sr in &sr_values {
        positive("sr", sr)?;
    }
    let n = a.n.unwrap_or(if paper { 500 } else { 100 });
    let n_seeds = a.seeds.unwrap_or(10);
    let n_steps = a.steps.unwrap_or(5000);
    let transient = a.transient.unwrap_or(500.min(n_steps / 2));
    let eig_stride = a.eig_stride.unwrap_or(if paper { 1 } else { 10 });
    let n_exponents = match (a.exponents, a.all_exponents, paper) {
        (Some(k), _, _) => Some(k),
        (None, true, _) | (None, false, true) => None,
        (None, false, false) => Some(10.min(n)),
    };
    at_least("n", n, 1)?;
    at_least("seeds", n_seeds, 1)?;
    at_least("eig-stride", eig_stride, 1)?;
    require(n_steps > transient, || format!("--steps ({n_steps}) must exceed --transient ({transient})"))?;
    if let Some(k) = n_exponents {
        require((1..=n).contains(&k), || format!("--exponents must lie in 1..={n}, got {k}"))?;
    }
    let opts = LleOptions {
        n_steps,
        transient,
        eig_stride,
        form: a.jacobian,
        n_exponents,
    };

    let reports = lle_sweep_experiment(a.family, &sr_values, n, n_seeds, &opts, ctx.common.seed, ctx.common.exec())?;
    let dir = ctx.out_dir()?;
    let stem = format!("lyapunov_{}", a.family);
    let lle_path = dir.join(format!("{stem}.csv"));
    write_lle_csv(&lle_path, &reports)?;
    let spec_path = dir.join(format!("{stem}_spectrum.csv"));
    write_spectrum_csv(&spec_path, &reports)?;
    for s in summarize_lle(&reports) {
        eprintln!(
            "sr {}: local radius {:.5} ± {:.5}, qr {:.5} ± {:.5} ({} seeds)",
            s.sr, s.mean_paper, s.std_paper, s.mean_qr, s.std_qr, s.n
        );
    }
    let outputs = vec![lle_path, spec_path];
    let seeds = (0..n_seeds as u64).map(|s| child_seed(ctx.common.seed, s)).collect();
    let cfg = json!({"family": a.family, "sr_values": sr_values, "n_neurons": n, "n_seeds": n_seeds, "options": opts, "scale": ctx.common.scale()});
    let m = ctx.manifest(seeds, cfg, vec![], &outputs);
    ctx.finish(&stem, m, outputs)
}

fn memory(ctx: &Context, a: &MemoryArgs) -> Result<Vec<PathBuf>, Failure> {
    let base = if ctx.common.paper_scale { Protocol::paper() } else { Protocol::desk() };
    let protocol = Protocol {
        n_neurons: a.n.unwrap_or(base.n_neurons),
        train_len: a.train.unwrap_or(base.train_len),
        test_len: a.test.unwrap_or(base.test_len),
        washout: a.washout.unwrap_or(base.washout),
        n_runs: a.runs.unwrap_or(base.n_runs),
        tau_max: a.tau_max,
        regularization: a.ridge.resolve()?,
    };
    at_least("n", protocol.n_neurons, 1)?;
    at_least("train", protocol.train_len, 2)?;
    at_least("test", protocol.test_len, 2)?;
    at_least("runs", protocol.n_runs, 1)?;
    if let Some(sr) = a.sr {
        positive("sr", sr)?;
    }
    if let Some(sc) = a.scaling {
        non_negative("scaling", sc)?;
    }
    data_file(a.benchmark, &a.santa_fe)?;
    let families = if a.family.is_empty() { Activation::ALL.to_vec() } else { a.family.clone() };

    let series = benchmark_series(a.benchmark, protocol.series_len(), ctx.common.seed, a.santa_fe.as_deref())?;
    let mut results = Vec::new();
    let mut hyper = Vec::new();
    for &family in &families {
        let (sr0, sc0) = paper_hyperparams(family);
        let (sr, sc) = (a.sr.unwrap_or(sr0), a.scaling.unwrap_or(sc0));
        results.push(delay_memory_experiment(
            a.benchmark,
            &series,
            family,
            sr,
            sc,
            &protocol,
            ctx.common.seed,
            ctx.common.exec(),
        )?);
        hyper.push(json!({"family": family, "sr": sr, "scaling": sc}));
    }
    let stem = format!("memory_{}", a.benchmark.name());
    let path = ctx.out_dir()?.join(format!("{stem}.csv"));
    write_delay_memory_csv(&path, &results)?;
    let outputs = vec![path];
    let seeds = results[0].run_seeds.clone();
    let cfg = json!({"benchmark": a.benchmark, "families": hyper, "protocol": protocol, "scale": ctx.common.scale()});
    let m = ctx.manifest(seeds, cfg, vec![DatasetRecord::of(a.benchmark.name(), &series)], &outputs);
    ctx.finish(&stem, m, outputs)
}

fn tradeoff(ctx: &Context, a: &TradeoffArgs) -> Result<Vec<PathBuf>, Failure> {
    let paper = ctx.common.paper_scale;
    let base = if paper { SweepPlan::paper(a.family) } else { SweepPlan::desk(a.family) };
    let (sr_lo, sr_hi) = sr_range(a.family);
    let sr_min = a.sr_min.unwrap_or(sr_lo);
    let sr_max = a.sr_max.unwrap_or(sr_hi);
    let sc_min = a.scaling_min.unwrap_or(SCALING_RANGE.0);
    let sc_max = a.scaling_max.unwrap_or(SCALING_RANGE.1);
    let sr_steps = a.sr_steps.unwrap_or(base.sr_values.len());
    let sc_steps = a.scaling_steps.unwrap_or(base.scaling_values.len());
    positive("sr-min", sr_min)?;
    positive("sr-max", sr_max)?;
    require(sr_min <= sr_max, || format!("--sr-max ({sr_max}) is below --sr-min ({sr_min})"))?;
    non_negative("scaling-min", sc_min)?;
    non_negative("scaling-max", sc_max)?;
    require(sc_min <= sc_max, || format!("--scaling-max ({sc_max}) is below --scaling-min ({sc_min})"))?;
    at_least("sr-steps", sr_steps, 1)?;
    at_least("scaling-steps", sc_steps, 1)?;

    let (nu0, tau0) = default_task_grid(paper);
    let nu_grid = if a.nu.is_empty() { nu0 } else { a.nu.clone() };
    let tau_grid = if a.tau.is_empty() { tau0 } else { a.tau.clone() };
    for &nu in &nu_grid {
        positive("nu", nu)?;
    }
    let plan = SweepPlan {
        sr_values: linspace(sr_min, sr_max, sr_steps),
        scaling_values: linspace(sc_min, sc_max, sc_steps),
        n_seeds: a.seeds.unwrap_or(base.n_seeds),
        n_neurons: a.n.unwrap_or(base.n_neurons),
        train_len: a.train.unwrap_or(base.train_len),
        test_len: a.test.unwrap_or(base.test_len),
        washout: a.washout.unwrap_or(base.washout),
        regularization: a.ridge.resolve()?,
    };
    at_least("seeds", plan.n_seeds, 1)?;
    at_least("n", plan.n_neurons, 1)?;
    at_least("train", plan.train_len, 2)?;
    at_least("test", plan.test_len, 2)?;

    let result = tradeoff_grid_experiment(a.family, &nu_grid, &tau_grid, &plan, ctx.common.seed, ctx.common.exec())?;
    for &(i, j) in &result.flagged {
        eprintln!("warning: every configuration failed at nu = {}, tau = {}", nu_grid[i], tau_grid[j]);
    }
    let stem = format!("tradeoff_{}", a.family);
    let path = ctx.out_dir()?.join(format!("{stem}.csv"));
    write_tradeoff_csv(&path, std::slice::from_ref(&result))?;
    let outputs = vec![path];
    let seeds = (0..plan.n_seeds as u64).map(|s| child_seed(ctx.common.seed, s)).collect();
    let cfg = json!({
        "family": a.family,
        "nu_grid": nu_grid,
        "tau_grid": tau_grid,
        "plan": plan,
        "flagged": result.flagged,
        "scale": ctx.common.scale(),
    });
    let m = ctx.manifest(seeds, cfg, vec![], &outputs);
    ctx.finish(&stem, m, outputs)
}
