//! `alpha-flow` command-line interface.
//!
//! Exit codes: 0 on success, 1 for invalid input (flags, files, ranges), 2
//! for numerical failures and failed verification.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use alpha_flow::alpha::{to_alpha_rep, AlphaParam};
use alpha_flow::eval::{self, DEFAULT_BANDWIDTH, DEFAULT_KL_FLOOR, DEFAULT_RESOLUTION};
use alpha_flow::flow::{self, Baseline, FlowConfig, FlowModel};
use alpha_flow::geodesic::{GeodesicCurve, TauOptions};
use alpha_flow::io::{read_points_csv, write_curve_table, write_points_csv};
use alpha_flow::manifold::{clamp_normalize, SimplexPoint, DEFAULT_CLAMP_EPS};
use alpha_flow::rng::RngState;
use alpha_flow::verify;
use alpha_flow::{Error, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

/// Smallest clamp applied when reading sample sets for evaluation; rows only
/// need to be strictly positive for the KDE.
const EVAL_READ_EPS: f64 = 1e-12;

#[derive(Parser, Debug)]
#[command(name = "alpha-flow", version, about = "Alpha-geometry flows on the probability simplex")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train a flow model on a CSV of distributions.
    Train(TrainArgs),
    /// Draw samples from a trained model.
    Sample(SampleArgs),
    /// Tabulate the geodesic between two distributions.
    Geodesic(GeodesicArgs),
    /// KDE KL divergence between a data set and generated samples on the 2-simplex.
    EvalKde(EvalArgs),
    /// Run a property verification suite.
    Verify(VerifyArgs),
    /// Write a Swiss-roll data set on the 2-simplex.
    SwissRoll(SwissRollArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum BaselineArg {
    AlphaFlow,
    Linear,
}

impl From<BaselineArg> for Baseline {
    fn from(b: BaselineArg) -> Self {
        match b {
            BaselineArg::AlphaFlow => Baseline::AlphaFlow,
            BaselineArg::Linear => Baseline::Linear,
        }
    }
}

/// Training and sampling settings; flags override a `--config` file.
#[derive(Args, Debug)]
struct FlowFlags {
    /// JSON file with any subset of the configuration fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    /// Euler steps of the sampler.
    #[arg(long)]
    steps: Option<usize>,
    /// Euler steps of the interpolation reparameterization.
    #[arg(long)]
    tau_steps: Option<usize>,
    /// Euler steps of the per-step reparameterization during sampling.
    #[arg(long)]
    sample_tau_steps: Option<usize>,
    /// Hidden layer widths, e.g. `256,256`.
    #[arg(long, value_delimiter = ',')]
    hidden: Option<Vec<usize>>,
    #[arg(long, value_enum)]
    baseline: Option<BaselineArg>,
}

impl FlowFlags {
    fn apply(&self, mut cfg: FlowConfig) -> Result<FlowConfig> {
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path)?;
            cfg = serde_json::from_str(&text)?;
        }
        if let Some(a) = self.alpha {
            AlphaParam::new(a)?;
            cfg.alpha = a;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.epochs {
            cfg.epochs = v;
        }
        if let Some(v) = self.lr {
            cfg.learning_rate = v;
        }
        if let Some(v) = self.steps {
            cfg.euler_steps_sample = v;
        }
        if let Some(v) = self.tau_steps {
            cfg.tau_steps = v;
        }
        if let Some(v) = self.sample_tau_steps {
            cfg.sample_tau_steps = v;
        }
        if let Some(v) = &self.hidden {
            cfg.hidden = v.clone();
        }
        if let Some(v) = self.baseline {
            cfg.baseline = v.into();
        }
        Ok(cfg)
    }
}

#[derive(Args, Debug)]
struct TrainArgs {
    /// CSV of training distributions, one row per point.
    #[arg(long)]
    data: PathBuf,
    /// Output model JSON; the loss history goes to `<out>.history.csv`.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    flow: FlowFlags,
}

#[derive(Args, Debug)]
struct SampleArgs {
    #[arg(long)]
    model: PathBuf,
    /// Number of samples.
    #[arg(long = "n", alias = "count", default_value_t = 1000)]
    count: usize,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Euler steps; defaults to the model's configuration.
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    sample_tau_steps: Option<usize>,
}

#[derive(Args, Debug)]
struct GeodesicArgs {
    #[arg(long, allow_hyphen_values = true)]
    alpha: f64,
    /// Start distribution, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    mu0: Vec<f64>,
    /// End distribution, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    mu1: Vec<f64>,
    #[arg(long, default_value_t = 101)]
    points: usize,
    #[arg(long, default_value_t = alpha_flow::reparam::DEFAULT_TAU_STEPS)]
    tau_steps: usize,
    /// Lower clamp for endpoints with zero entries.
    #[arg(long, default_value_t = DEFAULT_CLAMP_EPS)]
    clamp_eps: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    generated: PathBuf,
    #[arg(long, default_value_t = DEFAULT_BANDWIDTH)]
    bandwidth: f64,
    /// Grid resolution per simplex edge.
    #[arg(long, default_value_t = DEFAULT_RESOLUTION)]
    grid: usize,
    #[arg(long, default_value_t = DEFAULT_KL_FLOOR)]
    floor: f64,
    /// Report JSON; printed to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// `core` (seconds) or `full` (acceptance-sized checks).
    #[arg(long, default_value = "core")]
    suite: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Report JSON; printed to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SwissRollArgs {
    #[arg(long = "n", alias = "count", default_value_t = 10_000)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

/// Record of one invocation, written next to its primary output.
#[derive(Serialize)]
struct RunManifest {
    command: &'static str,
    config: Value,
    seed: Option<u64>,
    version: &'static str,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
    duration_secs: f64,
    summary: Value,
}

struct RunResult {
    config: Value,
    seed: Option<u64>,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
    summary: Value,
    /// Primary output next to which the manifest is written.
    anchor: Option<PathBuf>,
    /// Nonzero when the run completed but its checks failed.
    failed: bool,
}

fn manifest_path(anchor: &Path) -> PathBuf {
    let mut s = anchor.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

fn train(args: TrainArgs) -> Result<RunResult> {
    let cfg = args.flow.apply(FlowConfig::default())?;
    AlphaParam::new(cfg.alpha)?;
    let data = read_points_csv(&args.data, cfg.clamp_eps)?;
    cfg.validate(data[0].dim())?;
    let epochs = cfg.epochs;
    let out = flow::train_with_progress(&data, &cfg, |epoch, loss| {
        if epoch % 100 == 0 || epoch + 1 == epochs {
            eprintln!("epoch {epoch:>5}  loss {loss:.6}");
        }
    })?;
    out.model.save(&args.out)?;
    let history_path = with_suffix(&args.out, ".history.csv");
    let mut history = String::from("epoch,loss\n");
    for (i, l) in out.history.iter().enumerate() {
        history.push_str(&format!("{i},{l:.16e}\n"));
    }
    std::fs::write(&history_path, history)?;
    Ok(RunResult {
        config: serde_json::to_value(&cfg)?,
        seed: Some(cfg.seed),
        inputs: vec![args.data],
        outputs: vec![args.out.clone(), history_path],
        summary: json!({
            "points": data.len(),
            "final_loss": out.history.last(),
            "first_loss": out.history.first(),
        }),
        anchor: Some(args.out),
        failed: false,
    })
}

fn sample(args: SampleArgs) -> Result<RunResult> {
    let model = FlowModel::load(&args.model)?;
    let mut cfg = model.config.clone();
    if let Some(v) = args.steps {
        cfg.euler_steps_sample = v;
    }
    if let Some(v) = args.sample_tau_steps {
        cfg.sample_tau_steps = v;
    }
    if args.count == 0 {
        return Err(Error::InvalidArgument("sample count must be positive".into()));
    }
    let out = flow::sample(&model, &cfg, model.n(), args.count, &RngState::new(args.seed))?;
    if out.clamp_activations > 0 {
        eprintln!(
            "warning: {} Euler steps left the simplex and were clamped back",
            out.clamp_activations
        );
    }
    write_points_csv(&args.out, &out.points)?;
    Ok(RunResult {
        config: json!({
            "model_config": cfg,
            "count": args.count,
        }),
        seed: Some(args.seed),
        inputs: vec![args.model],
        outputs: vec![args.out.clone()],
        summary: json!({ "clamp_activations": out.clamp_activations }),
        anchor: Some(args.out),
        failed: false,
    })
}

fn endpoint(raw: &[f64], eps: f64, name: &str) -> Result<SimplexPoint> {
    if raw.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::InvalidArgument(format!("{name} must have finite nonnegative entries")));
    }
    let sum: f64 = raw.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!("{name} sums to {sum}, expected 1")));
    }
    if raw.iter().all(|v| *v > 0.0) {
        return SimplexPoint::normalized(raw.to_vec());
    }
    eprintln!("note: {name} has zero entries; clamping at {eps}");
    clamp_normalize(raw, eps)
}

fn geodesic(args: GeodesicArgs) -> Result<RunResult> {
    let alpha = AlphaParam::new(args.alpha)?;
    let mu0 = endpoint(&args.mu0, args.clamp_eps, "mu0")?;
    let mu1 = endpoint(&args.mu1, args.clamp_eps, "mu1")?;
    let curve = GeodesicCurve::new(
        to_alpha_rep(&mu0, alpha),
        to_alpha_rep(&mu1, alpha),
        TauOptions::with_steps(args.tau_steps),
    )?;
    write_curve_table(&curve, args.points, &args.out)?;
    Ok(RunResult {
        config: json!({
            "alpha": args.alpha,
            "mu0": args.mu0,
            "mu1": args.mu1,
            "points": args.points,
            "tau_steps": args.tau_steps,
            "clamp_eps": args.clamp_eps,
        }),
        seed: None,
        inputs: vec![],
        outputs: vec![args.out.clone()],
        summary: json!({ "tau_dot0": curve.reparam().map(|r| r.tau_dot0()) }),
        anchor: Some(args.out),
        failed: false,
    })
}

fn eval_kde(args: EvalArgs) -> Result<RunResult> {
    let data = read_points_csv(&args.data, EVAL_READ_EPS)?;
    let generated = read_points_csv(&args.generated, EVAL_READ_EPS)?;
    let report = eval::kde_compare(&data, &generated, args.bandwidth, args.grid, args.floor)?;
    match &args.out {
        Some(path) => write_json(path, &report)?,
        None => println!("{}", serde_json::to_string_pretty(&report)?),
    }
    Ok(RunResult {
        config: json!({
            "bandwidth": args.bandwidth,
            "grid": args.grid,
            "floor": args.floor,
        }),
        seed: None,
        inputs: vec![args.data, args.generated],
        outputs: args.out.iter().cloned().collect(),
        summary: json!({ "kl": report.kl }),
        anchor: args.out,
        failed: false,
    })
}

fn run_verify(args: VerifyArgs) -> Result<RunResult> {
    let report = verify::run_suite(&args.suite, args.seed)?;
    for c in report.checks.iter().filter(|c| !c.passed) {
        eprintln!("FAILED {} worst={:e} tolerance={:e}", c.name, c.worst, c.tolerance);
    }
    match &args.out {
        Some(path) => write_json(path, &report)?,
        None => println!("{}", serde_json::to_string_pretty(&report)?),
    }
    let failed = report.checks.iter().filter(|c| !c.passed).count();
    Ok(RunResult {
        config: json!({ "suite": args.suite }),
        seed: Some(args.seed),
        inputs: vec![],
        outputs: args.out.iter().cloned().collect(),
        summary: json!({ "checks": report.checks.len(), "failed": failed }),
        anchor: args.out,
        failed: !report.passed,
    })
}

fn swiss_roll(args: SwissRollArgs) -> Result<RunResult> {
    let points = eval::swiss_roll_simplex(args.count, &mut RngState::new(args.seed))?;
    write_points_csv(&args.out, &points)?;
    Ok(RunResult {
        config: json!({ "count": args.count }),
        seed: Some(args.seed),
        inputs: vec![],
        outputs: vec![args.out.clone()],
        summary: Value::Null,
        anchor: Some(args.out),
        failed: false,
    })
}

fn dispatch(command: Command) -> (&'static str, Result<RunResult>) {
    match command {
        Command::Train(a) => ("train", train(a)),
        Command::Sample(a) => ("sample", sample(a)),
        Command::Geodesic(a) => ("geodesic", geodesic(a)),
        Command::EvalKde(a) => ("eval-kde", eval_kde(a)),
        Command::Verify(a) => ("verify", run_verify(a)),
        Command::SwissRoll(a) => ("swiss-roll", swiss_roll(a)),
    }
}

fn exit_code(e: &Error) -> u8 {
    if e.is_numerical() {
        2
    } else {
        1
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let start = Instant::now();
    let (command, result) = dispatch(cli.command);
    let run = match result {
        Ok(run) => run,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(exit_code(&e));
        }
    };
    let manifest = RunManifest {
        command,
        config: run.config,
        seed: run.seed,
        version: env!("CARGO_PKG_VERSION"),
        inputs: run.inputs,
        outputs: run.outputs,
        duration_secs: start.elapsed().as_secs_f64(),
        summary: run.summary,
    };
    let written = match &run.anchor {
        Some(anchor) => write_json(&manifest_path(anchor), &manifest),
        None => serde_json::to_string_pretty(&manifest)
            .map(|text| eprintln!("{text}"))
            .map_err(Error::from),
    };
    if let Err(e) = written {
        eprintln!("error: could not write manifest: {e}");
        return ExitCode::from(1);
    }
    if run.failed {
        ExitCode::from(2)
    } else {
        ExitCode::SUCCESS
    }
}
