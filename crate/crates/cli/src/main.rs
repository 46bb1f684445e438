mod input;
mod render;

use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use injbound::ball::{AscentConfig, NormOrder, DEFAULT_SEED};
use injbound::bounds::{
    corollary2_bound, latala_moment_bound, matrix_case_bound, optimize_beta, symmetric_corollary_bound,
    theorem1_bound, BoundQuery, DEFAULT_MATRIX_CONSTANT,
};
use injbound::checks::{run_suite, Suite, SuiteConfig};
use injbound::estimate::{Estimator, Verdict};
use injbound::mc::{chaos_moment_estimate, compare_bounds_report, mc_injective_mean, DEFAULT_MOMENT_TRIALS};
use injbound::tensor::DenseTensor;
use injbound::variance::{compute_profile, ProfileKind, RandomTensorModel};

use render::{Format, Header};

/// Oracle search cap of the CLI: large enough for the desk-scale
/// instances, small enough to answer in seconds.
const CLI_ORACLE_CAP: f64 = 1e6;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("cannot read {}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{}: parse error at byte {offset} (line {line}, column {column}): {message}", path.display())]
    Parse {
        path: PathBuf,
        offset: usize,
        line: usize,
        column: usize,
        message: String,
    },
    #[error(transparent)]
    Core(#[from] injbound::Error),
    #[error("writing output failed: {0}")]
    Output(#[from] io::Error),
}

#[derive(Parser)]
#[command(name = "injbound", version, about = "Injective-norm bounds for random tensors")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Bound E‖T‖ from the variance parameters of a model.
    Bound(BoundArgs),
    /// Monte Carlo mean of the injective norm of a model.
    Estimate(EstimateArgs),
    /// Monte Carlo mean against the optimized and corollary bounds.
    Compare(CompareArgs),
    /// Gaussian chaos moment of a tensor against the partition-norm bound.
    Chaos(ChaosArgs),
    /// Run the seeded identity and inequality suites.
    Check(CheckArgs),
}

#[derive(Args, Clone)]
struct AscentArgs {
    /// Ascent restarts per supremum.
    #[arg(long, default_value_t = 32)]
    restarts: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
}

impl AscentArgs {
    fn config(&self) -> Result<AscentConfig, CliError> {
        let cfg = AscentConfig::default().with_restarts(self.restarts).with_seed(self.seed);
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum EstimatorKind {
    /// Exhaustive oracle when it fits the cap, ascent otherwise.
    Oracle,
    /// Block ascent only.
    Ascent,
}

#[derive(Args, Clone)]
struct EstimatorArgs {
    #[arg(long, value_enum, default_value_t = EstimatorKind::Oracle)]
    estimator: EstimatorKind,
    /// Sphere grid resolution of the oracle.
    #[arg(long, default_value_t = 64)]
    resolution: usize,
    /// Largest oracle search, in candidate points.
    #[arg(long, default_value_t = CLI_ORACLE_CAP)]
    oracle_cap: f64,
}

impl EstimatorArgs {
    fn build(&self, cfg: AscentConfig) -> Estimator {
        match self.estimator {
            EstimatorKind::Ascent => Estimator::Ascent(cfg),
            EstimatorKind::Oracle => Estimator::Oracle {
                resolution: self.resolution,
                cap: self.oracle_cap,
                fallback: cfg,
            },
        }
    }

    fn describe(&self, header: &mut Header) {
        header.set(
            "estimator",
            match self.estimator {
                EstimatorKind::Oracle => "oracle",
                EstimatorKind::Ascent => "ascent",
            },
        );
        header.set("resolution", self.resolution);
        header.set("oracle_cap", self.oracle_cap);
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BoundKindArg {
    Thm1,
    Cor2,
    Cor4,
    Matrix,
}

#[derive(Args)]
struct BoundArgs {
    #[arg(long)]
    model: PathBuf,
    /// Norm order, a number >= 2 or `inf`.
    #[arg(long, default_value = "2")]
    p: NormOrder,
    #[arg(long, value_enum, default_value_t = BoundKindArg::Thm1)]
    bound: BoundKindArg,
    #[arg(long, conflicts_with = "optimize_beta")]
    beta: Option<f64>,
    #[arg(long)]
    optimize_beta: bool,
    /// Constant of the matrix-case bound.
    #[arg(long)]
    cr: Option<f64>,
    #[command(flatten)]
    ascent: AscentArgs,
    #[command(flatten)]
    estimator: EstimatorArgs,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    format: Format,
}

#[derive(Args)]
struct EstimateArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long, default_value = "2")]
    p: NormOrder,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[command(flatten)]
    ascent: AscentArgs,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    format: Format,
}

#[derive(Args)]
struct CompareArgs {
    /// Model files; one output row each.
    #[arg(long, required = true, num_args = 1..)]
    model: Vec<PathBuf>,
    #[arg(long, default_value = "2")]
    p: NormOrder,
    #[arg(long, default_value_t = 200)]
    trials: usize,
    #[command(flatten)]
    ascent: AscentArgs,
    #[command(flatten)]
    estimator: EstimatorArgs,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    format: Format,
}

#[derive(Args)]
struct ChaosArgs {
    #[arg(long)]
    tensor: PathBuf,
    /// Moment order of the chaos, >= 2 (unrelated to the norm order).
    #[arg(long)]
    moment_p: f64,
    #[arg(long, default_value_t = DEFAULT_MOMENT_TRIALS)]
    trials: usize,
    /// Constant multiplying the partition-norm sum.
    #[arg(long, default_value_t = 1.0)]
    cr: f64,
    #[command(flatten)]
    ascent: AscentArgs,
    #[command(flatten)]
    estimator: EstimatorArgs,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    format: Format,
}

#[derive(Args)]
struct CheckArgs {
    /// Suite name (prop21, prop22, prop31, appendixA, appendixB) or `all`.
    #[arg(long, default_value = "all")]
    suite: String,
    /// Instances per suite; each suite has its own default.
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Monte Carlo samples per second-moment instance.
    #[arg(long)]
    mc_samples: Option<usize>,
    /// Random posteriors per Donsker–Varadhan instance.
    #[arg(long)]
    probes: Option<usize>,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    format: Format,
}

fn header(command: &str, p: Option<NormOrder>, ascent: Option<&AscentArgs>) -> Header {
    let mut h = Header::new(command);
    if let Some(p) = p {
        h.set("p", p.to_string());
    }
    if let Some(a) = ascent {
        let defaults = AscentConfig::default();
        h.set("seed", a.seed);
        h.set("restarts", a.restarts);
        h.set("max_iters", defaults.max_iters);
        h.set("rel_tol", defaults.rel_tol);
    }
    h
}

fn load_model(path: &PathBuf) -> Result<RandomTensorModel, CliError> {
    input::load_json(path)
}

fn run_bound(args: &BoundArgs, out: &mut dyn Write) -> Result<ExitCode, CliError> {
    let model = load_model(&args.model)?;
    let cfg = args.ascent.config()?;
    let estimator = args.estimator.build(cfg);
    let mut h = header("bound", Some(args.p), Some(&args.ascent));
    args.estimator.describe(&mut h);
    h.set("model", args.model.display().to_string());
    if args.bound != BoundKindArg::Thm1 && (args.beta.is_some() || args.optimize_beta) {
        return Err(CliError::Usage(
            "--beta and --optimize-beta only apply to --bound thm1".into(),
        ));
    }
    if args.bound != BoundKindArg::Matrix && args.cr.is_some() {
        return Err(CliError::Usage("--cr only applies to --bound matrix".into()));
    }
    let report: Value = match args.bound {
        BoundKindArg::Thm1 | BoundKindArg::Cor2 => {
            let profile = compute_profile(&model, args.p, ProfileKind::Def11, &estimator)?;
            let q = BoundQuery::new(profile.clone(), model.shape().to_vec())?;
            let report = match (args.bound, args.beta, args.optimize_beta) {
                (BoundKindArg::Cor2, _, _) => corollary2_bound(&q)?,
                (_, Some(beta), _) => theorem1_bound(&q.with_beta(beta)?)?,
                (_, None, true) => optimize_beta(&q)?,
                (_, None, false) => {
                    return Err(CliError::Usage(
                        "--bound thm1 needs --beta or --optimize-beta".into(),
                    ))
                }
            };
            h.set("bound", if args.bound == BoundKindArg::Cor2 { "cor2" } else { "thm1" });
            json!({"profile": profile, "bound": report})
        }
        BoundKindArg::Cor4 => {
            h.set("bound", "cor4");
            json!({"bound": symmetric_corollary_bound(&model, args.p, &estimator)?})
        }
        BoundKindArg::Matrix => {
            if args.p != NormOrder::TWO {
                return Err(CliError::Usage("the matrix-case bound is for p = 2".into()));
            }
            let c = args.cr.unwrap_or(DEFAULT_MATRIX_CONSTANT);
            h.set("bound", "matrix");
            h.set("cr", c);
            json!({"matrix_case": matrix_case_bound(&model, c, &estimator)?})
        }
    };
    render::emit(out, args.format, &h, &report)?;
    Ok(ExitCode::SUCCESS)
}

fn run_estimate(args: &EstimateArgs, out: &mut dyn Write) -> Result<ExitCode, CliError> {
    let model = load_model(&args.model)?;
    let cfg = args.ascent.config()?;
    let mut h = header("estimate", Some(args.p), Some(&args.ascent));
    h.set("model", args.model.display().to_string());
    h.set("trials", args.trials);
    let est = mc_injective_mean(&model, args.p, args.trials, &cfg, args.ascent.seed)?;
    let report = json!({"estimate": est, "provenance": "empirical"});
    render::emit(out, args.format, &h, &report)?;
    Ok(ExitCode::SUCCESS)
}

fn run_compare(args: &CompareArgs, out: &mut dyn Write) -> Result<ExitCode, CliError> {
    let cfg = args.ascent.config()?;
    let estimator = args.estimator.build(cfg);
    let mut h = header("compare", Some(args.p), Some(&args.ascent));
    args.estimator.describe(&mut h);
    h.set("trials", args.trials);
    let mut rows = Vec::new();
    for path in &args.model {
        let model = load_model(path)?;
        rows.push(compare_bounds_report(
            &input::model_id(path),
            &model,
            args.p,
            args.trials,
            &estimator,
            args.ascent.seed,
        )?);
    }
    render::emit_comparisons(out, args.format, &h, &rows)?;
    Ok(if rows.iter().any(|r| r.contract == Verdict::Fails) {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    })
}

fn run_chaos(args: &ChaosArgs, out: &mut dyn Write) -> Result<ExitCode, CliError> {
    let tensor: DenseTensor = input::load_json(&args.tensor)?;
    let cfg = args.ascent.config()?;
    let estimator = args.estimator.build(cfg);
    let mut h = header("chaos", None, Some(&args.ascent));
    args.estimator.describe(&mut h);
    h.set("tensor", args.tensor.display().to_string());
    h.set("moment_p", args.moment_p);
    h.set("trials", args.trials);
    h.set("cr", args.cr);
    let moment = chaos_moment_estimate(&tensor, args.moment_p, args.trials, args.ascent.seed)?;
    let bound = latala_moment_bound(&tensor, args.moment_p, args.cr, &estimator)?;
    let report = json!({
        "moment": moment,
        "moment_provenance": "empirical",
        "latala_bound": bound,
    });
    render::emit(out, args.format, &h, &report)?;
    Ok(ExitCode::SUCCESS)
}

fn run_check(args: &CheckArgs, out: &mut dyn Write) -> Result<ExitCode, CliError> {
    let suites: Vec<Suite> = if args.suite.eq_ignore_ascii_case("all") {
        Suite::ALL.to_vec()
    } else {
        vec![args.suite.parse()?]
    };
    let mut h = Header::new("check");
    h.set("seed", args.seed);
    let mut reports = Vec::new();
    for suite in suites {
        let mut cfg = SuiteConfig::new(suite, args.seed);
        if let Some(n) = args.samples {
            cfg.samples = n;
        }
        if let Some(n) = args.mc_samples {
            cfg.mc_samples = n;
        }
        if let Some(n) = args.probes {
            cfg.probes = n;
        }
        reports.push(run_suite(suite, &cfg)?);
    }
    render::emit_checks(out, args.format, &h, &reports)?;
    Ok(if reports.iter().all(|r| r.passed()) {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let stdout = io::stdout();
    let mut out = stdout.lock();
    let result = match &cli.command {
        Command::Bound(a) => run_bound(a, &mut out),
        Command::Estimate(a) => run_estimate(a, &mut out),
        Command::Compare(a) => run_compare(a, &mut out),
        Command::Chaos(a) => run_chaos(a, &mut out),
        Command::Check(a) => run_check(a, &mut out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = out.flush();
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
