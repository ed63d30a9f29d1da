//! The `lossprior` command-line tool.
//!
//! Exit codes: 0 on success, 1 when `verify-kl` finds counterexamples, 2 for
//! invalid input or flags, 3 for numerical failures.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::data::{builtin, load_csv, Dataset, Transform};
use crate::error::{Error, Result};
use crate::kl::{check_gradients, verify_min_kl, GradientCheck, KlReport};
use crate::marginal::{RhoRule, RobustPrior};
use crate::posterior::ModelScores;
use crate::priors::PriorSpec;
use crate::quadrature::QuadratureConfig;
use crate::report::{prior_curve_csv, Analysis, DatasetInfo, OutputEnvelope};
use crate::robustness::{
    boxplot_csv, histogram_csv, records_csv, run_robustness, summarize, RobustnessConfig, SubsampleSize,
};
use crate::sim::{
    mse_series_csv, standard_grid, run_grid, table_csv, SimCase, SimConfig, DESK_REPLICATES, FULL_REPLICATES,
    SIM_QUADRATURE,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_COUNTEREXAMPLE: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "lossprior", version, about = "Exact Bayesian variable selection with objective model priors")]
struct Cli {
    /// Worker threads (results do not depend on it).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Posterior summaries and top models for one dataset.
    Analyze(AnalyzeArgs),
    /// Frequentist study of the model-size posterior.
    Simulate(SimulateArgs),
    /// Repeated analyses on random subsamples.
    Robustness(RobustnessArgs),
    /// Per-model prior mass by model size.
    PriorCurve(PriorCurveArgs),
    /// Random checks of the KL projection between linear models.
    VerifyKl(VerifyKlArgs),
}

#[derive(Debug, Args)]
struct DataArgs {
    /// CSV file with a header row.
    #[arg(long, conflicts_with = "builtin", required_unless_present = "builtin")]
    data: Option<PathBuf>,
    /// Packaged dataset: hald, uscrime or uscrime-log.
    #[arg(long)]
    builtin: Option<String>,
    /// Response column (required with --data).
    #[arg(long)]
    response: Option<String>,
    /// Transform applied while loading --data.
    #[arg(long, default_value = "none")]
    transform: String,
}

impl DataArgs {
    fn load(&self) -> Result<Dataset> {
        match (&self.data, &self.builtin) {
            (Some(path), None) => {
                let response = self
                    .response
                    .as_deref()
                    .ok_or_else(|| Error::invalid("--response", "required with --data"))?;
                let transform: Transform = self.transform.parse()?;
                load_csv(path, response, transform)
            }
            (None, Some(name)) => builtin(name),
            _ => Err(Error::invalid("--data/--builtin", "give exactly one data source")),
        }
    }
}

#[derive(Debug, Args)]
struct RobustArgs {
    /// Robust prior shape a.
    #[arg(long, default_value_t = 0.5)]
    a: f64,
    /// Robust prior offset b.
    #[arg(long, default_value_t = 1.0)]
    b: f64,
    /// rho: "auto" (1/(k+1) per model), "full" (1/(d+1)) or a number.
    #[arg(long, default_value = "auto")]
    rho: String,
    /// Gauss-Legendre nodes per panel.
    #[arg(long)]
    nodes: Option<usize>,
    /// Refinement tolerance on the log Bayes factor.
    #[arg(long)]
    rtol: Option<f64>,
}

impl RobustArgs {
    fn prior(&self) -> Result<RobustPrior> {
        let rho = match self.rho.as_str() {
            "auto" => RhoRule::ModelSize,
            "full" => RhoRule::FullModel,
            other => RhoRule::Fixed(
                other
                    .parse()
                    .map_err(|_| Error::invalid("--rho", format!("'{other}' is not auto, full or a number")))?,
            ),
        };
        if !(self.a > 0.0) || !(self.b > 0.0) {
            return Err(Error::invalid("--a/--b", "must be positive"));
        }
        Ok(RobustPrior {
            a: self.a,
            b: self.b,
            rho,
        })
    }

    fn quadrature(&self, default: QuadratureConfig) -> Result<QuadratureConfig> {
        let q = QuadratureConfig {
            nodes: self.nodes.unwrap_or(default.nodes),
            rtol: self.rtol.unwrap_or(default.rtol),
            ..default
        };
        q.validate()?;
        Ok(q)
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PriorKind {
    Uniform,
    #[value(alias = "scott-berger")]
    Sb,
    Loss,
}

fn prior_spec(kind: PriorKind, c: f64) -> Result<PriorSpec> {
    match kind {
        PriorKind::Uniform => Ok(PriorSpec::Uniform),
        PriorKind::Sb => Ok(PriorSpec::ScottBerger),
        PriorKind::Loss => {
            if !(c > 0.0 && c.is_finite()) {
                return Err(Error::invalid(
                    "--c",
                    format!("{c}: c must be positive (c = 0 is the uniform prior, use --prior uniform)"),
                ));
            }
            PriorSpec::loss(c)
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, value_enum, default_value = "loss")]
    prior: PriorKind,
    /// Loss prior complexity weight.
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    #[command(flatten)]
    robust: RobustArgs,
    /// Number of top models to list.
    #[arg(long, default_value_t = 20)]
    top: usize,
    #[arg(long, value_enum, default_value = "json")]
    out: Format,
    /// Write here instead of standard output.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long, required_unless_present = "grid")]
    n: Option<usize>,
    #[arg(long, required_unless_present = "grid")]
    d: Option<usize>,
    #[arg(long, required_unless_present = "grid")]
    omega: Option<f64>,
    /// Replicates per case.
    #[arg(long, default_value_t = DESK_REPLICATES)]
    reps: usize,
    /// Full-scale run (overrides --reps).
    #[arg(long)]
    full: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Run all 36 grid cases; --n, --d and --omega are ignored.
    #[arg(long)]
    grid: bool,
    /// Loss prior complexity weight.
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    #[command(flatten)]
    robust: RobustArgs,
    /// Table CSV (standard output when absent).
    #[arg(long)]
    out: Option<PathBuf>,
    /// CSV of MSE of the posterior mean per case and prior.
    #[arg(long)]
    series: Option<PathBuf>,
    /// JSON envelope with the full results.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct RobustnessArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Subsample fraction; defaults to 0.85, or 10 and 40 rows for the
    /// packaged hald and uscrime data.
    #[arg(long, conflicts_with = "size")]
    frac: Option<f64>,
    /// Subsample row count.
    #[arg(long)]
    size: Option<usize>,
    #[arg(long, default_value_t = 500)]
    reps: usize,
    /// Loss prior weights, comma separated.
    #[arg(long, default_value = "0.5,1.0,1.5,2.0")]
    c_list: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    robust: RobustArgs,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct PriorCurveArgs {
    #[arg(long, default_value_t = 30)]
    d: usize,
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct VerifyKlArgs {
    #[arg(long, default_value_t = 200)]
    trials: usize,
    #[arg(long, default_value_t = 20)]
    n: usize,
    #[arg(long, default_value_t = 6)]
    d: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    /// Instances for the finite-difference gradient check.
    #[arg(long, default_value_t = 50)]
    gradient_checks: usize,
    /// Give these trial indices a rank-deficient target design.
    #[arg(long, value_delimiter = ',', hide = true)]
    inject_rank_deficient: Vec<usize>,
    #[arg(long)]
    json: Option<PathBuf>,
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_INVALID,
            };
        }
    };
    let echo = command_echo(&args);
    let outcome = match cli.threads {
        Some(0) => Err(Error::invalid("--threads", "must be at least 1")),
        Some(t) => match rayon::ThreadPoolBuilder::new().num_threads(t).build() {
            Ok(pool) => pool.install(|| dispatch(cli.command, echo)),
            Err(e) => Err(Error::invalid("--threads", e.to_string())),
        },
        None => dispatch(cli.command, echo),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_numerical() {
                EXIT_NUMERICAL
            } else {
                EXIT_INVALID
            }
        }
    }
}

/// The command line minus the program name and any thread setting.
fn command_echo(args: &[OsString]) -> Vec<String> {
    let mut out = Vec::new();
    let mut skip = false;
    for a in args.iter().skip(1) {
        let a = a.to_string_lossy().into_owned();
        if skip {
            skip = false;
        } else if a == "--threads" {
            skip = true;
        } else if !a.starts_with("--threads=") {
            out.push(a);
        }
    }
    out
}

fn dispatch(command: Command, echo: Vec<String>) -> Result<i32> {
    match command {
        Command::Analyze(a) => analyze(a, echo),
        Command::Simulate(a) => simulate(a, echo),
        Command::Robustness(a) => robustness(a, echo),
        Command::PriorCurve(a) => prior_curve(a),
        Command::VerifyKl(a) => verify_kl(a, echo),
    }
}

fn emit(path: Option<&Path>, content: &str) -> Result<()> {
    match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            std::fs::write(p, content)?;
        }
        None => print!("{content}"),
    }
    Ok(())
}

fn analyze(args: AnalyzeArgs, echo: Vec<String>) -> Result<i32> {
    let spec = prior_spec(args.prior, args.c)?;
    let robust = args.robust.prior()?;
    let q = args.robust.quadrature(QuadratureConfig::default())?;
    let ds = args.data.load()?;
    let analysis = Analysis::run(&ds, spec, &robust, &q, args.top)?;
    let content = match args.out {
        Format::Json => OutputEnvelope::new(echo, vec![], Some(DatasetInfo::from(&ds)), analysis).to_json(),
        Format::Csv => analysis.to_csv(),
    };
    emit(args.output.as_deref(), &content)?;
    Ok(EXIT_OK)
}

fn simulate(args: SimulateArgs, echo: Vec<String>) -> Result<i32> {
    let reps = if args.full { FULL_REPLICATES } else { args.reps };
    let cases = if args.grid {
        standard_grid(reps, args.seed)
    } else {
        let (n, d, omega) = (args.n.unwrap_or(0), args.d.unwrap_or(0), args.omega.unwrap_or(0.0));
        vec![SimCase::new(n, d, omega, reps, args.seed)?]
    };
    cases.iter().try_for_each(SimCase::validate)?;
    let cfg = SimConfig {
        robust: args.robust.prior()?,
        quadrature: args.robust.quadrature(SIM_QUADRATURE)?,
        priors: vec![PriorSpec::Uniform, PriorSpec::ScottBerger, prior_spec(PriorKind::Loss, args.c)?],
    };
    let total = cases.len();
    let mut done = 0;
    let results = run_grid(&cases, &cfg, |r| {
        done += 1;
        if total > 1 {
            eprintln!("case {done}/{total}: n = {}, d = {}, omega = {}", r.case.n, r.case.d, r.case.omega);
        }
    })?;
    emit(args.out.as_deref(), &table_csv(&results))?;
    if let Some(p) = &args.series {
        emit(Some(p), &mse_series_csv(&results))?;
    }
    if let Some(p) = &args.json {
        #[derive(serde::Serialize)]
        struct Payload<'a> {
            config: &'a SimConfig,
            cases: &'a [crate::sim::SimResult],
        }
        let env = OutputEnvelope::new(
            echo,
            vec![args.seed],
            None,
            Payload {
                config: &cfg,
                cases: &results,
            },
        );
        emit(Some(p), &env.to_json())?;
    }
    Ok(EXIT_OK)
}

fn robustness(args: RobustnessArgs, echo: Vec<String>) -> Result<i32> {
    let ds = args.data.load()?;
    let size = match (args.frac, args.size, args.data.builtin.as_deref()) {
        (Some(f), _, _) => SubsampleSize::Fraction(f),
        (None, Some(m), _) => SubsampleSize::Count(m),
        (None, None, Some("hald")) => SubsampleSize::Count(10),
        (None, None, Some("uscrime" | "uscrime-log")) => SubsampleSize::Count(40),
        _ => SubsampleSize::Fraction(0.85),
    };
    let mut priors = vec![PriorSpec::Uniform, PriorSpec::ScottBerger];
    for c in args.c_list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let c: f64 = c
            .parse()
            .map_err(|_| Error::invalid("--c-list", format!("'{c}' is not a number")))?;
        priors.push(prior_spec(PriorKind::Loss, c)?);
    }
    let cfg = RobustnessConfig {
        size,
        replicates: args.reps,
        priors,
        seed: args.seed,
        robust: args.robust.prior()?,
        quadrature: args.robust.quadrature(QuadratureConfig::default())?,
    };
    let run = run_robustness(&ds.x, &ds.y, &cfg)?;
    let summaries = summarize(&run)?;

    // full-data reference values for each prior
    let scores = ModelScores::compute(&ds.x, &ds.y, &cfg.robust, &cfg.quadrature)?;
    let reference = cfg
        .priors
        .iter()
        .map(|&p| Analysis::from_scores(&ds, &scores, p, &cfg.robust, &cfg.quadrature, 0).map(|a| a.summary))
        .collect::<Result<Vec<_>>>()?;

    let dir = &args.out;
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("records.csv"), records_csv(&run))?;
    std::fs::write(dir.join("histogram.csv"), histogram_csv(&summaries))?;
    std::fs::write(dir.join("boxplot.csv"), boxplot_csv(&summaries, &ds.covariate_names))?;
    #[derive(serde::Serialize)]
    struct Payload<'a> {
        config: &'a RobustnessConfig,
        subsample_size: usize,
        full_data: Vec<crate::posterior::PosteriorSummary>,
        summaries: &'a [crate::robustness::PriorSummary],
    }
    let env = OutputEnvelope::new(
        echo,
        vec![args.seed],
        Some(DatasetInfo::from(&ds)),
        Payload {
            config: &cfg,
            subsample_size: run.subsample_size,
            full_data: reference,
            summaries: &summaries,
        },
    );
    std::fs::write(dir.join("summary.json"), env.to_json())?;
    eprintln!(
        "{} replicates of {} rows written to {}",
        cfg.replicates,
        run.subsample_size,
        dir.display()
    );
    Ok(EXIT_OK)
}

fn prior_curve(args: PriorCurveArgs) -> Result<i32> {
    let priors = [PriorSpec::Uniform, PriorSpec::ScottBerger, prior_spec(PriorKind::Loss, args.c)?];
    emit(args.out.as_deref(), &prior_curve_csv(args.d, &priors)?)?;
    Ok(EXIT_OK)
}

fn verify_kl(args: VerifyKlArgs, echo: Vec<String>) -> Result<i32> {
    if !(args.tol > 0.0) {
        return Err(Error::invalid("--tol", "must be positive"));
    }
    let report = verify_min_kl(args.trials, args.n, args.d, args.seed, args.tol, &args.inject_rank_deficient)?;
    let gradients = check_gradients(args.gradient_checks, args.n, args.d, args.seed)?;
    print_kl(&report, &gradients);
    if let Some(p) = &args.json {
        #[derive(serde::Serialize)]
        struct Payload<'a> {
            projection: &'a KlReport,
            gradient: GradientCheck,
        }
        let env = OutputEnvelope::new(
            echo,
            vec![args.seed],
            None,
            Payload {
                projection: &report,
                gradient: gradients,
            },
        );
        emit(Some(p), &env.to_json())?;
    }
    Ok(if report.all_zero() { EXIT_OK } else { EXIT_COUNTEREXAMPLE })
}

fn print_kl(report: &KlReport, gradients: &GradientCheck) {
    let admissible = report.trials - report.hypothesis_violations;
    println!(
        "{}/{} min-KL < {:e}",
        report.below_tolerance, admissible, report.tolerance
    );
    println!(
        "nested pairs: {}/{} below tolerance",
        report.nested_below_tolerance, report.nested_pairs
    );
    println!(
        "non-nested pairs: {}/{} below tolerance",
        report.below_tolerance - report.nested_below_tolerance,
        admissible - report.nested_pairs.min(admissible)
    );
    println!("largest min-KL: {:e}", report.max_min_kl);
    if report.hypothesis_violations > 0 {
        println!(
            "hypothesis violations (rank-deficient target design): {}",
            report.hypothesis_violations
        );
    }
    println!(
        "gradient check: {} instances, max relative error {:e}",
        gradients.instances, gradients.max_relative_error
    );
}

#[cfg(test)]
mod tests {
    use super::*;

    fn code(args: &[&str]) -> i32 {
        run(std::iter::once("lossprior").chain(args.iter().copied()))
    }

    #[test]
    fn validation_exit_codes() {
        assert_eq!(code(&["analyze", "--builtin", "hald", "--prior", "loss", "--c", "0"]), EXIT_INVALID);
        assert_eq!(code(&["analyze", "--builtin", "nope"]), EXIT_INVALID);
        assert_eq!(code(&["simulate", "--n", "10", "--d", "15", "--omega", "0.5"]), EXIT_INVALID);
        assert_eq!(code(&["frobnicate"]), EXIT_INVALID);
        assert_eq!(code(&["--help"]), EXIT_OK);
    }

    #[test]
    fn echo_drops_threads() {
        let args: Vec<OsString> = ["x", "simulate", "--threads", "4", "--seed", "1", "--threads=2"]
            .iter()
            .map(OsString::from)
            .collect();
        assert_eq!(command_echo(&args), vec!["simulate", "--seed", "1"]);
    }

    #[test]
    fn prior_kinds() {
        assert_eq!(prior_spec(PriorKind::Sb, 0.0).unwrap(), PriorSpec::ScottBerger);
        assert!(prior_spec(PriorKind::Loss, -1.0).is_err());
        assert!(prior_spec(PriorKind::Loss, f64::NAN).is_err());
    }
}
