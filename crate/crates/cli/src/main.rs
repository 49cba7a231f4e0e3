//! `banditlab`: similarity indices, regret simulation and solver debugging for
//! bandits with fixed expert advice.
//!
//! Exit codes: 0 success, 2 input or validation error, 3 solver or runtime
//! error, 4 failed mathematical check.

mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use banditlab::divergences::similarity_report_with_tol;
use banditlab::harness::{
    emit_results, estimate_regret, ExperimentConfig, LearnerKind, OutputFormat, RegretEstimate,
};
use banditlab::hull::Decomposer;
use banditlab::learners::{osmd_update, OsmdState};
use banditlab::policy_sets::load_policy_set;
use banditlab::{Error, PolicySet};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::config::{
    experiment_config, is_family, FamilyName, FamilySpec, Overrides, SimulationFile,
};

#[derive(Parser)]
#[command(
    name = "banditlab",
    version,
    about = "Bandits with fixed expert advice"
)]
struct Cli {
    /// Worker threads for Monte Carlo repetitions (0 = one per core).
    #[arg(long, env = "BANDITLAB_THREADS", default_value_t = 0, global = true)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Similarity indices of a policy set.
    Analyze {
        #[arg(long)]
        policies: PathBuf,
        /// Directory for report.json; printed to stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Bracket width of the D* solver.
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Monte Carlo regret of a learner on a configured loss source.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        run: RunArgs,
        /// Overrides the config's policy set.
        #[arg(long)]
        policies: Option<PathBuf>,
        /// Relative gap tolerance of the OSMD projection.
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Regret of a learner on every environment of a lower-bound family, checked against the floor.
    Lowerbound {
        #[command(flatten)]
        family: FamilyArgs,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Mixture weights of a point of the policy hull.
    Decompose {
        #[arg(long)]
        policies: PathBuf,
        #[arg(
            long,
            value_delimiter = ',',
            allow_negative_numbers = true,
            required = true
        )]
        x: Vec<f64>,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// One OSMD proximal step from a point of the hull.
    Project {
        #[arg(long)]
        policies: PathBuf,
        #[arg(
            long,
            value_delimiter = ',',
            allow_negative_numbers = true,
            required = true
        )]
        x: Vec<f64>,
        /// Estimated loss vector.
        #[arg(
            long,
            value_delimiter = ',',
            allow_negative_numbers = true,
            required = true
        )]
        loss: Vec<f64>,
        #[arg(long)]
        eta: f64,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, value_enum)]
    learner: Option<LearnerArg>,
    #[arg(long = "T")]
    horizon: Option<u64>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write only this output; both when absent.
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
}

#[derive(Args)]
struct FamilyArgs {
    #[arg(long, value_enum)]
    family: FamilyName,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    v: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    q: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    theta1: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    theta2: Option<Vec<f64>>,
}

#[derive(Clone, Copy, ValueEnum)]
enum LearnerArg {
    Exp4,
    Osmd,
}

impl From<LearnerArg> for LearnerKind {
    fn from(l: LearnerArg) -> Self {
        match l {
            LearnerArg::Exp4 => LearnerKind::Exp4,
            LearnerArg::Osmd => LearnerKind::Osmd,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Failure {
            code,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::NoConvergence { .. }
            | Error::ZeroPsi
            | Error::DegenerateSet
            | Error::DecompositionInfeasible { .. } => 3,
            _ => 2,
        };
        Failure::new(code, e.to_string())
    }
}

type CliResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = set_threads(cli.threads).and_then(|()| match cli.command {
        Command::Analyze { policies, out, tol } => analyze(&policies, out.as_deref(), tol),
        Command::Simulate {
            config,
            run,
            policies,
            tol,
        } => simulate(&config, &run, policies, tol),
        Command::Lowerbound { family, run } => lowerbound(&family, &run),
        Command::Decompose { policies, x, tol } => decompose(&policies, &x, tol),
        Command::Project {
            policies,
            x,
            loss,
            eta,
            tol,
        } => project(&policies, &x, &loss, eta, tol),
    });
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("banditlab: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

#[cfg(feature = "parallel")]
fn set_threads(threads: usize) -> CliResult {
    if threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Failure::new(3, format!("thread pool: {e}")))?;
    }
    Ok(())
}

#[cfg(not(feature = "parallel"))]
fn set_threads(_threads: usize) -> CliResult {
    Ok(())
}

fn load(path: &Path) -> Result<PolicySet, Failure> {
    load_policy_set(path).map_err(|e| Failure::new(2, format!("{}: {e}", path.display())))
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("serializable") + "\n"
}

fn write_file(path: &Path, text: &str) -> CliResult {
    std::fs::write(path, text).map_err(|e| Failure::new(2, format!("{}: {e}", path.display())))
}

fn create_dir(dir: &Path) -> CliResult {
    std::fs::create_dir_all(dir).map_err(|e| Failure::new(2, format!("{}: {e}", dir.display())))
}

fn analyze(policies: &Path, out: Option<&Path>, tol: f64) -> CliResult {
    let set = load(policies)?;
    let report = similarity_report_with_tol(&set, tol)?;
    let text = to_json(&report);
    match out {
        Some(dir) => {
            create_dir(dir)?;
            write_file(&dir.join("report.json"), &text)
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn write_outputs(est: &RegretEstimate, run: &RunArgs, stem: &str) -> CliResult {
    let Some(dir) = &run.out else { return Ok(()) };
    create_dir(dir)?;
    if run.format != Some(FormatArg::Csv) {
        emit_results(est, &dir.join(format!("{stem}.json")), OutputFormat::Json)?;
    }
    if run.format != Some(FormatArg::Json) {
        emit_results(est, &dir.join("reps.csv"), OutputFormat::Csv)?;
    }
    Ok(())
}

fn summary_line(est: &RegretEstimate) -> String {
    let mut line = format!("mean={} stderr={}", est.mean_regret, est.stderr);
    if let Some(b) = est.bound_upper {
        line += &format!(" bound={b}");
    }
    if let Some(f) = est.bound_floor {
        line += &format!(" floor={f}");
    }
    line
}

fn simulate(
    config: &Path,
    run: &RunArgs,
    policies: Option<PathBuf>,
    tol: Option<f64>,
) -> CliResult {
    let file = SimulationFile::load(config)?;
    let flags = Overrides {
        learner: run.learner.map(Into::into),
        policies,
        horizon: run.horizon,
        reps: run.reps,
        seed: run.seed,
        tol,
    };
    let base = config.parent().unwrap_or(Path::new("."));
    let cfg = experiment_config(file, base, &flags)?;
    let est = estimate_regret(&cfg)?;
    write_outputs(&est, run, "summary")?;
    println!("{}", summary_line(&est));
    if is_family(&cfg) {
        check_floor(&est)?;
    }
    Ok(())
}

fn check_floor(est: &RegretEstimate) -> CliResult {
    if let Some(floor) = est.bound_floor {
        if est.mean_regret + 3.0 * est.stderr < floor {
            return Err(Failure::new(
                4,
                format!(
                    "average regret {} + 3 stderr {} is below the floor {floor}",
                    est.mean_regret, est.stderr
                ),
            ));
        }
    }
    Ok(())
}

fn lowerbound(family: &FamilyArgs, run: &RunArgs) -> CliResult {
    let spec = FamilySpec {
        name: Some(family.family),
        n: family.n,
        m: family.m,
        v: family.v,
        k: family.k,
        eps: family.eps,
        q: family.q,
        theta1: family.theta1.clone(),
        theta2: family.theta2.clone(),
    };
    let instance = spec.build(run.horizon.unwrap_or(10_000))?;
    let learner = run.learner.map_or(LearnerKind::Exp4, Into::into);
    let cfg = ExperimentConfig::for_instance(
        learner,
        instance,
        run.reps.unwrap_or(200),
        run.seed.unwrap_or(0),
    );
    let est = estimate_regret(&cfg)?;
    write_outputs(&est, run, "lowerbound")?;
    println!("{}", summary_line(&est));
    check_floor(&est)
}

#[derive(Serialize)]
struct DecomposeOutput {
    weights: Vec<f64>,
    residual: f64,
}

fn decompose(policies: &Path, x: &[f64], tol: f64) -> CliResult {
    let set = load(policies)?;
    match Decomposer::new(&set).decompose(x, tol, None) {
        Ok(d) => {
            print!(
                "{}",
                to_json(&DecomposeOutput {
                    weights: d.weights,
                    residual: d.residual,
                })
            );
            Ok(())
        }
        Err(Error::DecompositionInfeasible { residual }) => Err(Failure::new(
            4,
            format!("point is outside the hull: best residual {residual:e} > {tol:e}"),
        )),
        Err(e) => Err(e.into()),
    }
}

#[derive(Serialize)]
struct ProjectOutput {
    x_next: Vec<f64>,
    weights: Vec<f64>,
    gap: f64,
}

fn project(policies: &Path, x: &[f64], loss: &[f64], eta: f64, tol: f64) -> CliResult {
    let set = load(policies)?;
    if !(eta >= 0.0 && eta.is_finite()) {
        return Err(Failure::new(
            2,
            format!("eta must be a nonnegative number, got {eta}"),
        ));
    }
    if loss.len() != set.k() || loss.iter().any(|l| !l.is_finite()) {
        return Err(Failure::new(
            2,
            format!("loss must hold {} finite values", set.k()),
        ));
    }
    let w = match Decomposer::new(&set).decompose(x, 1e-9, None) {
        Ok(d) => d.weights,
        Err(Error::DecompositionInfeasible { residual }) => {
            return Err(Failure::new(
                2,
                format!("x is not in the hull of the policies (residual {residual:e})"),
            ))
        }
        Err(e) => return Err(e.into()),
    };
    let state = OsmdState {
        x: x.to_vec(),
        w,
        eta,
        tau_star: x.to_vec(),
        round: 0,
    };
    let (next, report) = osmd_update(&state, &set, loss, tol)?;
    print!(
        "{}",
        to_json(&ProjectOutput {
            x_next: next.x,
            weights: next.w,
            gap: report.gap,
        })
    );
    Ok(())
}
