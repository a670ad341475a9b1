//! The `wonham` command-line front end.
//!
//! Exit codes: 0 success, 2 configuration or validation error, 3 property
//! violation (experiments always; other checks under `--assert`), 4 I/O
//! error. Every output file starts with a provenance line carrying the full
//! invocation, and identical invocations produce byte-identical outputs.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::analysis::stabilizability_with;
use crate::dual::{duality_check, osc, ControlLaw};
use crate::error::{Error, Result};
use crate::experiments::{
    run_detection, run_martingale_check, run_monotonicity, run_necessity_demo, run_splitting_check,
    run_stability, ExperimentConfig,
};
use crate::filter::run_wonham;
use crate::model::{model_from_json, HmmModel, ProbabilityVector};
use crate::output;
use crate::paths::{simulate_trial, ObservationGrid, RngStream};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_VIOLATION: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Parser)]
#[command(
    name = "wonham",
    version,
    about = "Wonham filter stability toolkit: dual-system stabilizability analysis, \
             exact simulation, filtering, and Monte Carlo verification"
)]
struct Cli {
    /// Worker thread count (default: WONHAM_THREADS environment variable, else all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Stabilizability analysis of the dual system: controllable-subspace
    /// dimension, ergodic classes, the three equivalent test verdicts, the
    /// uncontrollable-block spectrum, and the instability witness if any
    Analyze(AnalyzeArgs),
    /// Exact simulation of signal paths and gridded observation increments
    Simulate(SimulateArgs),
    /// Split-step posterior computation over a recorded observation file
    Filter(FilterArgs),
    /// Monte Carlo check of the duality principle: estimator mean-square
    /// error against control cost plus prior mismatch
    DualityCheck(DualityArgs),
    /// Stability, detection, splitting, martingale, monotonicity, and
    /// necessity experiments
    Experiment(ExperimentArgs),
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Model JSON file ({d, A, h, R, name?})
    #[arg(long)]
    model: PathBuf,
    /// Emit the JSON report on stdout instead of the human-readable summary
    #[arg(long)]
    json: bool,
    /// Write the JSON report to a file
    #[arg(long)]
    out: Option<PathBuf>,
    /// Relative rank/membership tolerance for the subspace computations
    #[arg(long)]
    rank_tol: Option<f64>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    model: PathBuf,
    /// Signal prior as comma-separated probabilities (default uniform)
    #[arg(long)]
    prior: Option<String>,
    /// Horizon
    #[arg(long = "T")]
    horizon: f64,
    /// Grid step
    #[arg(long)]
    dt: f64,
    #[arg(long, default_value_t = 1)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory (one CSV per trial plus a jump-times sidecar)
    #[arg(long)]
    out: PathBuf,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum FilterScheme {
    /// Split step: exact prior propagation plus exact Bayes reweight
    Split,
    /// Euler-Maruyama discretization, for step-size comparison only
    Euler,
}

#[derive(Args)]
struct FilterArgs {
    #[arg(long)]
    model: PathBuf,
    /// Filter prior as comma-separated probabilities, e.g. "0.3,0.7"
    #[arg(long)]
    prior: String,
    /// Observation CSV produced by `simulate` (columns t,x,dz)
    #[arg(long)]
    obs: PathBuf,
    /// Output CSV (columns t, pi_1..pi_d, dI)
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = FilterScheme::Split)]
    scheme: FilterScheme,
}

#[derive(Args)]
struct DualityArgs {
    #[arg(long)]
    model: PathBuf,
    /// Prior of the sampled signal
    #[arg(long)]
    mu: String,
    /// Prior used by the estimator
    #[arg(long)]
    pi0: String,
    /// Deterministic control: zero | const:C | sin
    #[arg(long, default_value = "zero")]
    control: String,
    /// Terminal test function, comma-separated
    #[arg(long)]
    f: String,
    #[arg(long = "T")]
    horizon: f64,
    #[arg(long, default_value_t = 1e-3)]
    dt: f64,
    #[arg(long, default_value_t = 10_000)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Override the model's noise covariance
    #[arg(long = "R")]
    r: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Exit with code 3 when the identity check fails
    #[arg(long, default_value_t = false)]
    assert: bool,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum ExperimentMode {
    /// Squared posterior gap between true and misspecified priors over time
    Stability,
    /// Terminal ergodic-class identification statistics
    Detection,
    /// Pathwise mixture identity of the filter across ergodic classes
    Splitting,
    /// Conservation of mean class masses under the filter's own measure
    Martingale,
    /// Non-increase of the terminal error variance under an invariant prior
    Monotonicity,
    /// Instability demonstration from the stabilizability witness
    Necessity,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(value_enum)]
    mode: ExperimentMode,
    #[arg(long)]
    model: Option<PathBuf>,
    /// JSON experiment file; its values win over command-line flags
    #[arg(long)]
    config: Option<PathBuf>,
    /// Signal prior (comma-separated; default uniform)
    #[arg(long)]
    mu: Option<String>,
    /// Filter prior (comma-separated; default uniform)
    #[arg(long)]
    nu: Option<String>,
    /// Test function (comma-separated; default: all standard basis vectors)
    #[arg(long)]
    f: Option<String>,
    #[arg(long = "T")]
    horizon: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Checkpoint times, comma-separated (default: geometric grid up to T)
    #[arg(long)]
    checkpoints: Option<String>,
    /// Output directory
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

/// Runs the CLI on the given argv (program name included) and returns the
/// process exit code.
pub fn dispatch<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let argv: Vec<String> = args.into_iter().map(Into::into).collect();
    let invocation = argv.join(" ");
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    init_threads(cli.threads);
    match run_command(cli.command, &invocation) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Io(_) => EXIT_IO,
                _ => EXIT_CONFIG,
            }
        }
    }
}

fn init_threads(n: Option<usize>) {
    let n = n.or_else(|| {
        std::env::var("WONHAM_THREADS")
            .ok()
            .and_then(|s| s.parse().ok())
    });
    if let Some(n) = n {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
}

fn run_command(command: Command, invocation: &str) -> Result<i32> {
    match command {
        Command::Analyze(args) => run_analyze(args, invocation),
        Command::Simulate(args) => run_simulate(args, invocation),
        Command::Filter(args) => run_filter(args, invocation),
        Command::DualityCheck(args) => run_duality(args, invocation),
        Command::Experiment(args) => run_experiment(args, invocation),
    }
}

fn load_model(path: &Path) -> Result<HmmModel> {
    let text = fs::read_to_string(path)?;
    model_from_json(&text)
}

fn parse_vec(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("cannot parse '{p}' as a number")))
        })
        .collect::<Result<_>>()?;
    if parts.is_empty() {
        return Err(Error::Config("empty vector".into()));
    }
    Ok(parts)
}

fn parse_prior(s: &str, d: usize) -> Result<ProbabilityVector> {
    let v = parse_vec(s)?;
    if v.len() != d {
        return Err(Error::Config(format!(
            "prior has {} entries, model dimension is {d}",
            v.len()
        )));
    }
    ProbabilityVector::new(v)
}

fn parse_control(s: &str) -> Result<ControlLaw> {
    if s == "zero" {
        Ok(ControlLaw::Zero)
    } else if s == "sin" {
        Ok(ControlLaw::sinusoid())
    } else if let Some(c) = s.strip_prefix("const:") {
        let value = c
            .parse::<f64>()
            .map_err(|_| Error::Config(format!("cannot parse constant control '{c}'")))?;
        Ok(ControlLaw::Constant(value))
    } else {
        Err(Error::Config(format!(
            "unknown control '{s}' (expected zero | const:C | sin)"
        )))
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    fs::write(path, contents)?;
    Ok(())
}

#[derive(Serialize)]
struct AnalyzeReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    model_name: Option<String>,
    d: usize,
    class_count: usize,
    controllable_dim: usize,
    is_controllable: bool,
    nullspace_test: bool,
    indicator_test: bool,
    hurwitz_test: bool,
    stabilizable: bool,
    uc_eigenvalues: Vec<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    witness: Option<Vec<f64>>,
}

fn run_analyze(args: AnalyzeArgs, invocation: &str) -> Result<i32> {
    let model = load_model(&args.model)?;
    let decomp = model.ergodic_decomposition()?;
    let mut cfg = crate::NumericsConfig::default();
    if let Some(tol) = args.rank_tol {
        if !tol.is_finite() || tol <= 0.0 {
            return Err(Error::Config("rank tolerance must be positive".into()));
        }
        cfg.rank_tol = tol;
    }
    let rep = stabilizability_with(&model, &cfg)?;
    let report = AnalyzeReport {
        model_name: model.name().map(String::from),
        d: model.dim(),
        class_count: decomp.m(),
        controllable_dim: rep.controllable_dim,
        is_controllable: rep.is_controllable,
        nullspace_test: rep.nullspace_test,
        indicator_test: rep.indicator_test,
        hurwitz_test: rep.hurwitz_test,
        stabilizable: rep.verdict,
        uc_eigenvalues: rep.uc_eigenvalues.iter().map(|l| [l.re, l.im]).collect(),
        witness: rep.witness.as_ref().map(|w| w.iter().cloned().collect()),
    };
    let json = output::json_report(invocation, &report);
    if args.json {
        print!("{json}");
    } else {
        println!(
            "model: {} (d = {})",
            report.model_name.as_deref().unwrap_or("unnamed"),
            report.d
        );
        println!("ergodic classes: {}", report.class_count);
        println!(
            "controllable subspace dimension: {}/{}",
            report.controllable_dim, report.d
        );
        println!(
            "tests: nullspace={} indicator={} hurwitz={}",
            report.nullspace_test, report.indicator_test, report.hurwitz_test
        );
        println!("stabilizable: {}", report.stabilizable);
        if !report.uc_eigenvalues.is_empty() {
            let spectrum: Vec<String> = report
                .uc_eigenvalues
                .iter()
                .map(|[re, im]| format!("{re}{}{}i", if *im < 0.0 { "-" } else { "+" }, im.abs()))
                .collect();
            println!("uncontrollable block spectrum: {}", spectrum.join(", "));
        }
        if let Some(w) = &report.witness {
            let entries: Vec<String> = w.iter().map(|x| format!("{x}")).collect();
            println!(
                "witness (unit vector outside the controllable subspace): [{}]",
                entries.join(", ")
            );
        }
    }
    if let Some(out) = &args.out {
        write_file(out, &json)?;
    }
    Ok(EXIT_OK)
}

fn run_simulate(args: SimulateArgs, invocation: &str) -> Result<i32> {
    let model = load_model(&args.model)?;
    let prior = match &args.prior {
        Some(s) => parse_prior(s, model.dim())?,
        None => ProbabilityVector::uniform(model.dim()),
    };
    fs::create_dir_all(&args.out)?;
    for trial in 0..args.trials {
        let stream = RngStream::new(args.seed, trial as u64);
        let (path, obs) = simulate_trial(&model, &prior, args.horizon, args.dt, &stream)?;
        let base = args.out.join(format!("trial_{trial:04}"));
        write_file(
            &base.with_extension("csv"),
            &output::trial_csv(invocation, &path, &obs),
        )?;
        write_file(
            &args.out.join(format!("trial_{trial:04}_jumps.csv")),
            &output::jumps_csv(invocation, &path),
        )?;
    }
    println!("wrote {} trial(s) to {}", args.trials, args.out.display());
    Ok(EXIT_OK)
}

/// Reads the `t` and `dz` columns of a trial CSV back into an observation grid.
fn read_observations(path: &Path) -> Result<ObservationGrid> {
    let text = fs::read_to_string(path)?;
    let mut times = Vec::new();
    let mut increments = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with('t') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() < 3 {
            return Err(Error::Config(format!("malformed observation row '{line}'")));
        }
        let t: f64 = fields[0]
            .parse()
            .map_err(|_| Error::Config(format!("bad time '{}'", fields[0])))?;
        let dz: f64 = fields[fields.len() - 1]
            .parse()
            .map_err(|_| Error::Config(format!("bad increment '{}'", fields[fields.len() - 1])))?;
        times.push(t);
        increments.push(dz);
    }
    if times.is_empty() {
        return Err(Error::Config("observation file has no data rows".into()));
    }
    let dt = times[0];
    for (k, &t) in times.iter().enumerate() {
        if (t - (k + 1) as f64 * dt).abs() > 1e-9 * t.max(1.0) {
            return Err(Error::GridMismatch(format!(
                "non-uniform observation grid at t = {t}"
            )));
        }
    }
    Ok(ObservationGrid { dt, increments })
}

fn run_filter(args: FilterArgs, invocation: &str) -> Result<i32> {
    let model = load_model(&args.model)?;
    let prior = parse_prior(&args.prior, model.dim())?;
    let obs = read_observations(&args.obs)?;
    let traj = match args.scheme {
        FilterScheme::Split => run_wonham(&model, &prior, &obs, "prior")?,
        FilterScheme::Euler => crate::filter::run_euler_maruyama(&model, &prior, &obs, "prior")?,
    };
    write_file(&args.out, &output::filter_csv(invocation, &traj))?;
    println!("wrote posterior trajectory to {}", args.out.display());
    Ok(EXIT_OK)
}

fn run_duality(args: DualityArgs, invocation: &str) -> Result<i32> {
    let mut model = load_model(&args.model)?;
    if let Some(r) = args.r {
        model = model.with_r(r)?;
    }
    let mu = parse_prior(&args.mu, model.dim())?;
    let pi0 = parse_prior(&args.pi0, model.dim())?;
    let f_vec = parse_vec(&args.f)?;
    if f_vec.len() != model.dim() {
        return Err(Error::Config(format!(
            "f has {} entries, model dimension is {}",
            f_vec.len(),
            model.dim()
        )));
    }
    let law = parse_control(&args.control)?;
    let report = duality_check(
        &model,
        &mu,
        &pi0,
        &law,
        &DVector::from_vec(f_vec),
        args.horizon,
        args.dt,
        args.trials,
        args.seed,
    )?;
    let json = output::json_report(invocation, &report);
    print!("{json}");
    if let Some(out) = &args.out {
        write_file(out, &json)?;
    }
    if args.assert && !report.pass {
        return Ok(EXIT_VIOLATION);
    }
    Ok(EXIT_OK)
}

/// Experiment file mirroring the command-line flags. Values given here win
/// over flags.
#[derive(Deserialize)]
struct ExperimentFile {
    model: PathBuf,
    mu: Option<Vec<f64>>,
    nu: Option<Vec<f64>>,
    f: Option<Vec<Vec<f64>>>,
    #[serde(rename = "T")]
    horizon: Option<f64>,
    dt: Option<f64>,
    trials: Option<usize>,
    seed: Option<u64>,
    checkpoints: Option<Vec<f64>>,
}

struct ResolvedExperiment {
    config: ExperimentConfig,
}

fn resolve_experiment(args: &ExperimentArgs) -> Result<ResolvedExperiment> {
    let file: Option<ExperimentFile> = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path)?;
            let parsed = serde_json::from_str(&text)?;
            let flags_given = args.model.is_some()
                || args.mu.is_some()
                || args.nu.is_some()
                || args.f.is_some()
                || args.horizon.is_some()
                || args.dt.is_some()
                || args.trials.is_some()
                || args.seed.is_some()
                || args.checkpoints.is_some();
            if flags_given {
                eprintln!("warning: experiment config file overrides command-line flags");
            }
            Some(parsed)
        }
        None => None,
    };

    let model_path = match (&file, &args.model) {
        (Some(f), _) => f.model.clone(),
        (None, Some(p)) => p.clone(),
        (None, None) => {
            return Err(Error::Config(
                "an experiment needs --model or --config".into(),
            ))
        }
    };
    let model = load_model(&model_path)?;
    let d = model.dim();

    let pick_vec =
        |from_file: &Option<Vec<f64>>, from_flag: &Option<String>| -> Result<Option<Vec<f64>>> {
            if let Some(v) = from_file {
                Ok(Some(v.clone()))
            } else if let Some(s) = from_flag {
                Ok(Some(parse_vec(s)?))
            } else {
                Ok(None)
            }
        };

    let mu = match pick_vec(&file.as_ref().and_then(|f| f.mu.clone()), &args.mu)? {
        Some(v) => ProbabilityVector::new(v)?,
        None => ProbabilityVector::uniform(d),
    };
    let nu = match pick_vec(&file.as_ref().and_then(|f| f.nu.clone()), &args.nu)? {
        Some(v) => ProbabilityVector::new(v)?,
        None => ProbabilityVector::uniform(d),
    };
    let f_list: Vec<DVector<f64>> = if let Some(ff) = file.as_ref().and_then(|f| f.f.clone()) {
        ff.into_iter().map(DVector::from_vec).collect()
    } else if let Some(s) = &args.f {
        vec![DVector::from_vec(parse_vec(s)?)]
    } else {
        (0..d)
            .map(|i| DVector::from_fn(d, |j, _| if i == j { 1.0 } else { 0.0 }))
            .collect()
    };
    for f in &f_list {
        if f.len() != d {
            return Err(Error::Config(format!(
                "test function has {} entries, model dimension is {d}",
                f.len()
            )));
        }
    }

    let horizon = file
        .as_ref()
        .and_then(|f| f.horizon)
        .or(args.horizon)
        .unwrap_or(10.0);
    let dt = file.as_ref().and_then(|f| f.dt).or(args.dt).unwrap_or(1e-3);
    let n_trials = file
        .as_ref()
        .and_then(|f| f.trials)
        .or(args.trials)
        .unwrap_or(1000);
    let master_seed = file
        .as_ref()
        .and_then(|f| f.seed)
        .or(args.seed)
        .unwrap_or(0);
    if !horizon.is_finite() || horizon <= 0.0 || !dt.is_finite() || dt <= 0.0 || n_trials == 0 {
        return Err(Error::Config("T, dt and trials must be positive".into()));
    }
    let checkpoints = if let Some(cp) = file.as_ref().and_then(|f| f.checkpoints.clone()) {
        cp
    } else if let Some(s) = &args.checkpoints {
        parse_vec(s)?
    } else {
        ExperimentConfig::default_checkpoints(horizon)
    };

    Ok(ResolvedExperiment {
        config: ExperimentConfig {
            model,
            prior_mu: mu,
            prior_nu: nu,
            f_list,
            horizon,
            dt,
            n_trials,
            master_seed,
            checkpoints,
        },
    })
}

#[derive(Serialize)]
struct Verdict<T: Serialize> {
    check: String,
    pass: bool,
    detail: T,
}

fn run_experiment(args: ExperimentArgs, invocation: &str) -> Result<i32> {
    let resolved = resolve_experiment(&args)?;
    let config = resolved.config;
    let out = &args.out;
    fs::create_dir_all(out)?;

    let pass = match args.mode {
        ExperimentMode::Stability => {
            let curves = run_stability(&config)?;
            let mut pass = true;
            for (curve, f) in curves.iter().zip(&config.f_list) {
                let bound = osc(f).powi(2);
                for (v, se) in curve.values.iter().zip(&curve.std_errors) {
                    if *v < 0.0 || *v > bound + 3.0 * se + 1e-12 {
                        pass = false;
                    }
                }
                write_file(
                    &out.join(format!("stability_{}.csv", curve.label)),
                    &output::curve_csv(invocation, &curve.times, &curve.values, &curve.std_errors),
                )?;
            }
            write_file(
                &out.join("stability_verdict.json"),
                &output::json_report(
                    invocation,
                    &Verdict {
                        check: "stability".into(),
                        pass,
                        detail: curves,
                    },
                ),
            )?;
            pass
        }
        ExperimentMode::Detection => {
            let result = run_detection(&config)?;
            let mut csv = format!("# {invocation}\nclass,sq_error,std_error\n");
            for (k, (e, s)) in result
                .class_sq_error
                .iter()
                .zip(&result.class_sq_error_se)
                .enumerate()
            {
                csv.push_str(&format!("{},{},{}\n", k + 1, e, s));
            }
            write_file(&out.join("detection.csv"), &csv)?;
            write_file(
                &out.join("detection_verdict.json"),
                &output::json_report(
                    invocation,
                    &Verdict {
                        check: "detection".into(),
                        pass: true,
                        detail: result,
                    },
                ),
            )?;
            true
        }
        ExperimentMode::Splitting => {
            let report = run_splitting_check(&config)?;
            let pass = report.max_deviation <= 1e-10;
            write_file(
                &out.join("splitting_verdict.json"),
                &output::json_report(
                    invocation,
                    &Verdict {
                        check: "splitting".into(),
                        pass,
                        detail: report,
                    },
                ),
            )?;
            pass
        }
        ExperimentMode::Martingale => {
            let report = run_martingale_check(&config)?;
            for (k, (means, ses)) in report.class_means.iter().zip(&report.class_ses).enumerate() {
                write_file(
                    &out.join(format!("martingale_class{}.csv", k + 1)),
                    &output::curve_csv(invocation, &report.times, means, ses),
                )?;
            }
            let pass = report.pass;
            write_file(
                &out.join("martingale_verdict.json"),
                &output::json_report(
                    invocation,
                    &Verdict {
                        check: "martingale".into(),
                        pass,
                        detail: report,
                    },
                ),
            )?;
            pass
        }
        ExperimentMode::Monotonicity => {
            let report = run_monotonicity(&config)?;
            write_file(
                &out.join("monotonicity.csv"),
                &output::curve_csv(
                    invocation,
                    &report.curve.times,
                    &report.curve.estimates,
                    &report.curve.std_errors,
                ),
            )?;
            let pass = report.pass;
            write_file(
                &out.join("monotonicity_verdict.json"),
                &output::json_report(
                    invocation,
                    &Verdict {
                        check: "monotonicity".into(),
                        pass,
                        detail: report,
                    },
                ),
            )?;
            pass
        }
        ExperimentMode::Necessity => {
            let report = run_necessity_demo(
                &config.model,
                config.horizon,
                config.dt,
                config.n_trials,
                config.master_seed,
                Some(config.checkpoints.clone()),
            )?;
            write_file(
                &out.join("necessity.csv"),
                &output::curve_csv(
                    invocation,
                    &report.curve.times,
                    &report.curve.values,
                    &report.curve.std_errors,
                ),
            )?;
            let pass = report.pass;
            write_file(
                &out.join("necessity_verdict.json"),
                &output::json_report(
                    invocation,
                    &Verdict {
                        check: "necessity".into(),
                        pass,
                        detail: report,
                    },
                ),
            )?;
            pass
        }
    };

    if pass {
        println!("experiment passed; outputs in {}", out.display());
        Ok(EXIT_OK)
    } else {
        eprintln!(
            "experiment detected a property violation; outputs in {}",
            out.display()
        );
        Ok(EXIT_VIOLATION)
    }
}
