//! The `agrisk` command line.
//!
//! ```text
//! agrisk risk eval --dist d.csv --alpha 0.5 --gamma 1
//! agrisk risk alpha-star --dist d.csv --gamma 0.9 --b 10
//! agrisk estimate --feasible inst.json --gamma 0.9 --ip --delta-prime 0.01
//! agrisk te run --topology topo.json --gamma 0.9 --seed 7
//! agrisk te gen --topology topo.json --seed 7 --out dir
//! ```
//!
//! Exit status is 0 on success, 2 on bad input and 1 when a solver fails.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::altmin::DEFAULT_EPS;
use crate::distribution::DiscreteDistribution;
use crate::error::{Error, Result};
use crate::estimators::{estimate_var_min, reports_to_csv_with, EstimateConfig, EstimateReport, Timings, DEFAULT_DELTA_PRIMES};
use crate::model::{BigM, FeasibleSet};
use crate::nette::{
    build_te_feasible_set, prepare_instance, run_on_artifacts, CaseStudyConfig, DemandMatrix, ResidualMode, ScenarioSet,
    TeArtifacts, Topology, TunnelSet,
};
use crate::nette::case_study::{DEFAULT_GAMMAS, DEFAULT_PROB_THRESHOLD, DEFAULT_TARGET_MLU};
use crate::threshold::{alpha_star, DEFAULT_B};

#[derive(Debug, Parser)]
#[command(name = "agrisk", version, about = "Alpha-gamma expectation risk measures and VaR-minimization bounds")]
struct Cli {
    /// Write every LP built to DIR in algebraic form.
    #[arg(long, global = true, value_name = "DIR")]
    dump_lp: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Risk measures of a discrete distribution.
    #[command(subcommand)]
    Risk(RiskCommand),
    /// Lower and upper bounds on the minimal VaR over a feasible set.
    Estimate(EstimateArgs),
    /// Traffic-engineering case study.
    #[command(subcommand)]
    Te(TeCommand),
}

#[derive(Debug, Subcommand)]
enum RiskCommand {
    /// VaR at gamma, CVaR at alpha and the alpha-gamma expectation.
    Eval(EvalArgs),
    /// The level above which the expectation equals VaR.
    AlphaStar(AlphaStarArgs),
}

#[derive(Debug, Subcommand)]
enum TeCommand {
    /// Run the estimators for each gamma.
    Run(TeRunArgs),
    /// Write the generated topology, demands, tunnels, scenarios and instance.
    Gen(TeGenArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Normalize,
    Residual,
}

#[derive(Debug, Args)]
struct Output {
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Write to FILE instead of stdout.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvalArgs {
    /// CSV with columns `value,prob`.
    #[arg(long)]
    dist: PathBuf,
    #[arg(long)]
    alpha: f64,
    #[arg(long)]
    gamma: f64,
    #[command(flatten)]
    output: Output,
}

#[derive(Debug, Args)]
struct AlphaStarArgs {
    /// CSV with columns `value,prob`; only the probabilities are used.
    #[arg(long)]
    dist: PathBuf,
    #[arg(long)]
    gamma: f64,
    #[arg(long, default_value_t = DEFAULT_B)]
    b: u32,
    #[command(flatten)]
    output: Output,
}

#[derive(Debug, Args)]
struct BoundArgs {
    /// Repeatable; the smallest value sets the O2 level.
    #[arg(long = "delta-prime", value_name = "D")]
    delta_prime: Vec<f64>,
    #[arg(long, default_value_t = DEFAULT_B)]
    b: u32,
    #[arg(long, default_value_t = DEFAULT_EPS)]
    eps: f64,
    /// Also solve the VaR integer program exactly.
    #[arg(long)]
    ip: bool,
    /// `auto` or a positive number.
    #[arg(long = "big-m", value_name = "M")]
    big_m: Option<String>,
    /// Include solve times (makes output run-dependent).
    #[arg(long)]
    timings: bool,
}

#[derive(Debug, Args)]
struct EstimateArgs {
    /// Feasible-set JSON `{"A", "B", "c", "names"?, "probs"?}`.
    #[arg(long)]
    feasible: PathBuf,
    /// Repeatable.
    #[arg(long, required = true)]
    gamma: Vec<f64>,
    /// `value,prob` CSV whose probabilities replace those in the JSON.
    #[arg(long)]
    probs: Option<PathBuf>,
    #[command(flatten)]
    bounds: BoundArgs,
    #[command(flatten)]
    output: Output,
}

#[derive(Debug, Args)]
struct TeArgs {
    /// Topology JSON; the seeded B4-like network when omitted.
    #[arg(long)]
    topology: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long = "target-mlu", default_value_t = DEFAULT_TARGET_MLU)]
    target_mlu: f64,
    #[arg(long = "prob-threshold", default_value_t = DEFAULT_PROB_THRESHOLD)]
    prob_threshold: f64,
    /// Multiplicative noise on the gravity demands.
    #[arg(long, default_value_t = 0.0)]
    jitter: f64,
    #[arg(long, value_enum, default_value_t = Mode::Normalize)]
    mode: Mode,
}

#[derive(Debug, Args)]
struct TeRunArgs {
    #[command(flatten)]
    te: TeArgs,
    /// Repeatable; defaults to 0.8, 0.9 and 0.99.
    #[arg(long)]
    gamma: Vec<f64>,
    /// Demands CSV replacing the generated ones.
    #[arg(long)]
    demands: Option<PathBuf>,
    /// Tunnels JSON replacing the generated ones.
    #[arg(long)]
    tunnels: Option<PathBuf>,
    /// Scenarios JSON replacing the enumerated ones.
    #[arg(long)]
    scenarios: Option<PathBuf>,
    #[command(flatten)]
    bounds: BoundArgs,
    #[command(flatten)]
    output: Output,
}

#[derive(Debug, Args)]
struct TeGenArgs {
    #[command(flatten)]
    te: TeArgs,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Serialize)]
struct EvalRecord {
    alpha: f64,
    gamma: f64,
    var: f64,
    cvar: f64,
    expectation: f64,
}

/// Parse `args` (program name first), run the command and return the exit
/// status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    if let Some(dir) = &cli.dump_lp {
        std::env::set_var("AGRISK_LP_DUMP", dir);
    }
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_validation() {
                2
            } else {
                1
            }
        }
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Risk(RiskCommand::Eval(a)) => risk_eval(a),
        Command::Risk(RiskCommand::AlphaStar(a)) => risk_alpha_star(a),
        Command::Estimate(a) => estimate(a),
        Command::Te(TeCommand::Run(a)) => te_run(a),
        Command::Te(TeCommand::Gen(a)) => te_gen(a),
    }
}

fn emit(output: &Output, text: &str) -> Result<()> {
    match &output.out {
        Some(path) => std::fs::write(path, text).map_err(|e| Error::io(path, e)),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| Error::Internal(e.to_string()))
        }
    }
}

fn csv_of<S: Serialize>(records: &[S]) -> Result<String> {
    let mut wtr = csv::Writer::from_writer(Vec::new());
    for r in records {
        wtr.serialize(r)?;
    }
    let bytes = wtr.into_inner().map_err(|e| Error::Internal(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Internal(e.to_string()))
}

fn json_of<S: Serialize + ?Sized>(value: &S) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

fn risk_eval(a: EvalArgs) -> Result<()> {
    let d = DiscreteDistribution::from_csv_path(&a.dist)?;
    let record = EvalRecord {
        alpha: a.alpha,
        gamma: a.gamma,
        var: d.var(a.gamma)?,
        cvar: d.cvar(a.alpha)?,
        expectation: d.expectation_slice(a.alpha, a.gamma)?,
    };
    let text = match a.output.format {
        Format::Csv => csv_of(&[record])?,
        Format::Json => json_of(&record)?,
    };
    emit(&a.output, &text)
}

fn risk_alpha_star(a: AlphaStarArgs) -> Result<()> {
    let d = DiscreteDistribution::from_csv_path(&a.dist)?;
    let cert = alpha_star(d.probs(), a.gamma, a.b)?;
    let text = match a.output.format {
        Format::Csv => {
            #[derive(Serialize)]
            struct Row {
                gamma: f64,
                b: u32,
                alpha_star: f64,
                o_star: f64,
                steps: usize,
            }
            csv_of(&[Row {
                gamma: cert.gamma,
                b: a.b,
                alpha_star: cert.alpha_star,
                o_star: cert.o_star,
                steps: cert.steps.len(),
            }])?
        }
        Format::Json => json_of(&cert)?,
    };
    emit(&a.output, &text)
}

fn parse_big_m(text: Option<&str>, default: BigM) -> Result<BigM> {
    match text {
        None => Ok(default),
        Some("auto") => Ok(BigM::Auto),
        Some(s) => s
            .parse::<f64>()
            .map(BigM::Uniform)
            .map_err(|_| Error::validation(format!("--big-m expects `auto` or a number, got {s}"))),
    }
}

fn estimate_config(b: &BoundArgs, default_m: BigM) -> Result<EstimateConfig> {
    Ok(EstimateConfig {
        label: String::new(),
        delta_primes: if b.delta_prime.is_empty() {
            DEFAULT_DELTA_PRIMES.to_vec()
        } else {
            b.delta_prime.clone()
        },
        b: b.b,
        eps: b.eps,
        with_ip_true: b.ip,
        big_m: parse_big_m(b.big_m.as_deref(), default_m)?,
    })
}

fn write_reports(mut reports: Vec<EstimateReport>, timings: bool, output: &Output) -> Result<()> {
    if !timings {
        for r in &mut reports {
            r.timings = Timings::default();
        }
    }
    let text = match output.format {
        Format::Csv => reports_to_csv_with(&reports, timings)?,
        Format::Json => json_of(&reports)?,
    };
    emit(output, &text)
}

fn estimate(a: EstimateArgs) -> Result<()> {
    let (fs, json_probs) = FeasibleSet::from_json_path(&a.feasible)?;
    let probs = match (&a.probs, json_probs) {
        (Some(path), _) => DiscreteDistribution::from_csv_path(path)?.probs().to_vec(),
        (None, Some(p)) => p,
        (None, None) => {
            return Err(Error::validation(format!(
                "{} has no \"probs\"; pass --probs",
                a.feasible.display()
            )))
        }
    };
    let mut cfg = estimate_config(&a.bounds, BigM::Auto)?;
    let stem = a.feasible.file_stem().and_then(|s| s.to_str()).unwrap_or("instance").to_string();
    let mut reports = Vec::with_capacity(a.gamma.len());
    for &gamma in &a.gamma {
        cfg.label = format!("{stem} ({gamma})");
        let mut r = estimate_var_min(&fs, &probs, gamma, &cfg)?;
        r.metadata.insert("feasible".into(), a.feasible.display().to_string());
        reports.push(r);
    }
    write_reports(reports, a.bounds.timings, &a.output)
}

fn case_config(te: &TeArgs, gammas: Vec<f64>, estimate: EstimateConfig) -> CaseStudyConfig {
    CaseStudyConfig {
        gammas,
        target_mlu: te.target_mlu,
        prob_threshold: te.prob_threshold,
        seed: te.seed,
        jitter: te.jitter,
        mode: match te.mode {
            Mode::Normalize => ResidualMode::Normalize,
            Mode::Residual => ResidualMode::Residual,
        },
        keep_fail_probs: true,
        estimate,
    }
}

fn load_topology(te: &TeArgs) -> Result<Topology> {
    match &te.topology {
        Some(path) => Topology::from_json_path(path),
        None => Ok(Topology::b4_like(te.seed)),
    }
}

fn te_run(a: TeRunArgs) -> Result<()> {
    let gammas = if a.gamma.is_empty() { DEFAULT_GAMMAS.to_vec() } else { a.gamma.clone() };
    let cfg = case_config(&a.te, gammas, estimate_config(&a.bounds, BigM::Uniform(1.0))?);
    let topology = load_topology(&a.te)?;
    let mut art = prepare_instance(&topology, &cfg)?;
    if a.demands.is_some() || a.tunnels.is_some() || a.scenarios.is_some() {
        replay(&mut art, &a)?;
    }
    let mut reports = run_on_artifacts(&art, &cfg)?;
    for r in &mut reports {
        r.metadata.insert("jitter".into(), a.te.jitter.to_string());
        if let Some(p) = &a.te.topology {
            r.metadata.insert("topology".into(), p.display().to_string());
        }
    }
    write_reports(reports, a.bounds.timings, &a.output)
}

fn replay(art: &mut TeArtifacts, a: &TeRunArgs) -> Result<()> {
    if let Some(p) = &a.demands {
        art.demands = DemandMatrix::from_csv_path(p)?;
    }
    if let Some(p) = &a.tunnels {
        art.tunnels = TunnelSet::from_json_path(p)?;
    }
    if let Some(p) = &a.scenarios {
        art.scenarios = ScenarioSet::from_json_path(p, &art.topology)?;
    }
    art.instance = build_te_feasible_set(&art.topology, &art.demands, &art.tunnels, &art.scenarios)?;
    Ok(())
}

fn te_gen(a: TeGenArgs) -> Result<()> {
    let cfg = case_config(&a.te, DEFAULT_GAMMAS.to_vec(), EstimateConfig::default());
    let art = prepare_instance(&load_topology(&a.te)?, &cfg)?;
    std::fs::create_dir_all(&a.out).map_err(|e| Error::io(&a.out, e))?;
    let write = |name: &str, text: String| -> Result<()> {
        let path: &Path = &a.out.join(name);
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    };
    write("topology.json", art.topology.to_json_string()?)?;
    write("demands.csv", art.demands.to_csv_string()?)?;
    write("tunnels.json", art.tunnels.to_json_string()?)?;
    write("scenarios.json", art.scenarios.to_json_string(&art.topology)?)?;
    write("instance.json", art.instance.fs.to_json_string(Some(&art.instance.probs))?)?;
    println!(
        "{}: {} links, {} demands, {} tunnels, {} scenarios (mass {}) written to {}",
        art.topology.label(),
        art.topology.edges.len(),
        art.demands.len(),
        art.tunnels.total(),
        art.scenarios.len(),
        art.scenarios.covered_mass,
        a.out.display()
    );
    Ok(())
}
