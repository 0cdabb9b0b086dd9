//! `twolin`: analysis, exact drift, simulation, sweeps and verification for
//! the (1+1)-EA on TwoLin.
//!
//! Data goes to stdout (or `--out`), the resolved configuration and progress
//! to stderr. Exit codes: 0 success, 1 property violation, 2 usage error.

mod config;

use std::error::Error as StdError;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use twolin::drift_matrix::{build_matrix, eigen_analysis, DriftMatrix, Verdict, DEFAULT_BOUNDARY_TOL};
use twolin::ea::{batch_run, budget_for, run, trial_seed, BatchSummary, Placement, RunConfig, StartRule};
use twolin::exact_drift::{brute_force_drift, exact_drift, mc_drift, Method};
use twolin::experiments::{asymmetric_spotcheck, scaling_fit, sweep, SpotcheckConfig, SweepConfig};
use twolin::potential::{build_potential, y_value};
use twolin::verify::{run_suite, Suite, VerifyOptions};
use twolin::{Params, State};

type Res<T> = Result<T, Box<dyn StdError>>;

/// Below this `|classifier|` the verdict is flagged as close to the boundary.
const NEAR_BOUNDARY: f64 = 1e-3;

#[derive(Debug, Parser, Serialize)]
#[command(name = "twolin", version, about = "The (1+1)-EA on the TwoLin dynamic benchmark")]
struct Cli {
    /// Master seed.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output file (default stdout).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// File of key=value lines, merged as flags; explicit flags win.
    #[arg(long, global = true, value_name = "FILE")]
    #[serde(skip)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "lowercase")]
enum Command {
    /// Drift matrix, eigen-decomposition and verdict.
    Analyze(AnalyzeArgs),
    /// One-step drift of (x_L, x_R) at a state.
    Drift(DriftArgs),
    /// Simulate the EA; a trajectory for one trial, a summary for several.
    Run(RunArgs),
    /// Sweep chi (and n), estimate the threshold.
    Scan(ScanArgs),
    /// Run the invariant suites.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, Args, Serialize)]
struct Rates {
    #[arg(long, allow_negative_numbers = true)]
    chi: f64,
    #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
    rho: f64,
    #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
    ell: f64,
}

impl Rates {
    fn params(&self, n: usize) -> twolin::Result<Params> {
        Params::new(self.chi, self.rho, self.ell, n)
    }
}

#[derive(Debug, Args, Serialize)]
struct AnalyzeArgs {
    #[command(flatten)]
    rates: Rates,
    /// Add the eigenbasis potential.
    #[arg(long)]
    potential: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum DriftMethod {
    Exact,
    Brute,
    Mc,
}

#[derive(Debug, Args, Serialize)]
struct DriftArgs {
    #[command(flatten)]
    rates: Rates,
    #[arg(long)]
    n: usize,
    #[arg(long = "x-l")]
    x_l: usize,
    #[arg(long = "x-r")]
    x_r: usize,
    #[arg(long, value_enum, default_value = "exact")]
    method: DriftMethod,
    /// Samples for `--method mc`.
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum StartKind {
    Uniform,
    AllZeros,
    Explicit,
    Zeros,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum PlacementKind {
    Uniform,
    Eigen,
}

#[derive(Debug, Args, Serialize)]
struct RunArgs {
    #[command(flatten)]
    rates: Rates,
    #[arg(long)]
    n: usize,
    #[arg(long, value_enum, default_value = "uniform")]
    start: StartKind,
    /// Left zero-bits for `--start explicit`.
    #[arg(long = "x-l")]
    x_l: Option<usize>,
    /// Right zero-bits for `--start explicit`.
    #[arg(long = "x-r")]
    x_r: Option<usize>,
    /// Zero-bit count for `--start zeros`.
    #[arg(long)]
    zeros: Option<usize>,
    #[arg(long, value_enum, default_value = "eigen")]
    placement: PlacementKind,
    /// Generations; overrides `--budget-mult`.
    #[arg(long)]
    budget: Option<u64>,
    /// Budget as a multiple of n ln n.
    #[arg(long, default_value_t = 30.0)]
    budget_mult: f64,
    #[arg(long, default_value_t = 1)]
    record_every: u64,
    #[arg(long, default_value_t = 1)]
    trials: usize,
    /// Append Y = x_L - gamma0 x_R to the trajectory.
    #[arg(long)]
    y_stat: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum ScanStart {
    Uniform,
    /// ceil(n^{3/4}) zero-bits in the gamma0 : 1 ratio.
    Sublinear,
}

#[derive(Debug, Args, Serialize)]
struct ScanArgs {
    #[arg(long, default_value_t = 0.5)]
    rho: f64,
    #[arg(long, default_value_t = 0.5)]
    ell: f64,
    #[arg(long, value_delimiter = ',', required = true)]
    chi_grid: Vec<f64>,
    #[arg(long, value_delimiter = ',', required = true)]
    n_list: Vec<usize>,
    #[arg(long, default_value_t = 50)]
    trials: usize,
    #[arg(long, default_value_t = 30.0)]
    budget_mult: f64,
    #[arg(long, value_enum, default_value = "uniform")]
    start: ScanStart,
    /// Write the summary JSON here.
    #[arg(long)]
    summary: Option<PathBuf>,
    /// Fit median hit time against n ln n at this chi.
    #[arg(long)]
    fit_chi: Option<f64>,
    /// Compare classifier sign with success at the first n instead.
    #[arg(long)]
    spotcheck: bool,
    /// Spot-check separation margin on |classifier|.
    #[arg(long, default_value_t = 0.005)]
    margin: f64,
}

#[derive(Debug, Args, Serialize)]
struct VerifyArgs {
    #[arg(long, default_value = "all")]
    suite: String,
    #[arg(long, hide = true)]
    inject_fault: Option<f64>,
}

enum Outcome {
    Ok,
    Violation,
}

fn sink(out: &Option<PathBuf>) -> io::Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_json<T: Serialize>(w: &mut dyn Write, v: &T) -> Res<()> {
    serde_json::to_writer_pretty(&mut *w, v)?;
    writeln!(w)?;
    Ok(())
}

fn write_csv<T: Serialize>(w: &mut dyn Write, rows: &[T]) -> Res<()> {
    let mut wr = csv::Writer::from_writer(w);
    for r in rows {
        wr.serialize(r)?;
    }
    wr.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct AnalyzeRow {
    chi: f64,
    rho: f64,
    ell: f64,
    a: f64,
    b: f64,
    c: f64,
    d: f64,
    gamma0: f64,
    lambda1: f64,
    lambda2: f64,
    e1_1: f64,
    e1_2: f64,
    e2_1: f64,
    e2_2: f64,
    classifier: f64,
    verdict: Verdict,
    near_boundary: bool,
    w1: Option<f64>,
    w2: Option<f64>,
    kappa1: Option<f64>,
    kappa2: Option<f64>,
}

fn analyze(a: &AnalyzeArgs, fmt: Format, w: &mut dyn Write) -> Res<Outcome> {
    let r = a.rates;
    // The matrix does not depend on n; any valid size checks the rates.
    r.params(2)?;
    let es = eigen_analysis(&DriftMatrix::from_rates(r.chi, r.rho, r.ell))?;
    let m = es.matrix;
    let pot = if a.potential { Some(build_potential(&es)?) } else { None };
    let row = AnalyzeRow {
        chi: r.chi,
        rho: r.rho,
        ell: r.ell,
        a: m.a,
        b: m.b,
        c: m.c,
        d: m.d,
        gamma0: es.gamma0,
        lambda1: es.lambda1,
        lambda2: es.lambda2,
        e1_1: es.e1[0],
        e1_2: es.e1[1],
        e2_1: es.e2[0],
        e2_2: es.e2[1],
        classifier: es.classifier,
        verdict: Verdict::from_classifier(es.classifier, DEFAULT_BOUNDARY_TOL),
        near_boundary: es.classifier.abs() < NEAR_BOUNDARY,
        w1: pot.map(|p| p.coeffs[0]),
        w2: pot.map(|p| p.coeffs[1]),
        kappa1: pot.map(|p| p.kappa1),
        kappa2: pot.map(|p| p.kappa2),
    };
    if row.near_boundary {
        eprintln!("note: |classifier| = {:.3e} is close to the efficiency boundary", es.classifier.abs());
    }
    match fmt {
        Format::Json => write_json(w, &row)?,
        Format::Csv => write_csv(w, &[row])?,
    }
    Ok(Outcome::Ok)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct DriftRow {
    chi: f64,
    rho: f64,
    ell: f64,
    n: usize,
    #[serde(rename = "x_L")]
    x_l: usize,
    #[serde(rename = "x_R")]
    x_r: usize,
    #[serde(rename = "dL")]
    d_l: f64,
    #[serde(rename = "dR")]
    d_r: f64,
    method: String,
    truncation_mass: Option<f64>,
    samples: Option<usize>,
    ci_dl: Option<f64>,
    ci_dr: Option<f64>,
}

fn drift(a: &DriftArgs, seed: u64, fmt: Format, w: &mut dyn Write) -> Res<Outcome> {
    let p = a.rates.params(a.n)?;
    let s = State::new(a.x_l, a.x_r);
    s.check(&p)?;
    let dv = match a.method {
        DriftMethod::Exact => exact_drift(s, &p)?,
        DriftMethod::Brute => brute_force_drift(s, &p)?,
        DriftMethod::Mc => {
            use rand::SeedableRng;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            mc_drift(s, &p, a.samples, &mut rng)?
        }
    };
    let (method, truncation_mass, samples, ci) = match dv.method {
        Method::Exact { truncation_mass } => ("exact", Some(truncation_mass), None, None),
        Method::BruteForce => ("brute", None, None, None),
        Method::MonteCarlo { samples, ci_halfwidth } => ("mc", None, Some(samples), Some(ci_halfwidth)),
    };
    let row = DriftRow {
        chi: p.chi,
        rho: p.rho,
        ell: p.ell,
        n: p.n,
        x_l: s.x_l,
        x_r: s.x_r,
        d_l: dv.d_l,
        d_r: dv.d_r,
        method: method.into(),
        truncation_mass,
        samples,
        ci_dl: ci.map(|c| c[0]),
        ci_dr: ci.map(|c| c[1]),
    };
    match fmt {
        Format::Json => write_json(w, &row)?,
        Format::Csv => write_csv(w, &[row])?,
    }
    Ok(Outcome::Ok)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct TrajectoryRow {
    t: u64,
    #[serde(rename = "x_L")]
    x_l: usize,
    #[serde(rename = "x_R")]
    x_r: usize,
    #[serde(rename = "Y", skip_serializing_if = "Option::is_none", default)]
    y: Option<f64>,
}

#[derive(Debug, Serialize)]
struct TrajectoryJson {
    seed: u64,
    budget: u64,
    hit: Option<u64>,
    budget_exhausted: bool,
    gamma0: Option<f64>,
    samples: Vec<TrajectoryRow>,
}

#[derive(Debug, Serialize)]
struct TrialRow {
    trial: usize,
    seed: u64,
    hit: Option<u64>,
    generations: u64,
}

fn start_rule(a: &RunArgs) -> Res<StartRule> {
    Ok(match a.start {
        StartKind::Uniform => StartRule::UniformRandom,
        StartKind::AllZeros => StartRule::AllZeros,
        StartKind::Explicit => match (a.x_l, a.x_r) {
            (Some(x_l), Some(x_r)) => StartRule::Explicit(State::new(x_l, x_r)),
            _ => return Err("--start explicit needs --x-l and --x-r".into()),
        },
        StartKind::Zeros => {
            let count = a.zeros.ok_or("--start zeros needs --zeros")?;
            let placement = match a.placement {
                PlacementKind::Uniform => Placement::Uniform,
                PlacementKind::Eigen => Placement::EigenRatio,
            };
            StartRule::Zeros { count, placement }
        }
    })
}

fn simulate(a: &RunArgs, seed: u64, fmt: Format, w: &mut dyn Write) -> Res<Outcome> {
    let p = a.rates.params(a.n)?;
    let budget = a.budget.unwrap_or_else(|| budget_for(a.n, a.budget_mult));
    let cfg = RunConfig::new(p, start_rule(a)?, budget, seed).with_record_every(a.record_every);
    if a.trials > 1 {
        let trajs = batch_run(&cfg.with_record_every(0), a.trials)?;
        let summary = BatchSummary::from_trajectories(&trajs, budget);
        eprintln!("successes: {} / {}", summary.successes, summary.trials);
        match fmt {
            Format::Json => write_json(w, &summary)?,
            Format::Csv => {
                let rows: Vec<TrialRow> = trajs
                    .iter()
                    .enumerate()
                    .map(|(i, t)| TrialRow {
                        trial: i,
                        seed: trial_seed(seed, i as u64),
                        hit: t.hit,
                        generations: t.generations(),
                    })
                    .collect();
                write_csv(w, &rows)?
            }
        }
        return Ok(Outcome::Ok);
    }
    let traj = run(&cfg)?;
    let gamma0 = if a.y_stat { Some(eigen_analysis(&build_matrix(&p))?.gamma0) } else { None };
    let rows: Vec<TrajectoryRow> = traj
        .samples
        .iter()
        .map(|s| TrajectoryRow { t: s.t, x_l: s.x_l, x_r: s.x_r, y: gamma0.map(|g| y_value(s.state(), g)) })
        .collect();
    match traj.hit {
        Some(t) => eprintln!("optimum after {t} generations"),
        None => eprintln!("budget of {budget} generations exhausted at {:?}", traj.final_state()),
    }
    match fmt {
        Format::Json => write_json(
            w,
            &TrajectoryJson { seed, budget, hit: traj.hit, budget_exhausted: traj.budget_exhausted, gamma0, samples: rows },
        )?,
        Format::Csv => write_csv(w, &rows)?,
    }
    Ok(Outcome::Ok)
}

fn scan(a: &ScanArgs, seed: u64, fmt: Format, w: &mut dyn Write) -> Res<Outcome> {
    if a.spotcheck {
        let cfg = SpotcheckConfig {
            rho: a.rho,
            ell: a.ell,
            chi_grid: a.chi_grid.clone(),
            n: a.n_list[0],
            trials: a.trials,
            budget_multiplier: a.budget_mult,
            margin: a.margin,
            seed,
        };
        let rep = asymmetric_spotcheck(&cfg)?;
        let agreement = rep.agreement();
        eprintln!("agreement at separated points: {agreement:?}");
        match fmt {
            Format::Json => write_json(w, &rep)?,
            Format::Csv => write_csv(w, &rep.rows)?,
        }
        if let Some(s) = &a.summary {
            write_json(&mut *sink(&Some(s.clone()))?, &rep)?;
        }
        return Ok(match agreement {
            Some(x) if x < 0.9 => Outcome::Violation,
            _ => Outcome::Ok,
        });
    }
    let start = match a.start {
        ScanStart::Uniform => StartRule::UniformRandom,
        ScanStart::Sublinear => {
            let n = *a.n_list.iter().min().unwrap_or(&2);
            StartRule::Zeros { count: (n as f64).powf(0.75).ceil() as usize, placement: Placement::EigenRatio }
        }
    };
    let cfg = SweepConfig {
        base: Params::new(1.0, a.rho, a.ell, 2)?,
        chi_grid: a.chi_grid.clone(),
        n_list: a.n_list.clone(),
        trials: a.trials,
        budget_multiplier: a.budget_mult,
        start,
        seed,
    };
    let res = sweep(&cfg)?;
    for t in &res.thresholds {
        eprintln!("n = {}: 0.5-crossing at chi = {:?}", t.n, t.chi);
    }
    let fit = a.fit_chi.map(|chi| scaling_fit(&res, chi));
    if let Some(f) = &fit {
        match f {
            Ok(f) => eprintln!("scaling at chi = {}: slope {:.4}, R^2 {:.4}", f.chi, f.fit.slope, f.fit.r_squared),
            Err(e) => eprintln!("scaling fit refused: {e}"),
        }
    }
    #[derive(Serialize)]
    struct Summary<'a> {
        #[serde(flatten)]
        result: &'a twolin::experiments::SweepResult,
        scaling: Option<twolin::experiments::ScalingFit>,
    }
    let summary = Summary { result: &res, scaling: fit.and_then(|f| f.ok()) };
    match fmt {
        Format::Json => write_json(w, &summary)?,
        Format::Csv => res.write_csv(&mut *w)?,
    }
    if let Some(s) = &a.summary {
        write_json(&mut *sink(&Some(s.clone()))?, &summary)?;
    }
    Ok(Outcome::Ok)
}

#[derive(Debug, Serialize)]
struct CheckRow<'a> {
    suite: &'a str,
    check: &'a str,
    instances: usize,
    max_error: Option<f64>,
    tolerance: Option<f64>,
    passed: bool,
}

fn verify(a: &VerifyArgs, seed: u64, fmt: Option<Format>, w: &mut dyn Write) -> Res<Outcome> {
    let suite: Suite = a.suite.parse()?;
    let opts = VerifyOptions { inject_fault: a.inject_fault, seed };
    let rep = run_suite(suite, &opts)?;
    let rows: Vec<CheckRow> = rep
        .checks
        .iter()
        .map(|c| CheckRow {
            suite: &c.suite,
            check: &c.name,
            instances: c.instances,
            max_error: c.max_error,
            tolerance: c.tolerance,
            passed: c.passed,
        })
        .collect();
    match fmt {
        Some(Format::Json) => write_json(w, &rep)?,
        Some(Format::Csv) => write_csv(w, &rows)?,
        None => {
            writeln!(w, "{:<6} {:<11} {:>9} {:>11}  check", "status", "suite", "instances", "max error")?;
            for r in &rows {
                let err = r.max_error.map_or("-".to_string(), |e| format!("{e:.2e}"));
                let status = if r.passed { "PASS" } else { "FAIL" };
                writeln!(w, "{status:<6} {:<11} {:>9} {err:>11}  {}", r.suite, r.instances, r.check)?;
            }
        }
    }
    for c in rep.checks.iter().filter(|c| !c.passed) {
        if let Some(o) = &c.offender {
            eprintln!("violation in {:?}: {}", c.name, serde_json::to_string(o)?);
        }
    }
    Ok(if rep.passed() { Outcome::Ok } else { Outcome::Violation })
}

fn dispatch(cli: &Cli) -> Res<Outcome> {
    let mut w = sink(&cli.out)?;
    let json = cli.format.unwrap_or(Format::Json);
    let csv = cli.format.unwrap_or(Format::Csv);
    let out = match &cli.cmd {
        Command::Analyze(a) => analyze(a, json, &mut *w)?,
        Command::Drift(a) => drift(a, cli.seed, json, &mut *w)?,
        Command::Run(a) if a.trials > 1 => simulate(a, cli.seed, json, &mut *w)?,
        Command::Run(a) => simulate(a, cli.seed, csv, &mut *w)?,
        Command::Scan(a) => scan(a, cli.seed, csv, &mut *w)?,
        Command::Verify(a) => verify(a, cli.seed, cli.format, &mut *w)?,
    };
    w.flush()?;
    Ok(out)
}

fn main() -> ExitCode {
    let args = match config::expand(std::env::args().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match serde_json::to_string(&cli) {
        Ok(s) => eprintln!("config: {s}"),
        Err(e) => eprintln!("config: <unserializable: {e}>"),
    }
    match dispatch(&cli) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::Violation) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
