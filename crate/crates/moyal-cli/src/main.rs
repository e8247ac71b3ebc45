//! Configuration-driven runner: `verify` executes invariant suites and emits
//! machine-readable reports, `evolve` runs one of the model equations and
//! writes its trajectory, `calibrate` regenerates the truncation-error table.
//! Identical config + seed produces byte-identical outputs.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

use moyal::doi::ScalarFunction;
use moyal::evolve::{
    blow_up_monitor, solve_allen_cahn, solve_navier_stokes, solve_nls, Integrator,
    NemytskijRoute, SolveConfig, TrajectoryRecord, Verdict,
};
use moyal::lp::leray_project;
use moyal::random::{
    band_limited_symbol, hermitian_band_limited_symbol, normalize_symbol, rng_from_seed,
};
use moyal::suites::{ccr_residual, run_suite, suite_names, LabConfig, SuiteReport};

const REPORT_VERSION: u32 = 1;

#[derive(Parser)]
#[command(name = "moyal", about = "noncommutative-plane laboratory runner", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run invariant suites and write JSON reports
    Verify {
        #[arg(long)]
        config: PathBuf,
        /// output directory (overrides the config)
        #[arg(long)]
        out: Option<PathBuf>,
        /// RNG seed (overrides the config)
        #[arg(long)]
        seed: Option<u64>,
        /// suite to run (repeatable; overrides the config list)
        #[arg(long = "suite")]
        suites: Vec<String>,
    },
    /// Run the configured evolution equation and write its trajectory
    Evolve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Regenerate the truncation-error table used by verify thresholds
    Calibrate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Config {
    theta0: f64,
    n: usize,
    m: usize,
    t_max: f64,
    seed: u64,
    #[serde(default)]
    out_dir: Option<String>,
    #[serde(default)]
    suites: Option<Vec<String>>,
    #[serde(default)]
    evolve: Option<EvolveConfig>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct EvolveConfig {
    equation: String,
    horizon: f64,
    dt: f64,
    #[serde(default = "default_record_every")]
    record_every: usize,
    #[serde(default)]
    snapshot_every: usize,
    #[serde(default = "default_integrator")]
    integrator: String,
    #[serde(default)]
    params: EquationParams,
}

fn default_record_every() -> usize {
    5
}

fn default_integrator() -> String {
    "etd1".into()
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct EquationParams {
    #[serde(default)]
    mu: Option<f64>,
    #[serde(default)]
    p: Option<u32>,
    #[serde(default)]
    f_name: Option<String>,
    #[serde(default)]
    amplitude: Option<f64>,
}

fn validate(cfg: &Config) -> Result<(), String> {
    if !(cfg.theta0 > 0.0) || !cfg.theta0.is_finite() {
        return Err(format!("field 'theta0' must be positive and finite, got {}", cfg.theta0));
    }
    if cfg.n < 2 {
        return Err(format!("field 'n' must be at least 2, got {}", cfg.n));
    }
    if cfg.m < 8 || cfg.m % 2 != 0 {
        return Err(format!("field 'm' must be even and at least 8, got {}", cfg.m));
    }
    if !(cfg.t_max > 0.0) {
        return Err(format!("field 't_max' must be positive, got {}", cfg.t_max));
    }
    if let Some(names) = &cfg.suites {
        for s in names {
            if !suite_names().contains(&s.as_str()) {
                return Err(format!("field 'suites' names unknown suite '{s}'"));
            }
        }
    }
    if let Some(ev) = &cfg.evolve {
        if !["allen_cahn", "nls", "navier_stokes", "none"].contains(&ev.equation.as_str()) {
            return Err(format!("field 'evolve.equation' has unknown value '{}'", ev.equation));
        }
        if !(ev.horizon > 0.0) {
            return Err(format!("field 'evolve.horizon' must be positive, got {}", ev.horizon));
        }
        if !(ev.dt > 0.0) {
            return Err(format!("field 'evolve.dt' must be positive, got {}", ev.dt));
        }
        if !["etd1", "etd2rk"].contains(&ev.integrator.as_str()) {
            return Err(format!(
                "field 'evolve.integrator' must be etd1 or etd2rk, got '{}'",
                ev.integrator
            ));
        }
    }
    Ok(())
}

fn load_config(path: &Path) -> Result<Config, String> {
    let text =
        fs::read_to_string(path).map_err(|e| format!("cannot read config {path:?}: {e}"))?;
    let cfg: Config = toml::from_str(&text).map_err(|e| format!("config parse error: {e}"))?;
    validate(&cfg)?;
    Ok(cfg)
}

#[derive(Serialize)]
struct MergedReport<'a> {
    report_version: u32,
    seed: u64,
    pass: bool,
    suites: &'a [SuiteReport],
}

fn cmd_verify(
    config: PathBuf,
    out: Option<PathBuf>,
    seed: Option<u64>,
    suites_flag: Vec<String>,
) -> ExitCode {
    let cfg = match load_config(&config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let out_dir = out
        .or_else(|| cfg.out_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    if let Err(e) = fs::create_dir_all(&out_dir) {
        eprintln!("error: cannot create output directory {out_dir:?}: {e}");
        return ExitCode::from(2);
    }
    let selected: Vec<String> = if !suites_flag.is_empty() {
        suites_flag
    } else {
        cfg.suites.clone().unwrap_or_else(|| {
            suite_names().iter().map(|s| s.to_string()).collect()
        })
    };
    for s in &selected {
        if !suite_names().contains(&s.as_str()) {
            eprintln!("error: unknown suite '{s}'");
            return ExitCode::from(2);
        }
    }
    let lab = LabConfig {
        theta0: cfg.theta0,
        n: cfg.n,
        m: cfg.m,
        t_max: cfg.t_max,
        seed: seed.unwrap_or(cfg.seed),
    };

    let mut reports = Vec::new();
    for name in &selected {
        match run_suite(name, &lab) {
            Ok(rep) => {
                println!(
                    "suite {:<20} {}  (residual {:.3e}, threshold {:.3e})",
                    rep.suite,
                    if rep.pass { "pass" } else { "FAIL" },
                    rep.max_residual,
                    rep.threshold
                );
                reports.push(rep);
            }
            Err(e) => {
                println!("suite {name:<20} ERROR: {e}");
                reports.push(SuiteReport {
                    suite: name.clone(),
                    cases: 0,
                    max_residual: f64::INFINITY,
                    threshold: 0.0,
                    pass: false,
                    notes: vec![format!("suite error: {e}")],
                });
            }
        }
    }
    reports.sort_by(|a, b| a.suite.cmp(&b.suite));
    for rep in &reports {
        let path = out_dir.join(format!("suite-{}.json", rep.suite));
        if let Err(e) = fs::write(&path, pretty_json(rep)) {
            eprintln!("error writing {path:?}: {e}");
            return ExitCode::from(2);
        }
    }
    let pass = reports.iter().all(|r| r.pass);
    let merged = MergedReport { report_version: REPORT_VERSION, seed: lab.seed, pass, suites: &reports };
    if let Err(e) = fs::write(out_dir.join("report.json"), pretty_json(&merged)) {
        eprintln!("error writing merged report: {e}");
        return ExitCode::from(2);
    }
    if pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn pretty_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serialization cannot fail");
    s.push('\n');
    s
}

#[derive(Serialize)]
struct EvolveSummary {
    report_version: u32,
    equation: String,
    seed: u64,
    steps_recorded: usize,
    final_t: f64,
    final_l2: f64,
    conservation_drift: f64,
    energy_monotone: bool,
    max_divergence_residual: f64,
    max_hermitian_residual: f64,
    max_advection_orthogonality: f64,
    sup_ratio: f64,
    persistence_verdict: String,
    dt_final: f64,
    blow_up_t: Option<f64>,
}

fn cmd_evolve(config: PathBuf, out: Option<PathBuf>, seed: Option<u64>) -> ExitCode {
    let cfg = match load_config(&config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let Some(ev) = &cfg.evolve else {
        eprintln!("error: evolve requires an [evolve] section in the config");
        return ExitCode::from(2);
    };
    if ev.equation == "none" {
        eprintln!("error: field 'evolve.equation' is 'none'");
        return ExitCode::from(2);
    }
    let out_dir = out
        .or_else(|| cfg.out_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    if let Err(e) = fs::create_dir_all(&out_dir) {
        eprintln!("error: cannot create output directory {out_dir:?}: {e}");
        return ExitCode::from(2);
    }
    let seed = seed.unwrap_or(cfg.seed);
    let theta = match moyal::theta::ThetaData::new(cfg.theta0) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let grid = match moyal::symbol::GridSpec::new(cfg.t_max, cfg.m, theta) {
        Ok(g) => g,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let amplitude = ev.params.amplitude.unwrap_or(0.5);
    let solve_cfg = SolveConfig {
        dt: ev.dt,
        integrator: if ev.integrator == "etd2rk" { Integrator::Etd2Rk } else { Integrator::Etd1 },
        n: cfg.n,
        record_every: ev.record_every,
        ..Default::default()
    };

    let mut rng = rng_from_seed(seed);
    let record: Result<TrajectoryRecord, moyal::MoyalError> = match ev.equation.as_str() {
        "allen_cahn" => {
            let mut u0 = hermitian_band_limited_symbol(&grid, 0.45 * cfg.t_max, &mut rng);
            normalize_symbol(&mut u0);
            u0.data.mapv_inplace(|z| z * amplitude);
            let f = match ev.params.f_name.as_deref().unwrap_or("cubic_reaction") {
                "zero" => ScalarFunction::windowed("0", |_| 0.0, |_| 0.0, 2.0),
                "sin" => ScalarFunction::sin_windowed(2.0),
                "cube" => ScalarFunction::cube_windowed(2.0),
                "cubic_reaction" => ScalarFunction::cubic_reaction(2.0),
                other => {
                    eprintln!("error: field 'evolve.params.f_name' has unknown value '{other}'");
                    return ExitCode::from(2);
                }
            };
            solve_allen_cahn(&f, &u0, ev.horizon, &solve_cfg, NemytskijRoute::FunctionalCalculus)
        }
        "nls" => {
            let mut u0 = band_limited_symbol(&grid, 0.4 * cfg.t_max, &mut rng);
            normalize_symbol(&mut u0);
            u0.data.mapv_inplace(|z| z * amplitude);
            let mu = ev.params.mu.unwrap_or(1.0);
            let p = ev.params.p.unwrap_or(3);
            solve_nls(mu, p, &u0, ev.horizon, &solve_cfg)
        }
        "navier_stokes" => {
            let a = hermitian_band_limited_symbol(&grid, 0.4 * cfg.t_max, &mut rng);
            let b = hermitian_band_limited_symbol(&grid, 0.4 * cfg.t_max, &mut rng);
            match leray_project(&[a, b]) {
                Ok(mut field) => {
                    let scale = (field[0].parseval_norm().powi(2)
                        + field[1].parseval_norm().powi(2))
                    .sqrt();
                    for comp in &mut field {
                        comp.data.mapv_inplace(|z| z * (amplitude / scale));
                    }
                    solve_navier_stokes(&field, ev.horizon, &solve_cfg)
                }
                Err(e) => Err(e),
            }
        }
        _ => unreachable!("validated earlier"),
    };

    let record = match record {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };

    if let Err(e) = moyal::io::write_trajectory_csv(&record, &out_dir.join("trajectory.csv")) {
        eprintln!("error writing trajectory: {e}");
        return ExitCode::from(2);
    }
    if ev.snapshot_every > 0 {
        for (k, state) in record.states.iter().enumerate() {
            if k % ev.snapshot_every == 0 {
                for (c, sym) in state.iter().enumerate() {
                    let path = out_dir.join(format!("state-{k:05}-c{c}.bin"));
                    if let Err(e) = moyal::io::write_symbol(sym, &path) {
                        eprintln!("error writing snapshot: {e}");
                        return ExitCode::from(2);
                    }
                }
            }
        }
    }

    let report = blow_up_monitor(&record, 0.5, 1e3);
    let summary = EvolveSummary {
        report_version: REPORT_VERSION,
        equation: ev.equation.clone(),
        seed,
        steps_recorded: record.norms.len(),
        final_t: record.times.last().copied().unwrap_or(0.0),
        final_l2: record.final_l2(),
        conservation_drift: record.conservation_drift(),
        energy_monotone: record.energy_monotone(1e-8),
        max_divergence_residual: record
            .norms
            .iter()
            .map(|r| r.divergence_residual)
            .fold(0.0, f64::max),
        max_hermitian_residual: record
            .norms
            .iter()
            .map(|r| r.hermitian_residual)
            .fold(0.0, f64::max),
        max_advection_orthogonality: record
            .norms
            .iter()
            .map(|r| r.advection_orthogonality)
            .fold(0.0, f64::max),
        sup_ratio: report.sup_ratio,
        persistence_verdict: match report.verdict {
            Verdict::GlobalOk => "GLOBAL_OK".into(),
            Verdict::Flagged => "FLAGGED".into(),
        },
        dt_final: record.dt_final,
        blow_up_t: record.blow_up,
    };
    if let Err(e) = fs::write(out_dir.join("summary.json"), pretty_json(&summary)) {
        eprintln!("error writing summary: {e}");
        return ExitCode::from(2);
    }
    if record.blow_up.is_some() {
        eprintln!("numerical blow-up declared at t = {:.6}", record.blow_up.unwrap());
        return ExitCode::from(3);
    }
    ExitCode::SUCCESS
}

#[derive(Serialize)]
struct CalibrationReport {
    report_version: u32,
    theta0: f64,
    mask: String,
    epsilon: Vec<(usize, f64)>,
}

fn cmd_calibrate(config: PathBuf, out: Option<PathBuf>) -> ExitCode {
    let cfg = match load_config(&config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let out_dir = out
        .or_else(|| cfg.out_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    if let Err(e) = fs::create_dir_all(&out_dir) {
        eprintln!("error: cannot create output directory {out_dir:?}: {e}");
        return ExitCode::from(2);
    }
    let theta = match moyal::theta::ThetaData::new(cfg.theta0) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let mut table = Vec::new();
    for n in [16usize, 32, 64, 128] {
        let eps = ccr_residual(theta, n);
        println!("epsilon({n}) = {eps:.6e}");
        table.push((n, eps));
    }
    let report = CalibrationReport {
        report_version: REPORT_VERSION,
        theta0: cfg.theta0,
        mask: "leading 3N/8 block".into(),
        epsilon: table,
    };
    if let Err(e) = fs::write(out_dir.join("calibration.json"), pretty_json(&report)) {
        eprintln!("error writing calibration: {e}");
        return ExitCode::from(2);
    }
    ExitCode::SUCCESS
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Verify { config, out, seed, suites } => cmd_verify(config, out, seed, suites),
        Command::Evolve { config, out, seed } => cmd_evolve(config, out, seed),
        Command::Calibrate { config, out } => cmd_calibrate(config, out),
    }
}
