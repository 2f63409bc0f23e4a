//! Command-line front end: JSON on stdout, short summaries on stderr.
//!
//! Exit codes: 0 pass, 1 verification failure, 2 usage or parse error.

use std::fs::File;
use std::io::{self, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ipm_hull::cloud::{self, CloudConfig};
use ipm_hull::hull::{classify, k_range, Region};
use ipm_hull::laminate::{decompose, verify_tree};
use ipm_hull::separators::separation_bound;
use ipm_hull::state::{
    in_wave_cone, recover_covector, sample_wave_cone, wave_cone_residuals, State,
    ToleranceConfig, WaveDirection,
};
use ipm_hull::subsolution::{audit_stationary, f_of_t, infinite_time_bound, read_field, read_series};
use ipm_hull::Error;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "ipm-hull", version, about = "Lamination hull of the stationary IPM inclusion")]
struct Cli {
    /// JSON run configuration; unknown keys are rejected.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output path for commands that write files.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Equality tolerance [default: 1e-9].
    #[arg(long, global = true, value_name = "FLOAT")]
    tol: Option<f64>,
    /// Seed for sampling commands (overrides the config).
    #[arg(long, global = true, value_name = "INT")]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classify a state: OnK, X1..X4 or Outside.
    Classify {
        /// State JSON `{"rho":..,"v":[..],"m":[..]}` or an array of states;
        /// read from stdin when absent.
        state: Option<String>,
    },
    /// Laminate tree of a hull point.
    Decompose {
        state: Option<String>,
        /// Re-audit the tree and fail if any check does not hold.
        #[arg(long)]
        verify: bool,
    },
    /// Values of the separating functions.
    Separate { state: Option<String> },
    /// Wave-cone utilities.
    WaveCone {
        #[command(subcommand)]
        action: WaveConeAction,
    },
    /// Grow a point cloud and write it as CSV.
    HullApprox,
    /// Audit a stationary field file.
    Audit { field: PathBuf },
    /// Energy bound and height moment for a time-series file.
    TimeBound { series: PathBuf },
    /// Admissible interval of k for given rho and v.
    #[command(allow_negative_numbers = true)]
    KRange { rho: f64, v1: f64, v2: f64 },
}

#[derive(Subcommand)]
enum WaveConeAction {
    /// Membership, residuals and a covector for a state.
    Check { state: Option<String> },
    /// Realise a parametrised direction, e.g. `{"form":"sheared","rho":2,"e":[1,0],"ell":3}`.
    Realize { direction: Option<String> },
    /// Seeded sample of realised directions.
    Sample {
        #[arg(long)]
        count: Option<usize>,
    },
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct WaveConeConfig {
    seed: u64,
    count: usize,
}

/// A neighbourhood in which the cloud's range of `k` is reported.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Probe {
    rho: f64,
    v: [f64; 2],
    radius: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct HullApproxConfig {
    probes: Vec<Probe>,
}

impl Default for HullApproxConfig {
    fn default() -> Self {
        Self {
            probes: vec![
                Probe {
                    rho: 0.0,
                    v: [0.0, -0.5],
                    radius: 0.05,
                },
                Probe {
                    rho: 0.0,
                    v: [0.0, 0.5],
                    radius: 0.05,
                },
                Probe {
                    rho: 0.0,
                    v: [1.0, 0.0],
                    radius: 0.05,
                },
            ],
        }
    }
}

/// Parameter blocks per command. Defaults: `eq_tol = 1e-9`, closed
/// boundaries; cloud grid 9, 3 rounds, 20000 pairs per round, 5 segment
/// samples, seed 42; wave-cone sample seed 0, count 10.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RunConfig {
    tolerance: ToleranceConfig,
    cloud: CloudConfig,
    wave_cone: WaveConeConfig,
    hull_approx: HullApproxConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            tolerance: ToleranceConfig::default(),
            cloud: CloudConfig::default(),
            wave_cone: WaveConeConfig { seed: 0, count: 10 },
            hull_approx: HullApproxConfig::default(),
        }
    }
}

/// Failure classes mapped to exit codes.
enum Failure {
    Verification(String),
    Usage(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Parse(_) | Error::Json(_) | Error::Csv(_) | Error::Io(_) | Error::ShapeMismatch(_) => {
                Failure::Usage(e.to_string())
            }
            other => Failure::Verification(other.to_string()),
        }
    }
}

type Outcome = Result<bool, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Verification(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig, Failure> {
    let mut cfg = match &cli.config {
        None => RunConfig::default(),
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
            serde_json::from_str(&text)
                .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?
        }
    };
    if let Some(t) = cli.tol {
        cfg.tolerance.eq_tol = t;
    }
    if let Some(s) = cli.seed {
        cfg.cloud.seed = s;
        cfg.wave_cone.seed = s;
    }
    cfg.tolerance
        .validate()
        .map_err(|e| Failure::Usage(e.to_string()))?;
    Ok(cfg)
}

fn read_input(arg: &Option<String>) -> Result<String, Failure> {
    match arg {
        Some(s) => Ok(s.clone()),
        None => {
            let mut s = String::new();
            io::stdin()
                .read_to_string(&mut s)
                .map_err(|e| Failure::Usage(format!("stdin: {e}")))?;
            Ok(s)
        }
    }
}

fn parse_json<T: for<'de> Deserialize<'de>>(text: &str, what: &str) -> Result<T, Failure> {
    serde_json::from_str(text).map_err(|e| Failure::Usage(format!("malformed {what}: {e}")))
}

fn parse_state(arg: &Option<String>) -> Result<State, Failure> {
    let z: State = parse_json(&read_input(arg)?, "state JSON")?;
    if !z.is_finite() {
        return Err(Failure::Usage("state components must be finite".into()));
    }
    Ok(z)
}

fn emit(value: &impl Serialize) -> Result<(), Failure> {
    let stdout = io::stdout();
    let mut lock = stdout.lock();
    serde_json::to_writer_pretty(&mut lock, value)
        .map_err(|e| Failure::Usage(e.to_string()))?;
    writeln!(lock).map_err(|e| Failure::Usage(e.to_string()))
}

fn run(cli: &Cli) -> Outcome {
    let cfg = load_config(cli)?;
    let tol = cfg.tolerance;
    match &cli.command {
        Command::Classify { state } => {
            let text = read_input(state)?;
            let value: Value = parse_json(&text, "state JSON")?;
            if value.is_array() {
                let states: Vec<State> = parse_json(&text, "state array")?;
                let regions: Vec<Region> = states.iter().map(|z| classify(z, &tol)).collect();
                emit(&regions)?;
            } else {
                let z = parse_state(&Some(text))?;
                let r = classify(&z, &tol);
                eprintln!("{}", r.tag);
                emit(&r)?;
            }
            Ok(true)
        }
        Command::Decompose { state, verify } => {
            let z = parse_state(state)?;
            match decompose(&z, &tol) {
                Ok(tree) => {
                    emit(&tree)?;
                    if *verify {
                        let report = verify_tree(&tree, &tol);
                        eprintln!(
                            "verify: pass={} depth={} leaf={:.1e} split={:.1e} recombination={:.1e}",
                            report.pass,
                            report.depth,
                            report.max_leaf_residual,
                            report.max_split_residual,
                            report.max_recombination_error
                        );
                        return Ok(report.pass);
                    }
                    Ok(true)
                }
                Err(Error::OutsideHull { region, separators }) => {
                    emit(&json!({
                        "error": "outside_hull",
                        "region": region,
                        "separators": separators,
                    }))?;
                    eprintln!("state is outside the hull");
                    Ok(false)
                }
                Err(e) => Err(e.into()),
            }
        }
        Command::Separate { state } => {
            let z = parse_state(state)?;
            let values = separation_bound(&z, &tol);
            let firing: Vec<_> = values.iter().filter(|s| s.separates).map(|s| s.id.name()).collect();
            eprintln!("separating: {firing:?}");
            emit(&values)?;
            Ok(true)
        }
        Command::WaveCone { action } => wave_cone(action, &cfg, &tol),
        Command::HullApprox => hull_approx(cli, &cfg, &tol),
        Command::Audit { field } => {
            let f = read_field(open(field)?)?;
            let report = audit_stationary(&f, &tol);
            eprintln!(
                "audit: energy={:.3e} bound={:.3e} violation={:.3} curl={:.3e} flags={:?}",
                report.v_energy,
                report.certified_bound,
                report.hull_violation_measure,
                report.curl_residual,
                report.flags
            );
            emit(&report)?;
            Ok(report.pass)
        }
        Command::TimeBound { series } => {
            let s = read_series(open(series)?)?;
            let f = f_of_t(&s)?;
            let bound = infinite_time_bound(&s, &tol)?;
            eprintln!(
                "time bound: lhs={:.6} rhs={:.6} pass={}; max F discrepancy {:.3e}",
                bound.lhs, bound.rhs, bound.pass, f.max_discrepancy
            );
            emit(&json!({ "bound": bound, "f_of_t": f }))?;
            Ok(bound.pass)
        }
        Command::KRange { rho, v1, v2 } => {
            let r = k_range(*rho, [*v1, *v2], &tol)?;
            emit(&r)?;
            Ok(true)
        }
    }
}

fn open(path: &Path) -> Result<File, Failure> {
    File::open(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn wave_cone(action: &WaveConeAction, cfg: &RunConfig, tol: &ToleranceConfig) -> Outcome {
    match action {
        WaveConeAction::Check { state } => {
            let z = parse_state(state)?;
            let inside = in_wave_cone(&z, tol);
            emit(&json!({
                "in_wave_cone": inside,
                "residuals": wave_cone_residuals(&z),
                "covector": recover_covector(&z, tol),
            }))?;
            Ok(true)
        }
        WaveConeAction::Realize { direction } => {
            let w: WaveDirection = parse_json(&read_input(direction)?, "wave direction JSON")?;
            let z = w.realize()?;
            emit(&z)?;
            Ok(true)
        }
        WaveConeAction::Sample { count } => {
            let count = count.unwrap_or(cfg.wave_cone.count);
            let states = sample_wave_cone(cfg.wave_cone.seed, count);
            let ok = states.iter().all(|z| in_wave_cone(z, tol));
            eprintln!("{} directions, all in the wave cone: {ok}", states.len());
            emit(&states)?;
            Ok(ok)
        }
    }
}

fn hull_approx(cli: &Cli, cfg: &RunConfig, tol: &ToleranceConfig) -> Outcome {
    let grown = cloud::grow_cloud_with_tol(&cfg.cloud, tol)?;
    let containment = cloud::containment_report(&grown.points, tol);
    let mut probes = Vec::new();
    for p in &cfg.hull_approx.probes {
        let coverage = cloud::k_coverage(&grown.points, p.rho, p.v, p.radius, tol)?;
        let theory = k_range(p.rho, p.v, tol)?;
        probes.push(json!({ "probe": p, "coverage": coverage, "k_range": theory }));
    }
    let summary = json!({
        "config": cfg.cloud,
        "points": grown.len(),
        "rounds": grown.stats,
        "containment": {
            "total": containment.total,
            "counts": containment.counts,
            "violations": containment.violations.len(),
        },
        "probes": probes,
    });
    eprintln!(
        "{} points, {} outside the hull",
        grown.len(),
        containment.violations.len()
    );
    match &cli.out {
        Some(path) => {
            let file = File::create(path)
                .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
            cloud::write_csv(&grown, BufWriter::new(file), tol)?;
            emit(&summary)?;
        }
        None => {
            cloud::write_csv(&grown, io::stdout().lock(), tol)?;
            eprintln!("{}", serde_json::to_string(&summary).expect("summary serialises"));
        }
    }
    Ok(containment.violations.is_empty())
}
