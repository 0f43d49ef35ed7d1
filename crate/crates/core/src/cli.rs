//! Command-line front end.
//!
//! Three subcommands write CSV to `--out` (or stdout): `simulate` a trajectory,
//! `converge` for a max-norm convergence table, and `stability` for a scan of
//! the characteristic roots. When `--out` is given, a `key=value` manifest is
//! written next to it as `<out>.manifest`; the CSV itself carries no timestamp
//! so reruns are byte-identical.
//!
//! Exit codes: 0 success, 2 stability or domain violation, 64 usage error,
//! 74 I/O failure.

use std::f64::consts::TAU;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};

use crate::analysis::{convergence_study, run_trajectory, ExperimentSpec, Scheme};
use crate::error::Error;
use crate::oscillator::{PhaseState, StabilityVerdict};

pub const EXIT_OK: i32 = 0;
pub const EXIT_STABILITY: i32 = 2;
pub const EXIT_USAGE: i32 = 64;
pub const EXIT_IO: i32 = 74;

#[derive(Debug, Parser)]
#[command(name = "simpson-symplectic", version, about = "Variational symplectic schemes for the harmonic oscillator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate one trajectory and write t, p, q, H, H_d per node.
    Simulate(SimulateArgs),
    /// Max-norm errors and convergence orders over several meshes.
    Converge(ConvergeArgs),
    /// Characteristic-root stability scan over a range of ωh.
    Stability(StabilityArgs),
}

/// Oscillator parameters. The initial state is `(p, q) = (mω, 0)`, i.e. the
/// exact solution is `q(t) = sin ωt`.
#[derive(Debug, Clone, Args)]
pub struct OscillatorArgs {
    #[arg(long, default_value_t = 1.0)]
    pub mass: f64,
    #[arg(long, default_value_t = TAU)]
    pub omega: f64,
    #[arg(long, default_value_t = 1.0)]
    pub periods: f64,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[arg(long, default_value = "simpson")]
    pub scheme: Scheme,
    #[command(flatten)]
    pub oscillator: OscillatorArgs,
    #[arg(long, default_value_t = 15)]
    pub steps: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ConvergeArgs {
    #[arg(long, default_value = "simpson")]
    pub scheme: Scheme,
    #[command(flatten)]
    pub oscillator: OscillatorArgs,
    /// Comma-separated, strictly increasing mesh counts.
    #[arg(long, value_delimiter = ',', default_value = "10,20,40")]
    pub meshes: Vec<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct StabilityArgs {
    #[arg(long, default_value_t = 0.1, allow_negative_numbers = true)]
    pub s_min: f64,
    #[arg(long, default_value_t = 3.5, allow_negative_numbers = true)]
    pub s_max: f64,
    /// Number of evenly spaced samples; a single point samples `--s-min`.
    #[arg(long, default_value_t = 50)]
    pub points: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Stability(String),
    Io(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::OutsideStabilityWindow { .. } | Error::SingularElimination { .. } | Error::Domain(_) => {
                Failure::Stability(e.to_string())
            }
            _ => Failure::Usage(e.to_string()),
        }
    }
}

/// Full-precision CSV number (17 significant digits).
fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn experiment(osc: &OscillatorArgs, scheme: Scheme, mesh_counts: Vec<usize>) -> ExperimentSpec {
    ExperimentSpec {
        mass: osc.mass,
        omega: osc.omega,
        period_count: osc.periods,
        mesh_counts,
        scheme,
        initial_state: PhaseState::new(osc.mass * osc.omega, 0.0),
    }
}

fn simulate_csv(args: &SimulateArgs) -> Result<String, Failure> {
    if args.steps < 1 {
        return Err(Failure::Usage("--steps must be >= 1".into()));
    }
    let spec = experiment(&args.oscillator, args.scheme, vec![args.steps]);
    let record = run_trajectory(&spec, args.steps)?;
    let mut csv = String::from("t,p,q,H,H_d\n");
    for j in 0..record.len() {
        let y = record.states[j];
        let _ = writeln!(
            csv,
            "{},{},{},{},{}",
            num(record.times[j]),
            num(y.p),
            num(y.q),
            num(record.energies_exact[j]),
            num(record.energies_discrete[j])
        );
    }
    Ok(csv)
}

fn converge_csv(args: &ConvergeArgs) -> Result<String, Failure> {
    let spec = experiment(&args.oscillator, args.scheme, args.meshes.clone());
    let report = convergence_study(&spec)?;
    let mut csv = String::from("quantity,N,error,order,verdict\n");
    for q in &report.quantities {
        for (i, (&n, &err)) in report.mesh_counts.iter().zip(&q.errors).enumerate() {
            let order = match i.checked_sub(1).and_then(|k| q.estimate.orders.get(k)) {
                Some(o) => num(*o),
                None => String::new(),
            };
            let _ = writeln!(csv, "{},{},{},{},{}", q.quantity.name(), n, num(err), order, q.estimate.verdict);
        }
    }
    Ok(csv)
}

/// Sample points of a stability scan.
pub fn stability_grid(s_min: f64, s_max: f64, points: usize) -> Result<Vec<f64>, String> {
    if !(s_min.is_finite() && s_max.is_finite()) || s_min < 0.0 || s_max < s_min {
        return Err(format!("invalid range: need 0 <= s-min <= s-max, got {s_min}..{s_max}"));
    }
    match points {
        0 => Err("--points must be >= 1".into()),
        1 => Ok(vec![s_min]),
        n => {
            let step = (s_max - s_min) / (n - 1) as f64;
            Ok((0..n).map(|i| if i == n - 1 { s_max } else { s_min + i as f64 * step }).collect())
        }
    }
}

fn stability_csv(args: &StabilityArgs) -> Result<String, Failure> {
    let grid = stability_grid(args.s_min, args.s_max, args.points).map_err(Failure::Usage)?;
    let mut csv = String::from("s,discriminant,max_root_modulus,stable\n");
    for s in grid {
        let v = StabilityVerdict::at(s);
        let _ = writeln!(csv, "{},{},{},{}", num(s), num(v.discriminant), num(v.root_modulus), v.stable);
    }
    Ok(csv)
}

fn manifest(command: &str, params: &[(&str, String)]) -> String {
    let mut text = format!("command={command}\n");
    for (k, v) in params {
        let _ = writeln!(text, "{k}={v}");
    }
    let _ = writeln!(text, "version={}", env!("CARGO_PKG_VERSION"));
    let stamp = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let _ = writeln!(text, "timestamp={stamp}");
    text
}

fn oscillator_params(osc: &OscillatorArgs) -> Vec<(&'static str, String)> {
    vec![
        ("mass", num(osc.mass)),
        ("omega", num(osc.omega)),
        ("periods", num(osc.periods)),
        ("initial_p", num(osc.mass * osc.omega)),
        ("initial_q", num(0.0)),
    ]
}

/// Path of the manifest sidecar written next to `out`.
pub fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".manifest");
    PathBuf::from(name)
}

fn emit(out: Option<&Path>, csv: &str, manifest_text: String, stdout: &mut dyn Write) -> Result<(), Failure> {
    let io = |e: std::io::Error| Failure::Io(e.to_string());
    match out {
        Some(path) => {
            std::fs::write(path, csv).map_err(io)?;
            std::fs::write(manifest_path(path), manifest_text).map_err(io)
        }
        None => stdout.write_all(csv.as_bytes()).map_err(io),
    }
}

fn dispatch(cli: &Cli, stdout: &mut dyn Write) -> Result<(), Failure> {
    match &cli.command {
        Command::Simulate(args) => {
            let csv = simulate_csv(args)?;
            let mut params = vec![("scheme", args.scheme.to_string())];
            params.extend(oscillator_params(&args.oscillator));
            params.push(("steps", args.steps.to_string()));
            emit(args.out.as_deref(), &csv, manifest("simulate", &params), stdout)
        }
        Command::Converge(args) => {
            let csv = converge_csv(args)?;
            let mut params = vec![("scheme", args.scheme.to_string())];
            params.extend(oscillator_params(&args.oscillator));
            let meshes: Vec<String> = args.meshes.iter().map(|n| n.to_string()).collect();
            params.push(("meshes", meshes.join(",")));
            emit(args.out.as_deref(), &csv, manifest("converge", &params), stdout)
        }
        Command::Stability(args) => {
            let csv = stability_csv(args)?;
            let params = [
                ("s_min", num(args.s_min)),
                ("s_max", num(args.s_max)),
                ("points", args.points.to_string()),
            ];
            emit(args.out.as_deref(), &csv, manifest("stability", &params), stdout)
        }
    }
}

/// Parses `args` (including the program name) and runs the command, returning
/// the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let sink: &mut dyn Write = if e.use_stderr() { stderr } else { stdout };
            let _ = sink.write_all(text.as_bytes());
            return code;
        }
    };
    match dispatch(&cli, stdout) {
        Ok(()) => EXIT_OK,
        Err(failure) => {
            let (code, msg) = match failure {
                Failure::Usage(m) => (EXIT_USAGE, m),
                Failure::Stability(m) => (EXIT_STABILITY, m),
                Failure::Io(m) => (EXIT_IO, m),
            };
            let _ = writeln!(stderr, "error: {msg}");
            code
        }
    }
}
