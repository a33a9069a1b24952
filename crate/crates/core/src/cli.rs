//! The `postforge` command line.
//!
//! Exit codes: 0 success, 1 a check failed, 2 usage or input error,
//! 3 zero-overlap postselection, 4 acceptance probability exactly 1/2.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::automaton::{Automaton, AutomatonError};
use crate::circuit::{gate_stats, parse, to_text, Circuit, CircuitError};
use crate::fmt_f64;
use crate::pipeline::{build_all, decide_with, DecideOptions, PipelineError, PipelineParams};
use crate::sim::{self, SimError, StateVector};
use crate::synth::{self, reference, ControlMode, SynthError, SynthResult};

/// Tolerance used when neither `--tol` nor `POSTFORGE_TOL` is given.
pub const DEFAULT_TOL: f64 = 1e-9;
pub const TOL_ENV: &str = "POSTFORGE_TOL";

#[derive(Debug, Parser)]
#[command(
    name = "postforge",
    version,
    about = "Compile away intermediate postselections and check the result by simulation"
)]
pub struct Cli {
    /// Comparison tolerance (overrides POSTFORGE_TOL).
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Print extra diagnostics to stderr.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Synthesize a gadget and check it against its brute-force matrix.
    Synth(SynthArgs),
    /// Build one pipeline stage for an automaton.
    Build(BuildArgs),
    /// Simulate a circuit file.
    Sim(SimArgs),
    /// Build, simulate and judge the final circuit for an automaton.
    Decide(DecideArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SynthKind {
    Mcx,
    Cinc,
    Inc,
    Incmod,
    W,
    Or3,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    pub kind: SynthKind,
    /// Number of controls.
    #[arg(long)]
    pub k: Option<usize>,
    /// Counter width.
    #[arg(long)]
    pub n: Option<usize>,
    /// Modulus for `incmod`.
    #[arg(long)]
    pub modulus: Option<usize>,
    /// Use OR-controls for `cinc`.
    #[arg(long)]
    pub or: bool,
    /// Write the circuit here instead of stdout.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Stage {
    Qx,
    Vx,
    Uplus,
    Uminus,
    Final,
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    pub automaton: PathBuf,
    #[arg(long, value_enum)]
    pub stage: Stage,
    /// Repetitions of each accumulator.
    #[arg(long, default_value_t = 1)]
    pub r: usize,
    /// Width of the postselection counter `C`.
    #[arg(long = "counter-width", short = 'N')]
    pub counter_width: Option<usize>,
    /// Write the circuit here instead of stdout.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimArgs {
    pub circuit: PathBuf,
    /// Run on a maximally mixed input except for this clean qubit.
    #[arg(long)]
    pub dqc1_clean: Option<usize>,
}

#[derive(Debug, Args)]
pub struct DecideArgs {
    pub automaton: PathBuf,
    /// Repetitions of each accumulator.
    #[arg(long, default_value_t = 1)]
    pub r: usize,
    /// Route through the one-clean-qubit wrapper.
    #[arg(long)]
    pub dqc1: bool,
    /// Width of the postselection counter `C`.
    #[arg(long = "counter-width", short = 'N')]
    pub counter_width: Option<usize>,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    ZeroOverlap(String),
    #[error("acceptance probability is exactly 1/2")]
    HalfProbability,
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Failed(_) => 1,
            CliError::Usage(_) => 2,
            CliError::ZeroOverlap(_) => 3,
            CliError::HalfProbability => 4,
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> CliError {
        match e {
            SimError::ZeroOverlap { .. } => CliError::ZeroOverlap(e.to_string()),
            SimError::TooWide { .. } | SimError::WidthMismatch { .. } | SimError::InvalidCircuit(_) => {
                CliError::Usage(e.to_string())
            }
            other => CliError::Failed(other.to_string()),
        }
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> CliError {
        match e {
            PipelineError::HalfProbability => CliError::HalfProbability,
            PipelineError::Sim(s) => s.into(),
            PipelineError::CounterTooSmall { .. } | PipelineError::BadRepetitions(_) => CliError::Usage(e.to_string()),
            other => CliError::Failed(other.to_string()),
        }
    }
}

impl From<AutomatonError> for CliError {
    fn from(e: AutomatonError) -> CliError {
        match e {
            AutomatonError::HalfProbability => CliError::HalfProbability,
            other => CliError::Usage(other.to_string()),
        }
    }
}

impl From<SynthError> for CliError {
    fn from(e: SynthError) -> CliError {
        CliError::Usage(e.to_string())
    }
}

impl From<CircuitError> for CliError {
    fn from(e: CircuitError) -> CliError {
        CliError::Usage(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> CliError {
        CliError::Failed(e.to_string())
    }
}

/// `--tol`, else `POSTFORGE_TOL`, else [`DEFAULT_TOL`].
pub fn tolerance(flag: Option<f64>) -> Result<f64, CliError> {
    let tol = match flag {
        Some(t) => t,
        None => match std::env::var(TOL_ENV) {
            Ok(s) => s
                .trim()
                .parse()
                .map_err(|_| CliError::Usage(format!("{TOL_ENV}={s:?} is not a number")))?,
            Err(_) => DEFAULT_TOL,
        },
    };
    if tol.is_finite() && tol > 0.0 {
        Ok(tol)
    } else {
        Err(CliError::Usage(format!("tolerance must be positive, got {tol}")))
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn load_automaton(path: &Path) -> Result<Automaton, CliError> {
    Ok(read(path)?.parse()?)
}

fn emit(circuit: &Circuit, output: Option<&Path>, out: &mut dyn Write) -> Result<(), CliError> {
    match output {
        Some(p) => fs::write(p, to_text(circuit))?,
        None => out.write_all(to_text(circuit).as_bytes())?,
    }
    Ok(())
}

fn need(v: Option<usize>, flag: &str, kind: SynthKind) -> Result<usize, CliError> {
    v.ok_or_else(|| CliError::Usage(format!("{kind:?} needs --{flag}").to_lowercase()))
}

/// The brute-force reference is a dense `2^q x 2^q` matrix.
fn fits(qubits: usize) -> Result<(), CliError> {
    if qubits > sim::MAX_UNITARY_QUBITS {
        return Err(CliError::Usage(format!(
            "{qubits} data qubits exceeds the reference limit of {}",
            sim::MAX_UNITARY_QUBITS
        )));
    }
    Ok(())
}

fn synthesize(args: &SynthArgs) -> Result<(SynthResult, crate::linalg::CMatrix), CliError> {
    let mode = if args.or { ControlMode::Or } else { ControlMode::And };
    Ok(match args.kind {
        SynthKind::Mcx => {
            let k = need(args.k, "k", args.kind)?;
            fits(k + 1)?;
            let pols = vec![true; k];
            (synth::synth_mcx(k, &pols)?, reference::mcx(&pols))
        }
        SynthKind::Cinc => {
            let (n, k) = (need(args.n, "n", args.kind)?, need(args.k, "k", args.kind)?);
            fits(n + k)?;
            (
                synth::synth_controlled_inc(n, k, mode)?,
                reference::controlled_inc(n, k, mode),
            )
        }
        SynthKind::Inc => {
            let n = need(args.n, "n", args.kind)?;
            fits(n)?;
            (synth::synth_inc_pow2(n)?, reference::inc(n))
        }
        SynthKind::Incmod => {
            let m = need(args.modulus, "modulus", args.kind)?;
            let width = args
                .n
                .unwrap_or_else(|| (usize::BITS - m.saturating_sub(1).leading_zeros()) as usize);
            fits(width)?;
            (synth::synth_inc_mod(m, width)?, reference::inc_mod(m, width))
        }
        SynthKind::W => (synth::gadget_w_basis(), reference::w()),
        SynthKind::Or3 => (synth::gadget_or3(), reference::or3()),
    })
}

fn cmd_synth(args: &SynthArgs, tol: f64, out: &mut dyn Write) -> Result<bool, CliError> {
    let (result, expected) = synthesize(args)?;
    if result.circuit.num_qubits() > sim::MAX_QUBITS {
        return Err(CliError::Usage("gadget too wide to verify".into()));
    }
    let v = synth::verify(&result, &expected)?;
    if let Some(p) = &args.output {
        fs::write(p, to_text(&result.circuit))?;
    }
    writeln!(out, "residual {}", fmt_f64(v.max_deviation))?;
    writeln!(out, "ancilla_leak {}", fmt_f64(v.ancilla_leak))?;
    writeln!(out, "data_qubits {}", result.data_qubits)?;
    writeln!(out, "ancillas {}", result.ancillas.len())?;
    writeln!(out, "{}", gate_stats(&result.circuit))?;
    let ok = v.passes(tol);
    writeln!(out, "check {}", if ok { "pass" } else { "fail" })?;
    Ok(ok)
}

fn cmd_build(args: &BuildArgs, verbose: bool, out: &mut dyn Write) -> Result<bool, CliError> {
    let aut = load_automaton(&args.automaton)?;
    let params = PipelineParams::with_counter_width(aut, args.r, args.counter_width)?;
    let art = build_all(&params)?;
    let circuit = match args.stage {
        Stage::Qx => &art.qx,
        Stage::Vx => &art.vx,
        Stage::Uplus => &art.uplus,
        Stage::Uminus => &art.uminus,
        Stage::Final => &art.final_circuit,
    };
    if verbose {
        eprintln!("{}", gate_stats(circuit));
    }
    emit(circuit, args.output.as_deref(), out)?;
    Ok(true)
}

fn cmd_sim(args: &SimArgs, out: &mut dyn Write) -> Result<bool, CliError> {
    let circuit = parse(&read(&args.circuit)?)?;
    let report = match args.dqc1_clean {
        Some(q) => sim::run_dqc1_mixed(&circuit, q)?,
        None => sim::run(&circuit, StateVector::zero(circuit.num_qubits()))?,
    };
    out.write_all(report.to_text().as_bytes())?;
    Ok(true)
}

fn cmd_decide(args: &DecideArgs, verbose: bool, out: &mut dyn Write) -> Result<bool, CliError> {
    let aut = load_automaton(&args.automaton)?;
    let options = DecideOptions {
        r: args.r,
        dqc1: args.dqc1,
        c_width: args.counter_width,
    };
    let start = std::time::Instant::now();
    let report = decide_with(&aut, options)?;
    if verbose {
        eprintln!("decided in {:?}", start.elapsed());
    }
    out.write_all(report.to_text().as_bytes())?;
    Ok(report.correct() && report.bound_satisfied())
}

/// Run a parsed command. `Ok(false)` means it ran but a check failed.
pub fn execute(cli: &Cli, out: &mut dyn Write) -> Result<bool, CliError> {
    let verbose = cli.verbose > 0;
    match &cli.command {
        Command::Synth(a) => cmd_synth(a, tolerance(cli.tol)?, out),
        Command::Build(a) => cmd_build(a, verbose, out),
        Command::Sim(a) => cmd_sim(a, out),
        Command::Decide(a) => cmd_decide(a, verbose, out),
    }
}

/// Parse `std::env::args`, run, and map the outcome to an exit code.
pub fn main() -> std::process::ExitCode {
    let cli = Cli::parse();
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    let code = match execute(&cli, &mut lock) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("postforge: {e}");
            e.exit_code()
        }
    };
    let _ = lock.flush();
    std::process::ExitCode::from(code)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(args: &[&str]) -> (Result<bool, CliError>, String) {
        let cli = Cli::try_parse_from(std::iter::once("postforge").chain(args.iter().copied())).unwrap();
        let mut out = Vec::new();
        let r = execute(&cli, &mut out);
        (r, String::from_utf8(out).unwrap())
    }

    #[test]
    fn synth_reports_residual_and_stats() {
        let (r, out) = run(&["synth", "mcx", "--k", "2"]);
        assert!(r.unwrap());
        assert!(out.starts_with("residual "));
        assert!(out.contains("tcount 7"));
    }

    #[test]
    fn zero_width_increment_is_a_usage_error() {
        let (r, _) = run(&["synth", "inc", "--n", "0"]);
        assert_eq!(r.unwrap_err().exit_code(), 2);
        let (r, _) = run(&["synth", "cinc", "--n", "2"]);
        assert_eq!(r.unwrap_err().exit_code(), 2);
    }

    #[test]
    fn explicit_tolerance_must_be_positive() {
        assert!(tolerance(Some(0.0)).is_err());
        assert_eq!(tolerance(Some(1e-6)).unwrap(), 1e-6);
    }
}
