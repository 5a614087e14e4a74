use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use povm_forge::analysis::SolverOptions;
use povm_forge::cli::{run_command, CliError, Document, InstrumentKind, RunOptions};
use povm_forge::observables::POVM_TOL;
use povm_forge::realization::{DEFAULT_BUDGET, DEFAULT_CERT_TOL};

/// Observables, least-disturbing channels and sequential realizations.
///
/// Commands: validate, reduce, dilate, least-disturbing, min-outdim,
/// compare, extreme, realize-obs, realize-chan, cert-equiv, seq-joint.
/// Exit status is 0 on success, 1 on errors, 2 when a search is undecided.
#[derive(Parser, Debug)]
#[command(name = "povm-forge", version)]
struct Args {
    /// Command to run.
    command: String,
    /// Names of the objects in the input document.
    objects: Vec<String>,
    #[arg(long)]
    input: PathBuf,
    /// Write the report here instead of standard output.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Validation tolerance for input objects.
    #[arg(long, default_value_t = POVM_TOL)]
    tol: f64,
    /// Residual a solver certificate must reach.
    #[arg(long = "cert-tol", default_value_t = DEFAULT_CERT_TOL)]
    cert_tol: f64,
    /// Iteration budget of the feasibility solver.
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    budget: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Enable the brute-force grid oracles at this resolution.
    #[arg(long)]
    grid: Option<usize>,
    /// First instrument for seq-joint: luders or least-disturbing.
    #[arg(long, default_value = "luders")]
    instrument: String,
    /// Print wall-clock time to standard error.
    #[arg(long)]
    timings: bool,
}

fn run(args: &Args) -> Result<i32, CliError> {
    let text = std::fs::read_to_string(&args.input)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", args.input.display())))?;
    let doc = Document::parse(&text)?;
    let opts = RunOptions {
        tol: args.tol,
        solver: SolverOptions {
            budget: args.budget,
            cert_tol: args.cert_tol,
            grid: args.grid,
        },
        seed: args.seed,
        instrument: args.instrument.parse::<InstrumentKind>()?,
    };
    let start = Instant::now();
    let report = run_command(&args.command, &args.objects, &doc, &opts)?;
    if args.timings {
        eprintln!("{}: {:.3} s", args.command, start.elapsed().as_secs_f64());
    }
    let rendered = report.render(&opts);
    match &args.output {
        Some(path) => std::fs::write(path, rendered)
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?,
        None => print!("{rendered}"),
    }
    Ok(report.exit_code())
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&args) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
