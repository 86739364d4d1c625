mod report;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand, ValueEnum};
use eo_fragile::detector::{analyze_program, DetectorConfig, Verdict};
use eo_fragile::inliner::inline_object;
use eo_fragile::interpreter::{
    differential_check, evaluate, with_large_stack, OutcomeView, DEFAULT_FUEL,
};
use eo_fragile::locators::resolve_locators;
use eo_fragile::smt::SolverConfig;
use eo_fragile::syntax::{parse_file, render, render_top_object, Program};

pub const EXIT_CLEAN: u8 = 0;
pub const EXIT_DEFECTS: u8 = 1;
pub const EXIT_INCONCLUSIVE: u8 = 2;
pub const EXIT_ERROR: u8 = 3;

#[derive(Parser)]
#[command(
    name = "eo-fragile",
    version,
    about = "Finds unjustified assumptions in decorated EO objects"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Check every decoration pair for defects introduced by inlining.
    Analyze {
        file: PathBuf,
        /// Solver command line; defaults to $EO_FRAGILE_SOLVER, then `z3 -in`.
        #[arg(long)]
        solver_cmd: Option<String>,
        /// Per-query solver timeout in seconds.
        #[arg(long, default_value_t = 10.0)]
        timeout: f64,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        /// Reject unknown terms on the before side instead of ignoring them.
        #[arg(long)]
        strict_unknown: bool,
        /// Number of concurrent method analyses.
        #[arg(long)]
        jobs: Option<usize>,
        /// Inline one decorated method at a time.
        #[arg(long)]
        per_method: bool,
        /// Seed of the fallback model search.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Inline every method call on `self` inside one object.
    Inline {
        file: PathBuf,
        #[arg(long)]
        object: String,
        /// Write the whole refactored program here.
        #[arg(long)]
        dump_inlined: Option<PathBuf>,
    },
    /// Print the inferred summary of every method.
    Summarize {
        file: PathBuf,
        /// Write the summaries as JSON here.
        #[arg(long)]
        dump_summaries: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Evaluate a term against the program.
    Run {
        file: PathBuf,
        #[arg(long)]
        expr: String,
        #[arg(long, default_value_t = DEFAULT_FUEL)]
        fuel: u64,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Compare method results before and after inlining an object.
    Diff {
        file: PathBuf,
        #[arg(long)]
        object: String,
        /// Input vectors per method.
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
}

/// Exit status of `analyze` for the verdicts of all reports.
pub fn exit_code(verdicts: &[Verdict]) -> u8 {
    if verdicts.contains(&Verdict::Defect) {
        EXIT_DEFECTS
    } else if verdicts
        .iter()
        .any(|v| matches!(v, Verdict::Inconclusive | Verdict::SignatureChanged))
    {
        EXIT_INCONCLUSIVE
    } else {
        EXIT_CLEAN
    }
}

fn load(file: &Path) -> Result<Program, String> {
    let src = std::fs::read_to_string(file).map_err(|e| format!("{}: {e}", file.display()))?;
    let program = parse_file(&src, &file.display().to_string()).map_err(|e| e.to_string())?;
    resolve_locators(&program).map_err(|e| e.to_string())
}

fn write_file(path: &Path, text: &str) -> Result<(), String> {
    std::fs::write(path, text).map_err(|e| format!("{}: {e}", path.display()))
}

fn json(value: &impl serde::Serialize) -> String {
    serde_json::to_string_pretty(value).expect("reports serialize")
}

fn run(command: Command) -> Result<u8, String> {
    let mut out = std::io::stdout().lock();
    let mut emit = |text: &str| {
        let _ = out.write_all(text.as_bytes());
    };
    match command {
        Command::Analyze {
            file,
            solver_cmd,
            timeout,
            format,
            strict_unknown,
            jobs,
            per_method,
            seed,
        } => {
            if !(timeout.is_finite() && timeout >= 0.0) {
                return Err(format!("invalid timeout {timeout}"));
            }
            let program = load(&file)?;
            let config = DetectorConfig {
                solver: SolverConfig::resolve(
                    solver_cmd.as_deref(),
                    Duration::from_secs_f64(timeout),
                ),
                strict_unknown,
                jobs: jobs
                    .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get())),
                per_method,
                seed,
                ..DetectorConfig::default()
            };
            let analysis = analyze_program(&program, &config).map_err(|e| e.to_string())?;
            for w in &analysis.warnings {
                eprintln!("warning: {}: {}", report::span(&w.span), w.message);
            }
            match format {
                Format::Text => emit(&report::analysis_text(&analysis)),
                Format::Json => emit(&(json(&analysis.reports) + "\n")),
            }
            let verdicts: Vec<Verdict> = analysis.reports.iter().map(|r| r.verdict).collect();
            Ok(exit_code(&verdicts))
        }
        Command::Inline {
            file,
            object,
            dump_inlined,
        } => {
            let program = load(&file)?;
            let outcome = inline_object(&object, &program).map_err(|e| e.to_string())?;
            for skipped in &outcome.skipped {
                eprintln!(
                    "warning: {object}.{skipped}: {}",
                    eo_fragile::inliner::RECURSIVE_SKIPPED
                );
            }
            let body = outcome.program.get(&object).expect("inlined object exists");
            emit(&render_top_object(&object, body));
            if let Some(path) = dump_inlined {
                write_file(&path, &render(&outcome.program))?;
            }
            Ok(EXIT_CLEAN)
        }
        Command::Summarize {
            file,
            dump_summaries,
            format,
        } => {
            let program = load(&file)?;
            let entries = report::summaries(&program).map_err(|e| e.to_string())?;
            if let Some(path) = &dump_summaries {
                write_file(path, &(json(&report::summaries_json(&entries)) + "\n"))?;
            }
            match format {
                Format::Text => emit(&report::summaries_text(&entries)),
                Format::Json => emit(&(json(&report::summaries_json(&entries)) + "\n")),
            }
            Ok(EXIT_CLEAN)
        }
        Command::Run {
            file,
            expr,
            fuel,
            format,
        } => {
            let program = load(&file)?;
            let outcome =
                with_large_stack(|| evaluate(&program, &expr, fuel)).map_err(|e| e.to_string())?;
            match format {
                Format::Text => match &outcome {
                    Ok(d) => emit(&format!("{d}\n")),
                    Err(e) => emit(&format!("error: {} at {}\n", e.kind.code(), e.span)),
                },
                Format::Json => emit(&(json(&OutcomeView::from(&outcome)) + "\n")),
            }
            Ok(if outcome.is_ok() {
                EXIT_CLEAN
            } else {
                EXIT_DEFECTS
            })
        }
        Command::Diff {
            file,
            object,
            samples,
            seed,
            format,
        } => {
            let program = load(&file)?;
            let diff =
                differential_check(&program, &object, samples, seed).map_err(|e| e.to_string())?;
            match format {
                Format::Text => emit(&report::diff_text(&diff)),
                Format::Json => emit(&(json(&diff) + "\n")),
            }
            Ok(if diff.mismatches.is_empty() {
                EXIT_CLEAN
            } else {
                EXIT_DEFECTS
            })
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() {
                EXIT_ERROR
            } else {
                EXIT_CLEAN
            });
        }
    };
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}
