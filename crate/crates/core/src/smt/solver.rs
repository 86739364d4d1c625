//! Running an external SMT-LIB 2 solver with a deadline.

use std::io::{Read, Write};
use std::process::{Command, Stdio};
use std::thread;
use std::time::{Duration, Instant};

use super::model::{parse_model, Model};
use super::sexpr::parse_all;

pub const SOLVER_ENV: &str = "EO_FRAGILE_SOLVER";
pub const DEFAULT_SOLVER: &str = "z3 -in";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolverConfig {
    /// Program and arguments; the script is written to standard input.
    pub command: Vec<String>,
    pub timeout: Duration,
}

impl SolverConfig {
    pub fn new(command: &str, timeout: Duration) -> Self {
        SolverConfig {
            command: command.split_whitespace().map(str::to_string).collect(),
            timeout,
        }
    }

    /// The explicit command if given, else `$EO_FRAGILE_SOLVER`, else `z3 -in`.
    pub fn resolve(explicit: Option<&str>, timeout: Duration) -> Self {
        let env = std::env::var(SOLVER_ENV)
            .ok()
            .filter(|s| !s.trim().is_empty());
        let command = explicit
            .map(str::to_string)
            .or(env)
            .unwrap_or_else(|| DEFAULT_SOLVER.to_string());
        SolverConfig::new(&command, timeout)
    }

    pub fn display_command(&self) -> String {
        self.command.join(" ")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CheckResult {
    Sat(Model),
    Unsat,
    Unknown(String),
}

impl CheckResult {
    pub fn is_sat(&self) -> bool {
        matches!(self, CheckResult::Sat(_))
    }
}

/// Runs `script` through the solver, giving up after the configured timeout.
pub fn check(script: &str, solver: &SolverConfig) -> CheckResult {
    if solver.timeout.is_zero() {
        return CheckResult::Unknown("timeout".into());
    }
    let Some((program, args)) = solver.command.split_first() else {
        return CheckResult::Unknown("empty solver command".into());
    };
    let spawned = Command::new(program)
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn();
    let mut child = match spawned {
        Ok(c) => c,
        Err(e) => return CheckResult::Unknown(format!("cannot start `{program}`: {e}")),
    };
    let deadline = Instant::now() + solver.timeout;

    let mut stdin = child.stdin.take().expect("piped stdin");
    let script = script.to_string();
    let writer = thread::spawn(move || {
        let _ = stdin.write_all(script.as_bytes());
    });
    let mut stdout = child.stdout.take().expect("piped stdout");
    let reader = thread::spawn(move || {
        let mut out = String::new();
        let _ = stdout.read_to_string(&mut out);
        out
    });
    let mut stderr = child.stderr.take().expect("piped stderr");
    let err_reader = thread::spawn(move || {
        let mut out = String::new();
        let _ = stderr.read_to_string(&mut out);
        out
    });

    loop {
        match child.try_wait() {
            Ok(Some(_)) => break,
            Ok(None) if Instant::now() >= deadline => {
                let _ = child.kill();
                let _ = child.wait();
                return CheckResult::Unknown("timeout".into());
            }
            Ok(None) => thread::sleep(Duration::from_millis(5)),
            Err(e) => {
                let _ = child.kill();
                return CheckResult::Unknown(format!("waiting for solver: {e}"));
            }
        }
    }
    let _ = writer.join();
    let out = reader.join().unwrap_or_default();
    let err = err_reader.join().unwrap_or_default();
    parse_output(&out).unwrap_or_else(|| {
        let detail = if err.trim().is_empty() {
            out.trim()
        } else {
            err.trim()
        };
        CheckResult::Unknown(format!("malformed solver output: {}", first_line(detail)))
    })
}

fn first_line(s: &str) -> &str {
    s.lines().next().unwrap_or("")
}

/// Interprets the text printed for `(check-sat) (get-model)`.
pub fn parse_output(out: &str) -> Option<CheckResult> {
    let mut lines = out.lines();
    let verdict = lines
        .by_ref()
        .map(str::trim)
        .find(|l| matches!(*l, "sat" | "unsat" | "unknown"))?;
    match verdict {
        "sat" => {
            let rest: Vec<&str> = lines.collect();
            let items = parse_all(&rest.join("\n")).ok()?;
            Some(CheckResult::Sat(parse_model(&items)))
        }
        "unsat" => Some(CheckResult::Unsat),
        _ => Some(CheckResult::Unknown("solver returned unknown".into())),
    }
}
