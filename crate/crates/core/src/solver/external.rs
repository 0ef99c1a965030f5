// SPDX-License-Identifier: Apache-2.0

//! Runs a user-configured SMT solver on the emitted script.

use std::io::{Read, Write};
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::smtlib::{emit_smtlib, parse_response, SmtResponse};
use super::{check_well_formed, satisfies, SolveError, SolveResult};
use crate::symbolic::{ConstraintSet, SymVar};

/// Command line of a solver that reads a script on stdin, e.g.
/// `["z3", "-in"]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExternalSolver {
    pub command: Vec<String>,
    #[serde(default = "default_timeout")]
    pub timeout_ms: u64,
}

fn default_timeout() -> u64 {
    10_000
}

impl ExternalSolver {
    pub fn new(command: &[&str]) -> Self {
        ExternalSolver { command: command.iter().map(|s| s.to_string()).collect(), timeout_ms: default_timeout() }
    }
}

/// Solves via the external process. SAT models are re-checked by
/// evaluation like the built-in solver's.
pub fn solve_external(cs: &ConstraintSet, solver: &ExternalSolver) -> Result<SolveResult, SolveError> {
    check_well_formed(cs)?;
    let (prog, args) = solver
        .command
        .split_first()
        .ok_or_else(|| SolveError::External("empty solver command".into()))?;
    let mut child = Command::new(prog)
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .map_err(|e| SolveError::External(format!("cannot launch `{prog}`: {e}")))?;
    let script = emit_smtlib(cs);
    {
        let mut stdin = child.stdin.take().expect("piped stdin");
        stdin
            .write_all(script.as_bytes())
            .map_err(|e| SolveError::External(format!("writing script: {e}")))?;
    }
    let mut stdout = child.stdout.take().expect("piped stdout");
    let reader = std::thread::spawn(move || {
        let mut s = String::new();
        let _ = stdout.read_to_string(&mut s);
        s
    });
    let deadline = Instant::now() + Duration::from_millis(solver.timeout_ms);
    loop {
        match child.try_wait() {
            Ok(Some(_)) => break,
            Ok(None) if Instant::now() >= deadline => {
                let _ = child.kill();
                let _ = child.wait();
                return Ok(SolveResult::Unknown(format!("external solver timed out after {} ms", solver.timeout_ms)));
            }
            Ok(None) => std::thread::sleep(Duration::from_millis(2)),
            Err(e) => return Err(SolveError::External(e.to_string())),
        }
    }
    let out = reader.join().unwrap_or_default();
    let vars: Vec<SymVar> = cs.vars().into_iter().collect();
    match parse_response(&out, &vars).map_err(SolveError::External)? {
        SmtResponse::Sat(a) => {
            if satisfies(cs, &a) {
                Ok(SolveResult::Sat(a))
            } else {
                Ok(SolveResult::Unknown("external model failed re-check".into()))
            }
        }
        SmtResponse::Unsat => Ok(SolveResult::Unsat),
        SmtResponse::Unknown => Ok(SolveResult::Unknown("external solver returned unknown".into())),
    }
}
