// SPDX-License-Identifier: Apache-2.0

//! Line-delimited JSON messages exchanged with a golden model, and the
//! client side that drives one model process per vector.

use std::io::{BufRead, BufReader, Write};
use std::path::PathBuf;
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::time::Duration;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bits::{mask, parse_value, BitVecLiteral};
use crate::sim::InputVector;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PortDecl {
    pub direction: String,
    pub width: u32,
}

/// Harness to model.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Request {
    Init { ports: IndexMap<String, PortDecl> },
    Cycle { n: usize, inputs: IndexMap<String, String> },
    End,
}

/// Model to harness. `error` carries a reference-side exception.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Response {
    Ok,
    Out {
        n: usize,
        outputs: IndexMap<String, String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tags: Option<Vec<String>>,
    },
    Error { message: String },
}

impl Request {
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("request serializes")
    }
}

impl Response {
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("response serializes")
    }
}

/// Builds the `init` port table from `(name, width)` lists.
pub fn port_table(inputs: &[(String, u32)], outputs: &[(String, u32)]) -> IndexMap<String, PortDecl> {
    let decl = |dir: &str, w: u32| PortDecl { direction: dir.to_string(), width: w };
    inputs
        .iter()
        .map(|(n, w)| (n.clone(), decl("input", *w)))
        .chain(outputs.iter().map(|(n, w)| (n.clone(), decl("output", *w))))
        .collect()
}

/// Command line and working directory of a golden model.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub command: Vec<String>,
    #[serde(default)]
    pub cwd: Option<PathBuf>,
    /// Per-response timeout.
    #[serde(default = "default_timeout")]
    pub timeout_ms: u64,
}

fn default_timeout() -> u64 {
    10_000
}

impl ModelSpec {
    pub fn new<S: AsRef<str>>(command: &[S]) -> Self {
        ModelSpec { command: command.iter().map(|s| s.as_ref().to_string()).collect(), cwd: None, timeout_ms: default_timeout() }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("cannot launch model `{command}`: {message}")]
    Launch { command: String, message: String },
    #[error("protocol violation on model output line {line}: {message}")]
    Protocol { line: usize, message: String },
    #[error("model exited at cycle {cycle} without answering{}", stderr_suffix(.stderr))]
    Crashed { cycle: usize, stderr: String },
    #[error("model raised at cycle {cycle}: {message}")]
    Reference { cycle: usize, message: String },
    #[error("model did not answer within {ms} ms at cycle {cycle}")]
    Timeout { cycle: usize, ms: u64 },
    #[error("model failed after the session: {0}")]
    Exit(String),
}

fn stderr_suffix(s: &str) -> String {
    let s = s.trim();
    if s.is_empty() {
        String::new()
    } else {
        format!(" (stderr: {s})")
    }
}

/// Reference outputs for one vector.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RefTrace {
    pub cycles: Vec<RefCycle>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RefCycle {
    pub outputs: IndexMap<String, BitVecLiteral>,
    pub tags: Vec<String>,
}

impl RefTrace {
    pub fn len(&self) -> usize {
        self.cycles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cycles.is_empty()
    }
}

struct Session {
    child: Child,
    stdin: Option<ChildStdin>,
    lines: Receiver<std::io::Result<String>>,
    stderr: Option<std::thread::JoinHandle<String>>,
    line_no: usize,
    timeout: Duration,
}

enum Next {
    Line(String),
    Eof,
}

impl Session {
    fn start(spec: &ModelSpec) -> Result<Session, OracleError> {
        let command = spec.command.join(" ");
        let (prog, args) = spec
            .command
            .split_first()
            .ok_or_else(|| OracleError::Launch { command: command.clone(), message: "empty command".into() })?;
        let mut cmd = Command::new(prog);
        cmd.args(args).stdin(Stdio::piped()).stdout(Stdio::piped()).stderr(Stdio::piped());
        if let Some(dir) = &spec.cwd {
            cmd.current_dir(dir);
        }
        let mut child = cmd.spawn().map_err(|e| OracleError::Launch { command, message: e.to_string() })?;
        let stdout = child.stdout.take().expect("piped stdout");
        let mut err = child.stderr.take().expect("piped stderr");
        let (tx, rx) = mpsc::channel();
        std::thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        let stderr = std::thread::spawn(move || {
            let mut s = String::new();
            let _ = std::io::Read::read_to_string(&mut err, &mut s);
            s
        });
        Ok(Session {
            stdin: child.stdin.take(),
            child,
            lines: rx,
            stderr: Some(stderr),
            line_no: 0,
            timeout: Duration::from_millis(spec.timeout_ms),
        })
    }

    fn send(&mut self, req: &Request) -> bool {
        let Some(stdin) = self.stdin.as_mut() else { return false };
        writeln!(stdin, "{}", req.to_line()).and_then(|_| stdin.flush()).is_ok()
    }

    fn next(&mut self, cycle: usize) -> Result<Next, OracleError> {
        match self.lines.recv_timeout(self.timeout) {
            Ok(Ok(line)) => {
                self.line_no += 1;
                Ok(Next::Line(line))
            }
            Ok(Err(_)) | Err(RecvTimeoutError::Disconnected) => Ok(Next::Eof),
            Err(RecvTimeoutError::Timeout) => Err(OracleError::Timeout { cycle, ms: self.timeout.as_millis() as u64 }),
        }
    }

    /// Next non-blank line parsed as a response; EOF means a crash.
    fn response(&mut self, cycle: usize) -> Result<Response, OracleError> {
        loop {
            match self.next(cycle)? {
                Next::Eof => return Err(self.crashed(cycle)),
                Next::Line(l) if l.trim().is_empty() => continue,
                Next::Line(l) => {
                    return serde_json::from_str(&l).map_err(|e| OracleError::Protocol {
                        line: self.line_no,
                        message: format!("{e}: `{}`", truncate(&l)),
                    })
                }
            }
        }
    }

    fn crashed(&mut self, cycle: usize) -> OracleError {
        self.stdin = None;
        let _ = self.child.kill();
        let _ = self.child.wait();
        OracleError::Crashed { cycle, stderr: self.take_stderr() }
    }

    fn take_stderr(&mut self) -> String {
        self.stderr.take().and_then(|h| h.join().ok()).unwrap_or_default()
    }

    fn kill(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }

    fn finish(mut self) -> Result<(), OracleError> {
        self.send(&Request::End);
        self.stdin = None;
        let deadline = std::time::Instant::now() + self.timeout;
        loop {
            match self.child.try_wait() {
                Ok(Some(status)) if status.success() => return Ok(()),
                Ok(Some(status)) => {
                    let stderr = self.take_stderr();
                    return Err(OracleError::Exit(format!("{status}{}", stderr_suffix(&stderr))));
                }
                Ok(None) if std::time::Instant::now() >= deadline => {
                    self.kill();
                    return Err(OracleError::Exit("model did not exit after `end`".into()));
                }
                Ok(None) => std::thread::sleep(Duration::from_millis(1)),
                Err(e) => return Err(OracleError::Exit(e.to_string())),
            }
        }
    }
}

impl Drop for Session {
    fn drop(&mut self) {
        if let Ok(None) = self.child.try_wait() {
            self.kill();
        }
    }
}

fn truncate(s: &str) -> String {
    if s.chars().count() > 80 {
        format!("{}...", s.chars().take(80).collect::<String>())
    } else {
        s.to_string()
    }
}

/// Parses an output value and checks it fits the port.
pub fn decode_value(text: &str, width: u32) -> Result<BitVecLiteral, String> {
    let (v, _) = parse_value(text).ok_or_else(|| format!("bad value `{text}`"))?;
    if v & !mask(width) != 0 {
        return Err(format!("value {text} does not fit {width} bits"));
    }
    Ok(BitVecLiteral::new(width, v))
}

/// Runs one vector through a fresh model process.
pub fn run_reference(
    spec: &ModelSpec,
    inputs: &[(String, u32)],
    outputs: &[(String, u32)],
    vector: &InputVector,
) -> Result<RefTrace, OracleError> {
    let mut s = Session::start(spec)?;
    if !s.send(&Request::Init { ports: port_table(inputs, outputs) }) {
        return Err(s.crashed(0));
    }
    match s.response(0)? {
        Response::Ok => {}
        Response::Error { message } => return Err(OracleError::Reference { cycle: 0, message }),
        other => {
            return Err(OracleError::Protocol { line: s.line_no, message: format!("expected `ok`, got `{}`", other.to_line()) })
        }
    }
    let mut trace = RefTrace::default();
    for (n, row) in vector.cycles.iter().enumerate() {
        let inputs = row.iter().map(|(k, v)| (k.clone(), v.to_hex())).collect();
        if !s.send(&Request::Cycle { n, inputs }) {
            return Err(s.crashed(n));
        }
        match s.response(n)? {
            Response::Out { n: got, outputs: outs, tags } => {
                let line = s.line_no;
                let bad = |message: String| OracleError::Protocol { line, message };
                if got != n {
                    return Err(bad(format!("answer for cycle {got}, expected {n}")));
                }
                let mut values = IndexMap::new();
                for (name, width) in outputs {
                    let text = outs.get(name).ok_or_else(|| bad(format!("missing output `{name}`")))?;
                    values.insert(name.clone(), decode_value(text, *width).map_err(|m| bad(format!("output `{name}`: {m}")))?);
                }
                trace.cycles.push(RefCycle { outputs: values, tags: tags.unwrap_or_default() });
            }
            Response::Error { message } => return Err(OracleError::Reference { cycle: n, message }),
            Response::Ok => {
                return Err(OracleError::Protocol { line: s.line_no, message: format!("expected `out` for cycle {n}, got `ok`") })
            }
        }
    }
    s.finish()?;
    Ok(trace)
}
