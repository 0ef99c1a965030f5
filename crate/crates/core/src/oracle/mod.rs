// SPDX-License-Identifier: Apache-2.0

//! Differential checking of a design against a golden model.
//!
//! Only output ports decide the verdict. Register snapshots ride along in
//! the attached trace for the debug prompt.

pub mod protocol;
pub mod stub;

use std::fmt;

use rayon::prelude::*;
use serde_json::{json, Value};
use thiserror::Error;

pub use protocol::{run_reference, ModelSpec, OracleError, RefCycle, RefTrace, Request, Response};
pub use stub::{CounterModel, Faults, ReferenceModel, RtlModel};

use crate::bits::BitVecLiteral;
use crate::concolic::InputSet;
use crate::instrument::InstrumentedDesign;
use crate::sim::{run, Design, InputVector, SimError, Trace};

/// Anything that turns an input vector into reference outputs.
pub trait Oracle: Sync {
    fn reference(&self, inputs: &[(String, u32)], outputs: &[(String, u32)], vector: &InputVector) -> Result<RefTrace, OracleError>;
}

impl Oracle for ModelSpec {
    fn reference(&self, inputs: &[(String, u32)], outputs: &[(String, u32)], vector: &InputVector) -> Result<RefTrace, OracleError> {
        run_reference(self, inputs, outputs, vector)
    }
}

/// Runs a model in this process, one fresh instance per vector.
pub struct InProcess<F>(pub F);

impl<M: ReferenceModel, F: Fn() -> M + Sync> Oracle for InProcess<F> {
    fn reference(&self, _: &[(String, u32)], _: &[(String, u32)], vector: &InputVector) -> Result<RefTrace, OracleError> {
        let mut m = (self.0)();
        stub::run_in_process(&mut m, vector).map_err(|message| OracleError::Reference { cycle: 0, message })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutputDiff {
    pub port: String,
    pub expected: BitVecLiteral,
    pub observed: BitVecLiteral,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MismatchReport {
    /// Position of the vector in the checked input set.
    pub index: usize,
    pub vector: InputVector,
    /// First cycle where some output differs.
    pub cycle: usize,
    pub diffs: Vec<OutputDiff>,
    pub trace: Trace,
    pub reference: RefTrace,
}

impl MismatchReport {
    /// e.g. `cycle 1: Expected out=1, Got out=0`.
    pub fn summary(&self) -> String {
        let exp: Vec<String> = self.diffs.iter().map(|d| format!("{}={}", d.port, d.expected.value)).collect();
        let got: Vec<String> = self.diffs.iter().map(|d| format!("{}={}", d.port, d.observed.value)).collect();
        format!("cycle {}: Expected {}, Got {}", self.cycle, exp.join(", "), got.join(", "))
    }

    pub fn to_json(&self) -> Value {
        json!({
            "vector": self.index,
            "cycle": self.cycle,
            "inputs": self.vector.to_json(),
            "diffs": self.diffs.iter().map(|d| json!({
                "port": d.port,
                "expected": d.expected.to_hex(),
                "observed": d.observed.to_hex(),
            })).collect::<Vec<_>>(),
            "trace": self.trace.records.iter().map(|r| r.to_json()).collect::<Vec<_>>(),
            "reference": self.reference.cycles.iter().map(|c| {
                let outs: serde_json::Map<String, Value> =
                    c.outputs.iter().map(|(k, v)| (k.clone(), Value::String(v.to_hex()))).collect();
                json!({"outputs": outs, "tags": c.tags})
            }).collect::<Vec<_>>(),
        })
    }

    /// Reads back [`MismatchReport::to_json`]; widths come from `design`.
    pub fn from_json(v: &Value, design: &Design) -> Result<Self, String> {
        let field = |k: &str| v.get(k).ok_or_else(|| format!("mismatch report: missing `{k}`"));
        let index = field("vector")?.as_u64().ok_or("mismatch report: bad `vector`")? as usize;
        let cycle = field("cycle")?.as_u64().ok_or("mismatch report: bad `cycle`")? as usize;
        let vector = InputVector::from_json(field("inputs")?, &design.input_ports()).map_err(|e| e.to_string())?;
        let width = |port: &str| {
            design.output_ports().into_iter().find(|(n, _)| n == port).map(|(_, w)| w).ok_or_else(|| format!("unknown output `{port}`"))
        };
        let lit = |port: &str, x: &Value| -> Result<BitVecLiteral, String> {
            let text = x.as_str().ok_or_else(|| format!("`{port}`: expected a string"))?;
            protocol::decode_value(text, width(port)?)
        };
        let mut diffs = Vec::new();
        for d in field("diffs")?.as_array().ok_or("mismatch report: bad `diffs`")? {
            let port = d["port"].as_str().ok_or("mismatch report: diff without `port`")?.to_string();
            diffs.push(OutputDiff { expected: lit(&port, &d["expected"])?, observed: lit(&port, &d["observed"])?, port });
        }
        let lines: Vec<String> = field("trace")?
            .as_array()
            .ok_or("mismatch report: bad `trace`")?
            .iter()
            .map(|r| r.to_string())
            .collect();
        let trace = Trace::from_jsonl(&lines.join("\n"), design).map_err(|e| e.to_string())?;
        let mut reference = RefTrace::default();
        for c in v.get("reference").and_then(Value::as_array).into_iter().flatten() {
            let mut outputs = indexmap::IndexMap::new();
            for (k, x) in c["outputs"].as_object().ok_or("mismatch report: bad `reference`")? {
                outputs.insert(k.clone(), lit(k, x)?);
            }
            let tags = c["tags"].as_array().into_iter().flatten().filter_map(|t| t.as_str().map(str::to_string)).collect();
            reference.cycles.push(RefCycle { outputs, tags });
        }
        Ok(MismatchReport { index, vector, cycle, diffs, trace, reference })
    }
}

impl fmt::Display for MismatchReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "vector {}: {}", self.index, self.summary())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    /// `vacuous` when there was nothing to check.
    Pass { vacuous: bool },
    Fail(Vec<MismatchReport>),
}

impl Verdict {
    pub fn is_pass(&self) -> bool {
        matches!(self, Verdict::Pass { .. })
    }

    pub fn mismatches(&self) -> &[MismatchReport] {
        match self {
            Verdict::Pass { .. } => &[],
            Verdict::Fail(m) => m,
        }
    }

    /// Reads back the `mismatches` of a failing verdict.
    pub fn from_json(v: &Value, design: &Design) -> Result<Self, String> {
        match v.get("verdict").and_then(Value::as_str) {
            Some("pass") => Ok(Verdict::Pass { vacuous: v["vacuous"].as_bool().unwrap_or(false) }),
            Some("fail") => Ok(Verdict::Fail(
                v["mismatches"]
                    .as_array()
                    .ok_or("verdict: missing `mismatches`")?
                    .iter()
                    .map(|m| MismatchReport::from_json(m, design))
                    .collect::<Result<_, _>>()?,
            )),
            _ => Err("verdict: expected `pass` or `fail`".into()),
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            Verdict::Pass { vacuous } => json!({"verdict": "pass", "vacuous": vacuous}),
            Verdict::Fail(m) => json!({
                "verdict": "fail",
                "mismatches": m.iter().map(|r| r.to_json()).collect::<Vec<_>>(),
            }),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CheckError {
    #[error("vector {index}: simulation failed: {source}")]
    Sim { index: usize, source: SimError },
    #[error("vector {index}: {source}")]
    Oracle { index: usize, source: OracleError },
    #[error("vector {index}: model answered {got} cycles for {expected}")]
    Length { index: usize, got: usize, expected: usize },
    #[error("cannot build worker pool: {0}")]
    Pool(String),
}

/// First divergent cycle of `trace` against `reference`, if any.
pub fn compare(index: usize, vector: &InputVector, trace: &Trace, reference: &RefTrace) -> Option<MismatchReport> {
    for (rec, want) in trace.records.iter().zip(&reference.cycles) {
        let diffs: Vec<OutputDiff> = want
            .outputs
            .iter()
            .filter_map(|(port, expected)| {
                let observed = rec.outs.get(port)?;
                (observed.value != expected.value).then(|| OutputDiff {
                    port: port.clone(),
                    expected: *expected,
                    observed: *observed,
                })
            })
            .collect();
        if !diffs.is_empty() {
            return Some(MismatchReport {
                index,
                vector: vector.clone(),
                cycle: rec.cycle,
                diffs,
                trace: trace.clone(),
                reference: reference.clone(),
            });
        }
    }
    None
}

fn check_one<O: Oracle + ?Sized>(design: &InstrumentedDesign, oracle: &O, index: usize, vector: &InputVector) -> Result<Option<MismatchReport>, CheckError> {
    let trace = run(design, vector).map_err(|source| CheckError::Sim { index, source })?;
    let d = &design.design;
    let reference =
        oracle.reference(&d.input_ports(), &d.output_ports(), vector).map_err(|source| CheckError::Oracle { index, source })?;
    if reference.len() != vector.len() {
        return Err(CheckError::Length { index, got: reference.len(), expected: vector.len() });
    }
    Ok(compare(index, vector, &trace, &reference))
}

/// Checks every vector, up to `jobs` at a time. The first error by vector
/// position wins, so results do not depend on scheduling.
pub fn differential_check<O: Oracle + ?Sized>(
    design: &InstrumentedDesign,
    oracle: &O,
    inputs: &InputSet,
    jobs: usize,
) -> Result<Verdict, CheckError> {
    if inputs.is_empty() {
        log::warn!("empty input set: differential check passes vacuously");
        return Ok(Verdict::Pass { vacuous: true });
    }
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build().map_err(|e| CheckError::Pool(e.to_string()))?;
    let results: Vec<Result<Option<MismatchReport>, CheckError>> = pool.install(|| {
        inputs.entries.par_iter().enumerate().map(|(i, e)| check_one(design, oracle, i, &e.vector)).collect()
    });
    let mut mismatches = Vec::new();
    for r in results {
        if let Some(m) = r? {
            mismatches.push(m);
        }
    }
    Ok(if mismatches.is_empty() { Verdict::Pass { vacuous: false } } else { Verdict::Fail(mismatches) })
}

#[cfg(test)]
mod tests;
