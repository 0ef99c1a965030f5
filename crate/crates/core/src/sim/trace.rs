// SPDX-License-Identifier: Apache-2.0

//! Input vectors, traces and their file formats, plus the concrete `run`.

use indexmap::IndexMap;
use serde_json::{Map, Value};
use thiserror::Error;

use super::design::Design;
use super::exec::{CVal, Concrete, ExecError, Executor};
use crate::bits::{parse_value, BitVecLiteral};
use crate::cfg::BranchId;
use crate::instrument::InstrumentedDesign;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SimError {
    #[error("cycle {cycle}: {source}")]
    Exec { cycle: usize, source: ExecError },
    #[error("cycle {cycle}: missing input `{port}`")]
    MissingInput { cycle: usize, port: String },
    #[error("cycle {cycle}: unknown input `{port}`")]
    UnknownInput { cycle: usize, port: String },
    #[error("cycle {cycle}: value {value} does not fit input `{port}` of width {width}")]
    Width { cycle: usize, port: String, value: String, width: u32 },
    #[error("malformed input vector: {0}")]
    Format(String),
}

/// One value per data input per cycle.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct InputVector {
    pub cycles: Vec<IndexMap<String, BitVecLiteral>>,
}

impl std::hash::Hash for InputVector {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.cycles.len().hash(state);
        // IndexMap equality ignores order, so hash in key order.
        for row in &self.cycles {
            let mut entries: Vec<_> = row.iter().collect();
            entries.sort_by(|a, b| a.0.cmp(b.0));
            entries.hash(state);
        }
    }
}

impl std::fmt::Display for InputVector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.to_json())
    }
}

impl InputVector {
    pub fn new(cycles: Vec<IndexMap<String, BitVecLiteral>>) -> Self {
        InputVector { cycles }
    }

    /// Builds a vector from `(port, value)` rows, taking widths from `ports`.
    pub fn from_rows(ports: &[(String, u32)], rows: &[&[(&str, u64)]]) -> Self {
        let cycles = rows
            .iter()
            .map(|row| {
                row.iter()
                    .map(|(name, v)| {
                        let w = ports.iter().find(|(n, _)| n == name).map(|p| p.1).unwrap_or(32);
                        (name.to_string(), BitVecLiteral::new(w, *v))
                    })
                    .collect()
            })
            .collect();
        InputVector { cycles }
    }

    pub fn len(&self) -> usize {
        self.cycles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cycles.is_empty()
    }

    pub fn get(&self, cycle: usize, port: &str) -> Option<u64> {
        self.cycles.get(cycle)?.get(port).map(|l| l.value)
    }

    /// Checks the vector against the design's data inputs.
    pub fn validate(&self, ports: &[(String, u32)]) -> Result<(), SimError> {
        for (cycle, row) in self.cycles.iter().enumerate() {
            for (name, width) in ports {
                let Some(lit) = row.get(name) else {
                    return Err(SimError::MissingInput { cycle, port: name.clone() });
                };
                if BitVecLiteral::checked(*width, lit.value).is_none() {
                    return Err(SimError::Width {
                        cycle,
                        port: name.clone(),
                        value: format!("{:#x}", lit.value),
                        width: *width,
                    });
                }
            }
            if let Some(extra) = row.keys().find(|k| !ports.iter().any(|(n, _)| n == *k)) {
                return Err(SimError::UnknownInput { cycle, port: extra.clone() });
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Value {
        Value::Array(
            self.cycles
                .iter()
                .map(|row| {
                    Value::Object(
                        row.iter().map(|(k, v)| (k.clone(), Value::String(v.to_hex()))).collect(),
                    )
                })
                .collect(),
        )
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.to_json()).expect("json")
    }

    /// Parses the JSON array form. Values may be `0x..` hex, Verilog sized
    /// literals or decimal; widths come from `ports`.
    pub fn from_json(v: &Value, ports: &[(String, u32)]) -> Result<Self, SimError> {
        let arr = v.as_array().ok_or_else(|| SimError::Format("expected a JSON array".into()))?;
        let mut cycles = Vec::with_capacity(arr.len());
        for (cycle, row) in arr.iter().enumerate() {
            let obj = row
                .as_object()
                .ok_or_else(|| SimError::Format(format!("cycle {cycle}: expected an object")))?;
            let mut out = IndexMap::new();
            for (name, val) in obj {
                let Some(&(_, width)) = ports.iter().find(|(n, _)| n == name) else {
                    return Err(SimError::UnknownInput { cycle, port: name.clone() });
                };
                let (value, _) = json_value(val)
                    .ok_or_else(|| SimError::Format(format!("cycle {cycle}: bad value for `{name}`")))?;
                let lit = BitVecLiteral::checked(width, value).ok_or_else(|| SimError::Width {
                    cycle,
                    port: name.clone(),
                    value: val.to_string(),
                    width,
                })?;
                out.insert(name.clone(), lit);
            }
            cycles.push(out);
        }
        let iv = InputVector { cycles };
        iv.validate(ports)?;
        Ok(iv)
    }

    pub fn parse(text: &str, ports: &[(String, u32)]) -> Result<Self, SimError> {
        let v: Value = serde_json::from_str(text).map_err(|e| SimError::Format(e.to_string()))?;
        Self::from_json(&v, ports)
    }

    /// All inputs zero except `reset` (when present) held high for cycle 0.
    pub fn reset_seed(ports: &[(String, u32)], cycles: usize) -> Self {
        let cycles = (0..cycles)
            .map(|c| {
                ports
                    .iter()
                    .map(|(n, w)| {
                        let v = u64::from(n == "reset" && c == 0);
                        (n.clone(), BitVecLiteral::new(*w, v))
                    })
                    .collect()
            })
            .collect();
        InputVector { cycles }
    }
}

fn json_value(v: &Value) -> Option<(u64, Option<u32>)> {
    match v {
        Value::String(s) => parse_value(s),
        Value::Number(n) => n.as_u64().map(|x| (x, None)),
        Value::Bool(b) => Some((*b as u64, None)),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CycleRecord {
    pub cycle: usize,
    /// Leaf branches in execution order, duplicates kept.
    pub branches: Vec<BranchId>,
    /// Post-edge register values in snapshot order.
    pub regs: IndexMap<String, BitVecLiteral>,
    /// Post-edge output values in port order.
    pub outs: IndexMap<String, BitVecLiteral>,
    /// Every decision arm taken, leaf or not. Not serialized.
    pub edges: Vec<(usize, usize)>,
}

fn lit_map(m: &IndexMap<String, BitVecLiteral>) -> Value {
    Value::Object(m.iter().map(|(k, v)| (k.clone(), Value::String(v.to_hex()))).collect())
}

impl CycleRecord {
    pub fn to_json(&self) -> Value {
        let mut o = Map::new();
        o.insert("cycle".into(), Value::from(self.cycle));
        o.insert(
            "branches".into(),
            Value::Array(self.branches.iter().map(|b| Value::String(b.to_string())).collect()),
        );
        o.insert("regs".into(), lit_map(&self.regs));
        o.insert("outs".into(), lit_map(&self.outs));
        Value::Object(o)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Trace {
    pub design_hash: String,
    pub records: Vec<CycleRecord>,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Every leaf branch hit anywhere in the trace, deduplicated.
    pub fn covered(&self) -> std::collections::BTreeSet<BranchId> {
        self.records.iter().flat_map(|r| r.branches.iter().copied()).collect()
    }

    /// One JSON object per line.
    pub fn to_jsonl(&self) -> String {
        let mut s = String::new();
        for r in &self.records {
            s.push_str(&serde_json::to_string(&r.to_json()).expect("json"));
            s.push('\n');
        }
        s
    }

    /// Reads the JSON-lines form; widths come from the design.
    pub fn from_jsonl(text: &str, design: &Design) -> Result<Trace, SimError> {
        let widths: IndexMap<String, u32> =
            design.signals.iter().map(|s| (s.name.clone(), s.width)).collect();
        let lits = |v: &Value, what: &str, line: usize| -> Result<IndexMap<String, BitVecLiteral>, SimError> {
            let obj = v
                .as_object()
                .ok_or_else(|| SimError::Format(format!("line {line}: `{what}` must be an object")))?;
            obj.iter()
                .map(|(k, v)| {
                    let w = *widths
                        .get(k)
                        .ok_or_else(|| SimError::Format(format!("line {line}: unknown signal `{k}`")))?;
                    let (value, _) = json_value(v)
                        .ok_or_else(|| SimError::Format(format!("line {line}: bad value for `{k}`")))?;
                    Ok((k.clone(), BitVecLiteral::new(w, value)))
                })
                .collect()
        };
        let mut records = Vec::new();
        for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let n = i + 1;
            let v: Value =
                serde_json::from_str(line).map_err(|e| SimError::Format(format!("line {n}: {e}")))?;
            let cycle = v["cycle"]
                .as_u64()
                .ok_or_else(|| SimError::Format(format!("line {n}: missing `cycle`")))?
                as usize;
            let branches = v["branches"]
                .as_array()
                .ok_or_else(|| SimError::Format(format!("line {n}: missing `branches`")))?
                .iter()
                .map(|b| {
                    b.as_str()
                        .and_then(|s| s.parse().ok())
                        .ok_or_else(|| SimError::Format(format!("line {n}: bad branch {b}")))
                })
                .collect::<Result<_, _>>()?;
            records.push(CycleRecord {
                cycle,
                branches,
                regs: lits(&v["regs"], "regs", n)?,
                outs: lits(&v["outs"], "outs", n)?,
                edges: Vec::new(),
            });
        }
        Ok(Trace { design_hash: design.hash.clone(), records })
    }
}

fn snapshot(design: &Design, values: &[CVal], sigs: &[usize]) -> IndexMap<String, BitVecLiteral> {
    sigs.iter()
        .map(|&s| (design.name_of(s).to_string(), BitVecLiteral::new(design.width(s), values[s].value)))
        .collect()
}

/// Simulates a lowered design.
pub fn simulate(design: &Design, inputs: &InputVector) -> Result<Trace, SimError> {
    inputs.validate(&design.input_ports())?;
    let mut dom = Concrete;
    let mut ex = Executor::new(design, &mut dom);
    let mut records = Vec::with_capacity(inputs.len());
    for (cycle, row) in inputs.cycles.iter().enumerate() {
        let vals: Vec<CVal> = design
            .inputs
            .iter()
            .map(|&s| CVal { value: row[design.name_of(s)].value, width: design.width(s) })
            .collect();
        let out = ex.step(&mut dom, &vals).map_err(|source| SimError::Exec { cycle, source })?;
        records.push(CycleRecord {
            cycle,
            branches: out.branches,
            regs: snapshot(design, &ex.values, &design.registers),
            outs: snapshot(design, &ex.values, &design.outputs),
            edges: out.edges,
        });
    }
    Ok(Trace { design_hash: design.hash.clone(), records })
}

/// Simulates an instrumented design.
pub fn run(design: &InstrumentedDesign, inputs: &InputVector) -> Result<Trace, SimError> {
    simulate(&design.design, inputs)
}

/// Lines printed by `$display` calls in clocked processes, one inner list
/// per cycle. Useful for checking the textual instrumentation path.
pub fn display_output(design: &Design, inputs: &InputVector) -> Result<Vec<Vec<String>>, SimError> {
    inputs.validate(&design.input_ports())?;
    let mut dom = Concrete;
    let mut ex = Executor::new(design, &mut dom);
    ex.capture_display = true;
    let mut out = Vec::new();
    for (cycle, row) in inputs.cycles.iter().enumerate() {
        let vals: Vec<CVal> = design
            .inputs
            .iter()
            .map(|&s| CVal { value: row[design.name_of(s)].value, width: design.width(s) })
            .collect();
        let step = ex.step(&mut dom, &vals).map_err(|source| SimError::Exec { cycle, source })?;
        out.push(step.display);
    }
    Ok(out)
}

/// A cycle read back from external simulator output.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ImportedCycle {
    pub branches: Vec<BranchId>,
    pub regs: IndexMap<String, u64>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("line {line}: {message}")]
pub struct ImportError {
    pub line: usize,
    pub message: String,
}

/// Parses `B_<i>` and `R <name> = <value>` lines from simulator stdout.
///
/// Markers print before the logger in each cycle, so a new cycle starts at
/// the first marker after a register line, or when a register repeats.
/// Other lines are ignored. Values may be `0x` hex, sized Verilog literals
/// or decimal.
pub fn import_stdout(text: &str) -> Result<Vec<ImportedCycle>, ImportError> {
    let mut cycles = Vec::new();
    let mut cur = ImportedCycle::default();
    let mut dirty = false;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if let Ok(b) = line.parse::<BranchId>() {
            if !cur.regs.is_empty() {
                cycles.push(std::mem::take(&mut cur));
            }
            cur.branches.push(b);
            dirty = true;
        } else if let Some(rest) = line.strip_prefix("R ") {
            let Some((name, val)) = rest.split_once('=') else {
                return Err(ImportError { line: i + 1, message: format!("malformed register line `{line}`") });
            };
            let name = name.trim().to_string();
            let (value, _) = parse_value(val.trim()).ok_or_else(|| ImportError {
                line: i + 1,
                message: format!("bad value `{}`", val.trim()),
            })?;
            if cur.regs.contains_key(&name) {
                cycles.push(std::mem::take(&mut cur));
            }
            cur.regs.insert(name, value);
            dirty = true;
        }
    }
    if dirty {
        cycles.push(cur);
    }
    Ok(cycles)
}
