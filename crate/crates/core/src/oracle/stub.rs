// SPDX-License-Identifier: Apache-2.0

//! In-tree reference models and the model side of the wire protocol.
//!
//! These stand in for externally supplied golden models: a hand-written
//! counter model with the intended Listing 2 behaviour, and a model backed
//! by any Verilog file run through the simulator.

use std::io::{BufRead, Write};
use std::sync::Arc;

use indexmap::IndexMap;

use super::protocol::{decode_value, Request, Response};
use crate::bits::{format_hex, mask};
use crate::sim::{CVal, Concrete, Design, Executor};

/// A cycle-stepped reference model.
pub trait ReferenceModel {
    fn inputs(&self) -> Vec<(String, u32)>;
    fn outputs(&self) -> Vec<(String, u32)>;
    /// Back to the state before any edge.
    fn reset(&mut self);
    /// One clock edge. Returns output values and optional branch tags.
    fn step(&mut self, inputs: &IndexMap<String, u64>) -> Result<(IndexMap<String, u64>, Vec<String>), String>;
}

/// The counter with the timing the designer intended: `out` rises on the
/// same edge the counter reaches one.
///
/// The next-state logic mirrors a combinational `case` without a default,
/// so an unmatched input holds the last computed next value. It is
/// recomputed after the edge from the new counter and the same input.
#[derive(Debug, Clone, Default)]
pub struct CounterModel {
    counter: u8,
    next: u8,
    out: bool,
}

impl CounterModel {
    fn next_of(&self, input: u8, counter: u8) -> Option<u8> {
        match input {
            0x00 => Some(counter.wrapping_sub(1)),
            0x02 => Some(counter.wrapping_add(1)),
            0xFF => Some(0),
            _ => None,
        }
    }
}

impl ReferenceModel for CounterModel {
    fn inputs(&self) -> Vec<(String, u32)> {
        vec![("reset".into(), 1), ("in".into(), 8)]
    }

    fn outputs(&self) -> Vec<(String, u32)> {
        vec![("out".into(), 1)]
    }

    fn reset(&mut self) {
        *self = CounterModel::default();
    }

    fn step(&mut self, inputs: &IndexMap<String, u64>) -> Result<(IndexMap<String, u64>, Vec<String>), String> {
        let reset = *inputs.get("reset").ok_or("missing input `reset`")? != 0;
        let input = *inputs.get("in").ok_or("missing input `in`")? as u8;
        if let Some(n) = self.next_of(input, self.counter) {
            self.next = n;
        }
        let tag = if reset {
            self.counter = 0;
            self.out = false;
            "S_RESET"
        } else {
            self.counter = self.next;
            self.out = self.next == 1;
            match input {
                0x00 => "S_DEC",
                0x02 => "S_INC",
                0xFF => "S_CLEAR",
                _ => "S_HOLD",
            }
        };
        if let Some(n) = self.next_of(input, self.counter) {
            self.next = n;
        }
        Ok((IndexMap::from([("out".to_string(), u64::from(self.out))]), vec![tag.to_string()]))
    }
}

/// Uses a lowered Verilog design as the reference.
pub struct RtlModel {
    design: Arc<Design>,
    values: Vec<CVal>,
}

impl RtlModel {
    pub fn new(design: Arc<Design>) -> Self {
        let values = Executor::new(&design, &mut Concrete).values;
        RtlModel { design, values }
    }
}

impl ReferenceModel for RtlModel {
    fn inputs(&self) -> Vec<(String, u32)> {
        self.design.input_ports()
    }

    fn outputs(&self) -> Vec<(String, u32)> {
        self.design.output_ports()
    }

    fn reset(&mut self) {
        self.values = Executor::new(&self.design, &mut Concrete).values;
    }

    fn step(&mut self, inputs: &IndexMap<String, u64>) -> Result<(IndexMap<String, u64>, Vec<String>), String> {
        let d = &self.design;
        let mut vals = Vec::with_capacity(d.inputs.len());
        for &s in &d.inputs {
            let name = d.name_of(s);
            let v = *inputs.get(name).ok_or_else(|| format!("missing input `{name}`"))?;
            vals.push(CVal { value: v & mask(d.width(s)), width: d.width(s) });
        }
        let mut ex = Executor::new(d, &mut Concrete);
        ex.values = std::mem::take(&mut self.values);
        let step = ex.step(&mut Concrete, &vals).map_err(|e| e.to_string())?;
        self.values = ex.values;
        let outs = d.outputs.iter().map(|&s| (d.name_of(s).to_string(), self.values[s].value)).collect();
        Ok((outs, step.branches.iter().map(|b| b.to_string()).collect()))
    }
}

/// Injected misbehaviour, for exercising the harness.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Faults {
    /// Write a non-JSON line instead of answering this cycle.
    pub malformed_at: Option<usize>,
    /// Exit with status 3 instead of answering this cycle.
    pub crash_at: Option<usize>,
    /// Answer this cycle with an `error` message.
    pub error_at: Option<usize>,
    /// Invert bit 0 of every output at this cycle.
    pub flip_at: Option<usize>,
    /// Leave out this output from every answer.
    pub drop_output: Option<String>,
}

/// What `serve` ended with.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ServeEnd {
    /// Clean `end`.
    Done,
    /// A crash was injected; the caller should exit non-zero.
    Crash,
    /// The harness broke the protocol.
    Violation(String),
}

/// Answers requests from `input` until `end` or EOF.
pub fn serve<M: ReferenceModel, R: BufRead, W: Write>(
    model: &mut M,
    input: R,
    mut output: W,
    faults: &Faults,
    tags: bool,
) -> std::io::Result<ServeEnd> {
    let widths: IndexMap<String, u32> = model.outputs().into_iter().collect();
    let in_widths: IndexMap<String, u32> = model.inputs().into_iter().collect();
    let mut started = false;
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let req: Request = match serde_json::from_str(&line) {
            Ok(r) => r,
            Err(e) => return violation(&mut output, format!("bad request: {e}")),
        };
        let reply = match req {
            Request::Init { ports } => {
                let missing: Vec<&String> = in_widths.keys().filter(|k| !ports.contains_key(*k)).collect();
                if missing.is_empty() {
                    model.reset();
                    started = true;
                    Response::Ok
                } else {
                    Response::Error { message: format!("harness does not drive {missing:?}") }
                }
            }
            Request::Cycle { .. } if !started => return violation(&mut output, "cycle before init".into()),
            Request::Cycle { n, inputs } => {
                if faults.crash_at == Some(n) {
                    return Ok(ServeEnd::Crash);
                }
                if faults.malformed_at == Some(n) {
                    writeln!(output, "out n={n} ???")?;
                    output.flush()?;
                    continue;
                }
                if faults.error_at == Some(n) {
                    Response::Error { message: format!("injected failure at cycle {n}") }
                } else {
                    let mut vals = IndexMap::new();
                    let mut bad = None;
                    for (k, v) in &inputs {
                        let w = in_widths.get(k).copied().unwrap_or(64);
                        match decode_value(v, w) {
                            Ok(l) => {
                                vals.insert(k.clone(), l.value);
                            }
                            Err(m) => bad = Some(format!("input `{k}`: {m}")),
                        }
                    }
                    match bad.map(Err).unwrap_or_else(|| model.step(&vals)) {
                        Ok((outs, t)) => {
                            let flip = u64::from(faults.flip_at == Some(n));
                            let outputs = outs
                                .iter()
                                .filter(|(k, _)| faults.drop_output.as_deref() != Some(k.as_str()))
                                .map(|(k, v)| {
                                    let w = widths.get(k).copied().unwrap_or(64);
                                    (k.clone(), format_hex((v ^ flip) & mask(w), w))
                                })
                                .collect();
                            Response::Out { n, outputs, tags: tags.then_some(t) }
                        }
                        Err(message) => Response::Error { message },
                    }
                }
            }
            Request::End => return Ok(ServeEnd::Done),
        };
        writeln!(output, "{}", reply.to_line())?;
        output.flush()?;
    }
    Ok(ServeEnd::Done)
}

/// Tells the harness what went wrong before giving up.
fn violation<W: Write>(output: &mut W, message: String) -> std::io::Result<ServeEnd> {
    writeln!(output, "{}", Response::Error { message: message.clone() }.to_line())?;
    output.flush()?;
    Ok(ServeEnd::Violation(message))
}

/// Runs a model directly over a vector, bypassing the wire.
pub fn run_in_process<M: ReferenceModel>(model: &mut M, vector: &crate::sim::InputVector) -> Result<super::RefTrace, String> {
    model.reset();
    let widths: IndexMap<String, u32> = model.outputs().into_iter().collect();
    let mut trace = super::RefTrace::default();
    for row in &vector.cycles {
        let vals = row.iter().map(|(k, v)| (k.clone(), v.value)).collect();
        let (outs, tags) = model.step(&vals)?;
        let outputs = outs
            .into_iter()
            .map(|(k, v)| {
                let w = widths.get(&k).copied().unwrap_or(64);
                (k, crate::bits::BitVecLiteral::new(w, v))
            })
            .collect();
        trace.cycles.push(super::RefCycle { outputs, tags });
    }
    Ok(trace)
}
