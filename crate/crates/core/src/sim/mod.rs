// SPDX-License-Identifier: Apache-2.0

//! Two-state, cycle-based simulation.

pub mod design;
pub mod exec;
mod trace;

pub use design::{Design, LowerError, SigId};
pub use exec::{format_display, CVal, Concrete, Domain, ExecError, ExecEvent, Executor, StepOutput};
pub use trace::{
    display_output, import_stdout, run, simulate, CycleRecord, ImportError, ImportedCycle,
    InputVector, SimError, Trace,
};
