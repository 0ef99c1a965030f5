// SPDX-License-Identifier: Apache-2.0

//! Verilog instrumentation, simulation, concolic exploration, differential
//! checking against an external golden model, and repair-loop feedback.

pub mod bits;
pub mod cfg;
pub mod concolic;
pub mod config;
pub mod corpus;
pub mod instrument;
pub mod oracle;
pub mod repair;
pub mod report;
pub mod sim;
pub mod solver;
pub mod symbolic;
pub mod verilog;
