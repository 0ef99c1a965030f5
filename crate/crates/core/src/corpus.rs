// SPDX-License-Identifier: Apache-2.0

//! Bundled example designs, used by tests, benches and `rtlfix` demos.

use crate::instrument::InstrumentedDesign;
use crate::verilog::parse_module;

macro_rules! designs {
    ($($name:literal),* $(,)?) => {
        &[$(($name, include_str!(concat!("../designs/", $name, ".v")))),*]
    };
}

/// `(name, source)` for every bundled design.
pub const DESIGNS: &[(&str, &str)] = designs![
    "listing1",
    "listing2",
    "dead_branch",
    "stress_lock",
    "seq_detect",
    "swap",
    "alu",
    "mux4",
    "prio_enc",
    "shift_reg",
    "accumulator",
    "gray_counter",
    "traffic_light",
    "edge_detect",
    "parity",
    "comb_adder",
    "updown",
    "bit_select",
    "param_counter",
];

/// Listing 1 without its `$display` markers.
pub const LISTING1_RAW: &str = include_str!("../designs/listing1_raw.v");

pub fn source(name: &str) -> Option<&'static str> {
    DESIGNS.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

/// Parses and instruments a bundled design. Panics on a broken corpus file.
pub fn load(name: &str) -> InstrumentedDesign {
    let src = source(name).unwrap_or_else(|| panic!("no bundled design `{name}`"));
    let m = parse_module(src).unwrap_or_else(|e| panic!("{name}: {e}"));
    InstrumentedDesign::from_module(m).unwrap_or_else(|e| panic!("{name}: {e}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_design_loads_and_reinstruments_stably() {
        assert!(DESIGNS.len() >= 15);
        for (name, _) in DESIGNS {
            let d = load(name);
            let again = InstrumentedDesign::from_module(parse_module(&d.text()).unwrap()).unwrap();
            assert_eq!(d.branch_count(), again.branch_count(), "{name}");
            assert_eq!(d.text(), again.text(), "{name}");
        }
    }
}
