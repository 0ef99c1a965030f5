// SPDX-License-Identifier: Apache-2.0

//! Shared fixtures for the pipeline benchmarks.

use rtlfix_core::concolic::InputSet;
use rtlfix_core::instrument::InstrumentedDesign;
use rtlfix_core::sim::InputVector;

/// Reset-then-idle seed of `cycles` cycles for any bundled design.
pub fn reset_seed(d: &InstrumentedDesign, cycles: usize) -> InputSet {
    InputSet::seeds(vec![InputVector::reset_seed(&d.design.input_ports(), cycles)])
}

/// Bundled designs worth timing end to end.
pub const BENCH_DESIGNS: &[&str] = &["listing1", "listing2", "seq_detect", "stress_lock", "traffic_light", "alu"];

#[cfg(test)]
mod tests {
    use super::*;
    use rtlfix_core::corpus::load;

    #[test]
    fn fixtures_load() {
        for name in BENCH_DESIGNS {
            let d = load(name);
            assert_eq!(reset_seed(&d, 4).len(), 1);
        }
    }
}
