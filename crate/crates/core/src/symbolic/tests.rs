// SPDX-License-Identifier: Apache-2.0

use super::*;
use crate::sim::run;
use crate::verilog::parse_module;

const LISTING1: &str = include_str!("../../designs/listing1.v");

fn listing1() -> InstrumentedDesign {
    InstrumentedDesign::from_module(parse_module(LISTING1).unwrap()).unwrap()
}

fn seed(d: &InstrumentedDesign, rows: &[(u64, u64)]) -> InputVector {
    let rows: Vec<Vec<(&str, u64)>> = rows.iter().map(|&(r, i)| vec![("reset", r), ("in", i)]).collect();
    let refs: Vec<&[(&str, u64)]> = rows.iter().map(|r| r.as_slice()).collect();
    InputVector::from_rows(&d.design.input_ports(), &refs)
}

fn replay(d: &InstrumentedDesign, iv: &InputVector) -> (PathCondition, Vec<SymbolicState>) {
    let t = run(d, iv).unwrap();
    symbolic_replay(d, &t, iv).unwrap()
}

#[test]
fn walk_cycle0_constraints() {
    let d = listing1();
    let (path, _) = replay(&d, &seed(&d, &[(1, 0), (0, 0), (0, 0)]));
    let c0: Vec<String> = path.cycle(0).map(|c| c.to_string()).collect();
    assert_eq!(c0, ["reset_0 == 1'h1", "in_0 == 8'h00", "counter_1 == 8'h00", "out_1 == 1'h0"]);
    let kinds: Vec<_> = path.cycle(0).map(|c| c.provenance.clone()).collect();
    assert_eq!(
        kinds,
        [
            Provenance::PathCondition { cycle: 0 },
            Provenance::Pin { cycle: 0 },
            Provenance::Effect { cycle: 0 },
            Provenance::Effect { cycle: 0 },
        ]
    );
}

#[test]
fn walk_cycle1_path_includes_b7_condition() {
    let d = listing1();
    let (path, states) = replay(&d, &seed(&d, &[(1, 0), (0, 0), (0, 0)]));
    let c1: Vec<String> = path.cycle(1).map(|c| c.to_string()).collect();
    assert_eq!(c1[..3], ["reset_1 == 1'h0", "in_1 == 8'h00", "counter_1 != 8'h01"]);
    assert_eq!(c1[3], "counter_2 == 8'(counter_1 - 32'h00000001)");
    assert_eq!(states[1]["counter"].to_string(), "8'(counter_1 - 32'h00000001)");
}

#[test]
fn walk_mutation_set_is_exact() {
    let d = listing1();
    let (path, _) = replay(&d, &seed(&d, &[(1, 0), (0, 0), (0, 0)]));
    let set = mutate_branch(&path, (1, BranchId(3))).unwrap();
    assert_eq!(
        set.texts(),
        [
            "reset_0 == 1'h1",
            "in_0 == 8'h00",
            "counter_1 == 8'h00",
            "out_1 == 1'h0",
            "reset_1 == 1'h0",
            "in_1 == 8'h02",
        ]
    );
    assert!(matches!(set.constraints.last().unwrap().provenance, Provenance::MutationTarget { cycle: 1, .. }));
}

#[test]
fn mutate_reset_branch_at_cycle0() {
    let d = listing1();
    let (path, _) = replay(&d, &seed(&d, &[(1, 0), (0, 0), (0, 0)]));
    let set = mutate_branch(&path, (0, BranchId(2))).unwrap_err();
    // B_2 sits under the else of the reset decision, which cycle 0 never entered.
    assert!(matches!(set, SymbolicError::NotAnAlternative { cycle: 0, .. }));
    let (dec, _) = locate(&path.design, BranchId(1)).unwrap();
    let set = mutate_arm(&path, 0, dec, 1).unwrap();
    assert_eq!(set.texts(), ["reset_0 == 1'h0"]);
}

#[test]
fn mutating_the_taken_arm_is_rejected() {
    let d = listing1();
    let (path, _) = replay(&d, &seed(&d, &[(1, 0), (0, 0)]));
    assert!(mutate_branch(&path, (1, BranchId(2))).is_err());
    assert!(mutate_branch(&path, (5, BranchId(3))).is_err());
}

#[test]
fn zero_cycles_gives_empty_path() {
    let d = listing1();
    let iv = InputVector::default();
    let (path, states) = replay(&d, &iv);
    assert!(path.constraints.is_empty());
    assert!(states.is_empty());
}

#[test]
fn replay_is_sound_for_its_own_inputs() {
    let d = listing1();
    let iv = seed(&d, &[(1, 0), (0, 2), (0, 0), (0, 0xFF), (0, 9), (1, 3), (0, 2)]);
    let (path, _) = replay(&d, &iv);
    // Effects define register versions; take those from the concrete trace.
    let t = run(&d, &iv).unwrap();
    let env = |v: &SymVar| -> Option<u64> {
        match iv.get(v.cycle, &v.name) {
            Some(x) => Some(x),
            None if v.cycle == 0 => Some(0),
            None => t.records[v.cycle - 1].regs.get(&v.name).map(|l| l.value),
        }
    };
    for c in &path.constraints {
        assert_eq!(c.holds(&env), Some(true), "{c} ({})", c.provenance);
    }
}

#[test]
fn case_default_predicate_is_conjunction_of_disequalities() {
    let d = listing1();
    let (path, _) = replay(&d, &seed(&d, &[(1, 0), (0, 0)]));
    let (dec, arm) = locate(&path.design, BranchId(5)).unwrap();
    let set = mutate_arm(&path, 1, dec, arm).unwrap();
    assert_eq!(
        set.texts().last().unwrap(),
        "((in_1 != 8'h00) && (in_1 != 8'h02)) && (in_1 != 8'hFF)"
    );
}

#[test]
fn shadowed_case_label_yields_false_predicate() {
    let m = parse_module(
        "module m(input wire clk, input wire [1:0] s, output reg y);
         always @(posedge clk) case (s) 2'd1: y <= 1'b0; 2'd1: y <= 1'b1; endcase
         endmodule",
    )
    .unwrap();
    let d = crate::instrument::instrument(&m).unwrap();
    let iv = InputVector::from_rows(&d.design.input_ports(), &[&[("s", 1)]]);
    let (path, _) = replay(&d, &iv);
    let set = mutate_arm(&path, 0, 0, 1).unwrap();
    assert_eq!(set.constraints.last().unwrap().term.as_const(), Some(0));
}

#[test]
fn dynamic_index_is_concretized() {
    let m = parse_module(
        "module m(input wire clk, input wire [2:0] i, input wire [7:0] v, output reg y);
         always @(posedge clk) if (v[i]) y <= 1'b1; else y <= 1'b0;
         endmodule",
    )
    .unwrap();
    let d = crate::instrument::instrument(&m).unwrap();
    let iv = InputVector::from_rows(&d.design.input_ports(), &[&[("i", 3), ("v", 8)]]);
    let (path, _) = replay(&d, &iv);
    assert!(path
        .constraints
        .iter()
        .any(|c| c.provenance == Provenance::Concretized { cycle: 0 } && c.to_string() == "i_0 == 3'h3"));
}
