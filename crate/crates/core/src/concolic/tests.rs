// SPDX-License-Identifier: Apache-2.0

use std::time::Instant;

use super::*;
use crate::corpus::load;
use crate::verilog::parse_module;

fn walk_seed(d: &InstrumentedDesign) -> InputSet {
    InputSet::seeds(vec![InputVector::from_rows(
        &d.design.input_ports(),
        &[&[("reset", 1), ("in", 0)], &[("reset", 0), ("in", 0)], &[("reset", 0), ("in", 0)]],
    )])
}

#[test]
fn listing1_reaches_full_coverage_from_walk_seed() {
    let d = load("listing1");
    let start = Instant::now();
    let out = explore(&d, &walk_seed(&d), ExploreBudget::default()).unwrap();
    assert!(start.elapsed().as_secs_f64() < 5.0);
    assert_eq!(out.report.covered(), 7);
    assert_eq!(out.report.coverage_pct(), 100.0);
    assert!(out.stats.solver_calls <= 50);
    // First directed vector: in=0x02 at cycle 1, then B_3 and B_6.
    let first = out.inputs.entries.iter().find(|e| matches!(e.provenance, VectorProvenance::Directed { .. })).unwrap();
    assert_eq!(
        first.provenance,
        VectorProvenance::Directed { cycle: 1, decision: 1, arm: 1, branch: Some(BranchId(3)) }
    );
    assert_eq!(first.vector.get(1, "in"), Some(2));
    let t = run(&d, &first.vector).unwrap();
    assert_eq!(t.records[1].branches, vec![BranchId(3), BranchId(7)]);
    assert_eq!(t.records[2].branches, vec![BranchId(2), BranchId(6)]);
}

#[test]
fn listing1_takes_three_solver_calls() {
    let d = load("listing1");
    let out = explore(&d, &walk_seed(&d), ExploreBudget::default()).unwrap();
    let targets: Vec<(usize, Vec<BranchId>)> = out.stats.attempts.iter().map(|a| (a.cycle, a.leaves.clone())).collect();
    assert_eq!(
        targets,
        vec![(1, vec![BranchId(3)]), (1, vec![BranchId(4)]), (1, vec![BranchId(5)])]
    );
    assert_eq!(out.stats.solver_calls, 3);
    assert_eq!(out.inputs.len(), 4);
}

#[test]
fn directed_vectors_cover_their_targets() {
    for name in ["listing1", "listing2", "seq_detect", "traffic_light", "updown", "alu"] {
        let d = load(name);
        let seeds = InputSet::seeds(vec![InputVector::reset_seed(&d.design.input_ports(), 8)]);
        let out = explore(&d, &seeds, ExploreBudget::default()).unwrap();
        for e in &out.inputs.entries {
            if let VectorProvenance::Directed { cycle, decision, arm, .. } = e.provenance {
                let t = run(&d, &e.vector).unwrap();
                assert!(t.records[cycle].edges.contains(&(decision, arm)), "{name}: {}", e.provenance);
            }
        }
    }
}

#[test]
fn report_json_shape() {
    let d = load("listing1");
    let out = explore(&d, &walk_seed(&d), ExploreBudget::default()).unwrap();
    let j = out.report.to_json();
    assert_eq!(j["coverage_pct"], json!(100.0));
    assert_eq!(j["B_3"]["class"], json!("reachable"));
    assert!(j["B_3"]["hits"].as_u64().unwrap() >= 1);
    assert_eq!(CoverageReport::from_json(&j).unwrap(), out.report);
}

#[test]
fn hits_count_cycles_over_the_input_set() {
    let d = load("listing1");
    let seeds = walk_seed(&d);
    let r = coverage_report(&d, &seeds, &[]).unwrap();
    assert_eq!(r.branches[&BranchId(1)].hits, 1);
    assert_eq!(r.branches[&BranchId(2)].hits, 2);
    assert_eq!(r.branches[&BranchId(7)].hits, 2);
    assert_eq!(r.branches[&BranchId(3)].class, BranchClass::Unknown);
}

#[test]
fn zero_branch_design_is_fully_covered() {
    let src = "module c(input wire [3:0] a, output wire [3:0] y); assign y = a + 4'h1; endmodule";
    let d = InstrumentedDesign::from_module(parse_module(src).unwrap()).unwrap();
    let seeds = InputSet::seeds(vec![InputVector::from_rows(&d.design.input_ports(), &[&[("a", 3)]])]);
    let out = explore(&d, &seeds, ExploreBudget::default()).unwrap();
    assert_eq!(out.report.coverage_pct(), 100.0);
    assert_eq!(out.inputs, seeds);
    assert_eq!(out.stats.solver_calls, 0);
}

#[test]
fn impossible_guard_is_potentially_unreachable() {
    let d = load("dead_branch");
    let seeds = InputSet::seeds(vec![InputVector::reset_seed(&d.design.input_ports(), 3)]);
    let out = explore(&d, &seeds, ExploreBudget::default()).unwrap();
    let dead = out.report.with_class(BranchClass::PotentiallyUnreachable);
    assert_eq!(dead.len(), 1);
    let b = dead[0];
    assert_eq!(d.branch_map.get(b).unwrap().condition, "x > 8'hFF");
    // The look-alike guard one value lower is live.
    assert_eq!(out.report.with_class(BranchClass::Unknown), vec![]);
    assert_eq!(out.report.covered(), out.report.total() - 1);
}

#[test]
fn deep_equality_chain_is_reached() {
    let d = load("stress_lock");
    let seeds = InputSet::seeds(vec![InputVector::reset_seed(&d.design.input_ports(), 8)]);
    let out = explore(&d, &seeds, ExploreBudget { max_solver_calls: 100, ..ExploreBudget::default() }).unwrap();
    let unlocked = out.inputs.vectors().any(|v| {
        let t = run(&d, v).unwrap();
        t.records.iter().any(|r| r.regs.get("unlocked").map(|l| l.value) == Some(1))
    });
    assert!(unlocked);
    assert!(out.stats.solver_calls <= 100);
}

#[test]
fn frontier_orders_by_cycle_then_branch_and_skips_covered() {
    let d = load("listing1");
    let seed = &walk_seed(&d).entries[0].vector;
    let t = run(&d, seed).unwrap();
    let covered: BTreeSet<(usize, usize)> = t.records.iter().flat_map(|r| r.edges.iter().copied()).collect();
    let f = select_frontier(&d.design, &t, &covered);
    let keys: Vec<(usize, u32)> = f.iter().map(|t| (t.cycle, t.key.0)).collect();
    assert_eq!(keys, vec![(1, 3), (1, 4), (1, 5), (1, 6), (2, 3), (2, 4), (2, 5), (2, 6)]);
}

#[test]
fn random_extension_stretches_short_seeds() {
    // A one-cycle seed cannot reach the detector's later states by flipping
    // a single decision; extension cycles give the search room to work.
    let d = load("seq_detect");
    let seeds = InputSet::seeds(vec![InputVector::from_rows(&d.design.input_ports(), &[&[("reset", 1), ("din", 0)]])]);
    let seed_only = coverage_report(&d, &seeds, &[]).unwrap().covered();
    let out = explore(&d, &seeds, ExploreBudget::default()).unwrap();
    assert!(out.stats.extensions >= 1);
    assert!(out.inputs.entries.iter().any(|e| e.provenance == VectorProvenance::ExtendedRandomSuffix));
    assert!(out.report.covered() > seed_only + 2, "{}", out.report.to_json());
}

#[test]
fn one_cycle_seed_needs_a_stepping_flip() {
    // From a one-cycle seed Listing 1's B_6 needs two changes: a longer
    // horizon, and a flip of an already covered case arm feeding it.
    let d = load("listing1");
    let seeds = InputSet::seeds(vec![InputVector::from_rows(&d.design.input_ports(), &[&[("reset", 1), ("in", 0)]])]);
    let out = explore(&d, &seeds, ExploreBudget::default()).unwrap();
    assert_eq!(out.report.covered(), 7);
    assert!(out.stats.stepping > 0);
    assert!(out.stats.extensions > 0);
}

#[test]
fn listing2_is_fully_covered_from_a_reset_seed() {
    // `out <= 1` sits behind the combinational case; reaching it takes the
    // increment arm in the same cycle.
    let d = load("listing2");
    let seeds = InputSet::seeds(vec![InputVector::reset_seed(&d.design.input_ports(), 3)]);
    let out = explore(&d, &seeds, ExploreBudget::default()).unwrap();
    assert_eq!(out.report.coverage_pct(), 100.0);
    assert!(out.report.with_class(BranchClass::PotentiallyUnreachable).is_empty());
}

#[test]
fn exploration_is_deterministic() {
    let d = load("seq_detect");
    let seeds = InputSet::seeds(vec![InputVector::reset_seed(&d.design.input_ports(), 6)]);
    let a = explore(&d, &seeds, ExploreBudget::default()).unwrap();
    let b = explore(&d, &seeds, ExploreBudget::default()).unwrap();
    assert_eq!(a.inputs, b.inputs);
    assert_eq!(a.report, b.report);
}

#[test]
fn input_set_json_round_trip() {
    let d = load("listing1");
    let out = explore(&d, &walk_seed(&d), ExploreBudget::default()).unwrap();
    let back = InputSet::from_json(&out.inputs.to_json(), &d.design.input_ports()).unwrap();
    assert_eq!(back, out.inputs);
    // A bare vector reads as a one-seed set.
    let bare = walk_seed(&d).entries[0].vector.to_json();
    assert_eq!(InputSet::from_json(&bare, &d.design.input_ports()).unwrap(), walk_seed(&d));
}

#[test]
fn concolic_never_trails_random_on_corpus() {
    for name in ["listing1", "seq_detect", "stress_lock", "dead_branch", "updown"] {
        let d = load(name);
        let seeds = InputSet::seeds(vec![InputVector::reset_seed(&d.design.input_ports(), 8)]);
        let out = explore(&d, &seeds, ExploreBudget::default()).unwrap();
        let random = random_baseline(&d, out.stats.sim_runs.max(1), 8, 1).unwrap();
        assert!(out.report.covered() >= random.len(), "{name}: {} < {}", out.report.covered(), random.len());
    }
}
