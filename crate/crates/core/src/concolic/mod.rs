// SPDX-License-Identifier: Apache-2.0

//! Coverage-driven concolic exploration.
//!
//! Seeds are simulated first. Then, newest trace first, an uncovered arm of
//! a decision on the path is picked, the path is mutated towards it, the
//! constraints are solved and the resulting vector simulated. Vectors that
//! cover something new join the input set. When no mutable target remains,
//! the horizon is stretched with deterministic pseudo-random cycles.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;

use indexmap::IndexMap;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::bits::{mask, BitVecLiteral};
use crate::cfg::BranchId;
use crate::instrument::InstrumentedDesign;
use crate::sim::{run, Design, InputVector, SimError, Trace};
use crate::solver::{solve, SolveBudget, SolveResult};
use crate::symbolic::{mutate_arm, replay_design, PathCondition};

/// How a vector entered the input set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum VectorProvenance {
    Seed,
    /// Solved to take `arm` of `decision` at `cycle`; `branch` is set when
    /// that arm is a leaf.
    Directed { cycle: usize, decision: usize, arm: usize, branch: Option<BranchId> },
    ExtendedRandomSuffix,
}

impl fmt::Display for VectorProvenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VectorProvenance::Seed => f.write_str("seed"),
            VectorProvenance::Directed { cycle, branch: Some(b), .. } => write!(f, "directed({b}, cycle {cycle})"),
            VectorProvenance::Directed { cycle, decision, arm, .. } => {
                write!(f, "directed(decision {decision} arm {arm}, cycle {cycle})")
            }
            VectorProvenance::ExtendedRandomSuffix => f.write_str("extended-random-suffix"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InputEntry {
    pub vector: InputVector,
    pub provenance: VectorProvenance,
}

/// Ordered, duplicate-free list of vectors.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct InputSet {
    pub entries: Vec<InputEntry>,
}

impl InputSet {
    pub fn seeds(vectors: Vec<InputVector>) -> Self {
        let mut s = InputSet::default();
        for v in vectors {
            s.push(v, VectorProvenance::Seed);
        }
        s
    }

    /// Adds `vector` unless already present.
    pub fn push(&mut self, vector: InputVector, provenance: VectorProvenance) -> bool {
        if self.entries.iter().any(|e| e.vector == vector) {
            return false;
        }
        self.entries.push(InputEntry { vector, provenance });
        true
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn vectors(&self) -> impl Iterator<Item = &InputVector> {
        self.entries.iter().map(|e| &e.vector)
    }

    pub fn extend(&mut self, other: &InputSet) {
        for e in &other.entries {
            self.push(e.vector.clone(), e.provenance.clone());
        }
    }

    pub fn to_json(&self) -> Value {
        Value::Array(
            self.entries
                .iter()
                .map(|e| {
                    json!({
                        "provenance": serde_json::to_value(&e.provenance).expect("json"),
                        "cycles": e.vector.to_json(),
                    })
                })
                .collect(),
        )
    }

    /// Accepts the set form written by [`InputSet::to_json`], a list of bare
    /// vectors, or a single bare input vector (a JSON array of per-cycle
    /// objects).
    pub fn from_json(v: &Value, ports: &[(String, u32)]) -> Result<Self, SimError> {
        let arr = v.as_array().ok_or_else(|| SimError::Format("expected a JSON array".into()))?;
        if arr.first().is_some_and(Value::is_array) {
            let vs = arr.iter().map(|x| InputVector::from_json(x, ports)).collect::<Result<Vec<_>, _>>()?;
            return Ok(InputSet::seeds(vs));
        }
        let is_set = arr.first().is_some_and(|x| x.get("cycles").is_some());
        if !is_set {
            return Ok(InputSet::seeds(vec![InputVector::from_json(v, ports)?]));
        }
        let mut s = InputSet::default();
        for e in arr {
            let vector = InputVector::from_json(&e["cycles"], ports)?;
            let provenance = match e.get("provenance") {
                Some(p) => serde_json::from_value(p.clone()).map_err(|e| SimError::Format(e.to_string()))?,
                None => VectorProvenance::Seed,
            };
            s.push(vector, provenance);
        }
        Ok(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExploreBudget {
    pub max_solver_calls: usize,
    pub max_sim_runs: usize,
    pub solve: SolveBudget,
    /// Stop once branch coverage reaches this percentage.
    pub target_pct: f64,
    /// Random horizon extensions tried in a row without progress.
    pub max_extensions: usize,
    /// Cycles added per extension.
    pub extension_cycles: usize,
    pub rng_seed: u64,
}

impl Default for ExploreBudget {
    fn default() -> Self {
        ExploreBudget {
            max_solver_calls: 200,
            max_sim_runs: 1000,
            solve: SolveBudget::default(),
            target_pct: 100.0,
            max_extensions: 4,
            extension_cycles: 4,
            rng_seed: 0x5eed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BranchClass {
    Reachable,
    PotentiallyUnreachable,
    Unknown,
}

impl fmt::Display for BranchClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BranchClass::Reachable => "reachable",
            BranchClass::PotentiallyUnreachable => "potentially-unreachable",
            BranchClass::Unknown => "unknown",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BranchCoverage {
    pub hits: u64,
    pub class: BranchClass,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CoverageReport {
    pub branches: BTreeMap<BranchId, BranchCoverage>,
}

impl CoverageReport {
    pub fn total(&self) -> usize {
        self.branches.len()
    }

    pub fn covered(&self) -> usize {
        self.branches.values().filter(|c| c.hits > 0).count()
    }

    /// 100 for a design without branches.
    pub fn coverage_pct(&self) -> f64 {
        if self.branches.is_empty() {
            100.0
        } else {
            100.0 * self.covered() as f64 / self.total() as f64
        }
    }

    pub fn with_class(&self, class: BranchClass) -> Vec<BranchId> {
        self.branches.iter().filter(|(_, c)| c.class == class).map(|(b, _)| *b).collect()
    }

    pub fn to_json(&self) -> Value {
        let mut o = serde_json::Map::new();
        for (b, c) in &self.branches {
            o.insert(b.to_string(), json!({"hits": c.hits, "class": c.class.to_string()}));
        }
        o.insert("coverage_pct".into(), json!(self.coverage_pct()));
        Value::Object(o)
    }

    pub fn from_json(v: &Value) -> Result<Self, String> {
        let o = v.as_object().ok_or("coverage report must be an object")?;
        let mut branches = BTreeMap::new();
        for (k, x) in o {
            if k == "coverage_pct" {
                continue;
            }
            let b: BranchId = k.parse()?;
            let c: BranchCoverage = serde_json::from_value(x.clone()).map_err(|e| e.to_string())?;
            branches.insert(b, c);
        }
        Ok(CoverageReport { branches })
    }
}

/// An uncovered arm reachable by flipping one decision on a path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Target {
    pub cycle: usize,
    pub decision: usize,
    pub arm: usize,
    /// The arm's branch when it is a leaf.
    pub branch: Option<BranchId>,
    /// Lowest leaf at or under the arm, used for ordering.
    pub key: BranchId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AttemptResult {
    Sat,
    Unsat,
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Attempt {
    pub cycle: usize,
    pub decision: usize,
    pub arm: usize,
    /// Leaves the attempt was trying to open up.
    pub leaves: Vec<BranchId>,
    pub result: AttemptResult,
    /// The attempt's constraint set was already solved; no solver call.
    pub cached: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ExploreStats {
    pub solver_calls: usize,
    pub sim_runs: usize,
    pub attempts: Vec<Attempt>,
    pub extensions: usize,
    /// Solver calls spent on flips to already covered arms.
    pub stepping: usize,
}

#[derive(Debug, Error)]
pub enum ExploreError {
    #[error("no seed vectors")]
    NoSeeds,
    #[error("simulating vector {vector}: {source}")]
    Sim { vector: InputVector, source: SimError },
    #[error("replaying vector: {0}")]
    Replay(String),
    #[error("solver: {0}")]
    Solver(String),
}

#[derive(Debug, Clone)]
pub struct ExploreOutcome {
    pub inputs: InputSet,
    pub report: CoverageReport,
    pub stats: ExploreStats,
}

/// Uncovered alternatives at decisions taken in `trace`, ordered by
/// (cycle, lowest leaf). `covered` holds every `(decision, arm)` taken so
/// far by any run.
pub fn select_frontier(design: &Design, trace: &Trace, covered: &BTreeSet<(usize, usize)>) -> Vec<Target> {
    let mut out = Vec::new();
    for rec in &trace.records {
        let mut seen = BTreeSet::new();
        for &(d, taken) in &rec.edges {
            if !seen.insert(d) {
                continue;
            }
            let info = &design.decisions[d];
            for (a, arm) in info.arms.iter().enumerate() {
                if a == taken || covered.contains(&(d, a)) {
                    continue;
                }
                let Some(&key) = arm.leaves.iter().min() else { continue };
                out.push(Target { cycle: rec.cycle, decision: d, arm: a, branch: arm.branch, key });
            }
        }
    }
    out.sort_by_key(|t| (t.cycle, t.key));
    out
}

struct Run {
    vector: InputVector,
    trace: Trace,
    path: Option<PathCondition>,
    tried: BTreeSet<(usize, usize, usize)>,
    /// (cycle, decision, arm) of uncovered targets proven infeasible here.
    unsat: BTreeSet<(usize, usize, usize)>,
    /// Produced by a stepping flip; not a source of further ones.
    stepping: bool,
}

struct Explorer<'a> {
    design: &'a InstrumentedDesign,
    budget: ExploreBudget,
    covered_arms: BTreeSet<(usize, usize)>,
    covered_leaves: BTreeSet<BranchId>,
    runs: Vec<Run>,
    inputs: InputSet,
    stats: ExploreStats,
    cache: HashMap<String, SolveResult>,
    seen: HashSet<InputVector>,
    rng: ChaCha8Rng,
}

impl Explorer<'_> {
    fn total(&self) -> usize {
        self.design.design.branch_count()
    }

    fn pct(&self) -> f64 {
        if self.total() == 0 {
            100.0
        } else {
            100.0 * self.covered_leaves.len() as f64 / self.total() as f64
        }
    }

    fn done(&self) -> bool {
        self.pct() >= self.budget.target_pct
    }

    fn simulate(&mut self, v: &InputVector) -> Result<Trace, ExploreError> {
        self.stats.sim_runs += 1;
        self.seen.insert(v.clone());
        run(self.design, v).map_err(|source| ExploreError::Sim { vector: v.clone(), source })
    }

    /// Records coverage; true when something new was hit.
    fn absorb(&mut self, t: &Trace) -> bool {
        let mut new = false;
        for r in &t.records {
            for e in &r.edges {
                new |= self.covered_arms.insert(*e);
            }
            for b in &r.branches {
                new |= self.covered_leaves.insert(*b);
            }
        }
        new
    }

    fn keep(&mut self, vector: InputVector, trace: Trace, provenance: VectorProvenance) {
        self.inputs.push(vector.clone(), provenance);
        self.runs.push(Run { vector, trace, path: None, tried: BTreeSet::new(), unsat: BTreeSet::new(), stepping: false });
    }

    /// A run kept only as a base for further flips.
    fn stage(&mut self, vector: InputVector, trace: Trace) {
        self.runs.push(Run { vector, trace, path: None, tried: BTreeSet::new(), unsat: BTreeSet::new(), stepping: true });
    }

    /// A flip to an already covered arm near an infeasible target. Reaching
    /// some leaves takes two changes in one cycle, e.g. a different case arm
    /// feeding the condition of a later `if`; a single flip of the later
    /// decision keeps the earlier arm pinned and is UNSAT.
    fn next_stepping(&self) -> Option<(usize, Target)> {
        if self.covered_leaves.len() >= self.total() {
            return None;
        }
        for ri in (0..self.runs.len()).rev() {
            let run = &self.runs[ri];
            if run.stepping {
                continue;
            }
            for &(cycle, td, ta) in &run.unsat {
                let want = &self.design.design.decisions[td].arms[ta].leaves;
                for c in [Some(cycle), cycle.checked_sub(1)].into_iter().flatten() {
                    let Some(rec) = run.trace.records.get(c) else { continue };
                    let mut seen = BTreeSet::new();
                    for &(d, taken) in &rec.edges {
                        // Only decisions evaluated before the target can feed it.
                        if c == cycle && d == td {
                            break;
                        }
                        if !seen.insert(d) {
                            continue;
                        }
                        let arms = &self.design.design.decisions[d].arms;
                        // Leaving an enclosing arm cannot help.
                        if want.iter().all(|b| arms[taken].leaves.contains(b)) {
                            continue;
                        }
                        for (a, arm) in arms.iter().enumerate() {
                            if a == taken || !self.covered_arms.contains(&(d, a)) || run.tried.contains(&(c, d, a)) {
                                continue;
                            }
                            let Some(&key) = arm.leaves.iter().min() else { continue };
                            return Some((ri, Target { cycle: c, decision: d, arm: a, branch: arm.branch, key }));
                        }
                    }
                }
            }
        }
        None
    }

    /// Next target, newest run first.
    fn next_target(&mut self) -> Option<(usize, Target)> {
        for ri in (0..self.runs.len()).rev() {
            let frontier = select_frontier(&self.design.design, &self.runs[ri].trace, &self.covered_arms);
            let run = &self.runs[ri];
            if let Some(t) = frontier.into_iter().find(|t| !run.tried.contains(&(t.cycle, t.decision, t.arm))) {
                return Some((ri, t));
            }
        }
        None
    }

    fn directed_vector(&self, parent: &InputVector, a: &crate::solver::Assignment, cycle: usize) -> InputVector {
        let d = &self.design.design;
        let mut out = parent.clone();
        for (t, row) in out.cycles.iter_mut().enumerate().take(cycle + 1) {
            for (name, width) in d.input_ports() {
                if let Some((_, v)) = a.iter().find(|(var, _)| var.cycle == t && var.name == name) {
                    row.insert(name.clone(), BitVecLiteral::new(width, *v));
                }
            }
        }
        out
    }

    fn attempt(&mut self, ri: usize, target: Target, stepping: bool) -> Result<(), ExploreError> {
        self.runs[ri].tried.insert((target.cycle, target.decision, target.arm));
        if self.runs[ri].path.is_none() {
            let (path, _, _) = replay_design(&self.design.design, &self.runs[ri].vector)
                .map_err(|e| ExploreError::Replay(e.to_string()))?;
            self.runs[ri].path = Some(path);
        }
        let path = self.runs[ri].path.as_ref().unwrap();
        let set = mutate_arm(path, target.cycle, target.decision, target.arm)
            .map_err(|e| ExploreError::Replay(e.to_string()))?;
        let key = set.to_string();
        let leaves = self.design.design.decisions[target.decision].arms[target.arm].leaves.clone();
        let (result, cached) = match self.cache.get(&key) {
            Some(r) => (r.clone(), true),
            None => {
                self.stats.solver_calls += 1;
                let r = solve(&set, self.budget.solve).map_err(|e| ExploreError::Solver(e.to_string()))?;
                self.cache.insert(key, r.clone());
                (r, false)
            }
        };
        let mut kind = match result {
            SolveResult::Sat(_) => AttemptResult::Sat,
            SolveResult::Unsat => AttemptResult::Unsat,
            SolveResult::Unknown(_) => AttemptResult::Unknown,
        };
        if kind == AttemptResult::Unsat && !stepping {
            self.runs[ri].unsat.insert((target.cycle, target.decision, target.arm));
        }
        if let SolveResult::Sat(a) = &result {
            let parent = self.runs[ri].vector.clone();
            let v = self.directed_vector(&parent, a, target.cycle);
            if !self.seen.contains(&v) && self.stats.sim_runs < self.budget.max_sim_runs {
                let trace = self.simulate(&v)?;
                let hit = trace.records[target.cycle].edges.contains(&(target.decision, target.arm));
                if !hit {
                    log::warn!("directed vector missed decision {} arm {} at cycle {}", target.decision, target.arm, target.cycle);
                    kind = AttemptResult::Unknown;
                } else if self.absorb(&trace) {
                    let provenance = VectorProvenance::Directed {
                        cycle: target.cycle,
                        decision: target.decision,
                        arm: target.arm,
                        branch: target.branch,
                    };
                    self.keep(v, trace, provenance);
                } else if stepping {
                    self.stage(v, trace);
                }
            }
        }
        if stepping {
            // Covered arms; says nothing about reachability.
            self.stats.stepping += 1;
            return Ok(());
        }
        self.stats.attempts.push(Attempt {
            cycle: target.cycle,
            decision: target.decision,
            arm: target.arm,
            leaves,
            result: kind,
            cached,
        });
        Ok(())
    }

    fn extend(&mut self) -> Result<bool, ExploreError> {
        let Some(base) = self.runs.last().map(|r| r.vector.clone()) else { return Ok(false) };
        let ports = self.design.design.input_ports();
        let mut v = base;
        for _ in 0..self.budget.extension_cycles {
            let row: IndexMap<String, BitVecLiteral> = ports
                .iter()
                .map(|(n, w)| {
                    let value = if is_reset_name(n) { 0 } else { self.rng.gen::<u64>() & mask(*w) };
                    (n.clone(), BitVecLiteral::new(*w, value))
                })
                .collect();
            v.cycles.push(row);
        }
        self.stats.extensions += 1;
        let trace = self.simulate(&v)?;
        let new = self.absorb(&trace);
        // Kept either way so the longer horizon can be mutated.
        self.keep(v, trace, VectorProvenance::ExtendedRandomSuffix);
        Ok(new)
    }
}

fn is_reset_name(n: &str) -> bool {
    matches!(n.to_ascii_lowercase().as_str(), "reset" | "rst" | "rst_n" | "reset_n" | "areset" | "srst")
}

/// Runs the exploration loop.
pub fn explore(design: &InstrumentedDesign, seeds: &InputSet, budget: ExploreBudget) -> Result<ExploreOutcome, ExploreError> {
    if seeds.is_empty() {
        return Err(ExploreError::NoSeeds);
    }
    let mut ex = Explorer {
        design,
        budget,
        covered_arms: BTreeSet::new(),
        covered_leaves: BTreeSet::new(),
        runs: Vec::new(),
        inputs: InputSet::default(),
        stats: ExploreStats::default(),
        cache: HashMap::new(),
        seen: HashSet::new(),
        rng: ChaCha8Rng::seed_from_u64(budget.rng_seed),
    };
    if design.design.branch_count() == 0 {
        for v in seeds.vectors() {
            ex.simulate(v)?;
        }
        let report = coverage_report(design, seeds, &[])?;
        return Ok(ExploreOutcome { inputs: seeds.clone(), report, stats: ex.stats });
    }
    for e in &seeds.entries {
        let trace = ex.simulate(&e.vector)?;
        if ex.absorb(&trace) {
            ex.keep(e.vector.clone(), trace, e.provenance.clone());
        }
    }
    let mut idle_extensions = 0;
    while !ex.done() && ex.stats.sim_runs < budget.max_sim_runs {
        match ex.next_target() {
            Some((ri, t)) => {
                if ex.stats.solver_calls >= budget.max_solver_calls {
                    break;
                }
                ex.attempt(ri, t, false)?;
            }
            None if ex.stats.solver_calls < budget.max_solver_calls && ex.next_stepping().is_some() => {
                let (ri, t) = ex.next_stepping().expect("checked");
                ex.attempt(ri, t, true)?;
            }
            None => {
                if idle_extensions >= budget.max_extensions {
                    break;
                }
                if ex.extend()? {
                    idle_extensions = 0;
                } else {
                    idle_extensions += 1;
                }
            }
        }
    }
    let report = coverage_report(design, &ex.inputs, &ex.stats.attempts)?;
    Ok(ExploreOutcome { inputs: ex.inputs, report, stats: ex.stats })
}

/// Hit counts over `inputs`, classified using the recorded attempts.
pub fn coverage_report(design: &InstrumentedDesign, inputs: &InputSet, attempts: &[Attempt]) -> Result<CoverageReport, ExploreError> {
    let mut hits: BTreeMap<BranchId, u64> = design.branch_map.ids().map(|b| (b, 0)).collect();
    for v in inputs.vectors() {
        let t = run(design, v).map_err(|source| ExploreError::Sim { vector: v.clone(), source })?;
        for r in &t.records {
            for b in &r.branches {
                *hits.entry(*b).or_default() += 1;
            }
        }
    }
    Ok(classify(&hits, attempts))
}

/// Reachable iff hit; potentially unreachable iff never hit and every
/// attempt towards it was UNSAT; unknown otherwise.
pub fn classify(hits: &BTreeMap<BranchId, u64>, attempts: &[Attempt]) -> CoverageReport {
    let branches = hits
        .iter()
        .map(|(b, &h)| {
            let class = if h > 0 {
                BranchClass::Reachable
            } else {
                let toward: Vec<&Attempt> = attempts.iter().filter(|a| a.leaves.contains(b)).collect();
                if !toward.is_empty() && toward.iter().all(|a| a.result == AttemptResult::Unsat) {
                    BranchClass::PotentiallyUnreachable
                } else {
                    BranchClass::Unknown
                }
            };
            (*b, BranchCoverage { hits: h, class })
        })
        .collect();
    CoverageReport { branches }
}

/// Coverage reached by uniformly random vectors under the same simulation
/// budget. Reset-named inputs are asserted in cycle 0 only.
pub fn random_baseline(design: &InstrumentedDesign, sims: usize, cycles: usize, seed: u64) -> Result<BTreeSet<BranchId>, ExploreError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ports = design.design.input_ports();
    let mut covered = BTreeSet::new();
    for _ in 0..sims {
        let v = random_vector(&ports, cycles, &mut rng);
        let t = run(design, &v).map_err(|source| ExploreError::Sim { vector: v.clone(), source })?;
        covered.extend(t.covered());
    }
    Ok(covered)
}

/// One uniformly random vector; reset-named inputs are high in cycle 0 and
/// low afterwards.
pub fn random_vector<R: Rng>(ports: &[(String, u32)], cycles: usize, rng: &mut R) -> InputVector {
    let cycles = (0..cycles)
        .map(|c| {
            ports
                .iter()
                .map(|(n, w)| {
                    let v = if is_reset_name(n) {
                        u64::from(c == 0) ^ u64::from(n.ends_with("_n"))
                    } else {
                        rng.gen::<u64>() & mask(*w)
                    };
                    (n.clone(), BitVecLiteral::new(*w, v))
                })
                .collect()
        })
        .collect();
    InputVector::new(cycles)
}

#[cfg(test)]
mod tests;
