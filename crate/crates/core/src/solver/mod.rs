// SPDX-License-Identifier: Apache-2.0

//! Bounded bit-vector solver.
//!
//! Equalities against constants are propagated first. Equalities of the
//! form `v == t` then define `v` as a function of the remaining variables,
//! which are enumerated depth-first in ascending (cycle, name) order,
//! smallest value first. Every constraint is checked as soon as all of its
//! variables are known, so most of the space is cut early. Constraints that
//! share no variables are solved as separate components.

mod external;
pub mod gen;
mod smtlib;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use external::{solve_external, ExternalSolver};
pub use smtlib::{emit_smtlib, parse_model, parse_response, SmtResponse};

use crate::bits::{mask, BinaryOp};
use crate::symbolic::{Constraint, ConstraintSet, SymVar, TermKind, TermRef};

pub type Assignment = BTreeMap<SymVar, u64>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SolveResult {
    Sat(Assignment),
    Unsat,
    /// Budget exhausted or the backend gave up.
    Unknown(String),
}

impl SolveResult {
    pub fn is_sat(&self) -> bool {
        matches!(self, SolveResult::Sat(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolveBudget {
    /// Complete assignments tried.
    pub max_evaluations: u64,
    pub time_limit_ms: u64,
}

impl Default for SolveBudget {
    fn default() -> Self {
        SolveBudget { max_evaluations: 1_000_000, time_limit_ms: 2_000 }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SolveError {
    #[error("malformed constraint: {0}")]
    Malformed(String),
    #[error("external solver: {0}")]
    External(String),
}

/// Checks every constraint is a well-typed 1-bit predicate.
pub fn check_well_formed(cs: &ConstraintSet) -> Result<(), SolveError> {
    for c in &cs.constraints {
        c.term.well_typed().map_err(SolveError::Malformed)?;
        if c.term.width != 1 {
            return Err(SolveError::Malformed(format!("constraint `{c}` has width {}, expected 1", c.term.width)));
        }
    }
    Ok(())
}

/// True when `a` satisfies every constraint; unbound variables fail.
pub fn satisfies(cs: &ConstraintSet, a: &Assignment) -> bool {
    let env = |v: &SymVar| a.get(v).copied();
    cs.constraints.iter().all(|c| c.holds(&env) == Some(true))
}

fn as_definition(t: &TermRef) -> Option<(&SymVar, &TermRef)> {
    if let TermKind::Binary(BinaryOp::Eq, a, b) = &t.kind {
        // Zero-extension makes `v == t` force `v` to `t`'s value, and
        // rules out values of `t` that do not fit `v`.
        if let Some(v) = a.as_var() {
            return Some((v, b));
        }
        if let Some(v) = b.as_var() {
            return Some((v, a));
        }
    }
    None
}

/// Groups constraints that (transitively) share variables, ordered by
/// first appearance and keeping the original order inside each group.
fn components(cs: &ConstraintSet) -> Vec<Vec<Constraint>> {
    let n = cs.constraints.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn root(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    let mut owner: HashMap<SymVar, usize> = HashMap::new();
    for (ci, c) in cs.constraints.iter().enumerate() {
        for v in c.term.vars() {
            match owner.get(&v) {
                Some(&o) => {
                    let (a, b) = (root(&mut parent, o), root(&mut parent, ci));
                    parent[a.max(b)] = a.min(b);
                }
                None => {
                    owner.insert(v, ci);
                }
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<Constraint>> = BTreeMap::new();
    for (ci, c) in cs.constraints.iter().enumerate() {
        let r = root(&mut parent, ci);
        groups.entry(r).or_default().push(c.clone());
    }
    groups.into_values().collect()
}

/// Built-in solver.
pub fn solve(cs: &ConstraintSet, budget: SolveBudget) -> Result<SolveResult, SolveError> {
    check_well_formed(cs)?;
    let start = Instant::now();
    let mut leaves = 0u64;
    let mut all = Assignment::new();
    let mut unknown = None;
    for group in components(cs) {
        let sub = ConstraintSet::new(group);
        let remaining = SolveBudget {
            max_evaluations: budget.max_evaluations.saturating_sub(leaves),
            time_limit_ms: budget.time_limit_ms,
        };
        let (r, used) = solve_component(&sub, remaining, budget, start);
        leaves += used;
        match r {
            SolveResult::Sat(a) => all.extend(a),
            SolveResult::Unsat => return Ok(SolveResult::Unsat),
            SolveResult::Unknown(why) => {
                unknown.get_or_insert(why);
            }
        }
    }
    if let Some(why) = unknown {
        return Ok(SolveResult::Unknown(why));
    }
    if !satisfies(cs, &all) {
        return Ok(SolveResult::Unknown("witness failed re-check".into()));
    }
    Ok(SolveResult::Sat(all))
}

/// Solves one component; returns the result and the leaf trials spent.
fn solve_component(cs: &ConstraintSet, budget: SolveBudget, total: SolveBudget, start: Instant) -> (SolveResult, u64) {
    let limit = Duration::from_millis(total.time_limit_ms);
    let vars: Vec<SymVar> = cs.vars().into_iter().collect();
    let idx: HashMap<&SymVar, usize> = vars.iter().enumerate().map(|(i, v)| (v, i)).collect();
    let n = vars.len();
    let cvars: Vec<Vec<usize>> =
        cs.constraints.iter().map(|c| c.term.vars().iter().map(|v| idx[v]).collect()).collect();

    // Forced bindings.
    let mut bound: Vec<Option<u64>> = vec![None; n];
    loop {
        let mut changed = false;
        for c in &cs.constraints {
            let Some((v, t)) = as_definition(&c.term) else { continue };
            let i = idx[v];
            if bound[i].is_some() {
                continue;
            }
            let env = |x: &SymVar| bound[idx[x]];
            if let Some(val) = t.eval(&env) {
                // A value wider than the variable cannot be equal to it.
                if val & !mask(v.width) != 0 {
                    return (SolveResult::Unsat, 0);
                }
                bound[i] = Some(val);
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }

    // Definitions, kept acyclic by only allowing already-classified deps to
    // be free or earlier definitions.
    let mut defined: Vec<Option<(usize, &TermRef)>> = vec![None; n];
    let mut def_order = Vec::new();
    for (ci, c) in cs.constraints.iter().enumerate() {
        let Some((v, t)) = as_definition(&c.term) else { continue };
        let i = idx[v];
        if bound[i].is_some() || defined[i].is_some() || t.mentions(v) {
            continue;
        }
        let deps: Vec<usize> = cvars[ci].iter().copied().filter(|&j| j != i).collect();
        if deps.iter().any(|&j| depends_on(&defined, &cvars, j, i)) {
            continue;
        }
        defined[i] = Some((ci, t));
        def_order.push(i);
    }
    let free: Vec<usize> = (0..n).filter(|&i| bound[i].is_none() && defined[i].is_none()).collect();
    let free_pos: HashMap<usize, usize> = free.iter().enumerate().map(|(p, &i)| (i, p + 1)).collect();

    // Level = DFS depth at which a variable becomes known.
    let mut level = vec![0usize; n];
    for &i in &free {
        level[i] = free_pos[&i];
    }
    let topo = topo_sort(&def_order, &defined, &cvars);
    for &i in &topo {
        let (ci, _) = defined[i].unwrap();
        level[i] = cvars[ci].iter().filter(|&&j| j != i).map(|&j| level[j]).max().unwrap_or(0);
    }
    let mut defs_at: Vec<Vec<usize>> = vec![Vec::new(); free.len() + 1];
    for &i in &topo {
        defs_at[level[i]].push(i);
    }
    let mut checks_at: Vec<Vec<usize>> = vec![Vec::new(); free.len() + 1];
    for (ci, vs) in cvars.iter().enumerate() {
        let l = vs.iter().map(|&j| level[j]).max().unwrap_or(0);
        checks_at[l].push(ci);
    }

    let mut s = Search {
        cs,
        vars: &vars,
        idx: &idx,
        free: &free,
        defined: &defined,
        defs_at: &defs_at,
        checks_at: &checks_at,
        values: bound.clone(),
        leaves: 0,
        nodes: 0,
        budget,
        total,
        start,
        limit,
        stop: None,
    };
    if !s.settle(0) {
        return (SolveResult::Unsat, 0);
    }
    if s.dfs(0) {
        let a: Assignment = vars.iter().cloned().zip(s.values.iter().map(|v| v.unwrap_or(0))).collect();
        return (SolveResult::Sat(a), s.leaves);
    }
    let r = match s.stop.take() {
        Some(reason) => SolveResult::Unknown(reason),
        None => SolveResult::Unsat,
    };
    (r, s.leaves)
}

fn depends_on(defined: &[Option<(usize, &TermRef)>], cvars: &[Vec<usize>], j: usize, target: usize) -> bool {
    let mut stack = vec![j];
    let mut seen = BTreeSet::new();
    while let Some(k) = stack.pop() {
        if k == target {
            return true;
        }
        if !seen.insert(k) {
            continue;
        }
        if let Some((ci, _)) = defined[k] {
            stack.extend(cvars[ci].iter().copied().filter(|&x| x != k));
        }
    }
    false
}

fn topo_sort(order: &[usize], defined: &[Option<(usize, &TermRef)>], cvars: &[Vec<usize>]) -> Vec<usize> {
    let set: BTreeSet<usize> = order.iter().copied().collect();
    let mut out = Vec::new();
    let mut done = BTreeSet::new();
    fn visit(
        i: usize,
        set: &BTreeSet<usize>,
        defined: &[Option<(usize, &TermRef)>],
        cvars: &[Vec<usize>],
        done: &mut BTreeSet<usize>,
        out: &mut Vec<usize>,
    ) {
        if !done.insert(i) {
            return;
        }
        let (ci, _) = defined[i].unwrap();
        for &j in &cvars[ci] {
            if j != i && set.contains(&j) {
                visit(j, set, defined, cvars, done, out);
            }
        }
        out.push(i);
    }
    for &i in order {
        visit(i, &set, defined, cvars, &mut done, &mut out);
    }
    out
}

struct Search<'a> {
    cs: &'a ConstraintSet,
    vars: &'a [SymVar],
    idx: &'a HashMap<&'a SymVar, usize>,
    free: &'a [usize],
    defined: &'a [Option<(usize, &'a TermRef)>],
    defs_at: &'a [Vec<usize>],
    checks_at: &'a [Vec<usize>],
    values: Vec<Option<u64>>,
    leaves: u64,
    nodes: u64,
    budget: SolveBudget,
    total: SolveBudget,
    start: Instant,
    limit: Duration,
    stop: Option<String>,
}

impl Search<'_> {
    /// Computes definitions at `depth` and checks constraints that just
    /// became fully known.
    fn settle(&mut self, depth: usize) -> bool {
        for &i in &self.defs_at[depth] {
            let (_, t) = self.defined[i].unwrap();
            let values = &self.values;
            let idx = self.idx;
            let val = t.eval(&|x: &SymVar| values[idx[x]]).expect("definition deps known");
            if val & !mask(self.vars[i].width) != 0 {
                return false;
            }
            self.values[i] = Some(val);
        }
        let values = &self.values;
        let idx = self.idx;
        let env = |x: &SymVar| values[idx[x]];
        self.checks_at[depth].iter().all(|&ci| self.cs.constraints[ci].holds(&env) == Some(true))
    }

    fn clear(&mut self, depth: usize) {
        for &i in &self.defs_at[depth] {
            self.values[i] = None;
        }
    }

    fn dfs(&mut self, depth: usize) -> bool {
        if depth == self.free.len() {
            return true;
        }
        let i = self.free[depth];
        let max = mask(self.vars[i].width);
        let leaf = depth + 1 == self.free.len();
        let mut v: u64 = 0;
        loop {
            self.nodes += 1;
            if self.nodes.is_multiple_of(1024) && self.start.elapsed() > self.limit {
                self.stop = Some(format!("time limit of {} ms reached", self.total.time_limit_ms));
                return false;
            }
            if leaf {
                if self.leaves >= self.budget.max_evaluations {
                    self.stop = Some(format!("evaluation budget of {} exhausted", self.total.max_evaluations));
                    return false;
                }
                self.leaves += 1;
            }
            self.values[i] = Some(v);
            if self.settle(depth + 1) && self.dfs(depth + 1) {
                return true;
            }
            self.clear(depth + 1);
            if self.stop.is_some() {
                self.values[i] = None;
                return false;
            }
            if v == max {
                break;
            }
            v += 1;
        }
        self.values[i] = None;
        false
    }
}

/// Tries every assignment; for tests and tiny sets only.
pub fn brute_force(cs: &ConstraintSet) -> SolveResult {
    let vars: Vec<SymVar> = cs.vars().into_iter().collect();
    let total_bits: u32 = vars.iter().map(|v| v.width).sum();
    assert!(total_bits <= 24, "brute force over {total_bits} bits");
    for code in 0u64..(1u64 << total_bits) {
        let mut a = Assignment::new();
        let mut rest = code;
        // Last variable varies fastest, matching the solver's order.
        for v in vars.iter().rev() {
            a.insert(v.clone(), rest & mask(v.width));
            rest >>= v.width;
        }
        if satisfies(cs, &a) {
            return SolveResult::Sat(a);
        }
    }
    SolveResult::Unsat
}
