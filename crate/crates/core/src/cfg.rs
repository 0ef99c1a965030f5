// SPDX-License-Identifier: Apache-2.0

//! Control-flow graphs and branch numbering.
//!
//! Every `if` has two arms and every `case` one arm per item plus a default
//! arm, whether or not the source spells out the `else`/`default`. An arm
//! whose body contains no further decision is a *leaf* and receives a
//! [`BranchId`]. Numbering is a pre-order walk: processes in declaration
//! order, statements in textual order, `if` true arm before false arm, case
//! items in order and then the default.
//!
//! The walk lives in [`walk_module`] and is shared by everything that needs
//! to agree on the numbering (CFG construction, instrumentation, lowering for
//! simulation and trial deletion).

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::bits::BitVecLiteral;
use crate::verilog::printer::expr as show;
use crate::verilog::{AstModule, ExprKind, SourcePos, Stmt, StmtKind};

/// `B_<ordinal>`, ordinals dense from 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BranchId(pub u32);

impl fmt::Display for BranchId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "B_{}", self.0)
    }
}

impl FromStr for BranchId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.strip_prefix("B_")
            .and_then(|n| n.parse::<u32>().ok())
            .filter(|n| *n >= 1)
            .map(BranchId)
            .ok_or_else(|| format!("not a branch id: `{s}`"))
    }
}

impl Serialize for BranchId {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BranchId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EdgeLabel {
    IfTrue,
    IfFalse,
    CaseItem(Vec<BitVecLiteral>),
    CaseDefault,
    /// Unconditional edge from the end of an arm to the join block.
    Fallthrough,
}

impl EdgeLabel {
    pub fn is_branch(&self) -> bool {
        !matches!(self, EdgeLabel::Fallthrough)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum DecisionKind {
    If,
    /// Labels of each explicit item, in order.
    Case { labels: Vec<Vec<BitVecLiteral>> },
}

/// One arm of a decision.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArmInfo {
    pub label: EdgeLabel,
    pub pos: SourcePos,
    pub condition: String,
    /// Present for leaf arms only.
    pub branch: Option<BranchId>,
    /// Every leaf branch at or below this arm.
    pub leaves: Vec<BranchId>,
    /// The arm was absent in the source (implicit `else` or `default`).
    pub implicit: bool,
}

/// An `if` or `case` statement, numbered in walk order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecisionInfo {
    pub id: usize,
    pub process: usize,
    pub pos: SourcePos,
    pub kind: DecisionKind,
    /// Source text of the condition or case subject.
    pub subject: String,
    pub arms: Vec<ArmInfo>,
    /// Enclosing decision and arm, if nested.
    pub parent: Option<(usize, usize)>,
}

impl DecisionInfo {
    /// Index of the arm holding `branch`, directly or below it.
    pub fn arm_containing(&self, branch: BranchId) -> Option<usize> {
        self.arms.iter().position(|a| a.leaves.contains(&branch))
    }
}

/// Position of an arm handed to [`ArmVisitor::arm`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ArmVisit {
    pub process: usize,
    pub decision: usize,
    pub arm: usize,
    pub branch: Option<BranchId>,
}

/// Mutable access to an arm body. `Optional` arms are the `else` and
/// `default` slots, which may be empty.
pub enum ArmSlot<'a> {
    Required(&'a mut Stmt),
    Optional(&'a mut Option<Box<Stmt>>),
}

impl ArmSlot<'_> {
    pub fn stmt(&self) -> Option<&Stmt> {
        match self {
            ArmSlot::Required(s) => Some(s),
            ArmSlot::Optional(o) => o.as_deref(),
        }
    }
}

pub trait ArmVisitor {
    /// Called once per decision before any of its arms.
    fn decision(&mut self, _id: usize, _process: usize, _parent: Option<(usize, usize)>, _stmt: &Stmt) {}
    /// Called for every arm before descending into it. Leaf arms may be
    /// edited freely; non-leaf arms must keep their decisions intact.
    fn arm(&mut self, _visit: ArmVisit, _slot: ArmSlot<'_>) {}
}

struct Walker<'v> {
    visitor: &'v mut dyn ArmVisitor,
    next_decision: usize,
    next_leaf: u32,
    process: usize,
    stack: Vec<(usize, usize)>,
}

/// Visits every decision and arm of `m` in numbering order.
pub fn walk_module(m: &mut AstModule, visitor: &mut dyn ArmVisitor) {
    let mut w = Walker { visitor, next_decision: 0, next_leaf: 1, process: 0, stack: Vec::new() };
    for (i, p) in m.processes.iter_mut().enumerate() {
        w.process = i;
        w.stmt(&mut p.body);
    }
}

fn is_leaf(s: Option<&Stmt>) -> bool {
    s.is_none_or(|s| !s.has_decision())
}

impl Walker<'_> {
    fn arm(&mut self, decision: usize, arm: usize, slot: ArmSlot<'_>) {
        let leaf = is_leaf(slot.stmt());
        let branch = if leaf {
            let b = BranchId(self.next_leaf);
            self.next_leaf += 1;
            Some(b)
        } else {
            None
        };
        let visit = ArmVisit { process: self.process, decision, arm, branch };
        match slot {
            ArmSlot::Required(s) => {
                self.visitor.arm(visit, ArmSlot::Required(s));
                if !leaf {
                    self.stack.push((decision, arm));
                    self.stmt(s);
                    self.stack.pop();
                }
            }
            ArmSlot::Optional(o) => {
                self.visitor.arm(visit, ArmSlot::Optional(o));
                if !leaf {
                    if let Some(s) = o.as_deref_mut() {
                        self.stack.push((decision, arm));
                        self.stmt(s);
                        self.stack.pop();
                    }
                }
            }
        }
    }

    fn stmt(&mut self, s: &mut Stmt) {
        let is_decision = matches!(s.kind, StmtKind::If { .. } | StmtKind::Case { .. });
        if is_decision {
            let id = self.next_decision;
            self.next_decision += 1;
            self.visitor.decision(id, self.process, self.stack.last().copied(), s);
            match &mut s.kind {
                StmtKind::If { then_branch, else_branch, .. } => {
                    self.arm(id, 0, ArmSlot::Required(then_branch));
                    self.arm(id, 1, ArmSlot::Optional(else_branch));
                }
                StmtKind::Case { items, default, .. } => {
                    let n = items.len();
                    for (i, item) in items.iter_mut().enumerate() {
                        self.arm(id, i, ArmSlot::Required(&mut item.body));
                    }
                    self.arm(id, n, ArmSlot::Optional(default));
                }
                _ => unreachable!(),
            }
            return;
        }
        if let StmtKind::Block(stmts) = &mut s.kind {
            for st in stmts {
                self.stmt(st);
            }
        }
    }
}

fn literal_of(e: &crate::verilog::Expr) -> BitVecLiteral {
    match &e.kind {
        ExprKind::Literal { lit, .. } => *lit,
        // Resolution folds every case label to a literal.
        _ => unreachable!("case label not folded"),
    }
}

struct Collect {
    out: Vec<DecisionInfo>,
}

impl ArmVisitor for Collect {
    fn decision(&mut self, id: usize, process: usize, parent: Option<(usize, usize)>, s: &Stmt) {
        let (kind, subject, arms) = match &s.kind {
            StmtKind::If { cond, then_branch, else_branch } => {
                let c = show(cond);
                let arms = vec![
                    arm(EdgeLabel::IfTrue, then_branch.pos, c.clone(), false),
                    arm(
                        EdgeLabel::IfFalse,
                        else_branch.as_ref().map_or(s.pos, |e| e.pos),
                        format!("!({c})"),
                        else_branch.is_none(),
                    ),
                ];
                (DecisionKind::If, c, arms)
            }
            StmtKind::Case { subject, items, default } => {
                let subj = show(subject);
                let labels: Vec<Vec<BitVecLiteral>> =
                    items.iter().map(|i| i.labels.iter().map(literal_of).collect()).collect();
                let mut arms: Vec<ArmInfo> = items
                    .iter()
                    .zip(&labels)
                    .map(|(item, ls)| {
                        let text = item
                            .labels
                            .iter()
                            .map(|l| format!("{subj} == {}", show(l)))
                            .collect::<Vec<_>>()
                            .join(" || ");
                        arm(EdgeLabel::CaseItem(ls.clone()), item.pos, text, false)
                    })
                    .collect();
                let all: Vec<String> = items
                    .iter()
                    .flat_map(|i| i.labels.iter().map(|l| format!("{subj} != {}", show(l))))
                    .collect();
                let text = if all.is_empty() { "default".to_string() } else { all.join(" && ") };
                arms.push(arm(
                    EdgeLabel::CaseDefault,
                    default.as_ref().map_or(s.pos, |d| d.pos),
                    text,
                    default.is_none(),
                ));
                (DecisionKind::Case { labels }, subj, arms)
            }
            _ => unreachable!(),
        };
        debug_assert_eq!(id, self.out.len());
        self.out.push(DecisionInfo { id, process, pos: s.pos, kind, subject, arms, parent });
    }

    fn arm(&mut self, v: ArmVisit, _slot: ArmSlot<'_>) {
        if let Some(b) = v.branch {
            self.out[v.decision].arms[v.arm].branch = Some(b);
            // Propagate the leaf to every enclosing arm.
            let mut cur = Some((v.decision, v.arm));
            while let Some((d, a)) = cur {
                self.out[d].arms[a].leaves.push(b);
                cur = self.out[d].parent;
            }
        }
    }
}

fn arm(label: EdgeLabel, pos: SourcePos, condition: String, implicit: bool) -> ArmInfo {
    ArmInfo { label, pos, condition, branch: None, leaves: Vec::new(), implicit }
}

/// Every decision of `m` in numbering order.
pub fn decisions(m: &AstModule) -> Vec<DecisionInfo> {
    let mut copy = m.clone();
    let mut c = Collect { out: Vec::new() };
    walk_module(&mut copy, &mut c);
    c.out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BranchInfo {
    pub process: usize,
    /// Index into [`Cfg::edges`].
    pub edge: usize,
    pub decision: usize,
    pub arm: usize,
    pub pos: SourcePos,
    pub condition: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BranchMap {
    pub branches: BTreeMap<BranchId, BranchInfo>,
}

impl BranchMap {
    pub fn len(&self) -> usize {
        self.branches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.branches.is_empty()
    }

    pub fn get(&self, b: BranchId) -> Option<&BranchInfo> {
        self.branches.get(&b)
    }

    pub fn ids(&self) -> impl Iterator<Item = BranchId> + '_ {
        self.branches.keys().copied()
    }

    /// `{"B_1":{"process":0,"line":12,"condition":"reset"},...}`
    pub fn to_json(&self) -> serde_json::Value {
        let mut obj = serde_json::Map::new();
        for (b, info) in &self.branches {
            obj.insert(
                b.to_string(),
                serde_json::json!({
                    "process": info.process,
                    "line": info.pos.line,
                    "condition": info.condition,
                }),
            );
        }
        serde_json::Value::Object(obj)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BasicBlock {
    pub process: usize,
    /// Straight-line statements (assignments and displays).
    pub stmts: Vec<Stmt>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CfgEdge {
    pub from: usize,
    pub to: usize,
    pub label: EdgeLabel,
    /// Decision and arm for branch edges.
    pub decision: Option<(usize, usize)>,
    pub branch: Option<BranchId>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cfg {
    pub blocks: Vec<BasicBlock>,
    pub edges: Vec<CfgEdge>,
    /// Entry block per process.
    pub entries: Vec<usize>,
    pub decisions: Vec<DecisionInfo>,
}

impl Cfg {
    /// Edges that select between arms; fall-through edges excluded.
    pub fn branch_edges(&self) -> impl Iterator<Item = &CfgEdge> {
        self.edges.iter().filter(|e| e.label.is_branch())
    }
}

struct Builder<'a> {
    cfg: Cfg,
    decisions: &'a [DecisionInfo],
    next_decision: usize,
    process: usize,
}

impl Builder<'_> {
    fn new_block(&mut self) -> usize {
        self.cfg.blocks.push(BasicBlock { process: self.process, stmts: Vec::new() });
        self.cfg.blocks.len() - 1
    }

    /// Appends `s` starting in block `cur`; returns the block control ends in.
    fn stmt(&mut self, s: &Stmt, cur: usize) -> usize {
        match &s.kind {
            StmtKind::Block(stmts) => stmts.iter().fold(cur, |b, st| self.stmt(st, b)),
            StmtKind::If { then_branch, else_branch, .. } => {
                let d = self.next_decision;
                self.next_decision += 1;
                let join = self.new_block();
                self.arm(d, 0, cur, Some(then_branch), join);
                self.arm(d, 1, cur, else_branch.as_deref(), join);
                join
            }
            StmtKind::Case { items, default, .. } => {
                let d = self.next_decision;
                self.next_decision += 1;
                let join = self.new_block();
                for (i, item) in items.iter().enumerate() {
                    self.arm(d, i, cur, Some(&item.body), join);
                }
                self.arm(d, items.len(), cur, default.as_deref(), join);
                join
            }
            _ => {
                self.cfg.blocks[cur].stmts.push(s.clone());
                cur
            }
        }
    }

    fn arm(&mut self, d: usize, a: usize, from: usize, body: Option<&Stmt>, join: usize) {
        let entry = self.new_block();
        let info = &self.decisions[d].arms[a];
        self.cfg.edges.push(CfgEdge {
            from,
            to: entry,
            label: info.label.clone(),
            decision: Some((d, a)),
            branch: info.branch,
        });
        let end = match body {
            Some(b) => self.stmt(b, entry),
            None => entry,
        };
        self.cfg.edges.push(CfgEdge {
            from: end,
            to: join,
            label: EdgeLabel::Fallthrough,
            decision: None,
            branch: None,
        });
    }
}

/// Builds the per-process CFG and the branch map.
pub fn build_cfg(m: &AstModule) -> (Cfg, BranchMap) {
    let decisions = decisions(m);
    let mut b = Builder { cfg: Cfg::default(), decisions: &decisions, next_decision: 0, process: 0 };
    for (i, p) in m.processes.iter().enumerate() {
        b.process = i;
        let entry = b.new_block();
        b.cfg.entries.push(entry);
        b.stmt(&p.body, entry);
    }
    let mut cfg = b.cfg;
    cfg.decisions = decisions;
    let mut map = BranchMap::default();
    for (idx, e) in cfg.edges.iter().enumerate() {
        if let (Some(branch), Some((d, a))) = (e.branch, e.decision) {
            let dec = &cfg.decisions[d];
            map.branches.insert(
                branch,
                BranchInfo {
                    process: dec.process,
                    edge: idx,
                    decision: d,
                    arm: a,
                    pos: dec.arms[a].pos,
                    condition: dec.arms[a].condition.clone(),
                },
            );
        }
    }
    (cfg, map)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verilog::parse_module;

    const LISTING1_RAW: &str = include_str!("../designs/listing1_raw.v");

    #[test]
    fn listing1_numbering() {
        let m = parse_module(LISTING1_RAW).unwrap();
        let (cfg, map) = build_cfg(&m);
        assert_eq!(map.len(), 7);
        let conds: Vec<&str> = map.branches.values().map(|b| b.condition.as_str()).collect();
        assert_eq!(
            conds,
            vec![
                "reset",
                "in == 8'h00",
                "in == 8'h02",
                "in == 8'hFF",
                "in != 8'h00 && in != 8'h02 && in != 8'hFF",
                "counter == 8'h01",
                "!(counter == 8'h01)",
            ]
        );
        // Three decisions: 2 ifs and one 3-item case.
        assert_eq!(cfg.decisions.len(), 3);
        assert_eq!(cfg.branch_edges().count(), 2 * 2 + (3 + 1));
        // The reset-false edge is the only non-leaf branch edge.
        let non_leaf: Vec<_> = cfg.branch_edges().filter(|e| e.branch.is_none()).collect();
        assert_eq!(non_leaf.len(), 1);
        assert_eq!(non_leaf[0].label, EdgeLabel::IfFalse);
        assert_eq!(cfg.decisions[0].arms[1].leaves.len(), 6);
    }

    #[test]
    fn unconditional_process_has_one_block() {
        let m = parse_module(
            "module m(input wire clk, input wire d, output reg q);\nalways @(posedge clk) q <= d;\nendmodule",
        )
        .unwrap();
        let (cfg, map) = build_cfg(&m);
        assert!(map.is_empty());
        assert_eq!(cfg.blocks.len(), 1);
        assert!(cfg.edges.is_empty());
    }

    #[test]
    fn if_without_else_has_two_branches() {
        let m = parse_module(
            "module m(input wire clk, input wire d, output reg q);\nalways @(posedge clk) if (d) q <= 1'b1;\nendmodule",
        )
        .unwrap();
        let (cfg, map) = build_cfg(&m);
        assert_eq!(map.len(), 2);
        assert_eq!(cfg.branch_edges().count(), 2);
        assert!(cfg.decisions[0].arms[1].implicit);
        let implicit_edge = &cfg.edges[map.get(BranchId(2)).unwrap().edge];
        assert_eq!(implicit_edge.label, EdgeLabel::IfFalse);
        assert!(cfg.blocks[implicit_edge.to].stmts.is_empty());
    }

    #[test]
    fn branch_id_text() {
        assert_eq!(BranchId(3).to_string(), "B_3");
        assert_eq!("B_12".parse::<BranchId>(), Ok(BranchId(12)));
        assert!("B_0".parse::<BranchId>().is_err());
        assert!("C_1".parse::<BranchId>().is_err());
        let json = serde_json::to_string(&BranchId(4)).unwrap();
        assert_eq!(json, "\"B_4\"");
    }

    #[test]
    fn branch_map_json() {
        let m = parse_module(LISTING1_RAW).unwrap();
        let (_, map) = build_cfg(&m);
        let j = map.to_json();
        assert_eq!(j["B_1"]["condition"], "reset");
        assert_eq!(j["B_1"]["process"], 0);
        assert_eq!(j["B_1"]["line"], 12);
    }
}
