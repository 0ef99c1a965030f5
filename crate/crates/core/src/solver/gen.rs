// SPDX-License-Identifier: Apache-2.0

//! Random small constraint sets for cross-checking the solver.

use rand::Rng;

use crate::bits::{BinaryOp, UnaryOp};
use crate::symbolic::{ConstraintSet, SymVar, Term, TermRef};

fn leaf<R: Rng>(rng: &mut R, vars: &[SymVar]) -> TermRef {
    if rng.gen_bool(0.6) {
        Term::var(vars[rng.gen_range(0..vars.len())].clone())
    } else {
        let w = *[1u32, 4, 8].get(rng.gen_range(0..3)).unwrap();
        Term::constant(rng.gen::<u64>(), w)
    }
}

fn value<R: Rng>(rng: &mut R, vars: &[SymVar], depth: u32) -> TermRef {
    if depth == 0 || rng.gen_bool(0.35) {
        return leaf(rng, vars);
    }
    match rng.gen_range(0..4) {
        0 => {
            let op = [UnaryOp::Not, UnaryOp::Neg][rng.gen_range(0..2)];
            Term::unary(op, &value(rng, vars, depth - 1))
        }
        1 => {
            let ops = [BinaryOp::Add, BinaryOp::Sub, BinaryOp::And, BinaryOp::Or, BinaryOp::Xor];
            let op = ops[rng.gen_range(0..ops.len())];
            Term::binary(op, &value(rng, vars, depth - 1), &value(rng, vars, depth - 1))
        }
        2 => {
            let op = [BinaryOp::Shl, BinaryOp::Shr][rng.gen_range(0..2)];
            Term::binary(op, &value(rng, vars, depth - 1), &Term::constant(rng.gen_range(0..10), 4))
        }
        _ => {
            let a = value(rng, vars, depth - 1);
            if a.width >= 2 {
                let lo = rng.gen_range(0..a.width - 1);
                let w = rng.gen_range(1..=a.width - lo);
                Term::extract(&a, lo, w)
            } else {
                a
            }
        }
    }
}

fn predicate<R: Rng>(rng: &mut R, vars: &[SymVar], depth: u32) -> TermRef {
    if depth > 0 && rng.gen_bool(0.2) {
        let op = [BinaryOp::LogAnd, BinaryOp::LogOr][rng.gen_range(0..2)];
        return Term::binary(op, &predicate(rng, vars, depth - 1), &predicate(rng, vars, depth - 1));
    }
    if rng.gen_bool(0.1) {
        return Term::unary(UnaryOp::LogNot, &predicate(rng, vars, depth.saturating_sub(1)));
    }
    let ops = [BinaryOp::Eq, BinaryOp::Ne, BinaryOp::Lt, BinaryOp::Le, BinaryOp::Gt, BinaryOp::Ge];
    let op = ops[rng.gen_range(0..ops.len())];
    let p = Term::binary(op, &value(rng, vars, depth), &value(rng, vars, depth));
    if p.width == 1 {
        p
    } else {
        Term::truth(&p)
    }
}

/// One to four predicates over at most two 8-bit variables named `x_0` and
/// `y_0`.
pub fn random_small_set<R: Rng>(rng: &mut R) -> ConstraintSet {
    let nvars = rng.gen_range(1..=2);
    let vars: Vec<SymVar> = ["x", "y"][..nvars].iter().map(|n| SymVar::new(n, 0, 8)).collect();
    let count = rng.gen_range(1..=4);
    ConstraintSet::from_terms((0..count).map(|_| predicate(rng, &vars, 2)).collect())
}
