// SPDX-License-Identifier: Apache-2.0

//! pass@k and false-positive rate, computed exactly.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PassAtKInput {
    /// Samples drawn.
    pub n: u64,
    /// Correct samples among them.
    pub c: u64,
    pub k: u64,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MetricsError {
    #[error("invalid pass@k input n={n} c={c} k={k}: need 0 <= c <= n and 1 <= k <= n")]
    PassAtK { n: u64, c: u64, k: u64 },
    #[error("pass@k over zero problems")]
    NoProblems,
    #[error("invalid FPR input: correct={correct} exceeds passed={passed}")]
    Fpr { passed: u64, correct: u64 },
    #[error("FPR undefined (no passing designs)")]
    NoPassing,
}

/// C(n, k) as a big integer; zero when k > n.
pub fn binomial(n: u64, k: u64) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

/// `1 - C(n-c, k) / C(n, k)` for one problem.
pub fn pass_at_k_single(p: PassAtKInput) -> Result<BigRational, MetricsError> {
    let PassAtKInput { n, c, k } = p;
    if c > n || k == 0 || k > n {
        return Err(MetricsError::PassAtK { n, c, k });
    }
    let miss = BigRational::new(binomial(n - c, k), binomial(n, k));
    Ok(BigRational::one() - miss)
}

/// Mean pass@k over problems, exact.
pub fn pass_at_k(problems: &[PassAtKInput]) -> Result<BigRational, MetricsError> {
    if problems.is_empty() {
        return Err(MetricsError::NoProblems);
    }
    let mut sum = BigRational::zero();
    for p in problems {
        sum += pass_at_k_single(*p)?;
    }
    Ok(sum / BigRational::from_integer(BigInt::from(problems.len())))
}

/// `1 - correct / passed`.
pub fn fpr(passed: u64, correct: u64) -> Result<BigRational, MetricsError> {
    if passed == 0 {
        return Err(MetricsError::NoPassing);
    }
    if correct > passed {
        return Err(MetricsError::Fpr { passed, correct });
    }
    Ok(BigRational::one() - BigRational::new(BigInt::from(correct), BigInt::from(passed)))
}

pub fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// One results row: `problem,n,c`, optionally with `passed,correct`
/// counts for the false-positive rate.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResultRow {
    pub problem: String,
    pub n: u64,
    pub c: u64,
    #[serde(default)]
    pub passed: Option<u64>,
    #[serde(default)]
    pub correct: Option<u64>,
}

/// `{"pass@1":..,"pass@5":..,"fpr":..}`. Values of k larger than some
/// row's `n` are an error. `fpr` is present when any row carries counts.
pub fn summary(rows: &[ResultRow], ks: &[u64]) -> Result<serde_json::Value, MetricsError> {
    let mut out = serde_json::Map::new();
    for &k in ks {
        let problems: Vec<PassAtKInput> = rows.iter().map(|r| PassAtKInput { n: r.n, c: r.c, k }).collect();
        out.insert(format!("pass@{k}"), serde_json::json!(to_f64(&pass_at_k(&problems)?)));
    }
    let counted: Vec<&ResultRow> = rows.iter().filter(|r| r.passed.is_some()).collect();
    if !counted.is_empty() {
        let passed: u64 = counted.iter().map(|r| r.passed.unwrap_or(0)).sum();
        let correct: u64 = counted.iter().map(|r| r.correct.unwrap_or(0)).sum();
        out.insert("fpr".into(), serde_json::json!(to_f64(&fpr(passed, correct)?)));
    }
    Ok(serde_json::Value::Object(out))
}
