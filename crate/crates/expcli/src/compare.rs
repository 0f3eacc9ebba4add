//! Differences between two reports of the same kind.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::report::Report;
use crate::{CliError, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValueDelta {
    pub name: String,
    pub a: f64,
    pub b: f64,
    /// `a − b`.
    pub delta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixDelta {
    pub name: String,
    /// Largest `|a_ij − b_ij|` over both parts.
    pub max_abs_delta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub kind: String,
    pub fidelities: Vec<ValueDelta>,
    pub outcomes: Vec<ValueDelta>,
    pub matrices: Vec<MatrixDelta>,
    pub summary: Vec<ValueDelta>,
    /// Names present in only one of the two reports.
    pub unmatched: Vec<String>,
}

fn delta(name: &str, a: f64, b: f64) -> ValueDelta {
    ValueDelta { name: name.to_owned(), a, b, delta: a - b }
}

fn pair<'a, T>(
    a: impl Iterator<Item = (&'a str, T)>,
    b: impl Iterator<Item = (&'a str, T)>,
    unmatched: &mut Vec<String>,
    section: &str,
) -> Vec<(&'a str, T, T)> {
    let mut bm: BTreeMap<&str, T> = b.collect();
    let mut out = Vec::new();
    for (name, x) in a {
        match bm.remove(name) {
            Some(y) => out.push((name, x, y)),
            None => unmatched.push(format!("{section}:{name}")),
        }
    }
    unmatched.extend(bm.keys().map(|k| format!("{section}:{k}")));
    out
}

pub fn compare(a: &Report, b: &Report) -> Result<Comparison> {
    if a.kind != b.kind {
        return Err(CliError::KindMismatch(a.kind.label().into(), b.kind.label().into()));
    }
    let mut unmatched = Vec::new();
    let fidelities = pair(
        a.fidelities.iter().map(|f| (f.outcome.as_str(), f.fidelity)),
        b.fidelities.iter().map(|f| (f.outcome.as_str(), f.fidelity)),
        &mut unmatched,
        "fidelity",
    )
    .into_iter()
    .map(|(n, x, y)| delta(n, x, y))
    .collect();
    let outcomes = pair(
        a.outcomes.iter().map(|o| (o.label.as_str(), o.probability)),
        b.outcomes.iter().map(|o| (o.label.as_str(), o.probability)),
        &mut unmatched,
        "outcome",
    )
    .into_iter()
    .map(|(n, x, y)| delta(n, x, y))
    .collect();
    let summary = pair(
        a.summary.iter().map(|(k, v)| (k.as_str(), *v)),
        b.summary.iter().map(|(k, v)| (k.as_str(), *v)),
        &mut unmatched,
        "summary",
    )
    .into_iter()
    .map(|(n, x, y)| delta(n, x, y))
    .collect();
    let matrices = pair(
        a.matrices.iter().map(|m| (m.name.as_str(), m)),
        b.matrices.iter().map(|m| (m.name.as_str(), m)),
        &mut unmatched,
        "matrix",
    )
    .into_iter()
    .map(|(n, x, y)| {
        let flat = |m: &crate::report::MatrixEntry| -> Vec<f64> {
            m.real.iter().chain(&m.imag).flatten().copied().collect()
        };
        let (fx, fy) = (flat(x), flat(y));
        let max_abs_delta = if fx.len() == fy.len() {
            fx.iter().zip(&fy).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max)
        } else {
            f64::INFINITY
        };
        MatrixDelta { name: n.to_owned(), max_abs_delta }
    })
    .collect();
    Ok(Comparison { kind: a.kind.label().into(), fidelities, outcomes, matrices, summary, unmatched })
}
