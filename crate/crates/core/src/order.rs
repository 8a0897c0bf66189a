//! Probes of the structuredness order: necessary conditions, extremal
//! elements, strictification and sampled envelopes.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{GraphonError, Result};
use crate::graphon::{PartitionSpec, StepGraphon};
use crate::measures::{check_flatter, degree_frequencies, range_frequencies};
use crate::metrics::{hausdorff_distance, rectangle_signature, signature_distance};

/// Tolerance for the density and flatness conditions.
pub const ORDER_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OrderStatus {
    Refuted,
    Consistent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    Density,
    RangeFlatness,
    DegreeFlatness,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub condition: Condition,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderVerdict {
    pub status: OrderStatus,
    pub reasons: Vec<ConditionReport>,
}

impl OrderVerdict {
    pub fn is_consistent(&self) -> bool {
        self.status == OrderStatus::Consistent
    }

    pub fn failed(&self) -> Vec<Condition> {
        self.reasons.iter().filter(|r| !r.passed).map(|r| r.condition).collect()
    }
}

/// Necessary conditions for `U ⪯ W`: equal densities, and range and degree
/// frequencies of `U` at least as flat as those of `W`. A consistent verdict
/// does not prove `U ⪯ W`.
pub fn preceq_necessary(u: &StepGraphon, w: &StepGraphon) -> Result<OrderVerdict> {
    let (du, dw) = (u.edge_density(), w.edge_density());
    let density = ConditionReport {
        condition: Condition::Density,
        passed: (du - dw).abs() <= ORDER_TOL,
        detail: format!("densities {du} and {dw}"),
    };
    let flat = |condition, a, b| -> Result<ConditionReport> {
        let wit = check_flatter(&a, &b, ORDER_TOL)?;
        let detail = match &wit.reason {
            Some(r) => format!("{r} (residual {:e})", wit.residual),
            None => format!("witness residual {:e}", wit.residual),
        };
        Ok(ConditionReport { condition, passed: wit.feasible, detail })
    };
    let range = flat(Condition::RangeFlatness, range_frequencies(u), range_frequencies(w))?;
    let degree = flat(Condition::DegreeFlatness, degree_frequencies(u), degree_frequencies(w))?;
    let reasons = vec![density, range, degree];
    let status = if reasons.iter().all(|r| r.passed) { OrderStatus::Consistent } else { OrderStatus::Refuted };
    Ok(OrderVerdict { status, reasons })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Extremality {
    Minimal,
    Maximal,
    Neither,
    Both,
}

fn positive_values(w: &StepGraphon) -> impl Iterator<Item = f64> + '_ {
    let a = w.weights();
    (0..a.len())
        .flat_map(move |i| (0..a.len()).map(move |j| (i, j)))
        .filter(move |&(i, j)| a[i] > 0.0 && a[j] > 0.0)
        .map(move |(i, j)| w.value(i, j))
}

/// Constants are minimal and 0-1 valued graphons maximal.
pub fn classify_extremal(w: &StepGraphon, tol: f64) -> Extremality {
    let (lo, hi) = positive_values(w).fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(v), h.max(v)));
    let minimal = hi - lo <= tol;
    let maximal = positive_values(w).all(|v| v <= tol || v >= 1.0 - tol);
    match (minimal, maximal) {
        (true, true) => Extremality::Both,
        (true, false) => Extremality::Minimal,
        (false, true) => Extremality::Maximal,
        (false, false) => Extremality::Neither,
    }
}

/// Doubling construction: two half-size copies of `W`, with `+eps` on the
/// diagonal quadrants and `−eps` off them wherever the value lies in
/// `[eps, 1 − eps]`.
pub fn strictify(w: &StepGraphon, eps: f64) -> Result<StepGraphon> {
    if !(eps > 0.0) {
        return Err(GraphonError::InvalidArgument(format!("eps must be positive, got {eps}")));
    }
    let interior = |v: f64| v >= eps && v <= 1.0 - eps;
    if !positive_values(w).any(interior) {
        return Err(GraphonError::NoInteriorValues { eps });
    }
    let k = w.num_blocks();
    let weights: Vec<f64> = w.weights().iter().chain(w.weights()).map(|a| a / 2.0).collect();
    let mut values = vec![vec![0.0; 2 * k]; 2 * k];
    for h in 0..2 {
        for g in 0..2 {
            let sign = if h == g { 1.0 } else { -1.0 };
            for i in 0..k {
                for j in 0..k {
                    let v = w.value(i, j);
                    values[h * k + i][g * k + j] = if interior(v) { (v + sign * eps).clamp(0.0, 1.0) } else { v };
                }
            }
        }
    }
    StepGraphon::new(weights, values)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeSample {
    pub resolution: usize,
    pub depth: u32,
    pub signatures: Vec<Vec<f64>>,
}

/// Signatures of `count` random grid versions, of the interlacings on every
/// grid dividing `N`, and of the dyadic steppings up to `depth`.
pub fn sample_envelope(w: &StepGraphon, n: usize, count: usize, depth: u32, seed: u64) -> Result<EnvelopeSample> {
    if count == 0 {
        return Err(GraphonError::InvalidArgument("count must be at least 1".into()));
    }
    w.grid_counts(n)?;
    let mut signatures = Vec::new();
    for idx in 0..count {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(idx as u64));
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng);
        signatures.push(rectangle_signature(&w.grid_version(n, &perm)?, depth));
    }
    for level in 1..=n / 2 {
        if n.is_multiple_of(2 * level) && w.grid_counts(2 * level).is_ok() {
            signatures.push(rectangle_signature(&w.interlace_version(level)?, depth));
        }
    }
    for d in 0..=depth {
        let p = PartitionSpec::dyadic(w.weights(), d)?;
        signatures.push(rectangle_signature(&w.stepping(&p)?, depth));
    }
    Ok(EnvelopeSample { resolution: n, depth, signatures })
}

/// Canonical form with weights snapped to the `1/N` grid.
fn canonical_on_grid(w: &StepGraphon, n: usize) -> Result<StepGraphon> {
    w.grid_counts(n)?;
    let c = w.canonical_form().graphon;
    let weights = c.weights().iter().map(|&x| (x * n as f64).round() / n as f64).collect();
    StepGraphon::new(weights, c.values().to_vec())
}

/// Hausdorff distance between the sampled envelopes of the canonical forms,
/// under the weighted signature metric. Neither an upper nor a lower bound
/// on the true envelope distance.
pub fn chi_estimate(u: &StepGraphon, w: &StepGraphon, n: usize, count: usize, depth: u32, seed: u64) -> Result<f64> {
    let su = sample_envelope(&canonical_on_grid(u, n)?, n, count, depth, seed)?;
    let sw = sample_envelope(&canonical_on_grid(w, n)?, n, count, depth, seed)?;
    hausdorff_distance(&su.signatures, &sw.signatures, |a, b| signature_distance(a, b, depth))
}
