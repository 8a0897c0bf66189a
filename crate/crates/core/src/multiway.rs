//! Multiway cut sets `S_a(W)`: the `q×q` matrices of rectangle integrals of
//! `W` over fractional partitions with part masses `a`.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::coupling::northwest_corner_matrix;
use crate::error::{GraphonError, Result};
use crate::graphon::{PartitionSpec, StepGraphon};
use crate::metrics::{dyadic_intervals, hausdorff_distance};

/// Residual at which alternating scaling stops.
pub const SCALING_TOL: f64 = 1e-10;
pub const SCALING_MAX_ITERS: usize = 500;
/// Largest `k!·q!` for which every northwest-corner vertex is listed.
pub const VERTEX_ENUM_LIMIT: usize = 10_000;
const DEDUP_TOL: f64 = 1e-9;
const ENTRY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SetRepr", into = "SetRepr")]
pub struct MultiwayMatrixSet {
    a: Vec<f64>,
    matrices: Vec<Vec<Vec<f64>>>,
    provenance: Vec<PartitionSpec>,
}

#[derive(Serialize, Deserialize)]
struct SetRepr {
    a: Vec<f64>,
    matrices: Vec<Vec<Vec<f64>>>,
    provenance: Vec<PartitionSpec>,
}

impl TryFrom<SetRepr> for MultiwayMatrixSet {
    type Error = GraphonError;

    fn try_from(r: SetRepr) -> Result<Self> {
        MultiwayMatrixSet::new(r.a, r.matrices, r.provenance)
    }
}

impl From<MultiwayMatrixSet> for SetRepr {
    fn from(s: MultiwayMatrixSet) -> Self {
        SetRepr { a: s.a, matrices: s.matrices, provenance: s.provenance }
    }
}

impl MultiwayMatrixSet {
    pub fn new(a: Vec<f64>, matrices: Vec<Vec<Vec<f64>>>, provenance: Vec<PartitionSpec>) -> Result<Self> {
        validate_masses(&a)?;
        let q = a.len();
        if matrices.len() != provenance.len() {
            return Err(GraphonError::DimensionMismatch(format!(
                "{} matrices but {} provenance entries",
                matrices.len(),
                provenance.len()
            )));
        }
        for (n, m) in matrices.iter().enumerate() {
            if m.len() != q || m.iter().any(|r| r.len() != q) {
                return Err(GraphonError::DimensionMismatch(format!("matrix {n} is not {q}×{q}")));
            }
            for l in 0..q {
                for k in 0..q {
                    let v = m[l][k];
                    if !v.is_finite() || v < -ENTRY_TOL || v > a[l] * a[k] + ENTRY_TOL {
                        return Err(GraphonError::InvalidArgument(format!(
                            "entry ({l}, {k}) of matrix {n} is {v}, outside [0, a_l a_m]"
                        )));
                    }
                }
            }
        }
        for (n, p) in provenance.iter().enumerate() {
            if p.num_targets() != q {
                return Err(GraphonError::DimensionMismatch(format!(
                    "provenance {n} has {} parts, expected {q}",
                    p.num_targets()
                )));
            }
        }
        Ok(MultiwayMatrixSet { a, matrices, provenance })
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn matrices(&self) -> &[Vec<Vec<f64>>] {
        &self.matrices
    }

    pub fn provenance(&self) -> &[PartitionSpec] {
        &self.provenance
    }

    pub fn len(&self) -> usize {
        self.matrices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matrices.is_empty()
    }
}

fn validate_masses(a: &[f64]) -> Result<()> {
    if a.is_empty() {
        return Err(GraphonError::InvalidArgument("part masses are empty".into()));
    }
    if let Some(i) = a.iter().position(|v| !v.is_finite() || *v < 0.0) {
        return Err(GraphonError::WeightsNotNormalized {
            index: Some(i),
            detail: format!("part mass {} is negative or not finite", a[i]),
        });
    }
    let s: f64 = a.iter().sum();
    if (s - 1.0).abs() > 1e-12 {
        return Err(GraphonError::WeightsNotNormalized { index: None, detail: format!("part masses sum to {s}") });
    }
    Ok(())
}

/// `M_{ℓm} = Σ_{i,j} R_{iℓ} R_{jm} W_{ij}`.
pub fn multiway_matrix(w: &StepGraphon, r: &PartitionSpec) -> Result<Vec<Vec<f64>>> {
    r.check_source(w.weights()).map_err(|e| match e {
        GraphonError::PartitionMismatch(m) => GraphonError::MarginalMismatch(m),
        other => other,
    })?;
    Ok(r.rect_masses(w.values()))
}

fn l1(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter().flatten().zip(b.iter().flatten()).map(|(x, y)| (x - y).abs()).sum()
}

/// Alternating row and column scaling of a positive matrix onto the
/// marginals `(row, col)`.
fn scale_to_marginals(mut m: Vec<Vec<f64>>, row: &[f64], col: &[f64]) -> Result<Vec<Vec<f64>>> {
    let residual = |m: &[Vec<f64>]| -> f64 {
        let r = m.iter().zip(row).map(|(r, t)| (r.iter().sum::<f64>() - t).abs()).sum::<f64>();
        let c = (0..col.len()).map(|j| (m.iter().map(|r| r[j]).sum::<f64>() - col[j]).abs()).sum::<f64>();
        r + c
    };
    for _ in 0..SCALING_MAX_ITERS {
        for (r, &t) in m.iter_mut().zip(row) {
            let s: f64 = r.iter().sum();
            let f = if s > 0.0 { t / s } else { 0.0 };
            r.iter_mut().for_each(|v| *v *= f);
        }
        for (j, &t) in col.iter().enumerate() {
            let s: f64 = m.iter().map(|r| r[j]).sum();
            let f = if s > 0.0 { t / s } else { 0.0 };
            m.iter_mut().for_each(|r| r[j] *= f);
        }
        if residual(&m) < SCALING_TOL {
            return Ok(m);
        }
    }
    Err(GraphonError::ScalingDiverged { residual: residual(&m) })
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..n).collect();
    fn rec(k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k == cur.len() {
            out.push(cur.clone());
            return;
        }
        for i in k..cur.len() {
            cur.swap(k, i);
            rec(k + 1, cur, out);
            cur.swap(k, i);
        }
    }
    rec(0, &mut cur, &mut out);
    out
}

fn factorial_capped(n: usize, cap: usize) -> usize {
    (1..=n).try_fold(1usize, |acc, x| acc.checked_mul(x).filter(|&v| v <= cap)).unwrap_or(cap + 1)
}

/// Couplings between canonical blocks and parts: all northwest-corner
/// vertices when few enough, the greedy extremes of every coupling entry,
/// the degree-sorted fills and the product coupling.
fn vertex_couplings(c: &StepGraphon, a: &[f64]) -> Result<Vec<Vec<Vec<f64>>>> {
    let (k, q) = (c.num_blocks(), a.len());
    let wts = c.weights();
    let mut out = Vec::new();
    let kf = factorial_capped(k, VERTEX_ENUM_LIMIT);
    let qf = factorial_capped(q, VERTEX_ENUM_LIMIT);
    if kf.saturating_mul(qf) <= VERTEX_ENUM_LIMIT {
        let (rows, cols) = (permutations(k), permutations(q));
        for ro in &rows {
            for co in &cols {
                out.push(northwest_corner_matrix(wts, a, ro, co)?);
            }
        }
    }
    let front = |first: usize, n: usize| -> Vec<usize> {
        std::iter::once(first).chain((0..n).filter(|&x| x != first)).collect()
    };
    let back =
        |last: usize, n: usize| -> Vec<usize> { (0..n).filter(|&x| x != last).chain(std::iter::once(last)).collect() };
    for i in 0..k {
        for l in 0..q {
            out.push(northwest_corner_matrix(wts, a, &front(i, k), &front(l, q))?);
            out.push(northwest_corner_matrix(wts, a, &front(i, k), &back(l, q))?);
        }
    }
    let deg = c.block_degrees();
    let mut by_degree: Vec<usize> = (0..k).collect();
    by_degree.sort_by(|&x, &y| deg[x].total_cmp(&deg[y]).then(x.cmp(&y)));
    let parts: Vec<usize> = (0..q).collect();
    let rev: Vec<usize> = by_degree.iter().rev().copied().collect();
    out.push(northwest_corner_matrix(wts, a, &by_degree, &parts)?);
    out.push(northwest_corner_matrix(wts, a, &rev, &parts)?);
    out.push(wts.iter().map(|&wi| a.iter().map(|&al| wi * al).collect()).collect());
    Ok(out)
}

/// Spreads a canonical-block coupling back over the blocks of `w`.
fn lift(w: &StepGraphon, block_map: &[Option<usize>], cw: &[f64], r: &[Vec<f64>], q: usize) -> Result<PartitionSpec> {
    let assignment = w
        .weights()
        .iter()
        .zip(block_map)
        .map(|(&wi, m)| match m {
            Some(c) if cw[*c] > 0.0 => {
                let total: f64 = r[*c].iter().sum();
                r[*c].iter().map(|v| v * wi / total).collect()
            }
            _ => vec![0.0; q],
        })
        .collect();
    PartitionSpec::new(assignment)
}

fn collect_set(
    w: &StepGraphon,
    a: &[f64],
    couplings: Vec<Vec<Vec<f64>>>,
    block_map: &[Option<usize>],
    canon: &StepGraphon,
) -> Result<MultiwayMatrixSet> {
    let q = a.len();
    let mut matrices: Vec<Vec<Vec<f64>>> = Vec::new();
    let mut provenance = Vec::new();
    for r in couplings {
        let p = PartitionSpec::new(r.clone())?;
        let m: Vec<Vec<f64>> = p
            .rect_masses(canon.values())
            .into_iter()
            .enumerate()
            .map(|(l, row)| row.into_iter().enumerate().map(|(n, v)| v.clamp(0.0, a[l] * a[n])).collect())
            .collect();
        if matrices.iter().any(|x| l1(x, &m) <= DEDUP_TOL) {
            continue;
        }
        matrices.push(m);
        provenance.push(lift(w, block_map, canon.weights(), &r, q)?);
    }
    MultiwayMatrixSet::new(a.to_vec(), matrices, provenance)
}

/// Sampled approximation of `S_a(W)`: `count` interior transport points from
/// seeded positive starts, together with the deterministic vertex family.
pub fn sample_multiway_set(w: &StepGraphon, a: &[f64], count: usize, seed: u64) -> Result<MultiwayMatrixSet> {
    if count == 0 {
        return Err(GraphonError::InvalidArgument("count must be at least 1".into()));
    }
    validate_masses(a)?;
    let cf = w.canonical_form();
    let c = &cf.graphon;
    let mut couplings = vertex_couplings(c, a)?;
    for idx in 0..count {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(idx as u64));
        // wide spread of start entries so the scaled points do not cluster
        let start =
            (0..c.num_blocks()).map(|_| (0..a.len()).map(|_| (-6.0 * rng.gen::<f64>()).exp()).collect()).collect();
        couplings.push(scale_to_marginals(start, c.weights(), a)?);
    }
    collect_set(w, a, couplings, &cf.block_map, c)
}

/// The vertex family alone; it depends on `W` only through its canonical
/// form, so weakly isomorphic step graphons give the same set.
pub fn deterministic_multiway_set(w: &StepGraphon, a: &[f64]) -> Result<MultiwayMatrixSet> {
    validate_masses(a)?;
    let cf = w.canonical_form();
    let couplings = vertex_couplings(&cf.graphon, a)?;
    collect_set(w, a, couplings, &cf.block_map, &cf.graphon)
}

/// Hausdorff distance under the entrywise ℓ¹ norm.
pub fn multiway_hausdorff(su: &MultiwayMatrixSet, sw: &MultiwayMatrixSet) -> Result<f64> {
    if su.a.len() != sw.a.len() {
        return Err(GraphonError::DimensionMismatch(format!("sets have {} and {} parts", su.a.len(), sw.a.len())));
    }
    hausdorff_distance(&su.matrices, &sw.matrices, |x, y| l1(x, y))
}

/// Dyadic intervals at `depth` (indexed 1-based in the order of the weak*
/// signature) whose midpoints fall in each consecutive part of masses `a`,
/// and the largest index used.
pub fn dyadic_part_indices(a: &[f64], depth: u32) -> Result<(Vec<Vec<usize>>, usize)> {
    validate_masses(a)?;
    let all = dyadic_intervals(depth);
    let first = (1usize << depth) - 1;
    let mut bounds = vec![0.0];
    for &m in a {
        bounds.push(bounds.last().unwrap() + m);
    }
    let mut parts = vec![Vec::new(); a.len()];
    let mut r_q = 0;
    for (idx, &(lo, hi)) in all.iter().enumerate().skip(first) {
        let mid = 0.5 * (lo + hi);
        if let Some(l) = (0..a.len()).find(|&l| mid >= bounds[l] && mid < bounds[l + 1]) {
            parts[l].push(idx + 1);
            r_q = r_q.max(idx + 1);
        }
    }
    Ok((parts, r_q))
}
