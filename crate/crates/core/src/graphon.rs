use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::coupling::{validate_permutation, Coupling, MARGINAL_TOL};
use crate::error::{GraphonError, Result};

/// Tolerance on block weights summing to one.
pub const WEIGHT_TOL: f64 = 1e-12;

fn validate_weights(weights: &[f64]) -> Result<()> {
    if weights.is_empty() {
        return Err(GraphonError::WeightsNotNormalized { index: None, detail: "no blocks".into() });
    }
    for (i, &w) in weights.iter().enumerate() {
        if !w.is_finite() || w < 0.0 {
            return Err(GraphonError::WeightsNotNormalized {
                index: Some(i),
                detail: format!("weight {w} at index {i} is negative or not finite"),
            });
        }
    }
    let sum: f64 = weights.iter().sum();
    if (sum - 1.0).abs() > WEIGHT_TOL {
        return Err(GraphonError::WeightsNotNormalized { index: None, detail: format!("weights sum to {sum}") });
    }
    Ok(())
}

fn validate_matrix(values: &[Vec<f64>], k: usize, lo: f64, hi: f64) -> Result<()> {
    if values.len() != k {
        return Err(GraphonError::DimensionMismatch(format!("{} value rows for {k} blocks", values.len())));
    }
    for (i, row) in values.iter().enumerate() {
        if row.len() != k {
            return Err(GraphonError::DimensionMismatch(format!(
                "value row {i} has {} entries, expected {k}",
                row.len()
            )));
        }
        for (j, &v) in row.iter().enumerate() {
            if !v.is_finite() || v < lo || v > hi {
                return Err(GraphonError::ValueOutOfRange { i, j, value: v });
            }
        }
    }
    for i in 0..k {
        for j in i + 1..k {
            if values[i][j] != values[j][i] {
                return Err(GraphonError::AsymmetricValues { i, j });
            }
        }
    }
    Ok(())
}

fn cumulative(weights: &[f64]) -> Vec<f64> {
    let mut b = Vec::with_capacity(weights.len() + 1);
    let mut acc = 0.0;
    b.push(0.0);
    for &w in weights {
        acc += w;
        b.push(acc);
    }
    if let Some(last) = b.last_mut() {
        *last = 1.0;
    }
    b
}

/// Measure of `[a0, a1] ∩ [b0, b1]`.
pub(crate) fn overlap(a0: f64, a1: f64, b0: f64, b1: f64) -> f64 {
    (a1.min(b1) - a0.max(b0)).max(0.0)
}

/// Symmetric step kernel with values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GraphonRepr", into = "GraphonRepr")]
pub struct StepGraphon {
    weights: Vec<f64>,
    values: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct GraphonRepr {
    weights: Vec<f64>,
    values: Vec<Vec<f64>>,
}

impl TryFrom<GraphonRepr> for StepGraphon {
    type Error = GraphonError;

    fn try_from(r: GraphonRepr) -> Result<Self> {
        StepGraphon::new(r.weights, r.values)
    }
}

impl From<StepGraphon> for GraphonRepr {
    fn from(g: StepGraphon) -> Self {
        GraphonRepr { weights: g.weights, values: g.values }
    }
}

/// Canonical representative of a step graphon up to block permutation and
/// splitting of twin blocks.
#[derive(Debug, Clone)]
pub struct CanonicalForm {
    pub graphon: StepGraphon,
    /// Canonical block of each original block; `None` for null blocks.
    pub block_map: Vec<Option<usize>>,
}

impl StepGraphon {
    pub fn new(weights: Vec<f64>, values: Vec<Vec<f64>>) -> Result<Self> {
        validate_weights(&weights)?;
        validate_matrix(&values, weights.len(), 0.0, 1.0)?;
        Ok(StepGraphon { weights, values })
    }

    pub fn constant(c: f64) -> Result<Self> {
        StepGraphon::new(vec![1.0], vec![vec![c]])
    }

    /// Graphon on `k` blocks of mass `1/k`.
    pub fn uniform(values: Vec<Vec<f64>>) -> Result<Self> {
        let k = values.len();
        StepGraphon::new(vec![1.0 / k as f64; k], values)
    }

    /// Complete balanced bipartite graphon.
    pub fn bipartite() -> Self {
        StepGraphon { weights: vec![0.5, 0.5], values: vec![vec![0.0, 1.0], vec![1.0, 0.0]] }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[i][j]
    }

    pub fn num_blocks(&self) -> usize {
        self.weights.len()
    }

    /// Cumulative block boundaries `0 = b_0 ≤ … ≤ b_k = 1`.
    pub fn boundaries(&self) -> Vec<f64> {
        cumulative(&self.weights)
    }

    /// Block containing `x`, skipping null blocks.
    pub fn block_at(&self, x: f64) -> usize {
        let b = self.boundaries();
        let mut last = 0;
        for i in 0..self.weights.len() {
            if self.weights[i] > 0.0 {
                last = i;
                if x < b[i + 1] {
                    return i;
                }
            }
        }
        last
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        self.values[self.block_at(x)][self.block_at(y)]
    }

    pub fn edge_density(&self) -> f64 {
        self.int_f(|x| x)
    }

    /// `Σ_{i,j} a_i a_j f(W_ij)`.
    pub fn int_f<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        let mut total = 0.0;
        for (i, &a) in self.weights.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            for (j, &b) in self.weights.iter().enumerate() {
                if b > 0.0 {
                    total += a * b * f(self.values[i][j]);
                }
            }
        }
        total
    }

    /// Degree of every block, `Σ_j a_j W_ij`.
    pub fn block_degrees(&self) -> Vec<f64> {
        self.values
            .iter()
            .map(|row| row.iter().zip(&self.weights).map(|(v, a)| v * a).sum::<f64>().clamp(0.0, 1.0))
            .collect()
    }

    pub fn degree_function(&self) -> StepFunction1D {
        let b = self.boundaries();
        let deg = self.block_degrees();
        let mut breakpoints = vec![0.0];
        let mut values = Vec::new();
        for i in 0..self.weights.len() {
            if self.weights[i] > 0.0 && b[i + 1] > *breakpoints.last().unwrap() {
                breakpoints.push(b[i + 1]);
                values.push(deg[i]);
            }
        }
        *breakpoints.last_mut().unwrap() = 1.0;
        StepFunction1D { breakpoints, values }
    }

    /// Measure of each block inside `[lo, hi]`.
    pub fn overlaps(&self, lo: f64, hi: f64) -> Vec<f64> {
        let b = self.boundaries();
        (0..self.weights.len())
            .map(|i| if self.weights[i] > 0.0 { overlap(b[i], b[i + 1], lo, hi) } else { 0.0 })
            .collect()
    }

    /// Exact `∫_{[x0,x1]×[y0,y1]} W`.
    pub fn rect_integral(&self, x: (f64, f64), y: (f64, f64)) -> f64 {
        let ox = self.overlaps(x.0, x.1);
        let oy = self.overlaps(y.0, y.1);
        bilinear(&ox, &self.values, &oy)
    }

    /// Blockwise averaging over the target parts of `p`.
    pub fn stepping(&self, p: &PartitionSpec) -> Result<StepGraphon> {
        p.check_source(&self.weights)?;
        let b = p.target_masses();
        let m = p.rect_masses(&self.values);
        let q = b.len();
        let mut values = vec![vec![0.0; q]; q];
        for l in 0..q {
            for n in l..q {
                let denom = b[l] * b[n];
                let v = if denom > 0.0 { (m[l][n] / denom).clamp(0.0, 1.0) } else { 0.0 };
                values[l][n] = v;
                values[n][l] = v;
            }
        }
        StepGraphon::new(normalize(b), values)
    }

    /// Number of `1/n` cells held by each block.
    pub fn grid_counts(&self, n: usize) -> Result<Vec<usize>> {
        if n == 0 {
            return Err(GraphonError::ResolutionIncompatible("resolution must be positive".into()));
        }
        let mut counts = Vec::with_capacity(self.weights.len());
        for (i, &w) in self.weights.iter().enumerate() {
            let m = (w * n as f64).round();
            if (w - m / n as f64).abs() > WEIGHT_TOL {
                return Err(GraphonError::ResolutionIncompatible(format!(
                    "weight {w} of block {i} is not a multiple of 1/{n}"
                )));
            }
            counts.push(m as usize);
        }
        if counts.iter().sum::<usize>() != n {
            return Err(GraphonError::ResolutionIncompatible(format!("cell counts do not add up to {n}")));
        }
        Ok(counts)
    }

    /// Block index of each of the `n` equal cells.
    pub fn grid_cells(&self, n: usize) -> Result<Vec<usize>> {
        let counts = self.grid_counts(n)?;
        Ok(counts.iter().enumerate().flat_map(|(i, &c)| std::iter::repeat_n(i, c)).collect())
    }

    /// Refinement to `n` equal cells, permuted so that cell `c` carries the
    /// content of cell `perm[c]`.
    pub fn grid_version(&self, n: usize, perm: &[usize]) -> Result<StepGraphon> {
        let cells = self.grid_cells(n)?;
        validate_permutation(perm, n)?;
        let values = (0..n).map(|c| (0..n).map(|d| self.values[cells[perm[c]]][cells[perm[d]]]).collect()).collect();
        Ok(StepGraphon { weights: vec![1.0 / n as f64; n], values })
    }

    pub fn refine_to_grid(&self, n: usize) -> Result<StepGraphon> {
        let id: Vec<usize> = (0..n).collect();
        self.grid_version(n, &id)
    }

    /// Version under the interlacing map on the `2n`-cell grid: the cells of
    /// `[0, ½)` go to the even slots and those of `[½, 1)` to the odd slots.
    pub fn interlace_version(&self, n: usize) -> Result<StepGraphon> {
        if n == 0 {
            return Err(GraphonError::ResolutionIncompatible("interlacing level must be positive".into()));
        }
        let cells = 2 * n;
        let mut perm = vec![0; cells];
        for m in 0..cells {
            let target = if m < n { 2 * m } else { 2 * (m - n) + 1 };
            perm[target] = m;
        }
        self.grid_version(cells, &perm)
    }

    /// Cuts the blocks along the ordered parts of `j` and stacks the pieces
    /// left to right, part by part.
    pub fn reorder_by_ordered_partition(&self, j: &PartitionSpec) -> Result<StepGraphon> {
        j.check_source(&self.weights)?;
        let r = j.assignment();
        let mut pieces = Vec::new();
        for l in 0..j.num_targets() {
            for (i, row) in r.iter().enumerate() {
                if row[l] > 0.0 {
                    pieces.push((i, row[l]));
                }
            }
        }
        let weights = normalize(pieces.iter().map(|p| p.1).collect());
        let values = pieces.iter().map(|&(i, _)| pieces.iter().map(|&(k, _)| self.values[i][k]).collect()).collect();
        StepGraphon::new(weights, values)
    }

    /// Removes null blocks, returning the kept original indices.
    pub fn drop_null_blocks(&self) -> (StepGraphon, Vec<usize>) {
        let kept: Vec<usize> = (0..self.weights.len()).filter(|&i| self.weights[i] > 0.0).collect();
        let weights = normalize(kept.iter().map(|&i| self.weights[i]).collect());
        let values = kept.iter().map(|&i| kept.iter().map(|&j| self.values[i][j]).collect()).collect();
        (StepGraphon { weights, values }, kept)
    }

    /// Merges blocks with identical rows, returning the class of every block.
    pub(crate) fn merge_twins(&self) -> (StepGraphon, Vec<usize>) {
        let k = self.num_blocks();
        let mut class_of = vec![usize::MAX; k];
        let mut reps: Vec<usize> = Vec::new();
        let mut merged_w: Vec<f64> = Vec::new();
        for i in 0..k {
            match reps.iter().position(|&r| self.values[r] == self.values[i]) {
                Some(c) => {
                    class_of[i] = c;
                    merged_w[c] += self.weights[i];
                }
                None => {
                    class_of[i] = reps.len();
                    reps.push(i);
                    merged_w.push(self.weights[i]);
                }
            }
        }
        let values = reps.iter().map(|&r| reps.iter().map(|&s| self.values[r][s]).collect()).collect();
        let merged = StepGraphon { weights: normalize(merged_w), values };
        (merged, class_of)
    }

    /// Merges twin blocks and sorts blocks by a permutation-invariant key, so
    /// that all grid versions of a graphon share one representative.
    pub fn canonical_form(&self) -> CanonicalForm {
        let (g, kept) = self.drop_null_blocks();
        let (merged, class_of) = g.merge_twins();
        let keys: Vec<BlockKey> = (0..merged.num_blocks()).map(|c| merged.block_key(c)).collect();
        let mut order: Vec<usize> = (0..merged.num_blocks()).collect();
        order.sort_by(|&a, &b| keys[a].cmp(&keys[b]).then(a.cmp(&b)));
        let mut rank = vec![0; order.len()];
        for (pos, &c) in order.iter().enumerate() {
            rank[c] = pos;
        }
        let graphon = StepGraphon {
            weights: order.iter().map(|&c| merged.weights[c]).collect(),
            values: order.iter().map(|&a| order.iter().map(|&b| merged.values[a][b]).collect()).collect(),
        };
        let mut block_map = vec![None; self.num_blocks()];
        for (pos, &orig) in kept.iter().enumerate() {
            block_map[orig] = Some(rank[class_of[pos]]);
        }
        CanonicalForm { graphon, block_map }
    }

    fn block_key(&self, c: usize) -> BlockKey {
        let mut row: BTreeMap<i64, f64> = BTreeMap::new();
        for (j, &v) in self.values[c].iter().enumerate() {
            *row.entry(quantize(v)).or_insert(0.0) += self.weights[j];
        }
        let deg: f64 = self.values[c].iter().zip(&self.weights).map(|(v, a)| v * a).sum();
        BlockKey {
            weight: quantize(self.weights[c]),
            degree: quantize(deg),
            row: row.into_iter().map(|(v, w)| (v, quantize(w))).collect(),
        }
    }

    pub(crate) fn total_cmp(&self, other: &StepGraphon) -> Ordering {
        let a = self.weights.iter().chain(self.values.iter().flatten());
        let b = other.weights.iter().chain(other.values.iter().flatten());
        self.num_blocks()
            .cmp(&other.num_blocks())
            .then_with(|| a.zip(b).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(Ordering::Equal))
    }
}

#[derive(PartialEq, Eq, PartialOrd, Ord)]
struct BlockKey {
    weight: i64,
    degree: i64,
    row: Vec<(i64, i64)>,
}

fn quantize(x: f64) -> i64 {
    (x * 1e9).round() as i64
}

/// Rescales masses that sum to one up to rounding so they do so within the
/// construction tolerance.
pub(crate) fn normalize(mut w: Vec<f64>) -> Vec<f64> {
    let s: f64 = w.iter().sum();
    if s > 0.0 && (s - 1.0).abs() > 1e-15 && (s - 1.0).abs() < 1e-6 {
        for x in &mut w {
            *x /= s;
        }
    }
    w
}

pub(crate) fn bilinear(x: &[f64], m: &[Vec<f64>], y: &[f64]) -> f64 {
    let mut total = 0.0;
    for (i, &xi) in x.iter().enumerate() {
        if xi == 0.0 {
            continue;
        }
        let row: f64 = m[i].iter().zip(y).map(|(v, yj)| v * yj).sum();
        total += xi * row;
    }
    total
}

/// Symmetric step kernel with values in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "KernelRepr", into = "KernelRepr")]
pub struct SignedStepKernel {
    weights: Vec<f64>,
    values: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct KernelRepr {
    weights: Vec<f64>,
    values: Vec<Vec<f64>>,
    #[serde(default = "signed_default")]
    signed: bool,
}

fn signed_default() -> bool {
    true
}

impl TryFrom<KernelRepr> for SignedStepKernel {
    type Error = GraphonError;

    fn try_from(r: KernelRepr) -> Result<Self> {
        SignedStepKernel::new(r.weights, r.values)
    }
}

impl From<SignedStepKernel> for KernelRepr {
    fn from(k: SignedStepKernel) -> Self {
        KernelRepr { weights: k.weights, values: k.values, signed: true }
    }
}

impl SignedStepKernel {
    pub fn new(weights: Vec<f64>, values: Vec<Vec<f64>>) -> Result<Self> {
        validate_weights(&weights)?;
        validate_matrix(&values, weights.len(), -1.0, 1.0)?;
        Ok(SignedStepKernel { weights, values })
    }

    /// `U − W` for graphons on the same blocks.
    pub fn difference(u: &StepGraphon, w: &StepGraphon) -> Result<Self> {
        if u.num_blocks() != w.num_blocks() {
            return Err(GraphonError::DimensionMismatch(format!(
                "{} blocks against {}",
                u.num_blocks(),
                w.num_blocks()
            )));
        }
        if u.weights.iter().zip(&w.weights).any(|(a, b)| (a - b).abs() > WEIGHT_TOL) {
            return Err(GraphonError::PartitionMismatch("graphons have different block weights".into()));
        }
        let values =
            u.values.iter().zip(&w.values).map(|(a, b)| a.iter().zip(b).map(|(x, y)| x - y).collect()).collect();
        SignedStepKernel::new(u.weights.clone(), values)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn num_blocks(&self) -> usize {
        self.weights.len()
    }

    /// Applies a cell permutation on the `n`-grid, as for graphons.
    pub fn grid_version(&self, n: usize, perm: &[usize]) -> Result<SignedStepKernel> {
        let probe = StepGraphon {
            weights: self.weights.clone(),
            values: vec![vec![0.0; self.num_blocks()]; self.num_blocks()],
        };
        let cells = probe.grid_cells(n)?;
        validate_permutation(perm, n)?;
        let values = (0..n).map(|c| (0..n).map(|d| self.values[cells[perm[c]]][cells[perm[d]]]).collect()).collect();
        Ok(SignedStepKernel { weights: vec![1.0 / n as f64; n], values })
    }
}

impl From<&StepGraphon> for SignedStepKernel {
    fn from(g: &StepGraphon) -> Self {
        SignedStepKernel { weights: g.weights.clone(), values: g.values.clone() }
    }
}

/// Fractional assignment of source blocks to target parts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PartitionRepr", into = "PartitionRepr")]
pub struct PartitionSpec {
    assignment: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct PartitionRepr {
    assignment: Vec<Vec<f64>>,
}

impl TryFrom<PartitionRepr> for PartitionSpec {
    type Error = GraphonError;

    fn try_from(r: PartitionRepr) -> Result<Self> {
        PartitionSpec::new(r.assignment)
    }
}

impl From<PartitionSpec> for PartitionRepr {
    fn from(p: PartitionSpec) -> Self {
        PartitionRepr { assignment: p.assignment }
    }
}

impl PartitionSpec {
    pub fn new(assignment: Vec<Vec<f64>>) -> Result<Self> {
        let q = assignment.first().map_or(0, Vec::len);
        if assignment.is_empty() || q == 0 {
            return Err(GraphonError::PartitionMismatch("assignment is empty".into()));
        }
        for (i, row) in assignment.iter().enumerate() {
            if row.len() != q {
                return Err(GraphonError::PartitionMismatch(format!("row {i} has {} parts, expected {q}", row.len())));
            }
            if let Some(l) = row.iter().position(|v| !v.is_finite() || *v < 0.0) {
                return Err(GraphonError::PartitionMismatch(format!("entry ({i}, {l}) is negative or not finite")));
            }
        }
        Ok(PartitionSpec { assignment })
    }

    pub fn identity(weights: &[f64]) -> Self {
        let k = weights.len();
        PartitionSpec {
            assignment: (0..k).map(|i| (0..k).map(|j| if i == j { weights[i] } else { 0.0 }).collect()).collect(),
        }
    }

    pub fn trivial(weights: &[f64]) -> Self {
        PartitionSpec { assignment: weights.iter().map(|&w| vec![w]).collect() }
    }

    /// Whole blocks sent to parts by label.
    pub fn from_labels(weights: &[f64], labels: &[usize], parts: usize) -> Result<Self> {
        if labels.len() != weights.len() {
            return Err(GraphonError::PartitionMismatch(format!(
                "{} labels for {} blocks",
                labels.len(),
                weights.len()
            )));
        }
        let mut assignment = vec![vec![0.0; parts]; weights.len()];
        for (i, &l) in labels.iter().enumerate() {
            if l >= parts {
                return Err(GraphonError::PartitionMismatch(format!("label {l} exceeds {parts} parts")));
            }
            assignment[i][l] = weights[i];
        }
        PartitionSpec::new(assignment)
    }

    /// Intersections of the blocks laid out on `[0,1]` with consecutive
    /// intervals of the given masses.
    pub fn interval(weights: &[f64], masses: &[f64]) -> Result<Self> {
        let bw = cumulative(weights);
        let bm = cumulative(masses);
        let assignment = (0..weights.len())
            .map(|i| {
                (0..masses.len())
                    .map(|l| if weights[i] > 0.0 { overlap(bw[i], bw[i + 1], bm[l], bm[l + 1]) } else { 0.0 })
                    .collect()
            })
            .collect();
        PartitionSpec::new(assignment)
    }

    /// Partition into the `2^depth` dyadic intervals.
    pub fn dyadic(weights: &[f64], depth: u32) -> Result<Self> {
        let n = 1usize << depth;
        PartitionSpec::interval(weights, &vec![1.0 / n as f64; n])
    }

    pub fn assignment(&self) -> &[Vec<f64>] {
        &self.assignment
    }

    pub fn num_sources(&self) -> usize {
        self.assignment.len()
    }

    pub fn num_targets(&self) -> usize {
        self.assignment[0].len()
    }

    pub fn source_masses(&self) -> Vec<f64> {
        self.assignment.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn target_masses(&self) -> Vec<f64> {
        (0..self.num_targets()).map(|l| self.assignment.iter().map(|r| r[l]).sum()).collect()
    }

    pub fn check_source(&self, weights: &[f64]) -> Result<()> {
        if weights.len() != self.num_sources() {
            return Err(GraphonError::PartitionMismatch(format!(
                "partition has {} source blocks, graphon has {}",
                self.num_sources(),
                weights.len()
            )));
        }
        for (i, (s, w)) in self.source_masses().iter().zip(weights).enumerate() {
            if (s - w).abs() > WEIGHT_TOL {
                return Err(GraphonError::PartitionMismatch(format!(
                    "block {i} has weight {w} but the partition assigns {s}"
                )));
            }
        }
        Ok(())
    }

    /// `Rᵀ M R`, the rectangle masses of `M` over pairs of target parts.
    pub fn rect_masses(&self, m: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let (k, q) = (self.num_sources(), self.num_targets());
        let r = &self.assignment;
        let mut left = vec![vec![0.0; k]; q];
        for l in 0..q {
            for j in 0..k {
                left[l][j] = (0..k).map(|i| r[i][l] * m[i][j]).sum();
            }
        }
        (0..q).map(|l| (0..q).map(|n| (0..k).map(|j| left[l][j] * r[j][n]).sum()).collect()).collect()
    }
}

/// Piecewise-constant function on `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "StepFunctionRepr", into = "StepFunctionRepr")]
pub struct StepFunction1D {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct StepFunctionRepr {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
}

impl TryFrom<StepFunctionRepr> for StepFunction1D {
    type Error = GraphonError;

    fn try_from(r: StepFunctionRepr) -> Result<Self> {
        StepFunction1D::new(r.breakpoints, r.values)
    }
}

impl From<StepFunction1D> for StepFunctionRepr {
    fn from(f: StepFunction1D) -> Self {
        StepFunctionRepr { breakpoints: f.breakpoints, values: f.values }
    }
}

impl StepFunction1D {
    pub fn new(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let bad = |m: &str| Err(GraphonError::InvalidStepFunction(m.to_string()));
        if values.is_empty() || breakpoints.len() != values.len() + 1 {
            return bad("need one more breakpoint than values");
        }
        if breakpoints[0] != 0.0 || breakpoints[breakpoints.len() - 1] != 1.0 {
            return bad("breakpoints must start at 0 and end at 1");
        }
        if breakpoints.windows(2).any(|w| !(w[0] < w[1])) {
            return bad("breakpoints must be strictly increasing");
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0 || *v > 1.0) {
            return bad("values must lie in [0, 1]");
        }
        Ok(StepFunction1D { breakpoints, values })
    }

    pub fn constant(c: f64) -> Result<Self> {
        StepFunction1D::new(vec![0.0, 1.0], vec![c])
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn eval(&self, x: f64) -> f64 {
        let i = self.breakpoints[1..].partition_point(|&b| b <= x);
        self.values[i.min(self.values.len() - 1)]
    }

    pub fn integral(&self) -> f64 {
        self.values.iter().zip(self.breakpoints.windows(2)).map(|(v, w)| v * (w[1] - w[0])).sum()
    }
}

/// The two graphons carried over to the common partition indexed by the
/// cells `(i, j)` of `c` in row-major order.
pub fn common_refinement(u: &StepGraphon, w: &StepGraphon, c: &Coupling) -> Result<(StepGraphon, StepGraphon)> {
    c.check_couples(u.weights(), w.weights(), MARGINAL_TOL)?;
    let (ku, kw) = (u.num_blocks(), w.num_blocks());
    let cells: Vec<(usize, usize)> = (0..ku).flat_map(|i| (0..kw).map(move |j| (i, j))).collect();
    let total = c.total_mass();
    let weights: Vec<f64> = cells.iter().map(|&(i, j)| c.get(i, j) / total).collect();
    let uv = cells.iter().map(|&(i, _)| cells.iter().map(|&(k, _)| u.values[i][k]).collect()).collect();
    let wv = cells.iter().map(|&(_, j)| cells.iter().map(|&(_, l)| w.values[j][l]).collect()).collect();
    Ok((StepGraphon::new(weights.clone(), uv)?, StepGraphon::new(weights, wv)?))
}

/// `‖U − W‖₁` on the overlay given by `c`.
pub fn l1_distance(u: &StepGraphon, w: &StepGraphon, c: &Coupling) -> Result<f64> {
    c.check_couples(u.weights(), w.weights(), MARGINAL_TOL)?;
    let cells: Vec<(usize, usize, f64)> = (0..u.num_blocks())
        .flat_map(|i| (0..w.num_blocks()).map(move |j| (i, j)))
        .map(|(i, j)| (i, j, c.get(i, j)))
        .filter(|t| t.2 > 0.0)
        .collect();
    let mut total = 0.0;
    for &(i, j, m) in &cells {
        for &(k, l, n) in &cells {
            total += m * n * (u.values[i][k] - w.values[j][l]).abs();
        }
    }
    Ok(total)
}

/// Coupling that overlays the two block layouts as step functions on `[0,1]`.
pub fn interval_coupling(u: &StepGraphon, w: &StepGraphon) -> Coupling {
    let p = PartitionSpec::interval(u.weights(), w.weights()).expect("interval overlaps are nonnegative");
    let matrix = p.assignment.clone();
    Coupling::from_parts_unchecked(matrix, u.weights.clone(), w.weights.clone())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(w: &[f64], v: &[&[f64]]) -> StepGraphon {
        StepGraphon::new(w.to_vec(), v.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    #[test]
    fn construction_errors_name_the_index() {
        let e = StepGraphon::new(vec![0.5, 0.5], vec![vec![0.0, 0.2], vec![0.3, 0.0]]).unwrap_err();
        assert_eq!(e, GraphonError::AsymmetricValues { i: 0, j: 1 });
        let e = StepGraphon::new(vec![0.5, 0.6], vec![vec![0.0; 2]; 2]).unwrap_err();
        assert!(matches!(e, GraphonError::WeightsNotNormalized { .. }));
        let e = StepGraphon::new(vec![1.5, -0.5], vec![vec![0.0; 2]; 2]).unwrap_err();
        assert!(matches!(e, GraphonError::WeightsNotNormalized { index: Some(1), .. }));
        let e = StepGraphon::new(vec![1.0], vec![vec![1.5]]).unwrap_err();
        assert!(matches!(e, GraphonError::ValueOutOfRange { i: 0, j: 0, .. }));
    }

    #[test]
    fn null_blocks_are_kept_but_ignored() {
        let w = g(&[0.5, 0.0, 0.5], &[&[1.0, 0.3, 0.0], &[0.3, 0.9, 0.1], &[0.0, 0.1, 0.0]]);
        assert_eq!(w.num_blocks(), 3);
        assert!((w.edge_density() - 0.25).abs() < 1e-15);
        assert_eq!(w.degree_function().values(), &[0.5, 0.0]);
        assert_eq!(w.eval(0.5, 0.1), 0.0);
        assert_eq!(w.canonical_form().block_map[1], None);
    }

    #[test]
    fn degrees_of_small_examples() {
        assert_eq!(StepGraphon::bipartite().degree_function().values(), &[0.5, 0.5]);
        let w = g(&[0.5, 0.5], &[&[1.0, 0.0], &[0.0, 0.0]]);
        assert_eq!(w.degree_function().values(), &[0.5, 0.0]);
        assert!((w.degree_function().integral() - w.edge_density()).abs() < 1e-15);
    }

    #[test]
    fn int_f_examples() {
        let b = StepGraphon::bipartite();
        assert_eq!(b.int_f(|x| x * x), 0.5);
        assert_eq!(StepGraphon::constant(0.5).unwrap().int_f(|x| x * x), 0.25);
    }

    #[test]
    fn stepping_examples() {
        let b = StepGraphon::bipartite();
        assert_eq!(b.stepping(&PartitionSpec::identity(b.weights())).unwrap(), b);
        let t = b.stepping(&PartitionSpec::trivial(b.weights())).unwrap();
        assert_eq!(t, StepGraphon::constant(0.5).unwrap());
        let bad = PartitionSpec::trivial(&[0.3, 0.7]);
        assert!(matches!(b.stepping(&bad), Err(GraphonError::PartitionMismatch(_))));
    }

    #[test]
    fn common_refinement_examples() {
        let u = StepGraphon::constant(0.2).unwrap();
        let w = StepGraphon::bipartite();
        let c = Coupling::new(vec![vec![0.5, 0.5]], vec![1.0], vec![0.5, 0.5]).unwrap();
        let (ur, wr) = common_refinement(&u, &w, &c).unwrap();
        assert_eq!(ur.weights(), &[0.5, 0.5]);
        assert_eq!(wr.values(), w.values());
        let p = Coupling::product(&[0.5, 0.5], &[0.5, 0.5]).unwrap();
        let (ur, _) = common_refinement(&w, &w, &p).unwrap();
        assert_eq!(ur.weights(), &[0.25; 4]);
        let d = Coupling::diagonal(w.weights()).unwrap();
        let (a, b) = common_refinement(&w, &w, &d).unwrap();
        assert_eq!(a.drop_null_blocks().0, b.drop_null_blocks().0);
    }

    #[test]
    fn grid_version_permutes_cells() {
        let b = StepGraphon::bipartite();
        let swapped = b.grid_version(4, &[2, 3, 0, 1]).unwrap();
        assert_eq!(swapped.values()[0], vec![0.0, 0.0, 1.0, 1.0]);
        let chess = b.grid_version(4, &[0, 2, 1, 3]).unwrap();
        assert_eq!(chess.values()[0], vec![0.0, 1.0, 0.0, 1.0]);
        assert_eq!(chess.edge_density(), 0.5);
        assert!(matches!(
            g(&[0.3, 0.7], &[&[0.0, 0.0], &[0.0, 0.0]]).grid_version(4, &[0, 1, 2, 3]),
            Err(GraphonError::ResolutionIncompatible(_))
        ));
        assert!(matches!(b.grid_version(4, &[0, 0, 1, 2]), Err(GraphonError::InvalidPermutation(_))));
    }

    #[test]
    fn interlacing_alternates_halves() {
        let b = StepGraphon::bipartite();
        assert_eq!(b.interlace_version(1).unwrap(), b);
        let v = b.interlace_version(2).unwrap();
        assert_eq!(v.values()[0], vec![0.0, 1.0, 0.0, 1.0]);
        let c = StepGraphon::constant(0.3).unwrap();
        assert!(c.interlace_version(8).unwrap().values().iter().flatten().all(|&x| x == 0.3));
    }

    #[test]
    fn reorder_examples() {
        let w = g(&[0.25, 0.75], &[&[0.1, 0.2], &[0.2, 0.9]]);
        let id = PartitionSpec::identity(w.weights());
        assert_eq!(w.reorder_by_ordered_partition(&id).unwrap(), w);
        let swap = PartitionSpec::new(vec![vec![0.0, 0.25], vec![0.75, 0.0]]).unwrap();
        let s = w.reorder_by_ordered_partition(&swap).unwrap();
        assert_eq!(s.weights(), &[0.75, 0.25]);
        assert_eq!(s.values(), &[vec![0.9, 0.2], vec![0.2, 0.1]]);
        let split = PartitionSpec::new(vec![vec![0.125, 0.0, 0.125], vec![0.0, 0.75, 0.0]]).unwrap();
        let s = w.reorder_by_ordered_partition(&split).unwrap();
        assert_eq!(s.num_blocks(), 3);
        assert!((s.edge_density() - w.edge_density()).abs() < 1e-15);
    }

    #[test]
    fn canonical_form_identifies_versions() {
        let w = g(&[0.25, 0.25, 0.5], &[&[0.1, 0.2, 0.3], &[0.2, 0.4, 0.5], &[0.3, 0.5, 0.6]]);
        let v = w.grid_version(8, &[7, 3, 5, 0, 2, 6, 1, 4]).unwrap();
        assert_eq!(v.canonical_form().graphon, w.canonical_form().graphon);
    }

    #[test]
    fn rectangle_integrals_use_exact_overlaps() {
        let w = g(&[0.5, 0.5], &[&[1.0, 0.0], &[0.0, 0.5]]);
        assert!((w.rect_integral((0.25, 0.75), (0.0, 1.0)) - (0.25 * 0.5 + 0.25 * 0.25)).abs() < 1e-15);
    }

    #[test]
    fn step_function_validation_and_eval() {
        assert!(StepFunction1D::new(vec![0.0, 0.5, 0.5, 1.0], vec![0.0; 3]).is_err());
        let f = StepFunction1D::new(vec![0.0, 0.5, 1.0], vec![0.2, 0.8]).unwrap();
        assert_eq!(f.eval(0.49), 0.2);
        assert_eq!(f.eval(0.5), 0.8);
        assert_eq!(f.eval(1.0), 0.8);
        assert!((f.integral() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn json_round_trip() {
        let w = g(&[0.25, 0.75], &[&[0.1, 0.2], &[0.2, 0.9]]);
        let s = serde_json::to_string(&w).unwrap();
        assert_eq!(serde_json::from_str::<StepGraphon>(&s).unwrap(), w);
        let k = SignedStepKernel::difference(&w, &w).unwrap();
        let s = serde_json::to_string(&k).unwrap();
        assert!(s.contains("\"signed\":true"));
        assert_eq!(serde_json::from_str::<SignedStepKernel>(&s).unwrap(), k);
        let bad = r#"{"weights":[0.5,0.5],"values":[[0,1],[0,0]]}"#;
        assert!(serde_json::from_str::<StepGraphon>(bad).is_err());
    }
}
