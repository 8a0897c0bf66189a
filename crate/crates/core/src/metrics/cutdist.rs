use std::cmp::Ordering;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::cutnorm::{cut_norm_distance, exact_scaled, heuristic_scaled};
use crate::coupling::{northwest_corner_matrix, Coupling};
use crate::graphon::StepGraphon;
use crate::lp::{self, LinearProgram, LpOutcome};

/// Largest common grid on which the permutation sweep runs.
const SWEEP_LIMIT: usize = 8;
/// Support size up to which inner evaluations are exact.
const INNER_EXACT_CELLS: usize = 14;
const INNER_RESTARTS: usize = 8;
/// Largest `k_U · k_W` for which transport steps are attempted.
const TRANSPORT_LIMIT: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub restarts: usize,
    pub max_iters: usize,
    pub tol: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig { restarts: 32, max_iters: 200, tol: 1e-9 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutDistance {
    /// Upper bound on the cut distance.
    pub value: f64,
    pub coupling: Coupling,
    /// Whether the exhaustive permutation sweep ran.
    pub permutation_sweep: bool,
}

/// Upper bound on `δ□(U, W)` by local search over couplings, plus an
/// exhaustive permutation sweep when both graphons have at most eight
/// equal-mass blocks on a common grid.
pub fn cut_distance(u: &StepGraphon, w: &StepGraphon, cfg: &OptimizerConfig, seed: u64) -> CutDistance {
    if u.total_cmp(w) == Ordering::Greater {
        let r = cut_distance(w, u, cfg, seed);
        return CutDistance {
            value: r.value,
            coupling: r.coupling.transpose(),
            permutation_sweep: r.permutation_sweep,
        };
    }
    let (ur, keep_u) = u.drop_null_blocks();
    let (wr, keep_w) = w.drop_null_blocks();
    let mut candidates = Vec::new();
    let mut swept = false;
    let mut done = false;
    if let Some((value, mat)) = permutation_sweep(&ur, &wr) {
        swept = true;
        done = value <= 1e-12;
        candidates.push(mat);
    }
    if !done {
        let (um, cu) = ur.merge_twins();
        let (wm, cw) = wr.merge_twins();
        for mat in local_search(&um, &wm, cfg, seed) {
            candidates.push(split_classes(&mat, &ur, &wr, &um, &wm, &cu, &cw));
        }
    }
    let mut best: Option<(f64, Coupling)> = None;
    for mat in candidates {
        let c = expand(&mat, u, w, &keep_u, &keep_w);
        let value = cut_norm_distance(u, w, &c).unwrap_or(f64::INFINITY);
        if best.as_ref().is_none_or(|b| value < b.0) {
            best = Some((value, c));
        }
    }
    let (value, coupling) = best.expect("at least one candidate coupling");
    CutDistance { value, coupling, permutation_sweep: swept }
}

/// Spreads a coupling of merged twin classes over the member blocks in
/// proportion to their weights.
fn split_classes(
    mat: &[Vec<f64>],
    u: &StepGraphon,
    w: &StepGraphon,
    um: &StepGraphon,
    wm: &StepGraphon,
    cu: &[usize],
    cw: &[usize],
) -> Vec<Vec<f64>> {
    let (a, b) = (u.weights(), w.weights());
    let (am, bm) = (um.weights(), wm.weights());
    (0..a.len())
        .map(|i| (0..b.len()).map(|j| mat[cu[i]][cw[j]] * (a[i] / am[cu[i]]) * (b[j] / bm[cw[j]])).collect())
        .collect()
}

fn expand(mat: &[Vec<f64>], u: &StepGraphon, w: &StepGraphon, keep_u: &[usize], keep_w: &[usize]) -> Coupling {
    let mut full = vec![vec![0.0; w.num_blocks()]; u.num_blocks()];
    for (a, &i) in keep_u.iter().enumerate() {
        for (b, &j) in keep_w.iter().enumerate() {
            full[i][j] = mat[a][b];
        }
    }
    Coupling::from_parts_unchecked(full, u.weights().to_vec(), w.weights().to_vec())
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn equal_mass(g: &StepGraphon) -> bool {
    let k = g.num_blocks() as f64;
    g.weights().iter().all(|&x| (x - 1.0 / k).abs() <= 1e-12)
}

fn permutation_sweep(u: &StepGraphon, w: &StepGraphon) -> Option<(f64, Vec<Vec<f64>>)> {
    if !equal_mass(u) || !equal_mass(w) {
        return None;
    }
    let (ku, kw) = (u.num_blocks(), w.num_blocks());
    let l = ku / gcd(ku, kw) * kw;
    if l > SWEEP_LIMIT {
        return None;
    }
    let cu = u.grid_cells(l).ok()?;
    let cw = w.grid_cells(l).ok()?;
    let uv: Vec<Vec<f64>> = (0..l).map(|c| (0..l).map(|d| u.value(cu[c], cu[d])).collect()).collect();
    let wv: Vec<Vec<f64>> = (0..l).map(|c| (0..l).map(|d| w.value(cw[c], cw[d])).collect()).collect();
    let mut sweep = Sweep {
        uv,
        wv,
        l,
        cell: 1.0 / (l * l) as f64,
        perm: vec![0; l],
        used: vec![false; l],
        best: f64::INFINITY,
        best_perm: (0..l).collect(),
    };
    sweep.search(0);
    let mut mat = vec![vec![0.0; kw]; ku];
    for c in 0..l {
        mat[cu[c]][cw[sweep.best_perm[c]]] += 1.0 / l as f64;
    }
    Some((sweep.best, mat))
}

struct Sweep {
    uv: Vec<Vec<f64>>,
    wv: Vec<Vec<f64>>,
    l: usize,
    cell: f64,
    perm: Vec<usize>,
    used: Vec<bool>,
    best: f64,
    best_perm: Vec<usize>,
}

impl Sweep {
    fn search(&mut self, pos: usize) {
        if self.best <= 1e-12 {
            return;
        }
        if pos == self.l {
            let l = self.l;
            let mut b = vec![0.0; l * l];
            for c in 0..l {
                for d in 0..l {
                    b[c * l + d] = self.cell * (self.uv[c][d] - self.wv[self.perm[c]][self.perm[d]]);
                }
            }
            let (value, _, _) = exact_scaled(&b, l);
            if value < self.best {
                self.best = value;
                self.best_perm = self.perm.clone();
            }
            return;
        }
        for d in 0..self.l {
            if self.used[d] {
                continue;
            }
            self.perm[pos] = d;
            let bound =
                (0..=pos).map(|c| (self.uv[pos][c] - self.wv[d][self.perm[c]]).abs()).fold(0.0, f64::max) * self.cell;
            if bound >= self.best {
                continue;
            }
            self.used[d] = true;
            self.search(pos + 1);
            self.used[d] = false;
        }
    }
}

struct Eval {
    value: f64,
    cells: Vec<(usize, usize, f64)>,
    s: Vec<bool>,
    t: Vec<bool>,
    sign: f64,
}

struct Evaluator<'a> {
    u: &'a StepGraphon,
    w: &'a StepGraphon,
    rng: ChaCha8Rng,
}

impl Evaluator<'_> {
    fn evaluate(&mut self, mat: &[Vec<f64>]) -> Eval {
        let mut cells = Vec::new();
        for (i, row) in mat.iter().enumerate() {
            for (j, &m) in row.iter().enumerate() {
                if m > 1e-15 {
                    cells.push((i, j, m));
                }
            }
        }
        let n = cells.len();
        let mut b = vec![0.0; n * n];
        for (p, &(i, j, m)) in cells.iter().enumerate() {
            for (q, &(k, l, r)) in cells.iter().enumerate() {
                b[p * n + q] = m * r * (self.u.value(i, k) - self.w.value(j, l));
            }
        }
        let (value, s, t) = if n <= INNER_EXACT_CELLS {
            exact_scaled(&b, n)
        } else {
            heuristic_scaled(&b, n, INNER_RESTARTS, &mut self.rng)
        };
        let mut raw = 0.0;
        for p in 0..n {
            if s[p] {
                for q in 0..n {
                    if t[q] {
                        raw += b[p * n + q];
                    }
                }
            }
        }
        Eval { value, cells, s, t, sign: if raw < 0.0 { -1.0 } else { 1.0 } }
    }

    /// Best-response linearization of the cut norm at the current witness.
    fn gradient(&self, e: &Eval) -> Vec<Vec<f64>> {
        let (ku, kw) = (self.u.num_blocks(), self.w.num_blocks());
        let mut su = vec![0.0; ku];
        let mut sw = vec![0.0; kw];
        let mut tu = vec![0.0; ku];
        let mut tw = vec![0.0; kw];
        for (p, &(i, j, m)) in e.cells.iter().enumerate() {
            if e.s[p] {
                su[i] += m;
                sw[j] += m;
            }
            if e.t[p] {
                tu[i] += m;
                tw[j] += m;
            }
        }
        let apply = |g: &StepGraphon, v: &[f64]| -> Vec<f64> {
            (0..g.num_blocks()).map(|i| (0..g.num_blocks()).map(|k| g.value(i, k) * v[k]).sum()).collect()
        };
        let (ru, rw) = (apply(self.u, &tu), apply(self.w, &tw));
        let (ku_s, kw_s) = (apply(self.u, &su), apply(self.w, &sw));
        (0..ku)
            .map(|i| {
                (0..kw).map(|j| (e.sign * (ru[i] - rw[j])).max(0.0) + (e.sign * (ku_s[i] - kw_s[j])).max(0.0)).collect()
            })
            .collect()
    }
}

fn transport_vertex(cost: &[Vec<f64>], row: &[f64], col: &[f64]) -> Option<Vec<Vec<f64>>> {
    let (m, n) = (row.len(), col.len());
    let mut a = Vec::with_capacity(m + n);
    for i in 0..m {
        let mut r = vec![0.0; m * n];
        r[i * n..(i + 1) * n].iter_mut().for_each(|x| *x = 1.0);
        a.push(r);
    }
    for j in 0..n {
        let mut r = vec![0.0; m * n];
        for i in 0..m {
            r[i * n + j] = 1.0;
        }
        a.push(r);
    }
    let b = row.iter().chain(col).copied().collect();
    let c = cost.iter().flatten().copied().collect();
    match lp::solve(&LinearProgram { a, b, c }, &1e-9).ok()? {
        LpOutcome::Optimal { x, .. } => Some((0..m).map(|i| (0..n).map(|j| x[i * n + j].max(0.0)).collect()).collect()),
        _ => None,
    }
}

fn local_search(u: &StepGraphon, w: &StepGraphon, cfg: &OptimizerConfig, seed: u64) -> Vec<Vec<Vec<f64>>> {
    let (ku, kw) = (u.num_blocks(), w.num_blocks());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ev = Evaluator { u, w, rng: ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15) };
    let by_degree = |g: &StepGraphon| {
        let d = g.block_degrees();
        let mut o: Vec<usize> = (0..g.num_blocks()).collect();
        o.sort_by(|&a, &b| d[a].total_cmp(&d[b]).then(a.cmp(&b)));
        o
    };
    let mut starts = vec![((0..ku).collect::<Vec<_>>(), (0..kw).collect::<Vec<_>>()), (by_degree(u), by_degree(w))];
    for _ in 0..cfg.restarts {
        let mut a: Vec<usize> = (0..ku).collect();
        let mut b: Vec<usize> = (0..kw).collect();
        a.shuffle(&mut rng);
        b.shuffle(&mut rng);
        starts.push((a, b));
    }
    let nw = |a: &[usize], b: &[usize]| {
        northwest_corner_matrix(u.weights(), w.weights(), a, b).expect("orders are permutations")
    };
    let mut out = Vec::new();
    if ku * kw <= 64 {
        out.push((0..ku).map(|i| (0..kw).map(|j| u.weights()[i] * w.weights()[j]).collect()).collect());
    }
    for (mut ou, mut ow) in starts {
        let mut mat = nw(&ou, &ow);
        let mut cur = ev.evaluate(&mat).value;
        if ku > 1 || kw > 1 {
            let tries = 2 * (ku + kw).max(4);
            for _ in 0..cfg.max_iters {
                let mut improved = false;
                for _ in 0..tries {
                    let on_u = ku > 1 && (kw < 2 || rng.gen_bool(0.5));
                    let order = if on_u { &mut ou } else { &mut ow };
                    let len = order.len();
                    let p = rng.gen_range(0..len);
                    let q = (p + 1 + rng.gen_range(0..len - 1)) % len;
                    order.swap(p, q);
                    let cand = nw(&ou, &ow);
                    let e = ev.evaluate(&cand);
                    if e.value < cur - cfg.tol {
                        mat = cand;
                        cur = e.value;
                        improved = true;
                        break;
                    }
                    let order = if on_u { &mut ou } else { &mut ow };
                    order.swap(p, q);
                }
                if !improved {
                    break;
                }
            }
        }
        if ku * kw <= TRANSPORT_LIMIT {
            for _ in 0..cfg.max_iters {
                let e = ev.evaluate(&mat);
                cur = cur.min(e.value);
                let g = ev.gradient(&e);
                let Some(vertex) = transport_vertex(&g, u.weights(), w.weights()) else {
                    break;
                };
                let mut improved = false;
                for gamma in [1.0, 0.5, 0.25, 0.125] {
                    let cand: Vec<Vec<f64>> = mat
                        .iter()
                        .zip(&vertex)
                        .map(|(a, b)| a.iter().zip(b).map(|(x, y)| (1.0 - gamma) * x + gamma * y).collect())
                        .collect();
                    let v = ev.evaluate(&cand).value;
                    if v < cur - cfg.tol {
                        mat = cand;
                        cur = v;
                        improved = true;
                        break;
                    }
                }
                if !improved {
                    break;
                }
            }
        }
        out.push(mat);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants_are_at_their_difference() {
        let p = StepGraphon::constant(0.2).unwrap();
        let q = StepGraphon::constant(0.9).unwrap();
        let r = cut_distance(&p, &q, &OptimizerConfig::default(), 1);
        assert!((r.value - 0.7).abs() < 1e-15);
    }

    #[test]
    fn versions_are_at_zero() {
        let w = StepGraphon::uniform(vec![vec![0.1, 0.8], vec![0.8, 0.3]]).unwrap();
        let v = w.grid_version(4, &[3, 0, 2, 1]).unwrap();
        let r = cut_distance(&w, &v, &OptimizerConfig::default(), 5);
        assert!(r.value <= 1e-12);
        assert!(r.permutation_sweep);
    }

    #[test]
    fn bipartite_against_half_stays_at_one_eighth() {
        let b = StepGraphon::bipartite();
        let h = StepGraphon::constant(0.5).unwrap();
        for n in [2, 4, 8] {
            let bn = b.interlace_version(n / 2).unwrap();
            let r = cut_distance(&bn, &h, &OptimizerConfig::default(), 0);
            assert!((r.value - 0.125).abs() < 1e-12, "{n}: {}", r.value);
        }
    }

    #[test]
    fn symmetric_in_arguments() {
        let u = StepGraphon::new(vec![0.3, 0.7], vec![vec![0.2, 0.9], vec![0.9, 0.4]]).unwrap();
        let w = StepGraphon::new(vec![0.6, 0.4], vec![vec![0.5, 0.1], vec![0.1, 0.8]]).unwrap();
        let cfg = OptimizerConfig::default();
        let a = cut_distance(&u, &w, &cfg, 3);
        let b = cut_distance(&w, &u, &cfg, 3);
        assert_eq!(a.value, b.value);
        assert_eq!(a.coupling, b.coupling.transpose());
    }
}
