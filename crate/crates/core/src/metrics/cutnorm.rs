use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::coupling::Coupling;
use crate::error::{GraphonError, Result};
use crate::graphon::{common_refinement, SignedStepKernel, StepGraphon};

/// Largest number of positive-weight blocks accepted by the exact mode.
pub const EXACT_BLOCK_LIMIT: usize = 24;
pub const DEFAULT_RESTARTS: usize = 32;

/// Cells up to which `cut_norm_distance` enumerates exactly.
const DISTANCE_EXACT_CELLS: usize = 20;
const DISTANCE_RESTARTS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CutNormMode {
    Exact,
    Heuristic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutNormResult {
    pub value: f64,
    pub witness_s: Vec<u8>,
    pub witness_t: Vec<u8>,
    pub mode: CutNormMode,
}

/// `B_ij = a_i a_j Y_ij` restricted to the positive-weight blocks.
fn scaled_matrix(weights: &[f64], values: &[Vec<f64>]) -> (Vec<usize>, Vec<f64>) {
    let idx: Vec<usize> = (0..weights.len()).filter(|&i| weights[i] > 0.0).collect();
    let k = idx.len();
    let mut b = vec![0.0; k * k];
    for (p, &i) in idx.iter().enumerate() {
        for (q, &j) in idx.iter().enumerate() {
            b[p * k + q] = weights[i] * weights[j] * values[i][j];
        }
    }
    (idx, b)
}

fn witness_sum(b: &[f64], k: usize, s: &[bool], t: &[bool]) -> f64 {
    let mut total = 0.0;
    for i in 0..k {
        if s[i] {
            for j in 0..k {
                if t[j] {
                    total += b[i * k + j];
                }
            }
        }
    }
    total
}

fn recompute_columns(b: &[f64], k: usize, mask: u64, col: &mut [f64]) {
    col.iter_mut().for_each(|c| *c = 0.0);
    for i in 0..k {
        if mask >> i & 1 == 1 {
            for j in 0..k {
                col[j] += b[i * k + j];
            }
        }
    }
}

/// Exact maximum of `|sᵀ B t|` over `s, t ∈ {0,1}^k`: Gray-code walk over
/// `s`, best `t` read off the column-sum signs for both signs of `B`.
pub(crate) fn exact_scaled(b: &[f64], k: usize) -> (f64, Vec<bool>, Vec<bool>) {
    let mut col = vec![0.0; k];
    let mut best = 0.0;
    let mut best_mask = 0u64;
    let mut best_positive = true;
    let mut mask = 0u64;
    for g in 1u64..(1u64 << k) {
        let bit = g.trailing_zeros() as usize;
        mask ^= 1 << bit;
        if bit >= 10 {
            recompute_columns(b, k, mask, &mut col);
        } else {
            let row = &b[bit * k..(bit + 1) * k];
            if mask >> bit & 1 == 1 {
                col.iter_mut().zip(row).for_each(|(c, r)| *c += r);
            } else {
                col.iter_mut().zip(row).for_each(|(c, r)| *c -= r);
            }
        }
        let (mut pos, mut neg) = (0.0, 0.0);
        for &c in &col {
            if c > 0.0 {
                pos += c;
            } else {
                neg -= c;
            }
        }
        if neg > best {
            best = neg;
            best_mask = mask;
            best_positive = false;
        }
        if pos > best {
            best = pos;
            best_mask = mask;
            best_positive = true;
        }
    }
    recompute_columns(b, k, best_mask, &mut col);
    let s: Vec<bool> = (0..k).map(|i| best_mask >> i & 1 == 1).collect();
    let t: Vec<bool> = col.iter().map(|&c| if best_positive { c > 0.0 } else { c < 0.0 }).collect();
    let value = witness_sum(b, k, &s, &t).abs();
    (value, s, t)
}

fn alternate(b: &[f64], k: usize, mut s: Vec<bool>, sign: f64) -> (f64, Vec<bool>, Vec<bool>) {
    let mut t = vec![false; k];
    let mut value = f64::NEG_INFINITY;
    for _ in 0..100 {
        for j in 0..k {
            let c: f64 = (0..k).filter(|&i| s[i]).map(|i| b[i * k + j]).sum();
            t[j] = sign * c > 0.0;
        }
        for i in 0..k {
            let r: f64 = (0..k).filter(|&j| t[j]).map(|j| b[i * k + j]).sum();
            s[i] = sign * r > 0.0;
        }
        let v = sign * witness_sum(b, k, &s, &t);
        if v <= value + 1e-15 {
            break;
        }
        value = v;
    }
    for j in 0..k {
        let c: f64 = (0..k).filter(|&i| s[i]).map(|i| b[i * k + j]).sum();
        t[j] = sign * c > 0.0;
    }
    (witness_sum(b, k, &s, &t).abs(), s, t)
}

/// Alternating maximization from random starts, both signs.
pub(crate) fn heuristic_scaled(
    b: &[f64],
    k: usize,
    restarts: usize,
    rng: &mut ChaCha8Rng,
) -> (f64, Vec<bool>, Vec<bool>) {
    let mut best = (0.0, vec![false; k], vec![false; k]);
    let mut starts = vec![vec![true; k]];
    for _ in 0..restarts {
        starts.push((0..k).map(|_| rng.gen_bool(0.5)).collect());
    }
    for s in starts {
        for sign in [1.0, -1.0] {
            let cand = alternate(b, k, s.clone(), sign);
            if cand.0 > best.0 {
                best = cand;
            }
        }
    }
    best
}

fn expand(idx: &[usize], n: usize, sel: &[bool]) -> Vec<u8> {
    let mut out = vec![0u8; n];
    for (p, &i) in idx.iter().enumerate() {
        out[i] = sel[p] as u8;
    }
    out
}

pub(crate) fn cut_norm_parts(
    weights: &[f64],
    values: &[Vec<f64>],
    mode: CutNormMode,
    seed: u64,
    restarts: usize,
) -> Result<CutNormResult> {
    let (idx, b) = scaled_matrix(weights, values);
    let k = idx.len();
    let (value, s, t) = match mode {
        CutNormMode::Exact => {
            if k > EXACT_BLOCK_LIMIT {
                return Err(GraphonError::TooManyBlocksForExact { blocks: k, limit: EXACT_BLOCK_LIMIT });
            }
            exact_scaled(&b, k)
        }
        CutNormMode::Heuristic => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            heuristic_scaled(&b, k, restarts, &mut rng)
        }
    };
    Ok(CutNormResult {
        value,
        witness_s: expand(&idx, weights.len(), &s),
        witness_t: expand(&idx, weights.len(), &t),
        mode,
    })
}

/// `sup_{S,T} |∫_{S×T} Y|` over unions of blocks.
pub fn cut_norm(y: &SignedStepKernel, mode: CutNormMode, seed: u64) -> Result<CutNormResult> {
    cut_norm_parts(y.weights(), y.values(), mode, seed, DEFAULT_RESTARTS)
}

/// `‖U − W‖□` on the overlay given by `c`.
pub fn cut_norm_distance(u: &StepGraphon, w: &StepGraphon, c: &Coupling) -> Result<f64> {
    let (ur, wr) = common_refinement(u, w, c)?;
    let values: Vec<Vec<f64>> =
        ur.values().iter().zip(wr.values()).map(|(a, b)| a.iter().zip(b).map(|(x, y)| x - y).collect()).collect();
    let support = ur.weights().iter().filter(|&&x| x > 0.0).count();
    let mode = if support <= DISTANCE_EXACT_CELLS { CutNormMode::Exact } else { CutNormMode::Heuristic };
    Ok(cut_norm_parts(ur.weights(), &values, mode, 0, DISTANCE_RESTARTS)?.value)
}
