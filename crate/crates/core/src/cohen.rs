//! Reconstruction of a graphon from a compressed kernel `W̃` and a splitting
//! function `s` through the maps `ψ(x) = ∫₀ˣ s` and `φ(x) = ψ(1) + x − ψ(x)`.

use crate::error::{GraphonError, Result};
use crate::graphon::{StepFunction1D, StepGraphon};

const GRID_TOL: f64 = 1e-12;

/// `ψ` and `φ` sampled at the `N + 1` grid points.
#[derive(Debug, Clone, PartialEq)]
pub struct CohenMaps {
    pub psi: Vec<f64>,
    pub phi: Vec<f64>,
    /// Value of `s` on each cell.
    pub s: Vec<f64>,
}

impl CohenMaps {
    pub fn new(s: &StepFunction1D, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(GraphonError::ResolutionIncompatible("resolution must be positive".into()));
        }
        for &b in s.breakpoints() {
            if ((b * n as f64).round() / n as f64 - b).abs() > GRID_TOL {
                return Err(GraphonError::ResolutionIncompatible(format!(
                    "breakpoint {b} of s is not on the 1/{n} grid"
                )));
            }
        }
        let h = 1.0 / n as f64;
        let cells: Vec<f64> = (0..n).map(|c| s.eval((c as f64 + 0.5) * h)).collect();
        let mut psi = vec![0.0; n + 1];
        for c in 0..n {
            psi[c + 1] = psi[c] + cells[c] * h;
        }
        let total = psi[n];
        let phi = (0..=n).map(|c| total + c as f64 * h - psi[c]).collect();
        Ok(CohenMaps { psi, phi, s: cells })
    }

    pub fn resolution(&self) -> usize {
        self.s.len()
    }

    /// Images of cell `c` under `ψ` and `φ`.
    pub fn images(&self, c: usize) -> ((f64, f64), (f64, f64)) {
        ((self.psi[c], self.psi[c + 1]), (self.phi[c], self.phi[c + 1]))
    }
}

/// Block of `w` whose closed interval contains `[lo, hi]`.
fn enclosing_block(w: &StepGraphon, b: &[f64], lo: f64, hi: f64) -> Option<usize> {
    let i = w.block_at(0.5 * (lo + hi));
    (lo >= b[i] - GRID_TOL && hi <= b[i + 1] + GRID_TOL).then_some(i)
}

/// Evaluates `Σ W̃(χx, χ'y)·c(x)c'(y)` over the four pairs `χ, χ' ∈ {ψ, φ}`
/// with `c = s` for `ψ` and `c = 1 − s` for `φ`, on the `N`-cell grid.
/// Every cell image with positive coefficient must sit inside one block of
/// `W̃`, which makes the midpoint evaluation exact.
pub fn cohen_reconstruct(wt: &StepGraphon, s: &StepFunction1D, n: usize) -> Result<StepGraphon> {
    let maps = CohenMaps::new(s, n)?;
    let b = wt.boundaries();
    // (coefficient, block) for the ψ and φ branch of every cell
    let mut branches = Vec::with_capacity(n);
    for c in 0..n {
        let (pi, fi) = maps.images(c);
        let sc = maps.s[c];
        let mut pair = [(0.0, 0usize); 2];
        for (slot, (coef, (lo, hi))) in [(sc, pi), (1.0 - sc, fi)].into_iter().enumerate() {
            if coef > 0.0 {
                let blk = enclosing_block(wt, &b, lo, hi).ok_or_else(|| {
                    GraphonError::ResolutionIncompatible(format!(
                        "image [{lo}, {hi}] of cell {c} straddles a block boundary of the kernel"
                    ))
                })?;
                pair[slot] = (coef, blk);
            }
        }
        branches.push(pair);
    }
    let mut values = vec![vec![0.0; n]; n];
    for x in 0..n {
        for y in x..n {
            let mut v = 0.0;
            for &(cx, bx) in &branches[x] {
                for &(cy, by) in &branches[y] {
                    if cx > 0.0 && cy > 0.0 {
                        v += cx * cy * wt.value(bx, by);
                    }
                }
            }
            let v = v.clamp(0.0, 1.0);
            values[x][y] = v;
            values[y][x] = v;
        }
    }
    StepGraphon::new(vec![1.0 / n as f64; n], values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_splittings_return_the_kernel() {
        let wt = StepGraphon::new(vec![0.25, 0.75], vec![vec![0.2, 0.9], vec![0.9, 0.4]]).unwrap();
        for c in [0.0, 1.0] {
            let w = cohen_reconstruct(&wt, &StepFunction1D::constant(c).unwrap(), 4).unwrap();
            let expected = wt.refine_to_grid(4).unwrap();
            assert_eq!(w.values(), expected.values());
        }
    }

    #[test]
    fn half_splitting_of_bipartite_is_constant() {
        let w = cohen_reconstruct(&StepGraphon::bipartite(), &StepFunction1D::constant(0.5).unwrap(), 4).unwrap();
        assert!(w.values().iter().flatten().all(|&v| (v - 0.5).abs() < 1e-15));
    }

    #[test]
    fn coarse_grid_is_rejected() {
        let wt = StepGraphon::new(vec![0.25, 0.75], vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let s = StepFunction1D::constant(0.5).unwrap();
        assert!(matches!(cohen_reconstruct(&wt, &s, 1), Err(GraphonError::ResolutionIncompatible(_))));
        let s = StepFunction1D::new(vec![0.0, 0.3, 1.0], vec![1.0, 0.0]).unwrap();
        assert!(cohen_reconstruct(&wt, &s, 4).is_err());
    }
}
