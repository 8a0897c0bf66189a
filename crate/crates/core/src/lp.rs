//! Dense two-phase simplex for `min cᵀx, Ax = b, x ≥ 0` over `f64` or exact
//! rationals.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{GraphonError, Result};

pub trait LpScalar:
    Clone
    + PartialOrd
    + Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn zero() -> Self;
    fn one() -> Self;
    /// Magnitude below which pivot candidates are treated as zero.
    fn pivot_eps() -> Self;
    /// Primal infeasibility tolerated by the ratio test.
    fn feas_slack() -> Self;
    fn abs_val(&self) -> Self;
    fn to_f64(&self) -> f64;
    fn is_zero_val(&self) -> bool;
}

impl LpScalar for f64 {
    fn zero() -> Self {
        0.0
    }

    fn one() -> Self {
        1.0
    }

    fn pivot_eps() -> Self {
        1e-9
    }

    fn feas_slack() -> Self {
        1e-12
    }

    fn abs_val(&self) -> Self {
        self.abs()
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn is_zero_val(&self) -> bool {
        *self == 0.0
    }
}

impl LpScalar for BigRational {
    fn zero() -> Self {
        Zero::zero()
    }

    fn one() -> Self {
        One::one()
    }

    fn pivot_eps() -> Self {
        Zero::zero()
    }

    fn feas_slack() -> Self {
        Zero::zero()
    }

    fn abs_val(&self) -> Self {
        self.abs()
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn is_zero_val(&self) -> bool {
        Zero::is_zero(self)
    }
}

#[derive(Debug, Clone)]
pub struct LinearProgram<T> {
    pub a: Vec<Vec<T>>,
    pub b: Vec<T>,
    pub c: Vec<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome<T> {
    Optimal {
        x: Vec<T>,
        objective: T,
    },
    /// Phase one stopped with this much artificial mass left.
    Infeasible {
        phase_one: T,
    },
    Unbounded,
}

struct Tableau<T> {
    rows: Vec<Vec<T>>,
    basis: Vec<usize>,
    cost: Vec<T>,
    objective: T,
    width: usize,
    pivots: usize,
    max_pivots: usize,
}

enum Step {
    Optimal,
    Unbounded,
}

impl<T: LpScalar> Tableau<T> {
    fn rhs(&self) -> usize {
        self.width
    }

    fn pivot(&mut self, r: usize, e: usize) {
        let p = self.rows[r][e].clone();
        for v in self.rows[r].iter_mut() {
            *v = v.clone() / p.clone();
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r || row[e].is_zero_val() {
                continue;
            }
            let f = row[e].clone();
            for (v, pv) in row.iter_mut().zip(&pivot_row) {
                if !pv.is_zero_val() {
                    *v = v.clone() - f.clone() * pv.clone();
                }
            }
        }
        let f = self.cost[e].clone();
        if !f.is_zero_val() {
            for (v, pv) in self.cost.iter_mut().zip(&pivot_row[..self.width]) {
                if !pv.is_zero_val() {
                    *v = v.clone() - f.clone() * pv.clone();
                }
            }
            self.objective = self.objective.clone() + f * pivot_row[self.width].clone();
        }
        self.basis[r] = e;
        self.pivots += 1;
    }

    fn run(&mut self, allowed: usize) -> Result<Step> {
        let eps = T::pivot_eps();
        let neg_eps = -eps.clone();
        let rhs = self.rhs();
        let mut degenerate = 0usize;
        let mut bland = false;
        loop {
            if self.pivots > self.max_pivots {
                return Err(GraphonError::SolverFailure(format!("simplex exceeded {} pivots", self.max_pivots)));
            }
            // round-off can leave basic values slightly negative
            for row in self.rows.iter_mut() {
                if row[rhs] < T::zero() {
                    row[rhs] = T::zero();
                }
            }
            bland |= degenerate > 50;
            let mut entering = None;
            for j in 0..allowed {
                if self.cost[j] < neg_eps {
                    match entering {
                        None => entering = Some(j),
                        Some(e) if !bland && self.cost[j] < self.cost[e] => entering = Some(j),
                        _ => {}
                    }
                    if bland {
                        break;
                    }
                }
            }
            let Some(e) = entering else {
                return Ok(Step::Optimal);
            };
            // Harris two-pass ratio test: bound the step with a relaxed
            // feasibility tolerance, then take the largest pivot under it
            let slack = T::feas_slack();
            let mut bound: Option<T> = None;
            for row in &self.rows {
                if row[e] > eps {
                    let ratio = (row[rhs].clone() + slack.clone()) / row[e].clone();
                    if bound.as_ref().is_none_or(|m| ratio < *m) {
                        bound = Some(ratio);
                    }
                }
            }
            let Some(bound) = bound else {
                return Ok(Step::Unbounded);
            };
            let mut leave: Option<usize> = None;
            for (i, row) in self.rows.iter().enumerate() {
                if row[e] > eps && row[rhs].clone() / row[e].clone() <= bound {
                    let better = match leave {
                        None => true,
                        Some(l) if bland => self.basis[i] < self.basis[l],
                        Some(l) => row[e] > self.rows[l][e],
                    };
                    if better {
                        leave = Some(i);
                    }
                }
            }
            let r = leave.expect("ratio test row exists");
            let min_ratio = self.rows[r][rhs].clone() / self.rows[r][e].clone();
            if min_ratio.abs_val() <= eps {
                degenerate += 1;
            } else {
                degenerate = 0;
            }
            self.pivot(r, e);
        }
    }
}

/// Solves the program; `feas_tol` bounds the artificial mass accepted at the
/// end of phase one.
pub fn solve<T: LpScalar>(lp: &LinearProgram<T>, feas_tol: &T) -> Result<LpOutcome<T>> {
    let m = lp.a.len();
    let n = lp.c.len();
    if lp.b.len() != m || lp.a.iter().any(|r| r.len() != n) {
        return Err(GraphonError::DimensionMismatch("linear program shape".into()));
    }
    let width = n + m;
    let zero = T::zero();
    let mut rows = Vec::with_capacity(m);
    for i in 0..m {
        let flip = lp.b[i] < zero;
        let mut row: Vec<T> = Vec::with_capacity(width + 1);
        for v in &lp.a[i] {
            row.push(if flip { -v.clone() } else { v.clone() });
        }
        for k in 0..m {
            row.push(if k == i { T::one() } else { T::zero() });
        }
        row.push(if flip { -lp.b[i].clone() } else { lp.b[i].clone() });
        rows.push(row);
    }
    let mut cost = vec![T::zero(); width];
    let mut objective = T::zero();
    for row in &rows {
        for j in 0..n {
            cost[j] = cost[j].clone() - row[j].clone();
        }
        objective = objective + row[width].clone();
    }
    let mut t = Tableau {
        rows,
        basis: (n..n + m).collect(),
        cost,
        objective,
        width,
        pivots: 0,
        max_pivots: 200 * (m + n + 10),
    };
    t.run(width)?;
    if t.objective > *feas_tol {
        return Ok(LpOutcome::Infeasible { phase_one: t.objective });
    }

    let eps = T::pivot_eps();
    let mut i = 0;
    while i < t.rows.len() {
        if t.basis[i] >= n {
            let col = (0..n).find(|&j| t.rows[i][j].abs_val() > eps);
            match col {
                Some(j) => {
                    t.pivot(i, j);
                    i += 1;
                }
                None => {
                    t.rows.remove(i);
                    t.basis.remove(i);
                }
            }
        } else {
            i += 1;
        }
    }

    let mut cost = lp.c.clone();
    cost.resize(width, T::zero());
    let mut objective = T::zero();
    for (row, &bi) in t.rows.iter().zip(&t.basis) {
        let cb = lp.c[bi].clone();
        if cb.is_zero_val() {
            continue;
        }
        for j in 0..n {
            if !row[j].is_zero_val() {
                cost[j] = cost[j].clone() - cb.clone() * row[j].clone();
            }
        }
        objective = objective + cb * row[width].clone();
    }
    t.cost = cost;
    t.objective = objective;
    if let Step::Unbounded = t.run(n)? {
        return Ok(LpOutcome::Unbounded);
    }
    let mut x = vec![T::zero(); n];
    for (row, &bi) in t.rows.iter().zip(&t.basis) {
        if bi < n {
            x[bi] = row[width].clone();
        }
    }
    let objective = lp.c.iter().zip(&x).fold(T::zero(), |acc, (c, v)| acc + c.clone() * v.clone());
    Ok(LpOutcome::Optimal { x, objective })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn small_program_f64() {
        // min -x - y  s.t. x + 2y + s1 = 4, 3x + y + s2 = 6
        let lp = LinearProgram {
            a: vec![vec![1.0, 2.0, 1.0, 0.0], vec![3.0, 1.0, 0.0, 1.0]],
            b: vec![4.0, 6.0],
            c: vec![-1.0, -1.0, 0.0, 0.0],
        };
        match solve(&lp, &1e-12).unwrap() {
            LpOutcome::Optimal { x, objective } => {
                assert!((x[0] - 1.6).abs() < 1e-12 && (x[1] - 1.2).abs() < 1e-12);
                assert!((objective + 2.8).abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn infeasible_and_redundant_rows() {
        let lp = LinearProgram { a: vec![vec![1.0, 1.0], vec![1.0, 1.0]], b: vec![1.0, 2.0], c: vec![0.0, 0.0] };
        assert!(matches!(solve(&lp, &1e-12).unwrap(), LpOutcome::Infeasible { .. }));
        let lp = LinearProgram { a: vec![vec![1.0, 1.0], vec![2.0, 2.0]], b: vec![1.0, 2.0], c: vec![1.0, 0.0] };
        assert!(matches!(solve(&lp, &1e-12).unwrap(), LpOutcome::Optimal { .. }));
    }

    #[test]
    fn unbounded() {
        let lp = LinearProgram { a: vec![vec![1.0, -1.0]], b: vec![1.0], c: vec![-1.0, 0.0] };
        assert_eq!(solve(&lp, &1e-12).unwrap(), LpOutcome::Unbounded);
    }

    #[test]
    fn exact_rational_program() {
        let lp = LinearProgram {
            a: vec![vec![r(1, 1), r(2, 1), r(1, 1), r(0, 1)], vec![r(3, 1), r(1, 1), r(0, 1), r(1, 1)]],
            b: vec![r(4, 1), r(6, 1)],
            c: vec![r(-1, 1), r(-1, 1), r(0, 1), r(0, 1)],
        };
        match solve(&lp, &r(0, 1)).unwrap() {
            LpOutcome::Optimal { x, objective } => {
                assert_eq!(x[0], r(8, 5));
                assert_eq!(x[1], r(6, 5));
                assert_eq!(objective, r(-14, 5));
            }
            other => panic!("{other:?}"),
        }
    }
}
