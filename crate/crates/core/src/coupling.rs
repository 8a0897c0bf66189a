use serde::{Deserialize, Serialize};

use crate::error::{GraphonError, Result};

/// Marginal tolerance used when validating couplings.
pub const MARGINAL_TOL: f64 = 1e-9;

/// Nonnegative matrix with prescribed row and column sums.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CouplingRepr", into = "CouplingRepr")]
pub struct Coupling {
    matrix: Vec<Vec<f64>>,
    row_marginal: Vec<f64>,
    col_marginal: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct CouplingRepr {
    matrix: Vec<Vec<f64>>,
    row_marginal: Vec<f64>,
    col_marginal: Vec<f64>,
}

impl TryFrom<CouplingRepr> for Coupling {
    type Error = GraphonError;

    fn try_from(r: CouplingRepr) -> Result<Self> {
        Coupling::new(r.matrix, r.row_marginal, r.col_marginal)
    }
}

impl From<Coupling> for CouplingRepr {
    fn from(c: Coupling) -> Self {
        CouplingRepr { matrix: c.matrix, row_marginal: c.row_marginal, col_marginal: c.col_marginal }
    }
}

fn check_entries(matrix: &[Vec<f64>], cols: usize) -> Result<()> {
    for (i, row) in matrix.iter().enumerate() {
        if row.len() != cols {
            return Err(GraphonError::DimensionMismatch(format!(
                "coupling row {i} has {} entries, expected {cols}",
                row.len()
            )));
        }
        for (j, &v) in row.iter().enumerate() {
            if !v.is_finite() || v < 0.0 {
                return Err(GraphonError::InvalidArgument(format!(
                    "coupling entry ({i}, {j}) = {v} is negative or not finite"
                )));
            }
        }
    }
    Ok(())
}

impl Coupling {
    pub fn new(matrix: Vec<Vec<f64>>, row_marginal: Vec<f64>, col_marginal: Vec<f64>) -> Result<Self> {
        if matrix.len() != row_marginal.len() {
            return Err(GraphonError::DimensionMismatch(format!(
                "coupling has {} rows but {} row masses",
                matrix.len(),
                row_marginal.len()
            )));
        }
        check_entries(&matrix, col_marginal.len())?;
        let c = Coupling { matrix, row_marginal, col_marginal };
        c.check_couples(&c.row_marginal, &c.col_marginal, MARGINAL_TOL)?;
        Ok(c)
    }

    /// Builds a coupling whose marginals are read off the matrix.
    pub fn from_matrix(matrix: Vec<Vec<f64>>) -> Result<Self> {
        let cols = matrix.first().map_or(0, Vec::len);
        check_entries(&matrix, cols)?;
        let row_marginal = matrix.iter().map(|r| r.iter().sum()).collect();
        let col_marginal = (0..cols).map(|j| matrix.iter().map(|r| r[j]).sum()).collect();
        Ok(Coupling { matrix, row_marginal, col_marginal })
    }

    pub(crate) fn from_parts_unchecked(matrix: Vec<Vec<f64>>, row_marginal: Vec<f64>, col_marginal: Vec<f64>) -> Self {
        Coupling { matrix, row_marginal, col_marginal }
    }

    /// Independent coupling `C_ij = r_i c_j / |c|`.
    pub fn product(row: &[f64], col: &[f64]) -> Result<Self> {
        let total: f64 = col.iter().sum();
        let matrix =
            row.iter().map(|&r| col.iter().map(|&c| if total > 0.0 { r * c / total } else { 0.0 }).collect()).collect();
        Coupling::new(matrix, row.to_vec(), col.to_vec())
    }

    pub fn diagonal(masses: &[f64]) -> Result<Self> {
        let k = masses.len();
        let matrix = (0..k).map(|i| (0..k).map(|j| if i == j { masses[i] } else { 0.0 }).collect()).collect();
        Coupling::new(matrix, masses.to_vec(), masses.to_vec())
    }

    /// Northwest-corner vertex of the transport polytope after listing rows and
    /// columns in the given orders.
    pub fn northwest_corner(row: &[f64], col: &[f64], row_order: &[usize], col_order: &[usize]) -> Result<Self> {
        let matrix = northwest_corner_matrix(row, col, row_order, col_order)?;
        Coupling::new(matrix, row.to_vec(), col.to_vec())
    }

    pub fn transpose(&self) -> Coupling {
        let (m, n) = (self.rows(), self.cols());
        let matrix = (0..n).map(|j| (0..m).map(|i| self.matrix[i][j]).collect()).collect();
        Coupling { matrix, row_marginal: self.col_marginal.clone(), col_marginal: self.row_marginal.clone() }
    }

    pub fn matrix(&self) -> &[Vec<f64>] {
        &self.matrix
    }

    pub fn row_marginal(&self) -> &[f64] {
        &self.row_marginal
    }

    pub fn col_marginal(&self) -> &[f64] {
        &self.col_marginal
    }

    pub fn rows(&self) -> usize {
        self.matrix.len()
    }

    pub fn cols(&self) -> usize {
        self.col_marginal.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.matrix[i][j]
    }

    pub fn total_mass(&self) -> f64 {
        self.matrix.iter().flatten().sum()
    }

    /// Largest deviation of the actual row and column sums from `row`, `col`.
    pub fn marginal_residual(&self, row: &[f64], col: &[f64]) -> f64 {
        if row.len() != self.rows() || col.len() != self.cols() {
            return f64::INFINITY;
        }
        let mut worst: f64 = 0.0;
        for (i, r) in self.matrix.iter().enumerate() {
            worst = worst.max((r.iter().sum::<f64>() - row[i]).abs());
        }
        for (j, &c) in col.iter().enumerate() {
            let s: f64 = self.matrix.iter().map(|r| r[j]).sum();
            worst = worst.max((s - c).abs());
        }
        worst
    }

    /// Errors unless this coupling has marginals `row` and `col` within `tol`.
    pub fn check_couples(&self, row: &[f64], col: &[f64], tol: f64) -> Result<()> {
        if row.len() != self.rows() || col.len() != self.cols() {
            return Err(GraphonError::MarginalMismatch(format!(
                "coupling is {}x{}, marginals have lengths {} and {}",
                self.rows(),
                self.cols(),
                row.len(),
                col.len()
            )));
        }
        let res = self.marginal_residual(row, col);
        if res > tol {
            return Err(GraphonError::MarginalMismatch(format!("marginal residual {res:e} exceeds {tol:e}")));
        }
        Ok(())
    }
}

pub(crate) fn northwest_corner_matrix(
    row: &[f64],
    col: &[f64],
    row_order: &[usize],
    col_order: &[usize],
) -> Result<Vec<Vec<f64>>> {
    check_order(row_order, row.len())?;
    check_order(col_order, col.len())?;
    let mut matrix = vec![vec![0.0; col.len()]; row.len()];
    let mut rr: Vec<f64> = row.to_vec();
    let mut cc: Vec<f64> = col.to_vec();
    let (mut a, mut b) = (0, 0);
    while a < row_order.len() && b < col_order.len() {
        let (i, j) = (row_order[a], col_order[b]);
        if rr[i] <= 0.0 {
            a += 1;
            continue;
        }
        if cc[j] <= 0.0 {
            b += 1;
            continue;
        }
        let m = rr[i].min(cc[j]);
        matrix[i][j] += m;
        rr[i] -= m;
        cc[j] -= m;
        if rr[i] <= 1e-15 {
            rr[i] = 0.0;
            a += 1;
        }
        if cc[j] <= 1e-15 {
            cc[j] = 0.0;
            b += 1;
        }
    }
    Ok(matrix)
}

fn check_order(order: &[usize], n: usize) -> Result<()> {
    let mut seen = vec![false; n];
    if order.len() != n {
        return Err(GraphonError::InvalidPermutation(format!("order has length {}, expected {n}", order.len())));
    }
    for &o in order {
        if o >= n || seen[o] {
            return Err(GraphonError::InvalidPermutation(format!("index {o} repeated or out of range")));
        }
        seen[o] = true;
    }
    Ok(())
}

pub(crate) fn validate_permutation(perm: &[usize], n: usize) -> Result<()> {
    check_order(perm, n)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn northwest_corner_fills_staircase() {
        let c = Coupling::northwest_corner(&[0.5, 0.5], &[0.25, 0.75], &[0, 1], &[0, 1]).unwrap();
        assert_eq!(c.matrix(), &[vec![0.25, 0.25], vec![0.0, 0.5]]);
    }

    #[test]
    fn reversed_order_changes_vertex() {
        let c = Coupling::northwest_corner(&[0.5, 0.5], &[0.25, 0.75], &[0, 1], &[1, 0]).unwrap();
        assert_eq!(c.matrix(), &[vec![0.0, 0.5], vec![0.25, 0.25]]);
    }

    #[test]
    fn rejects_bad_marginals() {
        let err = Coupling::new(vec![vec![0.5, 0.0]], vec![1.0], vec![0.5, 0.5]).unwrap_err();
        assert!(matches!(err, GraphonError::MarginalMismatch(_)));
    }

    #[test]
    fn transpose_swaps_marginals() {
        let c = Coupling::product(&[0.3, 0.7], &[0.5, 0.5]).unwrap().transpose();
        assert_eq!(c.row_marginal(), &[0.5, 0.5]);
        assert!((c.get(1, 1) - 0.35).abs() < 1e-15);
    }

    #[test]
    fn json_round_trip_revalidates() {
        let c = Coupling::diagonal(&[0.25, 0.75]).unwrap();
        let s = serde_json::to_string(&c).unwrap();
        assert_eq!(serde_json::from_str::<Coupling>(&s).unwrap(), c);
        let bad = r#"{"matrix":[[1.0]],"row_marginal":[0.5],"col_marginal":[1.0]}"#;
        assert!(serde_json::from_str::<Coupling>(bad).is_err());
    }
}
