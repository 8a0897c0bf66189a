//! Pushforward measures and the flatness order.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::coupling::{Coupling, MARGINAL_TOL};
use crate::error::{GraphonError, Result};
use crate::graphon::StepGraphon;
use crate::lp::{self, LinearProgram, LpOutcome, LpScalar};

/// Atoms closer than this are merged at construction.
pub const ATOM_MERGE_TOL: f64 = 1e-12;

/// Finite measure on `[0, 1]` with strictly increasing atoms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MeasureRepr", into = "MeasureRepr")]
pub struct DiscreteMeasure {
    atoms: Vec<f64>,
    masses: Vec<f64>,
    total: f64,
}

#[derive(Serialize, Deserialize)]
struct MeasureRepr {
    atoms: Vec<f64>,
    masses: Vec<f64>,
}

impl TryFrom<MeasureRepr> for DiscreteMeasure {
    type Error = GraphonError;

    fn try_from(r: MeasureRepr) -> Result<Self> {
        DiscreteMeasure::new(r.atoms, r.masses)
    }
}

impl From<DiscreteMeasure> for MeasureRepr {
    fn from(m: DiscreteMeasure) -> Self {
        MeasureRepr { atoms: m.atoms, masses: m.masses }
    }
}

impl DiscreteMeasure {
    /// Sorts the atoms, merges near-duplicates and drops zero masses.
    pub fn new(atoms: Vec<f64>, masses: Vec<f64>) -> Result<Self> {
        if atoms.len() != masses.len() {
            return Err(GraphonError::InvalidMeasure(format!("{} atoms but {} masses", atoms.len(), masses.len())));
        }
        for (&x, &m) in atoms.iter().zip(&masses) {
            if !x.is_finite() || !(-ATOM_MERGE_TOL..=1.0 + ATOM_MERGE_TOL).contains(&x) {
                return Err(GraphonError::InvalidMeasure(format!("atom {x} lies outside [0, 1]")));
            }
            if !m.is_finite() || m < 0.0 {
                return Err(GraphonError::InvalidMeasure(format!("mass {m} is negative or not finite")));
            }
        }
        let mut pairs: Vec<(f64, f64)> =
            atoms.into_iter().map(|x| x.clamp(0.0, 1.0)).zip(masses).filter(|p| p.1 > 0.0).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut atoms: Vec<f64> = Vec::with_capacity(pairs.len());
        let mut masses: Vec<f64> = Vec::with_capacity(pairs.len());
        for (x, m) in pairs {
            match atoms.last() {
                Some(&last) if x - last <= ATOM_MERGE_TOL => *masses.last_mut().unwrap() += m,
                _ => {
                    atoms.push(x);
                    masses.push(m);
                }
            }
        }
        let total = masses.iter().sum();
        Ok(DiscreteMeasure { atoms, masses, total })
    }

    pub fn dirac(x: f64) -> Result<Self> {
        DiscreteMeasure::new(vec![x], vec![1.0])
    }

    pub fn zero() -> Self {
        DiscreteMeasure { atoms: Vec::new(), masses: Vec::new(), total: 0.0 }
    }

    pub fn atoms(&self) -> &[f64] {
        &self.atoms
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.total
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.atoms.iter().zip(&self.masses).map(|(&x, &m)| m * f(x)).sum()
    }

    pub fn first_moment(&self) -> f64 {
        self.integrate(|x| x)
    }

    /// Same atoms and masses within `tol`.
    pub fn approx_eq(&self, other: &DiscreteMeasure, tol: f64) -> bool {
        self.len() == other.len()
            && self.atoms.iter().zip(&other.atoms).all(|(a, b)| (a - b).abs() <= tol)
            && self.masses.iter().zip(&other.masses).all(|(a, b)| (a - b).abs() <= tol)
    }
}

/// Pushforward of the pair measure under the block values.
pub fn range_frequencies(w: &StepGraphon) -> DiscreteMeasure {
    let a = w.weights();
    let mut atoms = Vec::new();
    let mut masses = Vec::new();
    for i in 0..a.len() {
        for j in 0..a.len() {
            if a[i] > 0.0 && a[j] > 0.0 {
                atoms.push(w.value(i, j));
                masses.push(a[i] * a[j]);
            }
        }
    }
    DiscreteMeasure::new(atoms, masses).expect("graphon values lie in [0, 1]")
}

/// Pushforward of the block measure under the degrees.
pub fn degree_frequencies(w: &StepGraphon) -> DiscreteMeasure {
    DiscreteMeasure::new(w.block_degrees(), w.weights().to_vec()).expect("degrees lie in [0, 1]")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlatnessWitness {
    pub feasible: bool,
    /// Largest violation of the marginal, barycenter and sign constraints.
    pub residual: f64,
    pub coupling: Option<Coupling>,
    pub reason: Option<String>,
}

impl FlatnessWitness {
    fn infeasible(residual: f64, reason: &str) -> Self {
        FlatnessWitness { feasible: false, residual, coupling: None, reason: Some(reason.to_string()) }
    }
}

/// Largest violation of the flatness constraints by `psi`.
pub fn flatness_residual(l1: &DiscreteMeasure, l2: &DiscreteMeasure, psi: &[Vec<f64>]) -> f64 {
    if psi.len() != l1.len() || psi.iter().any(|r| r.len() != l2.len()) {
        return f64::INFINITY;
    }
    let mut worst: f64 = 0.0;
    for (i, row) in psi.iter().enumerate() {
        let mass: f64 = row.iter().sum();
        let bary: f64 = row.iter().zip(&l2.atoms).map(|(p, y)| p * y).sum();
        worst = worst.max((mass - l1.masses[i]).abs());
        worst = worst.max((bary - l1.masses[i] * l1.atoms[i]).abs());
        for &v in row {
            worst = worst.max(-v);
        }
    }
    for j in 0..l2.len() {
        let mass: f64 = psi.iter().map(|r| r[j]).sum();
        worst = worst.max((mass - l2.masses[j]).abs());
    }
    worst
}

fn flatness_program<T: LpScalar>(p: &[T], x: &[T], q: &[T], y: &[T]) -> LinearProgram<T> {
    let (m, n) = (p.len(), q.len());
    let mut a = Vec::with_capacity(2 * m + n);
    let mut b = Vec::with_capacity(2 * m + n);
    for i in 0..m {
        let mut row = vec![T::zero(); m * n];
        row[i * n..(i + 1) * n].iter_mut().for_each(|v| *v = T::one());
        a.push(row);
        b.push(p[i].clone());
    }
    for j in 0..n {
        let mut row = vec![T::zero(); m * n];
        for i in 0..m {
            row[i * n + j] = T::one();
        }
        a.push(row);
        b.push(q[j].clone());
    }
    for i in 0..m {
        let mut row = vec![T::zero(); m * n];
        for j in 0..n {
            row[i * n + j] = y[j].clone();
        }
        a.push(row);
        b.push(p[i].clone() * x[i].clone());
    }
    let mut c = Vec::with_capacity(m * n);
    for xi in x {
        for yj in y {
            c.push((xi.clone() - yj.clone()).abs_val());
        }
    }
    LinearProgram { a, b, c }
}

fn witness_from(l1: &DiscreteMeasure, l2: &DiscreteMeasure, x: &[f64]) -> FlatnessWitness {
    let n = l2.len();
    let matrix: Vec<Vec<f64>> = (0..l1.len()).map(|i| (0..n).map(|j| x[i * n + j].max(0.0)).collect()).collect();
    let residual = flatness_residual(l1, l2, &matrix);
    FlatnessWitness {
        feasible: true,
        residual,
        coupling: Some(Coupling::from_parts_unchecked(matrix, l1.masses.clone(), l2.masses.clone())),
        reason: None,
    }
}

const MASS_REASON: &str = "total masses differ";
const MOMENT_REASON: &str = "first moments differ";
const LP_REASON: &str = "no coupling satisfies the barycenter constraints";

/// Decides whether `l1` is at least as flat as `l2`. The witness minimizes
/// `Σ Ψ_ij |x_i − y_j|`, so equal measures get the diagonal coupling.
pub fn check_flatter(l1: &DiscreteMeasure, l2: &DiscreteMeasure, tol: f64) -> Result<FlatnessWitness> {
    let dm = (l1.total_mass() - l2.total_mass()).abs();
    if dm > tol {
        return Ok(FlatnessWitness::infeasible(dm, MASS_REASON));
    }
    let d1 = (l1.first_moment() - l2.first_moment()).abs();
    if d1 > tol {
        return Ok(FlatnessWitness::infeasible(d1, MOMENT_REASON));
    }
    if l1.is_empty() || l2.is_empty() {
        return Ok(witness_from(l1, l2, &[]));
    }
    let prog = flatness_program(&l1.masses, &l1.atoms, &l2.masses, &l2.atoms);
    match lp::solve(&prog, &tol)? {
        LpOutcome::Optimal { x, .. } => Ok(witness_from(l1, l2, &x)),
        LpOutcome::Infeasible { phase_one } => Ok(FlatnessWitness::infeasible(phase_one, LP_REASON)),
        LpOutcome::Unbounded => Err(GraphonError::SolverFailure("bounded program reported unbounded".into())),
    }
}

fn rational(x: f64) -> Result<BigRational> {
    BigRational::from_float(x).ok_or_else(|| GraphonError::InvalidMeasure(format!("{x} is not finite")))
}

/// `check_flatter` in exact rational arithmetic, reading every double as the
/// rational it represents. Feasibility is decided with zero tolerance.
pub fn check_flatter_exact(l1: &DiscreteMeasure, l2: &DiscreteMeasure) -> Result<FlatnessWitness> {
    let conv = |v: &[f64]| v.iter().map(|&x| rational(x)).collect::<Result<Vec<_>>>();
    let (p, x, q, y) = (conv(&l1.masses)?, conv(&l1.atoms)?, conv(&l2.masses)?, conv(&l2.atoms)?);
    let sum = |v: &[BigRational]| v.iter().fold(<BigRational as Zero>::zero(), |a, b| a + b);
    let moment = |m: &[BigRational], a: &[BigRational]| {
        m.iter().zip(a).fold(<BigRational as Zero>::zero(), |acc, (u, v)| acc + u * v)
    };
    let dm = sum(&p) - sum(&q);
    if !dm.is_zero() {
        return Ok(FlatnessWitness::infeasible(LpScalar::to_f64(&dm.abs()), MASS_REASON));
    }
    let d1 = moment(&p, &x) - moment(&q, &y);
    if !d1.is_zero() {
        return Ok(FlatnessWitness::infeasible(LpScalar::to_f64(&d1.abs()), MOMENT_REASON));
    }
    if l1.is_empty() || l2.is_empty() {
        return Ok(witness_from(l1, l2, &[]));
    }
    let prog = flatness_program(&p, &x, &q, &y);
    let zero = BigRational::new(BigInt::from(0), BigInt::from(1));
    match lp::solve(&prog, &zero)? {
        LpOutcome::Optimal { x, .. } => {
            let xf: Vec<f64> = x.iter().map(LpScalar::to_f64).collect();
            Ok(witness_from(l1, l2, &xf))
        }
        LpOutcome::Infeasible { phase_one } => Ok(FlatnessWitness::infeasible(phase_one.to_f64(), LP_REASON)),
        LpOutcome::Unbounded => Err(GraphonError::SolverFailure("bounded program reported unbounded".into())),
    }
}

/// `Ξ_iℓ = Σ_j P1_ij P2_jℓ / q_j`.
pub fn compose_couplings(p1: &Coupling, p2: &Coupling, mid: &DiscreteMeasure) -> Result<Coupling> {
    let q = mid.masses();
    if p1.cols() != q.len() || p2.rows() != q.len() {
        return Err(GraphonError::MarginalMismatch(format!(
            "couplings meet in {} and {} atoms, middle measure has {}",
            p1.cols(),
            p2.rows(),
            q.len()
        )));
    }
    p1.check_couples(p1.row_marginal(), q, MARGINAL_TOL)?;
    p2.check_couples(q, p2.col_marginal(), MARGINAL_TOL)?;
    let (m, n) = (p1.rows(), p2.cols());
    let mut xi = vec![vec![0.0; n]; m];
    for (j, &qj) in q.iter().enumerate() {
        if qj <= 0.0 {
            continue;
        }
        for i in 0..m {
            let a = p1.get(i, j);
            if a == 0.0 {
                continue;
            }
            for l in 0..n {
                xi[i][l] += a * p2.get(j, l) / qj;
            }
        }
    }
    Coupling::new(xi, p1.row_marginal().to_vec(), p2.col_marginal().to_vec())
}

/// Convex test functions for the convex-order comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ConvexFn {
    Square,
    AbsShift(f64),
    Exp,
}

impl ConvexFn {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            ConvexFn::Square => x * x,
            ConvexFn::AbsShift(c) => (x - c).abs(),
            ConvexFn::Exp => x.exp(),
        }
    }

    pub fn name(&self) -> String {
        match *self {
            ConvexFn::Square => "x^2".into(),
            ConvexFn::AbsShift(c) => format!("|x-{c}|"),
            ConvexFn::Exp => "exp(x)".into(),
        }
    }

    /// `x²`, `|x − c|` for `c ∈ {¼, ½, ¾}` and `exp`.
    pub fn default_family() -> Vec<ConvexFn> {
        vec![
            ConvexFn::Square,
            ConvexFn::AbsShift(0.25),
            ConvexFn::AbsShift(0.5),
            ConvexFn::AbsShift(0.75),
            ConvexFn::Exp,
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexOrderEntry {
    pub function: String,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexOrderReport {
    pub entries: Vec<ConvexOrderEntry>,
    pub violations: usize,
}

/// Compares `∫ f dL1` with `∫ f dL2` for every `f` in the family.
pub fn convex_order_test(l1: &DiscreteMeasure, l2: &DiscreteMeasure, family: &[ConvexFn]) -> ConvexOrderReport {
    let entries: Vec<ConvexOrderEntry> = family
        .iter()
        .map(|f| {
            let lhs = l1.integrate(|x| f.eval(x));
            let rhs = l2.integrate(|x| f.eval(x));
            ConvexOrderEntry { function: f.name(), lhs, rhs, holds: lhs <= rhs + 1e-10 }
        })
        .collect();
    let violations = entries.iter().filter(|e| !e.holds).count();
    ConvexOrderReport { entries, violations }
}

pub fn add_measures(l1: &DiscreteMeasure, l2: &DiscreteMeasure) -> DiscreteMeasure {
    let atoms = l1.atoms.iter().chain(&l2.atoms).copied().collect();
    let masses = l1.masses.iter().chain(&l2.masses).copied().collect();
    DiscreteMeasure::new(atoms, masses).expect("inputs are valid measures")
}

/// Strictly flatter: feasible and the measures differ beyond `1e-9`.
pub fn is_strictly_flatter(l1: &DiscreteMeasure, l2: &DiscreteMeasure, tol: f64) -> Result<bool> {
    Ok(check_flatter(l1, l2, tol)?.feasible && !l1.approx_eq(l2, 1e-9))
}
