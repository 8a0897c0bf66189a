//! Worked examples run end to end, each reporting measured values next to
//! the predicted ones.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{GraphonError, Result};
use crate::graphon::{interval_coupling, l1_distance, PartitionSpec, StepGraphon};
use crate::measures::{check_flatter, convex_order_test, ConvexFn, DiscreteMeasure};
use crate::metrics::{cut_distance, weak_star_distance, OptimizerConfig};
use crate::multiway::{deterministic_multiway_set, multiway_hausdorff};
use crate::named::{check_eps, column_bound, raster_agreement, u2_strip_integral};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    Chessboard,
    Counterexample,
    Flatness,
    Chains,
    Multiway,
}

impl FromStr for Scenario {
    type Err = GraphonError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "chessboard" => Scenario::Chessboard,
            "counterexample" => Scenario::Counterexample,
            "flatness" => Scenario::Flatness,
            "chains" => Scenario::Chains,
            "multiway" => Scenario::Multiway,
            other => return Err(GraphonError::InvalidArgument(format!("unknown scenario {other}"))),
        })
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Scenario::Chessboard => "chessboard",
            Scenario::Counterexample => "counterexample",
            Scenario::Flatness => "flatness",
            Scenario::Chains => "chains",
            Scenario::Multiway => "multiway",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub predicted: Option<f64>,
    pub tolerance: Option<f64>,
    pub passed: bool,
}

impl Check {
    fn near(name: impl Into<String>, measured: f64, predicted: f64, tolerance: f64) -> Self {
        Check {
            name: name.into(),
            measured,
            predicted: Some(predicted),
            tolerance: Some(tolerance),
            passed: (measured - predicted).abs() <= tolerance,
        }
    }

    fn holds(name: impl Into<String>, measured: f64, passed: bool) -> Self {
        Check { name: name.into(), measured, predicted: None, tolerance: None, passed }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub label: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub scenario: Scenario,
    pub checks: Vec<Check>,
    pub series: Vec<Series>,
    pub notes: Vec<String>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "scenario {}", self.scenario)?;
        for s in &self.series {
            writeln!(f, "  {}:", s.label)?;
            for (x, y) in s.x.iter().zip(&s.y) {
                writeln!(f, "    {x:<12} {y:.12e}")?;
            }
        }
        for c in &self.checks {
            let mark = if c.passed { "ok  " } else { "FAIL" };
            write!(f, "  [{mark}] {}: {:.12e}", c.name, c.measured)?;
            if let (Some(p), Some(t)) = (c.predicted, c.tolerance) {
                write!(f, " (predicted {p:.12e} ± {t:.3e}, diff {:.3e})", (c.measured - p).abs())?;
            }
            writeln!(f)?;
        }
        for n in &self.notes {
            writeln!(f, "  note: {n}")?;
        }
        Ok(())
    }
}

fn non_increasing(v: &[f64], slack: f64) -> bool {
    v.windows(2).all(|w| w[1] <= w[0] + slack)
}

/// `d_w*` between interlaced bipartite versions and the constant ½.
pub fn chessboard() -> Result<Report> {
    let depth = 6;
    let half = StepGraphon::constant(0.5)?;
    let b = StepGraphon::bipartite();
    let levels = [1usize, 2, 4, 8, 16, 32, 64];
    let mut y = Vec::new();
    for &n in &levels {
        y.push(weak_star_distance(&b.interlace_version(n)?, &half, depth));
    }
    let decreasing = y.windows(2).all(|w| w[1] < w[0]);
    let last = *y.last().unwrap();
    Ok(Report {
        scenario: Scenario::Chessboard,
        checks: vec![
            Check::holds("strictly decreasing in n", y[0] - last, decreasing),
            Check::holds("distance at n = 64 below 0.01", last, last < 0.01),
        ],
        series: vec![Series {
            label: format!("d_w* at depth {depth}"),
            x: levels.iter().map(|&n| n as f64).collect(),
            y,
        }],
        notes: vec![],
    })
}

/// Strip integral of `U2` and the column bound for the candidate meet, at
/// the given `ε` or at `2^-4, 2^-6, 2^-8`.
pub fn counterexample(eps: Option<f64>) -> Result<Report> {
    let list = match eps {
        Some(e) => {
            check_eps(e)?;
            vec![e]
        }
        None => vec![0.5f64.powi(4), 0.5f64.powi(6), 0.5f64.powi(8)],
    };
    let mut checks = Vec::new();
    let (mut ratios, mut bounds) = (Vec::new(), Vec::new());
    for &e in &list {
        let v = u2_strip_integral(e)?;
        checks.push(Check::near(format!("U2 strip integral at eps {e}"), v, 1.5 * e, 8.0 * e * e));
        ratios.push(v / e);
        let cb = column_bound(e)?;
        checks.push(Check::near(format!("column bound / eps at eps {e}"), cb.ratio, 1.25, 10.0 * e));
        bounds.push(cb.ratio);
        let gap = raster_agreement(e)?;
        checks.push(Check::holds(format!("W2 raster vs exact geometry at eps {e}"), gap, gap <= 4.0 * e * e));
    }
    if list.len() > 1 {
        let mono = ratios.windows(2).all(|w| (w[1] - 1.5).abs() <= (w[0] - 1.5).abs());
        checks.push(Check::holds("strip ratio approaches 1.5 monotonically", *ratios.last().unwrap(), mono));
    }
    Ok(Report {
        scenario: Scenario::Counterexample,
        checks,
        series: vec![
            Series { label: "U2 strip integral / eps".into(), x: list.clone(), y: ratios },
            Series { label: "column bound / eps".into(), x: list, y: bounds },
        ],
        notes: vec!["W2 is stored as exact block averages; strip estimates use the exact triangle geometry".into()],
    })
}

/// Dirac at ½ against the two-point measure on `{0, 1}`.
pub fn flatness() -> Result<Report> {
    let dirac = DiscreteMeasure::dirac(0.5)?;
    let split = DiscreteMeasure::new(vec![0.0, 1.0], vec![0.5, 0.5])?;
    let fwd = check_flatter(&dirac, &split, 1e-9)?;
    let back = check_flatter(&split, &dirac, 1e-9)?;
    let conv = convex_order_test(&dirac, &split, &ConvexFn::default_family());
    Ok(Report {
        scenario: Scenario::Flatness,
        checks: vec![
            Check::holds("dirac flatter than {0,1}: residual", fwd.residual, fwd.feasible && fwd.residual < 1e-9),
            Check::holds("{0,1} flatter than dirac: infeasible", back.residual, !back.feasible),
            Check::holds("convex order violations", conv.violations as f64, conv.violations == 0),
        ],
        series: vec![],
        notes: back.reason.into_iter().collect(),
    })
}

/// Random step graphon whose blocks are unions of cells of the `n` grid.
pub fn random_grid_graphon(rng: &mut ChaCha8Rng, n: usize, max_blocks: usize) -> Result<StepGraphon> {
    let k = rng.gen_range(1..=max_blocks.min(n));
    let mut cuts: Vec<usize> = (1..n).collect();
    cuts.shuffle(rng);
    let mut cuts: Vec<usize> = cuts.into_iter().take(k - 1).collect();
    cuts.push(0);
    cuts.push(n);
    cuts.sort_unstable();
    let weights = cuts.windows(2).map(|w| (w[1] - w[0]) as f64 / n as f64).collect();
    let mut values = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in i..k {
            let v: f64 = rng.gen();
            values[i][j] = v;
            values[j][i] = v;
        }
    }
    StepGraphon::new(weights, values)
}

/// Dyadic stepping chain of random graphons on the 64-cell grid.
pub fn chains(seed: u64, count: usize, cfg: &OptimizerConfig) -> Result<Report> {
    let mut checks = Vec::new();
    let mut series = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for t in 0..count {
        let w = random_grid_graphon(&mut rng, 64, 8)?;
        let (mut l1s, mut cuts) = (Vec::new(), Vec::new());
        for d in 0..=6 {
            let wn = w.stepping(&PartitionSpec::dyadic(w.weights(), d)?)?;
            l1s.push(l1_distance(&wn, &w, &interval_coupling(&wn, &w))?);
            cuts.push(cut_distance(&wn, &w, cfg, seed.wrapping_add(d as u64)).value);
        }
        let last = *l1s.last().unwrap();
        checks.push(Check::holds(
            format!("graphon {t}: L1 error non-increasing, zero at depth 6"),
            last,
            non_increasing(&l1s, 0.0) && last < 1e-12,
        ));
        let rise = cuts.windows(2).map(|w| w[1] - w[0]).fold(0.0f64, f64::max);
        checks.push(Check::holds(
            format!("graphon {t}: cut distance bound non-increasing"),
            rise,
            non_increasing(&cuts, 2e-6),
        ));
        let x: Vec<f64> = (0..=6).map(f64::from).collect();
        series.push(Series { label: format!("graphon {t} L1 error"), x: x.clone(), y: l1s });
        series.push(Series { label: format!("graphon {t} cut distance bound"), x, y: cuts });
    }
    Ok(Report {
        scenario: Scenario::Chains,
        checks,
        series,
        notes: vec!["cut distances are upper bounds from the optimizer".into()],
    })
}

/// Multiway sets of constants and of grid versions.
pub fn multiway(seed: u64, count: usize) -> Result<Report> {
    let a = [0.5, 0.5];
    let z = deterministic_multiway_set(&StepGraphon::constant(0.0)?, &a)?;
    let o = deterministic_multiway_set(&StepGraphon::constant(1.0)?, &a)?;
    let mut checks = vec![Check::near("constants 0 and 1", multiway_hausdorff(&z, &o)?, 1.0, 0.0)];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..count {
        let w = random_grid_graphon(&mut rng, 8, 4)?;
        let mut perm: Vec<usize> = (0..8).collect();
        perm.shuffle(&mut rng);
        let v = w.grid_version(8, &perm)?;
        let q = rng.gen_range(1..=3);
        let mut parts: Vec<f64> = (0..q).map(|_| rng.gen_range(0.1..1.0)).collect();
        let s: f64 = parts.iter().sum();
        parts.iter_mut().for_each(|p| *p /= s);
        let fix = 1.0 - parts[..q - 1].iter().sum::<f64>();
        parts[q - 1] = fix;
        let d = multiway_hausdorff(&deterministic_multiway_set(&w, &parts)?, &deterministic_multiway_set(&v, &parts)?)?;
        worst = worst.max(d);
    }
    checks.push(Check::holds("grid versions: largest distance", worst, worst <= 1e-9));
    Ok(Report {
        scenario: Scenario::Multiway,
        checks,
        series: vec![],
        notes: vec!["sets are deterministic vertex families, hence lower estimates".into()],
    })
}

/// Runs one scenario with its default sizes.
pub fn run(which: Scenario, eps: Option<f64>, seed: u64) -> Result<Report> {
    match which {
        Scenario::Chessboard => chessboard(),
        Scenario::Counterexample => counterexample(eps),
        Scenario::Flatness => flatness(),
        Scenario::Chains => chains(seed, 5, &OptimizerConfig { restarts: 8, max_iters: 50, tol: 1e-9 }),
        Scenario::Multiway => multiway(seed, 20),
    }
}
