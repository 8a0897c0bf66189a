//! Named graphons: constants, the balanced bipartite graphon and the four
//! graphons `W1`, `W2`, `U1`, `U2` of the meet counterexample, with the exact
//! geometry needed for its two strip estimates.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{GraphonError, Result};
use crate::graphon::StepGraphon;

type PointFn = fn(f64, f64, f64) -> f64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NamedGraphon {
    Constant,
    Bipartite,
    W1,
    W2,
    U1,
    U2,
}

impl FromStr for NamedGraphon {
    type Err = GraphonError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "constant" => NamedGraphon::Constant,
            "bipartite" => NamedGraphon::Bipartite,
            "w1" => NamedGraphon::W1,
            "w2" => NamedGraphon::W2,
            "u1" => NamedGraphon::U1,
            "u2" => NamedGraphon::U2,
            other => return Err(GraphonError::InvalidArgument(format!("unknown graphon {other}"))),
        })
    }
}

impl fmt::Display for NamedGraphon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            NamedGraphon::Constant => "constant",
            NamedGraphon::Bipartite => "bipartite",
            NamedGraphon::W1 => "w1",
            NamedGraphon::W2 => "w2",
            NamedGraphon::U1 => "u1",
            NamedGraphon::U2 => "u2",
        };
        f.write_str(s)
    }
}

/// Accepts `eps = 2^-k` with `3 ≤ k ≤ 10` and returns `k`.
pub fn check_eps(eps: f64) -> Result<u32> {
    (3..=10).find(|&k| eps == 0.5f64.powi(k as i32)).ok_or(GraphonError::UnsupportedEps { eps })
}

pub fn build_named_graphon(name: NamedGraphon, c: Option<f64>, eps: Option<f64>) -> Result<StepGraphon> {
    let need_eps = || eps.ok_or_else(|| GraphonError::InvalidArgument(format!("{name} needs eps")));
    match name {
        NamedGraphon::Constant => {
            StepGraphon::constant(c.ok_or_else(|| GraphonError::InvalidArgument("constant needs c".into()))?)
        }
        NamedGraphon::Bipartite => Ok(StepGraphon::bipartite()),
        NamedGraphon::W1 => w1(need_eps()?),
        NamedGraphon::W2 => w2(need_eps()?),
        NamedGraphon::U1 => u1(need_eps()?),
        NamedGraphon::U2 => u2(need_eps()?),
    }
}

/// The value `4(ε − ε²)` taken on `[½,1]²`.
pub fn corner_value(eps: f64) -> f64 {
    4.0 * (eps - eps * eps)
}

fn in_strip(eps: f64, t: f64) -> bool {
    t >= 0.25 - eps / 2.0 && t < 0.25 + eps / 2.0
}

/// Pointwise `W1`.
pub fn w1_point(eps: f64, x: f64, y: f64) -> f64 {
    let (lx, ly) = (x < 0.5, y < 0.5);
    if !lx && !ly {
        corner_value(eps)
    } else if lx != ly || in_strip(eps, x) || in_strip(eps, y) {
        1.0
    } else {
        0.0
    }
}

/// Pointwise `W2`: `W1` with the triangles above the anti-diagonals of
/// `[0,½]²` and `[½,1]²` exchanged by the shift `(½, ½)`.
pub fn w2_point(eps: f64, x: f64, y: f64) -> f64 {
    if x < 0.5 && y < 0.5 && x + y >= 0.5 {
        w1_point(eps, x + 0.5, y + 0.5)
    } else if x >= 0.5 && y >= 0.5 && x + y >= 1.5 {
        w1_point(eps, x - 0.5, y - 0.5)
    } else {
        w1_point(eps, x, y)
    }
}

/// All coordinates where `W1`, `W2` or their shifted pieces change value.
fn breakpoints(eps: f64) -> Vec<f64> {
    vec![0.0, 0.25 - eps / 2.0, 0.25 + eps / 2.0, 0.5, 0.75 - eps / 2.0, 0.75 + eps / 2.0, 1.0]
}

fn midpoint_blocks(eps: f64, cuts: &[f64], f: fn(f64, f64, f64) -> f64) -> Result<StepGraphon> {
    let weights: Vec<f64> = cuts.windows(2).map(|w| w[1] - w[0]).collect();
    let mids: Vec<f64> = cuts.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    let values = mids.iter().map(|&x| mids.iter().map(|&y| f(eps, x, y)).collect()).collect();
    StepGraphon::new(weights, values)
}

/// Blocks `[0, ¼−ε/2], [¼±ε/2], [¼+ε/2, ½], [½, 1]`.
pub fn w1(eps: f64) -> Result<StepGraphon> {
    check_eps(eps)?;
    midpoint_blocks(eps, &[0.0, 0.25 - eps / 2.0, 0.25 + eps / 2.0, 0.5, 1.0], w1_point)
}

pub fn u1(eps: f64) -> Result<StepGraphon> {
    check_eps(eps)?;
    let c = corner_value(eps);
    StepGraphon::new(vec![0.5, 0.5], vec![vec![c, 1.0], vec![1.0, c]])
}

fn u2_point(eps: f64, x: f64, y: f64) -> f64 {
    let mut total = 0.0;
    for a in [0.0, 1.0] {
        for b in [0.0, 1.0] {
            total += w1_point(eps, (x + a) / 2.0, (y + b) / 2.0);
        }
    }
    total / 4.0
}

/// Average of the four half-scale copies of `W1`; constant on the blocks
/// `[0, ½−ε], [½±ε], [½+ε, 1]`.
pub fn u2(eps: f64) -> Result<StepGraphon> {
    check_eps(eps)?;
    midpoint_blocks(eps, &[0.0, 0.5 - eps, 0.5 + eps, 1.0], u2_point)
}

/// Area of `[x0,x1]×[y0,y1] ∩ {x + y ≥ s}`.
pub fn area_above(x: (f64, f64), y: (f64, f64), s: f64) -> f64 {
    let h = y.1 - y.0;
    let f = |t: f64| (y.1 - s + t).clamp(0.0, h);
    let mut cuts = vec![x.0, x.1];
    for k in [s - y.1, s - y.0] {
        if k > x.0 && k < x.1 {
            cuts.push(k);
        }
    }
    cuts.sort_by(f64::total_cmp);
    cuts.windows(2).map(|w| 0.5 * (f(w[0]) + f(w[1])) * (w[1] - w[0])).sum()
}

fn split(lo: f64, hi: f64, cuts: &[f64]) -> Vec<f64> {
    let mut pts = vec![lo];
    pts.extend(cuts.iter().copied().filter(|&c| c > lo && c < hi));
    pts.push(hi);
    pts
}

/// Exact `∫_{[x0,x1]×[y0,y1]} W2`.
pub fn w2_rect_exact(eps: f64, x: (f64, f64), y: (f64, f64)) -> f64 {
    let b = breakpoints(eps);
    let xs = split(x.0, x.1, &b);
    let ys = split(y.0, y.1, &b);
    let mut total = 0.0;
    for xw in xs.windows(2) {
        for yw in ys.windows(2) {
            let (rx, ry) = ((xw[0], xw[1]), (yw[0], yw[1]));
            let area = (rx.1 - rx.0) * (ry.1 - ry.0);
            if area <= 0.0 {
                continue;
            }
            let (mx, my) = (0.5 * (rx.0 + rx.1), 0.5 * (ry.0 + ry.1));
            let outside = w1_point(eps, mx, my);
            let (s, inside) = if mx < 0.5 && my < 0.5 {
                (0.5, w1_point(eps, mx + 0.5, my + 0.5))
            } else if mx > 0.5 && my > 0.5 {
                (1.5, w1_point(eps, mx - 0.5, my - 0.5))
            } else {
                total += area * outside;
                continue;
            };
            let a = area_above(rx, ry, s);
            total += a * inside + (area - a) * outside;
        }
    }
    total
}

/// `W2` as a step graphon on the `ε` grid joined with the breakpoints of
/// `W1`, each block holding the exact average of `W2` over it.
pub fn w2(eps: f64) -> Result<StepGraphon> {
    check_eps(eps)?;
    let n = (1.0 / eps).round() as usize;
    let mut cuts: Vec<f64> = (0..=n).map(|i| i as f64 * eps).collect();
    cuts.extend(breakpoints(eps));
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let k = cuts.len() - 1;
    let weights: Vec<f64> = cuts.windows(2).map(|w| w[1] - w[0]).collect();
    let mut values = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in i..k {
            let v = w2_rect_exact(eps, (cuts[i], cuts[i + 1]), (cuts[j], cuts[j + 1])) / (weights[i] * weights[j]);
            let v = v.clamp(0.0, 1.0);
            values[i][j] = v;
            values[j][i] = v;
        }
    }
    StepGraphon::new(weights, values)
}

/// `∫_{[0,1]×[½−ε,½+ε]} U2`.
pub fn u2_strip_integral(eps: f64) -> Result<f64> {
    Ok(u2(eps)?.rect_integral((0.0, 1.0), (0.5 - eps, 0.5 + eps)))
}

/// Linear piece `(y0, y1, c(y0+), c(y1−))` of a column profile.
type Piece = (f64, f64, f64, f64);

/// Column profile `y ↦ ∫_{[0,½]} W2(x,y) dx` on `[0,½]` and
/// `y ↦ ∫_{[½,1]} W1(x,y) dx` on `[½,1]`, linear between knots.
fn column_profile(eps: f64) -> Vec<Piece> {
    let b = breakpoints(eps);
    let mut knots = b.clone();
    for &t in &b {
        knots.push(0.5 - t);
        knots.push(1.5 - t);
    }
    knots.retain(|&t| (0.0..=1.0).contains(&t));
    knots.sort_by(f64::total_cmp);
    knots.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
    let column = |y: f64| -> f64 {
        let (lo, hi, f): (f64, f64, PointFn) = if y < 0.5 { (0.0, 0.5, w2_point) } else { (0.5, 1.0, w1_point) };
        let mut cuts = b.clone();
        cuts.push(0.5 - y);
        cuts.push(1.5 - y);
        cuts.sort_by(f64::total_cmp);
        let xs = split(lo, hi, &cuts);
        xs.windows(2).map(|w| (w[1] - w[0]) * f(eps, 0.5 * (w[0] + w[1]), y)).sum()
    };
    knots
        .windows(2)
        .map(|w| {
            let (y0, y1) = (w[0], w[1]);
            let h = y1 - y0;
            let (p, q) = (column(y0 + h / 3.0), column(y0 + 2.0 * h / 3.0));
            (y0, y1, 2.0 * p - q, 2.0 * q - p)
        })
        .collect()
}

/// `(|{c > λ}|, ∫ (c − λ)₊)` over the pieces.
fn above(pieces: &[Piece], lambda: f64) -> (f64, f64) {
    let mut measure = 0.0;
    let mut excess = 0.0;
    for &(y0, y1, c0, c1) in pieces {
        let h = y1 - y0;
        let (d0, d1) = (c0 - lambda, c1 - lambda);
        if d0 <= 0.0 && d1 <= 0.0 {
            continue;
        }
        if d0 >= 0.0 && d1 >= 0.0 {
            measure += h;
            excess += 0.5 * (d0 + d1) * h;
        } else {
            let pos = d0.max(d1);
            let len = h * pos / (d0 - d1).abs();
            measure += len;
            excess += 0.5 * pos * len;
        }
    }
    (measure, excess)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnBound {
    pub eps: f64,
    /// `sup (∫_{[0,½]×A} W2 + ∫_{[½,1]×B} W1)` over `|A ∪ B| = 2ε`.
    pub sup: f64,
    /// `ε + sup`.
    pub bound: f64,
    pub ratio: f64,
}

/// Maximizes the column integral over sets of measure `2ε` by filling the
/// highest columns first, on the exact piecewise linear column profile.
pub fn column_bound(eps: f64) -> Result<ColumnBound> {
    check_eps(eps)?;
    let pieces = column_profile(eps);
    let target = 2.0 * eps;
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if above(&pieces, mid).0 > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (m, excess) = above(&pieces, hi);
    let sup = excess + hi * m + hi * (target - m);
    let bound = eps + sup;
    Ok(ColumnBound { eps, sup, bound, ratio: bound / eps })
}

/// Largest gap between the `W2` raster and the exact geometry over products
/// of the defining intervals.
pub fn raster_agreement(eps: f64) -> Result<f64> {
    let raster = w2(eps)?;
    let intervals = [
        (0.0, 0.5),
        (0.5, 1.0),
        (0.0, 1.0),
        (0.0, 0.25 - eps / 2.0),
        (0.25 - eps / 2.0, 0.25 + eps / 2.0),
        (0.25 + eps / 2.0, 0.5),
        (0.5 - eps, 0.5 + eps),
    ];
    let mut worst = 0.0f64;
    for &x in &intervals {
        for &y in &intervals {
            worst = worst.max((raster.rect_integral(x, y) - w2_rect_exact(eps, x, y)).abs());
        }
    }
    Ok(worst)
}
