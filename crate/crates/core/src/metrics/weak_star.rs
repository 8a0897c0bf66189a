use crate::graphon::StepGraphon;

/// Dyadic intervals of levels `0..=depth`, breadth first and left to right.
pub fn dyadic_intervals(depth: u32) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(signature_len(depth));
    for level in 0..=depth {
        let n = 1u64 << level;
        let h = 1.0 / n as f64;
        for i in 0..n {
            out.push((i as f64 * h, (i + 1) as f64 * h));
        }
    }
    out
}

/// Number of intervals `M = 2^{D+1} − 1`.
pub fn signature_len(depth: u32) -> usize {
    (1usize << (depth + 1)) - 1
}

/// `∫_{A_n × A_k} W` for all pairs of dyadic intervals, row-major.
pub fn rectangle_signature(w: &StepGraphon, depth: u32) -> Vec<f64> {
    let intervals = dyadic_intervals(depth);
    let overlaps: Vec<Vec<f64>> = intervals.iter().map(|&(lo, hi)| w.overlaps(lo, hi)).collect();
    let k = w.num_blocks();
    let left: Vec<Vec<f64>> =
        overlaps.iter().map(|o| (0..k).map(|j| (0..k).map(|i| o[i] * w.values()[i][j]).sum()).collect()).collect();
    let mut sig = Vec::with_capacity(intervals.len() * intervals.len());
    for l in &left {
        for o in &overlaps {
            sig.push(l.iter().zip(o).map(|(a, b)| a * b).sum());
        }
    }
    sig
}

/// `Σ_{n,k} 2^{−(n+k)} |a_{nk} − b_{nk}|` with 1-based indices.
pub fn signature_distance(a: &[f64], b: &[f64], depth: u32) -> f64 {
    let m = signature_len(depth);
    let weights: Vec<f64> = (1..=m).map(|n| 0.5f64.powi(n as i32)).collect();
    let mut total = 0.0;
    for n in 0..m {
        for k in 0..m {
            let idx = n * m + k;
            total += weights[n] * weights[k] * (a[idx] - b[idx]).abs();
        }
    }
    total
}

pub fn weak_star_distance(u: &StepGraphon, w: &StepGraphon, depth: u32) -> f64 {
    signature_distance(&rectangle_signature(u, depth), &rectangle_signature(w, depth), depth)
}
