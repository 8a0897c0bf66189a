use crate::error::{GraphonError, Result};

/// `max(max_a min_b d(a,b), max_b min_a d(a,b))`.
pub fn hausdorff_distance<P, F>(a: &[P], b: &[P], d: F) -> Result<f64>
where
    F: Fn(&P, &P) -> f64,
{
    if a.is_empty() || b.is_empty() {
        return Err(GraphonError::EmptySet);
    }
    let directed = |x: &[P], y: &[P]| {
        x.iter().map(|p| y.iter().map(|q| d(p, q)).fold(f64::INFINITY, f64::min)).fold(0.0, f64::max)
    };
    Ok(directed(a, b).max(directed(b, a)))
}
