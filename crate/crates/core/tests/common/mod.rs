#![allow(dead_code, clippy::needless_range_loop)]

use graphon::{SignedStepKernel, StepGraphon};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_weights(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..k).map(|_| rng.gen_range(0.05..1.0)).collect();
    let s: f64 = raw.iter().sum();
    let mut w: Vec<f64> = raw.iter().map(|x| x / s).collect();
    let head: f64 = w[..k - 1].iter().sum();
    w[k - 1] = 1.0 - head;
    w
}

pub fn random_symmetric(rng: &mut ChaCha8Rng, k: usize, lo: f64, hi: f64) -> Vec<Vec<f64>> {
    let mut v = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in i..k {
            let x = rng.gen_range(lo..hi);
            v[i][j] = x;
            v[j][i] = x;
        }
    }
    v
}

pub fn random_graphon(rng: &mut ChaCha8Rng, max_blocks: usize) -> StepGraphon {
    let k = rng.gen_range(1..=max_blocks);
    let w = random_weights(rng, k);
    StepGraphon::new(w, random_symmetric(rng, k, 0.0, 1.0)).unwrap()
}

pub fn random_uniform_graphon(rng: &mut ChaCha8Rng, n: usize) -> StepGraphon {
    StepGraphon::uniform(random_symmetric(rng, n, 0.0, 1.0)).unwrap()
}

pub fn random_kernel(rng: &mut ChaCha8Rng, max_blocks: usize) -> SignedStepKernel {
    let k = rng.gen_range(1..=max_blocks);
    let w = random_weights(rng, k);
    SignedStepKernel::new(w, random_symmetric(rng, k, -1.0, 1.0)).unwrap()
}

/// Measure of `[lo, hi] ∩ [a, b]`.
pub fn overlap(lo: f64, hi: f64, a: f64, b: f64) -> f64 {
    (hi.min(b) - lo.max(a)).max(0.0)
}

/// `∫_{[x0,x1]×[y0,y1]} W` by summing block overlaps.
pub fn rect(w: &StepGraphon, x: (f64, f64), y: (f64, f64)) -> f64 {
    let mut cum = vec![0.0];
    for a in w.weights() {
        cum.push(cum.last().unwrap() + a);
    }
    let k = w.num_blocks();
    let mut total = 0.0;
    for i in 0..k {
        let ox = overlap(cum[i], cum[i + 1], x.0, x.1);
        if ox == 0.0 {
            continue;
        }
        for j in 0..k {
            total += ox * overlap(cum[j], cum[j + 1], y.0, y.1) * w.value(i, j);
        }
    }
    total
}

/// Values of `w` on the `n × n` cell grid, by midpoint lookup.
pub fn cell_values(w: &StepGraphon, n: usize) -> Vec<Vec<f64>> {
    let mut cum = vec![0.0];
    for a in w.weights() {
        cum.push(cum.last().unwrap() + a);
    }
    let block = |x: f64| (0..w.num_blocks()).find(|&i| w.weights()[i] > 0.0 && x < cum[i + 1]).unwrap();
    let mids: Vec<usize> = (0..n).map(|c| block((c as f64 + 0.5) / n as f64)).collect();
    mids.iter().map(|&i| mids.iter().map(|&j| w.value(i, j)).collect()).collect()
}

pub mod strategies {
    use graphon::measures::DiscreteMeasure;
    use graphon::{PartitionSpec, StepGraphon};
    use proptest::prelude::*;
    use proptest::test_runner::{Config, RngSeed};

    pub fn config(cases: u32) -> Config {
        Config { cases, rng_seed: RngSeed::Fixed(0x5eed), failure_persistence: None, ..Config::default() }
    }

    pub fn normalized(raw: Vec<f64>) -> Vec<f64> {
        let s: f64 = raw.iter().sum();
        let k = raw.len();
        let mut w: Vec<f64> = raw.iter().map(|x| x / s).collect();
        let head: f64 = w[..k - 1].iter().sum();
        w[k - 1] = 1.0 - head;
        w
    }

    pub fn symmetric(k: usize, upper: &[f64]) -> Vec<Vec<f64>> {
        let mut v = vec![vec![0.0; k]; k];
        let mut it = upper.iter();
        for i in 0..k {
            for j in i..k {
                let x = *it.next().unwrap();
                v[i][j] = x;
                v[j][i] = x;
            }
        }
        v
    }

    pub fn graphon(max_blocks: usize) -> impl Strategy<Value = StepGraphon> {
        (1..=max_blocks)
            .prop_flat_map(|k| {
                (prop::collection::vec(0.05..1.0f64, k), prop::collection::vec(0.0..=1.0f64, k * (k + 1) / 2))
            })
            .prop_map(|(w, v)| {
                let k = w.len();
                StepGraphon::new(normalized(w), symmetric(k, &v)).unwrap()
            })
    }

    /// Equal-mass graphon on `n` cells.
    pub fn uniform_graphon(n: usize) -> impl Strategy<Value = StepGraphon> {
        prop::collection::vec(0.0..=1.0f64, n * (n + 1) / 2)
            .prop_map(move |v| StepGraphon::uniform(symmetric(n, &v)).unwrap())
    }

    /// Random fractional partition of the blocks of `w` into at most
    /// `max_parts` parts.
    pub fn partition_of(w: &StepGraphon, max_parts: usize) -> impl Strategy<Value = PartitionSpec> {
        let a = w.weights().to_vec();
        let k = a.len();
        (1..=max_parts)
            .prop_flat_map(move |q| prop::collection::vec(0.01..1.0f64, k * q).prop_map(move |f| (q, f)))
            .prop_map(move |(q, f)| {
                let rows = (0..k)
                    .map(|i| {
                        let row = &f[i * q..(i + 1) * q];
                        let s: f64 = row.iter().sum();
                        row.iter().map(|x| a[i] * x / s).collect()
                    })
                    .collect();
                PartitionSpec::new(rows).unwrap()
            })
    }

    pub fn graphon_and_partition(
        max_blocks: usize,
        max_parts: usize,
    ) -> impl Strategy<Value = (StepGraphon, PartitionSpec)> {
        graphon(max_blocks).prop_flat_map(move |w| {
            let p = partition_of(&w, max_parts);
            (Just(w), p)
        })
    }

    /// Probability measure on at most `max_atoms` atoms of `[0, 1]`.
    pub fn measure(max_atoms: usize) -> impl Strategy<Value = DiscreteMeasure> {
        (1..=max_atoms)
            .prop_flat_map(|n| (prop::collection::vec(0.0..=1.0f64, n), prop::collection::vec(0.05..1.0f64, n)))
            .prop_map(|(x, m)| DiscreteMeasure::new(x, normalized(m)).unwrap())
    }
}
