mod common;

use common::strategies::*;
use graphon::measures::range_frequencies;
use graphon::{interval_coupling, l1_distance, Coupling, PartitionSpec, SignedStepKernel, StepFunction1D, StepGraphon};
use proptest::prelude::*;

fn l1_to(w: &StepGraphon, v: &StepGraphon) -> f64 {
    l1_distance(v, w, &interval_coupling(v, w)).unwrap()
}

/// `∫ (V − W)²` on the interval overlay.
fn l2sq_to(w: &StepGraphon, v: &StepGraphon) -> f64 {
    let c = interval_coupling(v, w);
    let mut total = 0.0;
    for i in 0..v.num_blocks() {
        for j in 0..w.num_blocks() {
            for k in 0..v.num_blocks() {
                for l in 0..w.num_blocks() {
                    let d = v.value(i, k) - w.value(j, l);
                    total += c.get(i, j) * c.get(k, l) * d * d;
                }
            }
        }
    }
    total
}

fn dyadic_chain(w: &StepGraphon, max_depth: u32) -> Vec<StepGraphon> {
    (0..=max_depth).map(|d| w.stepping(&PartitionSpec::dyadic(w.weights(), d).unwrap()).unwrap()).collect()
}

proptest! {
    #![proptest_config(config(128))]

    #[test]
    fn stepping_keeps_density((w, p) in graphon_and_partition(6, 4)) {
        let s = w.stepping(&p).unwrap();
        prop_assert!((s.edge_density() - w.edge_density()).abs() < 1e-10);
    }

    #[test]
    fn stepping_lowers_convex_integrals((w, p) in graphon_and_partition(6, 4)) {
        let s = w.stepping(&p).unwrap();
        let fs: [fn(f64) -> f64; 3] = [|x| x * x, |x| (x - 0.5).abs(), f64::exp];
        for f in fs {
            prop_assert!(s.int_f(f) <= w.int_f(f) + 1e-10);
        }
    }

    #[test]
    fn identity_stepping_is_identity(w in graphon(6)) {
        let s = w.stepping(&PartitionSpec::identity(w.weights())).unwrap();
        prop_assert_eq!(s.num_blocks(), w.num_blocks());
        for (a, b) in s.values().iter().flatten().zip(w.values().iter().flatten()) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn stepping_is_idempotent((w, p) in graphon_and_partition(6, 4)) {
        let s = w.stepping(&p).unwrap();
        let again = s.stepping(&PartitionSpec::identity(s.weights())).unwrap();
        for (a, b) in again.values().iter().flatten().zip(s.values().iter().flatten()) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn versions_keep_integrals_and_frequencies(
        w in (1usize..=8).prop_flat_map(uniform_graphon),
        seed in any::<u64>(),
    ) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let n = w.num_blocks();
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        let versions = [w.grid_version(n, &perm).unwrap(), w.interlace_version(n).unwrap()];
        let fw = range_frequencies(&w);
        for v in &versions {
            prop_assert!((v.edge_density() - w.edge_density()).abs() < 1e-12);
            prop_assert!((v.int_f(|x| x * x) - w.int_f(|x| x * x)).abs() < 1e-12);
            prop_assert!((v.int_f(f64::exp) - w.int_f(f64::exp)).abs() < 1e-12);
            prop_assert!(range_frequencies(v).approx_eq(&fw, 1e-15));
        }
    }

    #[test]
    fn dyadic_chain_reaches_grid_graphon(w in uniform_graphon(8)) {
        let chain = dyadic_chain(&w, 3);
        prop_assert!(l1_to(&w, &chain[3]) < 1e-12);
        // squared error is a projection residual, so it never rises
        let l2: Vec<f64> = chain.iter().map(|v| l2sq_to(&w, v)).collect();
        prop_assert!(l2.windows(2).all(|p| p[1] <= p[0] + 1e-12));
        // the L1 error can rise, but never above twice an earlier value
        let l1: Vec<f64> = chain.iter().map(|v| l1_to(&w, v)).collect();
        for m in 0..l1.len() {
            for n in 0..m {
                prop_assert!(l1[m] <= 2.0 * l1[n] + 1e-12);
            }
        }
    }

    #[test]
    fn block_mean_is_a_two_approximation(
        w in uniform_graphon(8),
        depth in 0u32..3,
        b in prop::collection::vec(0.0..=1.0f64, 16),
    ) {
        // cell values against the stepping's blockwise means
        let s = w.stepping(&PartitionSpec::dyadic(w.weights(), depth).unwrap()).unwrap();
        let parts = 1usize << depth;
        let per = 8 / parts;
        for l in 0..parts {
            for n in 0..parts {
                let a = s.value(l, n);
                let bb = b[l * parts + n];
                let (mut dev_a, mut dev_b, mut sum) = (0.0, 0.0, 0.0);
                for x in l * per..(l + 1) * per {
                    for y in n * per..(n + 1) * per {
                        let f = w.value(x, y);
                        dev_a += (f - a).abs();
                        dev_b += (f - bb).abs();
                        sum += f;
                    }
                }
                prop_assert!((sum / (per * per) as f64 - a).abs() < 1e-12);
                prop_assert!(dev_a <= 2.0 * dev_b + 1e-10);
            }
        }
    }

    #[test]
    fn graphon_json_round_trip(w in graphon(6)) {
        let text = serde_json::to_string(&w).unwrap();
        let back: StepGraphon = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back, w);
    }

    #[test]
    fn partition_and_coupling_json_round_trip((w, p) in graphon_and_partition(5, 4)) {
        let text = serde_json::to_string(&p).unwrap();
        let back: PartitionSpec = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(&back, &p);
        let c = Coupling::new(p.assignment().to_vec(), p.source_masses(), p.target_masses()).unwrap();
        let text = serde_json::to_string(&c).unwrap();
        let back: Coupling = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back, c);
        let s = w.stepping(&p).unwrap();
        let text = serde_json::to_string(&s).unwrap();
        let back: StepGraphon = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back, s);
    }
}

#[test]
fn l1_error_can_rise_along_a_dyadic_chain() {
    let w = StepGraphon::new(vec![57.0 / 64.0, 7.0 / 64.0], vec![vec![0.048, 0.0294], vec![0.0294, 0.3245]]).unwrap();
    let chain = dyadic_chain(&w, 6);
    let l1: Vec<f64> = chain.iter().map(|v| l1_to(&w, v)).collect();
    let l2: Vec<f64> = chain.iter().map(|v| l2sq_to(&w, v)).collect();
    assert!(l1[1] > l1[0] + 1e-3, "{l1:?}");
    assert!(l1[6] < 1e-12);
    assert!(l2.windows(2).all(|p| p[1] <= p[0] + 1e-15), "{l2:?}");
}

#[test]
fn kernel_and_step_function_json_round_trip() {
    let k = SignedStepKernel::new(vec![0.25, 0.75], vec![vec![-0.5, 0.25], vec![0.25, 1.0]]).unwrap();
    let back: SignedStepKernel = serde_json::from_str(&serde_json::to_string(&k).unwrap()).unwrap();
    assert_eq!(back, k);
    let f = StepFunction1D::new(vec![0.0, 0.5, 1.0], vec![0.0, 1.0]).unwrap();
    let back: StepFunction1D = serde_json::from_str(&serde_json::to_string(&f).unwrap()).unwrap();
    assert_eq!(back, f);
    let bad = r#"{"weights":[0.5,0.5],"values":[[0.0,2.0],[2.0,0.0]]}"#;
    assert!(serde_json::from_str::<SignedStepKernel>(bad).is_err());
}
