mod common;

use chanprobe_core::gpr::{gram, kernel, posterior, solve_spd, KernelParams, Round};
use common::{adjugate_inverse, mat_vec, oracle_posterior};
use proptest::prelude::*;

fn strictly_increasing(max_len: usize) -> impl Strategy<Value = Vec<u64>> {
    prop::collection::vec(1u64..4, 1..=max_len).prop_flat_map(|gaps| {
        (0u64..20).prop_map(move |start| {
            gaps.iter()
                .scan(start, |t, &g| {
                    let cur = *t;
                    *t += g;
                    Some(cur)
                })
                .collect()
        })
    })
}

#[test]
fn three_point_gram_solve_matches_adjugate() {
    let p = KernelParams::default();
    let g = gram(&[Round(0), Round(1), Round(2)], &p).unwrap();
    let dense: Vec<Vec<f64>> = (0..3)
        .map(|i| (0..3).map(|j| g.get(i, j)).collect())
        .collect();
    let inv = adjugate_inverse(&dense);
    for rhs in [[1.0, 0.0, 0.0], [0.3, 0.7, 0.1], [-1.0, 2.0, 0.5]] {
        let x = solve_spd(&g, &rhs).unwrap();
        let y = mat_vec(&inv, &rhs);
        for (a, b) in x.iter().zip(&y) {
            assert!((a - b).abs() <= 1e-9, "{x:?} vs {y:?}");
        }
        let back = g.mul_vec(&x);
        let norm = rhs.iter().map(|v| v * v).sum::<f64>().sqrt();
        let resid = back
            .iter()
            .zip(&rhs)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        assert!(resid <= 1e-9 * norm);
    }
}

#[test]
fn constant_history_extrapolation_by_window() {
    // zero-prior one-step extrapolation of a constant 0.4 history, per window length
    let p = KernelParams::default();
    let mut prev = None;
    for w in 1..=4u64 {
        let times: Vec<f64> = (10 - w..10).map(|t| t as f64).collect();
        let loads = vec![0.4; w as usize];
        let history: Vec<(Round, f64)> = (10 - w..10).map(|t| (Round(t), 0.4)).collect();
        let got = posterior(&history, Round(10), &p).unwrap();
        let (mean, var) = oracle_posterior(&times, &loads, 10.0, 1.0, 1e-8);
        assert!((got.mean - mean).abs() <= 1e-9);
        assert!((got.variance - var).abs() <= 1e-9);
        assert!(got.mean > 0.0 && got.mean <= 0.4 + 1e-9);
        if let Some(pv) = prev {
            assert!(
                got.variance <= pv,
                "more history never raises variance here"
            );
        }
        prev = Some(got.variance);
    }
}

proptest! {
    #[test]
    fn kernel_is_symmetric_and_bounded(a in 0u64..1000, b in 0u64..1000, l in 0.1f64..10.0) {
        let p = KernelParams::new(l, 1e-8).unwrap();
        let k = kernel(Round(a), Round(b), &p);
        prop_assert_eq!(k, kernel(Round(b), Round(a), &p));
        prop_assert!((0.0..=1.0).contains(&k));
    }

    #[test]
    fn solve_matches_adjugate_oracle(
        times in strictly_increasing(4).prop_filter("2..=4 points", |t| t.len() >= 2),
        loads in prop::collection::vec(0.0f64..=1.0, 4),
        ahead in 0u64..5,
    ) {
        let p = KernelParams::default();
        let history: Vec<(Round, f64)> = times.iter().zip(&loads).map(|(&t, &l)| (Round(t), l)).collect();
        let query = times.last().unwrap() + ahead;
        let got = posterior(&history, Round(query), &p).unwrap();
        let tf: Vec<f64> = times.iter().map(|&t| t as f64).collect();
        let (mean, var) = oracle_posterior(&tf, &loads[..times.len()], query as f64, 1.0, 1e-8);
        prop_assert!((got.mean - mean).abs() <= 1e-9, "mean {} vs {}", got.mean, mean);
        prop_assert!((got.variance - var.max(0.0)).abs() <= 1e-9, "var {} vs {}", got.variance, var);
    }

    #[test]
    fn interpolates_observed_points(
        times in strictly_increasing(4),
        loads in prop::collection::vec(0.0f64..=1.0, 4),
    ) {
        let p = KernelParams::default();
        let history: Vec<(Round, f64)> = times.iter().zip(&loads).map(|(&t, &l)| (Round(t), l)).collect();
        // queries must not precede the history, so check the last point directly
        // and every point through the leading sub-histories
        for end in 1..=history.len() {
            let (t, l) = history[end - 1];
            let post = posterior(&history[..end], t, &p).unwrap();
            prop_assert!((post.mean - l).abs() <= 1e-5);
        }
    }

    #[test]
    fn variance_is_bounded(
        times in strictly_increasing(4),
        loads in prop::collection::vec(0.0f64..=1.0, 4),
        ahead in 0u64..200,
    ) {
        let p = KernelParams::default();
        let history: Vec<(Round, f64)> = times.iter().zip(&loads).map(|(&t, &l)| (Round(t), l)).collect();
        let post = posterior(&history, Round(times.last().unwrap() + ahead), &p).unwrap();
        prop_assert!(post.variance >= 0.0 && post.variance <= 1.0 + p.jitter());
        prop_assert!((0.0..=1.0).contains(&post.clamped_mean()));
    }

    #[test]
    fn single_point_variance_grows_with_staleness(tau in 0u64..50, d1 in 0u64..10, d2 in 0u64..10, load in 0.0f64..=1.0) {
        let p = KernelParams::default();
        let (near, far) = (d1.min(d2), d1.max(d2));
        let a = posterior(&[(Round(tau), load)], Round(tau + near), &p).unwrap();
        let b = posterior(&[(Round(tau), load)], Round(tau + far), &p).unwrap();
        prop_assert!(b.variance >= a.variance);
    }

    #[test]
    fn reverts_to_prior_after_long_gaps(
        times in strictly_increasing(4),
        loads in prop::collection::vec(0.0f64..=1.0, 4),
    ) {
        let p = KernelParams::default();
        let history: Vec<(Round, f64)> = times.iter().zip(&loads).map(|(&t, &l)| (Round(t), l)).collect();
        let post = posterior(&history, Round(times.last().unwrap() + 50), &p).unwrap();
        prop_assert!(post.mean.abs() < 1e-10);
        prop_assert!(post.variance > 1.0 - 1e-10);
    }
}
