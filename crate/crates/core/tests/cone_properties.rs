mod common;

use common::{cone_sample, operator_family, rng, sigma_k_subsets};
use garding::cone::{elementary_symmetric, sigma_k, ConeDescriptor, SymmetricOperator};
use proptest::prelude::*;

#[test]
fn sigma_k_matches_subset_enumeration() {
    let mut r = rng(11);
    for n in 1..=6 {
        for _ in 0..200 {
            let mu: Vec<f64> = (0..n)
                .map(|_| rand::Rng::gen_range(&mut r, -3.0..3.0))
                .collect();
            for k in 1..=n {
                let want = sigma_k_subsets(&mu, k);
                let got = sigma_k(&mu, k).unwrap();
                let scale = mu
                    .iter()
                    .map(|v| v.abs())
                    .fold(1.0, f64::max)
                    .powi(k as i32);
                assert!(
                    (got - want).abs() <= 1e-12 * scale,
                    "n={n} k={k} {got} vs {want}"
                );
            }
        }
    }
}

#[test]
fn elementary_symmetric_pads_with_zeros() {
    assert_eq!(
        elementary_symmetric(&[1.0, 2.0], 4),
        vec![1.0, 3.0, 2.0, 0.0, 0.0]
    );
}

#[test]
fn hessian_matches_gradient_differences() {
    let mut r = rng(5);
    for op in operator_family() {
        for _ in 0..50 {
            let mu = cone_sample(&op, &mut r, 0.2);
            let hess = op.hessian(&mu).unwrap();
            for j in 0..op.n {
                let step = 1e-5;
                let (mut p, mut m) = (mu.clone(), mu.clone());
                p[j] += step;
                m[j] -= step;
                let (gp, gm) = (op.gradient(&p).unwrap(), op.gradient(&m).unwrap());
                for i in 0..op.n {
                    let fd = (gp[i] - gm[i]) / (2.0 * step);
                    assert!(
                        (fd - hess[(i, j)]).abs() < 1e-5 * (1.0 + hess[(i, j)].abs()),
                        "{op:?} {mu:?}"
                    );
                }
            }
        }
    }
}

#[test]
fn pair_coefficients_are_nonpositive() {
    let mut r = rng(6);
    for op in operator_family() {
        for _ in 0..100 {
            let mut mu = cone_sample(&op, &mut r, 0.05);
            mu.sort_by(|a, b| b.total_cmp(a));
            let pc = op.pair_coefficients(&mu).unwrap();
            assert!(pc.offdiag.iter().all(|v| *v <= 1e-14), "{op:?} {mu:?}");
        }
    }
}

#[test]
fn ray_values_grow_without_bound() {
    let op = SymmetricOperator::log_sigma_k(3, 2).unwrap();
    let mu = [1.0, 0.5, -0.2];
    for j in 0..3 {
        let vals: Vec<f64> = [1e2, 1e4, 1e6]
            .iter()
            .map(|t| {
                let mut p = mu.to_vec();
                p[j] += t;
                op.value(&p).unwrap()
            })
            .collect();
        assert!(vals[0] < vals[1] && vals[1] < vals[2] && vals[2] > 10.0);
        assert_eq!(op.ray_limit(&mu, j).unwrap(), f64::INFINITY);
    }
}

fn in_gamma(n: usize, k: usize, mu: &[f64]) -> bool {
    ConeDescriptor::gamma_k(n, k).unwrap().contains(mu)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn cones_are_nested(mu in proptest::collection::vec(-2.0f64..3.0, 1..=6)) {
        let n = mu.len();
        for k in 2..=n {
            if in_gamma(n, k, &mu) {
                prop_assert!(in_gamma(n, k - 1, &mu));
            }
        }
    }

    #[test]
    fn t_cone_contains_positive_orthant(mu in proptest::collection::vec(0.01f64..3.0, 2..=5)) {
        let n = mu.len();
        prop_assert!(ConeDescriptor::pullback_by_t(n).unwrap().contains(&mu));
    }

    #[test]
    fn sorted_gradients_are_ordered(mu in proptest::collection::vec(-1.0f64..3.0, 4), k in 1usize..=4) {
        let op = SymmetricOperator::log_sigma_k(4, k).unwrap();
        let mut mu = mu;
        mu.sort_by(|a, b| b.total_cmp(a));
        prop_assume!(op.cone.contains(&mu));
        let g = op.gradient(&mu).unwrap();
        for w in g.windows(2) {
            prop_assert!(w[0] <= w[1] * (1.0 + 1e-12));
        }
    }
}
