mod common;

use common::{geometry, rng, smooth_field};
use garding::catalog::{AnalyticField, Background};
use garding::cone::SymmetricOperator;
use garding::geometry::{real_hessian_at, Preset};
use garding::grid::ScalarField;
use garding::monitor::{
    q_field, quadratic_bound_fit, snapshot, subsolution_dichotomy_probe, DichotomyCase,
};
use garding::solver::{
    continuity_solve, manufactured_problem_analytic, PathControls, ProblemSpec, RhsMode,
    SolverState,
};

fn solved() -> (ProblemSpec, SolverState) {
    let geom = geometry(2, 8, Preset::PerturbedJ { amplitude: 0.05 });
    let omega = Background::Wave { amplitude: 0.2 }
        .evaluate(&geom.grid)
        .unwrap();
    let u_star = AnalyticField::CosProduct {
        amplitude: 0.03,
        axes: [0, 2],
        freq: 1,
        phase: 0.0,
    };
    let p = manufactured_problem_analytic(
        geom,
        omega,
        SymmetricOperator::log_sigma_k(2, 2).unwrap(),
        &u_star,
        RhsMode::Analytic,
    )
    .unwrap();
    let (s, _) = continuity_solve(&p, &PathControls::default()).unwrap();
    (p, s)
}

#[test]
fn solved_state_has_positive_trace_and_f_sum() {
    let (p, s) = solved();
    let snap = snapshot(&p, &s).unwrap();
    assert!(snap.trace_min > 0.0 && snap.f_sum_min > 0.0);
    assert!(snap.k_value >= 1.0 && snap.hessian_sup >= 0.0);
}

#[test]
fn fit_over_scaled_states_is_the_max_ratio() {
    let geom = geometry(2, 6, Preset::FlatStandard);
    let omega = Background::Identity.evaluate(&geom.grid).unwrap();
    let p = ProblemSpec::stationary(geom, omega, SymmetricOperator::log_sigma_k(2, 1).unwrap())
        .unwrap();
    let u = smooth_field(&p.geometry.grid, 0.02, &mut rng(41));
    let snaps: Vec<_> = [1.0, 2.0, 3.0]
        .iter()
        .map(|&k| {
            snapshot(
                &p,
                &SolverState {
                    u: u.scaled(k),
                    c: 0.0,
                    t: 1.0,
                    residual_norm: 0.0,
                    newton_iters: 0,
                },
            )
            .unwrap()
        })
        .collect();
    let fit = quadratic_bound_fit(&snaps).unwrap();
    let grid = &p.geometry.grid;
    let mut expected: f64 = 0.0;
    for k in [1.0, 2.0, 3.0] {
        let v = u.scaled(k);
        let hess = (0..grid.len())
            .map(|i| real_hessian_at(&p.geometry, &v, i).norm())
            .fold(0.0, f64::max);
        let grad = (0..grid.len())
            .map(|i| {
                let d = grid.derivatives(&v.values, i);
                d.first.iter().map(|x| x * x).sum::<f64>().sqrt()
            })
            .fold(0.0, f64::max);
        expected = expected.max(hess / (grad * grad + 1.0));
    }
    assert!((fit.c_fit - expected).abs() <= 1e-12 * expected);
    assert_eq!(quadratic_bound_fit(&snaps).unwrap(), fit);
}

#[test]
fn dichotomy_on_solved_state() {
    let (p, s) = solved();
    let zero = ScalarField::zeros(&p.geometry.grid);
    let cases = subsolution_dichotomy_probe(&p, &s, &zero, 1e-3).unwrap();
    assert!(cases.iter().all(|c| *c != DichotomyCase::Neither));
    let same = subsolution_dichotomy_probe(&p, &s, &s.u, 0.49).unwrap();
    assert!(same.iter().all(|c| *c != DichotomyCase::GradientCase));
}

#[test]
fn q_field_exp_term_grows_with_a_for_negative_u() {
    let (p, s) = solved();
    assert!(s.u.max() <= 0.0);
    let (q1, q2) = (q_field(&p, &s, 1.0), q_field(&p, &s, 3.0));
    assert_eq!(q1.points.len(), q2.points.len());
    for (a, b) in q1.points.iter().zip(&q2.points) {
        assert!(b.exp_term >= a.exp_term);
        assert_eq!(a.log_lambda1, b.log_lambda1);
    }
    assert!(q1.eta_range_violations.is_empty());
    assert!(q1.max_point.is_some());
}
