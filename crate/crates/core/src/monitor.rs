//! Diagnostics that track the a priori estimates along solver states.
//!
//! Nothing here aborts a solve. Snapshots annotate path reports, the bound fit
//! measures `sup|∇²u| ≤ C (sup|∂u|² + 1)` over a family of states, and the
//! `Q` field evaluates the test function of the second-order estimate.

use crate::error::{Error, Result};
use crate::geometry::{gradient_sup, omega_u_at, real_hessian_at, real_hessian_sup};
use crate::grid::ScalarField;
use crate::pencil::{hermitian_eigen, linearization_coeffs, pairing, SpectralData};
use crate::solver::{ProblemSpec, SolverState};
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Scalar summary of one state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateSnapshot {
    /// `sup|u|`.
    pub c0_norm: f64,
    /// `sup|∂u|` with Euclidean coordinate gradients.
    pub grad_sup: f64,
    /// `K = grad_sup² + 1`.
    pub k_value: f64,
    /// `sup|∇²u|`, Frobenius norm of the discrete Hessian.
    pub hessian_sup: f64,
    /// Largest eigenvalue of the discrete real Hessian over all points.
    pub lambda1_max: f64,
    /// `min_x Σ_i f_i(μ(x))`.
    pub f_sum_min: f64,
    /// `min_x tr_χ ω_u`.
    pub trace_min: f64,
    pub c_value: f64,
    pub t_value: f64,
}

impl EstimateSnapshot {
    /// Column names in the order of [`EstimateSnapshot::values`].
    pub const COLUMNS: [&'static str; 7] = [
        "c0_norm",
        "grad_sup",
        "k_value",
        "hessian_sup",
        "lambda1_max",
        "f_sum_min",
        "trace_min",
    ];

    pub fn values(&self) -> [f64; 7] {
        [
            self.c0_norm,
            self.grad_sup,
            self.k_value,
            self.hessian_sup,
            self.lambda1_max,
            self.f_sum_min,
            self.trace_min,
        ]
    }

    /// `hessian_sup / K`.
    pub fn ratio(&self) -> f64 {
        self.hessian_sup / self.k_value
    }
}

fn largest_eigenvalue(m: &DMatrix<f64>) -> f64 {
    m.clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Compute an [`EstimateSnapshot`]; fails with [`Error::NotAdmissible`] when
/// some point of `state` leaves the cone.
pub fn snapshot(problem: &ProblemSpec, state: &SolverState) -> Result<EstimateSnapshot> {
    let geom = &problem.geometry;
    let grid = &geom.grid;
    let per_point: Vec<Result<(f64, f64, f64)>> = (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            let g = omega_u_at(geom, &problem.omega[idx], &state.u.values, idx);
            let (mu, _) = hermitian_eigen(&g);
            let grad = problem
                .operator
                .gradient(&mu)
                .map_err(|_| Error::NotAdmissible {
                    point: idx,
                    coords: grid.coords(idx),
                })?;
            let lambda1 = largest_eigenvalue(&real_hessian_at(geom, &state.u, idx));
            Ok((grad.iter().sum(), mu.iter().sum(), lambda1))
        })
        .collect();
    let mut f_sum_min = f64::INFINITY;
    let mut trace_min = f64::INFINITY;
    let mut lambda1_max = f64::NEG_INFINITY;
    for p in per_point {
        let (fs, tr, l1) = p?;
        f_sum_min = f_sum_min.min(fs);
        trace_min = trace_min.min(tr);
        lambda1_max = lambda1_max.max(l1);
    }
    let grad_sup = gradient_sup(geom, &state.u);
    Ok(EstimateSnapshot {
        c0_norm: state.u.sup_norm(),
        grad_sup,
        k_value: grad_sup * grad_sup + 1.0,
        hessian_sup: real_hessian_sup(geom, &state.u),
        lambda1_max,
        f_sum_min,
        trace_min,
        c_value: state.c,
        t_value: state.t,
    })
}

/// Result of [`quadratic_bound_fit`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundFit {
    /// Smallest `C` with `hessian_sup ≤ C·K` on every snapshot.
    pub c_fit: f64,
    /// The ratio `hessian_sup / K` at the binding snapshot; equal to `c_fit`.
    pub worst_ratio: f64,
    /// Index of the binding snapshot.
    pub worst_index: usize,
}

pub fn quadratic_bound_fit(snapshots: &[EstimateSnapshot]) -> Result<BoundFit> {
    if snapshots.is_empty() {
        return Err(Error::Argument(
            "quadratic_bound_fit needs at least one snapshot".into(),
        ));
    }
    let mut fit = BoundFit {
        c_fit: 0.0,
        worst_ratio: 0.0,
        worst_index: 0,
    };
    for (i, s) in snapshots.iter().enumerate() {
        let r = s.ratio();
        if !r.is_finite() {
            return Err(Error::Argument(format!(
                "snapshot {i} has a non-finite ratio"
            )));
        }
        if r > fit.c_fit {
            fit = BoundFit {
                c_fit: r,
                worst_ratio: r,
                worst_index: i,
            };
        }
    }
    Ok(fit)
}

/// Which branch of the subsolution dichotomy holds at a point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DichotomyCase {
    /// `⟨F'(A), B − A⟩ > θ 𝓕(A)`.
    GradientCase,
    /// `f_i(A) > θ 𝓕(A)` for every `i`; checked first.
    UniformCase,
    Neither,
}

/// Classify each point for the pair `A = ω_u` (from `state`), `B = ω_{u̲}`.
pub fn subsolution_dichotomy_probe(
    problem: &ProblemSpec,
    state: &SolverState,
    u_underline: &ScalarField,
    theta: f64,
) -> Result<Vec<DichotomyCase>> {
    let geom = &problem.geometry;
    let grid = &geom.grid;
    let op = &problem.operator;
    let cases: Vec<Result<DichotomyCase>> = (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            let a = omega_u_at(geom, &problem.omega[idx], &state.u.values, idx);
            let b = omega_u_at(geom, &problem.omega[idx], &u_underline.values, idx);
            let outside = || Error::NotAdmissible {
                point: idx,
                coords: grid.coords(idx),
            };
            if !op.cone.contains(&hermitian_eigen(&b).0) {
                return Err(outside());
            }
            let (mu, frame) = hermitian_eigen(&a);
            let grad = op.gradient(&mu).map_err(|_| outside())?;
            let f_sum: f64 = grad.iter().sum();
            if grad.iter().all(|&fi| fi > theta * f_sum) {
                return Ok(DichotomyCase::UniformCase);
            }
            let p = linearization_coeffs(op, &SpectralData { mu, frame })?;
            if pairing(&p, &(b - a)) > theta * f_sum {
                Ok(DichotomyCase::GradientCase)
            } else {
                Ok(DichotomyCase::Neither)
            }
        })
        .collect();
    cases.into_iter().collect()
}

/// Terms of `Q = log λ₁ + ξ(|ρ|²) + η(|∂u|²) + e^{−Au}` at one point of `Ω = {λ₁ > 0}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QPoint {
    pub index: usize,
    pub rho_sq: f64,
    pub grad_sq: f64,
    pub log_lambda1: f64,
    pub xi: f64,
    pub eta: f64,
    pub exp_term: f64,
    pub q: f64,
}

/// `Q` evaluated on `Ω`, with `N = sup|∇²u| + 1`, `K = sup|∂u|² + 1`,
/// `ρ = ∇²u + N·χ`, `ξ(s) = −¼ log(5N² − s)` and `η(s) = −¼ log(2K − s)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QDiagnostics {
    pub a: f64,
    pub n_const: f64,
    pub k_const: f64,
    pub points: Vec<QPoint>,
    /// Entry of `points` with the largest finite `Q`. `Q` is undefined where
    /// `|ρ|² ≥ 5N²`; those points are listed in `xi_range_violations`.
    pub max_point: Option<QPoint>,
    /// Points where `ξ'(|ρ|²)` leaves `[1/(20N²), 1/(4N²)]`.
    pub xi_range_violations: Vec<usize>,
    /// Points where `η'(|∂u|²)` leaves `[1/(8K), 1/(4K)]`.
    pub eta_range_violations: Vec<usize>,
    /// Points where `ρ` is not positive definite.
    pub rho_violations: Vec<usize>,
}

impl QDiagnostics {
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `Q` on the full grid, `NaN` outside `Ω`.
    pub fn q_values(&self, len: usize) -> ScalarField {
        let mut v = vec![f64::NAN; len];
        for p in &self.points {
            v[p.index] = p.q;
        }
        ScalarField::new(v)
    }
}

pub fn q_field(problem: &ProblemSpec, state: &SolverState, a: f64) -> QDiagnostics {
    let geom = &problem.geometry;
    let u = &state.u;
    let n_const = real_hessian_sup(geom, u) + 1.0;
    let grad = gradient_sup(geom, u);
    let k_const = grad * grad + 1.0;
    let d = geom.grid.axes();
    let n2 = n_const * n_const;
    struct Eval {
        point: Option<QPoint>,
        xi_bad: bool,
        eta_bad: bool,
        rho_bad: bool,
    }
    let evals: Vec<Eval> = (0..geom.grid.len())
        .into_par_iter()
        .map(|idx| {
            let hess = real_hessian_at(geom, u, idx);
            let lambda1 = largest_eigenvalue(&hess);
            if !(lambda1 > 0.0) {
                return Eval {
                    point: None,
                    xi_bad: false,
                    eta_bad: false,
                    rho_bad: false,
                };
            }
            let rho = &hess + DMatrix::identity(d, d) * n_const;
            let rho_sq = rho.iter().map(|v| v * v).sum::<f64>();
            let rho_min = rho.symmetric_eigen().eigenvalues.min();
            let du = geom.grid.derivatives(&u.values, idx);
            let grad_sq: f64 = du.first[..d].iter().map(|v| v * v).sum();
            let xi = -0.25 * (5.0 * n2 - rho_sq).ln();
            let eta = -0.25 * (2.0 * k_const - grad_sq).ln();
            let xi_prime = 0.25 / (5.0 * n2 - rho_sq);
            let eta_prime = 0.25 / (2.0 * k_const - grad_sq);
            let xi_bad = !(xi_prime >= 1.0 / (20.0 * n2) && xi_prime <= 1.0 / (4.0 * n2));
            let eta_bad =
                !(eta_prime >= 1.0 / (8.0 * k_const) && eta_prime <= 1.0 / (4.0 * k_const));
            let log_lambda1 = lambda1.ln();
            let exp_term = (-a * u.values[idx]).exp();
            Eval {
                point: Some(QPoint {
                    index: idx,
                    rho_sq,
                    grad_sq,
                    log_lambda1,
                    xi,
                    eta,
                    exp_term,
                    q: log_lambda1 + xi + eta + exp_term,
                }),
                xi_bad,
                eta_bad,
                rho_bad: !(rho_min > 0.0),
            }
        })
        .collect();
    let mut out = QDiagnostics {
        a,
        n_const,
        k_const,
        points: Vec::new(),
        max_point: None,
        xi_range_violations: Vec::new(),
        eta_range_violations: Vec::new(),
        rho_violations: Vec::new(),
    };
    for e in evals {
        let Some(p) = e.point else { continue };
        if e.xi_bad {
            out.xi_range_violations.push(p.index);
        }
        if e.eta_bad {
            out.eta_range_violations.push(p.index);
        }
        if e.rho_bad {
            out.rho_violations.push(p.index);
        }
        if p.q.is_finite() && out.max_point.is_none_or(|m| p.q > m.q) {
            out.max_point = Some(p);
        }
        out.points.push(p);
    }
    out
}
