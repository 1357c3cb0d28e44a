//! Damped Newton–Krylov solution of `F(ω_u) = t·h + (1−t)·h₀ + c` along the
//! continuity path `t ∈ [0, 1]`.
//!
//! Each Newton step solves the bordered system
//!
//! ```text
//! [ L   −1 ] [ψ]   [−r]
//! [ mᵀ   0 ] [ċ] = [ 0]
//! ```
//!
//! where `L` is the exact derivative of the discrete residual and `mᵀψ` is the
//! mean of `ψ`. Constants span the kernel of `L`, so the border fixes the
//! normalization while `c` absorbs the compatibility condition.

use crate::catalog::{AnalyticField, Background};
use crate::cone::{check_c_subsolution, SubsolutionCertificate, SymmetricOperator};
use crate::error::{Error, Result};
use crate::geometry::{omega_u_at, GeometryFields};
use crate::grid::{ScalarField, MAX_AXES};
use crate::krylov::{gmres, GmresConfig, LinearOperator};
use crate::monitor::{self, EstimateSnapshot};
use crate::pencil::{hermitian_eigen, symmetrize, CMatrix};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    SupZero,
    MeanZero,
}

/// A discrete instance of the equation.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub geometry: GeometryFields,
    /// Background form `g_{ij̄}` in the unitary frame, one block per point.
    pub omega: Vec<CMatrix>,
    pub operator: SymmetricOperator,
    pub h: ScalarField,
    pub normalization: Normalization,
    /// Known solution, when the problem was manufactured.
    pub u_star: Option<ScalarField>,
    h0: ScalarField,
}

/// `h₀(x) = f(μ(g(x)))`, which makes `(u, c) = (0, 0)` solve the `t = 0` equation.
pub fn h_zero_of(
    geometry: &GeometryFields,
    omega: &[CMatrix],
    op: &SymmetricOperator,
) -> Result<ScalarField> {
    let values: Vec<Result<f64>> = omega
        .par_iter()
        .enumerate()
        .map(|(idx, g)| {
            let (mu, _) = hermitian_eigen(&symmetrize(g));
            op.value(&mu).map_err(|_| Error::InadmissibleBackground {
                point: idx,
                coords: geometry.grid.coords(idx),
            })
        })
        .collect();
    Ok(ScalarField::new(values.into_iter().collect::<Result<_>>()?))
}

impl ProblemSpec {
    pub fn new(
        geometry: GeometryFields,
        omega: Vec<CMatrix>,
        operator: SymmetricOperator,
        h: ScalarField,
        normalization: Normalization,
    ) -> Result<Self> {
        if operator.n != geometry.n() {
            return Err(Error::Argument(format!(
                "operator acts on {} eigenvalues but the manifold has complex dimension {}",
                operator.n,
                geometry.n()
            )));
        }
        if omega.len() != geometry.grid.len() || h.len() != geometry.grid.len() {
            return Err(Error::Argument("field sizes do not match the grid".into()));
        }
        if !h.is_finite() {
            return Err(Error::Argument("h has non-finite values".into()));
        }
        let h0 = h_zero_of(&geometry, &omega, &operator)?;
        Ok(Self {
            geometry,
            omega,
            operator,
            h,
            normalization,
            u_star: None,
            h0,
        })
    }

    /// Problem whose target is `h₀` itself, so `u = 0, c = 0` solves every `t`.
    pub fn stationary(
        geometry: GeometryFields,
        omega: Vec<CMatrix>,
        operator: SymmetricOperator,
    ) -> Result<Self> {
        let h0 = h_zero_of(&geometry, &omega, &operator)?;
        Self::new(geometry, omega, operator, h0, Normalization::SupZero)
    }

    pub fn from_background(
        geometry: GeometryFields,
        background: &Background,
        operator: SymmetricOperator,
        h: ScalarField,
    ) -> Result<Self> {
        let omega = background.evaluate(&geometry.grid)?;
        Self::new(geometry, omega, operator, h, Normalization::SupZero)
    }

    pub fn h0(&self) -> &ScalarField {
        &self.h0
    }

    pub fn len(&self) -> usize {
        self.geometry.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Right-hand side `t·h + (1−t)·h₀` without `c`.
    pub fn target(&self, t: f64) -> ScalarField {
        ScalarField::new(
            self.h
                .values
                .iter()
                .zip(&self.h0.values)
                .map(|(h, h0)| t * h + (1.0 - t) * h0)
                .collect(),
        )
    }

    /// Eigenvalues of `ω + ∂∂̄u` at every point, in descending order.
    pub fn eigenvalues(&self, u: &ScalarField) -> Vec<Vec<f64>> {
        (0..self.len())
            .into_par_iter()
            .map(|idx| {
                hermitian_eigen(&omega_u_at(
                    &self.geometry,
                    &self.omega[idx],
                    &u.values,
                    idx,
                ))
                .0
            })
            .collect()
    }

    /// Certify `u̲` as a C-subsolution for the target `h`.
    pub fn certify_subsolution(&self, u_underline: &ScalarField) -> Result<SubsolutionCertificate> {
        let mu = self.eigenvalues(u_underline);
        let grid = &self.geometry.grid;
        check_c_subsolution(&self.operator, &mu, &self.h.values).map_err(|e| match e {
            Error::NotAdmissible { point, .. } => Error::NotAdmissible {
                point,
                coords: grid.coords(point),
            },
            Error::NotSubsolution {
                point, direction, ..
            } => Error::NotSubsolution {
                point,
                coords: grid.coords(point),
                direction,
            },
            other => other,
        })
    }
}

/// `h₀` of a problem.
pub fn h_zero(problem: &ProblemSpec) -> ScalarField {
    problem.h0.clone()
}

/// How a manufactured right-hand side is assembled from `u*`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RhsMode {
    /// Continuum `∂∂̄u*` from exact derivatives; the discrete solution differs
    /// from `u*` by the truncation error.
    Analytic,
    /// The grid operator applied to samples of `u*`; `u*` then solves the
    /// discrete problem exactly.
    Discrete,
}

/// Problem with `h := f(μ(ω + ∂∂̄u*))` from grid samples of `u*`.
pub fn manufactured_problem(
    geometry: GeometryFields,
    omega: Vec<CMatrix>,
    operator: SymmetricOperator,
    u_star: &ScalarField,
) -> Result<ProblemSpec> {
    let h: Vec<Result<f64>> = (0..geometry.grid.len())
        .into_par_iter()
        .map(|idx| {
            let (mu, _) = hermitian_eigen(&omega_u_at(&geometry, &omega[idx], &u_star.values, idx));
            operator
                .value(&mu)
                .map_err(|_| Error::Argument(format!("u* is not admissible at grid point {idx}")))
        })
        .collect();
    let h = ScalarField::new(h.into_iter().collect::<Result<_>>()?);
    let mut p = ProblemSpec::new(geometry, omega, operator, h, Normalization::SupZero)?;
    p.u_star = Some(u_star.clone());
    Ok(p)
}

/// Problem manufactured from an analytic `u*`, in either right-hand-side mode.
pub fn manufactured_problem_analytic(
    geometry: GeometryFields,
    omega: Vec<CMatrix>,
    operator: SymmetricOperator,
    u_star: &AnalyticField,
    mode: RhsMode,
) -> Result<ProblemSpec> {
    u_star
        .check_axes(geometry.grid.axes())
        .map_err(|e| Error::Argument(e.to_string()))?;
    let samples = u_star.sample(&geometry.grid);
    match mode {
        RhsMode::Discrete => manufactured_problem(geometry, omega, operator, &samples),
        RhsMode::Analytic => {
            let exact = geometry.ddbar_exact(u_star);
            let h: Result<Vec<f64>> = exact
                .iter()
                .zip(&omega)
                .enumerate()
                .map(|(idx, (dd, g))| {
                    let (mu, _) = hermitian_eigen(&symmetrize(&(g + dd)));
                    operator.value(&mu).map_err(|_| {
                        Error::Argument(format!("u* is not admissible at grid point {idx}"))
                    })
                })
                .collect();
            let mut p = ProblemSpec::new(
                geometry,
                omega,
                operator,
                ScalarField::new(h?),
                Normalization::SupZero,
            )?;
            p.u_star = Some(samples);
            Ok(p)
        }
    }
}

/// A point on the continuity path.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub u: ScalarField,
    pub c: f64,
    pub t: f64,
    /// Sup norm of the residual at `(u, c, t)`.
    pub residual_norm: f64,
    pub newton_iters: usize,
}

impl SolverState {
    /// `(u, c) = (0, 0)` at `t = 0`.
    pub fn initial(problem: &ProblemSpec) -> Self {
        Self {
            u: ScalarField::zeros(&problem.geometry.grid),
            c: 0.0,
            t: 0.0,
            residual_norm: 0.0,
            newton_iters: 0,
        }
    }

    /// A user-supplied starting point; fails if `u` is not admissible.
    pub fn with_guess(problem: &ProblemSpec, u: ScalarField, c: f64, t: f64) -> Result<Self> {
        if u.len() != problem.len() || !u.is_finite() {
            return Err(Error::Argument(
                "initial guess has wrong size or non-finite values".into(),
            ));
        }
        let r = residual_fields(problem, &u, c, t)?;
        Ok(Self {
            u,
            c,
            t,
            residual_norm: r.sup_norm(),
            newton_iters: 0,
        })
    }
}

/// Shift `u` by a constant so the chosen functional vanishes. `∂∂̄` kills
/// constants, so the residual and `c` are unchanged.
pub fn normalize(state: &SolverState, mode: Normalization) -> SolverState {
    let shift = match mode {
        Normalization::SupZero => state.u.max(),
        Normalization::MeanZero => state.u.mean(),
    };
    SolverState {
        u: state.u.shifted(-shift),
        ..state.clone()
    }
}

fn residual_fields(problem: &ProblemSpec, u: &ScalarField, c: f64, t: f64) -> Result<ScalarField> {
    let grid = &problem.geometry.grid;
    let values: Vec<Result<f64>> = (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            let g = omega_u_at(&problem.geometry, &problem.omega[idx], &u.values, idx);
            let (mu, _) = hermitian_eigen(&g);
            let f = problem
                .operator
                .value(&mu)
                .map_err(|_| Error::NotAdmissible {
                    point: idx,
                    coords: grid.coords(idx),
                })?;
            Ok(f - (t * problem.h.values[idx] + (1.0 - t) * problem.h0.values[idx]) - c)
        })
        .collect();
    Ok(ScalarField::new(values.into_iter().collect::<Result<_>>()?))
}

/// `F(ω_u) − t·h − (1−t)·h₀ − c` at every point.
///
/// Fails with [`Error::NotAdmissible`] at the first point where `μ(ω_u) ∉ Γ`.
pub fn residual(problem: &ProblemSpec, state: &SolverState) -> Result<ScalarField> {
    residual_fields(problem, &state.u, state.c, state.t)
}

/// `L = Σ F^{ij̄}(e_i ē_j − [e_i, ē_j]^{(0,1)})` frozen at a state, stored as
/// real coefficients of the coordinate stencils.
pub struct LinearizedOperator<'a> {
    problem: &'a ProblemSpec,
    second: Vec<[[f64; MAX_AXES]; MAX_AXES]>,
    first: Vec<[f64; MAX_AXES]>,
    diag: Vec<f64>,
}

impl<'a> LinearizedOperator<'a> {
    pub fn new(problem: &'a ProblemSpec, u: &ScalarField) -> Result<Self> {
        let geom = &problem.geometry;
        let grid = &geom.grid;
        let (n, d) = (grid.n(), grid.axes());
        type Coeffs = ([[f64; MAX_AXES]; MAX_AXES], [f64; MAX_AXES], f64);
        let coeffs: Vec<Result<Coeffs>> = (0..grid.len())
            .into_par_iter()
            .map(|idx| {
                let g = omega_u_at(geom, &problem.omega[idx], &u.values, idx);
                let (mu, frame) = hermitian_eigen(&g);
                let grad = problem
                    .operator
                    .gradient(&mu)
                    .map_err(|_| Error::NotAdmissible {
                        point: idx,
                        coords: grid.coords(idx),
                    })?;
                let mut p = frame.clone();
                for col in 0..n {
                    for row in 0..n {
                        p[(row, col)] *= grad[col];
                    }
                }
                let p = p * frame.adjoint();
                let mut second = [[0.0; MAX_AXES]; MAX_AXES];
                let mut first = [0.0; MAX_AXES];
                for i in 0..n {
                    for j in 0..n {
                        let pji = p[(j, i)];
                        for a in 0..d {
                            let w = pji * geom.frame_coeff(idx, i, a);
                            for b in 0..d {
                                second[a][b] += (w * geom.frame_coeff(idx, j, b).conj()).re;
                            }
                            first[a] += (pji * geom.first_order_coeff(idx, i, j, a)).re;
                        }
                    }
                }
                let spacing = grid.spacing();
                let diag = (0..d)
                    .map(|a| -2.0 * second[a][a] / (spacing[a] * spacing[a]))
                    .sum();
                Ok((second, first, diag))
            })
            .collect();
        let mut out = Self {
            problem,
            second: Vec::with_capacity(grid.len()),
            first: Vec::with_capacity(grid.len()),
            diag: Vec::with_capacity(grid.len()),
        };
        for c in coeffs {
            let (s, f, dg) = c?;
            out.second.push(s);
            out.first.push(f);
            out.diag.push(dg);
        }
        Ok(out)
    }

    /// `y = L ψ`.
    pub fn apply_into(&self, psi: &[f64], y: &mut [f64]) {
        let grid = &self.problem.geometry.grid;
        let d = grid.axes();
        y.par_iter_mut().enumerate().for_each(|(idx, yi)| {
            let dv = grid.derivatives(psi, idx);
            let (s, f) = (&self.second[idx], &self.first[idx]);
            let mut acc = 0.0;
            for a in 0..d {
                for b in 0..d {
                    acc += s[a][b] * dv.second[a][b];
                }
                acc += f[a] * dv.first[a];
            }
            *yi = acc;
        });
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diag
    }
}

/// `L ψ − ċ` at `state`.
pub fn linearized_apply(
    problem: &ProblemSpec,
    state: &SolverState,
    psi: &ScalarField,
    c_dot: f64,
) -> Result<ScalarField> {
    let lin = LinearizedOperator::new(problem, &state.u)?;
    let mut y = vec![0.0; problem.len()];
    lin.apply_into(&psi.values, &mut y);
    Ok(ScalarField::new(y.into_iter().map(|v| v - c_dot).collect()))
}

/// The bordered Newton system with the `c` unknown and the mean constraint.
struct Bordered<'a, 'b> {
    lin: &'b LinearizedOperator<'a>,
    /// Scale of the constraint row; the right-hand side there is zero.
    row_scale: f64,
}

impl LinearOperator for Bordered<'_, '_> {
    fn dim(&self) -> usize {
        self.lin.diag.len() + 1
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let n = self.lin.diag.len();
        let (psi, c) = (&x[..n], x[n]);
        self.lin.apply_into(psi, &mut y[..n]);
        for v in &mut y[..n] {
            *v -= c;
        }
        y[n] = self.row_scale * psi.iter().sum::<f64>();
    }
}

/// Newton iteration controls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NewtonOptions {
    /// Target sup norm of the residual.
    pub tol: f64,
    pub max_iters: usize,
    /// Smallest damping factor tried by the line search.
    pub step_floor: f64,
    /// Relative tolerance of the inner Krylov solve.
    pub linear_tol: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iters: 30,
            step_floor: 1e-4,
            linear_tol: 1e-10,
        }
    }
}

/// Solve the `t`-equation by damped Newton from `state`.
///
/// Steps are halved until every point stays admissible and the residual sup
/// norm decreases. `u` is kept at zero mean throughout.
pub fn newton_solve(
    problem: &ProblemSpec,
    state: &SolverState,
    t: f64,
    opts: &NewtonOptions,
) -> Result<SolverState> {
    let n = problem.len();
    let mut u = state.u.shifted(-state.u.mean());
    let mut c = state.c;
    let mut r = residual_fields(problem, &u, c, t)?;
    let mut norm = r.sup_norm();
    if !norm.is_finite() {
        return Err(Error::Argument("initial residual is not finite".into()));
    }
    let mut iters = 0;
    let mut gmres_cfg = GmresConfig::for_dim(n + 1);
    gmres_cfg.tol = opts.linear_tol;
    while norm > opts.tol {
        if iters >= opts.max_iters {
            return Err(Error::NonConvergence {
                t,
                iters,
                residual: norm,
            });
        }
        let lin = LinearizedOperator::new(problem, &u)?;
        let mean_diag = lin.diag.iter().map(|v| v.abs()).sum::<f64>() / n as f64;
        let system = Bordered {
            lin: &lin,
            row_scale: mean_diag / (n as f64).sqrt(),
        };
        let mut inv_diag: Vec<f64> = lin
            .diag
            .iter()
            .map(|v| if *v != 0.0 { 1.0 / v } else { 1.0 })
            .collect();
        inv_diag.push(1.0 / (n as f64).sqrt());
        let mut rhs: Vec<f64> = r.values.iter().map(|v| -v).collect();
        rhs.push(0.0);
        let sol = gmres(&system, &inv_diag, &rhs, &gmres_cfg);
        if !sol.converged {
            log::debug!(
                "inner solve stopped at relative residual {:e} after {} iterations",
                sol.relative_residual,
                sol.iterations
            );
        }
        let step = ScalarField::new(sol.x[..n].to_vec());
        let c_step = sol.x[n];
        let mut alpha = 1.0;
        loop {
            let u_try = u.axpy(alpha, &step);
            let c_try = c + alpha * c_step;
            if let Ok(r_try) = residual_fields(problem, &u_try, c_try, t) {
                let nt = r_try.sup_norm();
                if nt < norm {
                    u = u_try.shifted(-u_try.mean());
                    c = c_try;
                    r = r_try;
                    norm = nt;
                    break;
                }
            }
            alpha *= 0.5;
            if alpha < opts.step_floor {
                return Err(Error::StepFailure { t, residual: norm });
            }
        }
        iters += 1;
        log::trace!("t = {t}: Newton iteration {iters}, residual {norm:e}, damping {alpha}");
    }
    Ok(SolverState {
        u,
        c,
        t,
        residual_norm: norm,
        newton_iters: iters,
    })
}

/// Path-following controls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathControls {
    pub dt_initial: f64,
    pub dt_min: f64,
    /// A step taking fewer Newton iterations than this counts as easy.
    pub easy_iters: usize,
    /// Consecutive easy steps before the step size doubles.
    pub grow_after: usize,
    /// Fail when `u̲ = 0` is not certified; otherwise only warn.
    pub require_subsolution: bool,
    pub newton: NewtonOptions,
}

impl Default for PathControls {
    fn default() -> Self {
        Self {
            dt_initial: 0.1,
            dt_min: 1e-4,
            easy_iters: 5,
            grow_after: 2,
            require_subsolution: true,
            newton: NewtonOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathEntry {
    pub t: f64,
    pub c: f64,
    pub residual_norm: f64,
    pub newton_iters: usize,
    /// Accepted `u`, shifted to `sup u = 0`.
    pub u: ScalarField,
    pub diagnostics: EstimateSnapshot,
}

/// Accepted points of a continuity run, in increasing `t`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PathReport {
    pub entries: Vec<PathEntry>,
    pub rejected_steps: usize,
}

impl PathReport {
    pub fn final_t(&self) -> Option<f64> {
        self.entries.last().map(|e| e.t)
    }
}

fn recoverable(e: &Error) -> bool {
    matches!(
        e,
        Error::StepFailure { .. } | Error::NonConvergence { .. } | Error::NotAdmissible { .. }
    )
}

fn accepted_snapshot(problem: &ProblemSpec, state: &SolverState) -> Result<EstimateSnapshot> {
    monitor::snapshot(problem, state).map_err(|e| {
        Error::Invariant(format!(
            "accepted state at t = {} is not admissible: {e}",
            state.t
        ))
    })
}

/// March from `t = 0` to `t = 1`, correcting with Newton at each step.
///
/// The returned state is normalized with the problem's normalization.
pub fn continuity_solve(
    problem: &ProblemSpec,
    controls: &PathControls,
) -> Result<(SolverState, PathReport)> {
    let zero = ScalarField::zeros(&problem.geometry.grid);
    if let Err(e) = problem.certify_subsolution(&zero) {
        if controls.require_subsolution {
            return Err(e);
        }
        log::warn!("u = 0 is not a certified C-subsolution ({e}); continuing");
    }
    let mut state = SolverState::initial(problem);
    state.residual_norm = residual(problem, &state)?.sup_norm();
    let mut report = PathReport::default();
    report.entries.push(PathEntry {
        t: 0.0,
        c: 0.0,
        residual_norm: state.residual_norm,
        newton_iters: 0,
        u: state.u.clone(),
        diagnostics: accepted_snapshot(problem, &state)?,
    });
    let mut dt = controls.dt_initial;
    let mut easy = 0;
    while state.t < 1.0 {
        let t_next = (state.t + dt).min(1.0);
        match newton_solve(problem, &state, t_next, &controls.newton) {
            Ok(next) => {
                let shown = normalize(&next, Normalization::SupZero);
                report.entries.push(PathEntry {
                    t: next.t,
                    c: next.c,
                    residual_norm: next.residual_norm,
                    newton_iters: next.newton_iters,
                    diagnostics: accepted_snapshot(problem, &shown)?,
                    u: shown.u,
                });
                if next.newton_iters < controls.easy_iters {
                    easy += 1;
                    if easy >= controls.grow_after {
                        dt *= 2.0;
                        easy = 0;
                    }
                } else {
                    easy = 0;
                }
                state = next;
            }
            Err(e) if recoverable(&e) => {
                log::debug!("step to t = {t_next} rejected: {e}");
                report.rejected_steps += 1;
                dt *= 0.5;
                easy = 0;
                if dt < controls.dt_min {
                    return Err(Error::PathFailure { last_t: state.t });
                }
            }
            Err(e) => return Err(e),
        }
    }
    Ok((normalize(&state, problem.normalization), report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_geometry, Preset};
    use crate::grid::PeriodicGrid;

    fn flat(n: usize, size: usize) -> GeometryFields {
        build_geometry(&PeriodicGrid::cubic(n, size).unwrap(), Preset::FlatStandard).unwrap()
    }

    #[test]
    fn h_zero_at_identity_is_log_binomial() {
        let geom = flat(2, 4);
        let omega = Background::Identity.evaluate(&geom.grid).unwrap();
        let op = SymmetricOperator::log_sigma_k(2, 1).unwrap();
        let p = ProblemSpec::stationary(geom, omega, op).unwrap();
        assert!(p.h0().values.iter().all(|v| (v - 2f64.ln()).abs() < 1e-15));
        assert_eq!(
            residual(&p, &SolverState::initial(&p)).unwrap().sup_norm(),
            0.0
        );
    }

    #[test]
    fn inadmissible_background_is_reported() {
        let geom = flat(2, 4);
        let bg = Background::WithDefect {
            base: Box::new(Background::Identity),
            point: vec![1, 2, 3, 0],
            diagonal: vec![1.0, -2.0],
        };
        let omega = bg.evaluate(&geom.grid).unwrap();
        let op = SymmetricOperator::log_sigma_k(2, 2).unwrap();
        match ProblemSpec::stationary(geom, omega, op) {
            Err(Error::InadmissibleBackground { coords, .. }) => {
                assert_eq!(coords, vec![1, 2, 3, 0])
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn residual_shifts_with_c_and_ignores_constants() {
        let geom = flat(1, 8);
        let omega = Background::Wave { amplitude: 0.2 }
            .evaluate(&geom.grid)
            .unwrap();
        let op = SymmetricOperator::log_sigma_k(1, 1).unwrap();
        let h = ScalarField::from_fn(&geom.grid, |x| (6.0 * x[1]).sin());
        let p = ProblemSpec::new(geom.clone(), omega, op, h, Normalization::SupZero).unwrap();
        let u = ScalarField::from_fn(&geom.grid, |x| 0.01 * (std::f64::consts::TAU * x[0]).cos());
        let s = SolverState::with_guess(&p, u.clone(), 0.3, 0.7).unwrap();
        let r = residual(&p, &s).unwrap();
        let s2 = SolverState {
            u: u.shifted(0.5),
            ..s.clone()
        };
        assert!(residual(&p, &s2).unwrap().sup_distance(&r) < 1e-12);
        let s3 = SolverState { c: 0.3 + 0.25, ..s };
        let r3 = residual(&p, &s3).unwrap();
        assert!(r
            .values
            .iter()
            .zip(&r3.values)
            .all(|(a, b)| (a - b - 0.25).abs() < 1e-14));
    }

    #[test]
    fn normalize_modes() {
        let s = SolverState {
            u: ScalarField::new(vec![1.0, -2.0, 4.0, 1.0]),
            c: 0.5,
            t: 1.0,
            residual_norm: 0.0,
            newton_iters: 0,
        };
        let sup = normalize(&s, Normalization::SupZero);
        assert_eq!(sup.u.max(), 0.0);
        assert_eq!(sup.c, 0.5);
        assert_eq!(normalize(&sup, Normalization::SupZero), sup);
        assert_eq!(normalize(&s, Normalization::MeanZero).u.mean(), 0.0);
    }

    #[test]
    fn exact_start_takes_no_iterations() {
        let geom = flat(2, 4);
        let omega = Background::Identity.evaluate(&geom.grid).unwrap();
        let op = SymmetricOperator::log_sigma_k(2, 2).unwrap();
        let p = ProblemSpec::stationary(geom, omega, op).unwrap();
        let s = SolverState::initial(&p);
        let out = newton_solve(&p, &s, 1.0, &NewtonOptions::default()).unwrap();
        assert_eq!(out.newton_iters, 0);
        assert_eq!(out.u, s.u);
    }

    #[test]
    fn stationary_path_stays_at_zero() {
        let geom = flat(2, 4);
        let omega = Background::Wave { amplitude: 0.3 }
            .evaluate(&geom.grid)
            .unwrap();
        let op = SymmetricOperator::log_sigma_k(2, 2).unwrap();
        let p = ProblemSpec::stationary(geom, omega, op).unwrap();
        let (s, report) = continuity_solve(&p, &PathControls::default()).unwrap();
        assert_eq!(s.t, 1.0);
        assert!(s.u.sup_norm() == 0.0 && s.c == 0.0);
        assert!(report
            .entries
            .iter()
            .all(|e| e.c == 0.0 && e.newton_iters == 0));
        assert!(report.entries.windows(2).all(|w| w[0].t < w[1].t));
    }
}
