//! Symmetric-function calculus on Gårding-type cones.
//!
//! Two operators are supported:
//!
//! * `f = log σ_k` on the Gårding cone `Γ_k = {σ_1 > 0, …, σ_k > 0}`;
//! * `f = log σ_n(T(μ))` on `T⁻¹(Γ_n)`, where `T(μ)_k = (1/(n−1)) Σ_{i≠k} μ_i`.
//!   This is the eigenvalue form of the Monge–Ampère equation for
//!   (n−1)-plurisubharmonic functions.
//!
//! Both are symmetric, strictly increasing in every argument and concave on
//! their cone, and both tend to `-∞` on the cone boundary.

use crate::error::{Error, Result};
use nalgebra::DMatrix;

/// Relative gap below which two eigenvalues are treated as equal in
/// [`SymmetricOperator::pair_coefficients`].
pub const TIE_TOLERANCE: f64 = 1e-8;

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

/// Elementary symmetric polynomials `σ_0, …, σ_k` of `mu`.
///
/// Uses the product recurrence `σ_j ← σ_j + μ_i σ_{j−1}` with error-free
/// transformations carried in a second accumulator. Orders above `mu.len()`
/// are zero.
pub fn elementary_symmetric(mu: &[f64], k: usize) -> Vec<f64> {
    let mut hi = vec![0.0; k + 1];
    let mut lo = vec![0.0; k + 1];
    hi[0] = 1.0;
    for (i, &x) in mu.iter().enumerate() {
        let top = k.min(i + 1);
        for j in (1..=top).rev() {
            let (p, pe) = two_prod(x, hi[j - 1]);
            let (s, se) = two_sum(hi[j], p);
            hi[j] = s;
            lo[j] += pe + se + x * lo[j - 1];
        }
    }
    hi.iter().zip(&lo).map(|(h, l)| h + l).collect()
}

/// The k-th elementary symmetric polynomial `σ_k(μ)`, `1 ≤ k ≤ n`.
pub fn sigma_k(mu: &[f64], k: usize) -> Result<f64> {
    if k == 0 || k > mu.len() {
        return Err(Error::Argument(format!(
            "sigma_k needs 1 <= k <= n, got k = {k}, n = {}",
            mu.len()
        )));
    }
    Ok(elementary_symmetric(mu, k)[k])
}

fn without(mu: &[f64], skip: &[usize]) -> Vec<f64> {
    mu.iter()
        .enumerate()
        .filter(|(i, _)| !skip.contains(i))
        .map(|(_, &x)| x)
        .collect()
}

/// `T(μ)_k = (1/(n−1)) Σ_{i≠k} μ_i`.
pub fn t_transform(mu: &[f64]) -> Result<Vec<f64>> {
    let n = mu.len();
    if n < 2 {
        return Err(Error::Argument(format!("T-map needs n >= 2, got {n}")));
    }
    let total: f64 = mu.iter().sum();
    let scale = 1.0 / (n as f64 - 1.0);
    Ok(mu.iter().map(|&x| (total - x) * scale).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConeKind {
    /// `Γ_k`: σ_1, …, σ_k all positive.
    GammaK(usize),
    /// `T⁻¹(Γ_n)`: every component of `T(μ)` positive.
    PullbackByT,
}

/// An open symmetric cone in `ℝⁿ` containing the positive orthant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConeDescriptor {
    pub kind: ConeKind,
    pub n: usize,
}

impl ConeDescriptor {
    pub fn gamma_k(n: usize, k: usize) -> Result<Self> {
        if n == 0 || k == 0 || k > n {
            return Err(Error::Argument(format!(
                "Γ_k needs 1 <= k <= n, got k = {k}, n = {n}"
            )));
        }
        Ok(Self {
            kind: ConeKind::GammaK(k),
            n,
        })
    }

    pub fn pullback_by_t(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Argument(format!("T⁻¹(Γ_n) needs n >= 2, got {n}")));
        }
        Ok(Self {
            kind: ConeKind::PullbackByT,
            n,
        })
    }

    /// First failing constraint (1-based), or `None` when `mu` lies in the open cone.
    /// Points with a vanishing constraint are on the boundary and count as outside.
    pub fn first_violation(&self, mu: &[f64]) -> Option<usize> {
        if mu.len() != self.n || mu.iter().any(|x| !x.is_finite()) {
            return Some(0);
        }
        match self.kind {
            ConeKind::GammaK(k) => {
                let s = elementary_symmetric(mu, k);
                (1..=k).find(|&i| s[i] <= 0.0)
            }
            ConeKind::PullbackByT => {
                let t = t_transform(mu).ok()?;
                t.iter().position(|&x| x <= 0.0).map(|i| i + 1)
            }
        }
    }

    pub fn contains(&self, mu: &[f64]) -> bool {
        self.first_violation(mu).is_none()
    }

    /// Largest `s` with `μ − s·1` still in the closed cone, found by bisection.
    ///
    /// Since every supported cone lies in `Γ_1`, the answer is at most `σ_1(μ)/n`.
    pub fn distance_along_diagonal(&self, mu: &[f64]) -> f64 {
        if !self.contains(mu) {
            return 0.0;
        }
        let shifted = |s: f64| -> Vec<f64> { mu.iter().map(|x| x - s).collect() };
        let mut lo = 0.0;
        let mut hi = mu.iter().sum::<f64>() / self.n as f64;
        if self.contains(&shifted(hi)) {
            return hi;
        }
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if self.contains(&shifted(mid)) {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-15 * (1.0 + hi.abs()) {
                break;
            }
        }
        lo
    }
}

/// Membership of `mu` in the open cone.
pub fn in_cone(cone: &ConeDescriptor, mu: &[f64]) -> bool {
    cone.contains(mu)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorKind {
    LogSigmaK(usize),
    NMinusOneMA,
}

/// A pair `(f, Γ)` satisfying the structural assumptions of the equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SymmetricOperator {
    pub kind: OperatorKind,
    pub n: usize,
    pub cone: ConeDescriptor,
}

/// Data for the second derivative of `F` at a diagonal point.
///
/// `offdiag[(i, j)]` holds `(f_i − f_j)/(μ_i − μ_j)` for `i ≠ j`, replaced by the
/// limit `f_ii − f_ij` when the two eigenvalues coincide. The diagonal of
/// `offdiag` is zero.
#[derive(Debug, Clone, PartialEq)]
pub struct PairCoefficients {
    pub diag: Vec<f64>,
    pub offdiag: DMatrix<f64>,
}

impl SymmetricOperator {
    pub fn log_sigma_k(n: usize, k: usize) -> Result<Self> {
        Ok(Self {
            kind: OperatorKind::LogSigmaK(k),
            n,
            cone: ConeDescriptor::gamma_k(n, k)?,
        })
    }

    pub fn n_minus_one_ma(n: usize) -> Result<Self> {
        Ok(Self {
            kind: OperatorKind::NMinusOneMA,
            n,
            cone: ConeDescriptor::pullback_by_t(n)?,
        })
    }

    fn check(&self, mu: &[f64]) -> Result<()> {
        if mu.len() != self.n {
            return Err(Error::Argument(format!(
                "expected {} eigenvalues, got {}",
                self.n,
                mu.len()
            )));
        }
        match self.cone.first_violation(mu) {
            None => Ok(()),
            Some(index) => Err(Error::ConeViolation { index }),
        }
    }

    /// `f(μ)`.
    pub fn value(&self, mu: &[f64]) -> Result<f64> {
        self.check(mu)?;
        Ok(self.value_unchecked(mu))
    }

    fn value_unchecked(&self, mu: &[f64]) -> f64 {
        match self.kind {
            OperatorKind::LogSigmaK(k) => elementary_symmetric(mu, k)[k].ln(),
            OperatorKind::NMinusOneMA => {
                let scale = 1.0 / (self.n as f64 - 1.0);
                let total: f64 = mu.iter().sum();
                mu.iter().map(|&x| ((total - x) * scale).ln()).sum()
            }
        }
    }

    /// `(f_1, …, f_n)`; every entry is positive inside the cone.
    pub fn gradient(&self, mu: &[f64]) -> Result<Vec<f64>> {
        self.check(mu)?;
        Ok(match self.kind {
            OperatorKind::LogSigmaK(k) => {
                let sk = elementary_symmetric(mu, k)[k];
                (0..self.n)
                    .map(|i| elementary_symmetric(&without(mu, &[i]), k - 1)[k - 1] / sk)
                    .collect()
            }
            OperatorKind::NMinusOneMA => {
                let t = t_transform(mu)?;
                let inv_total: f64 = t.iter().map(|x| 1.0 / x).sum();
                let scale = 1.0 / (self.n as f64 - 1.0);
                t.iter().map(|ti| scale * (inv_total - 1.0 / ti)).collect()
            }
        })
    }

    /// Analytic Hessian `f_ij`.
    pub fn hessian(&self, mu: &[f64]) -> Result<DMatrix<f64>> {
        self.check(mu)?;
        let n = self.n;
        Ok(match self.kind {
            OperatorKind::LogSigmaK(k) => {
                let sk = elementary_symmetric(mu, k)[k];
                let first: Vec<f64> = (0..n)
                    .map(|i| elementary_symmetric(&without(mu, &[i]), k - 1)[k - 1])
                    .collect();
                DMatrix::from_fn(n, n, |i, j| {
                    let cross = if i == j || k < 2 {
                        0.0
                    } else {
                        elementary_symmetric(&without(mu, &[i, j]), k - 2)[k - 2]
                    };
                    cross / sk - first[i] * first[j] / (sk * sk)
                })
            }
            OperatorKind::NMinusOneMA => {
                let t = t_transform(mu)?;
                let scale = 1.0 / (n as f64 - 1.0);
                DMatrix::from_fn(n, n, |i, j| {
                    let s: f64 = (0..n)
                        .filter(|&m| m != i && m != j)
                        .map(|m| 1.0 / (t[m] * t[m]))
                        .sum();
                    -scale * scale * s
                })
            }
        })
    }

    /// Coefficients of the second derivative of `F` in the eigenframe, for
    /// eigenvalues sorted in descending order.
    pub fn pair_coefficients(&self, mu_sorted: &[f64]) -> Result<PairCoefficients> {
        if mu_sorted.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::Argument(
                "eigenvalues must be sorted in descending order".into(),
            ));
        }
        let grad = self.gradient(mu_sorted)?;
        let n = self.n;
        let mut hess: Option<DMatrix<f64>> = None;
        let mut offdiag = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let gap = mu_sorted[i] - mu_sorted[j];
                offdiag[(i, j)] = if gap.abs() < TIE_TOLERANCE * (1.0 + mu_sorted[i].abs()) {
                    let h = match &hess {
                        Some(h) => h,
                        None => hess.insert(self.hessian(mu_sorted)?),
                    };
                    h[(i, i)] - h[(i, j)]
                } else {
                    (grad[i] - grad[j]) / gap
                };
            }
        }
        Ok(PairCoefficients {
            diag: grad,
            offdiag,
        })
    }

    /// `lim_{t→∞} f(μ + t e_j)`, computed from the structure of `f`.
    ///
    /// For `log σ_k` the argument is affine in `t` with slope `σ_{k−1}(μ | j)`;
    /// for the T-map operator every component `T_m`, `m ≠ j`, grows linearly.
    pub fn ray_limit(&self, mu: &[f64], j: usize) -> Result<f64> {
        self.check(mu)?;
        if j >= self.n {
            return Err(Error::Argument(format!(
                "direction {j} out of range for n = {}",
                self.n
            )));
        }
        Ok(match self.kind {
            OperatorKind::LogSigmaK(k) => {
                let slope = elementary_symmetric(&without(mu, &[j]), k - 1)[k - 1];
                if slope > 0.0 {
                    f64::INFINITY
                } else if slope == 0.0 {
                    self.value_unchecked(mu)
                } else {
                    f64::NEG_INFINITY
                }
            }
            // n >= 2, so at least one component grows while none shrinks.
            OperatorKind::NMinusOneMA => f64::INFINITY,
        })
    }

    /// Solve `f(base + t e_j) = level` for `t ≥ 0` by bracketing and bisection.
    fn level_crossing(&self, base: &[f64], j: usize, level: f64) -> Option<f64> {
        let at = |t: f64| -> f64 {
            let mut p = base.to_vec();
            p[j] += t;
            self.value_unchecked(&p)
        };
        if at(0.0) >= level {
            return None;
        }
        let mut hi = 1.0;
        let mut tries = 0;
        while at(hi) < level {
            hi *= 2.0;
            tries += 1;
            if tries > 1100 {
                return None;
            }
        }
        let mut lo = 0.0;
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if at(mid) < level {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Some(hi)
    }
}

/// Margins certifying that a function is a C-subsolution at every grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct SubsolutionCertificate {
    /// Half the smallest diagonal distance from `μ(u̲)` to the cone boundary.
    pub delta: f64,
    /// Largest norm of a level-set point met along the coordinate rays from
    /// `μ(u̲) − δ·1`. Diagnostic only.
    pub radius: f64,
    /// Per-point `min_j (lim_{t→∞} f(μ(u̲) + t e_j) − h(x))`; `+∞` for the
    /// supported operators.
    pub margins: Vec<f64>,
}

impl SubsolutionCertificate {
    pub fn min_margin(&self) -> f64 {
        self.margins.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Certify `u̲` as a C-subsolution given its eigenvalue field and the data `h`.
///
/// Errors report the flat grid index; callers that know the grid fill in the
/// coordinates.
pub fn check_c_subsolution(
    op: &SymmetricOperator,
    mu_underline: &[Vec<f64>],
    h: &[f64],
) -> Result<SubsolutionCertificate> {
    if mu_underline.len() != h.len() {
        return Err(Error::Argument(
            "eigenvalue field and h differ in length".into(),
        ));
    }
    if mu_underline.is_empty() {
        return Err(Error::Argument("empty field".into()));
    }
    let mut margins = Vec::with_capacity(h.len());
    let mut min_dist = f64::INFINITY;
    for (x, (mu, &hx)) in mu_underline.iter().zip(h).enumerate() {
        if mu.iter().any(|v| !v.is_finite()) || !op.cone.contains(mu) {
            return Err(Error::NotAdmissible {
                point: x,
                coords: vec![],
            });
        }
        let mut slack = f64::INFINITY;
        for j in 0..op.n {
            let s = op.ray_limit(mu, j)? - hx;
            if !(s > 0.0) {
                return Err(Error::NotSubsolution {
                    point: x,
                    coords: vec![],
                    direction: j,
                });
            }
            slack = slack.min(s);
        }
        margins.push(slack);
        min_dist = min_dist.min(op.cone.distance_along_diagonal(mu));
    }
    let delta = 0.5 * min_dist;
    if !(delta > 0.0) {
        return Err(Error::NotAdmissible {
            point: 0,
            coords: vec![],
        });
    }
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut radius: f64 = 0.0;
    for (mu, &hx) in mu_underline.iter().zip(h) {
        let base: Vec<f64> = mu.iter().map(|m| m - delta).collect();
        radius = radius.max(norm(&base));
        for j in 0..op.n {
            if let Some(t) = op.level_crossing(&base, j, hx) {
                let mut p = base.clone();
                p[j] += t;
                radius = radius.max(norm(&p));
            }
        }
    }
    Ok(SubsolutionCertificate {
        delta,
        radius,
        margins,
    })
}
