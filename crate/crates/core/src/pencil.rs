//! Pointwise linear algebra for the pencil `(χ, g̃)`.
//!
//! The eigenvalues `μ` of `g̃` with respect to `χ` are computed by reducing `χ`
//! to the identity with a Cholesky factor and solving a Hermitian eigenproblem.
//! Small blocks (`n ≤ 2`) use closed forms; larger ones go through nalgebra.

use crate::cone::SymmetricOperator;
use crate::error::{Error, Result};
use nalgebra::{Complex, DMatrix};

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;

/// A `(χ, g̃)` matrix pair at one grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianPencil {
    pub chi: CMatrix,
    pub g_tilde: CMatrix,
}

/// Sorted eigenvalues and a χ-orthonormal eigenframe.
///
/// Columns of `frame` are eigenvectors: `frame* χ frame = I` and
/// `frame* g̃ frame = diag(μ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralData {
    pub mu: Vec<f64>,
    pub frame: CMatrix,
}

/// Largest entry of `m − m*`.
pub fn hermitian_defect(m: &CMatrix) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn symmetrize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * C64::new(0.5, 0.0)
}

fn is_identity(m: &CMatrix) -> bool {
    m.is_square()
        && (0..m.nrows()).all(|i| {
            (0..m.ncols()).all(|j| {
                m[(i, j)]
                    == if i == j {
                        C64::new(1.0, 0.0)
                    } else {
                        C64::new(0.0, 0.0)
                    }
            })
        })
}

impl HermitianPencil {
    pub fn new(chi: CMatrix, g_tilde: CMatrix) -> Result<Self> {
        if !chi.is_square() || chi.shape() != g_tilde.shape() {
            return Err(Error::Pencil(format!(
                "shape mismatch: chi {:?}, g_tilde {:?}",
                chi.shape(),
                g_tilde.shape()
            )));
        }
        let scale = 1.0 + g_tilde.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if hermitian_defect(&g_tilde) > 1e-12 * scale {
            return Err(Error::Pencil("g_tilde is not Hermitian".into()));
        }
        if hermitian_defect(&chi) > 1e-12 {
            return Err(Error::Pencil("chi is not Hermitian".into()));
        }
        Ok(Self { chi, g_tilde })
    }

    /// Pencil with `χ = I`, the situation in a unitary frame.
    pub fn unitary_gauge(g_tilde: CMatrix) -> Result<Self> {
        let n = g_tilde.nrows();
        Self::new(CMatrix::identity(n, n), g_tilde)
    }

    pub fn dim(&self) -> usize {
        self.chi.nrows()
    }
}

/// Eigen-decomposition of a Hermitian matrix with eigenvalues in descending order.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = m.nrows();
    match n {
        1 => (vec![m[(0, 0)].re], CMatrix::identity(1, 1)),
        2 => eigen_2x2(m[(0, 0)].re, m[(0, 1)], m[(1, 1)].re),
        _ => {
            let eig = symmetrize(m).symmetric_eigen();
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
            let mu = order.iter().map(|&i| eig.eigenvalues[i]).collect();
            let frame = CMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
            (mu, frame)
        }
    }
}

fn eigen_2x2(a: f64, b: C64, d: f64) -> (Vec<f64>, CMatrix) {
    let mean = 0.5 * (a + d);
    let half = 0.5 * (a - d);
    let r = half.hypot(b.norm());
    let (mu1, mu2) = (mean + r, mean - r);
    if r == 0.0 {
        return (vec![mu1, mu2], CMatrix::identity(2, 2));
    }
    // Two candidate eigenvectors for μ1; keep the better conditioned one.
    let (x, y) = if half >= 0.0 {
        (C64::new(half + r, 0.0), b.conj())
    } else {
        (b, C64::new(r - half, 0.0))
    };
    let norm = (x.norm_sqr() + y.norm_sqr()).sqrt();
    let (x, y) = (x / norm, y / norm);
    let frame = CMatrix::from_row_slice(2, 2, &[x, -y.conj(), y, x.conj()]);
    (vec![mu1, mu2], frame)
}

/// Sorted eigenvalues of `g̃` relative to `χ` and a χ-orthonormal eigenframe.
pub fn pencil_eigen(p: &HermitianPencil) -> Result<SpectralData> {
    if is_identity(&p.chi) {
        let (mu, frame) = hermitian_eigen(&p.g_tilde);
        return Ok(SpectralData { mu, frame });
    }
    let (chi_eigs, _) = hermitian_eigen(&p.chi);
    if !(chi_eigs[chi_eigs.len() - 1] > 0.0) {
        return Err(Error::Pencil("chi is not positive definite".into()));
    }
    let chol = p
        .chi
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Pencil("chi is not positive definite".into()))?;
    let l = chol.l();
    let l_inv = l
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Pencil("singular Cholesky factor".into()))?;
    let reduced = &l_inv * &p.g_tilde * l_inv.adjoint();
    let (mu, v) = hermitian_eigen(&symmetrize(&reduced));
    let frame = l_inv.adjoint() * v;
    Ok(SpectralData { mu, frame })
}

/// `⟨P, H⟩ = Σ_ij P_ji H_ij`, the pairing under which `dF = ⟨F', dg̃⟩`.
/// Real part only: for Hermitian arguments the pairing is real.
pub fn pairing(p: &CMatrix, h: &CMatrix) -> f64 {
    let mut acc = 0.0;
    for i in 0..p.nrows() {
        for j in 0..p.ncols() {
            acc += (p[(j, i)] * h[(i, j)]).re;
        }
    }
    acc
}

/// First derivative `F^{ij̄}` of `F(g̃) = f(μ(g̃))` in the ambient gauge,
/// returned as the Hermitian matrix `P = frame · diag(f_i) · frame*`
/// so that `dF = pairing(P, dg̃)`.
pub fn linearization_coeffs(op: &SymmetricOperator, s: &SpectralData) -> Result<CMatrix> {
    let grad = op.gradient(&s.mu)?;
    let n = s.mu.len();
    let mut scaled = s.frame.clone();
    for c in 0..n {
        for r in 0..n {
            scaled[(r, c)] *= grad[c];
        }
    }
    Ok(scaled * s.frame.adjoint())
}

/// `𝓕 = Σ_i f_i(μ)`.
pub fn mean_f_sum(s: &SpectralData, op: &SymmetricOperator) -> Result<f64> {
    Ok(op.gradient(&s.mu)?.iter().sum())
}

/// Second variation `d²F[H, H]` at the pencil described by `s`.
///
/// With `H̃ = frame* H frame`, this is
/// `Σ_{ik} f_ik H̃_ii H̃_kk + Σ_{i≠j} q_ij |H̃_ij|²` where `q_ij` are the pair
/// coefficients.
pub fn second_variation(op: &SymmetricOperator, s: &SpectralData, h: &CMatrix) -> Result<f64> {
    let n = s.mu.len();
    let ht = s.frame.adjoint() * h * &s.frame;
    let hess = op.hessian(&s.mu)?;
    let pc = op.pair_coefficients(&s.mu)?;
    let mut acc = 0.0;
    for i in 0..n {
        for k in 0..n {
            acc += hess[(i, k)] * ht[(i, i)].re * ht[(k, k)].re;
            if i != k {
                acc += pc.offdiag[(i, k)] * ht[(i, k)].norm_sqr();
            }
        }
    }
    Ok(acc)
}
