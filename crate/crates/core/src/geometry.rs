//! The model almost Hermitian manifold: a flat torus with metric `χ = I` and
//! an almost complex structure `J` that is either the standard one or a
//! smooth rotation of it.
//!
//! Every point carries a χ-unitary (1,0)-frame `e_i = Σ_α e_i^α ∂_α` and the
//! coefficients of the bracket corrections, so that
//!
//! ```text
//! (∂∂̄u)(e_i, ē_j) = e_i ē_j u − [e_i, ē_j]^{(0,1)} u
//!                 = Σ_{αβ} e_i^α conj(e_j^β) ∂_α∂_β u + Σ_β c_ij^β ∂_β u.
//! ```

use crate::catalog::{AnalyticField, Jet};
use crate::error::{Error, Result};
use crate::grid::{Derivatives, PeriodicGrid, ScalarField, MAX_AXES};
use crate::pencil::{hermitian_defect, CMatrix, HermitianPencil, C64};
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Preset {
    FlatStandard,
    /// `J = R J₀ Rᵀ` with `R(x)` the Cayley transform of a periodic
    /// skew-symmetric field of size `amplitude`.
    PerturbedJ {
        amplitude: f64,
    },
}

impl Preset {
    pub fn name(&self) -> String {
        match self {
            Preset::FlatStandard => "flat".into(),
            Preset::PerturbedJ { amplitude } => format!("perturbed({amplitude})"),
        }
    }
}

/// Frames, structure and bracket data on every grid point.
#[derive(Debug, Clone)]
pub struct GeometryFields {
    pub grid: PeriodicGrid,
    pub preset: Preset,
    /// Riemannian metric in coordinates; the identity for every preset.
    pub chi: DMatrix<f64>,
    /// `J` in coordinates, `2n × 2n` row-major per point.
    j_field: Vec<f64>,
    /// `e_i^α`, `n × 2n` per point.
    frame: Vec<C64>,
    /// `b_ij^k` with `[e_i, ē_j]^{(0,1)} = Σ_k b_ij^k ē_k`, `n × n × n` per point.
    bracket: Vec<C64>,
    /// `c_ij^β`, the full first-order part of `(∂∂̄u)(e_i, ē_j)`, `n × n × 2n` per point.
    first_order: Vec<C64>,
}

fn skew(d: usize, a: usize, b: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(d, d);
    m[(a, b)] = 1.0;
    m[(b, a)] = -1.0;
    m
}

fn standard_j(d: usize) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(d, d);
    for a in 0..d / 2 {
        j[(2 * a + 1, 2 * a)] = 1.0;
        j[(2 * a, 2 * a + 1)] = -1.0;
    }
    j
}

/// Skew generator field `A(x)` and its coordinate derivatives.
fn rotation_generator(
    d: usize,
    x: &[f64; MAX_AXES],
    amplitude: f64,
) -> (DMatrix<f64>, Vec<DMatrix<f64>>) {
    // (coefficient, d coefficient / dx^γ for each γ, generator)
    let mut terms: Vec<(f64, [f64; MAX_AXES], DMatrix<f64>)> = Vec::new();
    if d == 2 {
        let arg = TAU * (x[0] + x[1]);
        terms.push((
            arg.sin(),
            [TAU * arg.cos(), TAU * arg.cos(), 0.0, 0.0],
            skew(2, 0, 1),
        ));
    } else {
        let a1 = TAU * x[1];
        terms.push((a1.sin(), [0.0, TAU * a1.cos(), 0.0, 0.0], skew(4, 0, 2)));
        let a2 = TAU * (x[0] + x[3]);
        terms.push((
            a2.sin(),
            [TAU * a2.cos(), 0.0, 0.0, TAU * a2.cos()],
            skew(4, 0, 3),
        ));
        let a3 = TAU * x[2];
        terms.push((a3.cos(), [0.0, 0.0, -TAU * a3.sin(), 0.0], skew(4, 1, 2)));
    }
    let mut a = DMatrix::zeros(d, d);
    let mut da = vec![DMatrix::zeros(d, d); d];
    for (c, dc, s) in &terms {
        a += s * (amplitude * c);
        for g in 0..d {
            da[g] += s * (amplitude * dc[g]);
        }
    }
    (a, da)
}

impl GeometryFields {
    pub fn build(grid: &PeriodicGrid, preset: Preset) -> Result<Self> {
        let amplitude = match preset {
            Preset::FlatStandard => 0.0,
            Preset::PerturbedJ { amplitude } => {
                if !amplitude.is_finite() || amplitude.abs() > 1.0 {
                    return Err(Error::Argument(format!(
                        "perturbation amplitude must be finite with |a| <= 1, got {amplitude}"
                    )));
                }
                amplitude
            }
        };
        let n = grid.n();
        let d = grid.axes();
        let j0 = standard_j(d);
        let eye = DMatrix::<f64>::identity(d, d);
        let sqrt_half = std::f64::consts::FRAC_1_SQRT_2;
        // Standard frame ε_i = (E_{2i} − i E_{2i+1})/√2.
        let eps = |i: usize, alpha: usize| -> C64 {
            if alpha == 2 * i {
                C64::new(sqrt_half, 0.0)
            } else if alpha == 2 * i + 1 {
                C64::new(0.0, -sqrt_half)
            } else {
                C64::new(0.0, 0.0)
            }
        };

        struct PointData {
            j: Vec<f64>,
            frame: Vec<C64>,
            bracket: Vec<C64>,
            first_order: Vec<C64>,
        }

        let points: Vec<Result<PointData>> = (0..grid.len())
            .into_par_iter()
            .map(|idx| {
                let x = grid.position(idx);
                let (r, dr) = if amplitude == 0.0 {
                    (eye.clone(), vec![DMatrix::zeros(d, d); d])
                } else {
                    let (a, da) = rotation_generator(d, &x, amplitude);
                    let inv = (&eye - &a)
                        .try_inverse()
                        .ok_or_else(|| Error::Geometry("Cayley transform is singular".into()))?;
                    let r = &inv * (&eye + &a);
                    let dr: Vec<_> = da.iter().map(|dag| &inv * dag * (&eye + &r)).collect();
                    (r, dr)
                };
                let j = &r * &j0 * r.transpose();
                // e_i^α and ∂_γ e_i^α.
                let e = |i: usize, alpha: usize| -> C64 {
                    (0..d).map(|b| eps(i, b) * r[(alpha, b)]).sum()
                };
                let de = |g: usize, i: usize, alpha: usize| -> C64 {
                    (0..d).map(|b| eps(i, b) * dr[g][(alpha, b)]).sum()
                };
                let mut frame = vec![C64::new(0.0, 0.0); n * d];
                for i in 0..n {
                    for alpha in 0..d {
                        frame[i * d + alpha] = e(i, alpha);
                    }
                }
                let mut bracket = vec![C64::new(0.0, 0.0); n * n * n];
                let mut first_order = vec![C64::new(0.0, 0.0); n * n * d];
                for i in 0..n {
                    for jj in 0..n {
                        // [e_i, ē_j]^β and the e_i(conj e_j^β) term.
                        let mut lie = vec![C64::new(0.0, 0.0); d];
                        let mut direct = vec![C64::new(0.0, 0.0); d];
                        for beta in 0..d {
                            for alpha in 0..d {
                                let a_term = frame[i * d + alpha] * de(alpha, jj, beta).conj();
                                direct[beta] += a_term;
                                lie[beta] +=
                                    a_term - frame[jj * d + alpha].conj() * de(alpha, i, beta);
                            }
                        }
                        for k in 0..n {
                            let b: C64 = (0..d).map(|beta| lie[beta] * frame[k * d + beta]).sum();
                            bracket[(i * n + jj) * n + k] = b;
                        }
                        for beta in 0..d {
                            let corr: C64 = (0..n)
                                .map(|k| bracket[(i * n + jj) * n + k] * frame[k * d + beta].conj())
                                .sum();
                            first_order[(i * n + jj) * d + beta] = direct[beta] - corr;
                        }
                    }
                }
                Ok(PointData {
                    j: j.transpose().iter().copied().collect(),
                    frame,
                    bracket,
                    first_order,
                })
            })
            .collect();

        let mut geom = Self {
            grid: grid.clone(),
            preset,
            chi: eye,
            j_field: Vec::with_capacity(grid.len() * d * d),
            frame: Vec::with_capacity(grid.len() * n * d),
            bracket: Vec::with_capacity(grid.len() * n * n * n),
            first_order: Vec::with_capacity(grid.len() * n * n * d),
        };
        for p in points {
            let p = p?;
            geom.j_field.extend(p.j);
            geom.frame.extend(p.frame);
            geom.bracket.extend(p.bracket);
            geom.first_order.extend(p.first_order);
        }
        geom.verify()?;
        Ok(geom)
    }

    /// Checks `J² = −I`, `Jᵀ χ J = χ` and frame unitarity at every point.
    pub fn verify(&self) -> Result<()> {
        let d = self.grid.axes();
        let n = self.grid.n();
        for idx in 0..self.grid.len() {
            let j = self.j_at(idx);
            let jj = &j * &j + DMatrix::<f64>::identity(d, d);
            if jj.amax() > 1e-12 {
                return Err(Error::Geometry(format!(
                    "J^2 != -I at point {idx} (defect {:e})",
                    jj.amax()
                )));
            }
            let compat = j.transpose() * &self.chi * &j - &self.chi;
            if compat.amax() > 1e-12 {
                return Err(Error::Geometry(format!(
                    "J is not χ-compatible at point {idx}"
                )));
            }
            for a in 0..n {
                for b in 0..n {
                    let ip: C64 = (0..d)
                        .map(|al| {
                            self.frame_coeff(idx, a, al) * self.frame_coeff(idx, b, al).conj()
                        })
                        .sum();
                    let want = if a == b { 1.0 } else { 0.0 };
                    if (ip - C64::new(want, 0.0)).norm() > 1e-10 {
                        return Err(Error::Geometry(format!(
                            "frame is not unitary at point {idx}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.grid.n()
    }

    pub fn j_at(&self, idx: usize) -> DMatrix<f64> {
        let d = self.grid.axes();
        DMatrix::from_row_slice(d, d, &self.j_field[idx * d * d..(idx + 1) * d * d])
    }

    /// `e_i^α` at a point.
    #[inline]
    pub fn frame_coeff(&self, idx: usize, i: usize, alpha: usize) -> C64 {
        let (n, d) = (self.grid.n(), self.grid.axes());
        self.frame[(idx * n + i) * d + alpha]
    }

    /// `b_ij^k`: the `ē_k` component of `[e_i, ē_j]`.
    pub fn bracket_coeff(&self, idx: usize, i: usize, j: usize, k: usize) -> C64 {
        let n = self.grid.n();
        self.bracket[((idx * n + i) * n + j) * n + k]
    }

    #[inline]
    pub fn first_order_coeff(&self, idx: usize, i: usize, j: usize, beta: usize) -> C64 {
        let (n, d) = (self.grid.n(), self.grid.axes());
        self.first_order[((idx * n + i) * n + j) * d + beta]
    }

    pub fn max_bracket(&self) -> f64 {
        self.bracket.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    /// `(∂∂̄u)(e_i, ē_j)` assembled from derivatives of `u` at one point,
    /// before Hermitian symmetrization.
    pub fn assemble_block(
        &self,
        idx: usize,
        first: &[f64; MAX_AXES],
        second: &[[f64; MAX_AXES]; MAX_AXES],
    ) -> CMatrix {
        let (n, d) = (self.grid.n(), self.grid.axes());
        CMatrix::from_fn(n, n, |i, j| {
            let mut acc = C64::new(0.0, 0.0);
            for a in 0..d {
                let ea = self.frame_coeff(idx, i, a);
                for b in 0..d {
                    acc += ea * self.frame_coeff(idx, j, b).conj() * second[a][b];
                }
                acc += self.first_order_coeff(idx, i, j, a) * first[a];
            }
            acc
        })
    }

    fn block_from_derivatives(&self, idx: usize, dv: &Derivatives) -> CMatrix {
        self.assemble_block(idx, &dv.first, &dv.second)
    }

    /// Continuum `∂∂̄` of an analytic field, from its exact derivatives.
    pub fn ddbar_exact(&self, field: &AnalyticField) -> Vec<CMatrix> {
        let d = self.grid.axes();
        (0..self.grid.len())
            .into_par_iter()
            .map(|idx| {
                let Jet { first, second, .. } = field.jet(&self.grid.position(idx), d);
                crate::pencil::symmetrize(&self.assemble_block(idx, &first, &second))
            })
            .collect()
    }
}

/// Build the geometry for a preset.
pub fn build_geometry(grid: &PeriodicGrid, preset: Preset) -> Result<GeometryFields> {
    GeometryFields::build(grid, preset)
}

/// Per-point Hermitian blocks `(∂∂̄u)(e_i, ē_j)` and the largest
/// anti-Hermitian part removed by symmetrization.
#[derive(Debug, Clone)]
pub struct DdbarField {
    pub blocks: Vec<CMatrix>,
    pub symmetrization_defect: f64,
}

pub fn ddbar(geom: &GeometryFields, u: &ScalarField) -> DdbarField {
    let raw: Vec<(CMatrix, f64)> = (0..geom.grid.len())
        .into_par_iter()
        .map(|idx| {
            let b = geom.block_from_derivatives(idx, &geom.grid.derivatives(&u.values, idx));
            let defect = hermitian_defect(&b);
            (crate::pencil::symmetrize(&b), defect)
        })
        .collect();
    let symmetrization_defect = raw.iter().fold(0.0, |m: f64, (_, d)| m.max(*d));
    DdbarField {
        blocks: raw.into_iter().map(|(b, _)| b).collect(),
        symmetrization_defect,
    }
}

/// `g̃ = g + ∂∂̄u` at one point, symmetrized.
#[inline]
pub fn omega_u_at(geom: &GeometryFields, omega: &CMatrix, u: &[f64], idx: usize) -> CMatrix {
    let b = geom.block_from_derivatives(idx, &geom.grid.derivatives(u, idx));
    crate::pencil::symmetrize(&(omega + b))
}

/// Pencils `(χ, g + ∂∂̄u)` at every grid point, in the unitary frame.
pub fn omega_u(
    geom: &GeometryFields,
    omega_field: &[CMatrix],
    u: &ScalarField,
) -> Result<Vec<HermitianPencil>> {
    let dd = ddbar(geom, u);
    omega_field
        .iter()
        .zip(dd.blocks)
        .map(|(g, b)| HermitianPencil::unitary_gauge(crate::pencil::symmetrize(&(g + b))))
        .collect()
}

/// `Δ^C u = tr_χ ∂∂̄u`.
pub fn canonical_laplacian(geom: &GeometryFields, u: &ScalarField) -> ScalarField {
    let n = geom.n();
    ScalarField::new(
        (0..geom.grid.len())
            .into_par_iter()
            .map(|idx| {
                let b = geom.block_from_derivatives(idx, &geom.grid.derivatives(&u.values, idx));
                (0..n).map(|i| b[(i, i)].re).sum()
            })
            .collect(),
    )
}

/// Discrete real Hessian (coordinate second differences) at a point.
pub fn real_hessian_at(geom: &GeometryFields, u: &ScalarField, idx: usize) -> DMatrix<f64> {
    let d = geom.grid.axes();
    let dv = geom.grid.derivatives(&u.values, idx);
    DMatrix::from_fn(d, d, |a, b| dv.second[a][b])
}

/// `sup_x |∇²u|` (Frobenius norm). With `χ = I` the Levi-Civita connection is
/// flat, so coordinate second differences are the covariant Hessian.
pub fn real_hessian_sup(geom: &GeometryFields, u: &ScalarField) -> f64 {
    let d = geom.grid.axes();
    (0..geom.grid.len())
        .into_par_iter()
        .map(|idx| {
            let dv = geom.grid.derivatives(&u.values, idx);
            let mut s = 0.0;
            for a in 0..d {
                for b in 0..d {
                    s += dv.second[a][b] * dv.second[a][b];
                }
            }
            s.sqrt()
        })
        .reduce(|| 0.0, f64::max)
}

/// `sup_x |∇u|_χ` from centered first differences.
pub fn gradient_sup(geom: &GeometryFields, u: &ScalarField) -> f64 {
    let d = geom.grid.axes();
    (0..geom.grid.len())
        .into_par_iter()
        .map(|idx| {
            let dv = geom.grid.derivatives(&u.values, idx);
            dv.first[..d].iter().map(|v| v * v).sum::<f64>().sqrt()
        })
        .reduce(|| 0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn flat_preset_has_no_brackets() {
        let grid = PeriodicGrid::cubic(2, 4).unwrap();
        let g = build_geometry(&grid, Preset::FlatStandard).unwrap();
        assert_eq!(g.max_bracket(), 0.0);
        assert!(g.first_order.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn zero_perturbation_is_flat() {
        let grid = PeriodicGrid::cubic(2, 4).unwrap();
        let a = build_geometry(&grid, Preset::FlatStandard).unwrap();
        let b = build_geometry(&grid, Preset::PerturbedJ { amplitude: 0.0 }).unwrap();
        assert_eq!(a.frame, b.frame);
        assert_eq!(a.j_field, b.j_field);
        assert_eq!(a.first_order, b.first_order);
    }

    #[test]
    fn perturbed_structure_is_compatible_and_non_trivial() {
        let grid = PeriodicGrid::cubic(2, 6).unwrap();
        let g = build_geometry(&grid, Preset::PerturbedJ { amplitude: 0.05 }).unwrap();
        g.verify().unwrap();
        assert!(g.max_bracket() > 1e-3);
        assert!(build_geometry(&grid, Preset::PerturbedJ { amplitude: 2.0 }).is_err());
    }

    #[test]
    fn constant_is_annihilated() {
        let grid = PeriodicGrid::cubic(2, 4).unwrap();
        let g = build_geometry(&grid, Preset::PerturbedJ { amplitude: 0.05 }).unwrap();
        let dd = ddbar(&g, &ScalarField::constant(&grid, 2.5));
        assert!(dd.blocks.iter().all(|b| b.iter().all(|z| z.norm() == 0.0)));
    }

    #[test]
    fn flat_laplacian_of_cosine() {
        let grid = PeriodicGrid::cubic(1, 32).unwrap();
        let g = build_geometry(&grid, Preset::FlatStandard).unwrap();
        let u = ScalarField::from_fn(&grid, |x| (2.0 * PI * x[0]).cos());
        let lap = canonical_laplacian(&g, &u);
        let h = 1.0 / 32.0;
        for (idx, v) in lap.values.iter().enumerate() {
            let exact = -2.0 * PI * PI * (2.0 * PI * grid.position(idx)[0]).cos();
            assert!((v - exact).abs() < 2.0 * PI.powi(4) / 3.0 * h * h);
        }
    }
}
