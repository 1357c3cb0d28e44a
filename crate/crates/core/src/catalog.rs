//! Named analytic fields and background forms.
//!
//! Fields carry exact first and second derivatives so manufactured right-hand
//! sides can be assembled from the continuum operator. Axis indices are
//! zero-based: axes `2a` and `2a+1` are the real and imaginary directions of
//! the a-th complex coordinate.

use crate::error::{Error, Result};
use crate::grid::{PeriodicGrid, ScalarField, MAX_AXES};
use crate::pencil::{CMatrix, C64};
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

/// Value, gradient and Hessian of a function at a point.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub first: [f64; MAX_AXES],
    pub second: [[f64; MAX_AXES]; MAX_AXES],
}

fn one() -> u32 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AnalyticField {
    Zero,
    Constant {
        value: f64,
    },
    /// `a cos(2π m (x^axis + phase))`
    CosAxis {
        amplitude: f64,
        axis: usize,
        #[serde(default = "one")]
        freq: u32,
        #[serde(default)]
        phase: f64,
    },
    /// `a cos(2π m (x^p + phase)) cos(2π m x^q)`
    CosProduct {
        amplitude: f64,
        axes: [usize; 2],
        #[serde(default = "one")]
        freq: u32,
        #[serde(default)]
        phase: f64,
    },
    /// `a Σ_α sin(2π m x^α + 2π phase)` over every axis of the grid.
    SinSum {
        amplitude: f64,
        #[serde(default = "one")]
        freq: u32,
        #[serde(default)]
        phase: f64,
    },
    Sum {
        terms: Vec<AnalyticField>,
    },
}

impl AnalyticField {
    pub fn check_axes(&self, axes: usize) -> Result<()> {
        let bad = match self {
            AnalyticField::CosAxis { axis, .. } => *axis >= axes,
            AnalyticField::CosProduct { axes: [p, q], .. } => *p >= axes || *q >= axes || p == q,
            AnalyticField::Sum { terms } => {
                for t in terms {
                    t.check_axes(axes)?;
                }
                false
            }
            _ => false,
        };
        if bad {
            return Err(Error::Config(format!(
                "field {self:?} does not fit a grid with {axes} axes"
            )));
        }
        Ok(())
    }

    pub fn scaled(&self, s: f64) -> Self {
        match self.clone() {
            AnalyticField::Zero => AnalyticField::Zero,
            AnalyticField::Constant { value } => AnalyticField::Constant { value: s * value },
            AnalyticField::CosAxis {
                amplitude,
                axis,
                freq,
                phase,
            } => AnalyticField::CosAxis {
                amplitude: s * amplitude,
                axis,
                freq,
                phase,
            },
            AnalyticField::CosProduct {
                amplitude,
                axes,
                freq,
                phase,
            } => AnalyticField::CosProduct {
                amplitude: s * amplitude,
                axes,
                freq,
                phase,
            },
            AnalyticField::SinSum {
                amplitude,
                freq,
                phase,
            } => AnalyticField::SinSum {
                amplitude: s * amplitude,
                freq,
                phase,
            },
            AnalyticField::Sum { terms } => AnalyticField::Sum {
                terms: terms.iter().map(|t| t.scaled(s)).collect(),
            },
        }
    }

    pub fn jet(&self, x: &[f64; MAX_AXES], axes: usize) -> Jet {
        let mut j = Jet::default();
        match *self {
            AnalyticField::Zero => {}
            AnalyticField::Constant { value } => j.value = value,
            AnalyticField::CosAxis {
                amplitude,
                axis,
                freq,
                phase,
            } => {
                let w = TAU * freq as f64;
                let arg = w * (x[axis] + phase);
                j.value = amplitude * arg.cos();
                j.first[axis] = -amplitude * w * arg.sin();
                j.second[axis][axis] = -amplitude * w * w * arg.cos();
            }
            AnalyticField::CosProduct {
                amplitude,
                axes: [p, q],
                freq,
                phase,
            } => {
                let w = TAU * freq as f64;
                let (cp, sp) = ((w * (x[p] + phase)).cos(), (w * (x[p] + phase)).sin());
                let (cq, sq) = ((w * x[q]).cos(), (w * x[q]).sin());
                j.value = amplitude * cp * cq;
                j.first[p] = -amplitude * w * sp * cq;
                j.first[q] = -amplitude * w * cp * sq;
                j.second[p][p] = -amplitude * w * w * cp * cq;
                j.second[q][q] = -amplitude * w * w * cp * cq;
                j.second[p][q] = amplitude * w * w * sp * sq;
                j.second[q][p] = j.second[p][q];
            }
            AnalyticField::SinSum {
                amplitude,
                freq,
                phase,
            } => {
                let w = TAU * freq as f64;
                for a in 0..axes {
                    let arg = w * x[a] + TAU * phase;
                    j.value += amplitude * arg.sin();
                    j.first[a] = amplitude * w * arg.cos();
                    j.second[a][a] = -amplitude * w * w * arg.sin();
                }
            }
            AnalyticField::Sum { ref terms } => {
                for t in terms {
                    let tj = t.jet(x, axes);
                    j.value += tj.value;
                    for a in 0..MAX_AXES {
                        j.first[a] += tj.first[a];
                        for b in 0..MAX_AXES {
                            j.second[a][b] += tj.second[a][b];
                        }
                    }
                }
            }
        }
        j
    }

    pub fn sample(&self, grid: &PeriodicGrid) -> ScalarField {
        let axes = grid.axes();
        ScalarField::from_fn(grid, |x| self.jet(&x, axes).value)
    }
}

/// Background real (1,1)-form `ω`, given by its components `g_{ij̄}` in the
/// unitary frame of the geometry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Background {
    /// `g = χ`.
    Identity,
    Scaled {
        scale: f64,
    },
    /// Constant diagonal `g = diag(entries)`.
    Diagonal {
        entries: Vec<f64>,
    },
    /// `g_ii = 1 + a cos(2π x^{2i})`, `g_{01̄} = (a/2) e^{iπ/4} sin(2π(x^0 + x^last))`.
    Wave {
        amplitude: f64,
    },
    /// `base` everywhere except one grid point, where `g = diag(diagonal)`.
    WithDefect {
        base: Box<Background>,
        point: Vec<usize>,
        diagonal: Vec<f64>,
    },
    /// `ω = (tr_χ η) χ − (n−1) η` for a Hermitian `η`; then `T(μ(ω))` are the
    /// eigenvalues of `η`.
    FromEta {
        eta: Box<Background>,
    },
}

impl Background {
    pub fn evaluate(&self, grid: &PeriodicGrid) -> Result<Vec<CMatrix>> {
        let n = grid.n();
        let axes = grid.axes();
        let real = |v: f64| C64::new(v, 0.0);
        Ok(match self {
            Background::Identity => vec![CMatrix::identity(n, n); grid.len()],
            Background::Scaled { scale } => {
                vec![CMatrix::identity(n, n) * real(*scale); grid.len()]
            }
            Background::Diagonal { entries } => {
                if entries.len() != n {
                    return Err(Error::Config(format!("diagonal needs {n} entries")));
                }
                let m = CMatrix::from_fn(
                    n,
                    n,
                    |i, j| if i == j { real(entries[i]) } else { real(0.0) },
                );
                vec![m; grid.len()]
            }
            Background::Wave { amplitude } => (0..grid.len())
                .map(|idx| {
                    let x = grid.position(idx);
                    let mut m = CMatrix::identity(n, n);
                    for i in 0..n {
                        m[(i, i)] = real(1.0 + amplitude * (TAU * x[2 * i]).cos());
                    }
                    if n == 2 {
                        let b = C64::from_polar(
                            0.5 * amplitude * (TAU * (x[0] + x[axes - 1])).sin(),
                            std::f64::consts::FRAC_PI_4,
                        );
                        m[(0, 1)] = b;
                        m[(1, 0)] = b.conj();
                    }
                    m
                })
                .collect(),
            Background::WithDefect {
                base,
                point,
                diagonal,
            } => {
                if point.len() != axes || point.iter().zip(grid.sizes()).any(|(p, s)| p >= s) {
                    return Err(Error::Config(format!(
                        "defect point {point:?} is not on the grid"
                    )));
                }
                if diagonal.len() != n {
                    return Err(Error::Config(format!("defect diagonal needs {n} entries")));
                }
                let mut field = base.evaluate(grid)?;
                field[grid.index(point)] =
                    CMatrix::from_fn(
                        n,
                        n,
                        |i, j| if i == j { real(diagonal[i]) } else { real(0.0) },
                    );
                field
            }
            Background::FromEta { eta } => {
                let eta = eta.evaluate(grid)?;
                let nm1 = real(n as f64 - 1.0);
                eta.into_iter()
                    .map(|e| {
                        let tr = e.trace();
                        CMatrix::identity(n, n) * C64::new(tr.re, 0.0) - e * nm1
                    })
                    .collect()
            }
        })
    }
}
