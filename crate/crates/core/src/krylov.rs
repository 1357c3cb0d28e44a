//! Restarted GMRES with right Jacobi preconditioning.
//!
//! The linearized operator carries first-order bracket terms, so it is not
//! symmetric in general and CG-type methods do not apply.

/// A real linear map `y = A x`.
pub trait LinearOperator: Sync {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]);
}

#[derive(Debug, Clone)]
pub struct GmresConfig {
    /// Relative residual target `‖b − Ax‖ ≤ tol ‖b‖`.
    pub tol: f64,
    /// Total inner iterations across restarts.
    pub max_iters: usize,
    /// Krylov subspace size before restart.
    pub restart: usize,
}

impl GmresConfig {
    /// Relative tolerance `1e-10` and an iteration cap of `10·√dim`.
    pub fn for_dim(dim: usize) -> Self {
        Self {
            tol: 1e-10,
            max_iters: ((10.0 * (dim as f64).sqrt()).ceil() as usize).max(50),
            restart: 120.min(dim.max(1)),
        }
    }
}

#[derive(Debug, Clone)]
pub struct GmresOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub relative_residual: f64,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Solve `A x = b` from `x = 0`. `inv_diag` is the inverse of the Jacobi
/// preconditioner, applied on the right.
pub fn gmres(
    op: &dyn LinearOperator,
    inv_diag: &[f64],
    b: &[f64],
    config: &GmresConfig,
) -> GmresOutcome {
    let n = op.dim();
    assert_eq!(b.len(), n, "right-hand side has wrong length");
    assert_eq!(inv_diag.len(), n, "preconditioner has wrong length");
    let b_norm = norm(b);
    let mut x = vec![0.0; n];
    if b_norm == 0.0 {
        return GmresOutcome {
            x,
            iterations: 0,
            relative_residual: 0.0,
            converged: true,
        };
    }
    let m = config.restart.max(1);
    let target = config.tol * b_norm;
    let mut r = b.to_vec();
    let mut beta = b_norm;
    let mut iterations = 0;
    let mut w = vec![0.0; n];
    let mut z = vec![0.0; n];

    while iterations < config.max_iters {
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
        basis.push(r.iter().map(|v| v / beta).collect());
        let mut hess = vec![vec![0.0; m]; m + 1];
        let mut cs = vec![0.0; m];
        let mut sn = vec![0.0; m];
        let mut g = vec![0.0; m + 1];
        g[0] = beta;
        let mut k = 0;
        while k < m && iterations < config.max_iters {
            for ((zi, vi), di) in z.iter_mut().zip(&basis[k]).zip(inv_diag) {
                *zi = vi * di;
            }
            op.apply(&z, &mut w);
            for (i, v) in basis.iter().enumerate() {
                let h = dot(&w, v);
                hess[i][k] = h;
                for (wi, vi) in w.iter_mut().zip(v) {
                    *wi -= h * vi;
                }
            }
            let h_next = norm(&w);
            hess[k + 1][k] = h_next;
            for i in 0..k {
                let t = cs[i] * hess[i][k] + sn[i] * hess[i + 1][k];
                hess[i + 1][k] = -sn[i] * hess[i][k] + cs[i] * hess[i + 1][k];
                hess[i][k] = t;
            }
            let denom = hess[k][k].hypot(hess[k + 1][k]);
            if denom == 0.0 {
                cs[k] = 1.0;
                sn[k] = 0.0;
            } else {
                cs[k] = hess[k][k] / denom;
                sn[k] = hess[k + 1][k] / denom;
            }
            hess[k][k] = denom;
            hess[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            iterations += 1;
            k += 1;
            if g[k].abs() <= target || h_next <= 1e-14 * b_norm {
                break;
            }
            basis.push(w.iter().map(|v| v / h_next).collect());
        }
        // Back substitution for the k × k triangular system.
        let mut y = vec![0.0; k];
        for i in (0..k).rev() {
            let s: f64 = (i + 1..k).map(|j| hess[i][j] * y[j]).sum();
            y[i] = if hess[i][i] != 0.0 {
                (g[i] - s) / hess[i][i]
            } else {
                0.0
            };
        }
        for (i, yi) in y.iter().enumerate() {
            for ((xj, vj), dj) in x.iter_mut().zip(&basis[i]).zip(inv_diag) {
                *xj += yi * vj * dj;
            }
        }
        op.apply(&x, &mut w);
        for ((ri, bi), wi) in r.iter_mut().zip(b).zip(&w) {
            *ri = bi - wi;
        }
        beta = norm(&r);
        if beta <= target || beta == 0.0 {
            break;
        }
    }
    GmresOutcome {
        x,
        iterations,
        relative_residual: beta / b_norm,
        converged: beta <= target,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Dense(Vec<Vec<f64>>);

    impl LinearOperator for Dense {
        fn dim(&self) -> usize {
            self.0.len()
        }
        fn apply(&self, x: &[f64], y: &mut [f64]) {
            for (yi, row) in y.iter_mut().zip(&self.0) {
                *yi = dot(row, x);
            }
        }
    }

    #[test]
    fn solves_nonsymmetric_system() {
        let a = Dense(vec![
            vec![4.0, 1.0, 0.0, 0.5],
            vec![-1.0, 3.0, 1.0, 0.0],
            vec![0.0, 2.0, 5.0, -1.0],
            vec![0.3, 0.0, 1.0, 2.0],
        ]);
        let b = [1.0, 2.0, 3.0, 4.0];
        let inv_diag = [0.25, 1.0 / 3.0, 0.2, 0.5];
        let out = gmres(
            &a,
            &inv_diag,
            &b,
            &GmresConfig {
                tol: 1e-13,
                max_iters: 50,
                restart: 2,
            },
        );
        assert!(out.converged);
        let mut y = [0.0; 4];
        a.apply(&out.x, &mut y);
        for (yi, bi) in y.iter().zip(&b) {
            assert!((yi - bi).abs() < 1e-11);
        }
    }

    #[test]
    fn zero_rhs_returns_zero() {
        let a = Dense(vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        let out = gmres(&a, &[1.0, 1.0], &[0.0, 0.0], &GmresConfig::for_dim(2));
        assert_eq!(out.x, vec![0.0, 0.0]);
        assert_eq!(out.iterations, 0);
    }
}
