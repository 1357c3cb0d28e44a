//! Independent oracles and samplers shared by the integration tests.
#![allow(dead_code)]

use garding::catalog::Background;
use garding::cone::SymmetricOperator;
use garding::geometry::{build_geometry, GeometryFields, Preset};
use garding::grid::{PeriodicGrid, ScalarField};
use garding::pencil::{CMatrix, C64};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rustfft::FftPlanner;
use std::f64::consts::TAU;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `σ_k` by enumerating all k-subsets.
pub fn sigma_k_subsets(mu: &[f64], k: usize) -> f64 {
    let n = mu.len();
    let mut total = 0.0;
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize == k {
            total += (0..n)
                .filter(|i| mask & (1 << i) != 0)
                .map(|i| mu[i])
                .product::<f64>();
        }
    }
    total
}

/// Every operator covered by the calculus suite.
pub fn operator_family() -> Vec<SymmetricOperator> {
    let mut ops = Vec::new();
    for n in 2..=4 {
        for k in 1..=n {
            ops.push(SymmetricOperator::log_sigma_k(n, k).unwrap());
        }
    }
    for n in 2..=3 {
        ops.push(SymmetricOperator::n_minus_one_ma(n).unwrap());
    }
    ops
}

/// A random point of the operator's cone at diagonal distance at least `margin`
/// from the boundary.
pub fn cone_sample(op: &SymmetricOperator, rng: &mut ChaCha8Rng, margin: f64) -> Vec<f64> {
    loop {
        let mu: Vec<f64> = (0..op.n).map(|_| rng.gen_range(-1.5..3.0)).collect();
        if op.cone.distance_along_diagonal(&mu) >= margin {
            return mu;
        }
    }
}

fn poly_mul(a: &[C64], b: &[C64]) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Coefficients (constant term first) of `det(G − μ X)` by Laplace expansion
/// with polynomial entries.
pub fn pencil_char_poly(chi: &CMatrix, g: &CMatrix) -> Vec<C64> {
    let n = chi.nrows();
    let entry = |i: usize, j: usize| vec![g[(i, j)], -chi[(i, j)]];
    fn det(rows: &[usize], cols: &[usize], entry: &dyn Fn(usize, usize) -> Vec<C64>) -> Vec<C64> {
        if rows.len() == 1 {
            return entry(rows[0], cols[0]);
        }
        let mut acc = vec![C64::new(0.0, 0.0); rows.len() + 1];
        for (c_pos, &c) in cols.iter().enumerate() {
            let sub_cols: Vec<usize> = cols.iter().copied().filter(|&x| x != c).collect();
            let minor = det(&rows[1..], &sub_cols, entry);
            let term = poly_mul(&entry(rows[0], c), &minor);
            let sign = if c_pos % 2 == 0 { 1.0 } else { -1.0 };
            for (k, t) in term.iter().enumerate() {
                acc[k] += t * sign;
            }
        }
        acc
    }
    let idx: Vec<usize> = (0..n).collect();
    det(&idx, &idx, &entry)
}

fn horner(p: &[C64], z: C64) -> (C64, C64) {
    let mut v = C64::new(0.0, 0.0);
    let mut d = C64::new(0.0, 0.0);
    for c in p.iter().rev() {
        d = d * z + v;
        v = v * z + c;
    }
    (v, d)
}

/// Roots of a polynomial by Aberth–Ehrlich iteration followed by Newton polishing.
pub fn poly_roots(p: &[C64]) -> Vec<C64> {
    let deg = p.len() - 1;
    let lead = p[deg];
    let monic: Vec<C64> = p.iter().map(|c| c / lead).collect();
    let bound = 1.0 + monic[..deg].iter().map(|c| c.norm()).fold(0.0, f64::max);
    let mut z: Vec<C64> = (0..deg)
        .map(|k| C64::from_polar(bound, TAU * (k as f64 + 0.25) / deg as f64))
        .collect();
    for _ in 0..500 {
        let mut moved: f64 = 0.0;
        for k in 0..deg {
            let (v, d) = horner(&monic, z[k]);
            if v.norm() == 0.0 {
                continue;
            }
            let ratio = v / d;
            let s: C64 = (0..deg)
                .filter(|&j| j != k)
                .map(|j| C64::new(1.0, 0.0) / (z[k] - z[j]))
                .sum();
            let w = ratio / (C64::new(1.0, 0.0) - ratio * s);
            z[k] -= w;
            moved = moved.max(w.norm());
        }
        if moved < 1e-15 * bound {
            break;
        }
    }
    for zk in &mut z {
        for _ in 0..3 {
            let (v, d) = horner(&monic, *zk);
            if d.norm() > 0.0 {
                *zk -= v / d;
            }
        }
    }
    z
}

/// Random Hermitian `n × n` matrix with entries in the unit box.
pub fn random_hermitian(n: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    let mut m = CMatrix::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = C64::new(rng.gen_range(-1.0..1.0), 0.0);
        for j in i + 1..n {
            let z = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
        }
    }
    m
}

/// Random Hermitian positive definite matrix `B B* + ½ I`.
pub fn random_hpd(n: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    let b = CMatrix::from_fn(n, n, |_, _| {
        C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    });
    &b * b.adjoint() + CMatrix::identity(n, n) * C64::new(0.5, 0.0)
}

pub fn flat(n: usize, size: usize) -> GeometryFields {
    build_geometry(&PeriodicGrid::cubic(n, size).unwrap(), Preset::FlatStandard).unwrap()
}

pub fn geometry(n: usize, size: usize, preset: Preset) -> GeometryFields {
    build_geometry(&PeriodicGrid::cubic(n, size).unwrap(), preset).unwrap()
}

/// Random smooth field `a Σ_α w_α cos(2π m_α x^α + φ_α) / d` with modes 1 or 2.
pub fn smooth_field(grid: &PeriodicGrid, amplitude: f64, rng: &mut ChaCha8Rng) -> ScalarField {
    let d = grid.axes();
    let w: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let m: Vec<f64> = (0..d).map(|_| rng.gen_range(1..=2) as f64).collect();
    let phi: Vec<f64> = (0..d).map(|_| rng.gen_range(0.0..TAU)).collect();
    let pair = rng.gen_range(0.0..TAU);
    ScalarField::from_fn(grid, |x| {
        let s: f64 = (0..d)
            .map(|a| w[a] * (TAU * m[a] * x[a] + phi[a]).cos())
            .sum();
        amplitude * (s / d as f64 + 0.5 * (TAU * (x[0] + x[d - 1]) + pair).sin())
    })
}

/// Background catalog used across the tests; every entry is positive definite.
pub fn positive_backgrounds() -> Vec<Background> {
    vec![
        Background::Identity,
        Background::Scaled { scale: 2.5 },
        Background::Diagonal {
            entries: vec![3.0, 0.5],
        },
        Background::Wave { amplitude: 0.2 },
        Background::Wave { amplitude: 0.6 },
    ]
}

/// Direct solution of the flat `log σ_1` equation `log(tr g + Δu) = h + c`
/// on a cubic grid via FFT. Returns `(u, c)` with `sup u = 0`.
pub fn sigma1_fft_solve(grid: &PeriodicGrid, trace_g: &[f64], h: &[f64]) -> (ScalarField, f64) {
    let sizes = grid.sizes().to_vec();
    let d = sizes.len();
    let len = grid.len();
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let eh: Vec<f64> = h.iter().map(|v| v.exp()).collect();
    let c = (mean(trace_g) / mean(&eh)).ln();
    let mut data: Vec<rustfft::num_complex::Complex<f64>> = (0..len)
        .map(|i| rustfft::num_complex::Complex::new(c.exp() * eh[i] - trace_g[i], 0.0))
        .collect();
    let mut planner = FftPlanner::<f64>::new();
    let strides: Vec<usize> = (0..d).map(|a| sizes[a + 1..].iter().product()).collect();
    let transform = |data: &mut Vec<rustfft::num_complex::Complex<f64>>,
                     inverse: bool,
                     planner: &mut FftPlanner<f64>| {
        for a in 0..d {
            let nsz = sizes[a];
            let fft = if inverse {
                planner.plan_fft_inverse(nsz)
            } else {
                planner.plan_fft_forward(nsz)
            };
            let mut line = vec![rustfft::num_complex::Complex::new(0.0, 0.0); nsz];
            for start in 0..len {
                if !(start / strides[a]).is_multiple_of(nsz) {
                    continue;
                }
                for (k, l) in line.iter_mut().enumerate() {
                    *l = data[start + k * strides[a]];
                }
                fft.process(&mut line);
                for (k, l) in line.iter().enumerate() {
                    data[start + k * strides[a]] = *l;
                }
            }
        }
    };
    transform(&mut data, false, &mut planner);
    for (idx, v) in data.iter_mut().enumerate() {
        let mut lambda = 0.0;
        for a in 0..d {
            let k = (idx / strides[a]) % sizes[a];
            let h = 1.0 / sizes[a] as f64;
            lambda += 0.5 * (2.0 * (TAU * k as f64 / sizes[a] as f64).cos() - 2.0) / (h * h);
        }
        *v = if idx == 0 {
            rustfft::num_complex::Complex::new(0.0, 0.0)
        } else {
            *v / lambda
        };
    }
    transform(&mut data, true, &mut planner);
    let u: Vec<f64> = data.iter().map(|z| z.re / len as f64).collect();
    let top = u.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (
        ScalarField::new(u.into_iter().map(|v| v - top).collect()),
        c,
    )
}

/// Relative mismatch between central differences of the residual and the
/// linearized operator at `state`, in direction `(psi, c_dot)`.
pub fn linearization_mismatch(
    problem: &garding::solver::ProblemSpec,
    state: &garding::solver::SolverState,
    psi: &ScalarField,
    c_dot: f64,
    step: f64,
) -> f64 {
    use garding::solver::{linearized_apply, residual, SolverState};
    let at = |s: f64| {
        let st = SolverState {
            u: state.u.axpy(s, psi),
            c: state.c + s * c_dot,
            ..state.clone()
        };
        residual(problem, &st).unwrap()
    };
    let (rp, rm) = (at(step), at(-step));
    let lin = linearized_apply(problem, state, psi, c_dot).unwrap();
    let mut worst: f64 = 0.0;
    for i in 0..lin.len() {
        let fd = (rp.values[i] - rm.values[i]) / (2.0 * step);
        worst = worst.max((fd - lin.values[i]).abs());
    }
    worst / lin.sup_norm()
}
