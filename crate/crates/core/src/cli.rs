//! Command-line front end.
//!
//! Exit codes: 0 success, 1 configuration error, 2 subsolution not certified,
//! 3 path or Newton failure, 4 internal invariant violation.

use crate::config::{OperatorConfig, ProblemConfig};
use crate::error::{Error, Result};
use crate::geometry::Preset;
use crate::grid::ScalarField;
use crate::monitor::{self, quadratic_bound_fit, DichotomyCase, EstimateSnapshot};
use crate::snapshot::FieldSnapshot;
use crate::solver::{
    continuity_solve, newton_solve, normalize, residual, Normalization, PathEntry, PathReport,
    ProblemSpec, SolverState,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::f64::consts::TAU;
use std::path::{Path, PathBuf};

/// Errors below this are reported as exact in convergence tables.
pub const EXACT_THRESHOLD: f64 = 1e-8;

#[derive(Debug, Parser)]
#[command(
    name = "garding",
    version,
    about = "Hessian-type equations on periodic almost Hermitian model manifolds"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Follow the continuity path to t = 1 and write the solution.
    Solve(CommonArgs),
    /// Solve a family of scaled problems and fit the Hessian bound.
    Sweep(CommonArgs),
    /// Certify u = 0 as a C-subsolution.
    CheckSubsolution(CommonArgs),
    /// Manufactured-solution convergence study.
    Mms(CommonArgs),
    /// Diagnostics for a stored solution.
    Report(CommonArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PresetArg {
    Flat,
    Perturbed,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Problem file.
    #[arg(long)]
    pub config: PathBuf,
    /// Points per axis (cubic grid).
    #[arg(long)]
    pub grid: Option<usize>,
    /// Order of σ_k.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, value_enum)]
    pub preset: Option<PresetArg>,
    /// Amplitude of the perturbed structure.
    #[arg(long)]
    pub amplitude: Option<f64>,
    /// Newton residual tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
}

impl CommonArgs {
    /// Load the problem file and apply command-line overrides.
    pub fn load(&self) -> Result<ProblemConfig> {
        let mut cfg = ProblemConfig::load(&self.config)?;
        if let Some(size) = self.grid {
            cfg = cfg.with_size(size);
        }
        if let Some(k) = self.k {
            match cfg.operator {
                OperatorConfig::LogSigmaK { .. } => cfg.operator = OperatorConfig::LogSigmaK { k },
                OperatorConfig::NMinusOneMa => {
                    return Err(Error::Config(
                        "--k applies to the log_sigma_k operator only".into(),
                    ))
                }
            }
        }
        let amplitude = self.amplitude.or(match cfg.geometry {
            Preset::PerturbedJ { amplitude } => Some(amplitude),
            Preset::FlatStandard => None,
        });
        match (self.preset, self.amplitude) {
            (Some(PresetArg::Flat), Some(_)) => {
                return Err(Error::Config(
                    "--amplitude needs the perturbed preset".into(),
                ))
            }
            (Some(PresetArg::Flat), None) => cfg.geometry = Preset::FlatStandard,
            (Some(PresetArg::Perturbed), _) => {
                cfg.geometry = Preset::PerturbedJ {
                    amplitude: amplitude.unwrap_or(0.05),
                }
            }
            (None, Some(a)) => cfg.geometry = Preset::PerturbedJ { amplitude: a },
            (None, None) => {}
        }
        if let Some(tol) = self.tol {
            if !(tol > 0.0) {
                return Err(Error::Config(format!("--tol must be positive, got {tol}")));
            }
            cfg.path.newton.tol = tol;
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        Ok(cfg)
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("out"))
    }
}

/// Process exit code for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::Argument(_) | Error::Io(_) => 1,
        Error::NotAdmissible { .. }
        | Error::NotSubsolution { .. }
        | Error::InadmissibleBackground { .. } => 2,
        Error::PathFailure { .. } | Error::StepFailure { .. } | Error::NonConvergence { .. } => 3,
        Error::Invariant(_)
        | Error::ConeViolation { .. }
        | Error::Pencil(_)
        | Error::Geometry(_) => 4,
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Solve(a) => run_solve(&a.load()?, &a.out_dir()).map(|s| {
            println!(
                "solved: t = {}, c = {:e}, residual = {:e}, C_fit = {}",
                s.t, s.c, s.residual_norm, s.c_fit
            );
        }),
        Command::Sweep(a) => run_sweep(&a.load()?, &a.out_dir()).map(|fits| {
            for f in fits {
                println!("grid {}: C_fit = {}", f.grid, f.c_fit);
            }
        }),
        Command::CheckSubsolution(a) => {
            run_check_subsolution(&a.load()?, a.out.as_deref()).map(|c| {
                println!(
                    "certified: delta = {}, radius = {}, min slack = {}",
                    c.delta, c.radius, c.min_slack
                );
            })
        }
        Command::Mms(a) => run_mms(&a.load()?, &a.out_dir()).map(|rows| {
            for r in rows {
                println!("{:>4}  {:.6e}  {}", r.grid, r.sup_error, r.observed_order);
            }
        }),
        Command::Report(a) => run_report(&a.load()?, &a.out_dir()).map(|r| {
            println!(
                "report: c = {:e}, residual spread = {:e}",
                r.c_estimate, r.residual_spread
            );
        }),
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))
}

fn write_toml<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = toml::to_string(value)
        .map_err(|e| Error::Invariant(format!("serializing {}: {e}", path.display())))?;
    std::fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn csv_error(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

/// `sup|u − v|` after normalizing both fields the same way.
pub fn normalized_error(u: &ScalarField, v: &ScalarField, mode: Normalization) -> f64 {
    let shift = |f: &ScalarField| match mode {
        Normalization::SupZero => f.shifted(-f.max()),
        Normalization::MeanZero => f.shifted(-f.mean()),
    };
    shift(u).sup_distance(&shift(v))
}

/// Shortest round-trip text for a float, in exponent form when very small or large.
fn fmt(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || (1e-4..1e15).contains(&a) || !v.is_finite() {
        v.to_string()
    } else {
        format!("{v:e}")
    }
}

fn write_path_csv(path: &Path, report: &PathReport) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
    let mut header = vec!["t", "c", "residual_norm", "newton_iters"];
    header.extend(EstimateSnapshot::COLUMNS);
    w.write_record(&header).map_err(csv_error)?;
    for e in &report.entries {
        let mut row = vec![
            fmt(e.t),
            fmt(e.c),
            fmt(e.residual_norm),
            e.newton_iters.to_string(),
        ];
        row.extend(e.diagnostics.values().iter().map(|v| fmt(*v)));
        w.write_record(&row).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

/// Random smooth field `a Σ_α cos(2π x^α + φ_α)` with phases drawn from `seed`.
pub fn random_guess(problem: &ProblemSpec, amplitude: f64, seed: u64) -> ScalarField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let axes = problem.geometry.grid.axes();
    let phases: Vec<f64> = (0..axes).map(|_| rng.gen_range(0.0..TAU)).collect();
    let weights: Vec<f64> = (0..axes).map(|_| rng.gen_range(-1.0..1.0)).collect();
    ScalarField::from_fn(&problem.geometry.grid, |x| {
        amplitude
            * (0..axes)
                .map(|a| weights[a] * (TAU * x[a] + phases[a]).cos())
                .sum::<f64>()
            / axes as f64
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveSummary {
    pub operator: String,
    pub preset: String,
    pub grid: Vec<usize>,
    pub seed: u64,
    pub t: f64,
    pub c: f64,
    pub residual_norm: f64,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    pub total_newton_iters: usize,
    pub c_fit: f64,
    pub sup_h_minus_h0: f64,
    pub error_vs_u_star: Option<f64>,
}

fn operator_name(cfg: &ProblemConfig) -> String {
    match cfg.operator {
        OperatorConfig::LogSigmaK { k } => format!("log_sigma_{k}"),
        OperatorConfig::NMinusOneMa => "n_minus_one_ma".into(),
    }
}

/// Solve, returning the normalized final state and the path.
pub fn solve_problem(
    cfg: &ProblemConfig,
    problem: &ProblemSpec,
) -> Result<(SolverState, PathReport)> {
    if cfg.solve.direct_guess_amplitude > 0.0 {
        let guess = random_guess(problem, cfg.solve.direct_guess_amplitude, cfg.seed);
        let start = SolverState::with_guess(problem, guess, 0.0, 1.0)?;
        let s = newton_solve(problem, &start, 1.0, &cfg.path.newton)?;
        let shown = normalize(&s, Normalization::SupZero);
        let diagnostics = monitor::snapshot(problem, &shown)?;
        let report = PathReport {
            entries: vec![PathEntry {
                t: 1.0,
                c: s.c,
                residual_norm: s.residual_norm,
                newton_iters: s.newton_iters,
                u: shown.u.clone(),
                diagnostics,
            }],
            rejected_steps: 0,
        };
        Ok((normalize(&s, problem.normalization), report))
    } else {
        continuity_solve(problem, &cfg.path)
    }
}

pub fn run_solve(cfg: &ProblemConfig, out: &Path) -> Result<SolveSummary> {
    let problem = cfg.problem()?;
    let (state, report) = solve_problem(cfg, &problem)?;
    let r = residual(&problem, &state)?.sup_norm();
    if !(r <= cfg.path.newton.tol) {
        return Err(Error::Invariant(format!(
            "final residual {r:e} exceeds the tolerance"
        )));
    }
    let snaps: Vec<EstimateSnapshot> = report
        .entries
        .iter()
        .map(|e| e.diagnostics.clone())
        .collect();
    let fit = quadratic_bound_fit(&snaps)?;
    let grid = &problem.geometry.grid;
    let summary = SolveSummary {
        operator: operator_name(cfg),
        preset: problem.geometry.preset.name(),
        grid: grid.sizes().to_vec(),
        seed: cfg.seed,
        t: state.t,
        c: state.c,
        residual_norm: r,
        accepted_steps: report.entries.len() - 1,
        rejected_steps: report.rejected_steps,
        total_newton_iters: report.entries.iter().map(|e| e.newton_iters).sum(),
        c_fit: fit.c_fit,
        sup_h_minus_h0: problem.h.sup_distance(problem.h0()),
        error_vs_u_star: problem
            .u_star
            .as_ref()
            .map(|u| normalized_error(&state.u, u, problem.normalization)),
    };
    create_dir(out)?;
    FieldSnapshot::new("u", grid, &summary.preset, state.u.clone())?
        .write(&out.join("u.snapshot"))?;
    write_path_csv(&out.join("path.csv"), &report)?;
    write_toml(&out.join("summary.toml"), &summary)?;
    Ok(summary)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepFit {
    pub grid: usize,
    pub c_fit: f64,
    pub worst_scale: f64,
}

/// Sizes of a sweep or study: the configured list, or the problem grid.
fn ladder(cfg: &ProblemConfig, sizes: &[usize]) -> Result<Vec<usize>> {
    if !sizes.is_empty() {
        return Ok(sizes.to_vec());
    }
    let grid = cfg.grid.build()?;
    let s = grid.sizes();
    if s.iter().any(|&v| v != s[0]) {
        return Err(Error::Config(
            "sweeps over a non-cubic grid need explicit `sizes`".into(),
        ));
    }
    Ok(vec![s[0]])
}

/// Solve the problem family `rhs × scale` on each grid and fit `C`.
pub fn sweep_snapshots(
    cfg: &ProblemConfig,
) -> Result<Vec<(usize, f64, SolverState, EstimateSnapshot)>> {
    if cfg.sweep.scales.is_empty() {
        return Err(Error::Config("sweep needs at least one scale".into()));
    }
    let mut rows = Vec::new();
    for size in ladder(cfg, &cfg.sweep.sizes)? {
        for &scale in &cfg.sweep.scales {
            let mut c = cfg.with_size(size);
            c.rhs = cfg.rhs.scaled(scale)?;
            let problem = c.problem()?;
            let (state, _) = solve_problem(&c, &problem)?;
            let snap = monitor::snapshot(&problem, &normalize(&state, Normalization::SupZero))?;
            rows.push((size, scale, state, snap));
        }
    }
    Ok(rows)
}

pub fn run_sweep(cfg: &ProblemConfig, out: &Path) -> Result<Vec<SweepFit>> {
    let rows = sweep_snapshots(cfg)?;
    create_dir(out)?;
    let mut w = csv::Writer::from_path(out.join("sweep.csv")).map_err(csv_error)?;
    let mut header = vec!["grid", "scale", "c", "residual_norm"];
    header.extend(EstimateSnapshot::COLUMNS);
    header.push("ratio");
    w.write_record(&header).map_err(csv_error)?;
    for (size, scale, state, snap) in &rows {
        let mut row = vec![
            size.to_string(),
            fmt(*scale),
            fmt(state.c),
            fmt(state.residual_norm),
        ];
        row.extend(snap.values().iter().map(|v| fmt(*v)));
        row.push(fmt(snap.ratio()));
        w.write_record(&row).map_err(csv_error)?;
    }
    w.flush()?;
    let mut fits = Vec::new();
    let mut sizes: Vec<usize> = rows.iter().map(|r| r.0).collect();
    sizes.dedup();
    for size in sizes {
        let group: Vec<&(usize, f64, SolverState, EstimateSnapshot)> =
            rows.iter().filter(|r| r.0 == size).collect();
        let snaps: Vec<EstimateSnapshot> = group.iter().map(|r| r.3.clone()).collect();
        let fit = quadratic_bound_fit(&snaps)?;
        fits.push(SweepFit {
            grid: size,
            c_fit: fit.c_fit,
            worst_scale: group[fit.worst_index].1,
        });
    }
    let mut w = csv::Writer::from_path(out.join("sweep_fit.csv")).map_err(csv_error)?;
    for f in &fits {
        w.serialize(f).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(fits)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertificateReport {
    pub certified: bool,
    pub delta: f64,
    pub radius: f64,
    pub min_slack: f64,
}

pub fn run_check_subsolution(cfg: &ProblemConfig, out: Option<&Path>) -> Result<CertificateReport> {
    let problem = cfg.problem()?;
    let zero = ScalarField::zeros(&problem.geometry.grid);
    let cert = problem.certify_subsolution(&zero)?;
    let report = CertificateReport {
        certified: true,
        delta: cert.delta,
        radius: cert.radius,
        min_slack: cert.min_margin(),
    };
    if let Some(dir) = out {
        create_dir(dir)?;
        write_toml(&dir.join("certificate.toml"), &report)?;
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MmsRow {
    pub grid: usize,
    pub sup_error: f64,
    pub c: f64,
    /// `log(e_coarse/e_fine)/log(N_fine/N_coarse)`, `exact` when both errors
    /// are below [`EXACT_THRESHOLD`], `-` on the first row.
    pub observed_order: String,
}

fn write_mms(path: &Path, rows: &[MmsRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
    if rows.is_empty() {
        w.write_record(["grid", "sup_error", "c", "observed_order"])
            .map_err(csv_error)?;
    }
    for r in rows {
        w.serialize(r).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

/// Observed order between two levels of a study.
pub fn observed_order(coarse: (usize, f64), fine: (usize, f64)) -> String {
    if coarse.1 <= EXACT_THRESHOLD && fine.1 <= EXACT_THRESHOLD {
        "exact".into()
    } else {
        ((coarse.1 / fine.1).ln() / (fine.0 as f64 / coarse.0 as f64).ln()).to_string()
    }
}

pub fn run_mms(cfg: &ProblemConfig, out: &Path) -> Result<Vec<MmsRow>> {
    if !matches!(cfg.rhs, crate::config::RhsConfig::Manufactured { .. }) {
        return Err(Error::Config(
            "mms needs a manufactured right-hand side".into(),
        ));
    }
    if cfg.mms.sizes.is_empty() {
        return Err(Error::Config("mms needs at least one grid size".into()));
    }
    create_dir(out)?;
    let mut rows: Vec<MmsRow> = Vec::new();
    for &size in &cfg.mms.sizes {
        let c = cfg.with_size(size);
        let solved = c
            .problem()
            .and_then(|p| solve_problem(&c, &p).map(|s| (p, s)));
        let (problem, (state, _)) = match solved {
            Ok(v) => v,
            Err(e) => {
                write_mms(&out.join("mms.csv"), &rows)?;
                return Err(e);
            }
        };
        let u_star = problem
            .u_star
            .as_ref()
            .expect("manufactured problem carries u*");
        let err = normalized_error(&state.u, u_star, problem.normalization);
        let order = match rows.last() {
            None => "-".into(),
            Some(prev) => observed_order((prev.grid, prev.sup_error), (size, err)),
        };
        rows.push(MmsRow {
            grid: size,
            sup_error: err,
            c: state.c,
            observed_order: order,
        });
    }
    write_mms(&out.join("mms.csv"), &rows)?;
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QSummary {
    pub a: f64,
    pub n_const: f64,
    pub k_const: f64,
    pub omega_points: usize,
    pub max_q: Option<f64>,
    pub max_point: Option<Vec<usize>>,
    pub xi_range_violations: usize,
    pub eta_range_violations: usize,
    pub rho_violations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    /// Mean of `F(ω_u) − h`, the constant `c` that `u` solves for.
    pub c_estimate: f64,
    /// `sup|F(ω_u) − h − c_estimate|`.
    pub residual_spread: f64,
    pub snapshot: EstimateSnapshot,
    pub theta: f64,
    pub uniform_case: usize,
    pub gradient_case: usize,
    pub neither: usize,
    pub q: Vec<QSummary>,
}

pub fn run_report(cfg: &ProblemConfig, out: &Path) -> Result<Report> {
    let problem = cfg.problem()?;
    let grid = problem.geometry.grid.clone();
    let read_field = |p: &Path| -> Result<ScalarField> {
        let snap = FieldSnapshot::read(p)?;
        if snap.header.sizes != grid.sizes() {
            return Err(Error::Config(format!(
                "{} was written on a different grid",
                p.display()
            )));
        }
        Ok(snap.field)
    };
    let path = cfg
        .report
        .solution
        .as_ref()
        .map(|p| cfg.resolve(p))
        .unwrap_or_else(|| out.join("u.snapshot"));
    let u = read_field(&path)?;
    if !u.is_finite() {
        return Err(Error::Invariant(format!(
            "{} has non-finite values",
            path.display()
        )));
    }
    let raw = SolverState {
        u,
        c: 0.0,
        t: 1.0,
        residual_norm: 0.0,
        newton_iters: 0,
    };
    let r = residual(&problem, &raw)
        .map_err(|e| Error::Invariant(format!("stored solution is not admissible: {e}")))?;
    let c_estimate = r.mean();
    let state = SolverState {
        c: c_estimate,
        residual_norm: r.shifted(-c_estimate).sup_norm(),
        ..raw
    };
    let state = normalize(&state, Normalization::SupZero);
    let snapshot =
        monitor::snapshot(&problem, &state).map_err(|e| Error::Invariant(e.to_string()))?;
    let sub = match &cfg.report.subsolution {
        Some(p) => read_field(&cfg.resolve(p))?,
        None => ScalarField::zeros(&grid),
    };
    let theta = cfg.monitor.theta;
    let cases = monitor::subsolution_dichotomy_probe(&problem, &state, &sub, theta)?;
    let count = |k: DichotomyCase| cases.iter().filter(|c| **c == k).count();
    create_dir(out)?;
    let preset = problem.geometry.preset.name();
    let mut q = Vec::new();
    for (i, &a) in cfg.monitor.a_values.iter().enumerate() {
        let d = monitor::q_field(&problem, &state, a);
        FieldSnapshot::new(&format!("q(A={a})"), &grid, &preset, d.q_values(grid.len()))?
            .write(&out.join(format!("q_{i}.snapshot")))?;
        q.push(QSummary {
            a,
            n_const: d.n_const,
            k_const: d.k_const,
            omega_points: d.points.len(),
            max_q: d.max_point.map(|p| p.q),
            max_point: d.max_point.map(|p| grid.coords(p.index)),
            xi_range_violations: d.xi_range_violations.len(),
            eta_range_violations: d.eta_range_violations.len(),
            rho_violations: d.rho_violations.len(),
        });
    }
    let report = Report {
        c_estimate,
        residual_spread: state.residual_norm,
        snapshot,
        theta,
        uniform_case: count(DichotomyCase::UniformCase),
        gradient_case: count(DichotomyCase::GradientCase),
        neither: count(DichotomyCase::Neither),
        q,
    };
    write_toml(&out.join("report.toml"), &report)?;
    Ok(report)
}
