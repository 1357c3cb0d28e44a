//! Problem files.
//!
//! A problem file is TOML:
//!
//! ```toml
//! seed = 7
//!
//! [grid]
//! n = 2
//! size = 8
//!
//! [geometry]
//! kind = "perturbed_j"
//! amplitude = 0.05
//!
//! [operator]
//! kind = "log_sigma_k"
//! k = 2
//!
//! [background]
//! kind = "wave"
//! amplitude = 0.2
//!
//! [rhs]
//! kind = "manufactured"
//! mode = "analytic"
//! u_star = { kind = "cos_product", amplitude = 0.02, axes = [0, 2] }
//! ```

use crate::catalog::{AnalyticField, Background};
use crate::cone::SymmetricOperator;
use crate::error::{Error, Result};
use crate::geometry::{build_geometry, GeometryFields, Preset};
use crate::grid::{PeriodicGrid, ScalarField};
use crate::snapshot::FieldSnapshot;
use crate::solver::{
    h_zero_of, manufactured_problem_analytic, Normalization, PathControls, ProblemSpec, RhsMode,
};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n: usize,
    /// Points per axis on a cubic grid; ignored when `sizes` is given.
    #[serde(default)]
    pub size: Option<usize>,
    #[serde(default)]
    pub sizes: Option<Vec<usize>>,
}

impl GridConfig {
    pub fn build(&self) -> Result<PeriodicGrid> {
        match (&self.sizes, self.size) {
            (Some(s), _) => PeriodicGrid::new(self.n, s),
            (None, Some(s)) => PeriodicGrid::cubic(self.n, s),
            (None, None) => Err(Error::Config("grid needs `size` or `sizes`".into())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OperatorConfig {
    LogSigmaK { k: usize },
    NMinusOneMa,
}

impl OperatorConfig {
    pub fn build(&self, n: usize) -> Result<SymmetricOperator> {
        match *self {
            OperatorConfig::LogSigmaK { k } => SymmetricOperator::log_sigma_k(n, k),
            OperatorConfig::NMinusOneMa => SymmetricOperator::n_minus_one_ma(n),
        }
    }
}

/// Right-hand side `h`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RhsConfig {
    /// `h = h₀`.
    Stationary,
    /// `h = h₀ + field`.
    H0Plus { field: AnalyticField },
    /// `h = field`.
    Analytic { field: AnalyticField },
    /// `h = F(ω + ∂∂̄u*)`.
    Manufactured {
        u_star: AnalyticField,
        #[serde(default = "default_rhs_mode")]
        mode: RhsMode,
    },
    /// `h` read from a field snapshot, relative to the problem file.
    Snapshot { path: PathBuf },
}

fn default_rhs_mode() -> RhsMode {
    RhsMode::Analytic
}

impl RhsConfig {
    /// The same kind of right-hand side with its field multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Result<Self> {
        Ok(match self {
            RhsConfig::Stationary => RhsConfig::Stationary,
            RhsConfig::H0Plus { field } => RhsConfig::H0Plus {
                field: field.scaled(s),
            },
            RhsConfig::Analytic { field } => RhsConfig::Analytic {
                field: field.scaled(s),
            },
            RhsConfig::Manufactured { u_star, mode } => RhsConfig::Manufactured {
                u_star: u_star.scaled(s),
                mode: *mode,
            },
            RhsConfig::Snapshot { .. } => {
                return Err(Error::Config(
                    "a snapshot right-hand side cannot be scaled".into(),
                ))
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MonitorConfig {
    /// Values of `A` for the `Q` field in reports.
    pub a_values: Vec<f64>,
    /// `θ` for the subsolution dichotomy probe.
    pub theta: f64,
}

impl Default for MonitorConfig {
    fn default() -> Self {
        Self {
            a_values: vec![1.0],
            theta: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MmsConfig {
    /// Cubic grid sizes, coarse to fine.
    pub sizes: Vec<usize>,
}

impl Default for MmsConfig {
    fn default() -> Self {
        Self { sizes: vec![8, 16] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    /// Multipliers applied to the right-hand side field.
    pub scales: Vec<f64>,
    /// Cubic grid sizes; empty means the problem grid only.
    pub sizes: Vec<usize>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            scales: vec![0.25, 0.5, 0.75, 1.0, 1.25],
            sizes: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveConfig {
    /// When positive, skip the path and run Newton at `t = 1` from a random
    /// smooth guess of this size drawn with `seed`.
    pub direct_guess_amplitude: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportConfig {
    /// Solution snapshot to analyse, relative to the problem file.
    pub solution: Option<PathBuf>,
    /// Optional subsolution snapshot for the dichotomy probe; `u̲ = 0` otherwise.
    pub subsolution: Option<PathBuf>,
}

fn default_geometry() -> Preset {
    Preset::FlatStandard
}

fn default_background() -> Background {
    Background::Identity
}

fn default_normalization() -> Normalization {
    Normalization::SupZero
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    #[serde(default)]
    pub seed: u64,
    pub grid: GridConfig,
    #[serde(default = "default_geometry")]
    pub geometry: Preset,
    pub operator: OperatorConfig,
    #[serde(default = "default_background")]
    pub background: Background,
    pub rhs: RhsConfig,
    #[serde(default = "default_normalization")]
    pub normalization: Normalization,
    #[serde(default)]
    pub path: PathControls,
    #[serde(default)]
    pub monitor: MonitorConfig,
    #[serde(default)]
    pub mms: MmsConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub solve: SolveConfig,
    #[serde(default)]
    pub report: ReportConfig,
    /// Directory that relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl ProblemConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    /// Same problem on a cubic grid of `size` points per axis.
    pub fn with_size(&self, size: usize) -> Self {
        let mut c = self.clone();
        c.grid.size = Some(size);
        c.grid.sizes = None;
        c
    }

    pub fn geometry(&self) -> Result<GeometryFields> {
        build_geometry(&self.grid.build()?, self.geometry)
    }

    /// Assemble the discrete problem.
    pub fn problem(&self) -> Result<ProblemSpec> {
        let geometry = self.geometry()?;
        let n = geometry.n();
        let op = self.operator.build(n)?;
        let omega = self.background.evaluate(&geometry.grid)?;
        let mut p = match &self.rhs {
            RhsConfig::Stationary => ProblemSpec::stationary(geometry, omega, op)?,
            RhsConfig::H0Plus { field } => {
                field
                    .check_axes(geometry.grid.axes())
                    .map_err(|e| Error::Config(e.to_string()))?;
                let h0 = h_zero_of(&geometry, &omega, &op)?;
                let h = h0.axpy(1.0, &field.sample(&geometry.grid));
                ProblemSpec::new(geometry, omega, op, h, self.normalization)?
            }
            RhsConfig::Analytic { field } => {
                field
                    .check_axes(geometry.grid.axes())
                    .map_err(|e| Error::Config(e.to_string()))?;
                let h = field.sample(&geometry.grid);
                ProblemSpec::new(geometry, omega, op, h, self.normalization)?
            }
            RhsConfig::Manufactured { u_star, mode } => {
                manufactured_problem_analytic(geometry, omega, op, u_star, *mode)?
            }
            RhsConfig::Snapshot { path } => {
                let snap = FieldSnapshot::read(&self.resolve(path))?;
                if snap.header.sizes != geometry.grid.sizes() {
                    return Err(Error::Config(format!(
                        "snapshot grid {:?} does not match the problem grid {:?}",
                        snap.header.sizes,
                        geometry.grid.sizes()
                    )));
                }
                ProblemSpec::new(geometry, omega, op, snap.field, self.normalization)?
            }
        };
        p.normalization = self.normalization;
        Ok(p)
    }

    /// `u*` on this grid, when the right-hand side is manufactured.
    pub fn u_star(&self, grid: &PeriodicGrid) -> Option<ScalarField> {
        match &self.rhs {
            RhsConfig::Manufactured { u_star, .. } => Some(u_star.sample(grid)),
            _ => None,
        }
    }
}
