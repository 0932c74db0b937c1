//! Experiment configuration files (TOML).
//!
//! ```toml
//! name = "powell_case1"
//! seed = 0
//!
//! [benchmark]
//! family = "powell"          # quadratic | powell | biggs | rosenbrock
//! s = [10.0, 12.0, 12.0, 1.0]
//! modified = 3
//!
//! [run]
//! k = 2
//! x0 = [-0.15, 0.2, 0.0, -0.2]
//! beta = { policy = "constant", value = 0.009 }
//! r_tol = 1e-6
//!
//! [eigensolver]
//! method = "sirqit"          # exact | sirqit | lobpcg
//! sub_iterations = 1
//! ```

use std::path::{Path, PathBuf};

use serde::Deserialize;

use hisd_core::dynamics::{BetaPolicy, SaddleRunConfig, DEFAULT_FRAME_NOISE, DEFAULT_GRAD_TOL};
use hisd_core::eigensolve::{EigenMethod, EigenSolverConfig};
use hisd_core::landscape::{BenchmarkSpec, DEFAULT_DIMER_LENGTH};
use hisd_core::linalg::DenseMatrix;

/// Environment variable overriding the configured seed.
pub const SEED_ENV: &str = "HISD_SEED";

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}:{line}:{column}: {message}")]
    Parse {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Artifact file stem; defaults to the config file stem.
    pub name: Option<String>,
    #[serde(default)]
    pub seed: u64,
    pub outdir: Option<PathBuf>,
    #[serde(default = "one")]
    pub repeat: usize,
    pub benchmark: BenchmarkSection,
    pub run: RunSection,
    #[serde(default)]
    pub eigensolver: EigenSection,
    #[serde(default)]
    pub init: InitSection,
    #[serde(default)]
    pub theory: TheorySection,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Quadratic,
    Powell,
    Biggs,
    Rosenbrock,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchmarkSection {
    pub family: Family,
    /// Coefficients `s`; defaults to the family's standard set.
    pub s: Option<Vec<f64>>,
    /// Number of modified leading coordinates.
    pub modified: Option<usize>,
    /// Rosenbrock dimension when `s` is not given.
    pub dim: Option<usize>,
    /// Quadratic matrix rows.
    pub matrix: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub k: usize,
    pub x0: Vec<f64>,
    /// Pads `x0` to the benchmark dimension with this value.
    pub x0_fill: Option<f64>,
    pub beta: BetaSection,
    #[serde(default = "default_max_iterations")]
    pub max_iterations: usize,
    #[serde(default = "default_grad_tol")]
    pub grad_tol: f64,
    pub r_tol: Option<f64>,
    #[serde(default)]
    pub diagnostics: bool,
    #[serde(default = "default_tail")]
    pub tail_fraction: f64,
}

fn default_max_iterations() -> usize {
    100_000
}

fn default_grad_tol() -> f64 {
    DEFAULT_GRAD_TOL
}

fn default_tail() -> f64 {
    0.5
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BetaKind {
    Constant,
    TheoryExact,
    TheoryIndex1,
    TheoryIndexk,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BetaSection {
    pub policy: BetaKind,
    pub value: Option<f64>,
    pub alpha: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodName {
    Exact,
    Sirqit,
    Lobpcg,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EigenSection {
    #[serde(default = "default_method")]
    pub method: MethodName,
    #[serde(default = "one")]
    pub sub_iterations: usize,
    /// SIRQIT step; defaults to the run's `β`.
    pub gamma: Option<f64>,
    #[serde(default = "default_dimer_length")]
    pub dimer_length: f64,
    #[serde(default = "yes")]
    pub dimer: bool,
}

fn default_method() -> MethodName {
    MethodName::Sirqit
}

fn default_dimer_length() -> f64 {
    DEFAULT_DIMER_LENGTH
}

fn yes() -> bool {
    true
}

impl Default for EigenSection {
    fn default() -> Self {
        Self {
            method: default_method(),
            sub_iterations: 1,
            gamma: None,
            dimer_length: DEFAULT_DIMER_LENGTH,
            dimer: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitSection {
    /// Norm of the Gaussian perturbation of each initial direction.
    #[serde(default = "default_noise")]
    pub noise: f64,
}

fn default_noise() -> f64 {
    DEFAULT_FRAME_NOISE
}

impl Default for InitSection {
    fn default() -> Self {
        Self { noise: DEFAULT_FRAME_NOISE }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TheorySection {
    /// Pairs sampled for the Lipschitz estimate; 0 skips it.
    pub m_samples: Option<usize>,
    /// Ball radius for the Lipschitz estimate; defaults to `r₀`.
    pub m_radius: Option<f64>,
}

/// Reads and parses `path`, applying the `HISD_SEED` override.
pub fn load(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    let mut cfg = parse(&text, &path.display().to_string())?;
    if cfg.name.is_none() {
        cfg.name = path.file_stem().map(|s| s.to_string_lossy().into_owned());
    }
    apply_seed_override(&mut cfg, std::env::var(SEED_ENV).ok().as_deref(), &path.display().to_string())?;
    Ok(cfg)
}

pub fn apply_seed_override(cfg: &mut ExperimentConfig, value: Option<&str>, path: &str) -> Result<(), ConfigError> {
    if let Some(v) = value {
        cfg.seed = v.trim().parse().map_err(|_| ConfigError::Invalid {
            path: path.to_string(),
            message: format!("{SEED_ENV} must be an unsigned integer, got '{v}'"),
        })?;
    }
    Ok(())
}

/// Parses TOML text; `origin` labels error messages.
pub fn parse(text: &str, origin: &str) -> Result<ExperimentConfig, ConfigError> {
    let mut cfg: ExperimentConfig = toml::from_str(text).map_err(|e| {
        let (line, column) = e.span().map_or((1, 1), |span| line_column(text, span.start));
        ConfigError::Parse {
            path: origin.to_string(),
            line,
            column,
            message: e.message().to_string(),
        }
    })?;
    if let Some(fill) = cfg.run.x0_fill.take() {
        let spec = cfg.benchmark_spec().map_err(|m| ExperimentConfig::invalid(origin, m))?;
        let dim = spec_dim(&spec);
        if cfg.run.x0.len() < dim {
            cfg.run.x0.resize(dim, fill);
        }
    }
    cfg.validate(origin)?;
    Ok(cfg)
}

/// 1-based line and column of byte `offset`.
fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

impl ExperimentConfig {
    fn invalid(origin: &str, message: impl Into<String>) -> ConfigError {
        ConfigError::Invalid {
            path: origin.to_string(),
            message: message.into(),
        }
    }

    fn validate(&self, origin: &str) -> Result<(), ConfigError> {
        let spec = self.benchmark_spec().map_err(|m| Self::invalid(origin, m))?;
        let dim = spec_dim(&spec);
        if self.run.x0.len() != dim {
            return Err(Self::invalid(
                origin,
                format!("run.x0 has {} entries, benchmark dimension is {dim}", self.run.x0.len()),
            ));
        }
        if self.repeat == 0 {
            return Err(Self::invalid(origin, "repeat must be ≥ 1"));
        }
        if !(self.run.tail_fraction > 0.0 && self.run.tail_fraction <= 1.0) {
            return Err(Self::invalid(origin, "run.tail_fraction must lie in (0, 1]"));
        }
        if !(self.init.noise >= 0.0) {
            return Err(Self::invalid(origin, "init.noise must be ≥ 0"));
        }
        self.beta_policy().map_err(|m| Self::invalid(origin, m))?;
        self.run_config()
            .validate(dim)
            .map_err(|e| Self::invalid(origin, e.to_string()))?;
        Ok(())
    }

    pub fn name(&self) -> &str {
        self.name.as_deref().unwrap_or("run")
    }

    pub fn benchmark_spec(&self) -> Result<BenchmarkSpec<f64>, String> {
        let b = &self.benchmark;
        let s = b.s.clone();
        match b.family {
            Family::Quadratic => {
                let rows = b.matrix.as_ref().ok_or("quadratic benchmark needs benchmark.matrix")?;
                let n = rows.len();
                if n == 0 || rows.iter().any(|r| r.len() != n) {
                    return Err("benchmark.matrix must be square".into());
                }
                let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
                Ok(BenchmarkSpec::Quadratic {
                    matrix: DenseMatrix::from_rows_f64(&refs),
                })
            }
            Family::Powell => Ok(BenchmarkSpec::Powell {
                s: s.unwrap_or_else(|| vec![10.0, 12.0, 12.0, 1.0]),
                modified: b.modified.unwrap_or(3),
            }),
            Family::Biggs => Ok(BenchmarkSpec::Biggs {
                s: s.unwrap_or_else(|| vec![4.0, 8.0, 16.0, 8.0, 4.0, 2.0]),
                modified: b.modified.unwrap_or(4),
            }),
            Family::Rosenbrock => {
                let modified = b.modified.unwrap_or(20);
                match s {
                    Some(s) => Ok(BenchmarkSpec::Rosenbrock { s, modified }),
                    None => Ok(BenchmarkSpec::rosenbrock(b.dim.unwrap_or(400), modified)),
                }
            }
        }
    }

    pub fn beta_policy(&self) -> Result<BetaPolicy<f64>, String> {
        let b = &self.run.beta;
        let alpha = || b.alpha.ok_or_else(|| "this beta policy needs run.beta.alpha".to_string());
        Ok(match b.policy {
            BetaKind::Constant => BetaPolicy::Constant(
                b.value.ok_or("constant beta policy needs run.beta.value")?,
            ),
            BetaKind::TheoryExact => BetaPolicy::TheoryExact,
            BetaKind::TheoryIndex1 => BetaPolicy::TheoryIndex1 { alpha: alpha()? },
            BetaKind::TheoryIndexk => BetaPolicy::TheoryIndexK { alpha: alpha()? },
        })
    }

    pub fn eigen_config(&self) -> EigenSolverConfig<f64> {
        let e = &self.eigensolver;
        EigenSolverConfig {
            method: match e.method {
                MethodName::Exact => EigenMethod::Exact,
                MethodName::Sirqit => EigenMethod::Sirqit,
                MethodName::Lobpcg => EigenMethod::Lobpcg,
            },
            sub_iterations: e.sub_iterations,
            gamma: e.gamma,
            dimer_length: e.dimer_length,
            use_dimer: e.dimer,
            diagnostics: false,
        }
    }

    pub fn run_config(&self) -> SaddleRunConfig<f64> {
        let beta = self.beta_policy().unwrap_or(BetaPolicy::Constant(f64::NAN));
        let mut cfg = SaddleRunConfig::new(self.run.k, beta, self.eigen_config());
        cfg.max_iterations = self.run.max_iterations;
        cfg.grad_tol = self.run.grad_tol;
        cfg.r_tol = self.run.r_tol;
        cfg.diagnostics = self.run.diagnostics;
        cfg
    }
}

pub fn spec_dim(spec: &BenchmarkSpec<f64>) -> usize {
    match spec {
        BenchmarkSpec::Quadratic { matrix } => matrix.nrows(),
        BenchmarkSpec::Powell { .. } => 4,
        BenchmarkSpec::Biggs { .. } => 6,
        BenchmarkSpec::Rosenbrock { s, .. } => s.len(),
    }
}
