//! Run configuration (TOML) and its validation into solver inputs.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::domain::{build_domain, GridSpec, Nozzle, TruncatedDomain};
use crate::error::{Error, Result};
use crate::freeboundary::FitOptions;
use crate::gas::GasModel;
use crate::io::{parse_bernoulli_table, parse_nozzle_table, SCHEMA_VERSION};
use crate::minimizer::{InitKind, SolveOptions};
use crate::truncation::Cutoff;
use crate::upstream::{flux_window, BernoulliProfile};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "schema_version")]
    pub schema_version: u32,
    pub gas: GasSection,
    pub bernoulli: BernoulliSource,
    pub nozzle: NozzleSource,
    pub flow: FlowSection,
    pub grid: GridSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub fit: FitSection,
    #[serde(default)]
    pub checks: ChecksSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub threads: Option<usize>,
}

fn schema_version() -> u32 {
    SCHEMA_VERSION
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GasSection {
    pub gamma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BernoulliSource {
    Constant {
        bar_h: f64,
        value: f64,
        #[serde(default = "default_intervals")]
        intervals: usize,
    },
    /// `base + amplitude·(1 - cos(πx₂/H̄))/2`.
    Cosine {
        bar_h: f64,
        base: f64,
        amplitude: f64,
        #[serde(default = "default_intervals")]
        intervals: usize,
    },
    Table { path: PathBuf },
}

fn default_intervals() -> usize {
    64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NozzleSource {
    Log,
    QuadraticPole { length: f64 },
    Table { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowSection {
    #[serde(default)]
    pub q: Option<f64>,
    #[serde(default)]
    pub q_scan: Option<Vec<f64>>,
    #[serde(default = "default_s")]
    pub s: f64,
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub b_prime: Option<f64>,
}

fn default_s() -> f64 {
    0.75
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub mu: f64,
    pub r: f64,
    #[serde(default)]
    pub n1: Option<usize>,
    #[serde(default)]
    pub n2: Option<usize>,
    /// Target spacing; used when `n1`/`n2` are absent.
    #[serde(default)]
    pub h: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    #[serde(default)]
    pub tol: Option<f64>,
    #[serde(default = "default_max_sweeps")]
    pub max_sweeps: usize,
    #[serde(default)]
    pub omega: Option<f64>,
    #[serde(default = "default_theta_rel")]
    pub theta_rel: f64,
    #[serde(default = "default_regularization")]
    pub regularization: f64,
    #[serde(default = "default_init")]
    pub init: InitKind,
}

fn default_max_sweeps() -> usize {
    SolveOptions::default().max_sweeps
}
fn default_theta_rel() -> f64 {
    SolveOptions::default().theta_rel
}
fn default_regularization() -> f64 {
    SolveOptions::default().regularization
}
fn default_init() -> InitKind {
    InitKind::Blend
}

impl Default for SolverSection {
    fn default() -> Self {
        let d = SolveOptions::default();
        Self {
            tol: d.tol,
            max_sweeps: d.max_sweeps,
            omega: d.omega,
            theta_rel: d.theta_rel,
            regularization: d.regularization,
            init: d.init,
        }
    }
}

impl SolverSection {
    pub fn options(&self) -> SolveOptions {
        SolveOptions {
            tol: self.tol,
            max_sweeps: self.max_sweeps,
            omega: self.omega,
            theta_rel: self.theta_rel,
            init: self.init,
            regularization: self.regularization,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitSection {
    #[serde(default)]
    pub fit_tol: Option<f64>,
    #[serde(default)]
    pub lambda0: Option<f64>,
    #[serde(default = "default_trials")]
    pub max_trials: usize,
}

fn default_trials() -> usize {
    FitOptions::default().max_trials
}

impl Default for FitSection {
    fn default() -> Self {
        let d = FitOptions::default();
        Self {
            fit_tol: d.fit_tol,
            lambda0: d.lambda0,
            max_trials: d.max_trials,
        }
    }
}

impl FitSection {
    pub fn options(&self) -> FitOptions {
        FitOptions {
            fit_tol: self.fit_tol,
            lambda0: self.lambda0,
            max_trials: self.max_trials,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChecksSection {
    /// Cells within this distance of the inlet or outlet are left out of the
    /// subsonic margin.
    #[serde(default = "default_margin_band")]
    pub margin_band: f64,
    /// Columns compared against the far-field profiles at each end.
    #[serde(default = "default_farfield_band")]
    pub farfield_band: usize,
    /// Rows used for the smooth-fit slope.
    #[serde(default = "default_slope_rows")]
    pub slope_rows: usize,
    /// Relative tolerance on the downstream mass balance.
    #[serde(default = "default_oracle_tol")]
    pub oracle_tol: f64,
    /// Sections used for the 2D mass-flux check.
    #[serde(default = "default_sections")]
    pub flux_sections: usize,
}

fn default_margin_band() -> f64 {
    0.5
}
fn default_farfield_band() -> usize {
    4
}
fn default_slope_rows() -> usize {
    5
}
fn default_oracle_tol() -> f64 {
    1e-8
}
fn default_sections() -> usize {
    5
}

impl Default for ChecksSection {
    fn default() -> Self {
        Self {
            margin_band: default_margin_band(),
            farfield_band: default_farfield_band(),
            slope_rows: default_slope_rows(),
            oracle_tol: default_oracle_tol(),
            flux_sections: default_sections(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default)]
    pub dir: Option<PathBuf>,
}

/// Solver inputs built from a validated configuration.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub gas: GasModel,
    pub profile: BernoulliProfile,
    pub nozzle: Nozzle,
    pub dom: TruncatedDomain,
    pub cutoff: Cutoff,
}

pub fn parse_config(text: &str) -> Result<RunConfig> {
    toml::from_str(text).map_err(|e| {
        let line = e
            .span()
            .map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1)
            .unwrap_or(0);
        Error::Parse {
            line,
            msg: e.message().to_string(),
        }
    })
}

/// Reads a configuration and resolves table paths against its directory.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let mut cfg = parse_config(&text)?;
    let base = path.parent().unwrap_or(Path::new("."));
    cfg.resolve_paths(base);
    Ok(cfg)
}

impl RunConfig {
    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let BernoulliSource::Table { path } = &mut self.bernoulli {
            fix(path);
        }
        if let NozzleSource::Table { path } = &mut self.nozzle {
            fix(path);
        }
    }

    /// Fluxes requested: the scan list, or the single `q`.
    pub fn fluxes(&self) -> Vec<f64> {
        match (&self.flow.q_scan, self.flow.q) {
            (Some(list), _) => list.clone(),
            (None, Some(q)) => vec![q],
            (None, None) => Vec::new(),
        }
    }

    pub fn profile(&self) -> Result<BernoulliProfile> {
        match &self.bernoulli {
            BernoulliSource::Constant { bar_h, value, intervals } => BernoulliProfile::constant(*bar_h, *value, *intervals),
            BernoulliSource::Cosine {
                bar_h,
                base,
                amplitude,
                intervals,
            } => BernoulliProfile::cosine(*bar_h, *base, *amplitude, *intervals),
            BernoulliSource::Table { path } => {
                let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
                parse_bernoulli_table(&text)
            }
        }
    }

    pub fn nozzle(&self, bar_h: f64) -> Result<Nozzle> {
        match &self.nozzle {
            NozzleSource::Log => Nozzle::log(bar_h),
            NozzleSource::QuadraticPole { length } => Nozzle::quadratic_pole(bar_h, *length),
            NozzleSource::Table { path } => {
                let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
                parse_nozzle_table(&text, bar_h)
            }
        }
    }

    /// Checks every range the solver modules require and builds their inputs.
    pub fn validate(&self) -> Result<Resolved> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Parameter(format!("unsupported schema_version {}", self.schema_version)));
        }
        let gas = GasModel::new(self.gas.gamma)?;
        let profile = self.profile()?;
        let nozzle = self.nozzle(profile.bar_h())?;
        let fluxes = self.fluxes();
        if fluxes.is_empty() {
            return Err(Error::Parameter("flow.q or flow.q_scan is required".into()));
        }
        let window = flux_window(&gas, &profile)?;
        for &q in &fluxes {
            if !window.contains(q) {
                return Err(Error::FluxWindow {
                    q,
                    lower: window.lower(),
                    upper: window.q_upper,
                });
            }
        }
        if !(self.flow.s > 0.5 && self.flow.s < 1.0) {
            return Err(Error::Parameter(format!("flow.s must lie in (1/2, 1), got {}", self.flow.s)));
        }
        let cutoff = match self.flow.epsilon {
            Some(e) => Cutoff::new(e)?,
            None => Cutoff::default_for(&gas, profile.b_min())?,
        };
        let g = self.grid;
        for (name, v) in [("grid.mu", g.mu), ("grid.r", g.r)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Parameter(format!("{name} must be positive, got {v}")));
            }
        }
        let b_mu = nozzle.inlet_height(g.mu)?;
        let (n1, n2) = match (g.n1, g.n2, g.h) {
            (Some(n1), Some(n2), _) => (n1, n2),
            (_, _, Some(h)) if h > 0.0 && h.is_finite() => {
                (((g.mu + g.r) / h).round() as usize, (b_mu / h).round() as usize)
            }
            _ => return Err(Error::Parameter("grid needs n1 and n2, or a positive h".into())),
        };
        if !(8..=4096).contains(&n1) || !(8..=4096).contains(&n2) {
            return Err(Error::Parameter(format!("grid size {n1}x{n2} outside 8..=4096")));
        }
        let dom = build_domain(&nozzle, g.mu, g.r, GridSpec { n1, n2 })?;
        let s = &self.solver;
        if s.tol.is_some_and(|t| !(t > 0.0)) || !(s.theta_rel > 0.0 && s.theta_rel < 1e-3) || s.max_sweeps == 0 {
            return Err(Error::Parameter("solver tolerances must be positive".into()));
        }
        if s.omega.is_some_and(|w| !(1.0..2.0).contains(&w)) || !(s.regularization >= 0.0) {
            return Err(Error::Parameter("solver.omega must lie in [1, 2) and regularization ≥ 0".into()));
        }
        if self.fit.fit_tol.is_some_and(|t| !(t > 0.0)) || self.fit.lambda0.is_some_and(|l| !(l > 0.0)) || self.fit.max_trials < 2 {
            return Err(Error::Parameter("fit options out of range".into()));
        }
        if let Some(b) = self.flow.b_prime {
            if !(b > 0.0 && b < b_mu) {
                return Err(Error::Parameter(format!("flow.b_prime must lie in (0, {b_mu}), got {b}")));
            }
        }
        if self.threads == Some(0) {
            return Err(Error::Parameter("threads must be at least 1".into()));
        }
        let c = self.checks;
        if !(c.margin_band >= 0.0) || c.slope_rows < 2 || !(c.oracle_tol > 0.0) || c.flux_sections == 0 {
            return Err(Error::Parameter("check options out of range".into()));
        }
        Ok(Resolved {
            gas,
            profile,
            nozzle,
            dom,
            cutoff,
        })
    }
}
