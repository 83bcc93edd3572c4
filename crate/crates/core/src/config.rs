//! TOML run configuration.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::model::ModelParameters;
use crate::report::ReportFormat;
use crate::sector::SectorConfig;
use crate::simulator::{RunConfig, Scheme, YDiscretization};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SectorSection {
    pub epsilon0: f64,
    /// Host-growth bound; derived from the model when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r0: Option<f64>,
}

impl Default for SectorSection {
    fn default() -> Self {
        Self { epsilon0: SectorConfig::DEFAULT_EPSILON0, r0: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub nx_i: usize,
    pub nx_s: usize,
    pub ny: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub modes: Option<usize>,
    pub y_discretization: YDiscretization,
}

impl Default for GridSection {
    fn default() -> Self {
        let r = RunConfig::default();
        Self { nx_i: r.nx_i, nx_s: r.nx_s, ny: r.ny, modes: None, y_discretization: r.y_discretization }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimeSection {
    pub dt: f64,
    pub t_end: f64,
    pub scheme: Scheme,
    pub output_every: usize,
    pub growth_limit: f64,
}

impl Default for TimeSection {
    fn default() -> Self {
        let r = RunConfig::default();
        Self { dt: r.dt, t_end: r.t_end, scheme: r.scheme, output_every: r.output_every, growth_limit: r.growth_limit }
    }
}

/// Initial densities. Each field is an expression in `x` and `y`, or all
/// fields come from a CSV file, or from a seeded random smooth field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IcSection {
    #[serde(rename = "J_I")]
    pub juv_i: String,
    #[serde(rename = "A_I")]
    pub adult_i: String,
    #[serde(rename = "H_I")]
    pub host_i: String,
    #[serde(rename = "J_S")]
    pub juv_s: String,
    #[serde(rename = "A_S")]
    pub adult_s: String,
    #[serde(rename = "H_S")]
    pub host_s: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub csv: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub random: Option<u64>,
}

impl Default for IcSection {
    fn default() -> Self {
        let bump = "sin(pi * y) * sin(pi * (x + ell) / (ell + L))".to_string();
        Self {
            juv_i: bump.clone(),
            adult_i: bump.clone(),
            host_i: bump.clone(),
            juv_s: bump.clone(),
            adult_s: bump.clone(),
            host_s: bump,
            csv: None,
            random: None,
        }
    }
}

impl IcSection {
    /// Expressions ordered `[J_I, A_I, H_I, J_S, A_S, H_S]`.
    pub fn expressions(&self) -> [&str; 6] {
        [&self.juv_i, &self.adult_i, &self.host_i, &self.juv_s, &self.adult_s, &self.host_s]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SnapshotFormat {
    Csv,
    Binary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: String,
    pub snapshots: SnapshotFormat,
    pub report: ReportFormat,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: "skewdiff-out".into(), snapshots: SnapshotFormat::Csv, report: ReportFormat::Text }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ResolveSection {
    pub lambda_re: f64,
    pub lambda_im: f64,
    pub modes: usize,
    /// Intervals per unit length in `x`.
    pub nx: usize,
    pub ny: usize,
    /// `zero`, `random:<seed>` or `file:<path>`.
    pub rhs: String,
    pub estimate_norm: bool,
}

impl Default for ResolveSection {
    fn default() -> Self {
        Self {
            lambda_re: 1.0,
            lambda_im: 0.0,
            modes: crate::resolvent::DEFAULT_MODES,
            nx: 256,
            ny: 256,
            rhs: "random:1".into(),
            estimate_norm: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RhsSource<'a> {
    Zero,
    Random(u64),
    File(&'a str),
}

impl ResolveSection {
    pub fn rhs_source(&self) -> Result<RhsSource<'_>> {
        let s = self.rhs.trim();
        if s == "zero" {
            Ok(RhsSource::Zero)
        } else if let Some(seed) = s.strip_prefix("random:") {
            seed.trim()
                .parse()
                .map(RhsSource::Random)
                .map_err(|_| Error::Config(format!("rhs: bad seed in `{s}`")))
        } else if let Some(path) = s.strip_prefix("file:") {
            Ok(RhsSource::File(path.trim()))
        } else {
            Err(Error::Config(format!("rhs = `{s}` must be zero, random:<seed> or file:<path>")))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifySection {
    pub samples: usize,
    pub symbol_samples: usize,
    pub oracle_cases: usize,
    pub oracle_n: usize,
    pub oracle_levels: usize,
    /// Forcing cells of the closed-form solver per oracle cell.
    pub forcing_refine: usize,
    pub oracle_tolerance: f64,
}

impl Default for VerifySection {
    fn default() -> Self {
        Self {
            samples: 100_000,
            symbol_samples: 10_000,
            oracle_cases: 50,
            oracle_n: 4096,
            oracle_levels: 3,
            forcing_refine: 4,
            oracle_tolerance: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    /// Ray arguments; three rays including one near the sector edge when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub arguments: Option<Vec<f64>>,
    pub nx: usize,
    pub ny: usize,
    pub modes: usize,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self { arguments: None, nx: 128, ny: 128, modes: 32 }
    }
}

impl SweepSection {
    pub fn rays(&self, sector: &SectorConfig) -> Vec<f64> {
        self.arguments
            .clone()
            .unwrap_or_else(|| vec![0.0, PI / 3.0, -(sector.lambda_angle() - 0.01)])
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub seed: u64,
    pub model: ModelParameters,
    pub sector: SectorSection,
    pub grid: GridSection,
    pub time: TimeSection,
    pub ic: IcSection,
    pub output: OutputSection,
    pub resolve: ResolveSection,
    pub verify: VerifySection,
    pub sweep: SweepSection,
}

/// `(line, column)` of the first assignment to `key`, 1-based.
fn locate_key(text: &str, key: &str) -> Option<(usize, usize)> {
    text.lines().enumerate().find_map(|(i, line)| {
        let trimmed = line.trim_start();
        let rest = trimmed.strip_prefix(key)?;
        rest.trim_start().starts_with('=').then(|| (i + 1, line.len() - trimmed.len() + 1))
    })
}

impl Config {
    /// Parse and validate. Failures carry the line and column of the
    /// offending key when it appears in `text`.
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Config = toml::from_str(text).map_err(|e| Error::Config(e.to_string().trim_end().to_string()))?;
        cfg.validate().map_err(|e| {
            let msg = match &e {
                Error::InvalidParams(m) | Error::Config(m) => m.clone(),
                other => other.to_string(),
            };
            let key = msg.split([' ', ':']).next().unwrap_or("");
            match locate_key(text, key) {
                Some((line, col)) => Error::Config(format!("line {line}, column {col}: {msg}")),
                None => Error::Config(msg),
            }
        })?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration is always representable")
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.sector_config()?;
        self.run_config().validate()?;
        let r = &self.resolve;
        if r.nx < 16 || r.ny < 16 {
            return Err(Error::Config(format!("nx: resolve grid ({}, {}) must be at least 16", r.nx, r.ny)));
        }
        if r.modes == 0 || r.modes >= r.ny {
            return Err(Error::Config(format!("modes = {} must lie in 1..{}", r.modes, r.ny)));
        }
        r.rhs_source()?;
        let s = &self.sweep;
        if s.modes == 0 || s.modes >= s.ny || s.nx < 16 {
            return Err(Error::Config(format!(
                "modes = {} must lie in 1..{} with nx >= 16 in [sweep]",
                s.modes, s.ny
            )));
        }
        let v = &self.verify;
        if v.oracle_n < crate::oracle::MIN_RESOLUTION {
            return Err(Error::Config(format!(
                "oracle_n = {} must be >= {}",
                v.oracle_n,
                crate::oracle::MIN_RESOLUTION
            )));
        }
        if v.forcing_refine == 0 || v.oracle_levels == 0 {
            return Err(Error::Config("forcing_refine and oracle_levels must be >= 1".into()));
        }
        if self.ic.csv.is_some() && self.ic.random.is_some() {
            return Err(Error::Config("csv and random initial conditions are exclusive".into()));
        }
        Ok(())
    }

    pub fn sector_config(&self) -> Result<SectorConfig> {
        let r0 = match self.sector.r0 {
            Some(r0) => r0,
            None => self.model.default_r0().ok_or_else(|| {
                Error::Config("r0: no admissible default, host growth exceeds pi^2".into())
            })?,
        };
        SectorConfig::new(self.sector.epsilon0, r0).map_err(|e| Error::Config(format!("epsilon0: {e}")))
    }

    pub fn run_config(&self) -> RunConfig {
        RunConfig {
            dt: self.time.dt,
            t_end: self.time.t_end,
            nx_i: self.grid.nx_i,
            nx_s: self.grid.nx_s,
            ny: self.grid.ny,
            scheme: self.time.scheme,
            output_every: self.time.output_every,
            seed: self.seed,
            y_discretization: self.grid.y_discretization,
            modes: self.grid.modes,
            growth_limit: self.time.growth_limit,
        }
    }
}

/// Documentation of every key, printed by `--help`.
pub const CONFIG_KEYS: &str = "\
CONFIGURATION (TOML; every key optional, unknown keys rejected)
  seed                      integer seed for every random draw
  [model]
    sigma_J_minus/plus      juvenile survival, infected/susceptible habitat, in [0, 1]
    sigma_A_minus/plus      adult survival, in [0, 1]
    sigma_H_minus/plus      host survival, in [0, 1]
    tau_minus/plus          juvenile-to-adult transition fraction, in [0, 1]
    f_A_minus/plus          adult fecundity, >= 0
    f_H_minus/plus          host fecundity, >= 0
    nu                      vertical transmission rate of hosts, >= 0
    Lambda_J/A/H            infection rates of crossing newborns, > 0
    d_J/A/H_minus/plus      diffusion coefficients, > 0
    p_J/A/H                 interface crossing probabilities, in (0, 1)
    ell, L                  widths of the infected and susceptible habitats, > 0
  [sector]
    epsilon0                angle margin in (0, pi/8), default pi/16
    r0                      host-growth bound in (0, pi^2); derived from [model] when absent
  [grid]
    nx_i, nx_s, ny          intervals of the simulation grid, each >= 16
    modes                   sine modes kept in y, default ny - 1
    y_discretization        spectral | finite-difference
  [time]
    dt, t_end               step and horizon
    scheme                  imex | crank-nicolson | fully-implicit-linear
    output_every            snapshot interval in steps
    growth_limit            abort when the norm grows by more than this in one step
  [ic]
    J_I A_I H_I J_S A_S H_S expressions in x, y with sin cos exp sqrt, pi, ell, L
    csv                     read all six fields from a snapshot-style CSV instead
    random                  seed of a random smooth field instead
  [output]
    dir                     output directory
    snapshots               csv | binary
    report                  text | csv | json-lines
  [resolve]
    lambda_re, lambda_im    spectral parameter
    modes, nx, ny           sine modes, x intervals per unit length, y intervals
    rhs                     zero | random:<seed> | file:<path>
    estimate_norm           also estimate the operator norm at lambda
  [verify]
    samples                 random samples per lemma
    symbol_samples          samples of the symbol floor sweep
    oracle_cases, oracle_n  random mode problems and oracle intervals
    oracle_levels           Richardson levels of the oracle
    forcing_refine          closed-form forcing cells per oracle cell
    oracle_tolerance        relative L2 tolerance
  [sweep]
    arguments               ray arguments of lambda
    nx, ny, modes           grid and sine modes of the norm estimate
";
