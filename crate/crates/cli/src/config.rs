//! Analysis configuration: built-in defaults, an optional TOML file and
//! command-line overrides, applied in that order.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use simulband_core::estimators::CovariateTerm;
use simulband_core::regions::DEFAULT_DRAWS;
use simulband_core::spline::DEFAULT_KNOT_PERCENTILES;
use thiserror::Error;

pub const SEED_ENV: &str = "SIMULBAND_SEED";
pub const DEFAULT_SEED: u64 = 20_250_101;
pub const DEFAULT_GRID_SIZE: usize = 50;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("invalid config {path}: {source}")]
    Parse { path: PathBuf, source: toml::de::Error },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Effects,
    EmmBinary,
    EmmContinuous,
    Simulate,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Effects => "effects",
            Command::EmmBinary => "emm-binary",
            Command::EmmContinuous => "emm-continuous",
            Command::Simulate => "simulate",
        }
    }
}

/// A column computed from another column at ingestion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum DerivedColumn {
    /// Number of `breaks` that are `<= value`, so breaks `[90, 100]` map
    /// 70-89 to 0, 90-99 to 1 and 100 to 2.
    Bins { name: String, from: String, breaks: Vec<f64> },
    /// 1 when the value is one of `values`, else 0.
    Indicator { name: String, from: String, values: Vec<f64> },
    /// Pairs `[from, to]`; values not listed are missing, which drops the row.
    Recode { name: String, from: String, map: Vec<[f64; 2]> },
}

impl DerivedColumn {
    pub fn name(&self) -> &str {
        match self {
            DerivedColumn::Bins { name, .. }
            | DerivedColumn::Indicator { name, .. }
            | DerivedColumn::Recode { name, .. } => name,
        }
    }

    pub fn source(&self) -> &str {
        match self {
            DerivedColumn::Bins { from, .. }
            | DerivedColumn::Indicator { from, .. }
            | DerivedColumn::Recode { from, .. } => from,
        }
    }

    /// NaN marks a missing result.
    pub fn apply(&self, x: f64) -> f64 {
        match self {
            DerivedColumn::Bins { breaks, .. } => breaks.iter().filter(|b| **b <= x).count() as f64,
            DerivedColumn::Indicator { values, .. } => f64::from(u8::from(values.contains(&x))),
            DerivedColumn::Recode { map, .. } => map.iter().find(|[k, _]| *k == x).map_or(f64::NAN, |[_, v]| *v),
        }
    }
}

/// Missing keys in a config file keep their defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Columns {
    pub action: String,
    /// Two outcomes for `effects`; the first is used by the regression models.
    pub outcomes: Vec<String>,
    pub binary_modifier: String,
    pub continuous_modifier: String,
    pub confounders: Vec<String>,
    /// Confounders expanded into indicator columns in the propensity model.
    pub categorical: Vec<String>,
}

impl Default for Columns {
    fn default() -> Self {
        Self {
            action: "treat".into(),
            outcomes: vec!["cd420".into(), "cd820".into()],
            binary_modifier: "gender".into(),
            continuous_modifier: "cd40".into(),
            confounders: ["age", "race", "drugs", "karnof_cat", "cd40", "cd80"].map(String::from).to_vec(),
            categorical: vec!["karnof_cat".into()],
        }
    }
}

impl Columns {
    pub fn terms(&self) -> Vec<CovariateTerm> {
        self.confounders
            .iter()
            .map(|c| {
                if self.categorical.contains(c) {
                    CovariateTerm::Categorical(c.clone())
                } else {
                    CovariateTerm::Linear(c.clone())
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplineConfig {
    /// Explicit knots; when absent they are placed at `percentiles` of the
    /// modifier.
    pub knots: Option<Vec<f64>>,
    pub percentiles: Vec<f64>,
}

impl Default for SplineConfig {
    fn default() -> Self {
        Self { knots: None, percentiles: DEFAULT_KNOT_PERCENTILES.to_vec() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub k: usize,
    pub rho: f64,
    pub n: usize,
    pub reps: usize,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self { k: 2, rho: 0.0, n: 500, reps: 10_000 }
    }
}

/// Fully resolved settings for one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisConfig {
    pub command: Command,
    pub data_path: Option<PathBuf>,
    pub columns: Columns,
    pub derive: Vec<DerivedColumn>,
    pub ipw: bool,
    pub spline: SplineConfig,
    pub grid_size: usize,
    /// Extra grid sizes whose critical values are reported for comparison.
    pub compare_grids: Vec<usize>,
    pub alpha: f64,
    pub m: usize,
    pub seed: u64,
    pub simulate: SimulateConfig,
    /// Not part of the analysis; excluded from result.json.
    #[serde(skip)]
    pub output_dir: PathBuf,
}

impl AnalysisConfig {
    pub fn defaults(command: Command) -> Self {
        Self {
            command,
            data_path: None,
            columns: Columns::default(),
            derive: vec![],
            ipw: false,
            spline: SplineConfig::default(),
            grid_size: DEFAULT_GRID_SIZE,
            compare_grids: vec![50, 1000],
            alpha: 0.05,
            m: DEFAULT_DRAWS,
            seed: DEFAULT_SEED,
            simulate: SimulateConfig::default(),
            output_dir: PathBuf::from("."),
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad(format!("alpha must lie in (0, 1), got {}", self.alpha));
        }
        if self.m < simulband_core::regions::MIN_DRAWS {
            return bad(format!("m must be at least {}", simulband_core::regions::MIN_DRAWS));
        }
        if self.grid_size == 0 || self.compare_grids.contains(&0) {
            return bad("grid sizes must be positive".into());
        }
        match self.command {
            Command::Simulate => {}
            Command::Effects if self.columns.outcomes.len() != 2 => {
                return bad("effects needs exactly two outcomes".into());
            }
            _ if self.columns.outcomes.is_empty() => return bad("at least one outcome is required".into()),
            _ => {}
        }
        if self.command != Command::Simulate && self.data_path.is_none() {
            return bad(format!("{} needs a data file", self.command.name()));
        }
        Ok(())
    }
}

/// Optional settings as read from a TOML file or the command line.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    pub data: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
    pub ipw: Option<bool>,
    pub grid_size: Option<usize>,
    pub compare_grids: Option<Vec<usize>>,
    pub alpha: Option<f64>,
    pub m: Option<usize>,
    pub seed: Option<u64>,
    pub columns: Option<Columns>,
    #[serde(default)]
    pub derive: Vec<DerivedColumn>,
    pub spline: Option<SplineConfig>,
    pub simulate: Option<SimulateOverrides>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateOverrides {
    pub k: Option<usize>,
    pub rho: Option<f64>,
    pub n: Option<usize>,
    pub reps: Option<usize>,
}

impl Overrides {
    /// Reads a TOML file. Relative data and output paths are taken relative
    /// to the file's directory.
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.into(), source })?;
        let mut out: Overrides =
            toml::from_str(&text).map_err(|source| ConfigError::Parse { path: path.into(), source })?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut out.data, &mut out.output_dir].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(out)
    }

    fn apply(self, cfg: &mut AnalysisConfig) {
        if let Some(v) = self.data {
            cfg.data_path = Some(v);
        }
        if let Some(v) = self.output_dir {
            cfg.output_dir = v;
        }
        if let Some(v) = self.ipw {
            cfg.ipw = v;
        }
        if let Some(v) = self.grid_size {
            cfg.grid_size = v;
        }
        if let Some(v) = self.compare_grids {
            cfg.compare_grids = v;
        }
        if let Some(v) = self.alpha {
            cfg.alpha = v;
        }
        if let Some(v) = self.m {
            cfg.m = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.columns {
            cfg.columns = v;
        }
        if !self.derive.is_empty() {
            cfg.derive = self.derive;
        }
        if let Some(v) = self.spline {
            cfg.spline = v;
        }
        if let Some(s) = self.simulate {
            let t = &mut cfg.simulate;
            t.k = s.k.unwrap_or(t.k);
            t.rho = s.rho.unwrap_or(t.rho);
            t.n = s.n.unwrap_or(t.n);
            t.reps = s.reps.unwrap_or(t.reps);
        }
    }
}

/// Precedence: `flags` > `file` > `SIMULBAND_SEED` (seed only) > defaults.
pub fn resolve(
    command: Command,
    file: Option<Overrides>,
    flags: Overrides,
    env_seed: Option<&str>,
) -> Result<AnalysisConfig, ConfigError> {
    let mut cfg = AnalysisConfig::defaults(command);
    if let Some(s) = env_seed {
        cfg.seed = s
            .trim()
            .parse()
            .map_err(|_| ConfigError::Invalid(format!("{SEED_ENV} is not an unsigned integer: {s:?}")))?;
    }
    if let Some(f) = file {
        f.apply(&mut cfg);
    }
    flags.apply(&mut cfg);
    cfg.validate()?;
    Ok(cfg)
}
