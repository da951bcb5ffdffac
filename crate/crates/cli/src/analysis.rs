//! Runs one configured analysis in memory and collects everything written
//! to `result.json`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use simulband_core::coverage::{run_coverage, CoverageReport, SimScenario};
use simulband_core::estimators::{
    build_effects_model, build_emm_binary_ipw_model, build_emm_binary_model, build_emm_continuous_model,
    build_ipw_effects_model, even_grid, predict_cace, MsmLayout,
};
use simulband_core::mest::{solve, FitResult, SolverOptions};
use simulband_core::regions::{
    band, band_for_grid, bonferroni_critical, ellipsoid, hypervolume_ratio, supt_estimate, wald_intervals, BandKind,
    IntervalSet, DEFAULT_BOUNDARY_POINTS,
};
use simulband_core::{ColumnMapping, Dataset, SplineSpec};

use crate::config::{AnalysisConfig, Command};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultDoc {
    pub schema_version: u32,
    pub command: Command,
    pub config: AnalysisConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data: Option<DataSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit: Option<FitDoc>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub regions: Option<RegionsDoc>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridDoc>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub simulation: Option<CoverageReport>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataSummary {
    pub n: usize,
    pub rows_read: usize,
    pub dropped: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitDoc {
    pub names: Vec<String>,
    pub theta_hat: Vec<f64>,
    /// Row-major sandwich covariance of the full parameter vector.
    pub covariance: Vec<Vec<f64>>,
    pub interest: Vec<usize>,
    pub n: usize,
    pub root_norm: f64,
    pub iterations: usize,
}

impl FitDoc {
    fn new(fit: &FitResult) -> Self {
        Self {
            names: fit.names.clone(),
            theta_hat: fit.theta_hat.clone(),
            covariance: rows(&fit.covariance),
            interest: fit.interest.clone(),
            n: fit.n,
            root_norm: fit.root_norm,
            iterations: fit.iterations,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EllipsoidDoc {
    pub center: Vec<f64>,
    pub covariance: Vec<Vec<f64>>,
    pub chisq_radius: f64,
    pub volume: f64,
    /// Closed polyline (first point repeated) for two parameters.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub boundary: Option<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypervolumeRatios {
    pub bonferroni_over_supt: f64,
    pub supt_over_pointwise: f64,
    pub bonferroni_over_pointwise: f64,
}

impl HypervolumeRatios {
    fn new(p: &IntervalSet, b: &IntervalSet, s: &IntervalSet) -> Self {
        Self {
            bonferroni_over_supt: hypervolume_ratio(b, s),
            supt_over_pointwise: hypervolume_ratio(s, p),
            bonferroni_over_pointwise: hypervolume_ratio(b, p),
        }
    }
}

/// Regions for the interest parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionsDoc {
    pub parameters: Vec<String>,
    pub alpha: f64,
    pub supt_draws: usize,
    pub pointwise: IntervalSet,
    pub bonferroni: IntervalSet,
    pub supt: IntervalSet,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ellipsoid: Option<EllipsoidDoc>,
    pub hypervolume_ratios: HypervolumeRatios,
}

impl RegionsDoc {
    pub fn band(&self, kind: BandKind) -> &IntervalSet {
        match kind {
            BandKind::Pointwise => &self.pointwise,
            BandKind::Bonferroni => &self.bonferroni,
            BandKind::Supt => &self.supt,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCritical {
    pub grid_size: usize,
    pub bonferroni: f64,
    pub supt: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridDoc {
    pub modifier: String,
    pub knots: Vec<f64>,
    pub grid: Vec<f64>,
    pub estimate: Vec<f64>,
    pub pointwise: IntervalSet,
    pub bonferroni: IntervalSet,
    pub supt: IntervalSet,
    /// Critical values for other grid sizes over the same range.
    pub compare: Vec<GridCritical>,
}

impl GridDoc {
    pub fn band(&self, kind: BandKind) -> &IntervalSet {
        match kind {
            BandKind::Pointwise => &self.pointwise,
            BandKind::Bonferroni => &self.bonferroni,
            BandKind::Supt => &self.supt,
        }
    }
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|r| m.row(r).iter().copied().collect()).collect()
}

/// Column roles the configured command reads from the data.
pub fn mapping_for(cfg: &AnalysisConfig) -> ColumnMapping {
    let c = &cfg.columns;
    let (outcomes, modifiers) = match cfg.command {
        Command::Effects => (c.outcomes.clone(), vec![]),
        Command::EmmBinary => (c.outcomes[..1].to_vec(), vec![c.binary_modifier.clone()]),
        Command::EmmContinuous => (c.outcomes[..1].to_vec(), vec![c.continuous_modifier.clone()]),
        Command::Simulate => (vec![], vec![]),
    };
    ColumnMapping {
        action: c.action.clone(),
        outcomes,
        modifiers,
        confounders: if cfg.ipw { c.confounders.clone() } else { vec![] },
    }
}

/// Pointwise, Bonferroni and sup-t bands plus the Wald ellipsoid for an
/// estimate and its covariance.
pub fn regions_for(
    names: Vec<String>,
    theta: &[f64],
    cov: &DMatrix<f64>,
    alpha: f64,
    m: usize,
    seed: u64,
    warnings: &mut Vec<String>,
) -> anyhow::Result<RegionsDoc> {
    let k = theta.len();
    let pointwise = wald_intervals(theta, cov, alpha)?;
    let bonferroni = band(theta, cov, bonferroni_critical(k, alpha), BandKind::Bonferroni)?;
    let supt_est = supt_estimate(cov, alpha, m, seed)?;
    warnings.extend(supt_est.warnings.iter().cloned());
    let supt = band(theta, cov, supt_est.critical_value, BandKind::Supt)?;
    let ellipsoid = if k >= 2 {
        match ellipsoid(theta, cov, alpha, DEFAULT_BOUNDARY_POINTS) {
            Ok(e) => Some(EllipsoidDoc {
                center: e.center.clone(),
                covariance: rows(&e.covariance),
                chisq_radius: e.chisq_radius,
                volume: e.volume(),
                boundary: e.boundary.clone(),
            }),
            Err(err) => {
                warnings.push(format!("ellipsoid not available: {err}"));
                None
            }
        }
    } else {
        None
    };
    let hypervolume_ratios = HypervolumeRatios::new(&pointwise, &bonferroni, &supt);
    Ok(RegionsDoc { parameters: names, alpha, supt_draws: m, pointwise, bonferroni, supt, ellipsoid, hypervolume_ratios })
}

fn interest_regions(fit: &FitResult, cfg: &AnalysisConfig, warnings: &mut Vec<String>) -> anyhow::Result<RegionsDoc> {
    let theta: Vec<f64> = fit.interest_estimate().iter().copied().collect();
    regions_for(fit.interest_names(), &theta, &fit.interest_covariance(), cfg.alpha, cfg.m, cfg.seed, warnings)
}

fn spline_spec(cfg: &AnalysisConfig, data: &Dataset) -> anyhow::Result<SplineSpec> {
    Ok(match &cfg.spline.knots {
        Some(k) => SplineSpec::new(k.clone())?,
        None => SplineSpec::from_percentiles(data.column(&cfg.columns.continuous_modifier)?, &cfg.spline.percentiles)?,
    })
}

fn grid_doc(
    fit: &FitResult,
    layout: &MsmLayout,
    spec: &SplineSpec,
    cfg: &AnalysisConfig,
) -> anyhow::Result<GridDoc> {
    let (lo, hi) = layout.modifier_range;
    let base = predict_cace(fit, layout, &even_grid(lo, hi, cfg.grid_size))?;
    let mut pred = base.clone();
    for kind in BandKind::ALL {
        pred = band_for_grid(&pred, cfg.alpha, kind, cfg.m, cfg.seed)?;
    }
    let take = |kind| pred.band(kind).cloned().expect("band computed");
    let mut compare = Vec::new();
    for &size in &cfg.compare_grids {
        let p = predict_cace(fit, layout, &even_grid(lo, hi, size))?;
        let s = band_for_grid(&p, cfg.alpha, BandKind::Supt, cfg.m, cfg.seed)?;
        compare.push(GridCritical {
            grid_size: size,
            bonferroni: bonferroni_critical(size, cfg.alpha),
            supt: s.band(BandKind::Supt).expect("band computed").critical_value,
        });
    }
    Ok(GridDoc {
        modifier: cfg.columns.continuous_modifier.clone(),
        knots: spec.knots().to_vec(),
        grid: pred.grid.clone(),
        estimate: pred.estimate.clone(),
        pointwise: take(BandKind::Pointwise),
        bonferroni: take(BandKind::Bonferroni),
        supt: take(BandKind::Supt),
        compare,
    })
}

/// Fits the configured model on `data` and builds every region.
pub fn analyze(cfg: &AnalysisConfig, data: &Dataset, summary: Option<DataSummary>) -> anyhow::Result<ResultDoc> {
    let options = SolverOptions::default();
    let c = &cfg.columns;
    let terms = c.terms();
    let mut warnings = Vec::new();
    let (fit, grid) = match cfg.command {
        Command::Effects => {
            let outcomes = [c.outcomes[0].as_str(), c.outcomes[1].as_str()];
            let model = if cfg.ipw {
                build_ipw_effects_model(data, outcomes, &terms)?
            } else {
                build_effects_model(data, outcomes)?
            };
            (solve(&model, &options)?, None)
        }
        Command::EmmBinary => {
            let m = if cfg.ipw {
                build_emm_binary_ipw_model(data, &c.outcomes[0], &c.binary_modifier, &terms)?
            } else {
                build_emm_binary_model(data, &c.outcomes[0], &c.binary_modifier)?
            };
            (solve(&m.model, &options)?, None)
        }
        Command::EmmContinuous => {
            let spec = spline_spec(cfg, data)?;
            let weighted = cfg.ipw.then_some(terms.as_slice());
            let m = build_emm_continuous_model(data, &c.outcomes[0], &c.continuous_modifier, &spec, weighted)?;
            let fit = solve(&m.model, &options)?;
            let grid = grid_doc(&fit, &m.layout, &spec, cfg)?;
            (fit, Some(grid))
        }
        Command::Simulate => anyhow::bail!("simulate takes no data; use `simulate`"),
    };
    warnings.extend(fit.warnings.iter().cloned());
    let regions = interest_regions(&fit, cfg, &mut warnings)?;
    Ok(ResultDoc {
        schema_version: SCHEMA_VERSION,
        command: cfg.command,
        config: cfg.clone(),
        data: summary,
        fit: Some(FitDoc::new(&fit)),
        regions: Some(regions),
        grid,
        simulation: None,
        warnings,
    })
}

pub fn scenario(cfg: &AnalysisConfig) -> SimScenario {
    let s = &cfg.simulate;
    let mut out = SimScenario::standard(s.k, s.rho, s.n, s.reps, cfg.alpha, cfg.seed);
    out.supt_draws = cfg.m;
    out
}

pub fn simulate(cfg: &AnalysisConfig) -> anyhow::Result<ResultDoc> {
    let report = run_coverage(&scenario(cfg))?;
    let mut warnings = Vec::new();
    if report.failures > 0 {
        warnings.push(format!("{} of {} replicates failed", report.failures, report.scenario.reps));
    }
    Ok(ResultDoc {
        schema_version: SCHEMA_VERSION,
        command: Command::Simulate,
        config: cfg.clone(),
        data: None,
        fit: None,
        regions: None,
        grid: None,
        simulation: Some(report),
        warnings,
    })
}
