//! Estimating functions for the three analyses (two mean differences, a
//! linear model with a binary modifier, a spline model with a continuous
//! modifier) in randomized and inverse-probability-weighted forms.
//!
//! Weighted variants stack a logistic propensity-score score in front of the
//! outcome equations so that the sandwich covariance carries the uncertainty
//! of the estimated weights.

use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{DataError, Dataset};
use crate::mest::{EstimatingModel, FitResult, MestError};
use crate::regions::{clipped_factor, GridPrediction};
use crate::spline::{SplineError, SplineSpec};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EstimatorError {
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Model(#[from] MestError),
    #[error(transparent)]
    Spline(#[from] SplineError),
    #[error("no observations with action = {arm}")]
    EmptyArm { arm: u8 },
    #[error("grid value {value} outside observed modifier range [{min}, {max}]")]
    GridOutOfRange { value: f64, min: f64, max: f64 },
    #[error("{0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, EstimatorError>;

/// Propensity scores are clamped to `[PS_CLAMP, 1 - PS_CLAMP]`.
pub const PS_CLAMP: f64 = 1e-12;

pub fn expit(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn clamped_expit(x: f64) -> (f64, bool) {
    let p = expit(x);
    if p < PS_CLAMP {
        (PS_CLAMP, true)
    } else if p > 1.0 - PS_CLAMP {
        (1.0 - PS_CLAMP, true)
    } else {
        (p, false)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn check_arms(action: &[f64]) -> Result<()> {
    for arm in [0u8, 1] {
        if !action.iter().any(|&a| a == f64::from(arm)) {
            return Err(EstimatorError::EmptyArm { arm });
        }
    }
    Ok(())
}

/// How a confounder enters the propensity-score design.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "column", rename_all = "lowercase")]
pub enum CovariateTerm {
    Linear(String),
    /// One indicator per level except the smallest, which is the reference.
    Categorical(String),
}

impl CovariateTerm {
    pub fn column(&self) -> &str {
        match self {
            CovariateTerm::Linear(c) | CovariateTerm::Categorical(c) => c,
        }
    }
}

/// Row-major propensity-score design with a leading intercept.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfounderDesign {
    pub names: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    /// Terms that were constant and therefore absorbed by the intercept.
    pub dropped: Vec<String>,
}

pub fn confounder_design(data: &Dataset, terms: &[CovariateTerm]) -> Result<ConfounderDesign> {
    let n = data.n();
    let mut names = vec!["intercept".to_string()];
    let mut columns: Vec<Vec<f64>> = vec![vec![1.0; n]];
    let mut dropped = Vec::new();
    for term in terms {
        let col = data.column(term.column())?;
        let first = col[0];
        if col.iter().all(|&v| v == first) {
            dropped.push(term.column().to_string());
            continue;
        }
        match term {
            CovariateTerm::Linear(name) => {
                names.push(name.clone());
                columns.push(col.to_vec());
            }
            CovariateTerm::Categorical(name) => {
                let mut levels = col.to_vec();
                levels.sort_by(f64::total_cmp);
                levels.dedup();
                for level in &levels[1..] {
                    names.push(format!("{name}[{level}]"));
                    columns.push(col.iter().map(|&v| f64::from(u8::from(v == *level))).collect());
                }
            }
        }
    }
    let rows = (0..n).map(|i| columns.iter().map(|c| c[i]).collect()).collect();
    Ok(ConfounderDesign { names, rows, dropped })
}

/// Shared propensity-score block of a weighted model.
struct Propensity {
    design: Vec<Vec<f64>>,
    action: Vec<f64>,
    dim: usize,
}

impl Propensity {
    fn new(design: ConfounderDesign, action: &[f64]) -> Self {
        let dim = design.names.len();
        Self { design: design.rows, action: action.to_vec(), dim }
    }

    /// Writes the logistic score into `out[..dim]` and returns `(a, p)`.
    fn score(&self, i: usize, eta: &[f64], out: &mut [f64]) -> (f64, f64) {
        let w = &self.design[i];
        let (p, _) = clamped_expit(dot(w, eta));
        let a = self.action[i];
        for (o, wj) in out[..self.dim].iter_mut().zip(w) {
            *o = (a - p) * wj;
        }
        (a, p)
    }

    fn clamp_count(&self, eta: &[f64]) -> usize {
        self.design.iter().filter(|w| clamped_expit(dot(w, eta)).1).count()
    }
}

fn propensity_names(design: &ConfounderDesign) -> Vec<String> {
    design.names.iter().map(|n| format!("eta[{n}]")).collect()
}

fn clamp_diagnostic(ps: Arc<Propensity>) -> impl Fn(&[f64]) -> Vec<String> + Send + Sync {
    move |theta: &[f64]| {
        let count = ps.clamp_count(&theta[..ps.dim]);
        if count == 0 {
            vec![]
        } else {
            vec![format!("propensity score clamped to [{PS_CLAMP:e}, 1-{PS_CLAMP:e}] for {count} observation(s)")]
        }
    }
}

const EFFECT_NAMES: [&str; 6] = ["mu1", "mu0", "omega1", "omega0", "psi1", "psi2"];

/// Difference in arm means for two outcomes:
/// `theta = (mu1, mu0, omega1, omega0, psi1, psi2)`, interest `(psi1, psi2)`.
pub fn build_effects_model(data: &Dataset, outcomes: [&str; 2]) -> Result<EstimatingModel> {
    let a = data.action().to_vec();
    check_arms(&a)?;
    let y1 = data.column(outcomes[0])?.to_vec();
    let y2 = data.column(outcomes[1])?.to_vec();
    let (m1, m2) = (mean(&y1), mean(&y2));
    let initial = vec![m1, m1, m2, m2, 0.0, 0.0];
    let names = EFFECT_NAMES.iter().map(|s| s.to_string()).collect();
    let model = EstimatingModel::new(names, initial, data.n(), move |i, t, out| {
        let (ai, u, v) = (a[i], y1[i], y2[i]);
        out[0] = ai * (u - t[0]);
        out[1] = (1.0 - ai) * (u - t[1]);
        out[2] = ai * (v - t[2]);
        out[3] = (1.0 - ai) * (v - t[3]);
        out[4] = (t[0] - t[1]) - t[4];
        out[5] = (t[2] - t[3]) - t[5];
    })?;
    Ok(model.with_interest(vec![4, 5])?)
}

/// Inverse-probability-weighted (Hajek) version of [`build_effects_model`]:
/// `theta = (eta, mu1, mu0, omega1, omega0, psi1, psi2)`.
pub fn build_ipw_effects_model(
    data: &Dataset,
    outcomes: [&str; 2],
    confounders: &[CovariateTerm],
) -> Result<EstimatingModel> {
    let a = data.action();
    check_arms(a)?;
    let design = confounder_design(data, confounders)?;
    let mut names = propensity_names(&design);
    names.extend(EFFECT_NAMES.iter().map(|s| s.to_string()));
    let ps = Arc::new(Propensity::new(design, a));
    let q = ps.dim;
    let y1 = data.column(outcomes[0])?.to_vec();
    let y2 = data.column(outcomes[1])?.to_vec();
    let (m1, m2) = (mean(&y1), mean(&y2));
    let mut initial = vec![0.0; q];
    initial.extend([m1, m1, m2, m2, 0.0, 0.0]);

    let score = Arc::clone(&ps);
    let model = EstimatingModel::new(names, initial, data.n(), move |i, t, out| {
        let (ai, p) = score.score(i, &t[..q], out);
        let (w1, w0) = (ai / p, (1.0 - ai) / (1.0 - p));
        let (u, v) = (y1[i], y2[i]);
        let th = &t[q..];
        let o = &mut out[q..];
        o[0] = w1 * (u - th[0]);
        o[1] = w0 * (u - th[1]);
        o[2] = w1 * (v - th[2]);
        o[3] = w0 * (v - th[3]);
        o[4] = (th[0] - th[1]) - th[4];
        o[5] = (th[2] - th[3]) - th[5];
    })?;
    Ok(model.with_interest(vec![q + 4, q + 5])?.with_diagnostics(clamp_diagnostic(ps)))
}

/// Marginal structural model design used by the regression analyses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum MsmKind {
    /// `(1, a, v, a v)`
    Binary,
    /// `(1, a, s(x), a s(x))`
    Spline(SplineSpec),
}

/// Layout of the outcome-model coefficients inside the stacked parameter
/// vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MsmLayout {
    pub names: Vec<String>,
    /// Position of the first outcome-model coefficient in theta.
    pub offset: usize,
    pub kind: MsmKind,
    /// Observed range of the modifier.
    pub modifier_range: (f64, f64),
}

impl MsmLayout {
    fn new(kind: MsmKind, offset: usize, modifier: &[f64]) -> Self {
        let names = match &kind {
            MsmKind::Binary => (0..4).map(|j| format!("beta{j}")).collect(),
            MsmKind::Spline(spec) => {
                let s = spec.n_columns();
                let mut names = vec!["gamma0".to_string(), "gamma1".to_string()];
                names.extend((1..=s).map(|j| format!("gamma_s{j}")));
                names.extend((1..=s).map(|j| format!("gamma_as{j}")));
                names
            }
        };
        let min = modifier.iter().copied().fold(f64::INFINITY, f64::min);
        let max = modifier.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Self { names, offset, kind, modifier_range: (min, max) }
    }

    pub fn dim(&self) -> usize {
        self.names.len()
    }

    pub fn design_row(&self, a: f64, v: f64) -> Vec<f64> {
        match &self.kind {
            MsmKind::Binary => vec![1.0, a, v, a * v],
            MsmKind::Spline(spec) => {
                let s = spec.basis(v);
                let mut row = Vec::with_capacity(2 + 2 * s.len());
                row.push(1.0);
                row.push(a);
                row.extend_from_slice(&s);
                row.extend(s.iter().map(|b| a * b));
                row
            }
        }
    }

    /// Coefficient indices (relative to the layout) entering the
    /// conditional effect, and the contrast row over those indices.
    fn contrast(&self, x: f64) -> (Vec<usize>, Vec<f64>) {
        match &self.kind {
            MsmKind::Binary => (vec![1, 3], vec![1.0, x]),
            MsmKind::Spline(spec) => {
                let s = spec.basis(x);
                let idx = std::iter::once(1).chain((0..s.len()).map(|j| 2 + s.len() + j)).collect();
                let mut row = vec![1.0];
                row.extend(s);
                (idx, row)
            }
        }
    }
}

/// A regression estimating function together with its coefficient layout.
#[derive(Debug)]
pub struct MsmModel {
    pub model: EstimatingModel,
    pub layout: MsmLayout,
}

fn build_msm(
    data: &Dataset,
    outcome: &str,
    modifier: &str,
    kind: MsmKind,
    confounders: Option<&[CovariateTerm]>,
) -> Result<MsmModel> {
    let a = data.action().to_vec();
    check_arms(&a)?;
    let y = data.column(outcome)?.to_vec();
    let v = data.column(modifier)?.to_vec();

    let propensity = confounders
        .map(|terms| confounder_design(data, terms).map(|d| (propensity_names(&d), Arc::new(Propensity::new(d, &a)))))
        .transpose()?;
    let q = propensity.as_ref().map_or(0, |(_, ps)| ps.dim);
    let layout = MsmLayout::new(kind, q, &v);
    let p = layout.dim();
    let design: Vec<Vec<f64>> = a.iter().zip(&v).map(|(&ai, &vi)| layout.design_row(ai, vi)).collect();

    let mut names = propensity.as_ref().map(|(n, _)| n.clone()).unwrap_or_default();
    names.extend(layout.names.iter().cloned());
    let initial = vec![0.0; q + p];
    let interest = (q..q + p).collect();

    let model = match propensity {
        None => EstimatingModel::new(names, initial, data.n(), move |i, t, out| {
            let x = &design[i];
            let r = y[i] - dot(x, t);
            for (o, xj) in out.iter_mut().zip(x) {
                *o = r * xj;
            }
        })?
        .with_interest(interest)?,
        Some((_, ps)) => {
            let score = Arc::clone(&ps);
            EstimatingModel::new(names, initial, data.n(), move |i, t, out| {
                let (ai, pi) = score.score(i, &t[..q], out);
                let w = ai / pi + (1.0 - ai) / (1.0 - pi);
                let x = &design[i];
                let r = w * (y[i] - dot(x, &t[q..]));
                for (o, xj) in out[q..].iter_mut().zip(x) {
                    *o = r * xj;
                }
            })?
            .with_interest(interest)?
            .with_diagnostics(clamp_diagnostic(ps))
        }
    };
    Ok(MsmModel { model, layout })
}

/// Least squares for `E[Y | A, V] = b0 + b1 A + b2 V + b3 A V`.
pub fn build_emm_binary_model(data: &Dataset, outcome: &str, modifier: &str) -> Result<MsmModel> {
    build_msm(data, outcome, modifier, MsmKind::Binary, None)
}

/// Inverse-probability-weighted least squares for the binary-modifier model,
/// stacked with the propensity-score model.
pub fn build_emm_binary_ipw_model(
    data: &Dataset,
    outcome: &str,
    modifier: &str,
    confounders: &[CovariateTerm],
) -> Result<MsmModel> {
    build_msm(data, outcome, modifier, MsmKind::Binary, Some(confounders))
}

/// (Weighted) least squares for
/// `E[Y | A, X] = g0 + g1 A + s(X) g_s + A s(X) g_as`.
pub fn build_emm_continuous_model(
    data: &Dataset,
    outcome: &str,
    modifier: &str,
    spec: &SplineSpec,
    weighted_by: Option<&[CovariateTerm]>,
) -> Result<MsmModel> {
    build_msm(data, outcome, modifier, MsmKind::Spline(spec.clone()), weighted_by)
}

/// `size` evenly spaced points spanning `[min, max]` (the midpoint when
/// `size == 1`).
pub fn even_grid(min: f64, max: f64, size: usize) -> Vec<f64> {
    match size {
        0 => vec![],
        1 => vec![0.5 * (min + max)],
        _ => {
            let step = (max - min) / (size - 1) as f64;
            (0..size)
                .map(|i| if i == size - 1 { max } else { min + step * i as f64 })
                .collect()
        }
    }
}

/// Conditional effect of the action at each grid value, with the
/// delta-method covariance `C V C^T` where `C` has rows `(1, s(x))` over
/// `(g1, g_as)` (or `(1, v)` over `(b1, b3)` for a binary modifier).
pub fn predict_cace(fit: &FitResult, layout: &MsmLayout, grid: &[f64]) -> Result<GridPrediction> {
    if grid.is_empty() {
        return Err(EstimatorError::InvalidInput("empty grid".into()));
    }
    if fit.theta_hat.len() < layout.offset + layout.dim() {
        return Err(EstimatorError::InvalidInput("fit does not match layout".into()));
    }
    let (min, max) = layout.modifier_range;
    let slack = 1e-9 * (max - min).abs().max(1.0);
    if let Some(&value) = grid.iter().find(|&&x| !(x >= min - slack && x <= max + slack)) {
        return Err(EstimatorError::GridOutOfRange { value, min, max });
    }

    let (idx, _) = layout.contrast(grid[0]);
    let r = idx.len();
    let contrast = DMatrix::from_fn(grid.len(), r, |row, col| layout.contrast(grid[row]).1[col]);
    let abs_idx: Vec<usize> = idx.iter().map(|j| layout.offset + j).collect();
    let coef = nalgebra::DVector::from_iterator(r, abs_idx.iter().map(|&j| fit.theta_hat[j]));
    let block = DMatrix::from_fn(r, r, |a, b| fit.covariance[(abs_idx[a], abs_idx[b])]);

    let estimate = (&contrast * coef).iter().copied().collect();
    let covariance = &contrast * &block * contrast.transpose();
    let covariance = (&covariance + covariance.transpose()) * 0.5;
    let factor = clipped_factor(&block)
        .ok()
        .map(|(root, _)| &contrast * root);
    Ok(GridPrediction { grid: grid.to_vec(), estimate, covariance, factor, bands: vec![] })
}
