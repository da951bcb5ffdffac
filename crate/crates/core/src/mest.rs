//! Stacked estimating equations: root finding and the empirical sandwich
//! covariance.
//!
//! A model is a per-observation estimating function `g(O_i; theta)` with the
//! observations bound in at construction time. [`solve`] finds the root of
//! the mean estimating function with a damped Newton iteration and returns the
//! sandwich covariance `B^-1 M B^-T / n` evaluated at the root.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MestError {
    #[error("solver did not converge after {iterations} iterations (root norm {root_norm:.3e})")]
    NonConvergence { iterations: usize, root_norm: f64 },
    #[error("estimating-function Jacobian is singular (reciprocal condition {rcond:.3e})")]
    SingularJacobian { rcond: f64 },
    #[error("estimating function produced a non-finite value{}", fmt_obs(.observation))]
    NonFiniteResidual { observation: Option<usize> },
    #[error("invalid model: {0}")]
    InvalidModel(String),
}

fn fmt_obs(obs: &Option<usize>) -> String {
    match obs {
        Some(i) => format!(" at observation {i}"),
        None => String::new(),
    }
}

pub type Result<T> = std::result::Result<T, MestError>;

type ResidualFn = dyn Fn(usize, &[f64], &mut [f64]) + Send + Sync;
type DiagnosticFn = dyn Fn(&[f64]) -> Vec<String> + Send + Sync;

/// A stacked estimating function over a fixed set of observations.
pub struct EstimatingModel {
    names: Vec<String>,
    interest: Vec<usize>,
    initial: Vec<f64>,
    n_obs: usize,
    g: Box<ResidualFn>,
    diagnose: Option<Box<DiagnosticFn>>,
}

impl fmt::Debug for EstimatingModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EstimatingModel")
            .field("names", &self.names)
            .field("interest", &self.interest)
            .field("initial", &self.initial)
            .field("n_obs", &self.n_obs)
            .finish_non_exhaustive()
    }
}

impl EstimatingModel {
    /// Builds a model from parameter labels, starting values, the number of
    /// observations and `g(i, theta, out)`, which writes the residual vector
    /// of observation `i` into `out`. All parameters are of interest until
    /// [`EstimatingModel::with_interest`] says otherwise.
    pub fn new<G>(names: Vec<String>, initial: Vec<f64>, n_obs: usize, g: G) -> Result<Self>
    where
        G: Fn(usize, &[f64], &mut [f64]) + Send + Sync + 'static,
    {
        if names.is_empty() {
            return Err(MestError::InvalidModel("parameter vector is empty".into()));
        }
        if names.len() != initial.len() {
            return Err(MestError::InvalidModel(format!(
                "{} parameter names but {} starting values",
                names.len(),
                initial.len()
            )));
        }
        if initial.iter().any(|v| !v.is_finite()) {
            return Err(MestError::InvalidModel("starting values must be finite".into()));
        }
        if n_obs == 0 {
            return Err(MestError::InvalidModel("no observations".into()));
        }
        let interest = (0..names.len()).collect();
        Ok(Self {
            names,
            interest,
            initial,
            n_obs,
            g: Box::new(g),
            diagnose: None,
        })
    }

    /// Convenience constructor for models over rows of plain numbers.
    pub fn from_rows<G>(names: Vec<String>, initial: Vec<f64>, rows: Vec<Vec<f64>>, g: G) -> Result<Self>
    where
        G: Fn(&[f64], &[f64], &mut [f64]) + Send + Sync + 'static,
    {
        let n = rows.len();
        Self::new(names, initial, n, move |i, theta, out| g(&rows[i], theta, out))
    }

    /// Restricts the parameters of interest. Indices must be strictly
    /// increasing and in bounds.
    pub fn with_interest(mut self, interest: Vec<usize>) -> Result<Self> {
        if interest.is_empty() {
            return Err(MestError::InvalidModel("interest set is empty".into()));
        }
        if interest.windows(2).any(|w| w[0] >= w[1]) {
            return Err(MestError::InvalidModel("interest indices must be strictly increasing".into()));
        }
        if interest.iter().any(|&i| i >= self.names.len()) {
            return Err(MestError::InvalidModel("interest index out of bounds".into()));
        }
        self.interest = interest;
        Ok(self)
    }

    /// Attaches a hook evaluated once at the root; its messages end up in
    /// [`FitResult::warnings`].
    pub fn with_diagnostics<D>(mut self, diagnose: D) -> Self
    where
        D: Fn(&[f64]) -> Vec<String> + Send + Sync + 'static,
    {
        self.diagnose = Some(Box::new(diagnose));
        self
    }

    pub fn dim(&self) -> usize {
        self.names.len()
    }

    pub fn n_obs(&self) -> usize {
        self.n_obs
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn interest(&self) -> &[usize] {
        &self.interest
    }

    pub fn initial(&self) -> &[f64] {
        &self.initial
    }

    /// Residual vector of a single observation.
    pub fn residual(&self, i: usize, theta: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim()];
        (self.g)(i, theta, &mut out);
        if out.iter().any(|v| !v.is_finite()) {
            return Err(MestError::NonFiniteResidual { observation: Some(i) });
        }
        Ok(out)
    }

    /// Mean of the estimating function over all observations, summed in
    /// observation order with Neumaier compensation.
    pub fn mean_residual(&self, theta: &[f64]) -> Result<Vec<f64>> {
        let p = self.dim();
        let mut sum = vec![0.0; p];
        let mut comp = vec![0.0; p];
        let mut out = vec![0.0; p];
        for i in 0..self.n_obs {
            (self.g)(i, theta, &mut out);
            for j in 0..p {
                let v = out[j];
                if !v.is_finite() {
                    return Err(MestError::NonFiniteResidual { observation: Some(i) });
                }
                let t = sum[j] + v;
                if sum[j].abs() >= v.abs() {
                    comp[j] += (sum[j] - t) + v;
                } else {
                    comp[j] += (v - t) + sum[j];
                }
                sum[j] = t;
            }
        }
        let n = self.n_obs as f64;
        Ok(sum.iter().zip(&comp).map(|(s, c)| (s + c) / n).collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    /// Convergence threshold on the max-abs of the mean estimating function.
    pub tol: f64,
    pub max_iter: usize,
    pub max_halvings: usize,
    /// Relative central-difference step; `None` uses `cbrt(eps)`.
    pub jacobian_step: Option<f64>,
    /// Reciprocal condition number (after row/column equilibration) below
    /// which the bread matrix is declared singular.
    pub singular_rcond: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_iter: 100,
            max_halvings: 20,
            jacobian_step: None,
            singular_rcond: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub names: Vec<String>,
    pub theta_hat: Vec<f64>,
    /// Sandwich covariance of the estimator (already divided by `n`).
    pub covariance: DMatrix<f64>,
    pub interest: Vec<usize>,
    pub n: usize,
    pub root_norm: f64,
    pub iterations: usize,
    pub warnings: Vec<String>,
}

impl FitResult {
    pub fn interest_names(&self) -> Vec<String> {
        self.interest.iter().map(|&i| self.names[i].clone()).collect()
    }

    pub fn interest_estimate(&self) -> DVector<f64> {
        DVector::from_iterator(self.interest.len(), self.interest.iter().map(|&i| self.theta_hat[i]))
    }

    pub fn interest_covariance(&self) -> DMatrix<f64> {
        let k = self.interest.len();
        DMatrix::from_fn(k, k, |r, c| self.covariance[(self.interest[r], self.interest[c])])
    }

    pub fn standard_errors(&self) -> Vec<f64> {
        (0..self.theta_hat.len())
            .map(|i| self.covariance[(i, i)].max(0.0).sqrt())
            .collect()
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

/// Central-difference Jacobian of `f` at `at`.
///
/// Coordinate `j` is perturbed by `step * max(1, |at_j|)`; `step` defaults to
/// `cbrt(f64::EPSILON)`.
pub fn numerical_jacobian<F>(mut f: F, at: &[f64], step: Option<f64>) -> Result<DMatrix<f64>>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    let rel = step.unwrap_or_else(|| f64::EPSILON.cbrt());
    let mut x = at.to_vec();
    let mut columns: Vec<Vec<f64>> = Vec::with_capacity(at.len());
    let mut rows = None;
    for j in 0..at.len() {
        let h = rel * at[j].abs().max(1.0);
        x[j] = at[j] + h;
        let hp = x[j] - at[j];
        let plus = f(&x)?;
        x[j] = at[j] - h;
        let hm = at[j] - x[j];
        let minus = f(&x)?;
        x[j] = at[j];
        if plus.len() != minus.len() || rows.is_some_and(|r| r != plus.len()) {
            return Err(MestError::InvalidModel("function output length changed".into()));
        }
        rows = Some(plus.len());
        if plus.iter().chain(&minus).any(|v| !v.is_finite()) {
            return Err(MestError::NonFiniteResidual { observation: None });
        }
        let denom = hp + hm;
        columns.push(plus.iter().zip(&minus).map(|(p, m)| (p - m) / denom).collect());
    }
    let nrows = rows.unwrap_or(0);
    Ok(DMatrix::from_fn(nrows, at.len(), |r, c| columns[c][r]))
}

/// Inverse of a square matrix after row and column equilibration, rejecting
/// matrices whose equilibrated reciprocal condition number is below `rcond`.
pub(crate) fn equilibrated_inverse(a: &DMatrix<f64>, rcond: f64) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    let row_scale: Vec<f64> = (0..n)
        .map(|r| a.row(r).iter().fold(0.0_f64, |m, v| m.max(v.abs())))
        .collect();
    if row_scale.contains(&0.0) {
        return Err(MestError::SingularJacobian { rcond: 0.0 });
    }
    let mut scaled = DMatrix::from_fn(n, n, |r, c| a[(r, c)] / row_scale[r]);
    let col_scale: Vec<f64> = (0..n)
        .map(|c| scaled.column(c).iter().fold(0.0_f64, |m, v| m.max(v.abs())))
        .collect();
    if col_scale.contains(&0.0) {
        return Err(MestError::SingularJacobian { rcond: 0.0 });
    }
    for c in 0..n {
        for r in 0..n {
            scaled[(r, c)] /= col_scale[c];
        }
    }
    let sv = scaled.clone().singular_values();
    let smax = sv.max();
    let smin = sv.min();
    let ratio = if smax > 0.0 { smin / smax } else { 0.0 };
    if !(ratio >= rcond) {
        return Err(MestError::SingularJacobian { rcond: ratio });
    }
    let inv = scaled
        .try_inverse()
        .ok_or(MestError::SingularJacobian { rcond: ratio })?;
    // a = Dr * S * Dc  =>  a^-1 = Dc^-1 * S^-1 * Dr^-1
    Ok(DMatrix::from_fn(n, n, |r, c| inv[(r, c)] / (col_scale[r] * row_scale[c])))
}

/// Jacobian of the mean estimating function with respect to theta.
pub fn mean_jacobian(model: &EstimatingModel, theta: &[f64], step: Option<f64>) -> Result<DMatrix<f64>> {
    numerical_jacobian(|t| model.mean_residual(t), theta, step)
}

/// Bread matrix `B = -(1/n) sum dg/dtheta`.
pub fn bread(model: &EstimatingModel, theta: &[f64], step: Option<f64>) -> Result<DMatrix<f64>> {
    Ok(-mean_jacobian(model, theta, step)?)
}

/// Meat matrix `M = (1/n) sum g g^T`.
pub fn meat(model: &EstimatingModel, theta: &[f64]) -> Result<DMatrix<f64>> {
    let p = model.dim();
    let mut m = DMatrix::<f64>::zeros(p, p);
    let mut out = vec![0.0; p];
    for i in 0..model.n_obs() {
        (model.g)(i, theta, &mut out);
        if out.iter().any(|v| !v.is_finite()) {
            return Err(MestError::NonFiniteResidual { observation: Some(i) });
        }
        for r in 0..p {
            if out[r] == 0.0 {
                continue;
            }
            for c in r..p {
                m[(r, c)] += out[r] * out[c];
            }
        }
    }
    let n = model.n_obs() as f64;
    for r in 0..p {
        for c in r..p {
            let v = m[(r, c)] / n;
            m[(r, c)] = v;
            m[(c, r)] = v;
        }
    }
    Ok(m)
}

/// Empirical sandwich covariance `B^-1 M B^-T / n` at `theta_hat`.
pub fn sandwich_covariance(
    model: &EstimatingModel,
    theta_hat: &[f64],
    options: &SolverOptions,
) -> Result<DMatrix<f64>> {
    let b = bread(model, theta_hat, options.jacobian_step)?;
    let b_inv = equilibrated_inverse(&b, options.singular_rcond)?;
    let m = meat(model, theta_hat)?;
    let v = &b_inv * m * b_inv.transpose() / model.n_obs() as f64;
    Ok((&v + v.transpose()) * 0.5)
}

/// Solves `mean_i g(O_i; theta) = 0` by damped Newton iteration and attaches
/// the sandwich covariance at the root.
pub fn solve(model: &EstimatingModel, options: &SolverOptions) -> Result<FitResult> {
    let mut theta = model.initial.clone();
    let mut resid = model.mean_residual(&theta)?;
    let mut norm = max_abs(&resid);
    let mut iterations = 0;

    while norm > options.tol {
        if iterations >= options.max_iter {
            return Err(MestError::NonConvergence { iterations, root_norm: norm });
        }
        iterations += 1;

        let jac = mean_jacobian(model, &theta, options.jacobian_step)?;
        let jac_inv = equilibrated_inverse(&jac, options.singular_rcond)?;
        let step = -(jac_inv * DVector::from_column_slice(&resid));

        let mut scale = 1.0;
        let mut accepted = None;
        for _ in 0..=options.max_halvings {
            let candidate: Vec<f64> = theta.iter().zip(step.iter()).map(|(t, s)| t + scale * s).collect();
            if let Ok(r) = model.mean_residual(&candidate) {
                let n = max_abs(&r);
                if n < norm {
                    accepted = Some((candidate, r, n));
                    break;
                }
            }
            scale *= 0.5;
        }
        match accepted {
            Some((t, r, n)) => {
                theta = t;
                resid = r;
                norm = n;
            }
            None => return Err(MestError::NonConvergence { iterations, root_norm: norm }),
        }
    }

    // Polish: a few more full Newton steps, kept only while they reduce the
    // residual. Central differences leave ~1e-10 relative error in the
    // Jacobian, so the first root inside `tol` is often not the best one.
    for _ in 0..3 {
        if norm == 0.0 {
            break;
        }
        let jac = mean_jacobian(model, &theta, options.jacobian_step)?;
        let Ok(jac_inv) = equilibrated_inverse(&jac, options.singular_rcond) else {
            break;
        };
        let step = -(jac_inv * DVector::from_column_slice(&resid));
        let candidate: Vec<f64> = theta.iter().zip(step.iter()).map(|(t, s)| t + s).collect();
        match model.mean_residual(&candidate) {
            Ok(r) if max_abs(&r) < norm => {
                norm = max_abs(&r);
                theta = candidate;
                resid = r;
            }
            _ => break,
        }
    }

    let covariance = sandwich_covariance(model, &theta, options)?;
    let warnings = model.diagnose.as_ref().map(|d| d(&theta)).unwrap_or_default();
    Ok(FitResult {
        names: model.names.clone(),
        theta_hat: theta,
        covariance,
        interest: model.interest.clone(),
        n: model.n_obs,
        root_norm: norm,
        iterations,
        warnings,
    })
}
