//! Restricted cubic spline basis.
//!
//! With knots `t_1 < ... < t_k` the basis has `k - 1` columns: `x` itself and,
//! for `j = 1..k-2`,
//!
//! ```text
//! [ (x - t_j)+^3
//!   - (x - t_{k-1})+^3 (t_k - t_j) / (t_k - t_{k-1})
//!   + (x - t_k)+^3 (t_{k-1} - t_j) / (t_k - t_{k-1}) ] / (t_k - t_1)^2
//! ```
//!
//! Each nonlinear column is zero left of `t_1` and linear right of `t_k`.
//! Two knots give the purely linear basis.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SplineError {
    #[error("invalid knots: {0}")]
    InvalidKnots(String),
    #[error("non-finite spline input at position {0}")]
    NonFiniteInput(usize),
}

/// Default knot placement: 5th, 35th, 65th and 95th percentiles.
pub const DEFAULT_KNOT_PERCENTILES: [f64; 4] = [5.0, 35.0, 65.0, 95.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplineSpec {
    knots: Vec<f64>,
}

impl SplineSpec {
    pub fn new(knots: Vec<f64>) -> Result<Self, SplineError> {
        if knots.len() < 2 {
            return Err(SplineError::InvalidKnots(format!("need at least 2 knots, got {}", knots.len())));
        }
        if knots.iter().any(|k| !k.is_finite()) {
            return Err(SplineError::InvalidKnots("knots must be finite".into()));
        }
        if knots.windows(2).any(|w| w[0] >= w[1]) {
            return Err(SplineError::InvalidKnots("knots must be strictly increasing".into()));
        }
        Ok(Self { knots })
    }

    /// Knots at the given percentiles (0-100) of `x`, using linear
    /// interpolation between order statistics.
    pub fn from_percentiles(x: &[f64], percentiles: &[f64]) -> Result<Self, SplineError> {
        if x.is_empty() {
            return Err(SplineError::InvalidKnots("no data to place knots".into()));
        }
        let mut sorted = x.to_vec();
        if let Some(i) = sorted.iter().position(|v| !v.is_finite()) {
            return Err(SplineError::NonFiniteInput(i));
        }
        sorted.sort_by(f64::total_cmp);
        let knots = percentiles.iter().map(|&p| percentile_sorted(&sorted, p)).collect();
        Self::new(knots)
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// Number of basis columns, including the linear term.
    pub fn n_columns(&self) -> usize {
        self.knots.len() - 1
    }

    /// Basis row for a single value.
    pub fn basis(&self, x: f64) -> Vec<f64> {
        let t = &self.knots;
        let k = t.len();
        let mut row = Vec::with_capacity(k - 1);
        row.push(x);
        if k < 3 {
            return row;
        }
        let (t_last, t_penult) = (t[k - 1], t[k - 2]);
        let norm = (t_last - t[0]).powi(2);
        let cube = |v: f64| if v > 0.0 { v * v * v } else { 0.0 };
        for &tj in &t[..k - 2] {
            let term = cube(x - tj) - cube(x - t_penult) * (t_last - tj) / (t_last - t_penult)
                + cube(x - t_last) * (t_penult - tj) / (t_last - t_penult);
            row.push(term / norm);
        }
        row
    }
}

pub(crate) fn percentile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (p / 100.0).clamp(0.0, 1.0) * (n - 1) as f64;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Restricted cubic spline design matrix, one row per element of `x`.
pub fn spline_design(x: &[f64], spec: &SplineSpec) -> Result<DMatrix<f64>, SplineError> {
    if let Some(i) = x.iter().position(|v| !v.is_finite()) {
        return Err(SplineError::NonFiniteInput(i));
    }
    let cols = spec.n_columns();
    let mut m = DMatrix::zeros(x.len(), cols);
    for (r, &xi) in x.iter().enumerate() {
        for (c, v) in spec.basis(xi).into_iter().enumerate() {
            m[(r, c)] = v;
        }
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    // Direct transcription of the truncated-power definition, one scalar at a time.
    fn rcs_oracle(x: f64, t: &[f64], j: usize) -> f64 {
        let k = t.len();
        let p = |u: f64| u.max(0.0).powi(3);
        (p(x - t[j]) - p(x - t[k - 2]) * (t[k - 1] - t[j]) / (t[k - 1] - t[k - 2])
            + p(x - t[k - 1]) * (t[k - 2] - t[j]) / (t[k - 1] - t[k - 2]))
            / (t[k - 1] - t[0]).powi(2)
    }

    #[test]
    fn three_knot_value_matches_formula() {
        let spec = SplineSpec::new(vec![0.0, 1.0, 2.0]).unwrap();
        let row = spec.basis(1.5);
        assert_eq!(row.len(), 2);
        assert_eq!(row[0], 1.5);
        // (1.5)^3 - (0.5)^3 * 2 = 3.375 - 0.25 = 3.125, divided by 4.
        assert!((row[1] - 0.781_25).abs() < 1e-15);
        assert!((row[1] - rcs_oracle(1.5, spec.knots(), 0)).abs() < 1e-15);
    }

    #[test]
    fn zero_at_or_below_first_knot() {
        let spec = SplineSpec::new(vec![1.0, 2.0, 4.0, 7.0]).unwrap();
        for x in [-3.0, 0.0, 1.0] {
            let row = spec.basis(x);
            assert!(row[1..].iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn linear_beyond_last_knot() {
        let spec = SplineSpec::new(vec![10.0, 50.0, 200.0, 400.0, 800.0]).unwrap();
        let xs: Vec<f64> = (0..20).map(|i| 800.0 + 25.0 * i as f64).collect();
        let m = spline_design(&xs, &spec).unwrap();
        for c in 0..m.ncols() {
            for r in 1..xs.len() - 1 {
                let d2 = m[(r + 1, c)] - 2.0 * m[(r, c)] + m[(r - 1, c)];
                assert!(d2.abs() <= 1e-8, "column {c} row {r}: {d2}");
            }
        }
    }

    #[test]
    fn matches_oracle_on_grid() {
        let t = [0.5, 1.7, 2.2, 5.0];
        let spec = SplineSpec::new(t.to_vec()).unwrap();
        for i in 0..100 {
            let x = -1.0 + 0.08 * i as f64;
            let row = spec.basis(x);
            for j in 0..2 {
                assert!((row[j + 1] - rcs_oracle(x, &t, j)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn two_knots_is_linear_only() {
        let spec = SplineSpec::new(vec![0.0, 1.0]).unwrap();
        assert_eq!(spec.basis(3.0), vec![3.0]);
    }

    #[test]
    fn invalid_knots() {
        assert!(SplineSpec::new(vec![1.0]).is_err());
        assert!(SplineSpec::new(vec![1.0, 1.0, 2.0]).is_err());
        assert!(SplineSpec::new(vec![2.0, 1.0, 3.0]).is_err());
        assert!(SplineSpec::new(vec![0.0, f64::NAN, 3.0]).is_err());
    }

    #[test]
    fn percentile_knots() {
        let x: Vec<f64> = (0..=100).map(f64::from).collect();
        let spec = SplineSpec::from_percentiles(&x, &DEFAULT_KNOT_PERCENTILES).unwrap();
        assert_eq!(spec.knots(), &[5.0, 35.0, 65.0, 95.0]);
        // Heavy ties collapse knots.
        let tied = vec![1.0; 50];
        assert!(SplineSpec::from_percentiles(&tied, &DEFAULT_KNOT_PERCENTILES).is_err());
    }
}
