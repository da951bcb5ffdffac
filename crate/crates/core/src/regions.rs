//! Confidence regions for a parameter vector: per-parameter Wald intervals,
//! shared-critical-value bands (Bonferroni and sup-t) and Wald ellipsoids.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::quantile::{chi_square_quantile, normal_quantile, two_sided_z};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RegionError {
    #[error("negative variance {value} for parameter {index}")]
    NegativeVariance { index: usize, value: f64 },
    #[error("covariance is not positive semi-definite: {0}")]
    NonPsdCovariance(String),
    #[error("covariance matrix is singular")]
    SingularCovariance,
    #[error("alpha must lie in (0, 1), got {0}")]
    InvalidAlpha(f64),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("sup-t needs at least {min} draws, got {got}")]
    TooFewDraws { min: usize, got: usize },
    #[error("{0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, RegionError>;

/// Default number of Monte Carlo draws for the sup-t critical value.
pub const DEFAULT_DRAWS: usize = 10_000;
pub const MIN_DRAWS: usize = 1_000;
pub const DEFAULT_BOUNDARY_POINTS: usize = 360;

// Draws per independent ChaCha stream. Block b always uses stream b, so the
// sample does not depend on how blocks are scheduled across threads.
const BLOCK: usize = 4096;
// Standardized correlations are snapped to this grid before factoring.
const SNAP: f64 = 1.0 / (1u64 << 40) as f64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BandKind {
    Pointwise,
    Bonferroni,
    Supt,
}

impl BandKind {
    pub const ALL: [BandKind; 3] = [BandKind::Pointwise, BandKind::Bonferroni, BandKind::Supt];

    pub fn label(self) -> &'static str {
        match self {
            BandKind::Pointwise => "pointwise",
            BandKind::Bonferroni => "bonferroni",
            BandKind::Supt => "supt",
        }
    }
}

impl std::str::FromStr for BandKind {
    type Err = RegionError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pointwise" | "wald" | "interval" => Ok(BandKind::Pointwise),
            "bonferroni" => Ok(BandKind::Bonferroni),
            "supt" | "sup-t" => Ok(BandKind::Supt),
            other => Err(RegionError::InvalidInput(format!("unknown band kind `{other}`"))),
        }
    }
}

/// Per-parameter limits `estimate +/- critical_value * se`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalSet {
    pub kind: BandKind,
    pub critical_value: f64,
    pub estimate: Vec<f64>,
    pub se: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub widths: Vec<f64>,
}

impl IntervalSet {
    pub fn len(&self) -> usize {
        self.estimate.len()
    }

    pub fn is_empty(&self) -> bool {
        self.estimate.is_empty()
    }

    /// True when every coordinate of `point` lies inside its interval.
    pub fn contains(&self, point: &[f64]) -> bool {
        point.len() == self.len()
            && point
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(p, (lo, hi))| *lo <= *p && *p <= *hi)
    }

    /// Product of the interval widths.
    pub fn hypervolume(&self) -> f64 {
        self.widths.iter().product()
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(RegionError::InvalidAlpha(alpha))
    }
}

fn check_square(theta: &[f64], cov: &DMatrix<f64>) -> Result<()> {
    if cov.nrows() != cov.ncols() || cov.nrows() != theta.len() {
        return Err(RegionError::DimensionMismatch(format!(
            "{} parameters, covariance {}x{}",
            theta.len(),
            cov.nrows(),
            cov.ncols()
        )));
    }
    Ok(())
}

fn standard_errors(cov: &DMatrix<f64>) -> Result<Vec<f64>> {
    (0..cov.nrows())
        .map(|i| {
            let v = cov[(i, i)];
            if v < 0.0 || v.is_nan() {
                Err(RegionError::NegativeVariance { index: i, value: v })
            } else {
                Ok(v.sqrt())
            }
        })
        .collect()
}

/// Band `theta +/- critical_value * sqrt(diag(cov))`.
pub fn band(theta: &[f64], cov: &DMatrix<f64>, critical_value: f64, kind: BandKind) -> Result<IntervalSet> {
    check_square(theta, cov)?;
    if !(critical_value >= 0.0) || !critical_value.is_finite() {
        return Err(RegionError::InvalidInput(format!("critical value {critical_value}")));
    }
    let se = standard_errors(cov)?;
    let half: Vec<f64> = se.iter().map(|s| critical_value * s).collect();
    Ok(IntervalSet {
        kind,
        critical_value,
        estimate: theta.to_vec(),
        lower: theta.iter().zip(&half).map(|(t, h)| t - h).collect(),
        upper: theta.iter().zip(&half).map(|(t, h)| t + h).collect(),
        widths: half.iter().map(|h| 2.0 * h).collect(),
        se,
    })
}

/// Two-sided Wald intervals, one per parameter.
pub fn wald_intervals(theta: &[f64], cov: &DMatrix<f64>, alpha: f64) -> Result<IntervalSet> {
    check_alpha(alpha)?;
    band(theta, cov, two_sided_z(alpha), BandKind::Pointwise)
}

/// Bonferroni critical value for `k` parameters: `z` at `1 - alpha / (2k)`.
pub fn bonferroni_critical(k: usize, alpha: f64) -> f64 {
    normal_quantile(1.0 - alpha / (2.0 * k.max(1) as f64))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuptEstimate {
    pub critical_value: f64,
    pub draws: usize,
    /// Coordinates with zero variance, left out of the supremum.
    pub zero_variance: Vec<usize>,
    pub warnings: Vec<String>,
}

fn snap(v: f64) -> f64 {
    (v / SNAP).round() * SNAP
}

/// Sup-t critical value from the full covariance matrix.
pub fn supt_critical_value(cov: &DMatrix<f64>, alpha: f64, m: usize, seed: u64) -> Result<f64> {
    supt_estimate(cov, alpha, m, seed).map(|e| e.critical_value)
}

/// Sup-t critical value with diagnostics.
///
/// Draws `delta ~ N(0, cov)`, standardizes each coordinate by its standard
/// error, records `max |delta_i|` and returns the order statistic at
/// `ceil((1 - alpha) m)`. Sampling works on the correlation matrix, which is
/// equivalent and makes the result invariant to rescaling `cov`.
pub fn supt_estimate(cov: &DMatrix<f64>, alpha: f64, m: usize, seed: u64) -> Result<SuptEstimate> {
    check_alpha(alpha)?;
    let k = cov.nrows();
    if cov.ncols() != k || k == 0 {
        return Err(RegionError::DimensionMismatch(format!("covariance {}x{}", k, cov.ncols())));
    }
    if cov.iter().any(|v| !v.is_finite()) {
        return Err(RegionError::NonPsdCovariance("non-finite entry".into()));
    }
    let scale = cov.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    for r in 0..k {
        for c in 0..r {
            if (cov[(r, c)] - cov[(c, r)]).abs() > 1e-8 * scale.max(f64::MIN_POSITIVE) {
                return Err(RegionError::NonPsdCovariance("matrix is not symmetric".into()));
            }
        }
    }
    let se = standard_errors(cov)?;
    let active: Vec<usize> = (0..k).filter(|&i| se[i] > 0.0).collect();
    let zero_variance: Vec<usize> = (0..k).filter(|&i| se[i] == 0.0).collect();
    let mut warnings = Vec::new();
    if !zero_variance.is_empty() {
        warnings.push(format!("{} zero-variance coordinate(s) excluded from sup-t", zero_variance.len()));
    }

    let a = active.len();
    let mut corr = DMatrix::from_fn(a, a, |r, c| {
        let (i, j) = (active[r], active[c]);
        if r == c {
            1.0
        } else {
            snap((cov[(i, j)] / (se[i] * se[j])).clamp(-1.0, 1.0))
        }
    });
    corr = (&corr + corr.transpose()) * 0.5;
    let factor = match Cholesky::new(corr.clone()) {
        Some(ch) => ch.l(),
        None => {
            let (f, w) = clipped_factor(&corr)?;
            warnings.extend(w);
            f
        }
    };
    let mut est = supt_standardized(&factor, alpha, m, seed)?;
    est.zero_variance = zero_variance;
    warnings.append(&mut est.warnings);
    est.warnings = warnings;
    Ok(est)
}

/// Square-root factor `Q diag(sqrt(max(lambda, 0)))` keeping only the
/// numerically positive eigen-directions.
pub(crate) fn clipped_factor(sym: &DMatrix<f64>) -> Result<(DMatrix<f64>, Vec<String>)> {
    let eig = SymmetricEigen::new(sym.clone());
    if eig.eigenvalues.iter().any(|v| !v.is_finite()) {
        return Err(RegionError::NonPsdCovariance("eigendecomposition failed".into()));
    }
    let lmax = eig.eigenvalues.max();
    let lmin = eig.eigenvalues.min();
    if lmax <= 0.0 {
        return Err(RegionError::NonPsdCovariance("no positive eigenvalue".into()));
    }
    let mut warnings = Vec::new();
    if lmin < -1e-8 * lmax {
        warnings.push(format!(
            "clipped negative eigenvalue {lmin:.3e} (max eigenvalue {lmax:.3e})"
        ));
    }
    let keep: Vec<usize> = (0..eig.eigenvalues.len())
        .filter(|&i| eig.eigenvalues[i] > 1e-14 * lmax)
        .collect();
    let n = sym.nrows();
    let f = DMatrix::from_fn(n, keep.len(), |r, c| {
        let j = keep[c];
        eig.eigenvectors[(r, j)] * eig.eigenvalues[j].sqrt()
    });
    Ok((f, warnings))
}

/// Sup-t critical value from a factor `F` with `cov = F F^T` (rows are
/// coordinates). Useful when the covariance is low rank, as for predictions
/// over a fine grid.
pub fn supt_from_factor(factor: &DMatrix<f64>, alpha: f64, m: usize, seed: u64) -> Result<SuptEstimate> {
    check_alpha(alpha)?;
    if factor.iter().any(|v| !v.is_finite()) {
        return Err(RegionError::NonPsdCovariance("non-finite factor entry".into()));
    }
    let norms: Vec<f64> = factor.row_iter().map(|r| r.norm()).collect();
    let active: Vec<usize> = (0..norms.len()).filter(|&i| norms[i] > 0.0).collect();
    let zero_variance: Vec<usize> = (0..norms.len()).filter(|&i| norms[i] == 0.0).collect();
    let std = DMatrix::from_fn(active.len(), factor.ncols(), |r, c| {
        snap(factor[(active[r], c)] / norms[active[r]])
    });
    let mut est = supt_standardized(&std, alpha, m, seed)?;
    if !zero_variance.is_empty() {
        est.warnings.insert(
            0,
            format!("{} zero-variance coordinate(s) excluded from sup-t", zero_variance.len()),
        );
    }
    est.zero_variance = zero_variance;
    Ok(est)
}

// Rows of `factor` are coordinates already scaled to unit variance.
fn supt_standardized(factor: &DMatrix<f64>, alpha: f64, m: usize, seed: u64) -> Result<SuptEstimate> {
    if m < MIN_DRAWS {
        return Err(RegionError::TooFewDraws { min: MIN_DRAWS, got: m });
    }
    let mut warnings = Vec::new();
    if m < DEFAULT_DRAWS {
        warnings.push(format!("only {m} sup-t draws; at least {DEFAULT_DRAWS} recommended"));
    }
    let k = factor.nrows();
    if k <= 1 {
        // A single coordinate: the supremum is |Z| itself.
        return Ok(SuptEstimate { critical_value: two_sided_z(alpha), draws: m, zero_variance: vec![], warnings });
    }
    let r = factor.ncols();
    // Row-major copy so each coordinate is a contiguous dot product.
    let rows: Vec<f64> = (0..k).flat_map(|i| (0..r).map(move |j| (i, j))).map(|(i, j)| factor[(i, j)]).collect();
    let lower_triangular = r == k && (0..k).all(|i| (i + 1..k).all(|j| factor[(i, j)] == 0.0));

    let n_blocks = m.div_ceil(BLOCK);
    let mut maxima: Vec<f64> = (0..n_blocks)
        .into_par_iter()
        .flat_map_iter(|b| {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            rng.set_stream(b as u64);
            let count = BLOCK.min(m - b * BLOCK);
            let mut z = vec![0.0; r];
            let rows = &rows;
            (0..count)
                .map(move |_| {
                    for zi in z.iter_mut() {
                        *zi = StandardNormal.sample(&mut rng);
                    }
                    let mut best = 0.0_f64;
                    for i in 0..k {
                        let row = &rows[i * r..(i + 1) * r];
                        let len = if lower_triangular { i + 1 } else { r };
                        let d: f64 = row[..len].iter().zip(&z[..len]).map(|(a, b)| a * b).sum();
                        best = best.max(d.abs());
                    }
                    best
                })
                .collect::<Vec<_>>()
        })
        .collect();
    maxima.sort_by(f64::total_cmp);
    let rank = (((1.0 - alpha) * m as f64) - 1e-9).ceil().clamp(1.0, m as f64) as usize;
    Ok(SuptEstimate { critical_value: maxima[rank - 1], draws: m, zero_variance: vec![], warnings })
}

/// Wald confidence ellipsoid `{t : (t - c)^T V^-1 (t - c) <= chisq_radius}`.
#[derive(Debug, Clone)]
pub struct Ellipsoid {
    pub center: Vec<f64>,
    pub covariance: DMatrix<f64>,
    /// The chi-square quantile (squared Mahalanobis radius).
    pub chisq_radius: f64,
    /// Closed boundary polyline for two dimensions (first point repeated last).
    pub boundary: Option<Vec<[f64; 2]>>,
    chol: Cholesky<f64, nalgebra::Dyn>,
}

impl Ellipsoid {
    pub fn dim(&self) -> usize {
        self.center.len()
    }

    /// Squared Mahalanobis distance of `point` from the center.
    pub fn mahalanobis2(&self, point: &[f64]) -> f64 {
        let d = DVector::from_iterator(self.dim(), point.iter().zip(&self.center).map(|(p, c)| p - c));
        let solved = self.chol.solve(&d);
        d.dot(&solved)
    }

    pub fn contains(&self, point: &[f64]) -> bool {
        self.mahalanobis2(point) <= self.chisq_radius
    }

    /// Volume (area for two dimensions).
    pub fn volume(&self) -> f64 {
        let k = self.dim();
        let det_sqrt: f64 = self.chol.l_dirty().diagonal().iter().product();
        unit_ball_volume(k) * self.chisq_radius.powf(k as f64 / 2.0) * det_sqrt
    }
}

fn unit_ball_volume(k: usize) -> f64 {
    match k {
        0 => 1.0,
        1 => 2.0,
        _ => 2.0 * std::f64::consts::PI / k as f64 * unit_ball_volume(k - 2),
    }
}

/// Wald ellipsoid at level `1 - alpha`. The boundary polyline is produced
/// only for two parameters.
pub fn ellipsoid(theta: &[f64], cov: &DMatrix<f64>, alpha: f64, n_boundary_points: usize) -> Result<Ellipsoid> {
    check_alpha(alpha)?;
    check_square(theta, cov)?;
    let k = theta.len();
    if k < 2 {
        return Err(RegionError::DimensionMismatch("an ellipsoid needs at least two parameters".into()));
    }
    let sym = (cov + cov.transpose()) * 0.5;
    let chol = Cholesky::new(sym.clone()).ok_or(RegionError::SingularCovariance)?;
    let eig = SymmetricEigen::new(sym.clone());
    if eig.eigenvalues.min() <= 1e-14 * eig.eigenvalues.max().abs() {
        return Err(RegionError::SingularCovariance);
    }
    let chisq_radius = chi_square_quantile(1.0 - alpha, k as f64);

    let boundary = (k == 2).then(|| {
        let r = chisq_radius.sqrt();
        let n = n_boundary_points.max(3);
        let axes = &eig.eigenvectors * DMatrix::from_diagonal(&eig.eigenvalues.map(f64::sqrt));
        let mut pts: Vec<[f64; 2]> = (0..n)
            .map(|j| {
                let t = 2.0 * std::f64::consts::PI * j as f64 / n as f64;
                let (s, c) = t.sin_cos();
                [
                    theta[0] + r * (axes[(0, 0)] * c + axes[(0, 1)] * s),
                    theta[1] + r * (axes[(1, 0)] * c + axes[(1, 1)] * s),
                ]
            })
            .collect();
        pts.push(pts[0]);
        pts
    });

    Ok(Ellipsoid { center: theta.to_vec(), covariance: sym, chisq_radius, boundary, chol })
}

/// Ratio of the hypervolumes (products of widths) of two bands.
pub fn hypervolume_ratio(a: &IntervalSet, b: &IntervalSet) -> f64 {
    a.hypervolume() / b.hypervolume()
}

/// Predictions over a grid of modifier values together with their covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct GridPrediction {
    pub grid: Vec<f64>,
    pub estimate: Vec<f64>,
    pub covariance: DMatrix<f64>,
    /// Optional factor `F` with `covariance = F F^T`, used for sup-t draws.
    pub factor: Option<DMatrix<f64>>,
    pub bands: Vec<IntervalSet>,
}

impl GridPrediction {
    pub fn band(&self, kind: BandKind) -> Option<&IntervalSet> {
        self.bands.iter().find(|b| b.kind == kind)
    }
}

/// Adds a band of the given kind over every grid point.
pub fn band_for_grid(pred: &GridPrediction, alpha: f64, method: BandKind, m: usize, seed: u64) -> Result<GridPrediction> {
    check_alpha(alpha)?;
    let k = pred.grid.len();
    let c = match method {
        BandKind::Pointwise => two_sided_z(alpha),
        BandKind::Bonferroni => bonferroni_critical(k, alpha),
        BandKind::Supt => match &pred.factor {
            Some(f) => supt_from_factor(f, alpha, m, seed)?.critical_value,
            None => supt_critical_value(&pred.covariance, alpha, m, seed)?,
        },
    };
    let mut out = pred.clone();
    out.bands.retain(|b| b.kind != method);
    out.bands.push(band(&pred.estimate, &pred.covariance, c, method)?);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn mat2(a: f64, b: f64, d: f64) -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[a, b, b, d])
    }

    #[test]
    fn wald_degenerate_variance() {
        let set = wald_intervals(&[3.0], &DMatrix::zeros(1, 1), 0.05).unwrap();
        assert_eq!(set.lower, vec![3.0]);
        assert_eq!(set.upper, vec![3.0]);
    }

    #[test]
    fn wald_negative_variance() {
        let err = wald_intervals(&[0.0, 0.0], &mat2(1.0, 0.0, -1.0), 0.05).unwrap_err();
        assert_eq!(err, RegionError::NegativeVariance { index: 1, value: -1.0 });
    }

    #[test]
    fn bonferroni_reduces_to_pointwise() {
        assert_relative_eq!(bonferroni_critical(1, 0.05), 1.959_963_984_540_054, epsilon = 1e-12);
        let mut prev = 0.0;
        for k in 1..200 {
            let c = bonferroni_critical(k, 0.05);
            assert!(c >= prev);
            prev = c;
        }
    }

    #[test]
    fn zero_critical_value_band_is_degenerate() {
        let b = band(&[1.0, 2.0], &mat2(4.0, 1.0, 9.0), 0.0, BandKind::Supt).unwrap();
        assert_eq!(b.lower, b.upper);
        assert_eq!(b.widths, vec![0.0, 0.0]);
    }

    #[test]
    fn supt_single_coordinate_is_z() {
        let c = supt_critical_value(&DMatrix::from_element(1, 1, 3.0), 0.05, 10_000, 1).unwrap();
        assert_eq!(c, two_sided_z(0.05));
    }

    #[test]
    fn supt_rejects_few_draws_and_asymmetry() {
        assert!(matches!(
            supt_critical_value(&DMatrix::identity(2, 2), 0.05, 10, 1),
            Err(RegionError::TooFewDraws { .. })
        ));
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.1, 1.0]);
        assert!(matches!(
            supt_critical_value(&asym, 0.05, 10_000, 1),
            Err(RegionError::NonPsdCovariance(_))
        ));
    }

    #[test]
    fn supt_zero_variance_coordinate_is_ignored() {
        let mut cov = DMatrix::zeros(3, 3);
        cov[(0, 0)] = 1.0;
        cov[(2, 2)] = 1.0;
        let est = supt_estimate(&cov, 0.05, 50_000, 3).unwrap();
        assert_eq!(est.zero_variance, vec![1]);
        let reference = supt_critical_value(&DMatrix::identity(2, 2), 0.05, 50_000, 3).unwrap();
        assert_eq!(est.critical_value, reference);
    }

    #[test]
    fn supt_rank_deficient_uses_eigen_factor() {
        // Rank-one 3x3 covariance: all coordinates move together.
        let v = DVector::from_vec(vec![1.0, 2.0, -3.0]);
        let cov = &v * v.transpose();
        let c = supt_critical_value(&cov, 0.05, 100_000, 5).unwrap();
        assert!((c - 1.96).abs() < 0.02, "{c}");
    }

    #[test]
    fn factor_and_covariance_routes_agree() {
        let f = DMatrix::from_row_slice(4, 2, &[1.0, 0.0, 0.9, 0.3, 0.2, 1.0, -0.5, 0.5]);
        let cov = &f * f.transpose();
        let a = supt_from_factor(&f, 0.05, 200_000, 11).unwrap().critical_value;
        let b = supt_critical_value(&cov, 0.05, 200_000, 12).unwrap();
        assert!((a - b).abs() < 0.02, "{a} vs {b}");
    }

    #[test]
    fn ellipse_of_identity_is_circle() {
        let e = ellipsoid(&[0.0, 0.0], &DMatrix::identity(2, 2), 0.05, 72).unwrap();
        let b = e.boundary.as_ref().unwrap();
        assert_eq!(b.len(), 73);
        assert_eq!(b[0], b[72]);
        for p in b {
            assert!((p[0].hypot(p[1]) - 2.447_746_830_680_816).abs() < 1e-9);
        }
        assert!(e.contains(&[0.0, 0.0]));
    }

    #[test]
    fn ellipse_rejects_singular() {
        assert_eq!(
            ellipsoid(&[0.0, 0.0], &mat2(1.0, 1.0, 1.0), 0.05, 10).unwrap_err(),
            RegionError::SingularCovariance
        );
    }

    #[test]
    fn ellipsoid_volume_in_three_dimensions() {
        let cov = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 4.0, 9.0]));
        let e = ellipsoid(&[0.0; 3], &cov, 0.05, 0).unwrap();
        assert!(e.boundary.is_none());
        let r = e.chisq_radius.sqrt();
        let want = 4.0 / 3.0 * std::f64::consts::PI * r.powi(3) * 6.0;
        assert_relative_eq!(e.volume(), want, max_relative = 1e-12);
    }

    #[test]
    fn hypervolume_arithmetic() {
        let cov = DMatrix::identity(2, 2);
        let a = band(&[0.0, 0.0], &cov, 1.0, BandKind::Bonferroni).unwrap();
        let b = band(&[0.0, 0.0], &cov, 0.5, BandKind::Supt).unwrap();
        assert_eq!(a.widths, vec![2.0, 2.0]);
        assert_eq!(hypervolume_ratio(&a, &b), 4.0);
        assert_eq!(hypervolume_ratio(&a, &a), 1.0);
    }

    #[test]
    fn band_kind_parses() {
        assert_eq!("sup-t".parse::<BandKind>().unwrap(), BandKind::Supt);
        assert!("scheffe".parse::<BandKind>().is_err());
    }
}
