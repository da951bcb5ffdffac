//! Repeated-sampling check of simultaneous coverage for pointwise,
//! Bonferroni and sup-t bands and for the Wald ellipsoid.
//!
//! Each replicate draws `n_per_rep` multivariate normal observations with a
//! known mean, estimates the mean vector with the stacked mean estimating
//! equation and the sandwich covariance, then records which regions contain
//! the true mean. Replicate `r` uses ChaCha stream `r` of the scenario seed
//! for its data and `split_seed(seed, r)` for its sup-t draws, so the report
//! does not depend on scheduling.

use nalgebra::{Cholesky, DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mest::{solve, EstimatingModel, SolverOptions};
use crate::quantile::chi_square_quantile;
use crate::regions::{self, bonferroni_critical, BandKind, RegionError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScenarioError {
    #[error("invalid scenario: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimScenario {
    pub k: usize,
    pub true_theta: Vec<f64>,
    /// Common correlation between every pair of coordinates.
    pub rho: f64,
    pub variances: Vec<f64>,
    pub n_per_rep: usize,
    pub reps: usize,
    pub alpha: f64,
    pub seed: u64,
    /// Monte Carlo draws for each replicate's sup-t critical value.
    pub supt_draws: usize,
}

impl SimScenario {
    /// Zero means and unit variances.
    pub fn standard(k: usize, rho: f64, n_per_rep: usize, reps: usize, alpha: f64, seed: u64) -> Self {
        Self {
            k,
            true_theta: vec![0.0; k],
            rho,
            variances: vec![1.0; k],
            n_per_rep,
            reps,
            alpha,
            seed,
            supt_draws: regions::DEFAULT_DRAWS,
        }
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let bad = |m: &str| Err(ScenarioError::Invalid(m.to_string()));
        if self.k == 0 {
            return bad("k must be positive");
        }
        if self.true_theta.len() != self.k || self.variances.len() != self.k {
            return bad("true_theta and variances must have k entries");
        }
        if self.reps == 0 {
            return bad("reps must be at least 1");
        }
        if self.n_per_rep < 2 {
            return bad("n_per_rep must be at least 2");
        }
        if !(self.rho.abs() <= 1.0) {
            return bad("|rho| must not exceed 1");
        }
        if self.k > 2 && self.rho < -1.0 / (self.k as f64 - 1.0) {
            return bad("rho below -1/(k-1) is not a valid equicorrelation");
        }
        if self.variances.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return bad("variances must be positive");
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad("alpha must lie in (0, 1)");
        }
        if self.true_theta.iter().any(|v| !v.is_finite()) {
            return bad("true_theta must be finite");
        }
        Ok(())
    }

    /// Factor `L` (k x r) of the data covariance, exact for perfect
    /// correlation.
    fn data_factor(&self) -> Result<DMatrix<f64>, ScenarioError> {
        let k = self.k;
        let sd: Vec<f64> = self.variances.iter().map(|v| v.sqrt()).collect();
        if k == 1 {
            return Ok(DMatrix::from_element(1, 1, sd[0]));
        }
        if self.rho == 1.0 || (k == 2 && self.rho == -1.0) {
            return Ok(DMatrix::from_fn(k, 1, |i, _| if i == 0 { sd[0] } else { self.rho * sd[i] }));
        }
        let cov = DMatrix::from_fn(k, k, |i, j| if i == j { self.variances[i] } else { self.rho * sd[i] * sd[j] });
        Cholesky::new(cov)
            .map(|c| c.l())
            .ok_or_else(|| ScenarioError::Invalid("data covariance is not positive definite".into()))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MethodCoverage {
    pub pointwise: f64,
    pub bonferroni: f64,
    pub supt: f64,
    pub ellipsoid: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MeanCritical {
    pub pointwise: f64,
    pub bonferroni: f64,
    pub supt: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub scenario: SimScenario,
    /// Replicates that produced regions.
    pub completed: usize,
    /// Replicates whose estimation or region construction failed.
    pub failures: usize,
    pub simultaneous: MethodCoverage,
    /// Per-coordinate coverage of the pointwise intervals.
    pub marginal_pointwise: Vec<f64>,
    pub mean_critical: MeanCritical,
}

struct Replicate {
    pointwise: bool,
    bonferroni: bool,
    supt: bool,
    ellipsoid: bool,
    marginal: Vec<bool>,
    supt_critical: f64,
}

/// SplitMix64 step; derives independent per-replicate seeds.
pub fn split_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn draw_sample(s: &SimScenario, factor: &DMatrix<f64>, rep: usize) -> Vec<Vec<f64>> {
    let mut rng = ChaCha20Rng::seed_from_u64(s.seed);
    rng.set_stream(rep as u64);
    let r = factor.ncols();
    let mut z = vec![0.0; r];
    (0..s.n_per_rep)
        .map(|_| {
            for zi in z.iter_mut() {
                *zi = StandardNormal.sample(&mut rng);
            }
            (0..s.k)
                .map(|i| s.true_theta[i] + (0..r).map(|j| factor[(i, j)] * z[j]).sum::<f64>())
                .collect()
        })
        .collect()
}

// Wald region for a possibly singular covariance: Mahalanobis distance on the
// range of `cov` (pseudo-inverse) against chi-square with rank degrees of
// freedom; deviations outside the range are never covered.
fn rank_reduced_wald_covers(center: &[f64], cov: &DMatrix<f64>, truth: &[f64], alpha: f64) -> bool {
    let eig = SymmetricEigen::new(cov.clone());
    let lmax = eig.eigenvalues.max();
    if !(lmax > 0.0) {
        return center == truth;
    }
    let d: Vec<f64> = truth.iter().zip(center).map(|(t, c)| t - c).collect();
    let dnorm = d.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut m2 = 0.0;
    let mut rank = 0;
    for (j, &lambda) in eig.eigenvalues.iter().enumerate() {
        let proj: f64 = eig.eigenvectors.column(j).iter().zip(&d).map(|(q, x)| q * x).sum();
        if lambda > 1e-10 * lmax {
            rank += 1;
            m2 += proj * proj / lambda;
        } else if proj.abs() > 1e-8 * dnorm.max(lmax.sqrt()) {
            return false;
        }
    }
    m2 <= chi_square_quantile(1.0 - alpha, rank as f64)
}

fn run_replicate(s: &SimScenario, factor: &DMatrix<f64>, rep: usize) -> Option<Replicate> {
    let rows = draw_sample(s, factor, rep);
    let k = s.k;
    let names = (1..=k).map(|j| format!("mu{j}")).collect();
    let model = EstimatingModel::from_rows(names, vec![0.0; k], rows, |o, t, out| {
        for ((r, y), m) in out.iter_mut().zip(o).zip(t) {
            *r = y - m;
        }
    })
    .ok()?;
    let fit = solve(&model, &SolverOptions::default()).ok()?;
    let theta = &fit.theta_hat;
    let cov = &fit.covariance;
    let truth = &s.true_theta;

    let pointwise = regions::wald_intervals(theta, cov, s.alpha).ok()?;
    let bonf = regions::band(theta, cov, bonferroni_critical(k, s.alpha), BandKind::Bonferroni).ok()?;
    let supt_c = regions::supt_critical_value(cov, s.alpha, s.supt_draws, split_seed(s.seed, rep as u64)).ok()?;
    let supt = regions::band(theta, cov, supt_c, BandKind::Supt).ok()?;
    let ellipsoid = if k >= 2 {
        match regions::ellipsoid(theta, cov, s.alpha, 0) {
            Ok(e) => e.contains(truth),
            Err(RegionError::SingularCovariance) => rank_reduced_wald_covers(theta, cov, truth, s.alpha),
            Err(_) => return None,
        }
    } else {
        pointwise.contains(truth)
    };

    let marginal = (0..k)
        .map(|i| pointwise.lower[i] <= truth[i] && truth[i] <= pointwise.upper[i])
        .collect();
    Some(Replicate {
        pointwise: pointwise.contains(truth),
        bonferroni: bonf.contains(truth),
        supt: supt.contains(truth),
        ellipsoid,
        marginal,
        supt_critical: supt_c,
    })
}

/// Runs every replicate of `scenario` and tallies coverage.
pub fn run_coverage(scenario: &SimScenario) -> Result<CoverageReport, ScenarioError> {
    scenario.validate()?;
    let factor = scenario.data_factor()?;
    let outcomes: Vec<Option<Replicate>> = (0..scenario.reps)
        .into_par_iter()
        .map(|rep| run_replicate(scenario, &factor, rep))
        .collect();

    let done: Vec<&Replicate> = outcomes.iter().flatten().collect();
    let completed = done.len();
    let failures = scenario.reps - completed;
    let denom = completed.max(1) as f64;
    let rate = |f: &dyn Fn(&Replicate) -> bool| done.iter().filter(|r| f(r)).count() as f64 / denom;

    let simultaneous = MethodCoverage {
        pointwise: rate(&|r| r.pointwise),
        bonferroni: rate(&|r| r.bonferroni),
        supt: rate(&|r| r.supt),
        ellipsoid: rate(&|r| r.ellipsoid),
    };
    let marginal_pointwise = (0..scenario.k).map(|i| rate(&|r| r.marginal[i])).collect();
    let z = crate::quantile::two_sided_z(scenario.alpha);
    let mean_critical = MeanCritical {
        pointwise: z,
        bonferroni: bonferroni_critical(scenario.k, scenario.alpha),
        supt: done.iter().map(|r| r.supt_critical).sum::<f64>() / denom,
    };
    Ok(CoverageReport {
        scenario: scenario.clone(),
        completed,
        failures,
        simultaneous,
        marginal_pointwise,
        mean_critical,
    })
}
