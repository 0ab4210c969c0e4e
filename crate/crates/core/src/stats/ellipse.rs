//! Bootstrap-calibrated prediction ellipses.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{quantile_sorted, Sample2D, CONDITION_FLOOR};
use crate::error::{Error, Result};

const MAX_REDRAWS: usize = 10;

/// The set `{x : (x - mu)^T sigma^-1 (x - mu) <= d95_sq}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ellipse {
    pub mu: [f64; 2],
    pub sigma: [[f64; 2]; 2],
    pub d95_sq: f64,
}

impl Ellipse {
    pub fn mahalanobis_sq(&self, x: [f64; 2]) -> f64 {
        let inv = inverse(&self.sigma);
        quad_form(&inv, [x[0] - self.mu[0], x[1] - self.mu[1]])
    }

    pub fn contains(&self, x: [f64; 2]) -> bool {
        self.mahalanobis_sq(x) <= self.d95_sq
    }

    /// Semi-axis lengths (major first) and the major axis angle in radians.
    pub fn axes(&self) -> (f64, f64, f64) {
        let [[a, b], [_, d]] = self.sigma;
        let (l1, l2) = eigenvalues(&self.sigma);
        let angle = 0.5 * (2.0 * b).atan2(a - d);
        ((l1 * self.d95_sq).sqrt(), (l2 * self.d95_sq).sqrt(), angle)
    }
}

fn moments(
    points: &[[f64; 2]],
    idx: impl Iterator<Item = usize> + Clone,
) -> ([f64; 2], [[f64; 2]; 2]) {
    let n = idx.clone().count() as f64;
    let mut mu = [0.0; 2];
    for i in idx.clone() {
        mu[0] += points[i][0];
        mu[1] += points[i][1];
    }
    mu[0] /= n;
    mu[1] /= n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for i in idx {
        let dx = points[i][0] - mu[0];
        let dy = points[i][1] - mu[1];
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    let d = n - 1.0;
    (mu, [[sxx / d, sxy / d], [sxy / d, syy / d]])
}

/// Eigenvalues of a symmetric 2x2 matrix, larger first.
fn eigenvalues(s: &[[f64; 2]; 2]) -> (f64, f64) {
    let half_trace = 0.5 * (s[0][0] + s[1][1]);
    let r = (0.25 * (s[0][0] - s[1][1]).powi(2) + s[0][1] * s[0][1]).sqrt();
    (half_trace + r, half_trace - r)
}

fn well_conditioned(s: &[[f64; 2]; 2]) -> bool {
    let (max, min) = eigenvalues(s);
    max > 0.0 && min / max >= CONDITION_FLOOR
}

fn inverse(s: &[[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let det = s[0][0] * s[1][1] - s[0][1] * s[1][0];
    [
        [s[1][1] / det, -s[0][1] / det],
        [-s[1][0] / det, s[0][0] / det],
    ]
}

fn quad_form(inv: &[[f64; 2]; 2], d: [f64; 2]) -> f64 {
    inv[0][0] * d[0] * d[0] + 2.0 * inv[0][1] * d[0] * d[1] + inv[1][1] * d[1] * d[1]
}

/// 95th percentile (type 7) of squared Mahalanobis distances of the indexed
/// points to their own mean and covariance; `None` for a singular resample.
fn within_percentile(points: &[[f64; 2]], idx: &[usize]) -> Option<f64> {
    let (mu, sigma) = moments(points, idx.iter().copied());
    if !well_conditioned(&sigma) {
        return None;
    }
    let inv = inverse(&sigma);
    let mut d: Vec<f64> = idx
        .iter()
        .map(|&i| quad_form(&inv, [points[i][0] - mu[0], points[i][1] - mu[1]]))
        .collect();
    d.sort_by(f64::total_cmp);
    Some(quantile_sorted(&d, 0.95))
}

/// Sample mean and covariance with a cutoff equal to the median, across
/// `n_boot` resamples, of each resample's 95th percentile of squared
/// Mahalanobis distances to its own mean and covariance.
///
/// Resamples with a singular covariance are redrawn, at most ten times each.
/// Each resample has its own seed drawn from `rng` up front, so results do
/// not depend on the thread count.
pub fn bootstrap_ellipse<R: Rng + ?Sized>(
    sample: &Sample2D,
    n_boot: usize,
    rng: &mut R,
) -> Result<Ellipse> {
    let n = sample.len();
    if n < 3 {
        return Err(Error::domain(format!(
            "ellipse needs at least 3 points, got {n}"
        )));
    }
    if n_boot == 0 {
        return Err(Error::usage("n_boot must be at least 1"));
    }
    let points = &sample.points;
    let (mu, sigma) = moments(points, 0..n);
    if !well_conditioned(&sigma) {
        return Err(Error::degenerate(format!(
            "ellipse for {}/{}: covariance is singular",
            sample.family, sample.optimizer
        )));
    }
    let seeds: Vec<u64> = (0..n_boot).map(|_| rng.random()).collect();
    let cutoffs = seeds
        .par_iter()
        .map(|&seed| {
            let mut local = ChaCha8Rng::seed_from_u64(seed);
            let mut idx = vec![0usize; n];
            for _ in 0..MAX_REDRAWS {
                for slot in idx.iter_mut() {
                    *slot = local.random_range(0..n);
                }
                if let Some(q) = within_percentile(points, &idx) {
                    return Ok(q);
                }
            }
            Err(Error::degenerate(format!(
                "ellipse for {}/{}: {MAX_REDRAWS} consecutive singular resamples",
                sample.family, sample.optimizer
            )))
        })
        .collect::<Result<Vec<f64>>>()?;
    let mut sorted = cutoffs;
    sorted.sort_by(f64::total_cmp);
    Ok(Ellipse {
        mu,
        sigma,
        d95_sq: quantile_sorted(&sorted, 0.5),
    })
}
