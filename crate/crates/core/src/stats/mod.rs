//! Statistical procedures over two-dimensional energy samples.

mod adjust;
mod distance;
mod ellipse;
mod homogeneity;
mod mardia;
mod permutation;
mod rank;

pub use adjust::{p_adjust, Adjust};
pub use distance::{distance_metrics, CellMetrics, DistanceReport, OptimizerMetrics, PlaceOptions};
pub use ellipse::{bootstrap_ellipse, Ellipse};
pub use homogeneity::{box_m_scale, box_m_test, levene_like_test, one_way_anova, Center};
pub use mardia::mardia_test;
pub use permutation::{pairwise_posthoc, permanova, permdisp, PairwiseMatrix, PermTest};
pub use rank::{
    average_ranks, friedman_test, tied_rank_groups, wilcoxon_signed_rank, PlaceConvention,
    EXACT_WILCOXON_MAX,
};

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, FisherSnedecor, Normal};

use crate::error::{Error, Result};

/// Ratio of smallest to largest covariance eigenvalue below which a sample
/// counts as degenerate.
pub const CONDITION_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample2D {
    pub points: Vec<[f64; 2]>,
    pub family: String,
    pub optimizer: String,
}

impl Sample2D {
    pub fn new(
        points: Vec<[f64; 2]>,
        family: impl Into<String>,
        optimizer: impl Into<String>,
    ) -> Result<Self> {
        if points.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::domain("sample points must be finite"));
        }
        Ok(Self {
            points,
            family: family.into(),
            optimizer: optimizer.into(),
        })
    }

    /// Unlabeled sample, handy for tests and one-off analyses.
    pub fn from_points(points: Vec<[f64; 2]>) -> Result<Self> {
        Self::new(points, "", "")
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn coordinate(&self, axis: usize) -> Vec<f64> {
        self.points.iter().map(|p| p[axis]).collect()
    }

    pub(crate) fn matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.points.len(), 2, |r, c| self.points[r][c])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub df: Vec<f64>,
    pub p: f64,
    #[serde(default)]
    pub extras: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl TestResult {
    pub(crate) fn new(statistic: f64, df: Vec<f64>, p: f64) -> Self {
        Self {
            statistic,
            df,
            p: p.clamp(0.0, 1.0),
            extras: BTreeMap::new(),
            notes: Vec::new(),
        }
    }

    pub(crate) fn extra(mut self, key: &str, value: f64) -> Self {
        self.extras.insert(key.to_string(), value);
        self
    }

    pub(crate) fn note(mut self, text: impl Into<String>) -> Self {
        self.notes.push(text.into());
        self
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        self.extras.get(key).copied()
    }
}

pub(crate) fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Linear-interpolation quantile of sorted data (Hyndman-Fan type 7).
pub(crate) fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub(crate) fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    quantile_sorted(&s, 0.5)
}

/// Column means and unbiased covariance of an `n x p` data matrix.
pub(crate) fn mean_and_covariance(x: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let n = x.nrows();
    let mu = DVector::from_iterator(x.ncols(), x.column_iter().map(|c| c.sum() / n as f64));
    let mut centered = x.clone();
    for mut row in centered.row_iter_mut() {
        row -= mu.transpose();
    }
    let cov = centered.transpose() * &centered / (n as f64 - 1.0);
    (mu, cov)
}

/// Inverse of a covariance matrix, refusing near-singular ones.
pub(crate) fn checked_inverse(cov: &DMatrix<f64>, what: &str) -> Result<DMatrix<f64>> {
    let eig = cov.clone().symmetric_eigenvalues();
    let max = eig.max();
    let min = eig.min();
    if !(max > 0.0) || min / max < CONDITION_FLOOR {
        return Err(Error::degenerate(format!(
            "{what}: covariance is singular (eigenvalues {min:.3e}, {max:.3e})"
        )));
    }
    cov.clone()
        .try_inverse()
        .ok_or_else(|| Error::degenerate(format!("{what}: covariance is singular")))
}

pub(crate) fn chi2_sf(x: f64, df: f64) -> f64 {
    if x.is_infinite() {
        return 0.0;
    }
    ChiSquared::new(df).expect("positive df").sf(x.max(0.0))
}

pub(crate) fn f_sf(x: f64, d1: f64, d2: f64) -> f64 {
    if x.is_infinite() {
        return 0.0;
    }
    FisherSnedecor::new(d1, d2)
        .expect("positive df")
        .sf(x.max(0.0))
}

pub(crate) fn normal_two_sided(z: f64) -> f64 {
    2.0 * Normal::standard().sf(z.abs())
}

/// Group labels mapped to dense indices in first-appearance order.
pub(crate) fn encode_labels<S: AsRef<str>>(labels: &[S]) -> (Vec<String>, Vec<usize>) {
    let mut names: Vec<String> = Vec::new();
    let codes = labels
        .iter()
        .map(|l| match names.iter().position(|n| n == l.as_ref()) {
            Some(i) => i,
            None => {
                names.push(l.as_ref().to_string());
                names.len() - 1
            }
        })
        .collect();
    (names, codes)
}
