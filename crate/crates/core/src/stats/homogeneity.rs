//! Covariance and variance homogeneity: Box's M, Levene, Brown-Forsythe.

use nalgebra::DMatrix;

use super::{
    checked_inverse, chi2_sf, f_sf, mean, mean_and_covariance, median, Sample2D, TestResult,
};
use crate::error::{Error, Result};

/// Relative size below which a sum of squares counts as zero.
const SS_FLOOR: f64 = 1e-12;

/// One-way ANOVA F with df `(g - 1, N - g)`.
///
/// A vanishing between-group sum of squares gives F = 0; a vanishing
/// within-group sum with real between-group spread gives F = infinity.
pub fn one_way_anova(groups: &[Vec<f64>]) -> Result<TestResult> {
    let g = groups.len();
    if g < 2 {
        return Err(Error::usage("ANOVA needs at least two groups"));
    }
    if groups.iter().any(|grp| grp.is_empty()) {
        return Err(Error::domain("ANOVA groups must be non-empty"));
    }
    let n: usize = groups.iter().map(Vec::len).sum();
    if n <= g {
        return Err(Error::domain("ANOVA needs more observations than groups"));
    }
    let grand = groups.iter().flatten().sum::<f64>() / n as f64;
    let scale: f64 = groups
        .iter()
        .flatten()
        .map(|v| (v - grand).powi(2))
        .sum::<f64>()
        + groups.iter().flatten().map(|v| v * v).sum::<f64>() * 1e-300;
    let mut ssb = 0.0;
    let mut ssw = 0.0;
    for grp in groups {
        let m = mean(grp);
        ssb += grp.len() as f64 * (m - grand).powi(2);
        ssw += grp.iter().map(|v| (v - m).powi(2)).sum::<f64>();
    }
    let (d1, d2) = ((g - 1) as f64, (n - g) as f64);
    let tiny = SS_FLOOR * scale;
    let (f, note) = if ssb <= tiny {
        (0.0, Some("no between-group variation; F set to 0"))
    } else if ssw <= tiny {
        (
            f64::INFINITY,
            Some("no within-group variation; F is infinite"),
        )
    } else {
        ((ssb / d1) / (ssw / d2), None)
    };
    let p = if f == 0.0 { 1.0 } else { f_sf(f, d1, d2) };
    let mut r = TestResult::new(f, vec![d1, d2], p)
        .extra("ss_between", ssb)
        .extra("ss_within", ssw);
    if let Some(text) = note {
        r = r.note(text);
    }
    Ok(r)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Center {
    /// Levene's test.
    Mean,
    /// Brown-Forsythe test.
    Median,
}

/// ANOVA on absolute deviations from each group's center.
pub fn levene_like_test(groups: &[Vec<f64>], center: Center) -> Result<TestResult> {
    if groups.iter().any(|g| g.len() < 2) {
        return Err(Error::domain("each group needs at least two values"));
    }
    let scores: Vec<Vec<f64>> = groups
        .iter()
        .map(|g| {
            let c = match center {
                Center::Mean => mean(g),
                Center::Median => median(g),
            };
            g.iter().map(|v| (v - c).abs()).collect()
        })
        .collect();
    one_way_anova(&scores)
}

/// Box's correction factor `c`; the chi-square statistic is `M (1 - c)`.
pub fn box_m_scale(sizes: &[usize], p: usize) -> f64 {
    let g = sizes.len() as f64;
    let n: usize = sizes.iter().sum();
    let pf = p as f64;
    let inv_sum: f64 = sizes.iter().map(|&ni| 1.0 / (ni as f64 - 1.0)).sum();
    (inv_sum - 1.0 / (n as f64 - g)) * (2.0 * pf * pf + 3.0 * pf - 1.0)
        / (6.0 * (pf + 1.0) * (g - 1.0))
}

/// Box's M for equality of covariance matrices, with the chi-square
/// approximation scaled by [`box_m_scale`]. Extras carry `M` and `scale`.
pub fn box_m_test(groups: &[Sample2D]) -> Result<TestResult> {
    let mats: Vec<DMatrix<f64>> = groups.iter().map(Sample2D::matrix).collect();
    box_m_matrices(&mats)
}

pub(crate) fn box_m_matrices(groups: &[DMatrix<f64>]) -> Result<TestResult> {
    if groups.len() < 2 {
        return Err(Error::usage("Box's M needs at least two groups"));
    }
    let p = groups[0].ncols();
    if groups.iter().any(|x| x.nrows() < p + 1) {
        return Err(Error::domain(format!(
            "each group needs at least {} points",
            p + 1
        )));
    }
    let sizes: Vec<usize> = groups.iter().map(|x| x.nrows()).collect();
    let n: usize = sizes.iter().sum();
    let g = groups.len();
    let mut pooled = DMatrix::zeros(p, p);
    let mut weighted_logdet = 0.0;
    for (i, x) in groups.iter().enumerate() {
        let (_, cov) = mean_and_covariance(x);
        checked_inverse(&cov, &format!("group {i}"))?;
        weighted_logdet += (x.nrows() as f64 - 1.0) * cov.determinant().ln();
        pooled += cov * (x.nrows() as f64 - 1.0);
    }
    pooled /= (n - g) as f64;
    let m = (n - g) as f64 * pooled.determinant().ln() - weighted_logdet;
    let c = box_m_scale(&sizes, p);
    let chi = m * (1.0 - c);
    let df = ((g - 1) * p * (p + 1)) as f64 / 2.0;
    Ok(TestResult::new(chi, vec![df], chi2_sf(chi, df))
        .extra("M", m)
        .extra("scale", c)
        .note("chi-square approximation uses Box's scale factor"))
}
