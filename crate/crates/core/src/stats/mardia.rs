//! Mardia's multivariate skewness and kurtosis.

use nalgebra::DMatrix;

use super::{
    checked_inverse, chi2_sf, mean_and_covariance, normal_two_sided, Sample2D, TestResult,
};
use crate::error::{Error, Result};

/// Returns `(skewness, kurtosis)` results.
///
/// Skewness: statistic `n * b1 / 6`, chi-square with `p(p+1)(p+2)/6` df;
/// extras carry `b1`. Kurtosis: statistic `z = (b2 - p(p+2)) / sqrt(8p(p+2)/n)`,
/// two-sided normal p; extras carry `b2`. The covariance uses the `n - 1`
/// denominator.
pub fn mardia_test(x: &Sample2D) -> Result<(TestResult, TestResult)> {
    mardia_matrix(&x.matrix())
}

pub(crate) fn mardia_matrix(x: &DMatrix<f64>) -> Result<(TestResult, TestResult)> {
    let (n, p) = x.shape();
    if n < p + 2 {
        return Err(Error::domain(format!(
            "need at least {} points, got {n}",
            p + 2
        )));
    }
    let (mu, cov) = mean_and_covariance(x);
    let inv = checked_inverse(&cov, "mardia")?;
    let mut centered = x.clone();
    for mut row in centered.row_iter_mut() {
        row -= mu.transpose();
    }
    let g = &centered * inv * centered.transpose();
    let nf = n as f64;
    let b1 = g.iter().map(|v| v.powi(3)).sum::<f64>() / (nf * nf);
    let b2 = g.diagonal().iter().map(|v| v * v).sum::<f64>() / nf;
    let pf = p as f64;

    let df = pf * (pf + 1.0) * (pf + 2.0) / 6.0;
    let chi = nf * b1 / 6.0;
    let skew = TestResult::new(chi, vec![df], chi2_sf(chi, df)).extra("b1", b1);

    let target = pf * (pf + 2.0);
    let z = (b2 - target) / (8.0 * target / nf).sqrt();
    let kurt = TestResult::new(z, vec![], normal_two_sided(z)).extra("b2", b2);
    Ok((skew, kurt))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(points: &[[f64; 2]]) -> Sample2D {
        Sample2D::from_points(points.to_vec()).unwrap()
    }

    #[test]
    fn two_dimensions_give_four_df() {
        let s = sample(&[[0.0, 1.0], [1.0, 0.3], [2.0, 2.2], [0.5, -1.0], [1.7, 0.1]]);
        let (skew, _) = mardia_test(&s).unwrap();
        assert_eq!(skew.df, vec![4.0]);
    }

    #[test]
    fn symmetric_cross_has_no_skew() {
        let (skew, kurt) =
            mardia_test(&sample(&[[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]])).unwrap();
        assert!(skew.get("b1").unwrap().abs() < 1e-15);
        assert!((skew.p - 1.0).abs() < 1e-12);
        // S = I/1.5 so every point has Mahalanobis^2 = 1.5 and b2 = 2.25.
        assert!((kurt.get("b2").unwrap() - 2.25).abs() < 1e-12);
    }

    #[test]
    fn hand_computed_skewness() {
        // Brute-force double sum, written out independently.
        let pts = [[0.0, 0.0], [3.0, 1.0], [1.0, 2.0], [4.0, 4.0], [0.5, 3.0]];
        let n = pts.len() as f64;
        let m = [
            pts.iter().map(|p| p[0]).sum::<f64>() / n,
            pts.iter().map(|p| p[1]).sum::<f64>() / n,
        ];
        let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
        for p in &pts {
            sxx += (p[0] - m[0]).powi(2);
            sxy += (p[0] - m[0]) * (p[1] - m[1]);
            syy += (p[1] - m[1]).powi(2);
        }
        let (sxx, sxy, syy) = (sxx / (n - 1.0), sxy / (n - 1.0), syy / (n - 1.0));
        let det = sxx * syy - sxy * sxy;
        let q = |a: &[f64; 2], b: &[f64; 2]| {
            let (ax, ay, bx, by) = (a[0] - m[0], a[1] - m[1], b[0] - m[0], b[1] - m[1]);
            (ax * (syy * bx - sxy * by) + ay * (-sxy * bx + sxx * by)) / det
        };
        let mut b1 = 0.0;
        let mut b2 = 0.0;
        for a in &pts {
            for b in &pts {
                b1 += q(a, b).powi(3);
            }
            b2 += q(a, a).powi(2);
        }
        b1 /= n * n;
        b2 /= n;
        let (skew, kurt) = mardia_test(&sample(&pts)).unwrap();
        assert!((skew.get("b1").unwrap() - b1).abs() < 1e-12);
        assert!((skew.statistic - n * b1 / 6.0).abs() < 1e-12);
        assert!((kurt.get("b2").unwrap() - b2).abs() < 1e-12);
        assert!((kurt.statistic - (b2 - 8.0) / (64.0 / n).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn collinear_is_degenerate() {
        let s = sample(&[[0.0, 0.0], [1.0, 1.0], [2.0, 2.0], [3.0, 3.0]]);
        assert!(matches!(mardia_test(&s), Err(Error::DegenerateSample(_))));
    }

    #[test]
    fn too_few_points() {
        assert!(mardia_test(&sample(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])).is_err());
    }
}
