//! Rank-based comparisons: Friedman with Kendall's W, Wilcoxon signed-rank,
//! and tied-rank placement of methods.

use serde::{Deserialize, Serialize};

use super::{chi2_sf, mean, median, normal_two_sided, p_adjust, Adjust, TestResult};
use crate::error::{Error, Result};

/// Largest number of non-zero differences for which the Wilcoxon null
/// distribution is enumerated exactly.
pub const EXACT_WILCOXON_MAX: usize = 25;

/// 1-based ascending ranks; ties share the average of their positions.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < idx.len() {
        let mut end = start + 1;
        while end < idx.len() && values[idx[end]] == values[idx[start]] {
            end += 1;
        }
        let avg = (start + end + 1) as f64 / 2.0;
        for &i in &idx[start..end] {
            ranks[i] = avg;
        }
        start = end;
    }
    ranks
}

fn check_matrix(values: &[Vec<f64>]) -> Result<(usize, usize)> {
    let n = values.len();
    let k = values.first().map_or(0, Vec::len);
    if n < 2 || k < 2 {
        return Err(Error::domain(format!(
            "need at least 2 blocks and 2 methods, got {n} x {k}"
        )));
    }
    if values.iter().any(|row| row.len() != k) {
        return Err(Error::domain("all blocks need the same number of methods"));
    }
    if values.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::domain("values must be finite"));
    }
    Ok((n, k))
}

/// Friedman test over an `n_blocks x k_methods` matrix (lower value = rank 1).
///
/// `chi2 = 12 / (n k (k+1)) * sum(R_j^2) - 3 n (k+1)` with rank sums `R_j`,
/// without tie correction; Kendall's `W = chi2 / (n (k-1))` goes in extras
/// along with the mean rank of each method (`mean_rank_<j>`).
pub fn friedman_test(values: &[Vec<f64>]) -> Result<TestResult> {
    let (n, k) = check_matrix(values)?;
    let mut sums = vec![0.0; k];
    for row in values {
        for (s, r) in sums.iter_mut().zip(average_ranks(row)) {
            *s += r;
        }
    }
    let (nf, kf) = (n as f64, k as f64);
    let sum_sq: f64 = sums.iter().map(|r| r * r).sum();
    let chi = (12.0 / (nf * kf * (kf + 1.0)) * sum_sq - 3.0 * nf * (kf + 1.0)).max(0.0);
    let w = chi / (nf * (kf - 1.0));
    let df = kf - 1.0;
    let mut r = TestResult::new(chi, vec![df], chi2_sf(chi, df)).extra("W", w);
    for (j, s) in sums.iter().enumerate() {
        r = r.extra(&format!("mean_rank_{j}"), s / nf);
    }
    Ok(r)
}

/// Two-sided Wilcoxon signed-rank test on paired samples.
///
/// Zero differences are dropped; tied magnitudes share average ranks. The
/// statistic is `min(W+, W-)`. Up to [`EXACT_WILCOXON_MAX`] non-zero pairs
/// the p-value comes from the exact null distribution, beyond that from the
/// tie-corrected normal approximation. Extras: `W_plus`, `W_minus`,
/// `n_nonzero`, `median_diff` (over all pairs), `exact`, `degenerate`.
pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64]) -> Result<TestResult> {
    if a.len() != b.len() {
        return Err(Error::domain(format!(
            "paired samples differ in length: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    if a.is_empty() {
        return Err(Error::domain("empty samples"));
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    if diffs.iter().any(|d| !d.is_finite()) {
        return Err(Error::domain("differences must be finite"));
    }
    let median_diff = median(&diffs);
    let nonzero: Vec<f64> = diffs.iter().copied().filter(|&d| d != 0.0).collect();
    let n = nonzero.len();
    if n == 0 {
        return Ok(TestResult::new(0.0, vec![], 1.0)
            .extra("W_plus", 0.0)
            .extra("W_minus", 0.0)
            .extra("n_nonzero", 0.0)
            .extra("median_diff", median_diff)
            .extra("exact", 1.0)
            .extra("degenerate", 1.0)
            .note("all differences are zero"));
    }
    let mags: Vec<f64> = nonzero.iter().map(|d| d.abs()).collect();
    let ranks = average_ranks(&mags);
    let w_plus: f64 = ranks
        .iter()
        .zip(&nonzero)
        .filter(|(_, &d)| d > 0.0)
        .map(|(r, _)| r)
        .sum();
    let total = (n * (n + 1)) as f64 / 2.0;
    let w_minus = total - w_plus;
    let w = w_plus.min(w_minus);
    let exact = n <= EXACT_WILCOXON_MAX;
    let p = if exact {
        exact_lower_tail(&ranks, w) * 2.0
    } else {
        let nf = n as f64;
        let mut ties = 0.0;
        let mut sorted = mags.clone();
        sorted.sort_by(f64::total_cmp);
        let mut i = 0;
        while i < n {
            let mut j = i + 1;
            while j < n && sorted[j] == sorted[i] {
                j += 1;
            }
            let t = (j - i) as f64;
            ties += t * t * t - t;
            i = j;
        }
        let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - ties / 48.0;
        normal_two_sided((w_plus - total / 2.0) / var.sqrt())
    };
    Ok(TestResult::new(w, vec![], p.min(1.0))
        .extra("W_plus", w_plus)
        .extra("W_minus", w_minus)
        .extra("n_nonzero", n as f64)
        .extra("median_diff", median_diff)
        .extra("exact", if exact { 1.0 } else { 0.0 })
        .extra("degenerate", 0.0))
}

/// `P(W+ <= w)` under the null, with all sign patterns equally likely.
fn exact_lower_tail(ranks: &[f64], w: f64) -> f64 {
    // Average ranks are multiples of 1/2, so doubled ranks are integers.
    let doubled: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
    let max: usize = doubled.iter().sum();
    let mut counts = vec![0.0f64; max + 1];
    counts[0] = 1.0;
    let mut reach = 0;
    for &r in &doubled {
        for s in (0..=reach).rev() {
            if counts[s] != 0.0 {
                counts[s + r] += counts[s];
            }
        }
        reach += r;
    }
    let limit = (2.0 * w).round() as usize;
    let hits: f64 = counts[..=limit.min(max)].iter().sum();
    hits / 2f64.powi(ranks.len() as i32)
}

/// How methods that share a group are numbered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlaceConvention {
    /// Shared place is the group's first position; the next group starts at
    /// previous place + group size (1, 1, 3).
    #[default]
    Competition,
    /// Shared place is the mean of the positions the group spans (1.5, 1.5, 3).
    Fractional,
}

/// Places (1 = best) for each method over an `n_blocks x k_methods` matrix
/// where lower values are better.
///
/// A non-significant Friedman test at `alpha` puts every method in one
/// group. Otherwise methods are ordered by mean value and grouped greedily:
/// each group starts at the best unplaced method and takes following methods
/// until one differs from the group's first member under Holm-adjusted
/// pairwise Wilcoxon tests.
pub fn tied_rank_groups(
    values: &[Vec<f64>],
    alpha: f64,
    convention: PlaceConvention,
) -> Result<Vec<f64>> {
    let (_, k) = check_matrix(values)?;
    let column = |j: usize| values.iter().map(|row| row[j]).collect::<Vec<f64>>();
    let mut order: Vec<usize> = (0..k).collect();
    let means: Vec<f64> = (0..k).map(|j| mean(&column(j))).collect();
    order.sort_by(|&a, &b| means[a].total_cmp(&means[b]).then(a.cmp(&b)));

    let friedman = friedman_test(values)?;
    let groups: Vec<Vec<usize>> = if !(friedman.p < alpha) {
        vec![order.clone()]
    } else {
        let pairs: Vec<(usize, usize)> = (0..k)
            .flat_map(|a| (a + 1..k).map(move |b| (a, b)))
            .collect();
        let raw = pairs
            .iter()
            .map(|&(a, b)| wilcoxon_signed_rank(&column(a), &column(b)).map(|r| r.p))
            .collect::<Result<Vec<f64>>>()?;
        let adjusted = p_adjust(&raw, Adjust::Holm);
        let mut sig = vec![vec![false; k]; k];
        for (&(a, b), &p) in pairs.iter().zip(&adjusted) {
            sig[a][b] = p < alpha;
            sig[b][a] = p < alpha;
        }
        let mut groups = Vec::new();
        let mut i = 0;
        while i < k {
            let lead = order[i];
            let mut j = i + 1;
            while j < k && !sig[lead][order[j]] {
                j += 1;
            }
            groups.push(order[i..j].to_vec());
            i = j;
        }
        groups
    };

    let mut places = vec![0.0; k];
    let mut before = 0usize;
    for g in &groups {
        let place = match convention {
            PlaceConvention::Competition => (before + 1) as f64,
            PlaceConvention::Fractional => before as f64 + (g.len() + 1) as f64 / 2.0,
        };
        for &m in g {
            places[m] = place;
        }
        before += g.len();
    }
    Ok(places)
}
