//! PERMANOVA, PERMDISP and their pairwise post-hoc grids.
//!
//! Both tests compare a within-group sum of squares across relabelings; the
//! total sum of squares does not depend on the labels, so a smaller
//! within-group sum is a larger F. When the number of distinct labelings
//! fits in `n_perm`, all of them are enumerated and the p-value is exact.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{encode_labels, f_sf, p_adjust, Adjust, TestResult};
use crate::error::{Error, Result};

/// Relative tolerance when comparing a permuted statistic to the observed one.
const TIE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PermTest {
    Permanova,
    Permdisp,
}

impl fmt::Display for PermTest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PermTest::Permanova => "permanova",
            PermTest::Permdisp => "permdisp",
        })
    }
}

impl FromStr for PermTest {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "permanova" => Ok(PermTest::Permanova),
            "permdisp" => Ok(PermTest::Permdisp),
            other => Err(Error::usage(format!("unknown permutation test {other:?}"))),
        }
    }
}

struct Design {
    codes: Vec<usize>,
    sizes: Vec<usize>,
}

fn design<S: AsRef<str>>(n_points: usize, labels: &[S]) -> Result<Design> {
    if labels.len() != n_points {
        return Err(Error::usage(format!(
            "{} labels for {n_points} points",
            labels.len()
        )));
    }
    let (names, codes) = encode_labels(labels);
    if names.len() < 2 {
        return Err(Error::usage("need at least two groups"));
    }
    let mut sizes = vec![0; names.len()];
    for &c in &codes {
        sizes[c] += 1;
    }
    if let Some(g) = sizes.iter().position(|&s| s < 2) {
        return Err(Error::domain(format!(
            "group {:?} has fewer than two points",
            names[g]
        )));
    }
    Ok(Design { codes, sizes })
}

/// Number of distinct labelings, or `None` past `u64`.
fn labeling_count(sizes: &[usize]) -> Option<u64> {
    let mut count: u128 = 1;
    let mut placed = 0u128;
    for &s in sizes {
        for i in 1..=s as u128 {
            placed += 1;
            count = count * placed / i;
            if count > u64::MAX as u128 {
                return None;
            }
        }
    }
    Some(count as u64)
}

/// Advance to the next lexicographic arrangement; false after the last.
fn next_arrangement(v: &mut [usize]) -> bool {
    let Some(i) = (1..v.len()).rev().find(|&i| v[i - 1] < v[i]) else {
        return false;
    };
    let j = (i..v.len())
        .rev()
        .find(|&j| v[j] > v[i - 1])
        .expect("pivot has a successor");
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

/// Counts labelings whose within-group sum is at most the observed one.
/// Returns `(count, total, exhaustive)`.
fn permutation_count<R, F>(
    codes: &[usize],
    sizes: &[usize],
    n_perm: usize,
    rng: &mut R,
    ss_within: F,
    tol: f64,
) -> (u64, u64, bool)
where
    R: Rng + ?Sized,
    F: Fn(&[usize]) -> f64 + Sync,
{
    let observed = ss_within(codes);
    let hit = |labels: &[usize]| ss_within(labels) <= observed + tol;
    match labeling_count(sizes) {
        Some(total) if total <= n_perm as u64 => {
            let mut v = codes.to_vec();
            v.sort_unstable();
            let mut count = 0;
            loop {
                count += u64::from(hit(&v));
                if !next_arrangement(&mut v) {
                    break;
                }
            }
            (count, total, true)
        }
        _ => {
            let seeds: Vec<u64> = (0..n_perm).map(|_| rng.random()).collect();
            let count = seeds
                .par_iter()
                .map(|&seed| {
                    let mut perm = codes.to_vec();
                    perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
                    u64::from(hit(&perm))
                })
                .sum::<u64>();
            (count + 1, n_perm as u64 + 1, false)
        }
    }
}

fn f_from_ss(ss_total: f64, ss_within: f64, k: usize, n: usize) -> f64 {
    let ss_between = (ss_total - ss_within).max(0.0);
    let scale = ss_total.abs().max(f64::MIN_POSITIVE);
    if ss_between <= 1e-12 * scale {
        0.0
    } else if ss_within <= 1e-12 * scale {
        f64::INFINITY
    } else {
        (ss_between / (k - 1) as f64) / (ss_within / (n - k) as f64)
    }
}

fn finish(f: f64, k: usize, n: usize, (count, total, exhaustive): (u64, u64, bool)) -> TestResult {
    let p = count as f64 / total as f64;
    let mut r = TestResult::new(f, vec![(k - 1) as f64, (n - k) as f64], p)
        .extra("permutations", total as f64)
        .extra(
            "p_parametric",
            if f == 0.0 {
                1.0
            } else {
                f_sf(f, (k - 1) as f64, (n - k) as f64)
            },
        );
    if exhaustive {
        r = r.note(format!("exact p over all {total} labelings"));
    }
    r
}

fn squared_distances(points: &[[f64; 2]]) -> Vec<f64> {
    let n = points.len();
    let mut d2 = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            d2[i * n + j] =
                (points[i][0] - points[j][0]).powi(2) + (points[i][1] - points[j][1]).powi(2);
        }
    }
    d2
}

/// Permutational MANOVA on Euclidean distances. Extras carry `R2`,
/// `ss_total`, `ss_within` and the number of labelings used.
pub fn permanova<S: AsRef<str>, R: Rng + ?Sized>(
    points: &[[f64; 2]],
    labels: &[S],
    n_perm: usize,
    rng: &mut R,
) -> Result<TestResult> {
    let d = design(points.len(), labels)?;
    let n = points.len();
    let k = d.sizes.len();
    let d2 = squared_distances(points);
    let ss_total: f64 = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .map(|(i, j)| d2[i * n + j])
        .sum::<f64>()
        / n as f64;
    let sizes = d.sizes.clone();
    let ss_within = |codes: &[usize]| {
        let mut acc = vec![0.0; sizes.len()];
        for i in 0..n {
            let row = &d2[i * n..];
            for j in i + 1..n {
                if codes[i] == codes[j] {
                    acc[codes[i]] += row[j];
                }
            }
        }
        acc.iter()
            .zip(&sizes)
            .map(|(a, &s)| a / s as f64)
            .sum::<f64>()
    };
    let ssw = ss_within(&d.codes);
    let f = f_from_ss(ss_total, ssw, k, n);
    let counts = permutation_count(
        &d.codes,
        &d.sizes,
        n_perm,
        rng,
        ss_within,
        TIE_TOL * ss_total,
    );
    let r2 = if ss_total > 0.0 {
        ((ss_total - ssw) / ss_total).clamp(0.0, 1.0)
    } else {
        0.0
    };
    Ok(finish(f, k, n, counts)
        .extra("R2", r2)
        .extra("ss_total", ss_total)
        .extra("ss_within", ssw))
}

/// Distances from each point to its group's centroid.
pub(crate) fn centroid_distances(points: &[[f64; 2]], codes: &[usize], k: usize) -> Vec<f64> {
    let mut sum = vec![[0.0; 2]; k];
    let mut count = vec![0usize; k];
    for (p, &c) in points.iter().zip(codes) {
        sum[c][0] += p[0];
        sum[c][1] += p[1];
        count[c] += 1;
    }
    let centroid: Vec<[f64; 2]> = sum
        .iter()
        .zip(&count)
        .map(|(s, &c)| [s[0] / c as f64, s[1] / c as f64])
        .collect();
    points
        .iter()
        .zip(codes)
        .map(|(p, &c)| ((p[0] - centroid[c][0]).powi(2) + (p[1] - centroid[c][1]).powi(2)).sqrt())
        .collect()
}

/// Dispersion test: one-way ANOVA on distances to group centroids, with the
/// p-value from relabeling those distances. Extras carry per-group mean
/// distances as `dispersion_<group index>`.
pub fn permdisp<S: AsRef<str>, R: Rng + ?Sized>(
    points: &[[f64; 2]],
    labels: &[S],
    n_perm: usize,
    rng: &mut R,
) -> Result<TestResult> {
    let d = design(points.len(), labels)?;
    let n = points.len();
    let k = d.sizes.len();
    let z = centroid_distances(points, &d.codes, k);
    let zbar = z.iter().sum::<f64>() / n as f64;
    let ss_total: f64 = z.iter().map(|v| (v - zbar).powi(2)).sum();
    let sum_sq: f64 = z.iter().map(|v| v * v).sum();
    let sizes = d.sizes.clone();
    let ss_within = |codes: &[usize]| {
        let mut sums = vec![0.0; sizes.len()];
        for (v, &c) in z.iter().zip(codes) {
            sums[c] += v;
        }
        sum_sq
            - sums
                .iter()
                .zip(&sizes)
                .map(|(s, &m)| s * s / m as f64)
                .sum::<f64>()
    };
    let ssw = ss_within(&d.codes).max(0.0);
    let f = f_from_ss(ss_total, ssw, k, n);
    let counts = permutation_count(
        &d.codes,
        &d.sizes,
        n_perm,
        rng,
        ss_within,
        TIE_TOL * sum_sq.max(ss_total),
    );
    let mut r = finish(f, k, n, counts);
    for g in 0..k {
        let m: f64 = z
            .iter()
            .zip(&d.codes)
            .filter(|(_, &c)| c == g)
            .map(|(v, _)| v)
            .sum::<f64>()
            / d.sizes[g] as f64;
        r = r.extra(&format!("dispersion_{g}"), m);
    }
    Ok(r)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseMatrix {
    pub labels: Vec<String>,
    pub test: PermTest,
    pub method: Adjust,
    /// Symmetric; NaN on the diagonal and for failed pairs.
    pub p_raw: Vec<Vec<f64>>,
    pub p_adjusted: Vec<Vec<f64>>,
    pub statistic: Vec<Vec<f64>>,
    #[serde(default)]
    pub diagnostics: Vec<String>,
}

impl PairwiseMatrix {
    /// CSV grid of adjusted p-values with family labels on both axes; masked
    /// cells are empty.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str("label");
        for l in &self.labels {
            out.push(',');
            out.push_str(l);
        }
        out.push('\n');
        for (i, l) in self.labels.iter().enumerate() {
            out.push_str(l);
            for v in &self.p_adjusted[i] {
                out.push(',');
                if !v.is_nan() {
                    out.push_str(&format!("{v:.6e}"));
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Run `test` on every unordered pair of groups and adjust all pair
/// p-values jointly. Per-pair failures leave masked cells and a diagnostic.
pub fn pairwise_posthoc<S: AsRef<str>, R: Rng + ?Sized>(
    points: &[[f64; 2]],
    labels: &[S],
    test: PermTest,
    adjust: Adjust,
    n_perm: usize,
    rng: &mut R,
) -> Result<PairwiseMatrix> {
    if labels.len() != points.len() {
        return Err(Error::usage(format!(
            "{} labels for {} points",
            labels.len(),
            points.len()
        )));
    }
    let (names, codes) = encode_labels(labels);
    let k = names.len();
    if k < 2 {
        return Err(Error::usage("need at least two groups"));
    }
    let pairs: Vec<(usize, usize)> = (0..k)
        .flat_map(|a| (a + 1..k).map(move |b| (a, b)))
        .collect();
    let seeds: Vec<u64> = pairs.iter().map(|_| rng.random()).collect();
    let mut raw = Vec::with_capacity(pairs.len());
    let mut stat = Vec::with_capacity(pairs.len());
    let mut diagnostics = Vec::new();
    for (&(a, b), &seed) in pairs.iter().zip(&seeds) {
        let (pts, labs): (Vec<[f64; 2]>, Vec<usize>) = points
            .iter()
            .zip(&codes)
            .filter(|(_, &c)| c == a || c == b)
            .map(|(p, &c)| (*p, c))
            .unzip();
        let labs: Vec<String> = labs.iter().map(|c| c.to_string()).collect();
        let mut pair_rng = ChaCha8Rng::seed_from_u64(seed);
        let result = match test {
            PermTest::Permanova => permanova(&pts, &labs, n_perm, &mut pair_rng),
            PermTest::Permdisp => permdisp(&pts, &labs, n_perm, &mut pair_rng),
        };
        match result {
            Ok(r) => {
                raw.push(r.p);
                stat.push(r.statistic);
            }
            Err(e) => {
                diagnostics.push(format!("{} vs {}: {e}", names[a], names[b]));
                raw.push(f64::NAN);
                stat.push(f64::NAN);
            }
        }
    }
    let adjusted = p_adjust(&raw, adjust);
    let mut p_raw = vec![vec![f64::NAN; k]; k];
    let mut p_adj = vec![vec![f64::NAN; k]; k];
    let mut statistic = vec![vec![f64::NAN; k]; k];
    for (i, &(a, b)) in pairs.iter().enumerate() {
        for (x, y) in [(a, b), (b, a)] {
            p_raw[x][y] = raw[i];
            p_adj[x][y] = adjusted[i];
            statistic[x][y] = stat[i];
        }
    }
    Ok(PairwiseMatrix {
        labels: names,
        test,
        method: adjust,
        p_raw,
        p_adjusted: p_adj,
        statistic,
        diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labeling_counts() {
        assert_eq!(labeling_count(&[3, 3]), Some(20));
        assert_eq!(labeling_count(&[4, 4]), Some(70));
        assert_eq!(labeling_count(&[2, 2, 2]), Some(90));
        assert_eq!(labeling_count(&[10; 21]), None);
    }

    #[test]
    fn arrangements_are_distinct_and_complete() {
        let mut v = vec![0, 0, 1, 1, 2];
        let mut seen = std::collections::BTreeSet::new();
        loop {
            assert!(seen.insert(v.clone()));
            if !next_arrangement(&mut v) {
                break;
            }
        }
        assert_eq!(seen.len() as u64, labeling_count(&[2, 2, 1]).unwrap());
    }

    #[test]
    fn df_for_21_groups_of_10() {
        let points: Vec<[f64; 2]> = (0..210)
            .map(|i| [(i as f64 * 0.37).sin() + (i / 10) as f64, (i as f64).cos()])
            .collect();
        let labels: Vec<String> = (0..210).map(|i| format!("g{}", i / 10)).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let a = permanova(&points, &labels, 99, &mut rng).unwrap();
        assert_eq!(a.df, vec![20.0, 189.0]);
        let b = permdisp(&points, &labels, 99, &mut rng).unwrap();
        assert_eq!(b.df, vec![20.0, 189.0]);
        assert_eq!(a.get("permutations"), Some(100.0));
    }

    #[test]
    fn coincident_groups() {
        let pts = [
            [0.0, 0.0],
            [1.0, 0.0],
            [0.0, 1.0],
            [0.0, 0.0],
            [1.0, 0.0],
            [0.0, 1.0],
        ];
        let labels = ["a", "a", "a", "b", "b", "b"];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let r = permanova(&pts, &labels, 10_000, &mut rng).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p, 1.0);
        assert_eq!(r.get("R2"), Some(0.0));
    }

    #[test]
    fn translated_group_has_no_dispersion_difference() {
        let base = [[0.0, 0.0], [2.0, 0.3], [0.7, 1.9], [1.1, -0.8]];
        let mut pts = base.to_vec();
        pts.extend(base.iter().map(|p| [p[0] + 50.0, p[1] - 20.0]));
        let labels = ["a", "a", "a", "a", "b", "b", "b", "b"];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let r = permdisp(&pts, &labels, 10_000, &mut rng).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p, 1.0);
    }

    #[test]
    fn errors() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let pts = [[0.0, 0.0], [1.0, 1.0], [2.0, 0.0]];
        assert!(matches!(
            permanova(&pts, &["a", "a", "a"], 10, &mut rng),
            Err(Error::Usage(_))
        ));
        assert!(permanova(&pts, &["a", "a", "b"], 10, &mut rng).is_err());
        assert!(permdisp(&pts, &["a", "b"], 10, &mut rng).is_err());
    }

    #[test]
    fn pairwise_shape_and_csv() {
        let mut pts = Vec::new();
        let mut labels = Vec::new();
        for g in 0..4 {
            for i in 0..5 {
                pts.push([
                    g as f64 * 3.0 + (i as f64 * 1.3).sin(),
                    (i as f64 * 0.7).cos(),
                ]);
                labels.push(format!("f{g}"));
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let m = pairwise_posthoc(
            &pts,
            &labels,
            PermTest::Permanova,
            Adjust::Bh,
            199,
            &mut rng,
        )
        .unwrap();
        assert_eq!(m.labels.len(), 4);
        let off: usize = (0..4)
            .map(|i| {
                (0..4)
                    .filter(|&j| j != i && !m.p_raw[i][j].is_nan())
                    .count()
            })
            .sum();
        assert_eq!(off, 12);
        for i in 0..4 {
            assert!(m.p_raw[i][i].is_nan());
            for j in 0..4 {
                if i != j {
                    assert_eq!(m.p_adjusted[i][j], m.p_adjusted[j][i]);
                    assert!(m.p_adjusted[i][j] >= m.p_raw[i][j]);
                }
            }
        }
        let csv = m.to_csv();
        assert_eq!(csv.lines().count(), 5);
        assert!(csv.starts_with("label,f0,f1,f2,f3\n"));
    }
}
