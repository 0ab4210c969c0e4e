use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::record::RunRecord;

/// Final-energy and evaluation-count statistics of one (family, optimizer) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub family: String,
    pub optimizer: String,
    pub n: usize,
    /// Runs without a finite final energy; they are left out of the energy
    /// statistics but counted in the evaluation statistics.
    pub n_failed: usize,
    pub mu_final: f64,
    pub sigma_final: f64,
    pub mu_evals: f64,
    pub sigma_evals: f64,
    /// Fewer than two values, so the standard deviations are reported as 0.
    pub single: bool,
}

fn mean_sd(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    if v.is_empty() {
        return (f64::NAN, 0.0);
    }
    let m = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (m, 0.0);
    }
    (
        m,
        (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt(),
    )
}

/// Per-cell means and sample standard deviations, cells in first-seen order.
pub fn summarize(records: &[RunRecord]) -> Vec<CellSummary> {
    let mut order: Vec<(&str, &str)> = Vec::new();
    let mut cells: BTreeMap<(&str, &str), Vec<&RunRecord>> = BTreeMap::new();
    for r in records {
        let key = (r.family.as_str(), r.optimizer.as_str());
        let slot = cells.entry(key).or_default();
        if slot.is_empty() {
            order.push(key);
        }
        slot.push(r);
    }
    order
        .into_iter()
        .map(|key| {
            let runs = &cells[&key];
            let finals: Vec<f64> = runs
                .iter()
                .map(|r| r.e_sa)
                .filter(|v| v.is_finite())
                .collect();
            let evals: Vec<f64> = runs.iter().map(|r| r.n_evals as f64).collect();
            let (mu_final, sigma_final) = mean_sd(&finals);
            let (mu_evals, sigma_evals) = mean_sd(&evals);
            CellSummary {
                family: key.0.to_string(),
                optimizer: key.1.to_string(),
                n: runs.len(),
                n_failed: runs.len() - finals.len(),
                mu_final,
                sigma_final,
                mu_evals,
                sigma_evals,
                single: finals.len() < 2,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(family: &str, e_sa: f64, n_evals: usize) -> RunRecord {
        RunRecord {
            family: family.into(),
            optimizer: "bfgs".into(),
            seed: 0,
            e_ground: e_sa,
            e_excited: e_sa,
            e_sa,
            n_evals,
            converged: true,
            wall_time_ms: 0.0,
        }
    }

    #[test]
    fn two_records() {
        let s = summarize(&[rec("a", -1.0, 10), rec("a", -1.2, 20)]);
        assert_eq!(s.len(), 1);
        assert!((s[0].mu_final + 1.1).abs() < 1e-12);
        assert!((s[0].sigma_final - 0.141_421_356_237_309_5).abs() < 1e-12);
        assert_eq!((s[0].mu_evals, s[0].n), (15.0, 2));
        assert!(!s[0].single);
    }

    #[test]
    fn single_and_identical() {
        let s = summarize(&[rec("a", -1.0, 3), rec("b", -2.0, 4), rec("b", -2.0, 4)]);
        assert_eq!((s[0].sigma_final, s[0].single), (0.0, true));
        assert_eq!((s[1].sigma_final, s[1].sigma_evals), (0.0, 0.0));
    }

    #[test]
    fn failed_runs_counted_separately() {
        let s = summarize(&[rec("a", f64::NAN, 3), rec("a", -1.0, 5), rec("a", -3.0, 7)]);
        assert_eq!((s[0].n, s[0].n_failed), (3, 1));
        assert_eq!(s[0].mu_final, -2.0);
        assert_eq!(s[0].mu_evals, 5.0);
    }
}
