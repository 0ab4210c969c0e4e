//! Accuracy of optimizer results relative to reference energies.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{mean, tied_rank_groups, PlaceConvention};
use crate::error::{Error, Result};
use crate::harness::RunRecord;
use crate::vqe::ReferencePair;

/// Settings for the per-family placement of optimizers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlaceOptions {
    pub alpha: f64,
    pub convention: PlaceConvention,
}

impl Default for PlaceOptions {
    fn default() -> Self {
        Self {
            alpha: 0.05,
            convention: PlaceConvention::Competition,
        }
    }
}

/// One (optimizer, family) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellMetrics {
    pub optimizer: String,
    pub family: String,
    pub n: usize,
    /// Distance from the mean (ground, excited) point to the reference.
    pub centroid_distance: f64,
    pub mean_distance: f64,
    pub rms: f64,
    /// Tied-rank place within the family, when it could be computed.
    pub place: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerMetrics {
    pub optimizer: String,
    pub mean_distance: f64,
    pub rms: f64,
    pub avg_place: f64,
    pub sd_place: f64,
    pub wins: usize,
    pub categories: usize,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceReport {
    pub optimizers: Vec<String>,
    pub families: Vec<String>,
    pub cells: Vec<CellMetrics>,
    pub per_optimizer: Vec<OptimizerMetrics>,
    pub diagnostics: Vec<String>,
}

impl DistanceReport {
    pub fn cell(&self, optimizer: &str, family: &str) -> Option<&CellMetrics> {
        self.cells
            .iter()
            .find(|c| c.optimizer == optimizer && c.family == family)
    }

    /// Centroid distances as a `families x optimizers` matrix, keeping only
    /// families where every optimizer has a cell.
    pub fn centroid_matrix(&self) -> (Vec<String>, Vec<Vec<f64>>) {
        let mut names = Vec::new();
        let mut rows = Vec::new();
        for fam in &self.families {
            let row: Option<Vec<f64>> = self
                .optimizers
                .iter()
                .map(|o| self.cell(o, fam).map(|c| c.centroid_distance))
                .collect();
            if let Some(row) = row.filter(|r| r.iter().all(|v| v.is_finite())) {
                names.push(fam.clone());
                rows.push(row);
            }
        }
        (names, rows)
    }
}

fn point_distance(r: &RunRecord, reference: &ReferencePair) -> f64 {
    (r.e_ground - reference.e0).hypot(r.e_excited - reference.e1)
}

fn first_seen<'a>(items: impl Iterator<Item = &'a str>) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for s in items {
        if !out.iter().any(|o| o == s) {
            out.push(s.to_string());
        }
    }
    out
}

/// Per-cell and per-optimizer distances to `reference`, plus tied-rank places.
///
/// Places are computed per family on per-run distances, pairing runs of
/// different optimizers by seed. Seeds missing for any optimizer, or whose
/// energies are not finite, are left out of that family's comparison.
pub fn distance_metrics(
    records: &[RunRecord],
    reference: &ReferencePair,
    options: PlaceOptions,
) -> Result<DistanceReport> {
    if records.is_empty() {
        return Err(Error::domain("no run records"));
    }
    let optimizers = first_seen(records.iter().map(|r| r.optimizer.as_str()));
    let families = first_seen(records.iter().map(|r| r.family.as_str()));
    let mut diagnostics = Vec::new();

    let mut grouped: BTreeMap<(&str, &str), Vec<&RunRecord>> = BTreeMap::new();
    for r in records {
        grouped
            .entry((r.optimizer.as_str(), r.family.as_str()))
            .or_default()
            .push(r);
    }

    let mut cells = Vec::new();
    for fam in &families {
        let mut by_seed: BTreeMap<u64, Vec<Option<f64>>> = BTreeMap::new();
        for (j, opt) in optimizers.iter().enumerate() {
            let Some(runs) = grouped.get(&(opt.as_str(), fam.as_str())) else {
                diagnostics.push(format!("no records for {opt} / {fam}"));
                continue;
            };
            let d: Vec<f64> = runs.iter().map(|r| point_distance(r, reference)).collect();
            let eg = mean(&runs.iter().map(|r| r.e_ground).collect::<Vec<_>>());
            let ee = mean(&runs.iter().map(|r| r.e_excited).collect::<Vec<_>>());
            cells.push(CellMetrics {
                optimizer: opt.clone(),
                family: fam.clone(),
                n: runs.len(),
                centroid_distance: (eg - reference.e0).hypot(ee - reference.e1),
                mean_distance: mean(&d),
                rms: (d.iter().map(|v| v * v).sum::<f64>() / d.len() as f64).sqrt(),
                place: None,
            });
            for (r, dist) in runs.iter().zip(&d) {
                by_seed
                    .entry(r.seed)
                    .or_insert_with(|| vec![None; optimizers.len()])[j] = Some(*dist);
            }
        }
        let rows: Vec<Vec<f64>> = by_seed
            .values()
            .filter_map(|row| row.iter().copied().collect::<Option<Vec<f64>>>())
            .filter(|row| row.iter().all(|v| v.is_finite()))
            .collect();
        let dropped = by_seed.len() - rows.len();
        if dropped > 0 {
            diagnostics.push(format!("{fam}: {dropped} seed(s) left out of placement"));
        }
        match tied_rank_groups(&rows, options.alpha, options.convention) {
            Ok(places) => {
                for (opt, place) in optimizers.iter().zip(places) {
                    if let Some(c) = cells
                        .iter_mut()
                        .find(|c| &c.optimizer == opt && &c.family == fam)
                    {
                        c.place = Some(place);
                    }
                }
            }
            Err(e) => diagnostics.push(format!("{fam}: no placement ({e})")),
        }
    }

    let per_optimizer = optimizers
        .iter()
        .map(|opt| {
            let d: Vec<f64> = records
                .iter()
                .filter(|r| &r.optimizer == opt)
                .map(|r| point_distance(r, reference))
                .collect();
            let places: Vec<f64> = cells
                .iter()
                .filter(|c| &c.optimizer == opt)
                .filter_map(|c| c.place)
                .collect();
            let avg = if places.is_empty() {
                f64::NAN
            } else {
                mean(&places)
            };
            let sd = if places.len() < 2 {
                0.0
            } else {
                (places.iter().map(|p| (p - avg).powi(2)).sum::<f64>() / (places.len() - 1) as f64)
                    .sqrt()
            };
            OptimizerMetrics {
                optimizer: opt.clone(),
                mean_distance: mean(&d),
                rms: (d.iter().map(|v| v * v).sum::<f64>() / d.len() as f64).sqrt(),
                avg_place: avg,
                sd_place: sd,
                wins: places.iter().filter(|&&p| p == 1.0).count(),
                categories: places.len(),
                points: d.len(),
            }
        })
        .collect();

    Ok(DistanceReport {
        optimizers,
        families,
        cells,
        per_optimizer,
        diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(opt: &str, fam: &str, seed: u64, eg: f64, ee: f64) -> RunRecord {
        RunRecord {
            family: fam.into(),
            optimizer: opt.into(),
            seed,
            e_ground: eg,
            e_excited: ee,
            e_sa: eg + ee,
            n_evals: 1,
            converged: true,
            wall_time_ms: 0.0,
        }
    }

    #[test]
    fn centroid_versus_spread() {
        let reference = ReferencePair::new(1.0, 5.0);
        let recs = vec![rec("a", "f", 0, 0.0, 5.0), rec("a", "f", 1, 2.0, 5.0)];
        let rep = distance_metrics(&recs, &reference, PlaceOptions::default()).unwrap();
        let c = rep.cell("a", "f").unwrap();
        assert_eq!(c.centroid_distance, 0.0);
        assert_eq!(c.rms, 1.0);
        assert_eq!(c.mean_distance, 1.0);
        assert!(rep.diagnostics.iter().any(|d| d.contains("no placement")));
    }

    #[test]
    fn exact_hit_is_zero() {
        let reference = ReferencePair::new(-1.0, 0.5);
        let rep = distance_metrics(
            &[rec("a", "f", 0, -1.0, 0.5)],
            &reference,
            PlaceOptions::default(),
        )
        .unwrap();
        assert_eq!(rep.per_optimizer[0].rms, 0.0);
        assert_eq!(rep.cell("a", "f").unwrap().centroid_distance, 0.0);
    }

    #[test]
    fn dominant_optimizer_wins_everywhere() {
        let reference = ReferencePair::new(0.0, 1.0);
        let mut recs = Vec::new();
        for fam in ["f1", "f2", "f3"] {
            for seed in 0..10u64 {
                let jitter = 0.001 * (seed as f64 + 1.0);
                recs.push(rec("best", fam, seed, jitter, 1.0));
                recs.push(rec("mid", fam, seed, 0.5 + jitter, 1.0));
                recs.push(rec("worst", fam, seed, 2.0 - jitter, 1.0));
            }
        }
        let rep = distance_metrics(&recs, &reference, PlaceOptions::default()).unwrap();
        let best = &rep.per_optimizer[0];
        assert_eq!((best.avg_place, best.sd_place, best.wins), (1.0, 0.0, 3));
        assert_eq!(rep.per_optimizer[2].avg_place, 3.0);
        assert_eq!(rep.centroid_matrix().1.len(), 3);
    }
}
