use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, ValueEnum};
use noisyopt_core::stats::{
    distance_metrics, friedman_test, p_adjust, wilcoxon_signed_rank, Adjust, DistanceReport,
    PlaceConvention, PlaceOptions,
};
use noisyopt_core::ReferencePair;
use serde_json::json;

use crate::{emit, load_runs, write_file, write_json, CmdResult, Failure};

#[derive(Clone, Copy, ValueEnum)]
enum Places {
    /// Tied methods share the group's first position (1, 1, 3).
    Competition,
    /// Tied methods share the mean of their positions (1.5, 1.5, 3).
    Fractional,
}

#[derive(Args)]
pub struct RankArgs {
    #[arg(long)]
    runs: PathBuf,
    /// Reference ground and excited energies.
    #[arg(long, num_args = 2, value_names = ["E0", "E1"], allow_negative_numbers = true)]
    reference: Vec<f64>,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, value_enum, default_value_t = Places::Competition)]
    places: Places,
    /// Directory for JSON and CSV outputs; without it only the summary is printed.
    #[arg(long)]
    out: Option<PathBuf>,
}

struct PairRow {
    a: String,
    b: String,
    statistic: f64,
    p_raw: f64,
    p_holm: f64,
    median_diff: f64,
}

/// Pairwise Wilcoxon tests on centroid distances, paired by family, with
/// Holm adjustment across all pairs.
fn global_pairs(report: &DistanceReport, matrix: &[Vec<f64>]) -> Vec<PairRow> {
    let k = report.optimizers.len();
    let column = |j: usize| matrix.iter().map(|row| row[j]).collect::<Vec<f64>>();
    let mut rows = Vec::new();
    for a in 0..k {
        for b in a + 1..k {
            let (statistic, p_raw, median_diff) = match wilcoxon_signed_rank(&column(a), &column(b))
            {
                Ok(r) => (r.statistic, r.p, r.get("median_diff").unwrap_or(f64::NAN)),
                Err(_) => (f64::NAN, f64::NAN, f64::NAN),
            };
            rows.push(PairRow {
                a: report.optimizers[a].clone(),
                b: report.optimizers[b].clone(),
                statistic,
                p_raw,
                p_holm: f64::NAN,
                median_diff,
            });
        }
    }
    let raw: Vec<f64> = rows.iter().map(|r| r.p_raw).collect();
    for (r, p) in rows.iter_mut().zip(p_adjust(&raw, Adjust::Holm)) {
        r.p_holm = p;
    }
    rows
}

fn places_csv(report: &DistanceReport) -> String {
    let mut out = format!("family,{}\n", report.optimizers.join(","));
    for fam in &report.families {
        out.push_str(fam);
        for opt in &report.optimizers {
            out.push(',');
            if let Some(p) = report.cell(opt, fam).and_then(|c| c.place) {
                let _ = write!(out, "{p}");
            }
        }
        out.push('\n');
    }
    out
}

fn summary_csv(report: &DistanceReport) -> String {
    let mut out = String::from("optimizer,mean,rms,avg_place,sd_place,wins,categories,points\n");
    for m in &report.per_optimizer {
        let _ = writeln!(
            out,
            "{},{:.6},{:.6},{:.4},{:.4},{},{},{}",
            m.optimizer,
            m.mean_distance,
            m.rms,
            m.avg_place,
            m.sd_place,
            m.wins,
            m.categories,
            m.points
        );
    }
    out
}

pub fn rank(args: &RankArgs) -> CmdResult {
    if !(args.alpha > 0.0 && args.alpha < 1.0) {
        return Err(Failure::config(format!(
            "alpha must lie in (0, 1), got {}",
            args.alpha
        )));
    }
    let records = load_runs(&args.runs)?;
    let reference = ReferencePair::new(args.reference[0], args.reference[1]);
    let options = PlaceOptions {
        alpha: args.alpha,
        convention: match args.places {
            Places::Competition => PlaceConvention::Competition,
            Places::Fractional => PlaceConvention::Fractional,
        },
    };
    let report = distance_metrics(&records, &reference, options)?;
    for d in &report.diagnostics {
        log::warn!("{d}");
    }
    let (families, matrix) = report.centroid_matrix();
    let friedman = friedman_test(&matrix);
    let pairs = if friedman.is_ok() {
        global_pairs(&report, &matrix)
    } else {
        Vec::new()
    };

    let mut text = summary_csv(&report);
    let _ = match &friedman {
        Ok(f) => writeln!(
            text,
            "friedman: chi2 = {:.4}, df = {}, p = {:.3e}, W = {:.4} over {} families",
            f.statistic,
            f.df[0],
            f.p,
            f.get("W").unwrap_or(f64::NAN),
            families.len()
        ),
        Err(e) => writeln!(text, "friedman: not computed ({e})"),
    };
    emit(&text)?;

    let Some(dir) = &args.out else {
        return Ok(());
    };
    std::fs::create_dir_all(dir).map_err(|e| Failure::output(dir, e))?;
    write_json(&dir.join("distance.json"), &report)?;
    let friedman_json = match &friedman {
        Ok(f) => json!({ "families": families, "result": f }),
        Err(e) => json!({ "families": families, "error": e.to_string() }),
    };
    write_json(&dir.join("friedman.json"), &friedman_json)?;
    let mut wilcoxon = String::from("optimizer_a,optimizer_b,statistic,p_raw,p_holm,median_diff\n");
    for r in &pairs {
        let _ = writeln!(
            wilcoxon,
            "{},{},{},{:e},{:e},{:e}",
            r.a, r.b, r.statistic, r.p_raw, r.p_holm, r.median_diff
        );
    }
    write_file(&dir.join("wilcoxon_holm.csv"), &wilcoxon)?;
    write_file(&dir.join("places.csv"), &places_csv(&report))?;
    write_file(&dir.join("summary.csv"), &summary_csv(&report))?;
    eprintln!("results in {}", dir.display());
    Ok(())
}
