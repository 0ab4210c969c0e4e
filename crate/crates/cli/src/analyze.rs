use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use clap::Args;
use noisyopt_core::stats::{
    bootstrap_ellipse, box_m_test, levene_like_test, mardia_test, pairwise_posthoc, permanova,
    permdisp, Adjust, Center, PermTest, Sample2D,
};
use noisyopt_core::{Result, RunRecord};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::{load_runs, write_file, write_json, CmdResult, Failure};

#[derive(Args)]
pub struct AnalyzeArgs {
    #[arg(long)]
    runs: PathBuf,
    /// Output directory; one subdirectory per optimizer.
    #[arg(long = "per-optimizer")]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 10_000, value_parser = clap::value_parser!(u64).range(1..))]
    n_perm: u64,
    #[arg(long, default_value_t = 2_000, value_parser = clap::value_parser!(u64).range(1..))]
    n_boot: u64,
    /// Adjustment applied across pairwise post-hoc tests.
    #[arg(long, default_value_t = Adjust::Bh)]
    adjust: Adjust,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

/// Serialized result, or `{"error": ...}` when the test could not run.
fn outcome<T: serde::Serialize>(r: Result<T>) -> Value {
    match r {
        Ok(v) => serde_json::to_value(v).expect("results serialize"),
        Err(e) => json!({ "error": e.to_string() }),
    }
}

/// Finite (ground, excited) points of one optimizer, grouped by family in
/// first-seen order.
fn samples(records: &[RunRecord], optimizer: &str) -> (Vec<Sample2D>, usize) {
    let mut order: Vec<&str> = Vec::new();
    let mut points: BTreeMap<&str, Vec<[f64; 2]>> = BTreeMap::new();
    let mut dropped = 0;
    for r in records.iter().filter(|r| r.optimizer == optimizer) {
        if !(r.e_ground.is_finite() && r.e_excited.is_finite()) {
            dropped += 1;
            continue;
        }
        if !points.contains_key(r.family.as_str()) {
            order.push(&r.family);
        }
        points
            .entry(&r.family)
            .or_default()
            .push([r.e_ground, r.e_excited]);
    }
    let samples = order
        .into_iter()
        .map(|f| {
            Sample2D::new(points.remove(f).unwrap_or_default(), f, optimizer)
                .expect("points are finite")
        })
        .collect();
    (samples, dropped)
}

fn univariate(samples: &[Sample2D], center: Center) -> Value {
    let axis = |a: usize| {
        let groups: Vec<Vec<f64>> = samples.iter().map(|s| s.coordinate(a)).collect();
        outcome(levene_like_test(&groups, center))
    };
    json!({ "ground": axis(0), "excited": axis(1) })
}

fn analyze_optimizer(
    args: &AnalyzeArgs,
    records: &[RunRecord],
    optimizer: &str,
    rng: &mut ChaCha8Rng,
) -> CmdResult {
    let dir = args.out_dir.join(optimizer);
    std::fs::create_dir_all(&dir).map_err(|e| Failure::output(&dir, e))?;
    let (samples, dropped) = samples(records, optimizer);
    if dropped > 0 {
        log::warn!("{optimizer}: {dropped} run(s) without finite energies left out");
    }

    let mut mardia = serde_json::Map::new();
    for s in &samples {
        let v = match mardia_test(s) {
            Ok((skew, kurt)) => json!({ "skewness": skew, "kurtosis": kurt }),
            Err(e) => json!({ "error": e.to_string() }),
        };
        mardia.insert(s.family.clone(), v);
    }
    write_json(&dir.join("mardia.json"), &mardia)?;
    write_json(&dir.join("box_m.json"), &outcome(box_m_test(&samples)))?;
    write_json(
        &dir.join("levene.json"),
        &univariate(&samples, Center::Mean),
    )?;
    write_json(
        &dir.join("brown_forsythe.json"),
        &univariate(&samples, Center::Median),
    )?;

    let points: Vec<[f64; 2]> = samples
        .iter()
        .flat_map(|s| s.points.iter().copied())
        .collect();
    let labels: Vec<&str> = samples
        .iter()
        .flat_map(|s| s.points.iter().map(|_| s.family.as_str()))
        .collect();
    let n_perm = args.n_perm as usize;
    let seeds: [u64; 5] = rng.random();
    let tests = [
        ("permanova", PermTest::Permanova, seeds[0], seeds[1]),
        ("permdisp", PermTest::Permdisp, seeds[2], seeds[3]),
    ];
    for (name, test, global_seed, pair_seed) in tests {
        let mut r = ChaCha8Rng::seed_from_u64(global_seed);
        let global = match test {
            PermTest::Permanova => permanova(&points, &labels, n_perm, &mut r),
            PermTest::Permdisp => permdisp(&points, &labels, n_perm, &mut r),
        };
        write_json(&dir.join(format!("{name}.json")), &outcome(global))?;
        let mut r = ChaCha8Rng::seed_from_u64(pair_seed);
        match pairwise_posthoc(&points, &labels, test, args.adjust, n_perm, &mut r) {
            Ok(m) => {
                write_file(&dir.join(format!("pairwise_{name}.csv")), &m.to_csv())?;
                write_json(&dir.join(format!("pairwise_{name}.json")), &m)?;
            }
            Err(e) => write_json(
                &dir.join(format!("pairwise_{name}.json")),
                &json!({ "error": e.to_string() }),
            )?,
        }
    }

    let mut ellipses = String::from("family,mu_x,mu_y,s_xx,s_xy,s_yy,d95_sq\n");
    let mut ell_rng = ChaCha8Rng::seed_from_u64(seeds[4]);
    for s in &samples {
        match bootstrap_ellipse(s, args.n_boot as usize, &mut ell_rng) {
            Ok(e) => {
                let _ = writeln!(
                    ellipses,
                    "{},{:e},{:e},{:e},{:e},{:e},{:e}",
                    s.family,
                    e.mu[0],
                    e.mu[1],
                    e.sigma[0][0],
                    e.sigma[0][1],
                    e.sigma[1][1],
                    e.d95_sq
                );
            }
            Err(e) => log::warn!("{optimizer} / {}: no ellipse ({e})", s.family),
        }
    }
    write_file(&dir.join("ellipses.csv"), &ellipses)
}

pub fn analyze(args: &AnalyzeArgs) -> CmdResult {
    let records = load_runs(&args.runs)?;
    let mut optimizers: Vec<&str> = Vec::new();
    for r in &records {
        if !optimizers.contains(&r.optimizer.as_str()) {
            optimizers.push(&r.optimizer);
        }
    }
    let mut master = ChaCha8Rng::seed_from_u64(args.seed);
    for opt in optimizers {
        let mut rng = ChaCha8Rng::seed_from_u64(master.random());
        analyze_optimizer(args, &records, opt, &mut rng)?;
        eprintln!("{opt}: results in {}", args.out_dir.join(opt).display());
    }
    Ok(())
}
