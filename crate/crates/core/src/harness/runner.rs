use std::collections::BTreeMap;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::mpsc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use super::catalog::FamilySpec;
use super::config::{ExperimentConfig, Theta0Policy};
use super::record::RunRecord;
use crate::error::{Error, Result};
use crate::optim::{minimize, OptimizerSpec, FD_STEP_SHOTS};
use crate::vqe::EnsembleContext;

/// Stable per-run seed: the first eight bytes (little endian) of
/// `SHA-256(family \0 optimizer \0 seed)`.
pub fn run_seed(family: &str, optimizer: &str, seed: u64) -> u64 {
    let mut h = Sha256::new();
    h.update(family.as_bytes());
    h.update([0]);
    h.update(optimizer.as_bytes());
    h.update([0]);
    h.update(seed.to_le_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}

/// One optimization followed by state resolution.
///
/// The optimizer and the shot sampler draw from separate streams of the
/// run's generator. A run that hits a non-finite cost still yields a record,
/// marked unconverged, resolved at the best finite point if there was one.
pub fn run_single(
    base: &EnsembleContext,
    family: &FamilySpec,
    optimizer: &OptimizerSpec,
    seed: u64,
    policy: Theta0Policy,
) -> Result<RunRecord> {
    let start = Instant::now();
    let ctx = base.with_estimator(family.estimator.clone())?;
    let mut spec = optimizer.clone();
    if spec.fd_step.is_none() && ctx.estimator().is_stochastic() {
        spec.fd_step = Some(FD_STEP_SHOTS);
    }
    let s = run_seed(&family.name, optimizer.kind.name(), seed);
    let mut opt_rng = ChaCha8Rng::seed_from_u64(s);
    let mut noise_rng = ChaCha8Rng::seed_from_u64(s);
    noise_rng.set_stream(1);

    let theta0: Vec<f64> = match policy {
        Theta0Policy::Zeros => vec![0.0; ctx.n_params()],
        Theta0Policy::Uniform { var_min, var_max } => (0..ctx.n_params())
            .map(|_| opt_rng.random_range(var_min..var_max))
            .collect(),
    };
    let mut cost = |theta: &[f64]| ctx.sa_cost(theta, &mut noise_rng).unwrap_or(f64::NAN);
    let (best, n_evals, converged) = match minimize(&mut cost, &theta0, &spec, &mut opt_rng) {
        Ok(r) => (Some((r.theta_best, r.f_best)), r.n_evals, r.converged),
        Err(Error::NonFiniteCost {
            theta,
            value,
            n_evals,
            best,
        }) => {
            log::warn!(
                "{} / {} / seed {seed}: cost {value} at {theta:?} after {n_evals} evaluations",
                family.name,
                optimizer.kind
            );
            (best, n_evals, false)
        }
        Err(e) => return Err(e),
    };
    let (e_ground, e_excited, e_sa) = match best {
        Some((theta, f)) => {
            let (e0, e1) = ctx.resolve_states(&theta)?;
            (e0, e1, f)
        }
        None => (f64::NAN, f64::NAN, f64::NAN),
    };
    Ok(RunRecord {
        family: family.name.clone(),
        optimizer: optimizer.kind.name().to_string(),
        seed,
        e_ground,
        e_excited,
        e_sa,
        n_evals,
        converged,
        wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}

/// Runs the whole matrix on `jobs` worker threads.
///
/// Records reach `sink` and the returned vector in matrix order (family,
/// then optimizer, then seed) regardless of completion order, so the output
/// does not depend on `jobs`.
pub fn run_experiment<F>(cfg: &ExperimentConfig, jobs: usize, mut sink: F) -> Result<Vec<RunRecord>>
where
    F: FnMut(&RunRecord) -> Result<()>,
{
    cfg.validate()?;
    let base = cfg.base_context()?;
    let cells: Vec<(&FamilySpec, &OptimizerSpec, u64)> = cfg
        .families
        .iter()
        .flat_map(|f| {
            cfg.optimizers
                .iter()
                .flat_map(move |o| cfg.seeds.iter().map(move |&s| (f, o, s)))
        })
        .collect();
    let total = cells.len();
    let next = AtomicUsize::new(0);
    let stop = AtomicBool::new(false);
    let (tx, rx) = mpsc::channel::<(usize, Result<RunRecord>)>();

    std::thread::scope(|scope| {
        for _ in 0..jobs.max(1).min(total) {
            let tx = tx.clone();
            let (cells, next, stop, base) = (&cells, &next, &stop, &base);
            scope.spawn(move || loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= total || stop.load(Ordering::Relaxed) {
                    break;
                }
                let (f, o, s) = cells[i];
                let out = run_single(base, f, o, s, cfg.theta0_policy);
                if tx.send((i, out)).is_err() {
                    break;
                }
            });
        }
        drop(tx);

        let mut pending: BTreeMap<usize, RunRecord> = BTreeMap::new();
        let mut records = Vec::with_capacity(total);
        let mut failure = None;
        for (i, out) in rx {
            match out {
                Ok(r) => {
                    pending.insert(i, r);
                }
                Err(e) => {
                    stop.store(true, Ordering::Relaxed);
                    failure.get_or_insert(e);
                }
            }
            while let Some(r) = pending.remove(&records.len()) {
                if failure.is_none() {
                    if let Err(e) = sink(&r) {
                        stop.store(true, Ordering::Relaxed);
                        failure = Some(e);
                    }
                }
                log::debug!(
                    "run {}/{total}: {} {} seed {}",
                    records.len() + 1,
                    r.family,
                    r.optimizer,
                    r.seed
                );
                records.push(r);
            }
        }
        match failure {
            Some(e) => Err(e),
            None => Ok(records),
        }
    })
}
