//! Downhill simplex.

use super::{check_start, Finish, Objective, OptResult, OptimizerSpec, Step};
use crate::error::Result;

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;
const F_SPREAD_TOL: f64 = 1e-10;
/// Vertices straddling a minimum can tie in value; the simplex must also be small.
const X_SPREAD_TOL: f64 = 1e-4;

fn along(c: &[f64], w: &[f64], t: f64) -> Vec<f64> {
    c.iter().zip(w).map(|(ci, wi)| ci + t * (ci - wi)).collect()
}

fn run(obj: &mut Objective<'_>, x0: &[f64], spec: &OptimizerSpec) -> Step<Finish> {
    let n = x0.len();
    let mut simplex = vec![x0.to_vec()];
    for i in 0..n {
        let mut v = x0.to_vec();
        v[i] += 0.05 * x0[i].abs().max(1.0);
        simplex.push(v);
    }
    let mut fs = Vec::with_capacity(n + 1);
    for v in &simplex {
        fs.push(obj.eval(v)?);
    }

    for it in 0..spec.maxiter {
        obj.iterations = it;
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| fs[a].total_cmp(&fs[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        fs = order.iter().map(|&i| fs[i]).collect();

        let x_spread = simplex[1..]
            .iter()
            .flat_map(|v| v.iter().zip(&simplex[0]).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if fs[n] - fs[0] < F_SPREAD_TOL && x_spread <= X_SPREAD_TOL {
            return Ok(Finish {
                converged: true,
                iterations: it,
            });
        }

        let mut c = vec![0.0; n];
        for v in &simplex[..n] {
            for (ci, vi) in c.iter_mut().zip(v) {
                *ci += vi / n as f64;
            }
        }
        let worst = simplex[n].clone();
        let xr = along(&c, &worst, REFLECT);
        let fr = obj.eval(&xr)?;

        if fr < fs[0] {
            let xe = along(&c, &worst, EXPAND);
            let fe = obj.eval(&xe)?;
            if fe < fr {
                simplex[n] = xe;
                fs[n] = fe;
            } else {
                simplex[n] = xr;
                fs[n] = fr;
            }
            continue;
        }
        if fr < fs[n - 1] {
            simplex[n] = xr;
            fs[n] = fr;
            continue;
        }
        let (xc, fc, accept) = if fr < fs[n] {
            let xc = along(&c, &worst, CONTRACT * REFLECT);
            let fc = obj.eval(&xc)?;
            (xc, fc, fc <= fr)
        } else {
            let xc = along(&c, &worst, -CONTRACT);
            let fc = obj.eval(&xc)?;
            (xc, fc, fc < fs[n])
        };
        if accept {
            simplex[n] = xc;
            fs[n] = fc;
            continue;
        }
        let best = simplex[0].clone();
        for j in 1..=n {
            for (vi, bi) in simplex[j].iter_mut().zip(&best) {
                *vi = bi + SHRINK * (*vi - bi);
            }
            fs[j] = obj.eval(&simplex[j])?;
        }
    }
    Ok(Finish {
        converged: false,
        iterations: spec.maxiter,
    })
}

/// Simplex search with reflection, expansion, contraction and shrinkage.
pub fn nelder_mead_minimize(
    cost: &mut dyn FnMut(&[f64]) -> f64,
    theta0: &[f64],
    spec: &OptimizerSpec,
) -> Result<OptResult> {
    check_start(theta0, spec)?;
    let mut obj = Objective::new(cost, spec.eval_budget(theta0.len()));
    let out = run(&mut obj, theta0, spec);
    obj.finish(out)
}
