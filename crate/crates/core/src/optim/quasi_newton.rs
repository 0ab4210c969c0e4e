//! Gradient-based methods: BFGS and an unconstrained SQP.

use nalgebra::{DMatrix, DVector};

use super::{
    check_start, dot, fd_gradient, norm, Finish, Objective, OptResult, OptimizerSpec, Step,
    FD_STEP_EXACT,
};
use crate::error::Result;

pub(crate) const MAX_BACKTRACKS: usize = 30;
const ARMIJO_C1: f64 = 1e-4;
const GRAD_TOL: f64 = 1e-8;

/// Backtracking search along `p` from `x`. Returns the accepted point and
/// its value, or `None` after [`MAX_BACKTRACKS`] halvings.
fn backtrack(
    obj: &mut Objective<'_>,
    x: &[f64],
    f: f64,
    g: &[f64],
    p: &[f64],
) -> Step<Option<(Vec<f64>, f64)>> {
    let slope = dot(g, p);
    let mut alpha = 1.0;
    let mut trial = vec![0.0; x.len()];
    for _ in 0..=MAX_BACKTRACKS {
        for i in 0..x.len() {
            trial[i] = x[i] + alpha * p[i];
        }
        let ft = obj.eval(&trial)?;
        if ft <= f + ARMIJO_C1 * alpha * slope {
            return Ok(Some((trial, ft)));
        }
        alpha *= 0.5;
    }
    Ok(None)
}

fn converged_on_f(f_prev: f64, f: f64, ftol: f64) -> bool {
    (f_prev - f).abs() <= ftol * f.abs().max(1.0)
}

pub(crate) struct BfgsState {
    pub finish: Finish,
    #[cfg_attr(not(test), allow(dead_code))]
    pub inv_hessian: DMatrix<f64>,
}

pub(crate) fn run_bfgs(
    obj: &mut Objective<'_>,
    x0: &[f64],
    spec: &OptimizerSpec,
) -> Step<BfgsState> {
    let n = x0.len();
    let h = spec.fd_step_or(FD_STEP_EXACT);
    let mut x = x0.to_vec();
    let mut f = obj.eval(&x)?;
    let mut g = fd_gradient(obj, &x, h)?;
    let mut hinv = DMatrix::<f64>::identity(n, n);
    let done = |converged, iterations, hinv: DMatrix<f64>| BfgsState {
        finish: Finish {
            converged,
            iterations,
        },
        inv_hessian: hinv,
    };
    for k in 0..spec.maxiter {
        obj.iterations = k;
        if norm(&g) < GRAD_TOL {
            return Ok(done(true, k, hinv));
        }
        let gv = DVector::from_column_slice(&g);
        let mut p: Vec<f64> = (-(&hinv * &gv)).iter().copied().collect();
        if dot(&p, &g) >= 0.0 {
            hinv = DMatrix::identity(n, n);
            p = g.iter().map(|v| -v).collect();
        }
        let Some((x_new, f_new)) = backtrack(obj, &x, f, &g, &p)? else {
            return Ok(done(false, k, hinv));
        };
        let g_new = fd_gradient(obj, &x_new, h)?;
        let s = DVector::from_iterator(n, x_new.iter().zip(&x).map(|(a, b)| a - b));
        let y = DVector::from_iterator(n, g_new.iter().zip(&g).map(|(a, b)| a - b));
        let f_prev = f;
        x = x_new;
        f = f_new;
        g = g_new;
        let sy = s.dot(&y);
        if sy > 1e-12 * s.norm() * y.norm() && sy > 0.0 {
            if k == 0 {
                hinv *= sy / y.dot(&y);
            }
            let rho = 1.0 / sy;
            let eye = DMatrix::<f64>::identity(n, n);
            let left = &eye - rho * &s * y.transpose();
            let right = &eye - rho * &y * s.transpose();
            hinv = &left * &hinv * &right + rho * &s * s.transpose();
        }
        if converged_on_f(f_prev, f, spec.ftol) {
            return Ok(done(true, k + 1, hinv));
        }
    }
    Ok(done(false, spec.maxiter, hinv))
}

/// Quasi-Newton minimization with an inverse-Hessian BFGS update.
pub fn bfgs_minimize(
    cost: &mut dyn FnMut(&[f64]) -> f64,
    theta0: &[f64],
    spec: &OptimizerSpec,
) -> Result<OptResult> {
    check_start(theta0, spec)?;
    let mut obj = Objective::new(cost, spec.eval_budget(theta0.len()));
    let out = run_bfgs(&mut obj, theta0, spec).map(|s| s.finish);
    obj.finish(out)
}

/// Powell-damped BFGS update of a Hessian approximation.
fn damped_update(b: &mut DMatrix<f64>, s: &DVector<f64>, y: &DVector<f64>) {
    let bs = &*b * s;
    let sbs = s.dot(&bs);
    if !(sbs > 0.0) {
        return;
    }
    let sy = s.dot(y);
    let t = if sy >= 0.2 * sbs {
        1.0
    } else {
        0.8 * sbs / (sbs - sy)
    };
    let r = t * y + (1.0 - t) * &bs;
    let sr = s.dot(&r);
    if !(sr > 0.0) {
        return;
    }
    *b += &r * r.transpose() / sr - &bs * bs.transpose() / sbs;
}

fn run_sqp(obj: &mut Objective<'_>, x0: &[f64], spec: &OptimizerSpec) -> Step<Finish> {
    let n = x0.len();
    let h = spec.fd_step_or(FD_STEP_EXACT);
    let mut x = x0.to_vec();
    let mut f = obj.eval(&x)?;
    let mut g = fd_gradient(obj, &x, h)?;
    let mut b = DMatrix::<f64>::identity(n, n);
    for k in 0..spec.maxiter {
        obj.iterations = k;
        if norm(&g) < GRAD_TOL {
            return Ok(Finish {
                converged: true,
                iterations: k,
            });
        }
        let gv = DVector::from_column_slice(&g);
        // Quadratic subproblem: minimize g.p + p'Bp/2, solved exactly.
        let p = match b.clone().cholesky() {
            Some(ch) => -ch.solve(&gv),
            None => {
                b = DMatrix::identity(n, n);
                -gv.clone()
            }
        };
        let p: Vec<f64> = p.iter().copied().collect();
        let Some((x_new, f_new)) = backtrack(obj, &x, f, &g, &p)? else {
            return Ok(Finish {
                converged: false,
                iterations: k,
            });
        };
        let g_new = fd_gradient(obj, &x_new, h)?;
        let s = DVector::from_iterator(n, x_new.iter().zip(&x).map(|(a, b)| a - b));
        let y = DVector::from_iterator(n, g_new.iter().zip(&g).map(|(a, b)| a - b));
        if k == 0 {
            let sy = s.dot(&y);
            if sy > 0.0 {
                b *= y.dot(&y) / sy;
            }
        }
        damped_update(&mut b, &s, &y);
        let f_prev = f;
        x = x_new;
        f = f_new;
        g = g_new;
        if converged_on_f(f_prev, f, spec.ftol) {
            return Ok(Finish {
                converged: true,
                iterations: k + 1,
            });
        }
    }
    Ok(Finish {
        converged: false,
        iterations: spec.maxiter,
    })
}

/// Sequential quadratic programming without constraints: each step solves
/// the quadratic model built from a damped quasi-Newton Hessian, followed by
/// a line search on the cost.
pub fn slsqp_minimize(
    cost: &mut dyn FnMut(&[f64]) -> f64,
    theta0: &[f64],
    spec: &OptimizerSpec,
) -> Result<OptResult> {
    check_start(theta0, spec)?;
    let mut obj = Objective::new(cost, spec.eval_budget(theta0.len()));
    let out = run_sqp(&mut obj, theta0, spec);
    obj.finish(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optim::OptimizerKind;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    type Minimizer = fn(&mut dyn FnMut(&[f64]) -> f64, &[f64], &OptimizerSpec) -> Result<OptResult>;

    const BOTH: [(OptimizerKind, Minimizer); 2] = [
        (OptimizerKind::Bfgs, bfgs_minimize),
        (OptimizerKind::Slsqp, slsqp_minimize),
    ];

    fn rosenbrock(x: &[f64]) -> f64 {
        100.0 * (x[1] - x[0] * x[0]).powi(2) + (1.0 - x[0]).powi(2)
    }

    #[test]
    fn sphere() {
        for (kind, run) in BOTH {
            let mut f = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>();
            let r = run(&mut f, &[1.0, 1.0, 1.0], &OptimizerSpec::new(kind)).unwrap();
            assert!(r.f_best < 1e-12, "{kind}: {}", r.f_best);
            assert!(r.n_evals < 100, "{kind}: {}", r.n_evals);
        }
    }

    #[test]
    fn rosenbrock_valley() {
        for (kind, run) in BOTH {
            let r = run(&mut rosenbrock, &[-1.2, 1.0], &OptimizerSpec::new(kind)).unwrap();
            assert!(r.f_best < 1e-6, "{kind}: {}", r.f_best);
            assert!((r.theta_best[0] - 1.0).abs() < 1e-2 && (r.theta_best[1] - 1.0).abs() < 2e-2);
        }
    }

    #[test]
    fn inverse_hessian_cancels_quadratic_gradient() {
        let a = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 2.0]);
        let mut f = |x: &[f64]| {
            let v = DVector::from_column_slice(x);
            0.5 * v.dot(&(&a * &v))
        };
        let spec = OptimizerSpec::new(OptimizerKind::Bfgs);
        let mut obj = Objective::new(&mut f, spec.eval_budget(3));
        let state = run_bfgs(&mut obj, &[1.0, -2.0, 0.5], &spec).unwrap();
        assert!(state.finish.converged);
        let r = obj.finish(Ok(state.finish)).unwrap();
        let xb = DVector::from_column_slice(&r.theta_best);
        let newton = &state.inv_hessian * (&a * &xb);
        assert!(newton.norm() < 1e-4, "{}", newton.norm());
    }

    #[test]
    fn stationary_start() {
        for (kind, run) in BOTH {
            let mut f = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>();
            let r = run(&mut f, &[0.0, 0.0], &OptimizerSpec::new(kind)).unwrap();
            assert!(r.converged);
            assert_eq!(r.theta_best, vec![0.0, 0.0]);
            assert_eq!(r.n_evals, 5);
        }
    }

    #[test]
    fn noisy_quadratic() {
        let sigma = 1e-3;
        for (kind, run) in BOTH {
            for seed in 0..5 {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let noise = Normal::new(0.0, sigma).unwrap();
                let mut f =
                    |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>() + noise.sample(&mut rng);
                let spec = OptimizerSpec::new(kind).with_fd_step(5e-2);
                let r = run(&mut f, &[0.8, -0.6], &spec).unwrap();
                assert!(
                    r.f_best.abs() < 10.0 * sigma,
                    "{kind} seed {seed}: {}",
                    r.f_best
                );
            }
        }
    }

    #[test]
    fn nan_aborts_with_theta() {
        for (kind, run) in BOTH {
            let mut f = |x: &[f64]| {
                if x[0] < 0.5 {
                    f64::NAN
                } else {
                    (x[0] - 0.2).powi(2)
                }
            };
            let err = run(&mut f, &[1.0], &OptimizerSpec::new(kind)).unwrap_err();
            match err {
                crate::Error::NonFiniteCost { theta, best, .. } => {
                    assert!(theta[0] < 0.5);
                    assert!(best.is_some());
                }
                other => panic!("{other}"),
            }
        }
    }

    #[test]
    fn budget_cap_holds() {
        for (kind, run) in BOTH {
            let spec = OptimizerSpec::new(kind).with_maxiter(3);
            let r = run(&mut rosenbrock, &[-1.2, 1.0], &spec).unwrap();
            assert!(r.n_evals <= spec.eval_budget(2));
            assert!(!r.converged);
        }
    }
}
