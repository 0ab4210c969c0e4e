//! Direction-set method with Brent line minimization.

use super::{check_start, Finish, Objective, OptResult, OptimizerSpec, Step};
use crate::error::Result;

/// Cost evaluations allowed per line minimization.
pub(crate) const LINE_EVALS: usize = 200;
const CYCLE_TOL: f64 = 1e-10;
const GOLD: f64 = 1.618_033_988_749_895;
const CGOLD: f64 = 0.381_966_011_250_105;
const LINE_TOL: f64 = 1.48e-8;
const ZEPS: f64 = 1e-20;
const MAX_EXPANSIONS: usize = 60;

/// One-dimensional slice `t -> f(x + t d)` with its own evaluation cap.
struct Line<'o, 'a> {
    obj: &'o mut Objective<'a>,
    x: &'o [f64],
    d: &'o [f64],
    used: usize,
    best: (f64, f64),
}

impl Line<'_, '_> {
    /// `Ok(None)` once the per-line cap is spent.
    fn at(&mut self, t: f64) -> Step<Option<f64>> {
        if self.used >= LINE_EVALS {
            return Ok(None);
        }
        self.used += 1;
        let p: Vec<f64> = self
            .x
            .iter()
            .zip(self.d)
            .map(|(xi, di)| xi + t * di)
            .collect();
        let f = self.obj.eval(&p)?;
        if f < self.best.1 {
            self.best = (t, f);
        }
        Ok(Some(f))
    }
}

macro_rules! probe {
    ($line:expr, $t:expr) => {
        match $line.at($t)? {
            Some(f) => f,
            None => return Ok($line.best),
        }
    };
}

/// Minimize along `d` starting at `x` (where the cost is `fx`). Returns the
/// best step length and value; `(0, fx)` if nothing improves.
fn line_minimize(obj: &mut Objective<'_>, x: &[f64], d: &[f64], fx: f64) -> Step<(f64, f64)> {
    let mut line = Line {
        obj,
        x,
        d,
        used: 0,
        best: (0.0, fx),
    };

    let (mut ax, mut fa) = (0.0, fx);
    let (mut bx, mut fb) = (1.0, probe!(line, 1.0));
    if fb > fa {
        std::mem::swap(&mut ax, &mut bx);
        std::mem::swap(&mut fa, &mut fb);
    }
    let mut cx = bx + GOLD * (bx - ax);
    let mut fc = probe!(line, cx);
    let mut expansions = 0;
    while fb > fc {
        if expansions == MAX_EXPANSIONS {
            return Ok(line.best);
        }
        expansions += 1;
        ax = bx;
        bx = cx;
        fb = fc;
        cx = bx + GOLD * (bx - ax);
        fc = probe!(line, cx);
    }

    let (mut a, mut b) = if ax < cx { (ax, cx) } else { (cx, ax) };
    let (mut x, mut w, mut v) = (bx, bx, bx);
    let (mut fxx, mut fw, mut fv) = (fb, fb, fb);
    let (mut d, mut e) = (0.0f64, 0.0f64);
    loop {
        let xm = 0.5 * (a + b);
        let tol1 = LINE_TOL * x.abs() + ZEPS;
        let tol2 = 2.0 * tol1;
        if (x - xm).abs() <= tol2 - 0.5 * (b - a) {
            return Ok(line.best);
        }
        let golden = |x: f64| if x >= xm { a - x } else { b - x };
        if e.abs() > tol1 {
            let r = (x - w) * (fxx - fv);
            let mut q = (x - v) * (fxx - fw);
            let mut p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if q > 0.0 {
                p = -p;
            }
            q = q.abs();
            let etemp = e;
            e = d;
            if p.abs() >= (0.5 * q * etemp).abs() || p <= q * (a - x) || p >= q * (b - x) {
                e = golden(x);
                d = CGOLD * e;
            } else {
                d = p / q;
                let u = x + d;
                if u - a < tol2 || b - u < tol2 {
                    d = tol1.copysign(xm - x);
                }
            }
        } else {
            e = golden(x);
            d = CGOLD * e;
        }
        let u = if d.abs() >= tol1 {
            x + d
        } else {
            x + tol1.copysign(d)
        };
        let fu = probe!(line, u);
        if fu <= fxx {
            if u >= x {
                a = x;
            } else {
                b = x;
            }
            (v, fv) = (w, fw);
            (w, fw) = (x, fxx);
            (x, fxx) = (u, fu);
        } else {
            if u < x {
                a = u;
            } else {
                b = u;
            }
            if fu <= fw || w == x {
                (v, fv) = (w, fw);
                (w, fw) = (u, fu);
            } else if fu <= fv || v == x || v == w {
                (v, fv) = (u, fu);
            }
        }
    }
}

fn step_to(x: &mut [f64], d: &[f64], t: f64) {
    for (xi, di) in x.iter_mut().zip(d) {
        *xi += t * di;
    }
}

fn run(obj: &mut Objective<'_>, x0: &[f64], spec: &OptimizerSpec) -> Step<Finish> {
    let n = x0.len();
    let mut dirs: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut e = vec![0.0; n];
            e[i] = 1.0;
            e
        })
        .collect();
    let mut x = x0.to_vec();
    let mut f = obj.eval(&x)?;

    for cycle in 0..spec.maxiter {
        obj.iterations = cycle;
        let (x_start, f_start) = (x.clone(), f);
        let (mut biggest, mut ibig) = (0.0, 0);
        for (i, d) in dirs.iter().enumerate() {
            let f_before = f;
            let (t, ft) = line_minimize(obj, &x, d, f)?;
            step_to(&mut x, d, t);
            f = ft;
            if f_before - f > biggest {
                biggest = f_before - f;
                ibig = i;
            }
        }
        if f_start - f < CYCLE_TOL {
            return Ok(Finish {
                converged: true,
                iterations: cycle + 1,
            });
        }
        let shift: Vec<f64> = x.iter().zip(&x_start).map(|(a, b)| a - b).collect();
        let extrapolated: Vec<f64> = x.iter().zip(&shift).map(|(a, s)| a + s).collect();
        let f_ext = obj.eval(&extrapolated)?;
        if f_ext < f_start {
            let t = 2.0 * (f_start - 2.0 * f + f_ext) * (f_start - f - biggest).powi(2)
                - biggest * (f_start - f_ext).powi(2);
            if t < 0.0 {
                let (s, fs) = line_minimize(obj, &x, &shift, f)?;
                step_to(&mut x, &shift, s);
                f = fs;
                dirs.remove(ibig);
                dirs.push(shift);
            }
        }
    }
    Ok(Finish {
        converged: false,
        iterations: spec.maxiter,
    })
}

/// Powell's conjugate-direction method.
pub fn powell_minimize(
    cost: &mut dyn FnMut(&[f64]) -> f64,
    theta0: &[f64],
    spec: &OptimizerSpec,
) -> Result<OptResult> {
    check_start(theta0, spec)?;
    let mut obj = Objective::new(cost, spec.eval_budget(theta0.len()));
    let out = run(&mut obj, theta0, spec);
    obj.finish(out)
}
