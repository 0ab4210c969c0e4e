//! Minimizers over real vectors with a shared cost interface.
//!
//! Every algorithm goes through [`Objective`], which counts evaluations,
//! enforces the evaluation budget, records the trace and keeps the best
//! point seen. A cost returning NaN or infinity aborts the run with
//! [`Error::NonFiniteCost`].

mod cobyla;
mod isoma;
mod nelder_mead;
mod powell;
mod quasi_newton;

pub use cobyla::cobyla_minimize;
pub use isoma::isoma_minimize;
pub use nelder_mead::nelder_mead_minimize;
pub use powell::powell_minimize;
pub use quasi_newton::{bfgs_minimize, slsqp_minimize};

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Step used by central differences for deterministic costs.
pub const FD_STEP_EXACT: f64 = 1e-6;
/// Step used by central differences for shot-sampled costs.
pub const FD_STEP_SHOTS: f64 = 5e-2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    Bfgs,
    Slsqp,
    NelderMead,
    Powell,
    Cobyla,
    Isoma,
}

impl OptimizerKind {
    pub const ALL: [OptimizerKind; 6] = [
        OptimizerKind::Bfgs,
        OptimizerKind::Slsqp,
        OptimizerKind::NelderMead,
        OptimizerKind::Powell,
        OptimizerKind::Cobyla,
        OptimizerKind::Isoma,
    ];

    pub fn name(self) -> &'static str {
        match self {
            OptimizerKind::Bfgs => "bfgs",
            OptimizerKind::Slsqp => "slsqp",
            OptimizerKind::NelderMead => "nelder_mead",
            OptimizerKind::Powell => "powell",
            OptimizerKind::Cobyla => "cobyla",
            OptimizerKind::Isoma => "isoma",
        }
    }

    pub fn uses_gradient(self) -> bool {
        matches!(self, OptimizerKind::Bfgs | OptimizerKind::Slsqp)
    }
}

impl fmt::Display for OptimizerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OptimizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        OptimizerKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::usage(format!("unknown optimizer {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IsomaParams {
    pub n_jump: usize,
    pub step: f64,
    pub pop_size: usize,
    pub max_migration: usize,
    pub max_fes: usize,
    pub var_min: f64,
    pub var_max: f64,
    /// Individuals drawn per migration.
    pub m: usize,
    /// Best of the drawn individuals that actually migrate.
    pub n: usize,
    /// Tournament size for picking each migrant's leader.
    pub k: usize,
    /// Probability that a coordinate moves on a given jump.
    pub prt: f64,
}

impl Default for IsomaParams {
    fn default() -> Self {
        Self {
            n_jump: 10,
            step: 0.11,
            pop_size: 25,
            max_migration: 30,
            max_fes: 750,
            var_min: -2.0 * std::f64::consts::PI,
            var_max: 2.0 * std::f64::consts::PI,
            m: 15,
            n: 5,
            k: 10,
            prt: 0.3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerSpec {
    pub kind: OptimizerKind,
    #[serde(default = "default_maxiter")]
    pub maxiter: usize,
    #[serde(default = "default_ftol")]
    pub ftol: f64,
    /// Central-difference step for the gradient methods. `None` lets the
    /// caller pick by estimator ([`FD_STEP_EXACT`] or [`FD_STEP_SHOTS`]).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fd_step: Option<f64>,
    #[serde(default)]
    pub isoma_params: IsomaParams,
}

fn default_maxiter() -> usize {
    500
}

fn default_ftol() -> f64 {
    1e-8
}

impl OptimizerSpec {
    pub fn new(kind: OptimizerKind) -> Self {
        Self {
            kind,
            maxiter: default_maxiter(),
            ftol: default_ftol(),
            fd_step: None,
            isoma_params: IsomaParams::default(),
        }
    }

    pub fn with_maxiter(mut self, maxiter: usize) -> Self {
        self.maxiter = maxiter;
        self
    }

    pub fn with_fd_step(mut self, h: f64) -> Self {
        self.fd_step = Some(h);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.maxiter == 0 {
            return Err(Error::domain("maxiter must be at least 1"));
        }
        if !(self.ftol > 0.0) {
            return Err(Error::domain("ftol must be positive"));
        }
        if let Some(h) = self.fd_step {
            if !(h > 0.0) {
                return Err(Error::domain("fd_step must be positive"));
            }
        }
        let p = &self.isoma_params;
        if !(p.var_min < p.var_max) {
            return Err(Error::domain("isoma var_min must be below var_max"));
        }
        if p.pop_size < 2
            || p.m > p.pop_size
            || p.n > p.m
            || p.k > p.pop_size
            || p.k == 0
            || p.n == 0
        {
            return Err(Error::domain(
                "isoma needs 2 <= pop_size, 1 <= n <= m <= pop_size, 1 <= k <= pop_size",
            ));
        }
        if p.n_jump == 0 || !(p.step > 0.0) || !(0.0..=1.0).contains(&p.prt) {
            return Err(Error::domain(
                "isoma needs n_jump >= 1, step > 0, prt in [0, 1]",
            ));
        }
        Ok(())
    }

    pub fn fd_step_or(&self, default: f64) -> f64 {
        self.fd_step.unwrap_or(default)
    }

    /// Hard cap on cost evaluations for a problem of dimension `dim`.
    pub fn eval_budget(&self, dim: usize) -> usize {
        let it = self.maxiter;
        match self.kind {
            OptimizerKind::Bfgs | OptimizerKind::Slsqp => {
                1 + 2 * dim + it * (2 * dim + quasi_newton::MAX_BACKTRACKS + 1)
            }
            OptimizerKind::NelderMead => dim + 1 + it * (dim + 2),
            OptimizerKind::Powell => 1 + it * ((dim + 1) * powell::LINE_EVALS + 1),
            OptimizerKind::Cobyla => dim + 1 + it,
            OptimizerKind::Isoma => self.isoma_params.max_fes,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptResult {
    pub theta_best: Vec<f64>,
    pub f_best: f64,
    pub n_evals: usize,
    pub converged: bool,
    /// Iterations (or cycles, or migrations) completed.
    pub iterations: usize,
    /// `(evaluation index, cost)` for every evaluation, 1-based.
    pub trace: Vec<(usize, f64)>,
}

impl OptResult {
    /// Running minimum of the trace.
    pub fn incumbent(&self) -> Vec<f64> {
        self.trace
            .iter()
            .scan(f64::INFINITY, |best, &(_, f)| {
                *best = best.min(f);
                Some(*best)
            })
            .collect()
    }
}

/// Why an algorithm stopped early.
#[derive(Debug)]
pub(crate) enum Halt {
    Budget,
    NonFinite { theta: Vec<f64>, value: f64 },
}

pub(crate) type Step<T> = std::result::Result<T, Halt>;

/// How an algorithm finished when it was not halted.
pub(crate) struct Finish {
    pub converged: bool,
    pub iterations: usize,
}

pub(crate) struct Objective<'a> {
    cost: &'a mut dyn FnMut(&[f64]) -> f64,
    budget: usize,
    n_evals: usize,
    best: Option<(Vec<f64>, f64)>,
    trace: Vec<(usize, f64)>,
    /// Iteration counter the algorithms update, reported even when halted.
    pub iterations: usize,
}

impl<'a> Objective<'a> {
    pub fn new(cost: &'a mut dyn FnMut(&[f64]) -> f64, budget: usize) -> Self {
        Self {
            cost,
            budget,
            n_evals: 0,
            best: None,
            trace: Vec::new(),
            iterations: 0,
        }
    }

    pub fn eval(&mut self, x: &[f64]) -> Step<f64> {
        if self.n_evals >= self.budget {
            return Err(Halt::Budget);
        }
        let f = (self.cost)(x);
        self.n_evals += 1;
        if !f.is_finite() {
            return Err(Halt::NonFinite {
                theta: x.to_vec(),
                value: f,
            });
        }
        self.trace.push((self.n_evals, f));
        if self.best.as_ref().is_none_or(|(_, b)| f < *b) {
            self.best = Some((x.to_vec(), f));
        }
        Ok(f)
    }

    #[cfg(test)]
    pub fn n_evals(&self) -> usize {
        self.n_evals
    }

    fn finish(self, outcome: Step<Finish>) -> Result<OptResult> {
        let (converged, iterations) = match outcome {
            Ok(f) => (f.converged, f.iterations),
            Err(Halt::Budget) => (false, self.iterations),
            Err(Halt::NonFinite { theta, value }) => {
                return Err(Error::NonFiniteCost {
                    theta,
                    value,
                    n_evals: self.n_evals,
                    best: self.best,
                })
            }
        };
        let (theta_best, f_best) = self
            .best
            .ok_or_else(|| Error::usage("evaluation budget allows no evaluations"))?;
        Ok(OptResult {
            theta_best,
            f_best,
            n_evals: self.n_evals,
            converged,
            iterations,
            trace: self.trace,
        })
    }
}

/// Central-difference gradient through the counting objective.
pub(crate) fn fd_gradient(obj: &mut Objective<'_>, x: &[f64], h: f64) -> Step<Vec<f64>> {
    let mut probe = x.to_vec();
    let mut g = vec![0.0; x.len()];
    for i in 0..x.len() {
        probe[i] = x[i] + h;
        let fp = obj.eval(&probe)?;
        probe[i] = x[i] - h;
        let fm = obj.eval(&probe)?;
        probe[i] = x[i];
        g[i] = (fp - fm) / (2.0 * h);
    }
    Ok(g)
}

/// Central differences: `2 * dim` evaluations of `cost`.
pub fn finite_difference_gradient(
    cost: &mut dyn FnMut(&[f64]) -> f64,
    theta: &[f64],
    h: f64,
) -> Result<Vec<f64>> {
    if !(h > 0.0) {
        return Err(Error::domain(format!("step must be positive, got {h}")));
    }
    let mut obj = Objective::new(cost, 2 * theta.len());
    fd_gradient(&mut obj, theta, h).map_err(|halt| match halt {
        Halt::NonFinite { theta, value } => Error::NonFiniteCost {
            theta,
            value,
            n_evals: 0,
            best: None,
        },
        Halt::Budget => unreachable!("gradient budget is exact"),
    })
}

pub(crate) fn check_start(theta0: &[f64], spec: &OptimizerSpec) -> Result<()> {
    spec.validate()?;
    if theta0.is_empty() {
        return Err(Error::usage("need at least one parameter"));
    }
    if theta0.iter().any(|v| !v.is_finite()) {
        return Err(Error::usage("starting point must be finite"));
    }
    Ok(())
}

/// Run the algorithm named by `spec.kind`.
pub fn minimize<R: Rng + ?Sized>(
    cost: &mut dyn FnMut(&[f64]) -> f64,
    theta0: &[f64],
    spec: &OptimizerSpec,
    rng: &mut R,
) -> Result<OptResult> {
    match spec.kind {
        OptimizerKind::Bfgs => bfgs_minimize(cost, theta0, spec),
        OptimizerKind::Slsqp => slsqp_minimize(cost, theta0, spec),
        OptimizerKind::NelderMead => nelder_mead_minimize(cost, theta0, spec),
        OptimizerKind::Powell => powell_minimize(cost, theta0, spec),
        OptimizerKind::Cobyla => cobyla_minimize(cost, theta0, spec),
        OptimizerKind::Isoma => isoma_minimize(cost, theta0, spec, rng),
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gradient_of_linear_and_constant() {
        let mut lin = |x: &[f64]| 3.0 * x[0] - 2.0 * x[1] + 1.0;
        for h in [1e-6, 0.1, 2.0] {
            let g = finite_difference_gradient(&mut lin, &[0.3, -4.0], h).unwrap();
            assert!((g[0] - 3.0).abs() < 1e-8 && (g[1] + 2.0).abs() < 1e-8);
        }
        let mut constant = |_: &[f64]| 5.0;
        let g = finite_difference_gradient(&mut constant, &[1.0, 2.0, 3.0], 1e-3).unwrap();
        assert_eq!(g, vec![0.0; 3]);
    }

    #[test]
    fn gradient_error_is_second_order() {
        // f = x^3 + x y^2; the central-difference error is h^2 f'''/6 per axis.
        let mut f = |x: &[f64]| x[0].powi(3) + x[0] * x[1] * x[1];
        let exact = |x: &[f64]| [3.0 * x[0] * x[0] + x[1] * x[1], 2.0 * x[0] * x[1]];
        let x = [0.7, -1.3];
        let err = |h: f64, f: &mut dyn FnMut(&[f64]) -> f64| {
            let g = finite_difference_gradient(f, &x, h).unwrap();
            let e = exact(&x);
            ((g[0] - e[0]).powi(2) + (g[1] - e[1]).powi(2)).sqrt()
        };
        let e1 = err(1e-2, &mut f);
        let e2 = err(5e-3, &mut f);
        assert!((e1 / e2 - 4.0).abs() < 0.05, "ratio {}", e1 / e2);
    }

    #[test]
    fn gradient_matches_polynomial_at_small_step() {
        let mut f = |x: &[f64]| 2.0 * x[0].powi(4) - x[0] * x[1] + 0.5 * x[1].powi(2) * x[2] + x[2];
        let x = [0.9f64, -0.4, 1.7];
        let exact = [
            8.0 * x[0].powi(3) - x[1],
            -x[0] + x[1] * x[2],
            0.5 * x[1] * x[1] + 1.0,
        ];
        let g = finite_difference_gradient(&mut f, &x, 1e-6).unwrap();
        for i in 0..3 {
            assert!(
                (g[i] - exact[i]).abs() <= 1e-6 * exact[i].abs().max(1.0),
                "{i}"
            );
        }
    }

    #[test]
    fn spec_validation() {
        assert!(OptimizerSpec::new(OptimizerKind::Bfgs).validate().is_ok());
        assert!(OptimizerSpec::new(OptimizerKind::Bfgs)
            .with_maxiter(0)
            .validate()
            .is_err());
        let mut s = OptimizerSpec::new(OptimizerKind::Isoma);
        s.isoma_params.m = 30;
        assert!(s.validate().is_err());
        let mut s = OptimizerSpec::new(OptimizerKind::Isoma);
        s.isoma_params.var_min = 1.0;
        s.isoma_params.var_max = 1.0;
        assert!(s.validate().is_err());
    }

    #[test]
    fn spec_json_defaults() {
        let s: OptimizerSpec = serde_json::from_str(r#"{"kind":"nelder_mead"}"#).unwrap();
        assert_eq!(s, OptimizerSpec::new(OptimizerKind::NelderMead));
        assert_eq!(s.isoma_params.max_fes, 750);
        assert!(serde_json::from_str::<OptimizerSpec>(r#"{"kind":"adam"}"#).is_err());
    }
}
