//! Derivative-free trust-region method on linear interpolation models.
//!
//! The model is the linear interpolant of the cost on a simplex of `n + 1`
//! points. Each iteration either steps to the model minimizer on the trust
//! ball around the best vertex, or repairs the simplex geometry. The radius
//! halves from [`RHO_BEGIN`] down to [`RHO_END`] when steps stop paying off.

use nalgebra::DMatrix;

use super::{check_start, Finish, Objective, OptResult, OptimizerSpec, Step};
use crate::error::Result;

pub const RHO_BEGIN: f64 = 0.5;
pub const RHO_END: f64 = 1e-8;
/// A vertex is too far from the best one beyond this many radii.
const FAR: f64 = 2.1;
/// A vertex is too close to the opposite face below this many radii.
const FLAT: f64 = 0.25;
const GEOMETRY_STEP: f64 = 0.5;
const POOR_RATIO: f64 = 0.1;

struct Simplex {
    points: Vec<Vec<f64>>,
    values: Vec<f64>,
}

impl Simplex {
    fn best(&self) -> usize {
        let mut b = 0;
        for (i, &v) in self.values.iter().enumerate() {
            if v < self.values[b] {
                b = i;
            }
        }
        b
    }
}

/// Edges from the best vertex, their inverse and the model gradient.
struct Model {
    /// Non-best vertex indices in row order of `edges`.
    others: Vec<usize>,
    edges: DMatrix<f64>,
    /// Column `j` is normal to the face opposite `others[j]`, scaled so its
    /// dot product with that edge is one.
    normals: Option<DMatrix<f64>>,
    gradient: Vec<f64>,
}

fn build_model(s: &Simplex, b: usize) -> Model {
    let n = s.points[0].len();
    let others: Vec<usize> = (0..=n).filter(|&j| j != b).collect();
    let mut edges = DMatrix::zeros(n, n);
    let mut df = nalgebra::DVector::zeros(n);
    for (r, &j) in others.iter().enumerate() {
        for c in 0..n {
            edges[(r, c)] = s.points[j][c] - s.points[b][c];
        }
        df[r] = s.values[j] - s.values[b];
    }
    let normals = edges.clone().try_inverse();
    let gradient = match &normals {
        Some(inv) => (inv * df).iter().copied().collect(),
        None => vec![0.0; n],
    };
    Model {
        others,
        edges,
        normals,
        gradient,
    }
}

/// Row `r` of the edge matrix whose vertex should be moved to repair the
/// geometry, if any.
fn bad_vertex(m: &Model, rho: f64) -> Option<usize> {
    let n = m.others.len();
    let lengths: Vec<f64> = (0..n).map(|r| m.edges.row(r).norm()).collect();
    let (far, far_len) =
        lengths.iter().enumerate().fold(
            (0, 0.0),
            |acc, (r, &l)| if l > acc.1 { (r, l) } else { acc },
        );
    if far_len > FAR * rho {
        return Some(far);
    }
    let Some(inv) = &m.normals else {
        return Some(far);
    };
    let heights: Vec<f64> = (0..n).map(|r| 1.0 / inv.column(r).norm()).collect();
    let (flat, h) =
        heights.iter().enumerate().fold(
            (0, f64::INFINITY),
            |acc, (r, &h)| if h < acc.1 { (r, h) } else { acc },
        );
    (h < FLAT * rho).then_some(flat)
}

fn run(obj: &mut Objective<'_>, x0: &[f64], spec: &OptimizerSpec) -> Step<Finish> {
    let n = x0.len();
    let mut rho = RHO_BEGIN;
    let mut s = Simplex {
        points: vec![x0.to_vec()],
        values: vec![obj.eval(x0)?],
    };
    for i in 0..n {
        let mut p = x0.to_vec();
        p[i] += rho;
        s.values.push(obj.eval(&p)?);
        s.points.push(p);
    }

    for it in 0..spec.maxiter {
        obj.iterations = it;
        let b = s.best();
        let m = build_model(&s, b);
        let xb = s.points[b].clone();

        if let Some(r) = bad_vertex(&m, rho) {
            // Move the offending vertex to distance GEOMETRY_STEP * rho from
            // the best one, along the normal of its opposite face, on the
            // side where the model decreases.
            let dir: Vec<f64> = match &m.normals {
                Some(inv) => {
                    let col = inv.column(r);
                    let len = col.norm();
                    col.iter().map(|v| v / len).collect()
                }
                None => {
                    let mut e = vec![0.0; n];
                    e[it % n] = 1.0;
                    e
                }
            };
            let slope: f64 = dir.iter().zip(&m.gradient).map(|(d, g)| d * g).sum();
            let sign = if slope > 0.0 { -1.0 } else { 1.0 };
            let p: Vec<f64> = xb
                .iter()
                .zip(&dir)
                .map(|(x, d)| x + sign * GEOMETRY_STEP * rho * d)
                .collect();
            let fp = obj.eval(&p)?;
            let j = m.others[r];
            s.points[j] = p;
            s.values[j] = fp;
            continue;
        }

        let gnorm = m.gradient.iter().map(|g| g * g).sum::<f64>().sqrt();
        let mut poor = gnorm == 0.0;
        if !poor {
            let step: Vec<f64> = m.gradient.iter().map(|g| -rho * g / gnorm).collect();
            let trial: Vec<f64> = xb.iter().zip(&step).map(|(x, d)| x + d).collect();
            let ft = obj.eval(&trial)?;
            let predicted = rho * gnorm;
            let actual = s.values[b] - ft;
            poor = actual < POOR_RATIO * predicted;

            // The trial replaces the vertex whose removal keeps the simplex
            // volume largest; a worse trial only enters if it grows the volume.
            let inv = m
                .normals
                .as_ref()
                .expect("good geometry implies invertible edges");
            let mut pick: Option<(usize, f64)> = None;
            for r in 0..n {
                let factor: f64 = (0..n).map(|c| step[c] * inv[(c, r)]).sum::<f64>().abs();
                let j = m.others[r];
                let eligible = ft < s.values[b] || (factor > 1.0 && ft < s.values[j]);
                if eligible && pick.is_none_or(|(_, best)| factor > best) {
                    pick = Some((r, factor));
                }
            }
            if let Some((r, _)) = pick {
                let j = m.others[r];
                s.points[j] = trial;
                s.values[j] = ft;
            }
        }
        if poor {
            if rho <= RHO_END {
                return Ok(Finish {
                    converged: true,
                    iterations: it + 1,
                });
            }
            rho *= 0.5;
            if rho <= 1.5 * RHO_END {
                rho = RHO_END;
            }
        }
    }
    Ok(Finish {
        converged: false,
        iterations: spec.maxiter,
    })
}

/// Linear-model trust-region minimization without derivatives.
pub fn cobyla_minimize(
    cost: &mut dyn FnMut(&[f64]) -> f64,
    theta0: &[f64],
    spec: &OptimizerSpec,
) -> Result<OptResult> {
    check_start(theta0, spec)?;
    let mut obj = Objective::new(cost, spec.eval_budget(theta0.len()));
    let out = run(&mut obj, theta0, spec);
    obj.finish(out)
}
