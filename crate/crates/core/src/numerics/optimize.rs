//! Derivative-free minimisation with the Nelder–Mead simplex method.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerSpec {
    /// Per-coordinate offsets used to build the initial simplex. A single
    /// entry is broadcast to every coordinate.
    pub initial_step: Vec<f64>,
    pub f_tol: f64,
    pub x_tol: f64,
    pub max_iters: usize,
}

impl Default for OptimizerSpec {
    fn default() -> Self {
        Self {
            initial_step: vec![0.5],
            f_tol: 1e-10,
            x_tol: 1e-8,
            max_iters: 10_000,
        }
    }
}

impl OptimizerSpec {
    pub fn validate(&self, dim: usize) -> Result<()> {
        let steps_ok = !self.initial_step.is_empty()
            && (self.initial_step.len() == 1 || self.initial_step.len() == dim)
            && self.initial_step.iter().all(|s| s.is_finite() && *s != 0.0);
        if !steps_ok || !(self.f_tol > 0.0) || !(self.x_tol > 0.0) || self.max_iters < 1 {
            return Err(domain(format!("invalid optimizer spec {self:?} for dimension {dim}")));
        }
        Ok(())
    }

    fn step(&self, i: usize) -> f64 {
        if self.initial_step.len() == 1 {
            self.initial_step[0]
        } else {
            self.initial_step[i]
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub f: f64,
    pub converged: bool,
    pub iters: usize,
    pub evals: usize,
}

/// Minimises `objective` starting from `x0`.
///
/// Non-finite objective values away from `x0` are treated as `+∞`, which
/// lets callers encode constraints by returning NaN or infinity. Vertices
/// with equal values keep their insertion order, so the result is a
/// deterministic function of the inputs.
pub fn nelder_mead<F>(objective: F, x0: &[f64], spec: &OptimizerSpec) -> Result<Minimum>
where
    F: Fn(&[f64]) -> f64,
{
    let n = x0.len();
    if n == 0 {
        return Err(domain("nelder_mead needs at least one coordinate"));
    }
    spec.validate(n)?;
    let f0 = objective(x0);
    if !f0.is_finite() {
        return Err(domain(format!("objective is not finite at the start point ({f0})")));
    }
    let mut evals = 1;
    let mut eval = |x: &[f64]| {
        evals += 1;
        let v = objective(x);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((x0.to_vec(), f0));
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += spec.step(i);
        let fx = eval(&x);
        simplex.push((x, fx));
    }

    let mut iters = 0;
    let mut converged = false;
    while iters < spec.max_iters {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        if has_converged(&simplex, spec) {
            converged = true;
            break;
        }
        iters += 1;

        let mut centroid = vec![0.0; n];
        for (x, _) in &simplex[..n] {
            for (c, xi) in centroid.iter_mut().zip(x) {
                *c += xi / n as f64;
            }
        }
        let worst = simplex[n].clone();
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&worst.0)
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };

        let xr = along(REFLECT);
        let fr = eval(&xr);
        if fr < simplex[0].1 {
            let xe = along(EXPAND);
            let fe = eval(&xe);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
            continue;
        }
        let (xc, fc) = if fr < worst.1 {
            let xc = along(REFLECT * CONTRACT);
            let fc = eval(&xc);
            (xc, fc)
        } else {
            let xc = along(-CONTRACT);
            let fc = eval(&xc);
            (xc, fc)
        };
        if fc < fr.min(worst.1) {
            simplex[n] = (xc, fc);
            continue;
        }
        let best = simplex[0].0.clone();
        for vertex in simplex.iter_mut().skip(1) {
            let x: Vec<f64> = best
                .iter()
                .zip(&vertex.0)
                .map(|(b, v)| b + SHRINK * (v - b))
                .collect();
            let fx = eval(&x);
            *vertex = (x, fx);
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, f) = simplex.swap_remove(0);
    Ok(Minimum {
        x,
        f,
        converged,
        iters,
        evals,
    })
}

fn has_converged(simplex: &[(Vec<f64>, f64)], spec: &OptimizerSpec) -> bool {
    let (best_x, best_f) = (&simplex[0].0, simplex[0].1);
    let f_spread = simplex
        .iter()
        .map(|(_, f)| (f - best_f).abs())
        .fold(0.0, f64::max);
    let x_spread = simplex
        .iter()
        .flat_map(|(x, _)| x.iter().zip(best_x).map(|(a, b)| (a - b).abs()))
        .fold(0.0, f64::max);
    let scale = best_f.abs().max(1.0);
    // values agreeing to within accumulated rounding of long sums leave no
    // usable descent information
    let flat = f_spread <= 1e3 * f64::EPSILON * scale;
    flat || (f_spread <= spec.f_tol * scale && x_spread <= spec.x_tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tight() -> OptimizerSpec {
        OptimizerSpec {
            initial_step: vec![0.5],
            f_tol: 1e-14,
            x_tol: 1e-9,
            max_iters: 20_000,
        }
    }

    #[test]
    fn quadratic_bowl_1d() {
        let spec = tight();
        let m = nelder_mead(|x| (x[0] - 3.0).powi(2), &[0.0], &spec).unwrap();
        assert!(m.converged);
        assert!((m.x[0] - 3.0).abs() < 1e-8, "{:?}", m);
    }

    #[test]
    fn convex_2d() {
        let m = nelder_mead(|x| x[0] * x[0] + x[1] * x[1], &[1.0, 1.0], &tight()).unwrap();
        assert!(m.converged);
        assert!(m.x[0].abs() < 1e-8 && m.x[1].abs() < 1e-8);
    }

    #[test]
    fn rosenbrock() {
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let m = nelder_mead(f, &[-1.2, 1.0], &tight()).unwrap();
        assert!(m.converged);
        assert!((m.x[0] - 1.0).abs() < 1e-4 && (m.x[1] - 1.0).abs() < 1e-4, "{:?}", m);
    }

    #[test]
    fn non_finite_start_is_an_error() {
        assert!(nelder_mead(|_| f64::NAN, &[0.0], &tight()).is_err());
        assert!(nelder_mead(|_| 1.0, &[], &tight()).is_err());
    }

    #[test]
    fn iteration_cap_reports_not_converged() {
        let spec = OptimizerSpec {
            max_iters: 3,
            ..tight()
        };
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let m = nelder_mead(f, &[-1.2, 1.0], &spec).unwrap();
        assert!(!m.converged);
        assert_eq!(m.iters, 3);
    }

    #[test]
    fn infeasible_region_is_avoided() {
        let f = |x: &[f64]| {
            if x[0] <= 0.0 {
                f64::NAN
            } else {
                x[0] - x[0].ln()
            }
        };
        let m = nelder_mead(f, &[3.0], &tight()).unwrap();
        assert!((m.x[0] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn deterministic_and_translation_invariant() {
        let spec = tight();
        let f = |x: &[f64]| (x[0] - 0.3).powi(2) + 2.0 * (x[1] + 1.7).powi(2) + 0.5 * x[0] * x[1];
        let a = nelder_mead(f, &[2.0, 2.0], &spec).unwrap();
        let b = nelder_mead(f, &[2.0, 2.0], &spec).unwrap();
        assert_eq!(a, b);
        let c = nelder_mead(|x| f(x) + 7.0, &[2.0, 2.0], &spec).unwrap();
        for (u, v) in a.x.iter().zip(&c.x) {
            assert!((u - v).abs() < 1e-6);
        }
    }
}
