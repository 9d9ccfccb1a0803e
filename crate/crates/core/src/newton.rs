//! Damped Newton minimisation for smooth strictly convex objectives.
//!
//! Shared by Fenchel conjugation and moment inversion; both reduce to
//! minimising `f(x) - <target, x>` for a convex `f`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NewtonConfig {
    /// Stop when the gradient norm falls to this level.
    pub grad_tol: f64,
    /// Acceptance level for moment residuals reported by callers.
    pub residual_tol: f64,
    pub max_iter: usize,
    /// Iterates leaving this ball count as divergence.
    pub divergence_radius: f64,
    /// Sufficient-decrease constant of the Armijo test.
    pub armijo: f64,
    pub backtrack: f64,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        NewtonConfig {
            grad_tol: 1e-10,
            residual_tol: 1e-9,
            max_iter: 200,
            divergence_radius: 1e6,
            armijo: 1e-4,
            backtrack: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NewtonError {
    #[error("iterates diverged (|x| = {norm:.3e} after {iterations} iterations)")]
    Divergence { iterations: usize, norm: f64 },
    #[error("Hessian not positive definite at iteration {iteration}")]
    SingularHessian { iteration: usize },
    #[error("no convergence after {iterations} iterations (gradient norm {grad_norm:.3e})")]
    MaxIterations { iterations: usize, grad_norm: f64 },
    #[error("line search stalled at gradient norm {grad_norm:.3e}")]
    Stalled { grad_norm: f64 },
}

/// Smooth objective. `value` may return `+inf` outside the domain; the line
/// search backtracks away from such points.
pub trait Objective {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64]) -> Vec<f64>;
    fn hessian(&self, x: &[f64]) -> DMatrix<f64>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct NewtonOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub grad_norm: f64,
    pub iterations: usize,
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn minimize<O: Objective + ?Sized>(
    obj: &O,
    x0: &[f64],
    cfg: &NewtonConfig,
) -> Result<NewtonOutcome, NewtonError> {
    let mut x = x0.to_vec();
    let mut fx = obj.value(&x);
    for it in 0..=cfg.max_iter {
        let g = obj.gradient(&x);
        let gn = norm(&g);
        if gn <= cfg.grad_tol {
            // one undamped polishing step: near-flat directions turn a small
            // gradient into a comparatively large error in x
            if let Some((xp, fp, gp)) = polish(obj, &x, &g) {
                if gp <= gn {
                    return Ok(NewtonOutcome {
                        x: xp,
                        value: fp,
                        grad_norm: gp,
                        iterations: it,
                    });
                }
            }
            return Ok(NewtonOutcome {
                x,
                value: fx,
                grad_norm: gn,
                iterations: it,
            });
        }
        if it == cfg.max_iter {
            return Err(NewtonError::MaxIterations {
                iterations: it,
                grad_norm: gn,
            });
        }
        let h = obj.hessian(&x);
        let chol = h
            .cholesky()
            .ok_or(NewtonError::SingularHessian { iteration: it })?;
        let step = chol.solve(&(-DVector::from_column_slice(&g)));
        if step.iter().any(|s| !s.is_finite()) {
            return Err(NewtonError::SingularHessian { iteration: it });
        }
        let slope: f64 = g.iter().zip(step.iter()).map(|(a, b)| a * b).sum();

        let mut t = 1.0;
        let slack = 8.0 * f64::EPSILON * fx.abs().max(1.0);
        let accepted = loop {
            let trial: Vec<f64> = x.iter().zip(step.iter()).map(|(a, b)| a + t * b).collect();
            if norm(&trial) > cfg.divergence_radius {
                return Err(NewtonError::Divergence {
                    iterations: it + 1,
                    norm: norm(&trial),
                });
            }
            let ft = obj.value(&trial);
            if ft.is_finite() && ft <= fx + cfg.armijo * t * slope + slack {
                break Some((trial, ft));
            }
            t *= cfg.backtrack;
            if t < 1e-20 {
                break None;
            }
        };
        match accepted {
            Some((trial, ft)) => {
                x = trial;
                fx = ft;
            }
            None => return Err(NewtonError::Stalled { grad_norm: gn }),
        }
    }
    unreachable!("loop returns on its last iteration")
}

fn polish<O: Objective + ?Sized>(obj: &O, x: &[f64], g: &[f64]) -> Option<(Vec<f64>, f64, f64)> {
    let step = obj.hessian(x).cholesky()?.solve(&(-DVector::from_column_slice(g)));
    let xp: Vec<f64> = x.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
    let fp = obj.value(&xp);
    if !fp.is_finite() || xp.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let gp = norm(&obj.gradient(&xp));
    Some((xp, fp, gp))
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Quartic;

    impl Objective for Quartic {
        fn dim(&self) -> usize {
            1
        }
        fn value(&self, x: &[f64]) -> f64 {
            (x[0] - 1.0).powi(4) + (x[0] - 1.0).powi(2)
        }
        fn gradient(&self, x: &[f64]) -> Vec<f64> {
            vec![4.0 * (x[0] - 1.0).powi(3) + 2.0 * (x[0] - 1.0)]
        }
        fn hessian(&self, x: &[f64]) -> DMatrix<f64> {
            DMatrix::from_element(1, 1, 12.0 * (x[0] - 1.0).powi(2) + 2.0)
        }
    }

    struct Linear;

    impl Objective for Linear {
        fn dim(&self) -> usize {
            1
        }
        fn value(&self, x: &[f64]) -> f64 {
            // softplus(x) - 1.5 x, unbounded below
            (1.0 + x[0].exp()).ln() - 1.5 * x[0]
        }
        fn gradient(&self, x: &[f64]) -> Vec<f64> {
            vec![1.0 / (1.0 + (-x[0]).exp()) - 1.5]
        }
        fn hessian(&self, x: &[f64]) -> DMatrix<f64> {
            let s = 1.0 / (1.0 + (-x[0]).exp());
            DMatrix::from_element(1, 1, s * (1.0 - s))
        }
    }

    #[test]
    fn converges_on_quartic() {
        let out = minimize(&Quartic, &[10.0], &NewtonConfig::default()).unwrap();
        assert!((out.x[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn unbounded_objective_diverges() {
        let err = minimize(&Linear, &[0.0], &NewtonConfig::default()).unwrap_err();
        assert!(matches!(err, NewtonError::Divergence { .. }), "{err:?}");
    }
}
