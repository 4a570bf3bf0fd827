use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{norm_inf, Lu, Matrix};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NewtonOutcome {
    pub iterations: usize,
    pub residual: f64,
    /// Converged by step stagnation at round-off level rather than by tolerance.
    pub stagnated: bool,
}

/// Damping-free Newton iteration on a square system. Accepts the iterate once
/// the residual ∞-norm is within `tol`, or once the update has shrunk to
/// round-off while the residual is within `1e-8` relative to the state.
pub(crate) fn newton<T: Scalar>(
    mut eval: impl FnMut(&[T]) -> (Vec<T>, Matrix<T>),
    x: &mut [T],
    tol: T,
    max_iterations: usize,
) -> Result<NewtonOutcome> {
    let (mut r, mut jac) = eval(x);
    let mut res = norm_inf(&r);
    let mut iterations = 0;
    loop {
        if !res.is_finite() {
            return Err(Error::Divergence(format!("non-finite residual after {iterations} Newton iterations")));
        }
        if res <= tol {
            return Ok(NewtonOutcome {
                iterations,
                residual: res.as_f64(),
                stagnated: false,
            });
        }
        if iterations == max_iterations {
            return Err(Error::Convergence(format!(
                "Newton did not converge in {max_iterations} iterations (residual {})",
                res.as_f64()
            )));
        }
        let dx = Lu::new(jac)?.solve(&r);
        for (xi, d) in x.iter_mut().zip(&dx) {
            *xi -= *d;
        }
        iterations += 1;
        (r, jac) = eval(x);
        res = norm_inf(&r);
        let xs = norm_inf(x);
        let tiny_step = norm_inf(&dx) <= T::lit(64.0) * T::epsilon() * (T::one() + xs);
        if tiny_step && res <= T::lit(1e-8) * (T::one() + xs) {
            return Ok(NewtonOutcome {
                iterations,
                residual: res.as_f64(),
                stagnated: res > tol,
            });
        }
    }
}
