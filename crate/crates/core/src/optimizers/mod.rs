//! Gradient descent and EM for the Gaussian-mixture posterior.

mod em;

pub use em::{em_e_step, em_init_from_data, em_m_step, em_sweep, run_em, EmRun, EmState, EmSweep};

use crate::error::{Error, Result};
use crate::numerics::{Scalar, Vector};
use crate::objectives::Objective;

/// `x - h grad U(x)`.
pub fn gd_step<T: Scalar, O: Objective<T> + ?Sized>(
    obj: &O,
    x: &Vector<T>,
    h: f64,
) -> Result<Vector<T>> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::invalid(format!(
            "step size must be positive, got {h}"
        )));
    }
    let g = obj.grad(x)?;
    g.ensure_finite("gradient")?;
    let mut next = x.clone();
    next.axpy(T::lit(-h), &g);
    Ok(next)
}

/// Outcome of [`run_gd`].
#[derive(Debug, Clone, PartialEq)]
pub struct GdRun<T = f64> {
    pub iterations: u64,
    pub gradient_queries: u64,
    pub converged_at: Option<u64>,
    pub position: Vector<T>,
    /// `U` at every iterate, starting with `x0`.
    pub values: Vec<T>,
}

/// Plain gradient descent with a constant step until `stop(iteration, x, U(x))`
/// fires or `max_iters` steps are taken.
pub fn run_gd<T, O, F>(
    obj: &O,
    x0: Vector<T>,
    h: f64,
    max_iters: u64,
    mut stop: F,
) -> Result<GdRun<T>>
where
    T: Scalar,
    O: Objective<T> + ?Sized,
    F: FnMut(u64, &Vector<T>, T) -> bool,
{
    let mut x = x0;
    let mut values = vec![obj.value(&x)?];
    let mut converged_at = None;
    let mut it = 0;
    while it < max_iters {
        x = gd_step(obj, &x, h).map_err(|e| Error::at_step(it + 1, e))?;
        it += 1;
        let v = obj.value(&x)?;
        values.push(v);
        if stop(it, &x, v) {
            converged_at = Some(it);
            break;
        }
    }
    Ok(GdRun {
        iterations: it,
        gradient_queries: it,
        converged_at,
        position: x,
        values,
    })
}
