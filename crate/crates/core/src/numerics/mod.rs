//! Dense vectors, seeded randomness and small numerical helpers shared by
//! every other module.

mod rng;
mod scalar;
mod vector;

pub use rng::RngStream;
pub use scalar::Scalar;
pub use vector::{dist_sq, Vector};

use crate::error::{Error, Result};

/// `dim` i.i.d. draws from N(0, std²).
pub fn gaussian_vector<T: Scalar>(rng: &mut RngStream, dim: usize, std: T) -> Result<Vector<T>> {
    if dim == 0 {
        return Err(Error::invalid("gaussian_vector needs dim >= 1"));
    }
    if !(std >= T::zero()) {
        return Err(Error::invalid("gaussian_vector needs std >= 0"));
    }
    Ok((0..dim).map(|_| rng.gaussian(std)).collect())
}

/// Default central-difference step: `1e-5 * max(1, |x|_inf)`.
pub fn default_fd_step<T: Scalar>(x: &Vector<T>) -> T {
    T::lit(1e-5) * x.norm_inf().max(T::one())
}

/// Central finite-difference gradient of `f` at `x`.
///
/// Evaluates `f` at `x ± eps e_j` for every coordinate. Any non-finite
/// evaluation is reported as an error naming the coordinate.
pub fn finite_diff_grad<T, F>(mut f: F, x: &Vector<T>, eps: T) -> Result<Vector<T>>
where
    T: Scalar,
    F: FnMut(&Vector<T>) -> Result<T>,
{
    if !(eps > T::zero()) {
        return Err(Error::invalid("finite_diff_grad needs eps > 0"));
    }
    let two_eps = eps + eps;
    let mut probe = x.clone();
    let mut grad = Vector::zeros(x.dim());
    for j in 0..x.dim() {
        let orig = probe[j];
        probe[j] = orig + eps;
        let up = f(&probe)?;
        probe[j] = orig - eps;
        let down = f(&probe)?;
        probe[j] = orig;
        if !up.is_finite() || !down.is_finite() {
            return Err(Error::NonFinite(format!(
                "objective is non-finite near coordinate {j}"
            )));
        }
        grad[j] = (up - down) / two_eps;
    }
    Ok(grad)
}

/// `log(sum(exp(values)))`, shifted by the maximum so it stays finite
/// whenever the maximum is finite.
pub fn log_sum_exp<T: Scalar>(values: &[T]) -> Result<T> {
    if values.is_empty() {
        return Err(Error::invalid("log_sum_exp of an empty sequence"));
    }
    Ok(log_sum_exp_nonempty(values))
}

#[inline]
fn log_sum_exp_nonempty<T: Scalar>(values: &[T]) -> T {
    let max = values
        .iter()
        .copied()
        .fold(T::neg_infinity(), |a, b| a.max(b));
    if !max.is_finite() {
        return max;
    }
    let sum: T = values.iter().map(|&v| (v - max).exp()).sum();
    max + sum.ln()
}
