use super::{Objective, ObjectiveConstants};
use crate::error::{Error, Result};
use crate::numerics::{Scalar, Vector};

/// `beta * U` for a base potential `U`, targeting `exp(-beta U)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TemperedObjective<O> {
    pub base: O,
    pub beta: f64,
}

pub fn temper<O>(base: O, beta: f64) -> Result<TemperedObjective<O>> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::invalid(format!("beta must be positive, got {beta}")));
    }
    Ok(TemperedObjective { base, beta })
}

impl<T: Scalar, O: Objective<T>> Objective<T> for TemperedObjective<O> {
    fn constants(&self) -> ObjectiveConstants {
        let c = self.base.constants();
        ObjectiveConstants {
            l: c.l * self.beta,
            m: c.m * self.beta,
            r: c.r,
            dim: c.dim,
        }
    }

    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn value(&self, x: &Vector<T>) -> Result<T> {
        Ok(self.base.value(x)? * T::lit(self.beta))
    }

    fn grad(&self, x: &Vector<T>) -> Result<Vector<T>> {
        Ok(self.base.grad(x)?.scaled(T::lit(self.beta)))
    }

    fn value_and_grad(&self, x: &Vector<T>) -> Result<(T, Vector<T>)> {
        let (v, g) = self.base.value_and_grad(x)?;
        let b = T::lit(self.beta);
        Ok((v * b, g.scaled(b)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{gaussian_vector, RngStream};
    use crate::objectives::quadratic_objective;

    #[test]
    fn unit_beta_is_identity() {
        let q = quadratic_objective(3, 1.7f64).unwrap();
        let t = temper(q.clone(), 1.0).unwrap();
        let mut rng = RngStream::new(11, 0);
        for _ in 0..20 {
            let x = gaussian_vector(&mut rng, 3, 2.0).unwrap();
            assert_eq!(t.value(&x).unwrap(), q.value(&x).unwrap());
            assert_eq!(t.grad(&x).unwrap(), q.grad(&x).unwrap());
        }
    }

    #[test]
    fn beta_two_on_half_norm_sq() {
        let t = temper(quadratic_objective(2, 1.0f64).unwrap(), 2.0).unwrap();
        let x = Vector::from_f64(&[1.0, 0.0]);
        assert_eq!(t.value(&x).unwrap(), 1.0);
        assert_eq!(t.grad(&x).unwrap().as_slice(), &[2.0, 0.0]);
        let c = t.constants();
        assert_eq!((c.l, c.m, c.r), (2.0, 2.0, 0.0));
    }

    #[test]
    fn rejects_nonpositive_beta() {
        let q = quadratic_objective(1, 1.0f64).unwrap();
        assert!(temper(q.clone(), 0.0).is_err());
        assert!(temper(q, -2.0).is_err());
    }
}
