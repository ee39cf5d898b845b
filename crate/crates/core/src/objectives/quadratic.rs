use serde::{Deserialize, Serialize};

use super::{Objective, ObjectiveConstants};
use crate::error::{Error, Result};
use crate::numerics::{Scalar, Vector};

/// `U(x) = a |x|^2 / 2`; the target is N(0, I/a).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct QuadraticObjective<T = f64> {
    pub dim: usize,
    pub curvature: T,
}

pub fn quadratic_objective<T: Scalar>(dim: usize, curvature: T) -> Result<QuadraticObjective<T>> {
    if dim == 0 {
        return Err(Error::invalid("quadratic objective needs dim >= 1"));
    }
    if !(curvature > T::zero() && curvature.is_finite()) {
        return Err(Error::invalid("quadratic curvature must be positive"));
    }
    Ok(QuadraticObjective { dim, curvature })
}

impl<T: Scalar> Objective<T> for QuadraticObjective<T> {
    fn constants(&self) -> ObjectiveConstants {
        let a = self.curvature.as_f64();
        ObjectiveConstants {
            l: a,
            m: a,
            r: 0.0,
            dim: self.dim,
        }
    }

    fn value(&self, x: &Vector<T>) -> Result<T> {
        x.ensure_dim(self.dim)?;
        Ok(self.curvature * x.norm_sq() / T::lit(2.0))
    }

    fn grad(&self, x: &Vector<T>) -> Result<Vector<T>> {
        x.ensure_dim(self.dim)?;
        Ok(x.scaled(self.curvature))
    }
}
