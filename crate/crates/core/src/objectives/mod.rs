//! Target functions `U` and their gradients.
//!
//! Every objective implements [`Objective`]; the sampling target is the
//! density proportional to `exp(-U)`.

mod gmm;
mod packed_well;
mod packing;
mod quadratic;
mod tempered;

pub use gmm::{fact_d1_weight_coeff, GmmPosterior, Responsibilities};
pub use packed_well::{
    hard_objective_new, hard_objective_relaxed, well_radius_for_gap, PackedWellObjective,
    WELL_SHAPE_FACTOR,
};
pub use packing::packing_centers;
pub use quadratic::{quadratic_objective, QuadraticObjective};
pub use tempered::{temper, TemperedObjective};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{Scalar, Vector};

/// Smoothness / local-nonconvexity class of an objective.
///
/// `U` is `L`-smooth everywhere and `m`-strongly convex outside the ball of
/// radius `R`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveConstants {
    #[serde(rename = "L")]
    pub l: f64,
    pub m: f64,
    #[serde(rename = "R")]
    pub r: f64,
    pub dim: usize,
}

impl ObjectiveConstants {
    pub fn new(l: f64, m: f64, r: f64, dim: usize) -> Result<Self> {
        let c = ObjectiveConstants { l, m, r, dim };
        c.validate()?;
        if l < 2.0 * m {
            log::warn!(
                "L = {l} is below 2m = {}; lower-bound constructions assume L >= 2m",
                2.0 * m
            );
        }
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.m > 0.0 && self.m.is_finite()) {
            return Err(Error::invalid(format!(
                "m must be positive, got {}",
                self.m
            )));
        }
        if !(self.l >= self.m && self.l.is_finite()) {
            return Err(Error::invalid(format!(
                "L must satisfy L >= m > 0, got L = {}, m = {}",
                self.l, self.m
            )));
        }
        if !(self.r >= 0.0 && self.r.is_finite()) {
            return Err(Error::invalid(format!("R must be >= 0, got {}", self.r)));
        }
        if self.dim == 0 {
            return Err(Error::invalid("dim must be positive"));
        }
        Ok(())
    }

    /// `kappa = L / m`.
    pub fn condition_number(&self) -> f64 {
        self.l / self.m
    }
}

/// A differentiable potential `U: R^dim -> R`.
pub trait Objective<T: Scalar = f64> {
    fn constants(&self) -> ObjectiveConstants;

    fn dim(&self) -> usize {
        self.constants().dim
    }

    fn value(&self, x: &Vector<T>) -> Result<T>;

    fn grad(&self, x: &Vector<T>) -> Result<Vector<T>>;

    fn value_and_grad(&self, x: &Vector<T>) -> Result<(T, Vector<T>)> {
        Ok((self.value(x)?, self.grad(x)?))
    }
}

impl<T: Scalar, O: Objective<T> + ?Sized> Objective<T> for &O {
    fn constants(&self) -> ObjectiveConstants {
        (**self).constants()
    }
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn value(&self, x: &Vector<T>) -> Result<T> {
        (**self).value(x)
    }
    fn grad(&self, x: &Vector<T>) -> Result<Vector<T>> {
        (**self).grad(x)
    }
    fn value_and_grad(&self, x: &Vector<T>) -> Result<(T, Vector<T>)> {
        (**self).value_and_grad(x)
    }
}

impl<T: Scalar, O: Objective<T> + ?Sized> Objective<T> for Box<O> {
    fn constants(&self) -> ObjectiveConstants {
        (**self).constants()
    }
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn value(&self, x: &Vector<T>) -> Result<T> {
        (**self).value(x)
    }
    fn grad(&self, x: &Vector<T>) -> Result<Vector<T>> {
        (**self).grad(x)
    }
    fn value_and_grad(&self, x: &Vector<T>) -> Result<(T, Vector<T>)> {
        (**self).value_and_grad(x)
    }
}

/// An objective with its constants computed once. Useful when
/// [`Objective::constants`] is expensive, as for [`GmmPosterior`].
#[derive(Debug, Clone)]
pub struct Pinned<O> {
    pub inner: O,
    constants: ObjectiveConstants,
}

impl<O> Pinned<O> {
    pub fn new<T: Scalar>(inner: O) -> Self
    where
        O: Objective<T>,
    {
        let constants = inner.constants();
        Pinned { inner, constants }
    }

    /// Pins caller-supplied constants instead of the objective's own.
    pub fn with_constants(inner: O, constants: ObjectiveConstants) -> Self {
        Pinned { inner, constants }
    }
}

impl<T: Scalar, O: Objective<T>> Objective<T> for Pinned<O> {
    fn constants(&self) -> ObjectiveConstants {
        self.constants
    }
    fn dim(&self) -> usize {
        self.constants.dim
    }
    fn value(&self, x: &Vector<T>) -> Result<T> {
        self.inner.value(x)
    }
    fn grad(&self, x: &Vector<T>) -> Result<Vector<T>> {
        self.inner.grad(x)
    }
    fn value_and_grad(&self, x: &Vector<T>) -> Result<(T, Vector<T>)> {
        self.inner.value_and_grad(x)
    }
}
