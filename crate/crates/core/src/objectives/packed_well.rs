use serde::{Deserialize, Serialize};

use super::{packing_centers, Objective, ObjectiveConstants};
use crate::error::{Error, Result};
use crate::numerics::{RngStream, Scalar, Vector};

/// `2 pi^2 + pi`, the factor linking well depth, radius and smoothness:
/// a cosine well of radius `r` in an `L`-smooth function has depth
/// `L r^2 / (2 pi^2 + pi)`.
pub const WELL_SHAPE_FACTOR: f64 =
    2.0 * std::f64::consts::PI * std::f64::consts::PI + std::f64::consts::PI;

/// Well radius `r = sqrt((2 pi^2 + pi) eps / L)` giving depth `eps`.
pub fn well_radius_for_gap(l: f64, eps: f64) -> f64 {
    (WELL_SHAPE_FACTOR * eps / l).sqrt()
}

/// Hard instance for optimization: many candidate wells packed in
/// `B(0, R/2)`, only one of which (`secret_index`) is carved into `U`.
///
/// ```text
///        A cos(pi (|x - c|^2 - r^2) / r^2) - A   |x - c| < r
/// U(x) = 0                                      otherwise, |x| < R/2
///        m (|x| - R/2)^2                        |x| >= R/2
/// ```
///
/// with `c = centers[secret_index]` and `A = L r^2 / (4 pi^2 + 2 pi)`, so the
/// minimum is `-eps` at `c`. Outside the secret well every query in
/// `B(0, R/2)` returns zero value and zero derivatives, so queries reveal
/// nothing about which well is real.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct PackedWellObjective<T = f64> {
    pub constants: ObjectiveConstants,
    pub centers: Vec<Vector<T>>,
    pub secret_index: usize,
    pub well_radius: T,
    pub eps_gap: T,
}

/// Validity ceiling on `eps` for the lower-bound construction.
fn max_admissible_gap(l: f64, r: f64) -> f64 {
    l * r * r / (64.0 * WELL_SHAPE_FACTOR)
}

/// Builds the hard instance with a uniformly chosen secret well.
///
/// Requires `L >= 2m` and `eps <= L R^2 / (64 (2 pi^2 + pi))`.
pub fn hard_objective_new<T: Scalar>(
    l: f64,
    m: f64,
    r: f64,
    eps: f64,
    dim: usize,
    rng: &mut RngStream,
    max_wells: usize,
) -> Result<PackedWellObjective<T>> {
    if l < 2.0 * m {
        return Err(Error::invalid(format!(
            "hard instance needs L >= 2m, got L = {l}, m = {m}"
        )));
    }
    let ceiling = max_admissible_gap(l, r);
    if !(eps > 0.0 && eps <= ceiling) {
        return Err(Error::invalid(format!(
            "eps = {eps} outside the admissible range (0, {ceiling}]"
        )));
    }
    hard_objective_relaxed(l, m, r, eps, dim, rng, max_wells)
}

/// Same construction as [`hard_objective_new`] without the ceiling on `eps`.
///
/// Only requires that a well of the implied radius fits in `B(0, R/2)`.
/// Used for low-dimensional sampler checks where wide wells are wanted.
pub fn hard_objective_relaxed<T: Scalar>(
    l: f64,
    m: f64,
    r: f64,
    eps: f64,
    dim: usize,
    rng: &mut RngStream,
    max_wells: usize,
) -> Result<PackedWellObjective<T>> {
    let constants = ObjectiveConstants::new(l, m, r, dim)?;
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::invalid("eps must be positive"));
    }
    let well_radius = well_radius_for_gap(l, eps);
    let centers = packing_centers(T::lit(r / 2.0), T::lit(well_radius), dim, max_wells)?;
    if centers.is_empty() {
        return Err(Error::Infeasible("packing produced no well centers".into()));
    }
    let secret_index = rng.index(centers.len());
    let obj = PackedWellObjective {
        constants,
        centers,
        secret_index,
        well_radius: T::lit(well_radius),
        eps_gap: T::lit(eps),
    };
    Ok(obj)
}

impl<T: Scalar> PackedWellObjective<T> {
    pub fn secret_center(&self) -> &Vector<T> {
        &self.centers[self.secret_index]
    }

    fn half_radius(&self) -> T {
        T::lit(self.constants.r / 2.0)
    }

    fn amplitude(&self) -> T {
        let r = self.well_radius;
        T::lit(self.constants.l) * r * r / T::lit(2.0 * WELL_SHAPE_FACTOR)
    }

    /// Same wells with a different secret one.
    pub fn with_secret(&self, secret_index: usize) -> Result<Self> {
        if secret_index >= self.centers.len() {
            return Err(Error::invalid("secret index out of range"));
        }
        Ok(PackedWellObjective {
            secret_index,
            ..self.clone()
        })
    }

    /// Distance from `x` to the nearer of the two piece boundaries
    /// (`|x - c| = r` and `|x| = R/2`).
    pub fn boundary_distance(&self, x: &Vector<T>) -> T {
        let a = (x.dist(self.secret_center()) - self.well_radius).abs();
        let b = (x.norm() - self.half_radius()).abs();
        a.min(b)
    }

    /// Checks the geometric invariants: disjoint wells inside `B(0, R/2)`,
    /// a valid secret index and depth consistent with the radius.
    pub fn validate(&self) -> Result<()> {
        self.constants.validate()?;
        let n = self.centers.len();
        if n == 0 || self.secret_index >= n {
            return Err(Error::invalid("secret index must address a center"));
        }
        let r = self.well_radius;
        if !(r > T::zero()) {
            return Err(Error::invalid("well radius must be positive"));
        }
        let slack = T::lit(1e-12);
        let limit = self.half_radius() - r;
        for (i, c) in self.centers.iter().enumerate() {
            c.ensure_dim(self.constants.dim)?;
            if c.norm() > limit + slack {
                return Err(Error::invalid(format!("well {i} leaves B(0, R/2)")));
            }
        }
        let two_r = r + r;
        for i in 0..n {
            for j in i + 1..n {
                if self.centers[i].dist(&self.centers[j]) < two_r - slack {
                    return Err(Error::invalid(format!("wells {i} and {j} overlap")));
                }
            }
        }
        let expected = well_radius_for_gap(self.constants.l, self.eps_gap.as_f64());
        if (expected - r.as_f64()).abs() > 1e-9 * expected.max(1.0) {
            return Err(Error::invalid(
                "well radius inconsistent with eps_gap and L",
            ));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let obj: Self = serde_json::from_str(s)?;
        obj.validate()?;
        Ok(obj)
    }
}

impl<T: Scalar> Objective<T> for PackedWellObjective<T> {
    fn constants(&self) -> ObjectiveConstants {
        self.constants
    }

    fn value(&self, x: &Vector<T>) -> Result<T> {
        x.ensure_dim(self.constants.dim)?;
        let norm = x.norm();
        let half = self.half_radius();
        if norm >= half {
            let gap = norm - half;
            return Ok(T::lit(self.constants.m) * gap * gap);
        }
        let r = self.well_radius;
        let s = x.dist_sq(self.secret_center());
        if s < r * r {
            let a = self.amplitude();
            let phase = T::pi() * (s - r * r) / (r * r);
            Ok(a * phase.cos() - a)
        } else {
            Ok(T::zero())
        }
    }

    fn grad(&self, x: &Vector<T>) -> Result<Vector<T>> {
        x.ensure_dim(self.constants.dim)?;
        let norm = x.norm();
        let half = self.half_radius();
        if norm >= half {
            if norm == T::zero() {
                return Ok(Vector::zeros(x.dim()));
            }
            let coef = T::lit(2.0 * self.constants.m) * (T::one() - half / norm);
            return Ok(x.scaled(coef));
        }
        let r = self.well_radius;
        let c = self.secret_center();
        let s = x.dist_sq(c);
        if s < r * r {
            let a = self.amplitude();
            let r2 = r * r;
            let phase = T::pi() * (s - r2) / r2;
            let coef = -a * phase.sin() * (T::lit(2.0) * T::pi() / r2);
            Ok(x.sub(c).scaled(coef))
        } else {
            Ok(Vector::zeros(x.dim()))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{default_fd_step, finite_diff_grad, gaussian_vector};

    fn instance() -> PackedWellObjective<f64> {
        let mut rng = RngStream::new(5, 0);
        // L R^2 / (64 * 22.88) = 4 * 4 / 1464 ~ 0.0109
        hard_objective_new(4.0, 1.0, 2.0, 0.005, 2, &mut rng, 1000).unwrap()
    }

    #[test]
    fn well_bottom_is_minus_eps() {
        let obj = instance();
        let c = obj.secret_center().clone();
        assert!((obj.value(&c).unwrap() + 0.005).abs() < 1e-12);
        assert!(obj.grad(&c).unwrap().norm() == 0.0);
        obj.validate().unwrap();
    }

    #[test]
    fn plateau_is_flat() {
        let obj = instance();
        let other = (obj.secret_index + 1) % obj.centers.len();
        let x = obj.centers[other].clone();
        assert_eq!(obj.value(&x).unwrap(), 0.0);
        assert_eq!(obj.grad(&x).unwrap().norm(), 0.0);
    }

    #[test]
    fn sphere_boundary_belongs_to_quadratic_piece() {
        let obj = instance();
        let x = Vector::from_f64(&[1.0, 0.0]);
        assert_eq!(obj.value(&x).unwrap(), 0.0);
        assert_eq!(obj.grad(&x).unwrap().norm(), 0.0);
        let y = Vector::from_f64(&[0.0, 3.0]);
        assert!((obj.value(&y).unwrap() - 4.0).abs() < 1e-12);
        assert_eq!(
            obj.grad(&y).unwrap().as_slice(),
            &[0.0, 2.0 * 1.0 * (1.0 - 1.0 / 3.0) * 3.0]
        );
    }

    #[test]
    fn gap_ceiling_and_ratio_checks() {
        let mut rng = RngStream::new(1, 0);
        assert!(hard_objective_new::<f64>(4.0, 1.0, 2.0, 0.02, 2, &mut rng, 10).is_err());
        assert!(hard_objective_new::<f64>(1.5, 1.0, 2.0, 0.001, 2, &mut rng, 10).is_err());
        let relaxed = hard_objective_relaxed::<f64>(1.0, 0.25, 2.0, 0.02, 1, &mut rng, 10).unwrap();
        assert_eq!(relaxed.centers.len(), 1);
    }

    #[test]
    fn gradient_inside_well_matches_fd() {
        let obj = instance();
        let c = obj.secret_center().clone();
        let mut rng = RngStream::new(9, 1);
        for _ in 0..50 {
            let x = c.add(&gaussian_vector(&mut rng, 2, obj.well_radius * 0.4).unwrap());
            if obj.boundary_distance(&x) < 1e-3 {
                continue;
            }
            let g = obj.grad(&x).unwrap();
            let fd =
                finite_diff_grad(|v: &Vector<f64>| obj.value(v), &x, default_fd_step(&x)).unwrap();
            let err = g.sub(&fd).norm() / g.norm().max(1e-12);
            assert!(err < 1e-5, "rel err {err}");
        }
    }

    #[test]
    fn json_roundtrip_revalidates() {
        let obj = instance();
        let back = PackedWellObjective::<f64>::from_json(&obj.to_json().unwrap()).unwrap();
        assert_eq!(back, obj);
        let mut broken = obj.clone();
        broken.centers[0] = broken.centers[1].clone();
        assert!(PackedWellObjective::<f64>::from_json(&broken.to_json().unwrap()).is_err());
    }

    #[test]
    fn works_in_single_precision() {
        let mut rng = RngStream::new(5, 0);
        let obj: PackedWellObjective<f32> =
            hard_objective_new(4.0, 1.0, 2.0, 0.005, 2, &mut rng, 1000).unwrap();
        let v = obj.value(&obj.secret_center().clone()).unwrap();
        assert!((v + 0.005).abs() < 1e-6);
    }
}
