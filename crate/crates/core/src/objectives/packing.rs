use crate::error::{Error, Result};
use crate::numerics::{Scalar, Vector};

/// Centers of disjoint radius-`r` balls packed inside `B(0, r_outer)`.
///
/// Centers are the points of the cubic lattice `2r Z^dim` that lie in
/// `B(0, r_outer - r)`, enumerated in lexicographic order of their integer
/// coordinates and truncated at `max_count`. Adjacent lattice points are
/// exactly `2r` apart, so the balls are disjoint, and every ball stays inside
/// the container. In high dimension the lattice holds fewer points than the
/// volumetric packing bound; callers that need the bound use
/// [`crate::bounds::packing_number`].
pub fn packing_centers<T: Scalar>(
    r_outer: T,
    r: T,
    dim: usize,
    max_count: usize,
) -> Result<Vec<Vector<T>>> {
    if !(r > T::zero()) || !r_outer.is_finite() || !r.is_finite() {
        return Err(Error::invalid("packing needs finite radii with r > 0"));
    }
    if r_outer <= r {
        return Err(Error::invalid(format!(
            "no ball of radius {r} fits in a container of radius {r_outer}"
        )));
    }
    if dim == 0 {
        return Err(Error::invalid("packing needs dim >= 1"));
    }
    let limit = r_outer - r;
    let pitch = r + r;
    let mut out = Vec::new();
    if max_count == 0 {
        return Ok(out);
    }
    let mut coords = vec![T::zero(); dim];
    descend(0, T::zero(), limit, pitch, &mut coords, &mut out, max_count);
    Ok(out)
}

fn descend<T: Scalar>(
    level: usize,
    used_sq: T,
    limit: T,
    pitch: T,
    coords: &mut [T],
    out: &mut Vec<Vector<T>>,
    max_count: usize,
) {
    if level == coords.len() {
        let center = Vector::from_vec(coords.to_vec());
        if center.norm() <= limit {
            out.push(center);
        }
        return;
    }
    let room = (limit * limit - used_sq).max(T::zero()).sqrt();
    let k_max = (room / pitch).floor().to_i64().unwrap_or(0);
    for k in -k_max..=k_max {
        if out.len() >= max_count {
            return;
        }
        let c = pitch * T::lit(k as f64);
        coords[level] = c;
        descend(
            level + 1,
            used_sq + c * c,
            limit,
            pitch,
            coords,
            out,
            max_count,
        );
    }
    coords[level] = T::zero();
}
