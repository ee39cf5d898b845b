use crate::error::{Error, Result};
use crate::numerics::{RngStream, Scalar, Vector};
use crate::objectives::{GmmPosterior, Responsibilities};

/// Current EM iterate. One E+M sweep counts as one gradient-query
/// equivalent: it touches the same `N * M` kernel values as one gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct EmState<T = f64> {
    pub mu: Vector<T>,
    pub iteration: u64,
    pub gradient_query_equivalents: u64,
}

/// E-step: responsibilities at `mu`.
pub fn em_e_step<T: Scalar>(post: &GmmPosterior<T>, mu: &Vector<T>) -> Result<Responsibilities<T>> {
    post.responsibilities(mu)
}

/// M-step: each mean becomes the responsibility-weighted mean of the data.
///
/// A component whose responsibility row sums to zero keeps its position
/// from `current`; its index is returned in the dormant list.
pub fn em_m_step<T: Scalar>(
    post: &GmmPosterior<T>,
    gamma: &Responsibilities<T>,
    current: &Vector<T>,
) -> Result<(Vector<T>, Vec<usize>)> {
    if gamma.mixtures != post.mixtures || gamma.n_points != post.n_points() {
        return Err(Error::DimensionMismatch {
            expected: post.mixtures * post.n_points(),
            got: gamma.mixtures * gamma.n_points,
        });
    }
    current.ensure_dim(post.param_dim())?;
    let d = post.dim;
    let mut next = current.clone();
    let mut dormant = Vec::new();
    for i in 0..post.mixtures {
        let mut total = T::zero();
        let mut acc = vec![T::zero(); d];
        for (n, &g) in gamma.row(i).iter().enumerate() {
            total = total + g;
            for (a, &y) in acc.iter_mut().zip(post.data[n].iter()) {
                *a = *a + g * y;
            }
        }
        if total > T::zero() {
            for (k, a) in acc.into_iter().enumerate() {
                next[i * d + k] = a / total;
            }
        } else {
            dormant.push(i);
        }
    }
    Ok((next, dormant))
}

/// Result of one fused E+M sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct EmSweep<T = f64> {
    /// `U` at the input point (a by-product of the E-step).
    pub value: T,
    pub next: Vector<T>,
    pub dormant: Vec<usize>,
}

/// E-step and M-step in one pass over the data, without materializing the
/// responsibility matrix. Produces the same bits as [`em_e_step`] followed by
/// [`em_m_step`].
pub fn em_sweep<T: Scalar>(post: &GmmPosterior<T>, mu: &Vector<T>) -> Result<EmSweep<T>> {
    mu.ensure_dim(post.param_dim())?;
    mu.ensure_finite("parameter point")?;
    let d = post.dim;
    let m = post.mixtures;
    let mut totals = vec![T::zero(); m];
    let mut sums = vec![T::zero(); m * d];
    let mut data_term = T::zero();
    let data = &post.data;
    post.for_each_point(mu, |n, gamma, lse| {
        data_term = data_term - lse;
        let y = data[n].as_slice();
        for (i, &g) in gamma.iter().enumerate() {
            totals[i] = totals[i] + g;
            let s = &mut sums[i * d..(i + 1) * d];
            for (a, &yk) in s.iter_mut().zip(y) {
                *a = *a + g * yk;
            }
        }
    });
    let mut next = mu.clone();
    let mut dormant = Vec::new();
    for i in 0..m {
        if totals[i] > T::zero() {
            for k in 0..d {
                next[i * d + k] = sums[i * d + k] / totals[i];
            }
        } else {
            dormant.push(i);
        }
    }
    Ok(EmSweep {
        value: post.prior_value(mu) + data_term,
        next,
        dormant,
    })
}

/// Initial means at `M` distinct data points drawn uniformly without
/// replacement, each perturbed by `jitter * N(0, I)`.
pub fn em_init_from_data<T: Scalar>(
    post: &GmmPosterior<T>,
    rng: &mut RngStream,
    jitter: f64,
) -> Result<Vector<T>> {
    let (idx, mu) = init_with_indices(post, rng, jitter)?;
    debug_assert_eq!(idx.len(), post.mixtures);
    Ok(mu)
}

/// As [`em_init_from_data`], also returning the chosen data indices.
pub(crate) fn init_with_indices<T: Scalar>(
    post: &GmmPosterior<T>,
    rng: &mut RngStream,
    jitter: f64,
) -> Result<(Vec<usize>, Vector<T>)> {
    let n = post.n_points();
    let m = post.mixtures;
    if n < m {
        return Err(Error::invalid(format!(
            "need N >= M data points, got N = {n}, M = {m}"
        )));
    }
    if !(jitter >= 0.0) {
        return Err(Error::invalid("jitter must be >= 0"));
    }
    // partial Fisher-Yates
    let mut pool: Vec<usize> = (0..n).collect();
    for i in 0..m {
        let j = i + rng.index(n - i);
        pool.swap(i, j);
    }
    let chosen: Vec<usize> = pool[..m].to_vec();
    let mut mu = Vec::with_capacity(m * post.dim);
    for &idx in &chosen {
        for &y in post.data[idx].iter() {
            let noise = if jitter > 0.0 {
                rng.gaussian(T::lit(jitter))
            } else {
                T::zero()
            };
            mu.push(y + noise);
        }
    }
    Ok((chosen, Vector::from_vec(mu)))
}

/// Trajectory of [`run_em`].
#[derive(Debug, Clone, PartialEq)]
pub struct EmRun<T = f64> {
    pub iterations: u64,
    pub gradient_query_equivalents: u64,
    pub converged_at: Option<u64>,
    pub final_state: EmState<T>,
    /// `U(mu^(t))` for `t = 0..=iterations`.
    pub values: Vec<T>,
    /// Per-iteration movement `|mu_i^(t+1) - mu_i^(t)|` of every component.
    pub movement: Vec<Vec<T>>,
    /// Iterations at which some component was dormant.
    pub dormant_iterations: Vec<u64>,
}

/// Runs EM from `mu0` for at most `max_iters` sweeps, calling
/// `stop(state, U(mu^(t)))` after every sweep.
pub fn run_em<T, F>(
    post: &GmmPosterior<T>,
    mu0: Vector<T>,
    mut stop: F,
    max_iters: u64,
) -> Result<EmRun<T>>
where
    T: Scalar,
    F: FnMut(&EmState<T>, T) -> bool,
{
    let d = post.dim;
    let mut state = EmState {
        mu: mu0,
        iteration: 0,
        gradient_query_equivalents: 0,
    };
    let mut values = Vec::new();
    let mut movement = Vec::new();
    let mut dormant_iterations = Vec::new();
    let mut converged_at = None;
    loop {
        let sweep =
            em_sweep(post, &state.mu).map_err(|e| Error::at_step(state.iteration + 1, e))?;
        values.push(sweep.value);
        if state.iteration > 0 && stop(&state, sweep.value) {
            converged_at = Some(state.iteration);
            break;
        }
        if state.iteration >= max_iters {
            break;
        }
        movement.push(
            (0..post.mixtures)
                .map(|i| {
                    crate::numerics::dist_sq(
                        &sweep.next.as_slice()[i * d..(i + 1) * d],
                        &state.mu.as_slice()[i * d..(i + 1) * d],
                    )
                    .sqrt()
                })
                .collect(),
        );
        if !sweep.dormant.is_empty() {
            dormant_iterations.push(state.iteration + 1);
        }
        state.mu = sweep.next;
        state.iteration += 1;
        state.gradient_query_equivalents += 1;
    }
    Ok(EmRun {
        iterations: state.iteration,
        gradient_query_equivalents: state.gradient_query_equivalents,
        converged_at,
        final_state: state,
        values,
        movement,
        dormant_iterations,
    })
}
