use serde::{Deserialize, Serialize};

use super::{Objective, ObjectiveConstants};
use crate::error::{Error, Result};
use crate::numerics::{dist_sq, Scalar, Vector};

/// Negative log-posterior of the means of an isotropic Gaussian mixture with
/// a constant background component.
///
/// With `W[i][n] = c * exp(-|y_n - mu_i|^2 / (2 sigma^2))`:
///
/// ```text
/// U(mu) = m (|mu|_F - sqrt(M) R)^2 [|mu|_F >= sqrt(M) R]
///         - sum_n log(sum_i W[i][n] + C)
/// ```
///
/// The parameter point packs the `M` means one after another, so `mu_i`
/// occupies entries `i*d .. (i+1)*d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct GmmPosterior<T = f64> {
    pub data: Vec<Vector<T>>,
    pub sigma: T,
    pub mixtures: usize,
    pub weight_coeff: T,
    pub constant_component: T,
    pub prior_m: T,
    pub prior_r: T,
    pub dim: usize,
}

/// Responsibilities `gamma[i][n]`, stored component-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Responsibilities<T = f64> {
    pub mixtures: usize,
    pub n_points: usize,
    values: Vec<T>,
}

impl<T: Scalar> Responsibilities<T> {
    pub fn new(mixtures: usize, n_points: usize, values: Vec<T>) -> Result<Self> {
        if values.len() != mixtures * n_points {
            return Err(Error::DimensionMismatch {
                expected: mixtures * n_points,
                got: values.len(),
            });
        }
        Ok(Responsibilities {
            mixtures,
            n_points,
            values,
        })
    }

    pub fn get(&self, i: usize, n: usize) -> T {
        self.values[i * self.n_points + n]
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.values[i * self.n_points..(i + 1) * self.n_points]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        let n = self.n_points;
        &mut self.values[i * n..(i + 1) * n]
    }

    pub fn column_sum(&self, n: usize) -> T {
        (0..self.mixtures).map(|i| self.get(i, n)).sum()
    }

    pub fn row_sum(&self, i: usize) -> T {
        self.row(i).iter().copied().sum()
    }
}

impl<T: Scalar> GmmPosterior<T> {
    /// Validating constructor.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        data: Vec<Vector<T>>,
        sigma: T,
        mixtures: usize,
        weight_coeff: T,
        constant_component: T,
        prior_m: T,
        prior_r: T,
    ) -> Result<Self> {
        let dim = data.first().map(|y| y.dim()).unwrap_or(0);
        let post = GmmPosterior {
            data,
            sigma,
            mixtures,
            weight_coeff,
            constant_component,
            prior_m,
            prior_r,
            dim,
        };
        post.validate()?;
        Ok(post)
    }

    pub fn validate(&self) -> Result<()> {
        if self.data.is_empty() || self.dim == 0 {
            return Err(Error::invalid(
                "posterior needs at least one data point of positive dimension",
            ));
        }
        for y in &self.data {
            y.ensure_dim(self.dim)?;
            y.ensure_finite("data point")?;
        }
        if !(self.sigma > T::zero() && self.sigma.is_finite()) {
            return Err(Error::invalid("sigma must be positive"));
        }
        if self.mixtures == 0 {
            return Err(Error::invalid("need at least one mixture component"));
        }
        if !(self.weight_coeff > T::zero() && self.weight_coeff.is_finite()) {
            return Err(Error::invalid("weight coefficient must be positive"));
        }
        if !(self.constant_component >= T::zero() && self.constant_component.is_finite()) {
            return Err(Error::invalid("constant component must be >= 0"));
        }
        if !(self.prior_m > T::zero() && self.prior_r > T::zero()) {
            return Err(Error::invalid("prior parameters must be positive"));
        }
        Ok(())
    }

    pub fn n_points(&self) -> usize {
        self.data.len()
    }

    /// Length of a parameter point, `d * M`.
    pub fn param_dim(&self) -> usize {
        self.dim * self.mixtures
    }

    /// `mu` with its components reordered by their projection onto the
    /// fixed direction `(1, 1/2, 1/3, ...)`. Invariant under relabeling of
    /// the components, so means of it are comparable across label modes.
    pub fn canonical(&self, mu: &[f64]) -> Vec<f64> {
        let d = self.dim;
        let key = |i: usize| -> f64 {
            mu[i * d..(i + 1) * d]
                .iter()
                .enumerate()
                .map(|(k, v)| v / (k + 1) as f64)
                .sum()
        };
        let mut order: Vec<usize> = (0..self.mixtures).collect();
        order.sort_by(|&a, &b| key(a).total_cmp(&key(b)).then(a.cmp(&b)));
        order
            .iter()
            .flat_map(|&i| mu[i * d..(i + 1) * d].iter().copied())
            .collect()
    }

    pub fn component<'a>(&self, mu: &'a Vector<T>, i: usize) -> &'a [T] {
        &mu.as_slice()[i * self.dim..(i + 1) * self.dim]
    }

    fn check_point(&self, mu: &Vector<T>) -> Result<()> {
        mu.ensure_dim(self.param_dim())?;
        mu.ensure_finite("parameter point")
    }

    fn prior_radius(&self) -> T {
        T::lit(self.mixtures as f64).sqrt() * self.prior_r
    }

    /// Prior contribution `m (|mu|_F - sqrt(M) R)^2` outside the flat region.
    pub fn prior_value(&self, mu: &Vector<T>) -> T {
        let gap = mu.norm() - self.prior_radius();
        if gap >= T::zero() {
            self.prior_m * gap * gap
        } else {
            T::zero()
        }
    }

    fn add_prior_grad(&self, mu: &Vector<T>, grad: &mut Vector<T>) {
        let norm = mu.norm();
        let gap = norm - self.prior_radius();
        if gap > T::zero() && norm > T::zero() {
            grad.axpy(T::lit(2.0) * self.prior_m * gap / norm, mu);
        }
    }

    /// One pass over the data. For each point calls `visit(n, gamma, lse)`
    /// with the responsibilities `gamma[i] = W[i][n] / (sum_k W[k][n] + C)`
    /// and `lse = log(sum_i W[i][n] + C)`.
    #[inline]
    pub(crate) fn for_each_point<F>(&self, mu: &Vector<T>, mut visit: F)
    where
        F: FnMut(usize, &[T], T),
    {
        let m = self.mixtures;
        let inv_two_var = T::one() / (T::lit(2.0) * self.sigma * self.sigma);
        let log_c = self.weight_coeff.ln();
        let has_const = self.constant_component > T::zero();
        let log_const = if has_const {
            self.constant_component.ln()
        } else {
            T::neg_infinity()
        };
        let mut terms: Vec<T> = vec![T::zero(); m];
        for (n, y) in self.data.iter().enumerate() {
            let y = y.as_slice();
            let mut top = log_const;
            for (i, t) in terms.iter_mut().enumerate() {
                let mu_i = &mu.as_slice()[i * self.dim..(i + 1) * self.dim];
                *t = log_c - dist_sq(y, mu_i) * inv_two_var;
                top = top.max(*t);
            }
            let mut sum = if has_const {
                (log_const - top).exp()
            } else {
                T::zero()
            };
            for t in terms.iter_mut() {
                *t = (*t - top).exp();
                sum = sum + *t;
            }
            let inv = T::one() / sum;
            for t in terms.iter_mut() {
                *t = *t * inv;
            }
            visit(n, &terms, top + sum.ln());
        }
    }

    /// `gamma[i][n] = W[i][n] / (sum_k W[k][n] + C)`.
    pub fn responsibilities(&self, mu: &Vector<T>) -> Result<Responsibilities<T>> {
        self.check_point(mu)?;
        let n_points = self.n_points();
        let mut values = vec![T::zero(); self.mixtures * n_points];
        self.for_each_point(mu, |n, gamma, _| {
            for (i, &g) in gamma.iter().enumerate() {
                values[i * n_points + n] = g;
            }
        });
        Responsibilities::new(self.mixtures, n_points, values)
    }

    /// Responsibilities together with `U(mu)`, from a single data pass.
    pub fn responsibilities_and_value(&self, mu: &Vector<T>) -> Result<(Responsibilities<T>, T)> {
        self.check_point(mu)?;
        let n_points = self.n_points();
        let mut values = vec![T::zero(); self.mixtures * n_points];
        let mut data_term = T::zero();
        self.for_each_point(mu, |n, gamma, lse| {
            data_term = data_term - lse;
            for (i, &g) in gamma.iter().enumerate() {
                values[i * n_points + n] = g;
            }
        });
        let gamma = Responsibilities::new(self.mixtures, n_points, values)?;
        Ok((gamma, self.prior_value(mu) + data_term))
    }

    /// Smoothness constant of the data term from the weight rule: with
    /// `c = l C / alpha` the data term is `l`-smooth, so `l = c alpha / C`.
    pub fn likelihood_smoothness(&self) -> f64 {
        let alpha = alpha_over_data(&self.data, self.sigma.as_f64());
        let c = self.constant_component.as_f64();
        if c > 0.0 {
            self.weight_coeff.as_f64() * alpha / c
        } else {
            f64::INFINITY
        }
    }

    /// Upper bound `N / sigma^2 + 2m` on the largest Hessian eigenvalue of
    /// `U`. Each data term's Hessian is `diag(gamma_i) / sigma^2` minus a
    /// positive semidefinite responsibility-covariance term.
    pub fn curvature_bound(&self) -> f64 {
        let s = self.sigma.as_f64();
        self.n_points() as f64 / (s * s) + 2.0 * self.prior_m.as_f64()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let post: Self = serde_json::from_str(s)?;
        post.validate()?;
        Ok(post)
    }
}

/// `alpha` of the smoothness-certifying weight rule, with the supremum over
/// component positions taken over the data points.
fn alpha_over_data<T: Scalar>(data: &[Vector<T>], sigma: f64) -> f64 {
    let var = sigma * sigma;
    let mut best_curv = 0.0f64;
    let mut best_mass = 0.0f64;
    for mu in data {
        let (mut curv, mut mass) = (0.0, 0.0);
        for y in data {
            let q = mu.dist_sq(y).as_f64() / var;
            let k = (-q / 2.0).exp();
            curv += q * k;
            mass += k;
        }
        best_curv = best_curv.max(curv);
        best_mass = best_mass.max(mass);
    }
    (2.0 * best_curv).max(best_mass) / var
}

/// Weight coefficient `lambda_i / Z_i = l C / alpha` that makes the data
/// term `l`-smooth.
pub fn fact_d1_weight_coeff<T: Scalar>(
    data: &[Vector<T>],
    sigma: f64,
    target_smoothness: f64,
    constant_component: f64,
) -> Result<f64> {
    if data.is_empty()
        || !(sigma > 0.0)
        || !(target_smoothness > 0.0)
        || !(constant_component > 0.0)
    {
        return Err(Error::invalid(
            "weight rule needs data, sigma > 0, l > 0 and C > 0",
        ));
    }
    Ok(target_smoothness * constant_component / alpha_over_data(data, sigma))
}

impl<T: Scalar> Objective<T> for GmmPosterior<T> {
    /// `L` is the data-term smoothness plus the prior's `2m`; strong
    /// convexity `m` holds outside radius `2 sqrt(M) R`.
    fn constants(&self) -> ObjectiveConstants {
        let m = self.prior_m.as_f64();
        let l = self.likelihood_smoothness() + 2.0 * m;
        ObjectiveConstants {
            l: l.max(m),
            m,
            r: 2.0 * self.prior_radius().as_f64(),
            dim: self.param_dim(),
        }
    }

    fn dim(&self) -> usize {
        self.param_dim()
    }

    fn value(&self, mu: &Vector<T>) -> Result<T> {
        self.check_point(mu)?;
        let mut data_term = T::zero();
        self.for_each_point(mu, |_, _, lse| data_term = data_term - lse);
        Ok(self.prior_value(mu) + data_term)
    }

    fn grad(&self, mu: &Vector<T>) -> Result<Vector<T>> {
        Ok(self.value_and_grad(mu)?.1)
    }

    fn value_and_grad(&self, mu: &Vector<T>) -> Result<(T, Vector<T>)> {
        self.check_point(mu)?;
        let d = self.dim;
        let inv_var = T::one() / (self.sigma * self.sigma);
        let mut grad = Vector::zeros(self.param_dim());
        let mut data_term = T::zero();
        let data = &self.data;
        {
            let g = grad.as_mut_slice();
            self.for_each_point(mu, |n, gammas, lse| {
                data_term = data_term - lse;
                let y = data[n].as_slice();
                for (i, &gamma) in gammas.iter().enumerate() {
                    if gamma == T::zero() {
                        continue;
                    }
                    let w = gamma * inv_var;
                    let mu_i = &mu.as_slice()[i * d..(i + 1) * d];
                    let g_i = &mut g[i * d..(i + 1) * d];
                    for k in 0..d {
                        g_i[k] = g_i[k] + w * (mu_i[k] - y[k]);
                    }
                }
            });
        }
        self.add_prior_grad(mu, &mut grad);
        Ok((self.prior_value(mu) + data_term, grad))
    }
}
