//! Posterior and predictive distributions for the mean difference `μ_Δ`.
//!
//! Everything flows through the sufficient statistic `x̄_Δ = x̄_A − x̄_B`,
//! whose sampling variance is `(1/n_A + 1/n_B)·σ₀²`. The group means are
//! never modeled separately.

use std::collections::HashMap;
use std::sync::{OnceLock, RwLock};

use crate::collective::CollectivePrior;
use crate::distributions::{integrate, Domain, InvGammaParams, NormalParams, QuadratureSpec};
use crate::error::{domain, Error, Result};

/// What is assumed about the common within-group variance `σ₀²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VarianceModel {
    Known(f64),
    /// `c·S/σ₀² ~ χ²(c)`, i.e. `σ₀² ~ Inv-Gamma(c/2, c·S/2)` with `S` the
    /// collective prior variance.
    Unknown(f64),
}

impl VarianceModel {
    pub fn known(sigma2: f64) -> Result<Self> {
        if sigma2 > 0.0 && sigma2.is_finite() {
            Ok(Self::Known(sigma2))
        } else {
            Err(domain(format!(
                "known variance must be positive, got {sigma2}"
            )))
        }
    }

    pub fn unknown(c: f64) -> Result<Self> {
        if c > 0.0 && c.is_finite() {
            Ok(Self::Unknown(c))
        } else {
            Err(domain(format!(
                "degrees of freedom c must be positive, got {c}"
            )))
        }
    }

    /// The Inv-Gamma prior on `σ₀²` implied by an unknown-variance model.
    pub fn sigma2_prior(&self, prior: &CollectivePrior) -> Option<InvGammaParams> {
        match *self {
            Self::Known(_) => None,
            Self::Unknown(c) => Some(
                InvGammaParams::new(0.5 * c, 0.5 * c * prior.variance())
                    .expect("c and S are positive"),
            ),
        }
    }

    /// `E[σ₀²]`: the fixed value, or `c·S/(c−2)` when unknown.
    pub fn expected_sigma2(&self, prior: &CollectivePrior) -> Result<f64> {
        match *self {
            Self::Known(sigma2) => Ok(sigma2),
            Self::Unknown(c) => {
                if c <= 2.0 {
                    return Err(Error::UndefinedMoment(format!(
                        "E[sigma0^2] under Inv-Gamma(c/2, c*S/2) exists only for c > 2 (shape > 1); got c = {c}"
                    )));
                }
                Ok(c * prior.variance() / (c - 2.0))
            }
        }
    }
}

/// Planned group sizes and an observed difference in sample means.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewData {
    pub n_a: u64,
    pub n_b: u64,
    pub xbar_delta: f64,
}

impl NewData {
    pub fn new(n_a: u64, n_b: u64, xbar_delta: f64) -> Result<Self> {
        if n_a < 1 || n_b < 1 {
            return Err(domain(format!(
                "group sizes must be at least 1, got ({n_a}, {n_b})"
            )));
        }
        if !xbar_delta.is_finite() {
            return Err(domain("observed mean difference must be finite"));
        }
        Ok(Self {
            n_a,
            n_b,
            xbar_delta,
        })
    }

    pub fn sampling_factor(&self) -> f64 {
        sampling_factor(self.n_a, self.n_b)
    }
}

/// `1/n_A + 1/n_B`; infinite when either arm is empty (no information).
pub fn sampling_factor(n_a: u64, n_b: u64) -> f64 {
    if n_a == 0 || n_b == 0 {
        f64::INFINITY
    } else {
        1.0 / n_a as f64 + 1.0 / n_b as f64
    }
}

/// `σ_N² = (1/S + 1/((1/n_A + 1/n_B)σ₀²))⁻¹`, equal to `S` for an empty design.
pub fn posterior_variance(prior_variance: f64, sigma2: f64, n_a: u64, n_b: u64) -> f64 {
    let data_variance = sampling_factor(n_a, n_b) * sigma2;
    1.0 / (1.0 / prior_variance + 1.0 / data_variance)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PosteriorNormal {
    /// `η` (or `μ_N`).
    pub mean: f64,
    /// `σ_N²`.
    pub variance: f64,
}

impl PosteriorNormal {
    pub fn as_normal(&self) -> NormalParams {
        NormalParams::new(self.mean, self.variance).expect("posterior variance is positive")
    }
}

/// Conjugate update of the collective prior with `x̄_Δ` at known `σ₀²`.
pub fn posterior_known(
    prior: &CollectivePrior,
    sigma2: f64,
    data: &NewData,
) -> Result<PosteriorNormal> {
    if !(sigma2 > 0.0 && sigma2.is_finite()) {
        return Err(domain(format!("sigma0^2 must be positive, got {sigma2}")));
    }
    let s = prior.variance();
    let data_variance = data.sampling_factor() * sigma2;
    let total = s + data_variance;
    let mean = (data_variance / total) * prior.mean() + (s / total) * data.xbar_delta;
    let variance = 1.0 / (1.0 / s + 1.0 / data_variance);
    Ok(PosteriorNormal { mean, variance })
}

/// The same update at a drawn value of `σ₀²`.
pub fn posterior_conditional_unknown(
    prior: &CollectivePrior,
    sigma2_draw: f64,
    data: &NewData,
) -> Result<PosteriorNormal> {
    posterior_known(prior, sigma2_draw, data)
}

/// `x̄_Δ ~ N(Σp_kλ_k, (1/n_A + 1/n_B)σ₀² + S)` before seeing the data.
pub fn marginal_predictive(
    prior: &CollectivePrior,
    sigma2: f64,
    n_a: u64,
    n_b: u64,
) -> Result<NormalParams> {
    if n_a < 1 || n_b < 1 {
        return Err(domain(format!(
            "group sizes must be at least 1, got ({n_a}, {n_b})"
        )));
    }
    if !(sigma2 > 0.0 && sigma2.is_finite()) {
        return Err(domain(format!("sigma0^2 must be positive, got {sigma2}")));
    }
    NormalParams::new(
        prior.mean(),
        sampling_factor(n_a, n_b) * sigma2 + prior.variance(),
    )
}

/// Marginal posterior of `μ_Δ` when `σ₀²` has been integrated out against
/// its Inv-Gamma prior: a normal kernel times a t kernel with `c` degrees of
/// freedom, location `x̄_Δ` and squared scale `(1/n_A + 1/n_B)·S`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnknownVariancePosterior {
    prior_mean: f64,
    prior_variance: f64,
    c: f64,
    data: NewData,
    anchor: f64,
    log_normalizer: f64,
}

impl UnknownVariancePosterior {
    pub fn new(
        prior: &CollectivePrior,
        c: f64,
        data: NewData,
        spec: &QuadratureSpec,
    ) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(domain(format!(
                "degrees of freedom c must be positive, got {c}"
            )));
        }
        let mut post = Self {
            prior_mean: prior.mean(),
            prior_variance: prior.variance(),
            c,
            data,
            anchor: 0.0,
            log_normalizer: 0.0,
        };
        let at_s = posterior_known(prior, prior.variance(), &data)?;
        post.anchor = post.log_kernel(at_s.mean);
        let mass = post.integrate_shifted_kernel(at_s, spec)?;
        post.log_normalizer = post.anchor + mass.ln();
        Ok(post)
    }

    fn integrate_shifted_kernel(
        &self,
        at_s: PosteriorNormal,
        spec: &QuadratureSpec,
    ) -> Result<f64> {
        let f = |mu: f64| (self.log_kernel(mu) - self.anchor).exp();
        let mut knots = [self.prior_mean, self.data.xbar_delta, at_s.mean];
        knots.sort_by(f64::total_cmp);
        let scale = at_s.variance.sqrt();
        let mut total = integrate(f, Domain::to(knots[0]).with_scale(scale), spec)?.value;
        for pair in knots.windows(2) {
            total += integrate(f, Domain::finite(pair[0], pair[1]), spec)?.value;
        }
        total += integrate(f, Domain::from(knots[2]).with_scale(scale), spec)?.value;
        Ok(total)
    }

    /// Unnormalized log density.
    pub fn log_kernel(&self, mu: f64) -> f64 {
        let s = self.prior_variance;
        let t_scale2 = self.data.sampling_factor() * s;
        let d = mu - self.data.xbar_delta;
        -(mu - self.prior_mean).powi(2) / (2.0 * s)
            - 0.5 * (self.c + 1.0) * (d * d / (self.c * t_scale2)).ln_1p()
    }

    pub fn density(&self, mu: f64) -> f64 {
        (self.log_kernel(mu) - self.log_normalizer).exp()
    }

    pub fn log_normalizer(&self) -> f64 {
        self.log_normalizer
    }
}

type NormalizerKey = [u64; 8];

fn normalizer_cache() -> &'static RwLock<HashMap<NormalizerKey, f64>> {
    static CACHE: OnceLock<RwLock<HashMap<NormalizerKey, f64>>> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

/// Normalized marginal posterior density of `μ_Δ` under the unknown-variance
/// model. Normalizing constants are cached per (prior, c, data, tolerance).
pub fn marginal_posterior_density_unknown(
    mu: f64,
    prior: &CollectivePrior,
    c: f64,
    data: &NewData,
    spec: &QuadratureSpec,
) -> Result<f64> {
    let key = [
        prior.mean().to_bits(),
        prior.variance().to_bits(),
        c.to_bits(),
        data.n_a,
        data.n_b,
        data.xbar_delta.to_bits(),
        spec.relative_tolerance.to_bits(),
        spec.absolute_tolerance.to_bits(),
    ];
    let cached = normalizer_cache()
        .read()
        .unwrap_or_else(|poisoned| poisoned.into_inner())
        .get(&key)
        .copied();
    let post = match cached {
        Some(log_normalizer) => UnknownVariancePosterior {
            prior_mean: prior.mean(),
            prior_variance: prior.variance(),
            c,
            data: *data,
            anchor: 0.0,
            log_normalizer,
        },
        None => {
            let post = UnknownVariancePosterior::new(prior, c, *data, spec)?;
            normalizer_cache()
                .write()
                .unwrap_or_else(|poisoned| poisoned.into_inner())
                .entry(key)
                .or_insert(post.log_normalizer);
            post
        }
    };
    Ok(post.density(mu))
}
