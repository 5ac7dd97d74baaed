//! Per-source commensurate predictive prior.
//!
//! A historical parameter `θ_k` is projected onto the new-experiment scale by
//! `θ̃_k | θ_k, ν_k ~ N(θ_k, 1/ν_k)` with a two-component gamma mixture on the
//! precision `ν_k`. Integrating `ν_k` out gives a two-component t mixture;
//! [`normal_approximation`] replaces it with the normal matching its first two
//! moments so that sources can be convolved.

use crate::distributions::{
    integrate, Domain, GammaParams, LocationScaleT, NormalParams, QuadratureSpec,
};
use crate::error::{Error, Result};

/// Prior probability that a source is incommensurate with the new experiment.
///
/// `1` means no borrowing from the source, `0` means full pooling.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct CommensurabilityWeight(f64);

impl CommensurabilityWeight {
    pub fn new(w: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&w) {
            Ok(Self(w))
        } else {
            Err(Error::Domain(format!(
                "commensurability weight must lie in [0, 1], got {w}"
            )))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Hyperparameters `(a01, b01, a02, b02)` of the gamma mixture on `ν_k`.
///
/// Component 1 is the vague, down-weighting component; component 2 carries
/// the informative, borrowing mass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaMixtureHyper {
    vague: GammaParams,
    informative: GammaParams,
}

impl GammaMixtureHyper {
    pub fn new(a01: f64, b01: f64, a02: f64, b02: f64) -> Result<Self> {
        let vague = GammaParams::new(a01, b01).map_err(|_| {
            Error::InvalidHyper(format!(
                "Gamma(a01={a01}, b01={b01}) must have positive parameters"
            ))
        })?;
        let informative = GammaParams::new(a02, b02).map_err(|_| {
            Error::InvalidHyper(format!(
                "Gamma(a02={a02}, b02={b02}) must have positive parameters"
            ))
        })?;
        let ordered = if a01 > 1.0 && a02 > 1.0 {
            b01 / (a01 - 1.0) > b02 / (a02 - 1.0)
        } else {
            a01 / b01 < a02 / b02
        };
        if !ordered {
            return Err(Error::InvalidHyper(format!(
                "component 1 must be the vague one: b01/(a01-1) = {} is not larger than b02/(a02-1) = {}",
                b01 / (a01 - 1.0),
                b02 / (a02 - 1.0)
            )));
        }
        Ok(Self { vague, informative })
    }

    pub fn a01(&self) -> f64 {
        self.vague.shape()
    }

    pub fn b01(&self) -> f64 {
        self.vague.rate()
    }

    pub fn a02(&self) -> f64 {
        self.informative.shape()
    }

    pub fn b02(&self) -> f64 {
        self.informative.rate()
    }

    pub fn vague(&self) -> GammaParams {
        self.vague
    }

    pub fn informative(&self) -> GammaParams {
        self.informative
    }

    /// `w·b01/(a01−1) + (1−w)·b02/(a02−1)`, the variance of the t mixture.
    pub fn predictive_variance(&self, w: CommensurabilityWeight) -> Result<f64> {
        let (a1, b1, a2, b2) = (self.a01(), self.b01(), self.a02(), self.b02());
        if a1 <= 1.0 || a2 <= 1.0 {
            return Err(Error::InvalidHyper(format!(
                "the normal approximation requires a01 > 1 and a02 > 1, got a01 = {a1}, a02 = {a2}"
            )));
        }
        let w = w.value();
        Ok(w * b1 / (a1 - 1.0) + (1.0 - w) * b2 / (a2 - 1.0))
    }
}

/// Marginal of `θ̃_k` given `θ_k`: `w·t(2a01, θ_k, √(b01/a01)) + (1−w)·t(2a02, θ_k, √(b02/a02))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TMixtureMarginal {
    pub weight: CommensurabilityWeight,
    pub component1: LocationScaleT,
    pub component2: LocationScaleT,
}

impl TMixtureMarginal {
    pub fn location(&self) -> f64 {
        self.component1.location()
    }

    pub fn pdf(&self, x: f64) -> f64 {
        let w = self.weight.value();
        let mut density = 0.0;
        if w > 0.0 {
            density += w * self.component1.pdf(x);
        }
        if w < 1.0 {
            density += (1.0 - w) * self.component2.pdf(x);
        }
        density
    }

    fn domain(&self) -> Domain {
        Domain::real()
            .centered_at(self.location())
            .with_scale(self.component1.scale().max(self.component2.scale()))
    }
}

pub fn marginal_t_mixture(
    theta_k: f64,
    w: CommensurabilityWeight,
    hyper: &GammaMixtureHyper,
) -> TMixtureMarginal {
    let component = |g: GammaParams| {
        LocationScaleT::new(2.0 * g.shape(), theta_k, (g.rate() / g.shape()).sqrt())
            .expect("gamma parameters are positive so the t parameters are valid")
    };
    TMixtureMarginal {
        weight: w,
        component1: component(hyper.vague()),
        component2: component(hyper.informative()),
    }
}

/// Moment-matched normal for the t mixture: `N(θ_k, predictive_variance(w))`.
pub fn normal_approximation(
    theta_k: f64,
    w: CommensurabilityWeight,
    hyper: &GammaMixtureHyper,
) -> Result<NormalParams> {
    NormalParams::new(theta_k, hyper.predictive_variance(w)?)
}

/// Mean and variance of the t mixture by direct quadrature.
pub fn mixture_moments_oracle(m: &TMixtureMarginal, spec: &QuadratureSpec) -> Result<(f64, f64)> {
    for c in [m.component1, m.component2] {
        if c.df() <= 2.0 {
            return Err(Error::UndefinedMoment(format!(
                "mixture variance is infinite: component has df {}",
                c.df()
            )));
        }
    }
    let loc = m.location();
    // integrate the centred first moment so symmetric mixtures give exactly θ_k
    let shift = integrate(|x| (x - loc) * m.pdf(x), m.domain(), spec)?.value;
    let mean = loc + shift;
    let variance = integrate(|x| (x - mean).powi(2) * m.pdf(x), m.domain(), spec)?.value;
    Ok((mean, variance))
}

/// Total-variation distance `½∫|f_mixture − f_normal|` between the t mixture
/// and a normal.
pub fn approximation_error(
    m: &TMixtureMarginal,
    n: &NormalParams,
    spec: &QuadratureSpec,
) -> Result<f64> {
    let tv = 0.5 * integrate(|x| (m.pdf(x) - n.pdf(x)).abs(), m.domain(), spec)?.value;
    Ok(tv.clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn default_hyper() -> GammaMixtureHyper {
        GammaMixtureHyper::new(2.0, 2.0, 18.0, 3.0).unwrap()
    }

    fn w(v: f64) -> CommensurabilityWeight {
        CommensurabilityWeight::new(v).unwrap()
    }

    #[test]
    fn component_mapping() {
        let m = marginal_t_mixture(0.0, w(0.5), &default_hyper());
        assert_eq!(m.component1.df(), 4.0);
        assert_eq!(m.component1.scale(), 1.0);
        assert_eq!(m.component2.df(), 36.0);
        assert!((m.component2.scale() - (1.0f64 / 6.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn zero_weight_is_pure_informative_component() {
        let m = marginal_t_mixture(0.4, w(0.0), &default_hyper());
        for x in [-2.0, 0.0, 0.4, 1.3] {
            assert_eq!(m.pdf(x), m.component2.pdf(x));
        }
    }

    #[test]
    fn mixture_is_normalized() {
        let spec = QuadratureSpec::default();
        for weight in [0.0, 0.15, 0.5, 1.0] {
            let m = marginal_t_mixture(-0.26, w(weight), &default_hyper());
            let total = integrate(|x| m.pdf(x), m.domain(), &spec).unwrap().value;
            assert!((total - 1.0).abs() < 1e-8, "w={weight}: {total}");
        }
    }

    #[test]
    fn normal_approximation_variances() {
        let h = default_hyper();
        assert!((normal_approximation(0.0, w(1.0), &h).unwrap().variance() - 2.0).abs() < 1e-15);
        assert!(
            (normal_approximation(0.0, w(0.0), &h).unwrap().variance() - 3.0 / 17.0).abs() < 1e-15
        );
        assert!((normal_approximation(0.0, w(0.15), &h).unwrap().variance() - 0.45).abs() < 1e-12);
    }

    #[test]
    fn approximation_needs_shapes_above_one() {
        let h = GammaMixtureHyper::new(0.8, 2.0, 18.0, 3.0).unwrap();
        assert!(matches!(
            normal_approximation(0.0, w(0.2), &h),
            Err(Error::InvalidHyper(_))
        ));
    }

    #[test]
    fn misordered_components_rejected() {
        assert!(matches!(
            GammaMixtureHyper::new(18.0, 3.0, 2.0, 2.0),
            Err(Error::InvalidHyper(_))
        ));
        assert!(GammaMixtureHyper::new(2.0, -1.0, 18.0, 3.0).is_err());
    }

    #[test]
    fn weight_bounds() {
        assert!(CommensurabilityWeight::new(-0.01).is_err());
        assert!(CommensurabilityWeight::new(1.01).is_err());
        assert!(CommensurabilityWeight::new(f64::NAN).is_err());
    }

    #[test]
    fn quadrature_moments() {
        let spec = QuadratureSpec::default();
        let h = default_hyper();
        let m = marginal_t_mixture(-0.26, w(0.15), &h);
        let (mean, var) = mixture_moments_oracle(&m, &spec).unwrap();
        assert!((mean + 0.26).abs() < 1e-10);
        assert!(((var - 0.45) / 0.45).abs() < 1e-6);
        let m = marginal_t_mixture(0.0, w(1.0), &h);
        let (_, var) = mixture_moments_oracle(&m, &spec).unwrap();
        assert!(((var - 2.0) / 2.0).abs() < 1e-6);
    }

    #[test]
    fn moments_need_df_above_two() {
        let h = GammaMixtureHyper::new(1.0, 2.0, 18.0, 3.0).unwrap();
        let m = marginal_t_mixture(0.0, w(0.5), &h);
        assert!(matches!(
            mixture_moments_oracle(&m, &QuadratureSpec::default()),
            Err(Error::UndefinedMoment(_))
        ));
    }

    #[test]
    fn total_variation_limits() {
        let spec = QuadratureSpec::default();
        // an almost-normal t against the matching normal
        let h = GammaMixtureHyper::new(2.0, 2.0, 1000.0, 1000.0).unwrap();
        let m = marginal_t_mixture(0.0, w(0.0), &h);
        let n = NormalParams::new(0.0, m.component2.variance().unwrap()).unwrap();
        assert!(approximation_error(&m, &n, &spec).unwrap() < 0.01);

        let far = NormalParams::new(3.0, 0.5).unwrap();
        let tv = approximation_error(&m, &far, &spec).unwrap();
        assert!(tv > 0.5 && tv <= 1.0, "{tv}");
    }
}
