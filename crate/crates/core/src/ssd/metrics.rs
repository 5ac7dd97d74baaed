//! Exact criterion metrics at a fixed design.
//!
//! Given `σ₀²`, the posterior variance `σ_N²` does not depend on the data, so
//! coverage, length and variance are constants over the predictive
//! distribution. Under the unknown-variance model they are averaged over the
//! Inv-Gamma prior on `σ₀²` by quadrature.

use crate::collective::CollectivePrior;
use crate::distributions::{normal_cdf, upper_normal_quantile, NormalParams, QuadratureSpec};
use crate::error::{domain, Result};
use crate::posterior::{posterior_variance, VarianceModel};

fn average_over_variance<F: Fn(f64) -> f64>(
    prior: &CollectivePrior,
    vm: &VarianceModel,
    at_sigma2: F,
    spec: &QuadratureSpec,
) -> Result<f64> {
    match *vm {
        VarianceModel::Known(sigma2) => Ok(at_sigma2(sigma2)),
        VarianceModel::Unknown(_) => vm
            .sigma2_prior(prior)
            .expect("unknown variance has an Inv-Gamma prior")
            .expect(at_sigma2, spec),
    }
}

/// `E[2Φ(l0/(2σ_N)) − 1]`: probability that `μ_Δ` lies in `η ± l0/2`.
pub fn average_coverage(
    prior: &CollectivePrior,
    vm: &VarianceModel,
    n_a: u64,
    n_b: u64,
    l0: f64,
    spec: &QuadratureSpec,
) -> Result<f64> {
    if l0.is_nan() || l0 <= 0.0 {
        return Err(domain(format!("l0 must be positive, got {l0}")));
    }
    let s = prior.variance();
    let standard = NormalParams::standard();
    average_over_variance(
        prior,
        vm,
        |sigma2| {
            let sd = posterior_variance(s, sigma2, n_a, n_b).sqrt();
            2.0 * normal_cdf(0.5 * l0 / sd, &standard) - 1.0
        },
        spec,
    )
}

/// `E[2z_{α0/2}·σ_N]`: mean length of the `1 − α0` posterior interval.
pub fn average_length(
    prior: &CollectivePrior,
    vm: &VarianceModel,
    n_a: u64,
    n_b: u64,
    alpha0: f64,
    spec: &QuadratureSpec,
) -> Result<f64> {
    if !(alpha0 > 0.0 && alpha0 < 1.0) {
        return Err(domain(format!("alpha0 must lie in (0, 1), got {alpha0}")));
    }
    let z = upper_normal_quantile(0.5 * alpha0)?;
    let s = prior.variance();
    average_over_variance(
        prior,
        vm,
        |sigma2| 2.0 * z * posterior_variance(s, sigma2, n_a, n_b).sqrt(),
        spec,
    )
}

/// `E[σ_N²]`.
pub fn average_posterior_variance(
    prior: &CollectivePrior,
    vm: &VarianceModel,
    n_a: u64,
    n_b: u64,
    spec: &QuadratureSpec,
) -> Result<f64> {
    let s = prior.variance();
    average_over_variance(
        prior,
        vm,
        |sigma2| posterior_variance(s, sigma2, n_a, n_b),
        spec,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::InvGammaParams;

    fn prior(variance: f64) -> CollectivePrior {
        CollectivePrior::from_normal(NormalParams::new(-0.3, variance).unwrap())
    }

    #[test]
    fn known_metrics_are_closed_form() {
        let spec = QuadratureSpec::default();
        let p = prior(0.154);
        let vm = VarianceModel::Known(0.35);
        let var = 1.0 / (1.0 / 0.154 + 21.0 / (2.0 * 0.35));
        assert!((average_posterior_variance(&p, &vm, 21, 21, &spec).unwrap() - var).abs() < 1e-15);
        let len = average_length(&p, &vm, 21, 21, 0.05, &spec).unwrap();
        assert!((len - 2.0 * 1.959_963_984_540_054 * var.sqrt()).abs() < 1e-12);
        let cov = average_coverage(&p, &vm, 21, 21, 0.65, &spec).unwrap();
        assert!(cov > 0.95 && cov < 0.96);
    }

    #[test]
    fn empty_design_is_prior_only() {
        let spec = QuadratureSpec::default();
        let p = prior(0.2);
        for vm in [VarianceModel::Known(0.35), VarianceModel::Unknown(4.0)] {
            assert!((average_posterior_variance(&p, &vm, 0, 0, &spec).unwrap() - 0.2).abs() < 1e-9);
            let len = average_length(&p, &vm, 0, 0, 0.05, &spec).unwrap();
            assert!((len - 2.0 * 1.959_963_984_540_054 * 0.2f64.sqrt()).abs() < 1e-9);
        }
    }

    #[test]
    fn unknown_average_matches_direct_quadrature_oracle() {
        // Independent route: integrate against the Inv-Gamma cdf increments
        // on a fine grid in σ₀² quantile space.
        let spec = QuadratureSpec::default();
        let p = prior(0.1542);
        let c = 5.0;
        let ig = InvGammaParams::new(c / 2.0, c * 0.1542 / 2.0).unwrap();
        let grid = 20_000;
        let mut oracle = 0.0;
        for i in 0..grid {
            let q = (i as f64 + 0.5) / grid as f64;
            let s2 = ig.quantile(q).unwrap();
            oracle += posterior_variance(0.1542, s2, 12, 12) / grid as f64;
        }
        let got =
            average_posterior_variance(&p, &VarianceModel::Unknown(c), 12, 12, &spec).unwrap();
        assert!((got - oracle).abs() < 1e-5, "{got} vs {oracle}");
    }

    #[test]
    fn plug_in_bounds_are_conservative() {
        // Jensen: E[σ_N] ≤ σ_N(E[σ₀²]) and E[σ_N²] ≤ σ_N²(E[σ₀²])
        let spec = QuadratureSpec::default();
        let p = prior(0.1542);
        let c = 5.0;
        let plug = VarianceModel::Known(c * 0.1542 / (c - 2.0));
        let vm = VarianceModel::Unknown(c);
        for n in [2, 10, 40] {
            assert!(
                average_posterior_variance(&p, &vm, n, n, &spec).unwrap()
                    <= average_posterior_variance(&p, &plug, n, n, &spec).unwrap()
            );
            assert!(
                average_length(&p, &vm, n, n, 0.05, &spec).unwrap()
                    <= average_length(&p, &plug, n, n, 0.05, &spec).unwrap()
            );
        }
    }
}
