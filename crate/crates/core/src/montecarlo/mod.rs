//! Seeded simulation oracle for the three criteria.
//!
//! Draws are split into fixed-size chunks, each with its own substream
//! seed, and chunk summaries are merged in chunk order. Results therefore
//! depend on `(inputs, seed, chunk_size)` only, not on the thread count.

mod rng;

pub use rng::{
    sample_gamma, sample_invgamma, sample_normal, standard_normal, SplitMix64, Xoshiro256PlusPlus,
};

use rayon::prelude::*;

use crate::collective::CollectivePrior;
use crate::distributions::{normal_cdf, upper_normal_quantile, NormalParams};
use crate::error::{domain, Result};
use crate::posterior::{posterior_variance, sampling_factor, VarianceModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimulationPlan {
    pub draws: u64,
    pub seed: u64,
    pub chunk_size: u64,
}

impl SimulationPlan {
    pub const DEFAULT_CHUNK: u64 = 16_384;

    pub fn new(draws: u64, seed: u64) -> Result<Self> {
        Self::with_chunk_size(draws, seed, Self::DEFAULT_CHUNK)
    }

    pub fn with_chunk_size(draws: u64, seed: u64, chunk_size: u64) -> Result<Self> {
        if draws < 1 {
            return Err(domain("a simulation needs at least one draw"));
        }
        if chunk_size < 1 {
            return Err(domain("chunk_size must be at least 1"));
        }
        Ok(Self {
            draws,
            seed,
            chunk_size,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationEstimate {
    pub value: f64,
    pub std_error: f64,
    /// Zero when the metric is a constant and nothing was sampled.
    pub draws_used: u64,
}

impl SimulationEstimate {
    fn exact(value: f64) -> Self {
        Self {
            value,
            std_error: 0.0,
            draws_used: 0,
        }
    }
}

/// Running count, mean and sum of squared deviations.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    fn merge(self, other: Self) -> Self {
        if self.n == 0 {
            return other;
        }
        if other.n == 0 {
            return self;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        let weight = other.n as f64 / n as f64;
        Self {
            n,
            mean: self.mean + delta * weight,
            m2: self.m2 + other.m2 + delta * delta * self.n as f64 * weight,
        }
    }

    fn estimate(&self) -> SimulationEstimate {
        let se = if self.n > 1 {
            (self.m2 / (self.n - 1) as f64 / self.n as f64).sqrt()
        } else {
            0.0
        };
        SimulationEstimate {
            value: self.mean,
            std_error: se,
            draws_used: self.n,
        }
    }
}

fn simulate<F>(plan: &SimulationPlan, draw: F) -> Moments
where
    F: Fn(&mut Xoshiro256PlusPlus) -> f64 + Sync,
{
    let chunks = plan.draws.div_ceil(plan.chunk_size);
    let partial: Vec<Moments> = (0..chunks)
        .into_par_iter()
        .map(|i| {
            let mut rng = Xoshiro256PlusPlus::substream(plan.seed, i);
            let len = plan.chunk_size.min(plan.draws - i * plan.chunk_size);
            let mut m = Moments::default();
            for _ in 0..len {
                m.push(draw(&mut rng));
            }
            m
        })
        .collect();
    partial.into_iter().fold(Moments::default(), Moments::merge)
}

fn draw_sigma2(rng: &mut Xoshiro256PlusPlus, prior: &CollectivePrior, vm: &VarianceModel) -> f64 {
    match *vm {
        VarianceModel::Known(sigma2) => sigma2,
        VarianceModel::Unknown(_) => sample_invgamma(
            rng,
            &vm.sigma2_prior(prior)
                .expect("unknown variance has an Inv-Gamma prior"),
        ),
    }
}

fn check_l0(l0: f64) -> Result<()> {
    if l0 > 0.0 {
        Ok(())
    } else {
        Err(domain(format!("l0 must be positive, got {l0}")))
    }
}

/// Joint simulation of the average coverage of `η ± l0/2`: draw `σ₀²`,
/// `μ_Δ` from the prior and `x̄_Δ | μ_Δ, σ₀²`, and score whether `μ_Δ`
/// falls in the interval around the posterior mean.
pub fn simulate_average_coverage(
    prior: &CollectivePrior,
    vm: &VarianceModel,
    n_a: u64,
    n_b: u64,
    l0: f64,
    plan: &SimulationPlan,
) -> Result<SimulationEstimate> {
    check_l0(l0)?;
    let (m, s) = (prior.mean(), prior.variance());
    let v = sampling_factor(n_a, n_b);
    let normal = prior.as_normal();
    let moments = simulate(plan, |rng| {
        let sigma2 = draw_sigma2(rng, prior, vm);
        let mu = sample_normal(rng, &normal);
        let eta = if v.is_finite() {
            let xbar = mu + (v * sigma2).sqrt() * standard_normal(rng);
            m + s / (s + v * sigma2) * (xbar - m)
        } else {
            m
        };
        if (mu - eta).abs() <= 0.5 * l0 {
            1.0
        } else {
            0.0
        }
    });
    // binomial standard error
    let p = moments.mean;
    let n = moments.n as f64;
    Ok(SimulationEstimate {
        value: p,
        std_error: (p * (1.0 - p) / n).sqrt(),
        draws_used: moments.n,
    })
}

/// Average coverage with only `σ₀²` simulated and the conditional coverage
/// `2Φ(l0/(2σ_N)) − 1` evaluated analytically.
pub fn simulate_average_coverage_conditional(
    prior: &CollectivePrior,
    vm: &VarianceModel,
    n_a: u64,
    n_b: u64,
    l0: f64,
    plan: &SimulationPlan,
) -> Result<SimulationEstimate> {
    check_l0(l0)?;
    let s = prior.variance();
    let standard = NormalParams::standard();
    let coverage = |sigma2: f64| {
        2.0 * normal_cdf(
            0.5 * l0 / posterior_variance(s, sigma2, n_a, n_b).sqrt(),
            &standard,
        ) - 1.0
    };
    Ok(match *vm {
        VarianceModel::Known(sigma2) => SimulationEstimate::exact(coverage(sigma2)),
        VarianceModel::Unknown(_) => {
            simulate(plan, |rng| coverage(draw_sigma2(rng, prior, vm))).estimate()
        }
    })
}

/// Average of `2z_{α0/2}·σ_N` over `σ₀²` draws; exact when `σ₀²` is known.
pub fn simulate_average_length(
    prior: &CollectivePrior,
    vm: &VarianceModel,
    n_a: u64,
    n_b: u64,
    alpha0: f64,
    plan: &SimulationPlan,
) -> Result<SimulationEstimate> {
    if !(alpha0 > 0.0 && alpha0 < 1.0) {
        return Err(domain(format!("alpha0 must lie in (0, 1), got {alpha0}")));
    }
    let z = upper_normal_quantile(0.5 * alpha0)?;
    let s = prior.variance();
    let length = |sigma2: f64| 2.0 * z * posterior_variance(s, sigma2, n_a, n_b).sqrt();
    Ok(match *vm {
        VarianceModel::Known(sigma2) => SimulationEstimate::exact(length(sigma2)),
        VarianceModel::Unknown(_) => {
            simulate(plan, |rng| length(draw_sigma2(rng, prior, vm))).estimate()
        }
    })
}

/// Average of `σ_N²` over `σ₀²` draws; exact when `σ₀²` is known.
pub fn simulate_average_posterior_variance(
    prior: &CollectivePrior,
    vm: &VarianceModel,
    n_a: u64,
    n_b: u64,
    plan: &SimulationPlan,
) -> Result<SimulationEstimate> {
    let s = prior.variance();
    let variance = |sigma2: f64| posterior_variance(s, sigma2, n_a, n_b);
    Ok(match *vm {
        VarianceModel::Known(sigma2) => SimulationEstimate::exact(variance(sigma2)),
        VarianceModel::Unknown(_) => {
            simulate(plan, |rng| variance(draw_sigma2(rng, prior, vm))).estimate()
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::QuadratureSpec;
    use crate::posterior::marginal_predictive;
    use crate::ssd::{average_coverage, average_length, average_posterior_variance};

    fn worked_prior() -> CollectivePrior {
        CollectivePrior::from_normal(NormalParams::new(-0.30865, 0.154181).unwrap())
    }

    fn plan(draws: u64, seed: u64) -> SimulationPlan {
        SimulationPlan::new(draws, seed).unwrap()
    }

    #[test]
    fn plan_validation() {
        assert!(SimulationPlan::new(0, 1).is_err());
        assert!(SimulationPlan::with_chunk_size(10, 1, 0).is_err());
    }

    #[test]
    fn moments_merge_matches_single_pass() {
        let xs: Vec<f64> = (0..1000).map(|i| ((i * 37) % 101) as f64 * 0.1).collect();
        let mut whole = Moments::default();
        xs.iter().for_each(|&x| whole.push(x));
        let (mut a, mut b) = (Moments::default(), Moments::default());
        xs[..333].iter().for_each(|&x| a.push(x));
        xs[333..].iter().for_each(|&x| b.push(x));
        let merged = a.merge(b);
        assert_eq!(merged.n, whole.n);
        assert!((merged.mean - whole.mean).abs() < 1e-12);
        assert!((merged.m2 - whole.m2).abs() < 1e-9);
    }

    #[test]
    fn independent_of_thread_count() {
        let prior = worked_prior();
        let vm = VarianceModel::Unknown(5.0);
        let p = SimulationPlan::with_chunk_size(50_000, 99, 1000).unwrap();
        let run = |threads: usize| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| {
                    (
                        simulate_average_coverage(&prior, &vm, 12, 12, 0.65, &p).unwrap(),
                        simulate_average_length(&prior, &vm, 12, 12, 0.05, &p).unwrap(),
                    )
                })
        };
        let one = run(1);
        assert_eq!(one, run(4));
        assert_eq!(one, run(7));
    }

    #[test]
    fn known_coverage_at_worked_solution() {
        let prior = worked_prior();
        let vm = VarianceModel::Known(0.35);
        let est = simulate_average_coverage(&prior, &vm, 21, 21, 0.65, &plan(100_000, 1)).unwrap();
        assert_eq!(est.draws_used, 100_000);
        assert!(est.value >= 0.95 - 3.0 * est.std_error, "{est:?}");
        let exact =
            average_coverage(&prior, &vm, 21, 21, 0.65, &QuadratureSpec::default()).unwrap();
        assert!(
            (est.value - exact).abs() < 3.0 * est.std_error,
            "{est:?} vs {exact}"
        );
        let wide = simulate_average_coverage(&prior, &vm, 21, 21, 1e6, &plan(10_000, 2)).unwrap();
        assert_eq!(wide.value, 1.0);
    }

    #[test]
    fn conditional_and_joint_coverage_agree() {
        let prior = worked_prior();
        let vm = VarianceModel::Unknown(5.0);
        let joint =
            simulate_average_coverage(&prior, &vm, 15, 15, 0.65, &plan(200_000, 3)).unwrap();
        let cond =
            simulate_average_coverage_conditional(&prior, &vm, 15, 15, 0.65, &plan(200_000, 4))
                .unwrap();
        let se = (joint.std_error.powi(2) + cond.std_error.powi(2)).sqrt();
        assert!((joint.value - cond.value).abs() < 4.0 * se);
        let exact =
            average_coverage(&prior, &vm, 15, 15, 0.65, &QuadratureSpec::default()).unwrap();
        assert!((cond.value - exact).abs() < 4.0 * cond.std_error);
    }

    #[test]
    fn known_metrics_are_exact() {
        let prior = worked_prior();
        let vm = VarianceModel::Known(0.35);
        let spec = QuadratureSpec::default();
        let len = simulate_average_length(&prior, &vm, 21, 21, 0.05, &plan(10, 0)).unwrap();
        assert_eq!(len.std_error, 0.0);
        assert_eq!(
            len.value,
            average_length(&prior, &vm, 21, 21, 0.05, &spec).unwrap()
        );
        let var = simulate_average_posterior_variance(&prior, &vm, 21, 21, &plan(10, 0)).unwrap();
        assert_eq!(var.value, posterior_variance(0.154181, 0.35, 21, 21));
    }

    #[test]
    fn unknown_length_crosses_at_searched_total() {
        let prior = worked_prior();
        let vm = VarianceModel::Unknown(5.0);
        let at = simulate_average_length(&prior, &vm, 12, 12, 0.05, &plan(1_000_000, 5)).unwrap();
        assert!(at.value <= 0.65, "{at:?}");
        let below =
            simulate_average_length(&prior, &vm, 12, 11, 0.05, &plan(1_000_000, 6)).unwrap();
        assert!(below.value - 3.0 * below.std_error > 0.65, "{below:?}");
        let bound = 2.0 * upper_normal_quantile(0.025).unwrap() * prior.variance().sqrt();
        assert!(at.value < bound);
    }

    #[test]
    fn unknown_posterior_variance_at_apvc_solution() {
        let prior = worked_prior();
        let vm = VarianceModel::Unknown(5.0);
        let est =
            simulate_average_posterior_variance(&prior, &vm, 14, 14, &plan(1_000_000, 7)).unwrap();
        assert!(est.value <= 0.03 + 3.0 * est.std_error, "{est:?}");
        assert!(est.value < prior.variance());
        let exact =
            average_posterior_variance(&prior, &vm, 14, 14, &QuadratureSpec::default()).unwrap();
        assert!((est.value - exact).abs() < 4.0 * est.std_error);
    }

    #[test]
    fn predictive_histogram_matches_marginal() {
        let prior = worked_prior();
        let predictive = marginal_predictive(&prior, 0.35, 21, 21).unwrap();
        let v = sampling_factor(21, 21);
        let normal = prior.as_normal();
        let p = plan(100_000, 8);
        let first = simulate(&p, |rng| {
            sample_normal(rng, &normal) + (v * 0.35).sqrt() * standard_normal(rng)
        });
        let est = first.estimate();
        assert!((est.value - predictive.mean()).abs() < 3.0 * est.std_error);
        let sample_var = first.m2 / (first.n - 1) as f64;
        // standard error of a normal sample variance: σ²·√(2/(n−1))
        let se = predictive.variance() * (2.0 / (first.n - 1) as f64).sqrt();
        assert!((sample_var - predictive.variance()).abs() < 3.0 * se);
    }

    #[test]
    fn empty_design_gives_prior_metrics() {
        let prior = worked_prior();
        let vm = VarianceModel::Unknown(5.0);
        let var = simulate_average_posterior_variance(&prior, &vm, 0, 0, &plan(1000, 9)).unwrap();
        assert!((var.value - prior.variance()).abs() < 1e-15);
        let cov = simulate_average_coverage(&prior, &vm, 0, 0, 0.65, &plan(100_000, 10)).unwrap();
        let exact =
            2.0 * normal_cdf(0.325 / prior.variance().sqrt(), &NormalParams::standard()) - 1.0;
        assert!((cov.value - exact).abs() < 4.0 * cov.std_error);
    }
}
