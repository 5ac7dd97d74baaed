//! Sample-size criteria and their solvers.
//!
//! Closed-form routes bound the effective size `n_A·n_B/(n_A+n_B)` from below
//! and then pick the smallest integer total whose allocation split clears the
//! bound. The unknown-variance ALC has no closed form and is solved by a
//! monotone integer search.

mod metrics;
mod search;

pub use metrics::{average_coverage, average_length, average_posterior_variance};
pub use search::alc_unknown_search;

use crate::collective::CollectivePrior;
use crate::distributions::{upper_normal_quantile, QuadratureSpec};
use crate::error::{domain, Error, Result};
use crate::posterior::VarianceModel;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Criterion {
    /// Average coverage of the interval `η ± l0/2` at least `1 − alpha`.
    Acc { l0: f64, alpha: f64 },
    /// Average length of the `1 − alpha0` interval at most `l`.
    Alc { l: f64, alpha0: f64 },
    /// Average posterior variance at most `eps0`.
    Apvc { eps0: f64 },
}

fn check_positive(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(domain(format!(
            "{name} must be positive and finite, got {x}"
        )))
    }
}

fn check_level(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x < 1.0 {
        Ok(())
    } else {
        Err(domain(format!("{name} must lie in (0, 1), got {x}")))
    }
}

impl Criterion {
    pub fn acc(l0: f64, alpha: f64) -> Result<Self> {
        let c = Self::Acc { l0, alpha };
        c.validate()?;
        Ok(c)
    }

    pub fn alc(l: f64, alpha0: f64) -> Result<Self> {
        let c = Self::Alc { l, alpha0 };
        c.validate()?;
        Ok(c)
    }

    pub fn apvc(eps0: f64) -> Result<Self> {
        let c = Self::Apvc { eps0 };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Acc { l0, alpha } => {
                check_positive("l0", l0)?;
                check_level("alpha", alpha)
            }
            Self::Alc { l, alpha0 } => {
                check_positive("l", l)?;
                check_level("alpha0", alpha0)
            }
            Self::Apvc { eps0 } => check_positive("eps0", eps0),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Acc { .. } => "ACC",
            Self::Alc { .. } => "ALC",
            Self::Apvc { .. } => "APVC",
        }
    }

    /// `1/S` is compared against this precision target: `4z²/l²` for the
    /// interval criteria, `1/eps0` for APVC.
    fn precision_target(&self) -> Result<f64> {
        self.validate()?;
        Ok(match *self {
            Self::Acc { l0, alpha } => {
                let z = upper_normal_quantile(0.5 * alpha)?;
                4.0 * z * z / (l0 * l0)
            }
            Self::Alc { l, alpha0 } => {
                let z = upper_normal_quantile(0.5 * alpha0)?;
                4.0 * z * z / (l * l)
            }
            Self::Apvc { eps0 } => 1.0 / eps0,
        })
    }
}

/// `n_A : n_B = ratio_a : ratio_b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Allocation {
    ratio_a: u32,
    ratio_b: u32,
}

impl Allocation {
    pub fn new(ratio_a: u32, ratio_b: u32) -> Result<Self> {
        if ratio_a < 1 || ratio_b < 1 {
            return Err(domain(format!(
                "allocation ratios must be at least 1, got {ratio_a}:{ratio_b}"
            )));
        }
        Ok(Self { ratio_a, ratio_b })
    }

    pub fn equal() -> Self {
        Self {
            ratio_a: 1,
            ratio_b: 1,
        }
    }

    pub fn ratio_a(&self) -> u32 {
        self.ratio_a
    }

    pub fn ratio_b(&self) -> u32 {
        self.ratio_b
    }

    /// Splits a total `n` with `n_A = ⌊n·r_A/(r_A+r_B) + ½⌋`, `n_B = n − n_A`.
    ///
    /// Both arms are nondecreasing in `n`, so the effective size of the
    /// split is strictly increasing once both arms are nonempty.
    pub fn split(&self, n: u64) -> (u64, u64) {
        let (ra, rb) = (u128::from(self.ratio_a), u128::from(self.ratio_b));
        // ⌊(2·n·ra + (ra+rb)) / (2·(ra+rb))⌋ in exact integer arithmetic
        let n_a = ((2 * u128::from(n) * ra + ra + rb) / (2 * (ra + rb))) as u64;
        (n_a, n - n_a)
    }

    /// `(r_A+r_B)²/(r_A·r_B)`: total per unit of effective size at the exact ratio.
    pub fn total_per_effective_size(&self) -> f64 {
        let (ra, rb) = (f64::from(self.ratio_a), f64::from(self.ratio_b));
        (ra + rb).powi(2) / (ra * rb)
    }
}

/// `n_A·n_B/(n_A+n_B)`, zero when an arm is empty.
pub fn effective_size(n_a: u64, n_b: u64) -> f64 {
    if n_a == 0 || n_b == 0 {
        0.0
    } else {
        let (a, b) = (n_a as f64, n_b as f64);
        a * b / (a + b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    ClosedForm,
    Search,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SsdResult {
    pub feasible: bool,
    /// Lower bound `B` on the effective size; `None` for search results.
    pub effective_bound: Option<f64>,
    /// Continuous total at the exact allocation ratio; `None` for search results.
    pub real_total: Option<f64>,
    pub n_a: u64,
    pub n_b: u64,
    /// Criterion metric evaluated at `(n_a, n_b)`.
    pub achieved: f64,
    pub method: Method,
}

impl SsdResult {
    pub fn total(&self) -> u64 {
        self.n_a + self.n_b
    }

    /// True when the prior alone already meets the criterion.
    pub fn needs_no_sample(&self) -> bool {
        self.total() == 0
    }
}

/// Effective-size bound with `σ₀²` known. ACC and ALC share the bound.
pub fn effective_bound_known(
    prior: &CollectivePrior,
    crit: &Criterion,
    sigma2: f64,
) -> Result<f64> {
    check_positive("sigma0^2", sigma2)?;
    Ok((crit.precision_target()? - 1.0 / prior.variance()) * sigma2)
}

/// Effective-size bound with `σ₀²` replaced by its prior mean `c·S/(c−2)`.
pub fn effective_bound_unknown(prior: &CollectivePrior, crit: &Criterion, c: f64) -> Result<f64> {
    if let Criterion::Alc { .. } = crit {
        return Err(domain(
            "ALC with unknown variance has no closed-form bound; use alc_unknown_search",
        ));
    }
    let expected = VarianceModel::unknown(c)?.expected_sigma2(prior)?;
    Ok((crit.precision_target()? - 1.0 / prior.variance()) * expected)
}

/// Smallest total whose split has effective size at least `bound`.
pub fn minimal_total(bound: f64, alloc: &Allocation) -> Result<u64> {
    if bound <= 0.0 {
        return Ok(0);
    }
    if !bound.is_finite() {
        return Err(domain(format!(
            "effective-size bound must be finite, got {bound}"
        )));
    }
    // every split of n has effective size at most n/4
    let mut n = ((4.0 * bound).floor() as u64).max(1);
    loop {
        let (a, b) = alloc.split(n);
        if effective_size(a, b) >= bound {
            return Ok(n);
        }
        n = n
            .checked_add(1)
            .ok_or_else(|| Error::Search(format!("no total reaches effective size {bound}")))?;
    }
}

/// Criterion metric at a given design, averaged over `σ₀²` when unknown.
pub fn achieved_metric(
    prior: &CollectivePrior,
    crit: &Criterion,
    vm: &VarianceModel,
    n_a: u64,
    n_b: u64,
    spec: &QuadratureSpec,
) -> Result<f64> {
    match *crit {
        Criterion::Acc { l0, .. } => average_coverage(prior, vm, n_a, n_b, l0, spec),
        Criterion::Alc { alpha0, .. } => average_length(prior, vm, n_a, n_b, alpha0, spec),
        Criterion::Apvc { .. } => average_posterior_variance(prior, vm, n_a, n_b, spec),
    }
}

/// Whether `achieved` meets the criterion's target.
pub fn meets(crit: &Criterion, achieved: f64) -> bool {
    match *crit {
        Criterion::Acc { alpha, .. } => achieved >= 1.0 - alpha,
        Criterion::Alc { l, .. } => achieved <= l,
        Criterion::Apvc { eps0 } => achieved <= eps0,
    }
}

fn closed_form(
    prior: &CollectivePrior,
    crit: &Criterion,
    vm: &VarianceModel,
    alloc: &Allocation,
    bound: f64,
    spec: &QuadratureSpec,
) -> Result<SsdResult> {
    let total = minimal_total(bound, alloc)?;
    let (n_a, n_b) = if total == 0 {
        (0, 0)
    } else {
        alloc.split(total)
    };
    Ok(SsdResult {
        feasible: true,
        effective_bound: Some(bound),
        real_total: Some(if bound > 0.0 {
            bound * alloc.total_per_effective_size()
        } else {
            0.0
        }),
        n_a,
        n_b,
        achieved: achieved_metric(prior, crit, vm, n_a, n_b, spec)?,
        method: Method::ClosedForm,
    })
}

/// [`solve`] with an explicit quadrature tolerance.
pub fn solve_with(
    prior: &CollectivePrior,
    crit: &Criterion,
    vm: &VarianceModel,
    alloc: &Allocation,
    spec: &QuadratureSpec,
) -> Result<SsdResult> {
    crit.validate()?;
    match (*vm, *crit) {
        (VarianceModel::Known(sigma2), _) => {
            let bound = effective_bound_known(prior, crit, sigma2)?;
            closed_form(prior, crit, vm, alloc, bound, spec)
        }
        (VarianceModel::Unknown(c), Criterion::Alc { l, alpha0 }) => {
            alc_unknown_search(prior, l, alpha0, c, alloc, spec)
        }
        (VarianceModel::Unknown(c), _) => {
            let bound = effective_bound_unknown(prior, crit, c)?;
            closed_form(prior, crit, vm, alloc, bound, spec)
        }
    }
}

/// Required sample size for one criterion under one variance model.
pub fn solve(
    prior: &CollectivePrior,
    crit: &Criterion,
    vm: &VarianceModel,
    alloc: &Allocation,
) -> Result<SsdResult> {
    solve_with(prior, crit, vm, alloc, &QuadratureSpec::default())
}

/// Best case: `σ₀²` known and equal to the collective prior variance.
pub fn optimal_benchmark(
    prior: &CollectivePrior,
    crit: &Criterion,
    alloc: &Allocation,
) -> Result<SsdResult> {
    solve(prior, crit, &VarianceModel::Known(prior.variance()), alloc)
}
