//! Synthesis of K historical summaries into one normal prior for the mean
//! difference `μ_Δ = Σ p_k θ̃_k`.

use crate::commensurate::{CommensurabilityWeight, GammaMixtureHyper};
use crate::distributions::{upper_normal_quantile, NormalParams};
use crate::error::{domain, Error, Result};

/// Normal summary `θ_k | y_k ~ N(m, v)` of one historical source together
/// with its incommensurability weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistoricalSummary {
    pub m: f64,
    /// Posterior variance `s_k²` (squared measurement units, not an SD).
    pub v: f64,
    pub w: CommensurabilityWeight,
}

impl HistoricalSummary {
    pub fn new(m: f64, v: f64, w: f64) -> Result<Self> {
        if !m.is_finite() {
            return Err(domain(format!("source mean must be finite, got {m}")));
        }
        if !(v > 0.0 && v.is_finite()) {
            return Err(domain(format!("source variance must be positive, got {v}")));
        }
        Ok(Self {
            m,
            v,
            w: CommensurabilityWeight::new(w)?,
        })
    }

    fn with_weight(self, w: f64) -> Self {
        Self {
            w: CommensurabilityWeight::new(w).expect("literal weight in [0, 1]"),
            ..self
        }
    }
}

/// Softmax rule `p_k ∝ exp(−w_k²/s0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightRule {
    s0: f64,
}

impl WeightRule {
    pub fn new(s0: f64) -> Result<Self> {
        if s0 > 0.0 && s0.is_finite() {
            Ok(Self { s0 })
        } else {
            Err(domain(format!(
                "weight concentration s0 must be positive, got {s0}"
            )))
        }
    }

    pub fn s0(&self) -> f64 {
        self.s0
    }
}

/// One source's contribution to the collective prior.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceContribution {
    /// Marginal prior mean `λ_k = m_k`.
    pub lambda: f64,
    /// Marginal prior variance `ξ_k² = s_k² + predictive variance`.
    pub xi2: f64,
    pub p: f64,
}

/// `N(Σ p_k λ_k, Σ p_k² ξ_k²)`, with the per-source terms kept for reporting.
#[derive(Debug, Clone, PartialEq)]
pub struct CollectivePrior {
    per_source: Vec<SourceContribution>,
    mean: f64,
    variance: f64,
}

impl CollectivePrior {
    /// Wraps an arbitrary normal prior as a single-source collective prior.
    pub fn from_normal(prior: NormalParams) -> Self {
        Self {
            per_source: vec![SourceContribution {
                lambda: prior.mean(),
                xi2: prior.variance(),
                p: 1.0,
            }],
            mean: prior.mean(),
            variance: prior.variance(),
        }
    }

    pub fn per_source(&self) -> &[SourceContribution] {
        &self.per_source
    }

    pub fn num_sources(&self) -> usize {
        self.per_source.len()
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// `S = Σ p_k² ξ_k²`.
    pub fn variance(&self) -> f64 {
        self.variance
    }

    pub fn as_normal(&self) -> NormalParams {
        NormalParams::new(self.mean, self.variance).expect("collective prior variance is positive")
    }
}

pub fn compute_weights(ws: &[CommensurabilityWeight], rule: &WeightRule) -> Result<Vec<f64>> {
    if ws.is_empty() {
        return Err(domain("at least one source weight is required"));
    }
    let exponents: Vec<f64> = ws
        .iter()
        .map(|w| -w.value() * w.value() / rule.s0)
        .collect();
    let top = exponents.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let unnormalized: Vec<f64> = exponents.iter().map(|e| (e - top).exp()).collect();
    let total: f64 = unnormalized.iter().sum();
    Ok(unnormalized.into_iter().map(|u| u / total).collect())
}

/// Assembles the collective prior from explicit source weights `p`.
pub fn build_with_weights(
    sources: &[HistoricalSummary],
    hyper: &GammaMixtureHyper,
    p: &[f64],
) -> Result<CollectivePrior> {
    if sources.is_empty() {
        return Err(domain("at least one historical source is required"));
    }
    if p.len() != sources.len() {
        return Err(domain(format!(
            "{} weights given for {} sources",
            p.len(),
            sources.len()
        )));
    }
    let per_source = sources
        .iter()
        .zip(p)
        .map(|(s, &p)| {
            Ok(SourceContribution {
                lambda: s.m,
                xi2: s.v + hyper.predictive_variance(s.w)?,
                p,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mean = per_source.iter().map(|c| c.p * c.lambda).sum();
    let variance = per_source.iter().map(|c| c.p * c.p * c.xi2).sum();
    Ok(CollectivePrior {
        per_source,
        mean,
        variance,
    })
}

pub fn build_collective_prior(
    sources: &[HistoricalSummary],
    hyper: &GammaMixtureHyper,
    rule: &WeightRule,
) -> Result<CollectivePrior> {
    let ws: Vec<_> = sources.iter().map(|s| s.w).collect();
    let p = compute_weights(&ws, rule)?;
    build_with_weights(sources, hyper, &p)
}

/// Central credible interval `mean ± z·√S` at the given coverage level.
pub fn prior_credible_interval(prior: &CollectivePrior, level: f64) -> Result<(f64, f64)> {
    if !(level > 0.0 && level < 1.0) {
        return Err(domain(format!(
            "credible level must lie in (0, 1), got {level}"
        )));
    }
    let half = upper_normal_quantile(0.5 * (1.0 - level))? * prior.variance.sqrt();
    Ok((prior.mean - half, prior.mean + half))
}

/// Squared Hellinger distance between two normals, in `[0, 1]`.
pub fn hellinger_squared(p: &NormalParams, q: &NormalParams) -> f64 {
    let (vp, vq) = (p.variance(), q.variance());
    let sum = vp + vq;
    let d = p.mean() - q.mean();
    let affinity = (2.0 * (vp * vq).sqrt() / sum).sqrt() * (-d * d / (4.0 * sum)).exp();
    (1.0 - affinity).clamp(0.0, 1.0)
}

/// Pairwise squared Hellinger distances between the sources' `N(m_k, s_k²)`.
pub fn hellinger_matrix(sources: &[HistoricalSummary]) -> Vec<Vec<f64>> {
    let normals: Vec<NormalParams> = sources
        .iter()
        .map(|s| NormalParams::new(s.m, s.v).expect("validated summary"))
        .collect();
    normals
        .iter()
        .map(|a| normals.iter().map(|b| hellinger_squared(a, b)).collect())
        .collect()
}

/// Comparison baselines for the weighting scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightingMode {
    /// Weights exactly as supplied.
    Robust,
    /// Every `w_k` forced to 0.
    NoRobustification,
    /// Every `w_k` forced to 1.
    NoBorrowing,
    /// All prior mass `p_k = 1` on one source (zero-based index).
    SingleSource(usize),
}

pub fn special_weighting(
    sources: &[HistoricalSummary],
    hyper: &GammaMixtureHyper,
    rule: &WeightRule,
    mode: WeightingMode,
) -> Result<CollectivePrior> {
    match mode {
        WeightingMode::Robust => build_collective_prior(sources, hyper, rule),
        WeightingMode::NoRobustification | WeightingMode::NoBorrowing => {
            let w = if mode == WeightingMode::NoBorrowing {
                1.0
            } else {
                0.0
            };
            let forced: Vec<_> = sources.iter().map(|s| s.with_weight(w)).collect();
            build_collective_prior(&forced, hyper, rule)
        }
        WeightingMode::SingleSource(k) => {
            if k >= sources.len() {
                return Err(Error::IndexOutOfRange {
                    index: k,
                    len: sources.len(),
                });
            }
            let p: Vec<f64> = (0..sources.len())
                .map(|i| if i == k { 1.0 } else { 0.0 })
                .collect();
            build_with_weights(sources, hyper, &p)
        }
    }
}

/// Index of the source with the smallest variance `s_k²`.
pub fn most_informative_source(sources: &[HistoricalSummary]) -> Option<usize> {
    sources
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.v.total_cmp(&b.1.v))
        .map(|(i, _)| i)
}
