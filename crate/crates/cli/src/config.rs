//! JSON design configuration.
//!
//! ```json
//! {
//!   "sources": [{"m": -0.26, "s2": 0.25, "w": 0.15}],
//!   "hyper": {"a01": 2, "b01": 2, "a02": 18, "b02": 3},
//!   "weight_rule": {"s0": 0.05},
//!   "variance": {"known": 0.35},
//!   "allocation": {"ratio_A": 1, "ratio_B": 1},
//!   "criteria": [{"kind": "ACC", "l0": 0.65, "alpha": 0.05}],
//!   "single_source": 3
//! }
//! ```
//!
//! `s2` is a variance, never a standard deviation. `variance` is either
//! `{"known": sigma2}` or `{"unknown": c}`. `allocation` defaults to 1:1 and
//! `single_source` (1-based) to the source with the smallest `s2`.

use std::path::Path;

use serde::Deserialize;

use commensurate_ssd::collective::{
    build_collective_prior, most_informative_source, special_weighting, CollectivePrior,
    HistoricalSummary, WeightRule, WeightingMode,
};
use commensurate_ssd::commensurate::GammaMixtureHyper;
use commensurate_ssd::posterior::VarianceModel;
use commensurate_ssd::ssd::{optimal_benchmark, solve, Allocation, Criterion, SsdResult};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceSpec {
    pub m: f64,
    pub s2: f64,
    pub w: f64,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HyperSpec {
    pub a01: f64,
    pub b01: f64,
    pub a02: f64,
    pub b02: f64,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightRuleSpec {
    pub s0: f64,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum VarianceSpec {
    Known(f64),
    Unknown(f64),
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AllocationSpec {
    #[serde(rename = "ratio_A")]
    pub ratio_a: u32,
    #[serde(rename = "ratio_B")]
    pub ratio_b: u32,
}

impl Default for AllocationSpec {
    fn default() -> Self {
        Self {
            ratio_a: 1,
            ratio_b: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(tag = "kind", deny_unknown_fields)]
pub enum CriterionSpec {
    #[serde(rename = "ACC")]
    Acc { l0: f64, alpha: f64 },
    #[serde(rename = "ALC")]
    Alc { l: f64, alpha0: f64 },
    #[serde(rename = "APVC")]
    Apvc { eps0: f64 },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignConfig {
    pub sources: Vec<SourceSpec>,
    pub hyper: HyperSpec,
    pub weight_rule: WeightRuleSpec,
    pub variance: VarianceSpec,
    #[serde(default)]
    pub allocation: AllocationSpec,
    pub criteria: Vec<CriterionSpec>,
    #[serde(default)]
    pub single_source: Option<usize>,
}

/// A validated configuration in model types.
#[derive(Debug, Clone)]
pub struct Design {
    pub sources: Vec<HistoricalSummary>,
    pub hyper: GammaMixtureHyper,
    pub rule: WeightRule,
    pub variance: VarianceModel,
    pub alloc: Allocation,
    pub criteria: Vec<Criterion>,
    /// Zero-based source used by the single-source mode.
    pub single_source: usize,
}

/// Ways of turning the sources into a prior, plus the known-variance benchmark.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Mode {
    #[value(name = "robust")]
    Robust,
    #[value(name = "no_robustification")]
    NoRobustification,
    #[value(name = "no_borrowing")]
    NoBorrowing,
    #[value(name = "single_source")]
    SingleSource,
    #[value(name = "optimal")]
    Optimal,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Self::Robust => "robust",
            Self::NoRobustification => "no_robustification",
            Self::NoBorrowing => "no_borrowing",
            Self::SingleSource => "single_source",
            Self::Optimal => "optimal",
        }
    }
}

fn invalid(field: impl std::fmt::Display, e: impl std::fmt::Display) -> CliError {
    CliError::Invalid(format!("{field}: {e}"))
}

pub fn load(path: &Path) -> Result<Design> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    let config: DesignConfig = serde_json::from_str(&text).map_err(|e| CliError::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    config.validate()
}

impl DesignConfig {
    pub fn validate(self) -> Result<Design> {
        if self.sources.is_empty() {
            return Err(invalid("sources", "at least one source is required"));
        }
        let sources = self
            .sources
            .iter()
            .enumerate()
            .map(|(i, s)| {
                if !(0.0..=1.0).contains(&s.w) {
                    return Err(invalid(
                        format_args!("sources[{i}].w"),
                        format_args!("must lie in [0, 1], got {}", s.w),
                    ));
                }
                if !(s.s2 > 0.0 && s.s2.is_finite()) {
                    return Err(invalid(
                        format_args!("sources[{i}].s2"),
                        format_args!("must be a positive variance, got {}", s.s2),
                    ));
                }
                HistoricalSummary::new(s.m, s.s2, s.w)
                    .map_err(|e| invalid(format_args!("sources[{i}]"), e))
            })
            .collect::<Result<Vec<_>>>()?;

        let h = self.hyper;
        let hyper =
            GammaMixtureHyper::new(h.a01, h.b01, h.a02, h.b02).map_err(|e| invalid("hyper", e))?;
        for (name, a) in [("hyper.a01", h.a01), ("hyper.a02", h.a02)] {
            if a <= 1.0 {
                return Err(invalid(
                    name,
                    format_args!("must exceed 1 for the normal approximation, got {a}"),
                ));
            }
        }
        let rule =
            WeightRule::new(self.weight_rule.s0).map_err(|e| invalid("weight_rule.s0", e))?;
        let variance = match self.variance {
            VarianceSpec::Known(s2) => {
                VarianceModel::known(s2).map_err(|e| invalid("variance.known", e))?
            }
            VarianceSpec::Unknown(c) => {
                VarianceModel::unknown(c).map_err(|e| invalid("variance.unknown", e))?
            }
        };
        let alloc = Allocation::new(self.allocation.ratio_a, self.allocation.ratio_b)
            .map_err(|e| invalid("allocation", e))?;

        if self.criteria.is_empty() {
            return Err(invalid("criteria", "at least one criterion is required"));
        }
        let criteria = self
            .criteria
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let built = match *c {
                    CriterionSpec::Acc { l0, alpha } => Criterion::acc(l0, alpha),
                    CriterionSpec::Alc { l, alpha0 } => Criterion::alc(l, alpha0),
                    CriterionSpec::Apvc { eps0 } => Criterion::apvc(eps0),
                };
                built.map_err(|e| invalid(format_args!("criteria[{i}]"), e))
            })
            .collect::<Result<Vec<_>>>()?;

        let single_source = match self.single_source {
            None => most_informative_source(&sources).expect("sources are nonempty"),
            Some(k) if k >= 1 && k <= sources.len() => k - 1,
            Some(k) => {
                return Err(invalid(
                    "single_source",
                    format_args!("must be a 1-based index in 1..={}, got {k}", sources.len()),
                ))
            }
        };

        let design = Design {
            sources,
            hyper,
            rule,
            variance,
            alloc,
            criteria,
            single_source,
        };
        design.check_moments()?;
        Ok(design)
    }
}

impl Design {
    /// ACC and APVC with unknown variance need `E[σ₀²]`, which requires `c > 2`.
    pub fn check_moments(&self) -> Result<()> {
        if let VarianceModel::Unknown(c) = self.variance {
            if c <= 2.0 {
                if let Some(i) = self
                    .criteria
                    .iter()
                    .position(|k| !matches!(k, Criterion::Alc { .. }))
                {
                    return Err(invalid(
                        format_args!("variance.unknown with criteria[{i}] ({})", self.criteria[i].name()),
                        format_args!(
                            "E[sigma0^2] under Inv-Gamma(c/2, c*S/2) exists only for c > 2; got c = {c}"
                        ),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn prior(&self, mode: Mode) -> commensurate_ssd::Result<CollectivePrior> {
        let weighting = match mode {
            Mode::Robust | Mode::Optimal => {
                return build_collective_prior(&self.sources, &self.hyper, &self.rule)
            }
            Mode::NoRobustification => WeightingMode::NoRobustification,
            Mode::NoBorrowing => WeightingMode::NoBorrowing,
            Mode::SingleSource => WeightingMode::SingleSource(self.single_source),
        };
        special_weighting(&self.sources, &self.hyper, &self.rule, weighting)
    }

    pub fn solve(&self, mode: Mode, crit: &Criterion) -> commensurate_ssd::Result<SsdResult> {
        let prior = self.prior(mode)?;
        match mode {
            Mode::Optimal => optimal_benchmark(&prior, crit, &self.alloc),
            _ => solve(&prior, crit, &self.variance, &self.alloc),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const WORKED: &str = r#"{
        "sources": [
            {"m": -0.26, "s2": 0.25, "w": 0.15},
            {"m": -0.24, "s2": 0.23, "w": 0.20},
            {"m": -0.37, "s2": 0.22, "w": 0.17},
            {"m": -0.34, "s2": 0.36, "w": 0.13},
            {"m": -0.32, "s2": 0.26, "w": 0.20}
        ],
        "hyper": {"a01": 2, "b01": 2, "a02": 18, "b02": 3},
        "weight_rule": {"s0": 0.05},
        "variance": {"unknown": 5},
        "criteria": [
            {"kind": "ACC", "l0": 0.65, "alpha": 0.05},
            {"kind": "ALC", "l": 0.65, "alpha0": 0.05},
            {"kind": "APVC", "eps0": 0.03}
        ]
    }"#;

    fn parse(text: &str) -> Result<Design> {
        serde_json::from_str::<DesignConfig>(text)
            .map_err(|e| CliError::Parse {
                path: "inline".into(),
                message: e.to_string(),
            })?
            .validate()
    }

    fn message(r: Result<Design>) -> String {
        r.unwrap_err().to_string()
    }

    #[test]
    fn worked_example_parses() {
        let d = parse(WORKED).unwrap();
        assert_eq!(d.sources.len(), 5);
        assert_eq!(d.criteria.len(), 3);
        assert_eq!(d.alloc, Allocation::equal());
        assert_eq!(d.single_source, 2);
        assert_eq!(d.variance, VarianceModel::Unknown(5.0));
    }

    #[test]
    fn errors_name_the_field() {
        assert!(
            message(parse(&WORKED.replace("\"w\": 0.17", "\"w\": 1.7"))).contains("sources[2].w")
        );
        assert!(
            message(parse(&WORKED.replace("\"s2\": 0.36", "\"s2\": -0.36")))
                .contains("sources[3].s2")
        );
        assert!(
            message(parse(&WORKED.replace("\"s0\": 0.05", "\"s0\": 0"))).contains("weight_rule.s0")
        );
        assert!(
            message(parse(&WORKED.replace("\"alpha\": 0.05", "\"alpha\": 1.5")))
                .contains("criteria[0]")
        );
        let m = message(parse(
            &WORKED.replace("{\"unknown\": 5}", "{\"unknown\": 2}"),
        ));
        assert!(m.contains("variance.unknown") && m.contains("c > 2"), "{m}");
        assert!(message(parse(&WORKED.replace("\"a02\": 18", "\"a02\": 1"))).contains("hyper"));
        let m = message(parse(
            &WORKED.replace("\"criteria\"", "\"single_source\": 9, \"criteria\""),
        ));
        assert!(m.contains("single_source"), "{m}");
    }

    #[test]
    fn unknown_fields_rejected() {
        assert!(parse(&WORKED.replace("\"s0\": 0.05", "\"s0\": 0.05, \"sd\": 1")).is_err());
        assert!(parse(&WORKED.replace("\"eps0\": 0.03", "\"eps0\": 0.03, \"l\": 1")).is_err());
        assert!(parse(&WORKED.replace("\"kind\": \"APVC\"", "\"kind\": \"APV\"")).is_err());
    }

    #[test]
    fn alc_alone_allows_small_c() {
        let text = WORKED
            .replace("{\"unknown\": 5}", "{\"unknown\": 1.5}")
            .replace("{\"kind\": \"ACC\", \"l0\": 0.65, \"alpha\": 0.05},", "")
            .replace(",\n            {\"kind\": \"APVC\", \"eps0\": 0.03}", "");
        let d = parse(&text).unwrap();
        assert_eq!(d.criteria.len(), 1);
    }

    #[test]
    fn modes_build_priors() {
        let d = parse(WORKED).unwrap();
        let robust = d.prior(Mode::Robust).unwrap();
        assert!((robust.mean() + 0.309).abs() < 1e-3);
        let single = d.prior(Mode::SingleSource).unwrap();
        assert_eq!(single.per_source()[2].p, 1.0);
        assert!(d.prior(Mode::NoBorrowing).unwrap().variance() > robust.variance());
    }
}
