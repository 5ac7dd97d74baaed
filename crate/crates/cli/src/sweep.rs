//! Parameter sweeps emitting one CSV row per (axis value, mode, criterion).

use std::io::Write;

use rayon::prelude::*;

use commensurate_ssd::commensurate::GammaMixtureHyper;
use commensurate_ssd::posterior::VarianceModel;
use commensurate_ssd::ssd::{Criterion, Method, SsdResult};

use crate::config::{Design, Mode};
use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Axis {
    /// ACC `alpha` and ALC `alpha0` together.
    #[value(name = "alpha")]
    Alpha,
    #[value(name = "l0")]
    L0,
    #[value(name = "l")]
    L,
    #[value(name = "eps0")]
    Eps0,
    /// Degrees of freedom; switches the design to unknown variance.
    #[value(name = "c")]
    C,
    #[value(name = "a02")]
    A02,
    #[value(name = "b02")]
    B02,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Self::Alpha => "alpha",
            Self::L0 => "l0",
            Self::L => "l",
            Self::Eps0 => "eps0",
            Self::C => "c",
            Self::A02 => "a02",
            Self::B02 => "b02",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub axis: Axis,
    pub value: f64,
    pub mode: Mode,
    pub criterion: Criterion,
    pub result: SsdResult,
}

fn invalid(axis: Axis, value: f64, e: impl std::fmt::Display) -> CliError {
    CliError::Invalid(format!("sweep {} = {value}: {e}", axis.name()))
}

/// The design with one axis set to `value`.
pub fn apply(design: &Design, axis: Axis, value: f64) -> Result<Design> {
    let mut d = design.clone();
    match axis {
        Axis::C => {
            d.variance = VarianceModel::unknown(value).map_err(|e| invalid(axis, value, e))?;
            d.check_moments().map_err(|e| invalid(axis, value, e))?;
        }
        Axis::A02 | Axis::B02 => {
            let (a02, b02) = match axis {
                Axis::A02 => (value, d.hyper.b02()),
                _ => (d.hyper.a02(), value),
            };
            if a02 <= 1.0 {
                return Err(invalid(
                    axis,
                    value,
                    "a02 must exceed 1 for the normal approximation",
                ));
            }
            d.hyper = GammaMixtureHyper::new(d.hyper.a01(), d.hyper.b01(), a02, b02)
                .map_err(|e| invalid(axis, value, e))?;
        }
        _ => {
            for c in &mut d.criteria {
                let updated = match (*c, axis) {
                    (Criterion::Acc { l0, .. }, Axis::Alpha) => Criterion::acc(l0, value),
                    (Criterion::Alc { l, .. }, Axis::Alpha) => Criterion::alc(l, value),
                    (Criterion::Acc { alpha, .. }, Axis::L0) => Criterion::acc(value, alpha),
                    (Criterion::Alc { alpha0, .. }, Axis::L) => Criterion::alc(value, alpha0),
                    (Criterion::Apvc { .. }, Axis::Eps0) => Criterion::apvc(value),
                    (same, _) => Ok(same),
                };
                *c = updated.map_err(|e| invalid(axis, value, e))?;
            }
        }
    }
    Ok(d)
}

/// Rows ordered by axis value, then mode, then criterion as configured.
pub fn run(design: &Design, axis: Axis, values: &[f64], modes: &[Mode]) -> Result<Vec<SweepRow>> {
    if values.is_empty() {
        return Err(CliError::Invalid("sweep needs at least one value".into()));
    }
    if modes.is_empty() {
        return Err(CliError::Invalid("sweep needs at least one mode".into()));
    }
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(CliError::Invalid(format!(
            "sweep values must be finite, got {v}"
        )));
    }
    let designs = values
        .iter()
        .map(|&v| apply(design, axis, v))
        .collect::<Result<Vec<_>>>()?;
    let jobs: Vec<(usize, Mode, Criterion)> = designs
        .iter()
        .enumerate()
        .flat_map(|(i, d)| {
            modes
                .iter()
                .flat_map(move |&m| d.criteria.iter().map(move |&c| (i, m, c)))
        })
        .collect();
    let solved: Vec<_> = jobs
        .par_iter()
        .map(|&(i, mode, crit)| designs[i].solve(mode, &crit))
        .collect();
    jobs.into_iter()
        .zip(solved)
        .map(|((i, mode, criterion), result)| {
            Ok(SweepRow {
                axis,
                value: values[i],
                mode,
                criterion,
                result: result?,
            })
        })
        .collect()
}

pub const HEADER: &str = "axis_name,axis_value,mode,criterion,real_total,nA,nB,achieved";

pub fn write_csv<W: Write>(rows: &[SweepRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{HEADER}")?;
    for r in rows {
        let real_total = match (r.result.method, r.result.real_total) {
            (Method::ClosedForm, Some(t)) => format!("{t:.4}"),
            _ => String::new(),
        };
        writeln!(
            out,
            "{},{},{},{},{},{},{},{:.6}",
            r.axis.name(),
            r.value,
            r.mode.name(),
            r.criterion.name(),
            real_total,
            r.result.n_a,
            r.result.n_b,
            r.result.achieved
        )?;
    }
    out.flush()
}
