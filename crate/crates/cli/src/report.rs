//! Plain-text reports. Every function returns the full text so output is
//! byte-stable and testable.

use std::fmt::Write;

use commensurate_ssd::collective::{hellinger_matrix, prior_credible_interval, CollectivePrior};
use commensurate_ssd::montecarlo::{
    simulate_average_coverage, simulate_average_length, simulate_average_posterior_variance,
    SimulationEstimate, SimulationPlan,
};
use commensurate_ssd::posterior::VarianceModel;
use commensurate_ssd::ssd::{meets, Allocation, Criterion, Method, SsdResult};

use crate::config::{Design, Mode};
use crate::error::Result;

fn describe_variance(vm: &VarianceModel) -> String {
    match *vm {
        VarianceModel::Known(s2) => format!("known sigma0^2 = {s2}"),
        VarianceModel::Unknown(c) => format!("unknown sigma0^2, c = {c}"),
    }
}

fn describe_allocation(a: &Allocation) -> String {
    format!("{}:{}", a.ratio_a(), a.ratio_b())
}

fn describe_target(c: &Criterion) -> String {
    match *c {
        Criterion::Acc { l0, alpha } => format!("coverage >= {} at length {l0}", 1.0 - alpha),
        Criterion::Alc { l, alpha0 } => format!("length <= {l} at {} coverage", 1.0 - alpha0),
        Criterion::Apvc { eps0 } => format!("posterior variance <= {eps0}"),
    }
}

fn metric_name(c: &Criterion) -> &'static str {
    match c {
        Criterion::Acc { .. } => "coverage",
        Criterion::Alc { .. } => "length",
        Criterion::Apvc { .. } => "variance",
    }
}

fn prior_line(prior: &CollectivePrior) -> String {
    format!("N({:.4}, {:.4})", prior.mean(), prior.variance())
}

pub fn prior_report(design: &Design, mode: Mode) -> Result<String> {
    let prior = design.prior(mode)?;
    let mut out = String::new();
    writeln!(out, "collective prior, mode {}", mode.name()).unwrap();
    writeln!(
        out,
        "{:>6} {:>8} {:>8} {:>7} {:>8} {:>9} {:>8}",
        "source", "m", "s2", "w", "p", "lambda", "xi2"
    )
    .unwrap();
    for (k, (s, c)) in design.sources.iter().zip(prior.per_source()).enumerate() {
        writeln!(
            out,
            "{:>6} {:>8.4} {:>8.4} {:>7.3} {:>8.4} {:>9.4} {:>8.4}",
            k + 1,
            s.m,
            s.v,
            s.w.value(),
            c.p,
            c.lambda,
            c.xi2
        )
        .unwrap();
    }
    let (lo, hi) = prior_credible_interval(&prior, 0.95)?;
    writeln!(out, "mean {:.4}", prior.mean()).unwrap();
    writeln!(out, "variance {:.4}", prior.variance()).unwrap();
    writeln!(out, "95% interval ({lo:.4}, {hi:.4})").unwrap();
    writeln!(out).unwrap();
    out.push_str(&hellinger_report(design));
    Ok(out)
}

pub fn hellinger_report(design: &Design) -> String {
    let h = hellinger_matrix(&design.sources);
    let mut out = String::from("squared Hellinger distances\n");
    write!(out, "{:>6}", "").unwrap();
    for k in 1..=h.len() {
        write!(out, " {k:>7}").unwrap();
    }
    out.push('\n');
    for (i, row) in h.iter().enumerate() {
        write!(out, "{:>6}", i + 1).unwrap();
        for d in row {
            write!(out, " {d:>7.4}").unwrap();
        }
        out.push('\n');
    }
    let largest = h.iter().flatten().copied().fold(0.0, f64::max);
    writeln!(out, "largest distance {largest:.4}").unwrap();
    out
}

/// Closed forms print the continuous total to 1 dp; searches print integers.
pub fn format_total(r: &SsdResult) -> String {
    match (r.method, r.real_total) {
        (Method::ClosedForm, Some(t)) => format!("{t:.1}"),
        _ => r.total().to_string(),
    }
}

pub fn ssd_report(design: &Design, mode: Mode) -> Result<String> {
    let prior = design.prior(mode)?;
    let mut out = String::new();
    writeln!(
        out,
        "prior {} (mode {}), {}, allocation {}",
        prior_line(&prior),
        mode.name(),
        describe_variance(&design.variance),
        describe_allocation(&design.alloc)
    )
    .unwrap();
    writeln!(
        out,
        "{:<9} {:<38} {:<11} {:>7} {:>6} {:>6}  achieved",
        "criterion", "target", "method", "total", "n_A", "n_B"
    )
    .unwrap();
    let mut zero_sample = false;
    for crit in &design.criteria {
        let r = design.solve(mode, crit)?;
        let method = match r.method {
            Method::ClosedForm => "closed form",
            Method::Search => "search",
        };
        writeln!(
            out,
            "{:<9} {:<38} {:<11} {:>7} {:>6} {:>6}  {} {:.4}",
            crit.name(),
            describe_target(crit),
            method,
            format_total(&r),
            r.n_a,
            r.n_b,
            metric_name(crit),
            r.achieved
        )
        .unwrap();
        zero_sample |= r.needs_no_sample();
    }
    if zero_sample {
        writeln!(
            out,
            "note: a total of 0 means the prior alone already meets that criterion, so no new experiment is needed"
        )
        .unwrap();
    }
    Ok(out)
}

/// Interval-length parameters for the coverage and length metrics, taken
/// from whichever criteria carry them.
fn interval_settings(criteria: &[Criterion]) -> (Option<f64>, Option<f64>) {
    let mut l0 = None;
    let mut alpha0 = None;
    for c in criteria {
        match *c {
            Criterion::Acc { l0: l, alpha } => {
                l0 = Some(l);
                alpha0 = alpha0.or(Some(alpha));
            }
            Criterion::Alc { l, alpha0: a } => {
                l0 = l0.or(Some(l));
                alpha0 = Some(a);
            }
            Criterion::Apvc { .. } => {}
        }
    }
    (l0, alpha0)
}

fn verdict(crit: Option<&Criterion>, est: &SimulationEstimate) -> &'static str {
    let slack = 3.0 * est.std_error;
    match crit {
        None => "-",
        Some(c @ Criterion::Acc { .. }) if meets(c, est.value + slack) => "pass",
        Some(c @ (Criterion::Alc { .. } | Criterion::Apvc { .. }))
            if meets(c, est.value - slack) =>
        {
            "pass"
        }
        Some(_) => "fail",
    }
}

/// Monte Carlo estimates of all three metrics at a given total, each judged
/// against its configured criterion with three standard errors of slack.
pub fn verify_report(
    design: &Design,
    mode: Mode,
    total: u64,
    draws: u64,
    seed: u64,
) -> Result<String> {
    let prior = design.prior(mode)?;
    let vm = match mode {
        Mode::Optimal => VarianceModel::Known(prior.variance()),
        _ => design.variance,
    };
    let (n_a, n_b) = design.alloc.split(total);
    let plan = SimulationPlan::new(draws, seed)?;
    let find = |pred: fn(&Criterion) -> bool| design.criteria.iter().find(|c| pred(c));
    let acc = find(|c| matches!(c, Criterion::Acc { .. }));
    let alc = find(|c| matches!(c, Criterion::Alc { .. }));
    let apvc = find(|c| matches!(c, Criterion::Apvc { .. }));
    let (l0, alpha0) = interval_settings(&design.criteria);

    let mut out = String::new();
    writeln!(
        out,
        "prior {} (mode {}), {}",
        prior_line(&prior),
        mode.name(),
        describe_variance(&vm)
    )
    .unwrap();
    writeln!(
        out,
        "total {total} (n_A {n_a}, n_B {n_b}), {draws} draws, seed {seed}"
    )
    .unwrap();
    writeln!(
        out,
        "{:<9} {:<26} {:>10} {:>10}  {:<38} verdict",
        "metric", "setting", "estimate", "std error", "target"
    )
    .unwrap();
    let mut row =
        |metric: &str, setting: String, crit: Option<&Criterion>, est: &SimulationEstimate| {
            let target = crit.map(describe_target).unwrap_or_else(|| "-".into());
            writeln!(
                out,
                "{metric:<9} {setting:<26} {:>10.5} {:>10.5}  {target:<38} {}",
                est.value,
                est.std_error,
                verdict(crit, est)
            )
            .unwrap();
        };
    if let Some(l0) = l0 {
        let est = simulate_average_coverage(&prior, &vm, n_a, n_b, l0, &plan)?;
        row("coverage", format!("interval length {l0}"), acc, &est);
    }
    if let Some(alpha0) = alpha0 {
        let est = simulate_average_length(&prior, &vm, n_a, n_b, alpha0, &plan)?;
        row(
            "length",
            format!("{} credible interval", 1.0 - alpha0),
            alc,
            &est,
        );
    }
    let est = simulate_average_posterior_variance(&prior, &vm, n_a, n_b, &plan)?;
    row("variance", "posterior variance".into(), apvc, &est);
    if l0.is_none() {
        writeln!(
            out,
            "coverage and length need an ACC or ALC criterion to fix the interval"
        )
        .unwrap();
    }
    Ok(out)
}
