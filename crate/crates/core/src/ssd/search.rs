use crate::collective::CollectivePrior;
use crate::distributions::{upper_normal_quantile, QuadratureSpec};
use crate::error::{domain, Error, Result};
use crate::posterior::VarianceModel;

use super::{average_length, effective_size, Allocation, Method, SsdResult};

const MAX_TOTAL: u64 = 1 << 40;

/// Smallest total `n` whose split has average interval length at most `l`
/// when `σ₀² ~ Inv-Gamma(c/2, c·S/2)`.
///
/// Brackets by doubling from `n = 2`, then bisects. The average length is
/// strictly decreasing in the effective size, which is strictly increasing
/// in `n`, so the predicate is monotone.
pub fn alc_unknown_search(
    prior: &CollectivePrior,
    l: f64,
    alpha0: f64,
    c: f64,
    alloc: &Allocation,
    spec: &QuadratureSpec,
) -> Result<SsdResult> {
    if !(l > 0.0 && l.is_finite()) {
        return Err(domain(format!(
            "target length l must be positive and finite, got {l}"
        )));
    }
    if !(alpha0 > 0.0 && alpha0 < 1.0) {
        return Err(domain(format!("alpha0 must lie in (0, 1), got {alpha0}")));
    }
    let vm = VarianceModel::unknown(c)?;
    let z = upper_normal_quantile(0.5 * alpha0)?;
    let prior_length = 2.0 * z * prior.variance().sqrt();
    if l >= prior_length {
        return Ok(SsdResult {
            feasible: true,
            effective_bound: None,
            real_total: None,
            n_a: 0,
            n_b: 0,
            achieved: prior_length,
            method: Method::Search,
        });
    }

    let length_at = |n: u64| -> Result<f64> {
        let (a, b) = alloc.split(n);
        if effective_size(a, b) == 0.0 {
            return Ok(prior_length);
        }
        average_length(prior, &vm, a, b, alpha0, spec)
    };

    let mut lo = 1;
    let mut hi = 2;
    let mut hi_length = length_at(hi)?;
    while hi_length > l {
        if hi >= MAX_TOTAL {
            return Err(Error::Search(format!(
                "average length still {hi_length} > {l} at total {hi}"
            )));
        }
        lo = hi;
        hi *= 2;
        hi_length = length_at(hi)?;
    }
    // invariant: length_at(lo) > l >= length_at(hi)
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        let mid_length = length_at(mid)?;
        if mid_length <= l {
            hi = mid;
            hi_length = mid_length;
        } else {
            lo = mid;
        }
    }
    let (n_a, n_b) = alloc.split(hi);
    Ok(SsdResult {
        feasible: true,
        effective_bound: None,
        real_total: None,
        n_a,
        n_b,
        achieved: hi_length,
        method: Method::Search,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::NormalParams;
    use proptest::prelude::*;

    fn prior(variance: f64) -> CollectivePrior {
        CollectivePrior::from_normal(NormalParams::new(-0.2, variance).unwrap())
    }

    #[test]
    fn rejects_bad_targets() {
        let spec = QuadratureSpec::default();
        let p = prior(0.3);
        assert!(alc_unknown_search(&p, 0.0, 0.05, 3.0, &Allocation::equal(), &spec).is_err());
        assert!(alc_unknown_search(&p, 0.6, 1.0, 3.0, &Allocation::equal(), &spec).is_err());
        assert!(alc_unknown_search(&p, 0.6, 0.05, 0.0, &Allocation::equal(), &spec).is_err());
    }

    #[test]
    fn configuration_three_totals() {
        let spec = QuadratureSpec::default();
        let run = |s: f64| {
            alc_unknown_search(&prior(s), 0.65, 0.05, 3.0, &Allocation::equal(), &spec).unwrap()
        };
        assert_eq!(run(0.29522).total(), 65);
        assert_eq!(run(0.5596).total(), 136);
    }

    #[test]
    fn result_is_minimal_by_scan() {
        let spec = QuadratureSpec::default();
        let p = prior(0.1542);
        for alloc in [Allocation::equal(), Allocation::new(3, 2).unwrap()] {
            for c in [0.8, 3.0, 5.0, 20.0] {
                let r = alc_unknown_search(&p, 0.6, 0.05, c, &alloc, &spec).unwrap();
                let vm = VarianceModel::Unknown(c);
                let first = (2..=300)
                    .find(|&n| {
                        let (a, b) = alloc.split(n);
                        average_length(&p, &vm, a, b, 0.05, &spec).unwrap() <= 0.6
                    })
                    .unwrap();
                assert_eq!(r.total(), first, "c={c} {alloc:?}");
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn average_length_decreases(s in 0.05f64..1.0, c in 0.5f64..30.0) {
            let spec = QuadratureSpec::default();
            let p = prior(s);
            let vm = VarianceModel::Unknown(c);
            let mut previous = f64::INFINITY;
            for n in 1..=100u64 {
                let len = average_length(&p, &vm, n, n, 0.05, &spec).unwrap();
                prop_assert!(len < previous);
                previous = len;
            }
        }
    }
}
