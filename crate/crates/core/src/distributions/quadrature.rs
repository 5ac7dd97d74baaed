//! Globally adaptive Gauss–Kronrod (G10/K21) quadrature over finite,
//! half-infinite and doubly infinite ranges.
//!
//! Infinite ranges are mapped onto a bounded interval by a rational change of
//! variables. Each [`Domain`] carries a `scale` hint: the width, in `x` units,
//! of the region where the integrand lives. Supplying a sensible scale keeps
//! sharply concentrated integrands from slipping between the first panel's
//! nodes.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{domain, Error, Result};

#[allow(clippy::excessive_precision)]
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_600_525_478_584,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

// Gauss weights for the odd-indexed Kronrod nodes XGK[1], XGK[3], ..., XGK[9].
#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

/// Tolerances and work limit for [`integrate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    pub relative_tolerance: f64,
    pub absolute_tolerance: f64,
    pub max_subdivisions: usize,
}

impl QuadratureSpec {
    pub fn new(
        relative_tolerance: f64,
        absolute_tolerance: f64,
        max_subdivisions: usize,
    ) -> Result<Self> {
        if !(relative_tolerance > 0.0 && absolute_tolerance > 0.0) {
            return Err(domain("quadrature tolerances must be positive"));
        }
        if max_subdivisions < 1 {
            return Err(domain("max_subdivisions must be at least 1"));
        }
        Ok(Self {
            relative_tolerance,
            absolute_tolerance,
            max_subdivisions,
        })
    }
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            relative_tolerance: 1e-9,
            absolute_tolerance: 1e-12,
            max_subdivisions: 2000,
        }
    }
}

/// An integration range, possibly unbounded on either side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Domain {
    lo: f64,
    hi: f64,
    center: f64,
    scale: f64,
}

impl Domain {
    pub fn finite(lo: f64, hi: f64) -> Self {
        Self {
            lo,
            hi,
            center: 0.0,
            scale: 1.0,
        }
    }

    /// `[lo, ∞)`
    pub fn from(lo: f64) -> Self {
        Self::finite(lo, f64::INFINITY)
    }

    /// `(-∞, hi]`
    pub fn to(hi: f64) -> Self {
        Self::finite(f64::NEG_INFINITY, hi)
    }

    pub fn real() -> Self {
        Self::finite(f64::NEG_INFINITY, f64::INFINITY)
    }

    /// Characteristic width of the integrand on infinite ranges.
    pub fn with_scale(mut self, scale: f64) -> Self {
        self.scale = scale;
        self
    }

    /// Point about which a doubly infinite range is unfolded.
    pub fn centered_at(mut self, center: f64) -> Self {
        self.center = center;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error_estimate: f64,
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
    }
}

impl Eq for Panel {}

impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn rescale_error(err: f64, res_abs: f64, res_asc: f64) -> f64 {
    let mut scaled = err.abs();
    if res_asc != 0.0 && scaled != 0.0 {
        let scale = (200.0 * scaled / res_asc).powf(1.5);
        scaled = if scale < 1.0 {
            res_asc * scale
        } else {
            res_asc
        };
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        scaled = scaled.max(50.0 * f64::EPSILON * res_abs);
    }
    scaled
}

fn kronrod21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Result<Panel> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let eval = |x: f64| -> Result<f64> {
        let y = f(x);
        if y.is_finite() {
            Ok(y)
        } else {
            Err(domain(format!("integrand is not finite at {x:e}")))
        }
    };

    let f_center = eval(center)?;
    let mut res_k = WGK[10] * f_center;
    let mut res_g = 0.0;
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = eval(center - dx)?;
        let f2 = eval(center + dx)?;
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[10] * (f_center - mean).abs();
    for j in 0..10 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = res_k * half;
    let abs_half = half.abs();
    let error = rescale_error(
        (res_k - res_g) * half,
        res_abs * abs_half,
        res_asc * abs_half,
    );
    Ok(Panel { a, b, value, error })
}

fn adaptive<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, spec: &QuadratureSpec) -> Result<Integral> {
    let first = kronrod21(f, a, b)?;
    let mut total = first.value;
    let mut total_err = first.error;
    let mut heap = BinaryHeap::new();
    let mut settled: Vec<Panel> = Vec::new();
    heap.push(first);

    let target = |total: f64| {
        spec.absolute_tolerance
            .max(spec.relative_tolerance * total.abs())
    };
    let mut subdivisions = 1;

    while total_err > target(total) {
        let Some(worst) = heap.pop() else {
            break;
        };
        let mid = 0.5 * (worst.a + worst.b);
        // Panel too narrow to split further in floating point.
        if (worst.b - worst.a).abs() <= 64.0 * f64::EPSILON * mid.abs().max(f64::MIN_POSITIVE) {
            settled.push(worst);
            continue;
        }
        if subdivisions >= spec.max_subdivisions {
            heap.push(worst);
            break;
        }
        let left = kronrod21(f, worst.a, mid)?;
        let right = kronrod21(f, mid, worst.b)?;
        total += left.value + right.value - worst.value;
        total_err += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        subdivisions += 1;
    }

    // Re-sum from scratch to shed accumulated update drift.
    let value: f64 = heap.iter().chain(settled.iter()).map(|p| p.value).sum();
    let error: f64 = heap.iter().chain(settled.iter()).map(|p| p.error).sum();
    if error > target(value) {
        return Err(Error::QuadratureNotConverged {
            estimate: value,
            error,
        });
    }
    Ok(Integral {
        value,
        error_estimate: error,
    })
}

/// Integrates `f` over `domain` to the tolerances in `spec`.
///
/// Fails with [`Error::QuadratureNotConverged`] (carrying the best estimate)
/// when the subdivision budget runs out.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    domain: Domain,
    spec: &QuadratureSpec,
) -> Result<Integral> {
    let Domain {
        lo,
        hi,
        center,
        scale,
    } = domain;
    if lo.is_nan() || hi.is_nan() || scale.is_nan() || scale <= 0.0 || !center.is_finite() {
        return Err(crate::error::domain("malformed integration domain"));
    }
    if lo == hi {
        return Ok(Integral {
            value: 0.0,
            error_estimate: 0.0,
        });
    }
    if lo > hi {
        let r = integrate(
            f,
            Domain {
                lo: hi,
                hi: lo,
                center,
                scale,
            },
            spec,
        )?;
        return Ok(Integral {
            value: -r.value,
            error_estimate: r.error_estimate,
        });
    }

    match (lo.is_finite(), hi.is_finite()) {
        (true, true) => adaptive(&f, lo, hi, spec),
        (true, false) => {
            let g = |t: f64| {
                let u = 1.0 - t;
                f(lo + scale * t / u) * scale / (u * u)
            };
            adaptive(&g, 0.0, 1.0, spec)
        }
        (false, true) => {
            let g = |t: f64| {
                let u = 1.0 - t;
                f(hi - scale * t / u) * scale / (u * u)
            };
            adaptive(&g, 0.0, 1.0, spec)
        }
        (false, false) => {
            let g = |t: f64| {
                let u = 1.0 - t * t;
                f(center + scale * t / u) * scale * (1.0 + t * t) / (u * u)
            };
            adaptive(&g, -1.0, 1.0, spec)
        }
    }
}
