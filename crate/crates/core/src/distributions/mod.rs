//! Probability kernels shared by every other module: normal, gamma,
//! inverse-gamma and location-scale Student-t, plus adaptive quadrature.
//!
//! Parameterizations: gamma is shape/rate, inverse-gamma is shape/scale and
//! the t distribution stores its scale (not the squared scale).

mod quadrature;

pub use quadrature::{integrate, Domain, Integral, QuadratureSpec};

use std::f64::consts::PI;

use libm::erfc;
use statrs::function::beta::beta_reg;
use statrs::function::erf::erfc_inv;
use statrs::function::gamma::{gamma_lr, gamma_ur, ln_gamma};

use crate::error::{domain, Error, Result};

fn check_probability(q: f64) -> Result<()> {
    if q > 0.0 && q < 1.0 {
        Ok(())
    } else {
        Err(domain(format!("probability must lie in (0, 1), got {q}")))
    }
}

/// Solves `cdf(x) = q` by outward bracketing from `start` followed by
/// Newton steps that fall back to bisection whenever they leave the bracket.
///
/// `floor` is the lower end of the support (`-inf` for the real line).
fn invert_cdf(
    q: f64,
    cdf: impl Fn(f64) -> f64,
    pdf: impl Fn(f64) -> f64,
    start: f64,
    step: f64,
    floor: f64,
) -> f64 {
    let mut lo;
    let mut hi;
    if cdf(start) < q {
        lo = start;
        let mut width = step;
        hi = start + width;
        while cdf(hi) < q {
            lo = hi;
            width *= 2.0;
            hi = start + width;
        }
    } else {
        hi = start;
        let mut width = step;
        lo = start - width;
        if floor.is_finite() {
            lo = lo.max(floor);
        }
        while lo > floor && cdf(lo) >= q {
            hi = lo;
            width *= 2.0;
            lo = start - width;
            if floor.is_finite() && lo <= floor {
                lo = floor;
            }
        }
    }

    let mut x = 0.5 * (lo + hi);
    for _ in 0..300 {
        let err = cdf(x) - q;
        if err == 0.0 {
            return x;
        }
        if err < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let density = pdf(x);
        let newton = x - err / density;
        let next = if density > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - x).abs() <= 2.0 * f64::EPSILON * x.abs().max(f64::MIN_POSITIVE) {
            return next;
        }
        x = next;
    }
    x
}

/// `N(mean, variance)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalParams {
    mean: f64,
    variance: f64,
}

impl NormalParams {
    pub fn new(mean: f64, variance: f64) -> Result<Self> {
        if !mean.is_finite() {
            return Err(domain(format!("normal mean must be finite, got {mean}")));
        }
        if !(variance > 0.0 && variance.is_finite()) {
            return Err(domain(format!(
                "normal variance must be positive, got {variance}"
            )));
        }
        Ok(Self { mean, variance })
    }

    pub fn standard() -> Self {
        Self {
            mean: 0.0,
            variance: 1.0,
        }
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    pub fn sd(&self) -> f64 {
        self.variance.sqrt()
    }

    pub fn ln_pdf(&self, x: f64) -> f64 {
        let z = x - self.mean;
        -0.5 * (z * z / self.variance + (2.0 * PI * self.variance).ln())
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.ln_pdf(x).exp()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        normal_cdf(x, self)
    }

    pub fn quantile(&self, q: f64) -> Result<f64> {
        normal_quantile(q, self)
    }
}

pub fn normal_cdf(x: f64, p: &NormalParams) -> f64 {
    0.5 * erfc(-(x - p.mean) / (p.sd() * std::f64::consts::SQRT_2))
}

pub fn normal_quantile(q: f64, p: &NormalParams) -> Result<f64> {
    check_probability(q)?;
    Ok(p.mean - p.sd() * upper_standard_quantile(q))
}

/// Upper `tail`-quantile of the standard normal, `Φ⁻¹(1 − tail)`.
pub fn upper_normal_quantile(tail: f64) -> Result<f64> {
    check_probability(tail)?;
    Ok(upper_standard_quantile(tail))
}

// one Newton step on the tail probability removes what is left of erfc_inv's error
fn upper_standard_quantile(tail: f64) -> f64 {
    let z = std::f64::consts::SQRT_2 * erfc_inv(2.0 * tail);
    let density = (-0.5 * z * z).exp() / (2.0 * PI).sqrt();
    if density > 0.0 {
        z + (0.5 * erfc(z / std::f64::consts::SQRT_2) - tail) / density
    } else {
        z
    }
}

/// `Gamma(shape, rate)`; mean `shape / rate`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaParams {
    shape: f64,
    rate: f64,
}

/// Mean and equal-tailed 95% interval of a gamma distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaSummary {
    pub mean: f64,
    pub q025: f64,
    pub q975: f64,
}

impl GammaParams {
    pub fn new(shape: f64, rate: f64) -> Result<Self> {
        if !(shape > 0.0 && rate > 0.0 && shape.is_finite() && rate.is_finite()) {
            return Err(domain(format!(
                "gamma shape and rate must be positive, got ({shape}, {rate})"
            )));
        }
        Ok(Self { shape, rate })
    }

    pub fn shape(&self) -> f64 {
        self.shape
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn mean(&self) -> f64 {
        self.shape / self.rate
    }

    pub fn ln_pdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return f64::NEG_INFINITY;
        }
        self.shape * self.rate.ln() - ln_gamma(self.shape) + (self.shape - 1.0) * x.ln()
            - self.rate * x
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.ln_pdf(x).exp()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else {
            gamma_lr(self.shape, self.rate * x)
        }
    }

    pub fn quantile(&self, q: f64) -> Result<f64> {
        check_probability(q)?;
        let step = self.shape.sqrt() / self.rate;
        Ok(invert_cdf(
            q,
            |x| self.cdf(x),
            |x| self.pdf(x),
            self.mean(),
            step,
            0.0,
        ))
    }
}

pub fn gamma_summary(p: &GammaParams) -> GammaSummary {
    GammaSummary {
        mean: p.mean(),
        q025: p.quantile(0.025).expect("0.025 is a valid probability"),
        q975: p.quantile(0.975).expect("0.975 is a valid probability"),
    }
}

/// `Inv-Gamma(shape, scale)`: the law of `scale / G` with `G ~ Gamma(shape, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvGammaParams {
    shape: f64,
    scale: f64,
}

impl InvGammaParams {
    pub fn new(shape: f64, scale: f64) -> Result<Self> {
        if !(shape > 0.0 && scale > 0.0 && shape.is_finite() && scale.is_finite()) {
            return Err(domain(format!(
                "inverse-gamma shape and scale must be positive, got ({shape}, {scale})"
            )));
        }
        Ok(Self { shape, scale })
    }

    pub fn shape(&self) -> f64 {
        self.shape
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn mean(&self) -> Result<f64> {
        invgamma_mean(self)
    }

    pub fn ln_pdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return f64::NEG_INFINITY;
        }
        self.shape * self.scale.ln()
            - ln_gamma(self.shape)
            - (self.shape + 1.0) * x.ln()
            - self.scale / x
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.ln_pdf(x).exp()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else {
            gamma_ur(self.shape, self.scale / x)
        }
    }

    pub fn quantile(&self, q: f64) -> Result<f64> {
        check_probability(q)?;
        let mode = self.scale / (self.shape + 1.0);
        Ok(invert_cdf(
            q,
            |x| self.cdf(x),
            |x| self.pdf(x),
            mode,
            mode,
            0.0,
        ))
    }

    /// `E[h(X)]`, integrated over `u = ln x` where the density is close to
    /// log-concave and its width is known in closed form.
    pub fn expect<F: Fn(f64) -> f64>(&self, h: F, spec: &QuadratureSpec) -> Result<f64> {
        let log_norm = self.shape * self.scale.ln() - ln_gamma(self.shape);
        let (a, b) = (self.shape, self.scale);
        // density of u = ln x: b^a/Γ(a) · exp(-a u - b e^{-u})
        let integrand = |u: f64| {
            let log_density = log_norm - a * u - b * (-u).exp();
            if log_density < -745.0 {
                0.0
            } else {
                h(u.exp()) * log_density.exp()
            }
        };
        let center = (b / a).ln();
        // sd of ln X is sqrt(trigamma(a)); trigamma(a) ≈ 1/a + 1/(2a²)
        let width = (1.0 / a + 0.5 / (a * a)).sqrt();
        let domain = Domain::real().centered_at(center).with_scale(width);
        Ok(integrate(integrand, domain, spec)?.value)
    }
}

/// `scale / (shape − 1)`; undefined for `shape ≤ 1`.
pub fn invgamma_mean(p: &InvGammaParams) -> Result<f64> {
    if p.shape <= 1.0 {
        return Err(Error::UndefinedMoment(format!(
            "inverse-gamma mean requires shape > 1, got shape {}",
            p.shape
        )));
    }
    Ok(p.scale / (p.shape - 1.0))
}

/// Non-standardized Student-t with `df` degrees of freedom.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocationScaleT {
    df: f64,
    location: f64,
    scale: f64,
}

impl LocationScaleT {
    pub fn new(df: f64, location: f64, scale: f64) -> Result<Self> {
        if !(df > 0.0 && scale > 0.0 && location.is_finite() && scale.is_finite()) {
            return Err(domain(format!(
                "t distribution needs df > 0 and scale > 0, got df {df}, scale {scale}"
            )));
        }
        Ok(Self {
            df,
            location,
            scale,
        })
    }

    pub fn df(&self) -> f64 {
        self.df
    }

    pub fn location(&self) -> f64 {
        self.location
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn variance(&self) -> Result<f64> {
        if self.df <= 2.0 {
            return Err(Error::UndefinedMoment(format!(
                "t variance requires df > 2, got {}",
                self.df
            )));
        }
        Ok(self.df / (self.df - 2.0) * self.scale * self.scale)
    }

    pub fn ln_pdf(&self, x: f64) -> f64 {
        let nu = self.df;
        let z = (x - self.location) / self.scale;
        ln_gamma(0.5 * (nu + 1.0))
            - ln_gamma(0.5 * nu)
            - self.scale.ln()
            - 0.5 * (nu * PI).ln()
            - 0.5 * (nu + 1.0) * (z * z / nu).ln_1p()
    }

    pub fn pdf(&self, x: f64) -> f64 {
        t_pdf(x, self)
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let nu = self.df;
        let z = (x - self.location) / self.scale;
        let tail = 0.5 * beta_reg(0.5 * nu, 0.5, nu / (nu + z * z));
        if z > 0.0 {
            1.0 - tail
        } else {
            tail
        }
    }

    pub fn quantile(&self, q: f64) -> Result<f64> {
        check_probability(q)?;
        Ok(invert_cdf(
            q,
            |x| self.cdf(x),
            |x| self.pdf(x),
            self.location,
            self.scale,
            f64::NEG_INFINITY,
        ))
    }
}

pub fn t_pdf(x: f64, p: &LocationScaleT) -> f64 {
    p.ln_pdf(x).exp()
}
