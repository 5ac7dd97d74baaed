//! Explicitly specified generators so that streams are reproducible across
//! platforms and languages: xoshiro256++ seeded through SplitMix64.

use crate::distributions::{InvGammaParams, NormalParams};

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
}

#[derive(Debug, Clone)]
pub struct Xoshiro256PlusPlus {
    s: [u64; 4],
}

impl Xoshiro256PlusPlus {
    /// Expands a 64-bit seed into the 256-bit state with SplitMix64.
    pub fn seed_from_u64(seed: u64) -> Self {
        let mut sm = SplitMix64::new(seed);
        Self::from_state([sm.next_u64(), sm.next_u64(), sm.next_u64(), sm.next_u64()])
    }

    pub fn from_state(s: [u64; 4]) -> Self {
        assert!(
            s.iter().any(|&x| x != 0),
            "xoshiro state must not be all zero"
        );
        Self { s }
    }

    /// Independent generator for chunk `index` of a run seeded with `seed`.
    pub fn substream(seed: u64, index: u64) -> Self {
        let mut sm = SplitMix64::new(seed ^ index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA));
        Self::seed_from_u64(sm.next_u64())
    }

    pub fn next_u64(&mut self) -> u64 {
        let s = &mut self.s;
        let result = s[0].wrapping_add(s[3]).rotate_left(23).wrapping_add(s[0]);
        let t = s[1] << 17;
        s[2] ^= s[0];
        s[3] ^= s[1];
        s[1] ^= s[2];
        s[0] ^= s[3];
        s[2] ^= t;
        s[3] = s[3].rotate_left(45);
        result
    }

    /// Uniform on the open interval (0, 1) from the top 53 bits.
    pub fn next_open01(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }
}

/// Standard normal by Box–Muller; each call consumes two uniforms.
pub fn standard_normal(rng: &mut Xoshiro256PlusPlus) -> f64 {
    let u1 = rng.next_open01();
    let u2 = rng.next_open01();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

pub fn sample_normal(rng: &mut Xoshiro256PlusPlus, params: &NormalParams) -> f64 {
    params.mean() + params.sd() * standard_normal(rng)
}

/// `Gamma(shape, 1)` by Marsaglia–Tsang; shapes below one are boosted by
/// `Gamma(shape + 1)·U^{1/shape}`.
pub fn sample_gamma(rng: &mut Xoshiro256PlusPlus, shape: f64) -> f64 {
    assert!(shape > 0.0, "gamma shape must be positive");
    if shape < 1.0 {
        let boost = rng.next_open01().powf(1.0 / shape);
        return sample_gamma(rng, shape + 1.0) * boost;
    }
    let d = shape - 1.0 / 3.0;
    let c = 1.0 / (9.0 * d).sqrt();
    loop {
        let (x, v) = loop {
            let x = standard_normal(rng);
            let v = 1.0 + c * x;
            if v > 0.0 {
                break (x, v * v * v);
            }
        };
        let u = rng.next_open01();
        let x2 = x * x;
        if u < 1.0 - 0.0331 * x2 * x2 || u.ln() < 0.5 * x2 + d * (1.0 - v + v.ln()) {
            return d * v;
        }
    }
}

/// `scale / Gamma(shape, 1)`.
pub fn sample_invgamma(rng: &mut Xoshiro256PlusPlus, params: &InvGammaParams) -> f64 {
    params.scale() / sample_gamma(rng, params.shape())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mean_and_se(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (mean, (var / n).sqrt())
    }

    #[test]
    fn reference_outputs() {
        assert_eq!(SplitMix64::new(0).next_u64(), 0xE220_A839_7B1D_CDAF);
        let mut x = Xoshiro256PlusPlus::from_state([1, 2, 3, 4]);
        assert_eq!(x.next_u64(), 41_943_041);
    }

    #[test]
    fn fixed_seed_repeats() {
        let a: Vec<u64> = {
            let mut r = Xoshiro256PlusPlus::seed_from_u64(7);
            (0..100).map(|_| r.next_u64()).collect()
        };
        let mut r = Xoshiro256PlusPlus::seed_from_u64(7);
        assert!(a.iter().all(|&v| v == r.next_u64()));
        let mut other = Xoshiro256PlusPlus::substream(7, 1);
        assert_ne!(
            Xoshiro256PlusPlus::substream(7, 0).next_u64(),
            other.next_u64()
        );
    }

    #[test]
    fn uniforms_stay_open() {
        let mut r = Xoshiro256PlusPlus::from_state([0, 0, 0, 1]);
        for _ in 0..10_000 {
            let u = r.next_open01();
            assert!(u > 0.0 && u < 1.0);
        }
    }

    #[test]
    fn normal_moments() {
        let mut r = Xoshiro256PlusPlus::seed_from_u64(11);
        let xs: Vec<f64> = (0..1_000_000).map(|_| standard_normal(&mut r)).collect();
        let (mean, se) = mean_and_se(&xs);
        assert!(mean.abs() < 3.0 * se, "{mean}");
        let sq: Vec<f64> = xs.iter().map(|x| x * x).collect();
        let (var, se) = mean_and_se(&sq);
        assert!((var - 1.0).abs() < 3.0 * se, "{var}");
    }

    #[test]
    fn invgamma_mean() {
        let mut r = Xoshiro256PlusPlus::seed_from_u64(12);
        let p = InvGammaParams::new(2.5, 0.385).unwrap();
        let xs: Vec<f64> = (0..1_000_000)
            .map(|_| sample_invgamma(&mut r, &p))
            .collect();
        let (mean, se) = mean_and_se(&xs);
        assert!((mean - 0.385 / 1.5).abs() < 3.0 * se, "{mean} ± {se}");
        assert!((0.385f64 / 1.5 - 0.2567).abs() < 1e-4);
    }

    #[test]
    fn gamma_small_and_large_shapes() {
        let mut r = Xoshiro256PlusPlus::seed_from_u64(13);
        for shape in [0.3, 1.0, 2.5, 40.0] {
            let xs: Vec<f64> = (0..200_000).map(|_| sample_gamma(&mut r, shape)).collect();
            let (mean, se) = mean_and_se(&xs);
            assert!((mean - shape).abs() < 4.0 * se, "shape {shape}: {mean}");
            assert!(xs.iter().all(|&x| x > 0.0));
        }
    }
}
