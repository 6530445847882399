//! Counter-based deterministic random streams (`ctr64`, version 1).
//!
//! Every random quantity in the crate comes from this generator so that
//! results depend only on `(seed, stream, counter)` and never on thread
//! scheduling. The algorithm is small enough to re-implement in any language,
//! which is what lets an external simulator reproduce the builtin Gaussian
//! draws bit for bit (see `scripts/gaussian_model.py`).
//!
//! ```text
//! GOLDEN   = 0x9E3779B97F4A7C15
//! mix(z)   : z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//!            z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//!            return z ^ (z >> 31)                     (all arithmetic mod 2^64)
//! key      = mix(seed ^ mix(stream + GOLDEN))
//! word(i)  = mix(key + (i + 1) * GOLDEN)              i = 0, 1, 2, ...
//! uniform  = ((word >> 11) + 0.5) * 2^-53             strictly inside (0, 1)
//! normal   : Box-Muller on consecutive uniforms (u1, u2):
//!            r = sqrt(-2 ln u1), z0 = r cos(2 pi u2), z1 = r sin(2 pi u2)
//!            z0 is returned first, then z1.
//! derive(seed, tag) = word(0) of the stream (seed, tag)
//! ```

pub const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;
pub const VERSION: &str = "ctr64-v1";

#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive an independent child seed from `seed` and a tag.
pub fn derive(seed: u64, tag: u64) -> u64 {
    CtrRng::new(seed, tag).next_u64()
}

/// Derive a child seed along a path of tags.
pub fn derive_path(seed: u64, tags: &[u64]) -> u64 {
    tags.iter().fold(seed, |s, &t| derive(s, t))
}

#[derive(Clone, Debug)]
pub struct CtrRng {
    key: u64,
    counter: u64,
    spare: Option<f64>,
}

impl CtrRng {
    pub fn new(seed: u64, stream: u64) -> Self {
        let key = mix64(seed ^ mix64(stream.wrapping_add(GOLDEN)));
        Self {
            key,
            counter: 0,
            spare: None,
        }
    }

    /// The word at an absolute counter position, without advancing.
    #[inline]
    pub fn word_at(&self, counter: u64) -> u64 {
        mix64(self.key.wrapping_add(counter.wrapping_add(1).wrapping_mul(GOLDEN)))
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        let w = self.word_at(self.counter);
        self.counter = self.counter.wrapping_add(1);
        w
    }

    /// Uniform draw in the open interval (0, 1).
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal draw via Box-Muller.
    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = self.uniform();
        let u2 = self.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let angle = 2.0 * std::f64::consts::PI * u2;
        self.spare = Some(r * angle.sin());
        r * angle.cos()
    }

    /// Number of 64-bit words consumed so far.
    pub fn position(&self) -> u64 {
        self.counter
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mix64_matches_splitmix_finalizer() {
        // First output of the reference SplitMix64 with state 0 is
        // mix(0 + GOLDEN) = 0xE220A8397B1DCDAF.
        assert_eq!(mix64(GOLDEN), 0xE220_A839_7B1D_CDAF);
    }

    #[test]
    fn streams_are_deterministic_and_distinct() {
        let mut a = CtrRng::new(7, 0);
        let mut b = CtrRng::new(7, 0);
        let mut c = CtrRng::new(7, 1);
        let xs: Vec<u64> = (0..16).map(|_| a.next_u64()).collect();
        let ys: Vec<u64> = (0..16).map(|_| b.next_u64()).collect();
        let zs: Vec<u64> = (0..16).map(|_| c.next_u64()).collect();
        assert_eq!(xs, ys);
        assert_ne!(xs, zs);
    }

    #[test]
    fn counter_access_is_random_access() {
        let mut r = CtrRng::new(99, 3);
        let seq: Vec<u64> = (0..10).map(|_| r.next_u64()).collect();
        let fresh = CtrRng::new(99, 3);
        for (i, w) in seq.iter().enumerate() {
            assert_eq!(fresh.word_at(i as u64), *w);
        }
    }

    #[test]
    fn uniform_moments() {
        let mut r = CtrRng::new(1, 0);
        let n = 200_000;
        let xs: Vec<f64> = (0..n).map(|_| r.uniform()).collect();
        assert!(xs.iter().all(|&x| x > 0.0 && x < 1.0));
        let mean = xs.iter().sum::<f64>() / n as f64;
        assert!((mean - 0.5).abs() < 4.0 * (1.0f64 / 12.0).sqrt() / (n as f64).sqrt());
    }

    #[test]
    fn normal_moments() {
        let mut r = CtrRng::new(2, 0);
        let n = 200_000;
        let xs: Vec<f64> = (0..n).map(|_| r.normal()).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!(mean.abs() < 4.0 / (n as f64).sqrt());
        assert!((var - 1.0).abs() < 4.0 * (2.0f64 / n as f64).sqrt());
    }

    #[test]
    fn derive_path_composes() {
        assert_eq!(derive_path(5, &[1, 2]), derive(derive(5, 1), 2));
        assert_ne!(derive_path(5, &[1, 2]), derive_path(5, &[2, 1]));
    }
}
