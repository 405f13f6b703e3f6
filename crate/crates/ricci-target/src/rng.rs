//! Counter-based random number streams for reproducible Monte Carlo.
//!
//! Every path in a batch gets its own `RngStream`, addressed by
//! `(seed, stream_id)`. Identical addresses reproduce identical Gaussian
//! sequences regardless of thread count or scheduling, so a parallel path
//! runner reduced in stream order is bitwise deterministic.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Splittable counter-based generator (splitmix64 core, Box-Muller normals).
#[derive(Debug, Clone)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
    state: u64,
    spare_normal: Option<f64>,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        // Decorrelate the stream origin from both inputs before counting.
        let state = mix(mix(seed ^ GOLDEN).wrapping_add(mix(stream_id.wrapping_mul(GOLDEN) ^ 0x1234_5678_9ABC_DEF0)));
        Self { seed, stream_id, state, spare_normal: None }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN);
        mix(self.state)
    }

    /// Uniform draw in (0, 1]; never returns 0, so it is safe under `ln`.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (((self.next_u64() >> 11) + 1) as f64) * (1.0 / 9_007_199_254_740_992.0)
    }

    /// Standard normal via Box-Muller; the paired draw is cached.
    pub fn standard_normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        let u1 = self.uniform();
        let u2 = self.uniform();
        let mag = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (std::f64::consts::TAU * u2).sin_cos();
        self.spare_normal = Some(mag * s);
        mag * c
    }

    /// N(0, dt) increment.
    #[inline]
    pub fn gaussian_increment(&mut self, dt: f64) -> f64 {
        self.standard_normal() * dt.sqrt()
    }

    /// Independent 2D increment (N(0, dt), N(0, dt)).
    #[inline]
    pub fn gaussian_increment_2d(&mut self, dt: f64) -> (f64, f64) {
        (self.gaussian_increment(dt), self.gaussian_increment(dt))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_addresses_reproduce_sequences() {
        let mut a = RngStream::new(42, 7);
        let mut b = RngStream::new(42, 7);
        for _ in 0..1000 {
            assert_eq!(a.standard_normal().to_bits(), b.standard_normal().to_bits());
        }
    }

    #[test]
    fn distinct_streams_differ() {
        let mut a = RngStream::new(42, 0);
        let mut b = RngStream::new(42, 1);
        let va: Vec<u64> = (0..16).map(|_| a.next_u64()).collect();
        let vb: Vec<u64> = (0..16).map(|_| b.next_u64()).collect();
        assert_ne!(va, vb);
    }

    #[test]
    fn normal_moments() {
        let mut rng = RngStream::new(1, 0);
        let n = 200_000;
        let (mut sum, mut sumsq, mut sum4) = (0.0, 0.0, 0.0);
        for _ in 0..n {
            let z = rng.standard_normal();
            sum += z;
            sumsq += z * z;
            sum4 += z * z * z * z;
        }
        let mean = sum / n as f64;
        let var = sumsq / n as f64 - mean * mean;
        let kurt = sum4 / n as f64;
        assert!(mean.abs() < 0.01, "mean {mean}");
        assert!((var - 1.0).abs() < 0.02, "var {var}");
        assert!((kurt - 3.0).abs() < 0.1, "fourth moment {kurt}");
    }

    #[test]
    fn cross_stream_correlation_is_small() {
        let n = 100_000;
        let mut cov = 0.0;
        let mut a = RngStream::new(9, 100);
        let mut b = RngStream::new(9, 101);
        for _ in 0..n {
            cov += a.standard_normal() * b.standard_normal();
        }
        cov /= n as f64;
        assert!(cov.abs() < 0.02, "cross-stream covariance {cov}");
    }
}
