//! Statistical utilities: exponential-decay regression, the two-sample
//! Kolmogorov-Smirnov test, and Monte Carlo reductions.

use crate::error::{Error, Result};

/// Fitted exponential decay `v(t) ~ exp(log_prefactor - rate * t)`.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct DecayFit {
    pub rate: f64,
    pub log_prefactor: f64,
    pub r_squared: f64,
    pub n_points: usize,
}

/// Monte Carlo sample mean with its standard error.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct MCEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_paths: usize,
}

/// Ordinary least squares on `(t, log v)` restricted to `v > floor`.
///
/// The floor guards the logarithm against solver output that has bottomed
/// out at rounding level.
pub fn fit_exponential(times: &[f64], values: &[f64], floor: f64) -> Result<DecayFit> {
    assert_eq!(times.len(), values.len());
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(values)
        .filter(|(_, &v)| v > floor)
        .map(|(&t, &v)| (t, v.ln()))
        .collect();
    if pts.len() < 4 {
        return Err(Error::TooFewPoints { got: pts.len(), need: 4 });
    }
    let n = pts.len() as f64;
    let mean_t = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mean_t).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mean_t) * (p.1 - mean_y)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - mean_y).powi(2)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let r_squared = if sxx > 0.0 && syy > 0.0 { (sxy * sxy) / (sxx * syy) } else { 1.0 };
    Ok(DecayFit {
        rate: -slope,
        log_prefactor: mean_y - slope * mean_t,
        r_squared,
        n_points: pts.len(),
    })
}

/// Two-sample Kolmogorov-Smirnov statistic and asymptotic p-value.
///
/// The p-value uses the classical limit `Q(sqrt(n_eff) * D)` with the
/// Kolmogorov series truncated at relative accuracy 1e-8.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<(f64, f64)> {
    let need = 20;
    if a.len() < need || b.len() < need {
        return Err(Error::InsufficientSamples { got: a.len().min(b.len()), need });
    }
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_by(|p, q| p.partial_cmp(q).unwrap());
    ys.sort_by(|p, q| p.partial_cmp(q).unwrap());

    let (na, nb) = (xs.len(), ys.len());
    let (inc_a, inc_b) = (1.0 / na as f64, 1.0 / nb as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut cdf_gap: f64 = 0.0;
    let mut d: f64 = 0.0;
    while i < na && j < nb {
        let (xv, yv) = (xs[i], ys[j]);
        if xv <= yv {
            cdf_gap += inc_a;
            i += 1;
        }
        if yv <= xv {
            cdf_gap -= inc_b;
            j += 1;
        }
        d = d.max(cdf_gap.abs());
    }
    // Remaining tail cannot increase the gap past 1 but may pass through it.
    d = d.max(cdf_gap.abs());

    let n_eff = (na as f64 * nb as f64) / ((na + nb) as f64);
    let lambda = n_eff.sqrt() * d;
    Ok((d, kolmogorov_survival(lambda)))
}

/// Complementary CDF of the Kolmogorov distribution,
/// `Q(x) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 x^2)`.
///
/// For small arguments the dual theta-series is used; both are truncated at
/// relative 1e-8.
pub fn kolmogorov_survival(x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x < 1.0 {
        // Q(x) = 1 - sqrt(2 pi)/x * sum_{k>=1} exp(-(2k-1)^2 pi^2 / (8 x^2))
        let mut sum = 0.0;
        let c = std::f64::consts::PI * std::f64::consts::PI / (8.0 * x * x);
        for k in 1..100 {
            let m = (2 * k - 1) as f64;
            let term = (-m * m * c).exp();
            sum += term;
            if term < 1e-8 * sum.max(f64::MIN_POSITIVE) {
                break;
            }
        }
        (1.0 - (2.0 * std::f64::consts::PI).sqrt() / x * sum).clamp(0.0, 1.0)
    } else {
        let mut sum = 0.0;
        for k in 1..100 {
            let kf = k as f64;
            let term = (-2.0 * kf * kf * x * x).exp();
            sum += if k % 2 == 1 { term } else { -term };
            if term < 1e-8 * sum.abs().max(f64::MIN_POSITIVE) {
                break;
            }
        }
        (2.0 * sum).clamp(0.0, 1.0)
    }
}

/// Sample mean and standard error.
pub fn mc_reduce(samples: &[f64]) -> Result<MCEstimate> {
    if samples.len() < 2 {
        return Err(Error::InsufficientSamples { got: samples.len(), need: 2 });
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok(MCEstimate { mean, std_error: (var / n).sqrt(), n_paths: samples.len() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "expected {b}, got {a} (tol {tol})");
    }

    #[test]
    fn exact_exponential_recovered() {
        let times: Vec<f64> = (0..20).map(|k| 0.05 * k as f64).collect();
        let values: Vec<f64> = times.iter().map(|t| (-3.0 * t).exp()).collect();
        let fit = fit_exponential(&times, &values, 1e-12).unwrap();
        assert_close(fit.rate, 3.0, 1e-10);
        assert_close(fit.log_prefactor, 0.0, 1e-10);
        assert_close(fit.r_squared, 1.0, 1e-12);
    }

    #[test]
    fn constant_values_have_zero_rate() {
        let times: Vec<f64> = (0..10).map(|k| k as f64).collect();
        let values = vec![0.5; 10];
        let fit = fit_exponential(&times, &values, 1e-12).unwrap();
        assert_close(fit.rate, 0.0, 1e-12);
    }

    #[test]
    fn fit_requires_four_points_above_floor() {
        let times = [0.0, 1.0, 2.0, 3.0, 4.0];
        let values = [1.0, 0.5, 1e-15, 1e-16, 1e-18];
        assert!(matches!(
            fit_exponential(&times, &values, 1e-12),
            Err(Error::TooFewPoints { got: 2, need: 4 })
        ));
    }

    #[test]
    fn fit_is_scale_equivariant() {
        let times: Vec<f64> = (0..15).map(|k| 0.1 * k as f64).collect();
        let mut rng = RngStream::new(3, 0);
        let values: Vec<f64> =
            times.iter().map(|t| (-2.0 * t).exp() * (1.0 + 0.01 * rng.standard_normal())).collect();
        let scaled: Vec<f64> = values.iter().map(|v| 7.5 * v).collect();
        let f1 = fit_exponential(&times, &values, 1e-12).unwrap();
        let f2 = fit_exponential(&times, &scaled, 1e-12).unwrap();
        assert_close(f2.rate, f1.rate, 1e-12);
        assert_close(f2.log_prefactor - f1.log_prefactor, 7.5f64.ln(), 1e-12);
        assert_close(f2.r_squared, f1.r_squared, 1e-12);
    }

    #[test]
    fn ks_identical_samples() {
        let a: Vec<f64> = (0..100).map(|k| k as f64).collect();
        let (stat, p) = ks_two_sample(&a, &a).unwrap();
        assert_close(stat, 0.0, 1e-15);
        assert_close(p, 1.0, 1e-12);
    }

    #[test]
    fn ks_shifted_uniforms() {
        // CDFs of U[0,1] and U[0.5,1.5] differ by exactly 0.5 at x = 1.
        let mut rng = RngStream::new(17, 0);
        let a: Vec<f64> = (0..1000).map(|_| rng.uniform()).collect();
        let b: Vec<f64> = (0..1000).map(|_| rng.uniform() + 0.5).collect();
        let (stat, p) = ks_two_sample(&a, &b).unwrap();
        assert!((stat - 0.5).abs() < 0.06, "stat {stat}");
        assert!(p < 1e-6, "p {p}");
    }

    #[test]
    fn ks_invariant_under_monotone_transform() {
        let mut rng = RngStream::new(23, 0);
        let a: Vec<f64> = (0..500).map(|_| rng.standard_normal()).collect();
        let b: Vec<f64> = (0..400).map(|_| rng.standard_normal() + 0.1).collect();
        let (s1, p1) = ks_two_sample(&a, &b).unwrap();
        let ta: Vec<f64> = a.iter().map(|x| x.exp()).collect();
        let tb: Vec<f64> = b.iter().map(|x| x.exp()).collect();
        let (s2, p2) = ks_two_sample(&ta, &tb).unwrap();
        assert_close(s1, s2, 1e-15);
        assert_close(p1, p2, 1e-15);
    }

    #[test]
    fn ks_null_calibration() {
        // Independent draws from one distribution: p < 0.05 should happen
        // for roughly 5% of repetitions.
        let mut rng = RngStream::new(31, 0);
        let mut rejections = 0;
        let reps = 200;
        for _ in 0..reps {
            let a: Vec<f64> = (0..1000).map(|_| rng.standard_normal()).collect();
            let b: Vec<f64> = (0..1000).map(|_| rng.standard_normal()).collect();
            let (_, p) = ks_two_sample(&a, &b).unwrap();
            if p < 0.05 {
                rejections += 1;
            }
        }
        let frac = rejections as f64 / reps as f64;
        assert!((frac - 0.05).abs() <= 0.03, "rejection fraction {frac}");
    }

    #[test]
    fn ks_rejects_undersized_samples() {
        let a = vec![0.0; 10];
        let b = vec![0.0; 30];
        assert!(ks_two_sample(&a, &b).is_err());
    }

    #[test]
    fn mc_reduce_basics() {
        let est = mc_reduce(&[3.0, 3.0, 3.0]).unwrap();
        assert_close(est.mean, 3.0, 1e-15);
        assert_close(est.std_error, 0.0, 1e-15);
        // Two-point formula: mean 1, sample sd sqrt(2), SE sqrt(2)/sqrt(2) = 1.
        let est = mc_reduce(&[0.0, 2.0]).unwrap();
        assert_close(est.mean, 1.0, 1e-15);
        assert_close(est.std_error, 1.0, 1e-15);
        assert!(mc_reduce(&[1.0]).is_err());
    }

    #[test]
    fn mc_reduce_clt_scale() {
        let mut rng = RngStream::new(41, 0);
        let samples: Vec<f64> = (0..10_000).map(|_| rng.standard_normal()).collect();
        let est = mc_reduce(&samples).unwrap();
        assert!(est.mean.abs() < 0.03, "mean {}", est.mean);
        assert!((est.std_error - 0.01).abs() < 0.002);
    }
}
