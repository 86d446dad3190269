use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::seed;

/// Adds circularly-symmetric complex Gaussian noise at the requested SNR,
/// measured against the empirical mean power of `x`.
pub fn apply_awgn(x: &[Complex64], snr_db: f64, seed: u64) -> Result<Vec<Complex64>> {
    if x.is_empty() {
        return Err(Error::DegenerateSignal("empty signal".into()));
    }
    if x.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::DegenerateSignal("non-finite sample".into()));
    }
    let power = x.iter().map(|v| v.norm_sqr()).sum::<f64>() / x.len() as f64;
    if power <= 0.0 {
        return Err(Error::DegenerateSignal("zero-power signal".into()));
    }
    if !snr_db.is_finite() {
        return Err(Error::Config(format!("snr {snr_db} dB is not finite")));
    }
    let variance = power * 10f64.powf(-snr_db / 10.0);
    let sigma = (variance / 2.0).sqrt();
    let mut rng = seed::rng(seed);
    Ok(x.iter()
        .map(|&v| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            v + Complex64::new(re, im) * sigma
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(n: usize) -> Vec<Complex64> {
        (0..n)
            .map(|i| Complex64::from_polar(1.0, i as f64 * 0.37))
            .collect()
    }

    fn noise_variance(x: &[Complex64], y: &[Complex64]) -> f64 {
        x.iter().zip(y).map(|(a, b)| (b - a).norm_sqr()).sum::<f64>() / x.len() as f64
    }

    #[test]
    fn variance_follows_snr() {
        let x = unit(200_000);
        let y = apply_awgn(&x, 0.0, 1).unwrap();
        assert!((noise_variance(&x, &y) - 1.0).abs() < 0.02);
        let y = apply_awgn(&x, 20.0, 2).unwrap();
        assert!((noise_variance(&x, &y) - 0.01).abs() < 0.0002);
    }

    #[test]
    fn rejects_degenerate_input() {
        let zeros = vec![Complex64::new(0.0, 0.0); 16];
        assert!(matches!(
            apply_awgn(&zeros, 0.0, 1),
            Err(Error::DegenerateSignal(_))
        ));
        assert!(apply_awgn(&[], 0.0, 1).is_err());
        let mut bad = unit(4);
        bad[2].re = f64::NAN;
        assert!(apply_awgn(&bad, 0.0, 1).is_err());
    }

    #[test]
    fn deterministic_given_seed() {
        let x = unit(64);
        assert_eq!(apply_awgn(&x, 3.0, 9).unwrap(), apply_awgn(&x, 3.0, 9).unwrap());
        assert_ne!(apply_awgn(&x, 3.0, 9).unwrap(), apply_awgn(&x, 3.0, 10).unwrap());
    }
}
