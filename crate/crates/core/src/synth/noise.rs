use rand::Rng;
use rand_distr::Normal;

use crate::error::{Error, Result};
use crate::synth::seeds::rng_from;
use crate::TimeSeries;

/// Standardizes the series to zero mean and unit (population) variance, then
/// adds i.i.d. `N(0, variance)` noise. A variance of zero returns the input.
pub fn add_gaussian_noise(series: &TimeSeries, variance: f64, seed: u64) -> Result<TimeSeries> {
    if !(variance >= 0.0 && variance.is_finite()) {
        return Err(Error::Config(format!("noise variance must be non-negative, got {variance}")));
    }
    if variance == 0.0 {
        return Ok(series.clone());
    }
    let v = series.values();
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let std = (v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n).sqrt();
    let scale = if std > 0.0 { 1.0 / std } else { 1.0 };
    let normal = Normal::new(0.0, variance.sqrt()).expect("valid std");
    let mut rng = rng_from(seed);
    TimeSeries::new(v.iter().map(|x| (x - mean) * scale + rng.sample(normal)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::generate::random_walk;

    #[test]
    fn zero_variance_is_identity() {
        let s = random_walk(100, 1);
        assert_eq!(add_gaussian_noise(&s, 0.0, 3).unwrap(), s);
    }

    #[test]
    fn noise_variance_matches() {
        let s = random_walk(10_000, 2);
        let v = s.values();
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let std = (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
        for var in [0.1, 0.3, 0.5] {
            let noisy = add_gaussian_noise(&s, var, 7).unwrap();
            let resid: Vec<f64> = noisy
                .values()
                .iter()
                .zip(v)
                .map(|(y, x)| y - (x - mean) / std)
                .collect();
            let m = resid.iter().sum::<f64>() / n;
            let sample_var = resid.iter().map(|r| (r - m).powi(2)).sum::<f64>() / (n - 1.0);
            assert!((sample_var - var).abs() < 0.1 * var, "{sample_var} vs {var}");
        }
    }

    #[test]
    fn rejects_negative_variance() {
        assert!(add_gaussian_noise(&random_walk(10, 1), -0.1, 0).is_err());
    }
}
