//! Rayleigh-fading channel draws and dB/linear unit conversions.
//!
//! Under Rayleigh fading the power gain `|h|^2` is exponential. Draws use a
//! counter-based stream keyed by `(seed, draw index)`, so draw `i` is the
//! same whether gains are produced serially or in parallel batches.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::Error;

/// A reproducible batch of channel power gains.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelDraw {
    pub gains: Vec<f64>,
    pub seed: u64,
    pub mean: f64,
}

/// One exponential variate from the counter-based stream.
fn exponential_at(seed: u64, index: u64, mean: f64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let u: f64 = rng.gen(); // in [0, 1)
    -mean * (1.0 - u).ln()
}

/// Draws `n` independent exponential(`mean`) power gains.
///
/// Identical `(n, mean, seed)` produce bit-identical output.
pub fn draw_rayleigh_gains(n: usize, mean: f64, seed: u64) -> Result<ChannelDraw, Error> {
    if n == 0 {
        return Err(Error::InvalidSpec("channel draw requires n >= 1".into()));
    }
    if !(mean > 0.0 && mean.is_finite()) {
        return Err(Error::InvalidSpec(format!(
            "channel mean must be positive and finite, got {mean}"
        )));
    }
    let gains = (0..n as u64)
        .map(|i| exponential_at(seed, i, mean).max(f64::MIN_POSITIVE))
        .collect();
    Ok(ChannelDraw { gains, seed, mean })
}

/// Uniform `[0,1)` variates from the same counter-based stream, on a
/// separate substream so they never collide with gain draws.
pub fn draw_uniform(n: usize, seed: u64) -> Vec<f64> {
    (0..n as u64)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(u64::MAX - i);
            rng.gen()
        })
        .collect()
}

/// `10^(x/10)`.
pub fn db_to_linear(x_db: f64) -> f64 {
    10f64.powf(x_db / 10.0)
}

/// `10 log10(x)`.
pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Converts a dBm/Hz spectral density to watts over `bandwidth_hz`.
pub fn dbm_to_watts(x_dbm: f64, bandwidth_hz: f64) -> Result<f64, Error> {
    if !(bandwidth_hz > 0.0 && bandwidth_hz.is_finite()) || !x_dbm.is_finite() {
        return Err(Error::InvalidSpec(format!(
            "invalid dBm conversion: x={x_dbm}, bandwidth={bandwidth_hz}"
        )));
    }
    Ok(10f64.powf((x_dbm - 30.0) / 10.0) * bandwidth_hz)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn draws_are_deterministic() {
        let a = draw_rayleigh_gains(64, 2.0, 17).unwrap();
        let b = draw_rayleigh_gains(64, 2.0, 17).unwrap();
        assert_eq!(a, b);
        let c = draw_rayleigh_gains(64, 2.0, 18).unwrap();
        assert_ne!(a.gains, c.gains);
    }

    #[test]
    fn counter_stream_prefix_stable() {
        // Drawing a longer batch must not change the earlier entries.
        let short = draw_rayleigh_gains(10, 1.0, 5).unwrap();
        let long = draw_rayleigh_gains(100, 1.0, 5).unwrap();
        assert_eq!(short.gains, long.gains[..10]);
    }

    #[test]
    fn sample_mean_within_lln_bound() {
        let n = 1_000_000;
        let draw = draw_rayleigh_gains(n, 2.0, 3).unwrap();
        let mean: f64 = draw.gains.iter().sum::<f64>() / n as f64;
        // std of the sample mean is 2/sqrt(n) = 2e-3.
        assert!((mean - 2.0).abs() < 3.0 * 2e-3, "sample mean {mean}");
    }

    #[test]
    fn ks_statistic_below_critical_value() {
        let n = 100_000;
        let mut gains = draw_rayleigh_gains(n, 1.5, 11).unwrap().gains;
        gains.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut ks: f64 = 0.0;
        for (i, &g) in gains.iter().enumerate() {
            let f = 1.0 - (-g / 1.5).exp();
            let lo = i as f64 / n as f64;
            let hi = (i + 1) as f64 / n as f64;
            ks = ks.max((f - lo).abs()).max((f - hi).abs());
        }
        // 1% critical value for the one-sample KS test.
        let critical = 1.63 / (n as f64).sqrt();
        assert!(ks < critical, "KS statistic {ks} vs critical {critical}");
    }

    #[test]
    fn db_conversions() {
        assert!((db_to_linear(7.0) - 5.011872).abs() < 1e-6);
        assert_eq!(db_to_linear(0.0), 1.0);
        let n0 = dbm_to_watts(-174.0, 1.0).unwrap();
        assert!((n0 - 3.981e-21).abs() < 1e-23);
    }

    #[test]
    fn db_round_trip() {
        for x in [-200.0, -57.3, 0.0, 12.5, 200.0] {
            let back = linear_to_db(db_to_linear(x));
            assert!((back - x).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_invalid_inputs() {
        assert!(draw_rayleigh_gains(0, 1.0, 0).is_err());
        assert!(draw_rayleigh_gains(4, -1.0, 0).is_err());
        assert!(dbm_to_watts(-174.0, 0.0).is_err());
    }
}
