//! Quasi-static Rician channels with free-space path loss, and the
//! received baseband sample `y = sqrt(P_t) * sum_n h_n a_n + w`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::traffic::ActivityState;
use crate::units::dbm_to_watts;

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    /// Ratio of line-of-sight to scattered power.
    pub rician_k: f64,
    pub path_loss_exponent: f64,
    pub carrier_hz: f64,
    pub reference_distance_m: f64,
}

impl Default for ChannelParams {
    fn default() -> Self {
        ChannelParams {
            rician_k: 3.0,
            path_loss_exponent: 2.0,
            carrier_hz: 900e6,
            reference_distance_m: 1.0,
        }
    }
}

impl ChannelParams {
    pub(crate) fn validate(&self) -> Result<()> {
        if !(self.rician_k >= 0.0 && self.rician_k.is_finite()) {
            return Err(Error::invalid("channel.rician_k", "must be finite and >= 0"));
        }
        if self.path_loss_exponent.is_nan() || self.path_loss_exponent <= 0.0 {
            return Err(Error::invalid("channel.path_loss_exponent", "must be > 0"));
        }
        if self.carrier_hz.is_nan() || self.carrier_hz <= 0.0 {
            return Err(Error::invalid("channel.carrier_hz", "must be > 0"));
        }
        if self.reference_distance_m.is_nan() || self.reference_distance_m <= 0.0 {
            return Err(Error::invalid("channel.reference_distance_m", "must be > 0"));
        }
        Ok(())
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_hz
    }

    /// Power gain `(lambda / (4 pi d0))^2 (d0 / d)^gamma`: Friis at the
    /// reference distance, then the configured exponent.
    pub fn path_loss(&self, distance_m: f64) -> f64 {
        let d0 = self.reference_distance_m;
        let friis = (self.wavelength() / (4.0 * PI * d0)).powi(2);
        friis * (d0 / distance_m).powf(self.path_loss_exponent)
    }
}

/// Circularly-symmetric complex Gaussian with total variance `variance`.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let scale = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * scale, im * scale)
}

/// Draws one quasi-static channel gain for a node at `distance_m`.
///
/// The small-scale part has unit mean power, split `K/(K+1)` into the
/// line-of-sight ray (phase set by the path length) and `1/(K+1)` into
/// scattering, so `E|h|^2` equals the path-loss gain.
pub fn draw_channel<R: Rng + ?Sized>(distance_m: f64, params: &ChannelParams, rng: &mut R) -> Complex64 {
    assert!(distance_m > 0.0, "distance must be positive");
    let k = params.rician_k;
    let los_phase = -2.0 * PI * distance_m / params.wavelength();
    let los = Complex64::from_polar((k / (k + 1.0)).sqrt(), los_phase);
    let scatter = complex_gaussian(rng, 1.0 / (k + 1.0));
    (los + scatter) * params.path_loss(distance_m).sqrt()
}

/// Channel knowledge at the receiver: the gains it assumes and the variance
/// of their estimation error.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelSet {
    pub h: Vec<Complex64>,
    pub theta2: Vec<f64>,
}

impl ChannelSet {
    pub fn perfect(h: Vec<Complex64>) -> Self {
        let theta2 = vec![0.0; h.len()];
        ChannelSet { h, theta2 }
    }

    /// Error variance proportional to each gain: `theta_n^2 = alpha |h_n|^2`.
    pub fn with_uncertainty(h: Vec<Complex64>, alpha: f64) -> Self {
        let theta2 = h.iter().map(|g| alpha * g.norm_sqr()).collect();
        ChannelSet { h, theta2 }
    }

    pub fn len(&self) -> usize {
        self.h.len()
    }

    pub fn is_empty(&self) -> bool {
        self.h.is_empty()
    }

    /// Standard deviations of the estimation errors.
    pub fn theta(&self) -> Vec<f64> {
        self.theta2.iter().map(|v| v.sqrt()).collect()
    }

    pub fn is_perfect(&self) -> bool {
        self.theta2.iter().all(|&v| v == 0.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseParams {
    /// Receiver noise variance (W).
    pub sigma2: f64,
    /// Processing noise added by the power splitter at the detector input (W).
    pub delta2: f64,
}

impl Default for NoiseParams {
    fn default() -> Self {
        NoiseParams {
            sigma2: dbm_to_watts(-110.0),
            delta2: dbm_to_watts(-75.0),
        }
    }
}

impl NoiseParams {
    pub(crate) fn validate(&self) -> Result<()> {
        if !(self.sigma2 > 0.0 && self.sigma2.is_finite()) {
            return Err(Error::invalid("noise.sigma2", "must be finite and > 0"));
        }
        if !(self.delta2 > 0.0 && self.delta2.is_finite()) {
            return Err(Error::invalid("noise.delta2", "must be finite and > 0"));
        }
        Ok(())
    }
}

/// Noise-free part of the received sample.
pub fn superposition(state: ActivityState, symbols: &[i8], gains: &[Complex64], tx_power_w: f64) -> Complex64 {
    let sum: Complex64 = state
        .active_nodes()
        .map(|n| gains[n] * f64::from(symbols[n]))
        .sum();
    sum * tx_power_w.sqrt()
}

/// One received sample. `symbols` holds the BPSK symbol of every node
/// (ignored for idle nodes).
pub fn received_sample<R: Rng + ?Sized>(
    state: ActivityState,
    symbols: &[i8],
    channels: &ChannelSet,
    tx_power_w: f64,
    noise: &NoiseParams,
    rng: &mut R,
) -> Complex64 {
    assert_eq!(state.len(), channels.len());
    assert_eq!(symbols.len(), channels.len());
    superposition(state, symbols, &channels.h, tx_power_w) + complex_gaussian(rng, noise.sigma2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn path_loss_reference_values() {
        let params = ChannelParams::default();
        let lambda = SPEED_OF_LIGHT / 900e6;
        let at_ref = (lambda / (4.0 * PI)).powi(2);
        assert!((params.path_loss(1.0) - at_ref).abs() < 1e-18);
        assert!((params.path_loss(10.0) - at_ref / 100.0).abs() < 1e-18);
        assert!(params.path_loss(3.0) > params.path_loss(10.0));
    }

    #[test]
    fn huge_k_is_deterministic_los() {
        let params = ChannelParams {
            rician_k: 1e9,
            ..ChannelParams::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let d = 4.2;
        let h = draw_channel(d, &params, &mut rng);
        assert!((h.norm() - params.path_loss(d).sqrt()).abs() / h.norm() < 1e-4);
        let expected = Complex64::from_polar(1.0, -2.0 * PI * d / params.wavelength());
        assert!((h / h.norm() - expected).norm() < 1e-4);
    }

    #[test]
    fn mean_power_equals_path_loss() {
        // Monte Carlo over 10^6 redraws, 1 % tolerance.
        let params = ChannelParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for d in [1.0, 6.0] {
            let draws = 1_000_000;
            let mean = (0..draws)
                .map(|_| draw_channel(d, &params, &mut rng).norm_sqr())
                .sum::<f64>()
                / draws as f64;
            let pl = params.path_loss(d);
            assert!((mean / pl - 1.0).abs() < 0.01, "d={d} ratio {}", mean / pl);
        }
    }

    #[test]
    fn noiseless_samples() {
        let h = vec![Complex64::new(0.3, -0.2), Complex64::new(-0.1, 0.5)];
        let channels = ChannelSet::perfect(h.clone());
        let noise = NoiseParams {
            sigma2: 1e-300,
            delta2: 1.0,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let idle = ActivityState::idle(2);
        let y = received_sample(idle, &[0, 0], &channels, 0.1, &noise, &mut rng);
        assert!(y.norm() < 1e-140);

        let one = ActivityState::from_bits(&[1, 0]);
        let y = superposition(one, &[1, 0], &h, 0.1);
        assert!((y - h[0] * 0.1f64.sqrt()).norm() < 1e-16);
    }

    #[test]
    fn sample_is_linear_in_symbols_and_amplitude() {
        let h = vec![Complex64::new(0.3, -0.2), Complex64::new(-0.1, 0.5)];
        let both = ActivityState::from_bits(&[1, 1]);
        let a = superposition(both, &[1, -1], &h, 0.04);
        let b = superposition(both, &[-1, 1], &h, 0.04);
        assert!((a + b).norm() < 1e-16);
        let c = superposition(both, &[1, -1], &h, 0.16);
        assert!((c - a * 2.0).norm() < 1e-15);
    }

    #[test]
    fn mean_received_power_matches_closed_form() {
        let h = vec![Complex64::new(2e-3, 1e-3), Complex64::new(-1e-3, 3e-3)];
        let channels = ChannelSet::perfect(h.clone());
        let noise = NoiseParams {
            sigma2: 1e-7,
            delta2: 1e-9,
        };
        let tx = 0.1;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let trace = crate::traffic::generate_trace(
            &[
                crate::traffic::NodeProfile::new(0.1, 20).unwrap(),
                crate::traffic::NodeProfile::new(0.02, 5).unwrap(),
            ],
            1_000_000,
            3,
        );
        let mut acc = 0.0;
        for m in 0..trace.len() {
            let y = received_sample(trace.state(m), trace.symbols(m), &channels, tx, &noise, &mut rng);
            acc += y.norm_sqr();
        }
        let empirical = acc / trace.len() as f64;
        let expected = (0..2)
            .map(|n| tx * h[n].norm_sqr() * trace.activity_fraction(n))
            .sum::<f64>()
            + noise.sigma2;
        assert!((empirical / expected - 1.0).abs() < 0.01);
    }
}
