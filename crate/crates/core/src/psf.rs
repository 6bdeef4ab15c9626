//! Power-splitting factor under the worst-case detection SNR constraint,
//! and the harvested-power and SNR expressions that go with it.
//!
//! A fraction `rho` of the received signal feeds the detector, where it is
//! joined by processing noise of variance `delta2`. With `d0` the minimum
//! distance of the joint constellation, the closest pair sees
//!
//! ```text
//! SNR_mod = (0.5 d0)^2 rho / (delta2 + rho sigma2)
//! ```
//!
//! and reliability requires `SNR_mod >= snr_min`. Harvested power falls as
//! `rho` grows, so the best feasible `rho` is the smallest one.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::{superposition, ChannelSet, NoiseParams};
use crate::error::{Error, Result};
use crate::traffic::{ActivityState, NodeProfile};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityConfig {
    /// Linear threshold on `SNR_mod` (20, i.e. about 13 dB).
    pub snr_min: f64,
    /// Smallest splitting factor the detector is ever given.
    pub rho_min: f64,
    /// RF-to-DC conversion efficiency.
    pub eta: f64,
}

impl Default for ReliabilityConfig {
    fn default() -> Self {
        ReliabilityConfig {
            snr_min: 20.0,
            rho_min: 1e-2,
            eta: 0.5,
        }
    }
}

impl ReliabilityConfig {
    pub(crate) fn validate(&self) -> Result<()> {
        if !(self.snr_min > 0.0 && self.snr_min.is_finite()) {
            return Err(Error::invalid("reliability.snr_min", "must be finite and > 0"));
        }
        if !(self.rho_min > 0.0 && self.rho_min <= 1.0) {
            return Err(Error::invalid("reliability.rho_min", "must lie in (0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.eta) {
            return Err(Error::invalid("reliability.eta", "must lie in [0, 1]"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PsfDecision {
    pub rho: f64,
    /// Minimum distance the decision was made for (`+inf`: nothing to separate).
    pub d0: f64,
    /// False when even `rho = 1` cannot reach the SNR threshold.
    pub feasible: bool,
}

/// Parameters of the logistic harvester model.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NonlinearHarvestParams {
    /// Saturation level.
    pub varphi: f64,
    /// Steepness.
    pub psi: f64,
    /// Input power at the inflection point.
    pub phi: f64,
    /// Symbol duration.
    pub t: f64,
}

impl NonlinearHarvestParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("varphi", self.varphi), ("psi", self.psi), ("phi", self.phi), ("t", self.t)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("harvester.{name}"), "must be finite and > 0"));
            }
        }
        Ok(())
    }
}

pub fn snr_mod(d0: f64, rho: f64, noise: &NoiseParams) -> f64 {
    let signal = (0.5 * d0).powi(2) * rho;
    let denom = noise.delta2 + rho * noise.sigma2;
    if signal == 0.0 {
        0.0
    } else if denom == 0.0 {
        f64::INFINITY
    } else {
        signal / denom
    }
}

/// Smallest `rho` in `[rho_min, 1]` that keeps `SNR_mod >= snr_min` for a
/// constellation of minimum distance `d0`. When no `rho <= 1` suffices the
/// decision is `rho = 1` flagged infeasible.
pub fn psf_from_distance(d0: f64, noise: &NoiseParams, cfg: &ReliabilityConfig) -> PsfDecision {
    if d0.is_infinite() {
        return PsfDecision {
            rho: cfg.rho_min,
            d0,
            feasible: true,
        };
    }
    let margin = (0.5 * d0).powi(2) - cfg.snr_min * noise.sigma2;
    let required = cfg.snr_min * noise.delta2 / margin;
    if margin <= 0.0 || required > 1.0 {
        return PsfDecision {
            rho: 1.0,
            d0,
            feasible: false,
        };
    }
    PsfDecision {
        rho: required.max(cfg.rho_min),
        d0,
        feasible: true,
    }
}

/// Linear harvester output for one symbol, `(1 - rho) eta |y|^2`.
pub fn harvested_power_instant(rho: f64, y_abs2: f64, eta: f64) -> f64 {
    (1.0 - rho) * eta * y_abs2
}

/// Expected harvest for a constant `rho` with uncorrelated symbols.
pub fn mean_harvested_closed_form(
    rho: f64,
    channels: &ChannelSet,
    profiles: &[NodeProfile],
    tx_power_w: f64,
    sigma2: f64,
    eta: f64,
) -> f64 {
    (1.0 - rho) * eta * (mean_signal_power(channels, profiles, tx_power_w) + sigma2)
}

/// `P_t sum_n |h_n|^2 duty_n`.
fn mean_signal_power(channels: &ChannelSet, profiles: &[NodeProfile], tx_power_w: f64) -> f64 {
    assert_eq!(channels.len(), profiles.len());
    channels
        .h
        .iter()
        .zip(profiles)
        .map(|(h, prof)| tx_power_w * h.norm_sqr() * prof.duty_cycle())
        .sum()
}

/// Logistic harvester output for one symbol.
pub fn harvested_power_nonlinear(rho: f64, y_abs2: f64, params: &NonlinearHarvestParams) -> f64 {
    let input = (1.0 - rho) * y_abs2;
    // Same expression as the textbook form with numerator and denominator
    // divided by exp(psi phi), which keeps it finite for large psi phi.
    let offset = (-params.psi * params.phi).exp();
    let logistic = 1.0 / (1.0 + (-params.psi * (input - params.phi)).exp());
    params.varphi / params.t * ((1.0 + offset) * logistic - offset)
}

pub fn average_snr(
    rho: f64,
    channels: &ChannelSet,
    profiles: &[NodeProfile],
    tx_power_w: f64,
    noise: &NoiseParams,
) -> f64 {
    rho * mean_signal_power(channels, profiles, tx_power_w) / (rho * noise.sigma2 + noise.delta2)
}

pub fn instantaneous_snr(
    rho: f64,
    state: ActivityState,
    symbols: &[i8],
    channels: &ChannelSet,
    tx_power_w: f64,
    noise: &NoiseParams,
) -> f64 {
    let s: Complex64 = superposition(state, symbols, &channels.h, tx_power_w);
    rho * s.norm_sqr() / (rho * noise.sigma2 + noise.delta2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::dbm_to_watts;

    fn reference_noise() -> NoiseParams {
        NoiseParams {
            sigma2: dbm_to_watts(-110.0),
            delta2: dbm_to_watts(-75.0),
        }
    }

    #[test]
    fn snr_mod_edges() {
        let noise = reference_noise();
        assert_eq!(snr_mod(0.0, 0.5, &noise), 0.0);
        let silent = NoiseParams {
            sigma2: 0.0,
            delta2: 0.0,
        };
        assert_eq!(snr_mod(1.0, 1.0, &silent), f64::INFINITY);
        let d0 = (20.0 * (noise.delta2 + noise.sigma2) * 4.0).sqrt();
        assert!((snr_mod(d0, 1.0, &noise) - 20.0).abs() < 1e-9);
    }

    #[test]
    fn psf_infinite_distance_uses_floor() {
        let d = psf_from_distance(f64::INFINITY, &reference_noise(), &ReliabilityConfig::default());
        assert_eq!(d.rho, 0.01);
        assert!(d.feasible);
    }

    #[test]
    fn psf_reference_point() {
        let noise = NoiseParams {
            sigma2: 1e-14,
            delta2: 3.1623e-11,
        };
        let cfg = ReliabilityConfig::default();
        let d = psf_from_distance(1e-4, &noise, &cfg);
        // 20 * 3.1623e-11 / (2.5e-9 - 2e-13), evaluated by hand.
        assert!((d.rho - 0.253_004_240_339_2).abs() < 1e-9, "{}", d.rho);
        assert!(d.feasible);
        assert!((snr_mod(1e-4, d.rho, &noise) - 20.0).abs() < 1e-9);
    }

    #[test]
    fn psf_singular_boundary_is_infeasible() {
        let noise = reference_noise();
        let cfg = ReliabilityConfig::default();
        let d0 = 2.0 * (20.0 * noise.sigma2).sqrt();
        let d = psf_from_distance(d0, &noise, &cfg);
        assert_eq!(d.rho, 1.0);
        assert!(!d.feasible);
        let d = psf_from_distance(0.0, &noise, &cfg);
        assert!(!d.feasible && d.rho == 1.0);
    }

    #[test]
    fn harvest_formulas() {
        assert_eq!(harvested_power_instant(1.0, 3.0, 0.5), 0.0);
        assert!((harvested_power_instant(0.01, 2e-6, 0.5) - 9.9e-7).abs() < 1e-20);

        let ch = ChannelSet::perfect(vec![Complex64::new(3e-3, -1e-3)]);
        let prof = [NodeProfile::new(1.0, 20).unwrap()];
        assert_eq!(mean_harvested_closed_form(1.0, &ch, &prof, 0.1, 1e-14, 0.5), 0.0);
        let expect = 0.7 * 0.5 * (0.1 * ch.h[0].norm_sqr() + 1e-14);
        let got = mean_harvested_closed_form(0.3, &ch, &prof, 0.1, 1e-14, 0.5);
        assert!((got - expect).abs() < 1e-22);
    }

    #[test]
    fn nonlinear_midpoint_and_saturation() {
        let params = NonlinearHarvestParams {
            varphi: 2e-5,
            psi: 1500.0,
            phi: 1.5e-3,
            t: 1e-5,
        };
        let e = (params.psi * params.phi).exp();
        let mid = (params.varphi * (1.0 + e) / 2.0 - params.varphi) / (e * params.t);
        let got = harvested_power_nonlinear(0.5, 2.0 * params.phi, &params);
        assert!((got - mid).abs() / mid < 1e-12);
        let sat = harvested_power_nonlinear(0.0, 1e6, &params);
        assert!((sat - params.varphi / params.t).abs() / sat < 1e-12);
        assert!(harvested_power_nonlinear(0.0, 0.0, &params).abs() < 1e-12 * sat);
    }

    #[test]
    fn snr_expressions() {
        let noise = reference_noise();
        let ch = ChannelSet::perfect(vec![Complex64::new(2e-3, 1e-3), Complex64::new(2e-3, 1e-3)]);
        let prof = [NodeProfile::new(1.0, 4).unwrap(); 2];
        assert_eq!(average_snr(0.0, &ch, &prof, 0.1, &noise), 0.0);
        let one = ChannelSet::perfect(vec![ch.h[0]]);
        let expect = 0.4 * 0.1 * ch.h[0].norm_sqr() / (0.4 * noise.sigma2 + noise.delta2);
        assert!((average_snr(0.4, &one, &prof[..1], 0.1, &noise) / expect - 1.0).abs() < 1e-12);

        let idle = ActivityState::idle(2);
        assert_eq!(instantaneous_snr(0.5, idle, &[0, 0], &ch, 0.1, &noise), 0.0);
        let first = ActivityState::from_bits(&[1, 0]);
        let snr = instantaneous_snr(0.4, first, &[-1, 0], &ch, 0.1, &noise);
        assert!((snr / expect - 1.0).abs() < 1e-12);
        let both = ActivityState::from_bits(&[1, 1]);
        assert_eq!(instantaneous_snr(0.4, both, &[1, -1], &ch, 0.1, &noise), 0.0);
    }
}
