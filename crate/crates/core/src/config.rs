//! Scenario configuration and its TOML file format.
//!
//! Every key is optional; a missing key takes the default scenario value
//! (6 nodes, `p = 0.1`, `L = 20`, 20 dBm transmit power, -110 dBm receiver
//! noise, -75 dBm processing noise). Powers may be given either in dBm
//! (`*_dbm`) or in watts (`*_w`), never both.
//!
//! ```toml
//! seed = 7
//! symbols = 1000
//! repetitions = 500
//! policies = ["baseline", "sbp", "bbp:2", "genie"]
//! tx_power_dbm = 20.0
//!
//! [nodes]
//! count = 6
//! p = 0.1
//! packet_len = 20
//!
//! [deployment]
//! min_distance_m = 3.0
//! max_distance_m = 10.0
//! placement = "uniform_area"     # or "uniform_distance"
//!
//! [noise]
//! sigma2_dbm = -110.0
//! delta2_dbm = -75.0
//!
//! [prediction]
//! prob_threshold = 1e-8
//! history_rule = "window"        # or "phase"
//! ```
//!
//! Heterogeneous nodes are listed one by one with `[[node]]` tables instead
//! of `[nodes]`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::channel::{ChannelParams, NoiseParams};
use crate::error::{check_enumerable, Error, Result};
use crate::predictor::{PolicyKind, PredictorPolicy, DEFAULT_PROB_THRESHOLD};
use crate::psf::{NonlinearHarvestParams, ReliabilityConfig};
use crate::traffic::{HistoryRule, NodeProfile};
use crate::units::dbm_to_watts;

/// How node distances are drawn within the deployment range.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Placement {
    /// Distance uniform on `[min, max]`.
    UniformDistance,
    /// Position uniform over the annulus, so density grows with distance.
    #[default]
    UniformArea,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Deployment {
    pub min_distance_m: f64,
    pub max_distance_m: f64,
    pub placement: Placement,
}

impl Default for Deployment {
    fn default() -> Self {
        Deployment {
            min_distance_m: 3.0,
            max_distance_m: 10.0,
            placement: Placement::UniformArea,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioConfig {
    pub profiles: Vec<NodeProfile>,
    pub deployment: Deployment,
    pub channel: ChannelParams,
    pub noise: NoiseParams,
    pub tx_power_w: f64,
    pub reliability: ReliabilityConfig,
    pub policies: Vec<PolicyKind>,
    pub prob_threshold: f64,
    pub reset_period: Option<usize>,
    pub history_rule: HistoryRule,
    /// Symbols evaluated per repetition.
    pub symbols: usize,
    pub repetitions: usize,
    pub seed: u64,
    /// Channel uncertainty factor, `theta_n^2 = alpha |h_n|^2`.
    pub csi_alpha: f64,
    /// Run the joint detector on noisy samples and count its errors.
    pub detect: bool,
    /// Logistic harvester; the linear model is used when absent.
    pub harvester: Option<NonlinearHarvestParams>,
}

impl Deployment {
    /// Draws one node distance.
    pub fn sample_distance<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let (a, b) = (self.min_distance_m, self.max_distance_m);
        match self.placement {
            Placement::UniformDistance => rng.random_range(a..=b),
            Placement::UniformArea => {
                let u: f64 = rng.random();
                (a * a + u * (b * b - a * a)).sqrt()
            }
        }
    }
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            profiles: vec![
                NodeProfile {
                    p: 0.1,
                    packet_len: 20
                };
                6
            ],
            deployment: Deployment::default(),
            channel: ChannelParams::default(),
            noise: NoiseParams::default(),
            tx_power_w: dbm_to_watts(20.0),
            reliability: ReliabilityConfig::default(),
            policies: vec![PolicyKind::Baseline, PolicyKind::Sbp, PolicyKind::Genie],
            prob_threshold: DEFAULT_PROB_THRESHOLD,
            reset_period: None,
            history_rule: HistoryRule::Window,
            symbols: 1000,
            repetitions: 500,
            seed: 1,
            csi_alpha: 0.0,
            detect: false,
            harvester: None,
        }
    }
}

impl ScenarioConfig {
    pub fn nodes(&self) -> usize {
        self.profiles.len()
    }

    /// Identical profiles for `count` nodes.
    pub fn set_uniform_nodes(&mut self, count: usize, p: f64, packet_len: usize) {
        self.profiles = vec![NodeProfile { p, packet_len }; count];
    }

    pub fn predictor_policies(&self) -> Vec<PredictorPolicy> {
        self.policies
            .iter()
            .map(|&kind| PredictorPolicy {
                kind,
                prob_threshold: self.prob_threshold,
                reset_period: self.reset_period,
                history_rule: self.history_rule,
            })
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.profiles.is_empty() {
            return Err(Error::invalid("nodes.count", "at least one node is required"));
        }
        check_enumerable(self.profiles.len())?;
        for (n, profile) in self.profiles.iter().enumerate() {
            profile.validate(&format!("node[{n}]"))?;
        }
        let dep = &self.deployment;
        if !(dep.min_distance_m > 0.0 && dep.min_distance_m <= dep.max_distance_m && dep.max_distance_m.is_finite()) {
            return Err(Error::invalid(
                "deployment",
                "need 0 < min_distance_m <= max_distance_m < inf",
            ));
        }
        self.channel.validate()?;
        self.noise.validate()?;
        if !(self.tx_power_w > 0.0 && self.tx_power_w.is_finite()) {
            return Err(Error::invalid("tx_power_w", "must be finite and > 0"));
        }
        self.reliability.validate()?;
        if self.policies.is_empty() {
            return Err(Error::invalid("policies", "at least one policy is required"));
        }
        for policy in self.predictor_policies() {
            policy.validate()?;
        }
        if self.symbols == 0 {
            return Err(Error::invalid("symbols", "must be at least 1"));
        }
        if self.repetitions == 0 {
            return Err(Error::invalid("repetitions", "must be at least 1"));
        }
        if !(self.csi_alpha >= 0.0 && self.csi_alpha.is_finite()) {
            return Err(Error::invalid("csi_alpha", "must be finite and >= 0"));
        }
        if let Some(h) = &self.harvester {
            h.validate()?;
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: FileConfig = toml::from_str(text)?;
        let cfg = file.into_config()?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Serializes with watt-valued keys so that parsing the output gives
    /// back exactly this configuration.
    pub fn to_toml_string(&self) -> Result<String> {
        Ok(toml::to_string(&FileConfig::from_config(self))?)
    }
}

/// Reads and validates a scenario file.
pub fn parse_config(path: impl AsRef<Path>) -> Result<ScenarioConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    ScenarioConfig::from_toml_str(&text)
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    symbols: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    repetitions: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    policies: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    tx_power_dbm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    tx_power_w: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    csi_alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    detect: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    nodes: Option<UniformNodes>,
    #[serde(skip_serializing_if = "Option::is_none")]
    node: Option<Vec<NodeEntry>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    deployment: Option<Deployment>,
    #[serde(skip_serializing_if = "Option::is_none")]
    channel: Option<ChannelFile>,
    #[serde(skip_serializing_if = "Option::is_none")]
    noise: Option<NoiseFile>,
    #[serde(skip_serializing_if = "Option::is_none")]
    reliability: Option<ReliabilityFile>,
    #[serde(skip_serializing_if = "Option::is_none")]
    prediction: Option<PredictionFile>,
    #[serde(skip_serializing_if = "Option::is_none")]
    harvester: Option<NonlinearHarvestParams>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct UniformNodes {
    #[serde(skip_serializing_if = "Option::is_none")]
    count: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    packet_len: Option<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeEntry {
    p: f64,
    packet_len: usize,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChannelFile {
    #[serde(skip_serializing_if = "Option::is_none")]
    rician_k: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    path_loss_exponent: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    carrier_hz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    reference_distance_m: Option<f64>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NoiseFile {
    #[serde(skip_serializing_if = "Option::is_none")]
    sigma2_dbm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sigma2_w: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    delta2_dbm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    delta2_w: Option<f64>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ReliabilityFile {
    #[serde(skip_serializing_if = "Option::is_none")]
    snr_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    rho_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    eta: Option<f64>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PredictionFile {
    #[serde(skip_serializing_if = "Option::is_none")]
    prob_threshold: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    reset_period: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    history_rule: Option<HistoryRule>,
}

fn power(field: &str, dbm: Option<f64>, watts: Option<f64>, default: f64) -> Result<f64> {
    match (dbm, watts) {
        (Some(_), Some(_)) => Err(Error::invalid(field, "give either the _dbm or the _w key, not both")),
        (Some(dbm), None) => Ok(dbm_to_watts(dbm)),
        (None, Some(w)) => Ok(w),
        (None, None) => Ok(default),
    }
}

impl FileConfig {
    fn into_config(self) -> Result<ScenarioConfig> {
        let mut cfg = ScenarioConfig::default();
        let default_profile = cfg.profiles[0];
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(symbols) = self.symbols {
            cfg.symbols = symbols;
        }
        if let Some(reps) = self.repetitions {
            cfg.repetitions = reps;
        }
        if let Some(policies) = self.policies {
            cfg.policies = policies.iter().map(|s| s.parse()).collect::<Result<_>>()?;
        }
        cfg.tx_power_w = power("tx_power", self.tx_power_dbm, self.tx_power_w, cfg.tx_power_w)?;
        if let Some(alpha) = self.csi_alpha {
            cfg.csi_alpha = alpha;
        }
        if let Some(detect) = self.detect {
            cfg.detect = detect;
        }
        match (self.nodes, self.node) {
            (Some(_), Some(_)) => {
                return Err(Error::invalid("node", "use either [nodes] or [[node]], not both"));
            }
            (Some(u), None) => cfg.set_uniform_nodes(
                u.count.unwrap_or(cfg.profiles.len()),
                u.p.unwrap_or(default_profile.p),
                u.packet_len.unwrap_or(default_profile.packet_len),
            ),
            (None, Some(list)) => {
                cfg.profiles = list
                    .into_iter()
                    .map(|e| NodeProfile {
                        p: e.p,
                        packet_len: e.packet_len,
                    })
                    .collect();
            }
            (None, None) => {}
        }
        if let Some(dep) = self.deployment {
            cfg.deployment = dep;
        }
        if let Some(ch) = self.channel {
            let d = cfg.channel;
            cfg.channel = ChannelParams {
                rician_k: ch.rician_k.unwrap_or(d.rician_k),
                path_loss_exponent: ch.path_loss_exponent.unwrap_or(d.path_loss_exponent),
                carrier_hz: ch.carrier_hz.unwrap_or(d.carrier_hz),
                reference_distance_m: ch.reference_distance_m.unwrap_or(d.reference_distance_m),
            };
        }
        if let Some(n) = self.noise {
            cfg.noise = NoiseParams {
                sigma2: power("noise.sigma2", n.sigma2_dbm, n.sigma2_w, cfg.noise.sigma2)?,
                delta2: power("noise.delta2", n.delta2_dbm, n.delta2_w, cfg.noise.delta2)?,
            };
        }
        if let Some(r) = self.reliability {
            let d = cfg.reliability;
            cfg.reliability = ReliabilityConfig {
                snr_min: r.snr_min.unwrap_or(d.snr_min),
                rho_min: r.rho_min.unwrap_or(d.rho_min),
                eta: r.eta.unwrap_or(d.eta),
            };
        }
        if let Some(pred) = self.prediction {
            if let Some(t) = pred.prob_threshold {
                cfg.prob_threshold = t;
            }
            cfg.reset_period = pred.reset_period;
            if let Some(rule) = pred.history_rule {
                cfg.history_rule = rule;
            }
        }
        cfg.harvester = self.harvester;
        Ok(cfg)
    }

    fn from_config(cfg: &ScenarioConfig) -> Self {
        let uniform = cfg.profiles.windows(2).all(|w| w[0] == w[1]) && !cfg.profiles.is_empty();
        let (nodes, node) = if uniform {
            let first = cfg.profiles[0];
            (
                Some(UniformNodes {
                    count: Some(cfg.profiles.len()),
                    p: Some(first.p),
                    packet_len: Some(first.packet_len),
                }),
                None,
            )
        } else {
            (
                None,
                Some(
                    cfg.profiles
                        .iter()
                        .map(|p| NodeEntry {
                            p: p.p,
                            packet_len: p.packet_len,
                        })
                        .collect(),
                ),
            )
        };
        FileConfig {
            seed: Some(cfg.seed),
            symbols: Some(cfg.symbols),
            repetitions: Some(cfg.repetitions),
            policies: Some(cfg.policies.iter().map(|p| p.to_string()).collect()),
            tx_power_dbm: None,
            tx_power_w: Some(cfg.tx_power_w),
            csi_alpha: Some(cfg.csi_alpha),
            detect: Some(cfg.detect),
            nodes,
            node,
            deployment: Some(cfg.deployment),
            channel: Some(ChannelFile {
                rician_k: Some(cfg.channel.rician_k),
                path_loss_exponent: Some(cfg.channel.path_loss_exponent),
                carrier_hz: Some(cfg.channel.carrier_hz),
                reference_distance_m: Some(cfg.channel.reference_distance_m),
            }),
            noise: Some(NoiseFile {
                sigma2_dbm: None,
                sigma2_w: Some(cfg.noise.sigma2),
                delta2_dbm: None,
                delta2_w: Some(cfg.noise.delta2),
            }),
            reliability: Some(ReliabilityFile {
                snr_min: Some(cfg.reliability.snr_min),
                rho_min: Some(cfg.reliability.rho_min),
                eta: Some(cfg.reliability.eta),
            }),
            prediction: Some(PredictionFile {
                prob_threshold: Some(cfg.prob_threshold),
                reset_period: cfg.reset_period,
                history_rule: Some(cfg.history_rule),
            }),
            harvester: cfg.harvester,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_the_default_scenario() {
        let cfg = ScenarioConfig::from_toml_str("").unwrap();
        assert_eq!(cfg, ScenarioConfig::default());
        assert_eq!(cfg.nodes(), 6);
        assert_eq!(cfg.profiles[0], NodeProfile { p: 0.1, packet_len: 20 });
        assert!((cfg.tx_power_w - 0.1).abs() < 1e-15);
        assert!((cfg.noise.sigma2 - 1e-14).abs() < 1e-28);
        assert!((cfg.noise.delta2 - 10f64.powf(-10.5)).abs() < 1e-24);
        assert_eq!(cfg.reliability.eta, 0.5);
        assert_eq!(cfg.channel.rician_k, 3.0);
        assert_eq!(cfg.channel.path_loss_exponent, 2.0);
        assert_eq!(cfg.channel.carrier_hz, 900e6);
    }

    #[test]
    fn bad_probability_names_the_field() {
        let err = ScenarioConfig::from_toml_str("[nodes]\np = 1.5\n").unwrap_err();
        match err {
            Error::InvalidConfig { field, .. } => assert_eq!(field, "node[0].p"),
            other => panic!("unexpected {other:?}"),
        }
        let err = ScenarioConfig::from_toml_str("[[node]]\np = 0.1\npacket_len = 4\n[[node]]\np = 0.0\npacket_len = 4\n")
            .unwrap_err();
        assert!(err.to_string().contains("node[1].p"), "{err}");
    }

    #[test]
    fn unknown_keys_and_double_units_are_rejected() {
        assert!(matches!(ScenarioConfig::from_toml_str("nodez = 3"), Err(Error::Parse(_))));
        let err = ScenarioConfig::from_toml_str("tx_power_dbm = 20\ntx_power_w = 0.1").unwrap_err();
        assert!(err.to_string().contains("tx_power"));
    }

    #[test]
    fn dbm_keys_are_converted() {
        let cfg = ScenarioConfig::from_toml_str("tx_power_dbm = 30\n[noise]\nsigma2_dbm = -100\n").unwrap();
        assert!((cfg.tx_power_w - 1.0).abs() < 1e-15);
        assert!((cfg.noise.sigma2 - 1e-13).abs() < 1e-27);
    }

    #[test]
    fn round_trip() {
        let text = r#"
            seed = 99
            policies = ["genie", "bbp:3", "sbp"]
            csi_alpha = 1e-3
            tx_power_dbm = 17.3
            [[node]]
            p = 0.05
            packet_len = 12
            [[node]]
            p = 0.3
            packet_len = 7
            [noise]
            sigma2_dbm = -111.7
            [prediction]
            reset_period = 50
            [harvester]
            varphi = 2e-5
            psi = 1500.0
            phi = 1.5e-3
            t = 1e-5
        "#;
        let cfg = ScenarioConfig::from_toml_str(text).unwrap();
        let again = ScenarioConfig::from_toml_str(&cfg.to_toml_string().unwrap()).unwrap();
        assert_eq!(cfg, again);
        let default = ScenarioConfig::default();
        let again = ScenarioConfig::from_toml_str(&default.to_toml_string().unwrap()).unwrap();
        assert_eq!(default, again);
    }

    #[test]
    fn too_many_nodes() {
        assert!(matches!(
            ScenarioConfig::from_toml_str("[nodes]\ncount = 17"),
            Err(Error::StateSpaceTooLarge { nodes: 17 })
        ));
    }
}
