//! The four splitting-factor policies.
//!
//! All of them reduce to the same last step: collect the joint
//! constellation of the activity states considered possible, take its
//! minimum distance and pick the smallest reliable `rho`. They differ in
//! which states they consider.

mod block;
mod relevant;
mod runner;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use crate::channel::{ChannelSet, NoiseParams};
use crate::constellation::{min_distance, min_distance_imperfect_csi, union_constellation};
use crate::error::{check_enumerable, Error, Result};
use crate::psf::{psf_from_distance, PsfDecision, ReliabilityConfig};
use crate::traffic::{ActivityState, HistoryRule, NodeProfile};

pub use block::{bbp_predict, BlockPrediction};
pub use relevant::{select_relevant_states, Hypothesis, PredictionContext, Selection};
pub use runner::{PolicyRunner, StepDecision};

/// Default cut-off below which a predicted state is ignored.
pub const DEFAULT_PROB_THRESHOLD: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PolicyKind {
    Baseline,
    Genie,
    Sbp,
    Bbp { block_len: usize },
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PolicyKind::Baseline => f.write_str("baseline"),
            PolicyKind::Genie => f.write_str("genie"),
            PolicyKind::Sbp => f.write_str("sbp"),
            PolicyKind::Bbp { block_len } => write!(f, "bbp:{block_len}"),
        }
    }
}

impl FromStr for PolicyKind {
    type Err = Error;

    /// Accepts `baseline`, `genie`, `sbp` and `bbp:<D>`.
    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        match lower.as_str() {
            "baseline" => Ok(PolicyKind::Baseline),
            "genie" => Ok(PolicyKind::Genie),
            "sbp" => Ok(PolicyKind::Sbp),
            _ => {
                let block = lower
                    .strip_prefix("bbp:")
                    .ok_or_else(|| Error::invalid("policies", format!("unknown policy `{s}`")))?;
                let block_len: usize = block
                    .parse()
                    .map_err(|_| Error::invalid("policies", format!("bad block length in `{s}`")))?;
                if block_len == 0 {
                    return Err(Error::invalid("policies", "bbp block length must be >= 1"));
                }
                Ok(PolicyKind::Bbp { block_len })
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PredictorPolicy {
    pub kind: PolicyKind,
    pub prob_threshold: f64,
    /// Every `reset_period` symbols the predictor falls back to the baseline
    /// factor for one symbol.
    pub reset_period: Option<usize>,
    pub history_rule: HistoryRule,
}

impl PredictorPolicy {
    pub fn new(kind: PolicyKind) -> Self {
        PredictorPolicy {
            kind,
            prob_threshold: DEFAULT_PROB_THRESHOLD,
            reset_period: None,
            history_rule: HistoryRule::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        relevant::check_threshold(self.prob_threshold)?;
        if self.reset_period == Some(0) {
            return Err(Error::invalid("prediction.reset_period", "must be >= 1"));
        }
        if let PolicyKind::Bbp { block_len: 0 } = self.kind {
            return Err(Error::invalid("policies", "bbp block length must be >= 1"));
        }
        Ok(())
    }
}

/// Minimum distance of the union constellation of a set of states, with
/// the imperfect-CSI shrinkage when error variances are known. The shrinkage
/// uses the received-point deviation `sqrt(P_t) theta_n`. Results are
/// memoised per state set, which the channels fix for a whole scenario.
#[derive(Clone, Debug)]
pub struct DistanceEvaluator {
    channels: ChannelSet,
    tx_power_w: f64,
    theta: Option<Vec<f64>>,
    cache: HashMap<Vec<u32>, f64>,
}

impl DistanceEvaluator {
    pub fn new(channels: ChannelSet, tx_power_w: f64) -> Self {
        // A gain error moves a received point by sqrt(P_t) times the error.
        let scale = tx_power_w.sqrt();
        let theta = (!channels.is_perfect()).then(|| channels.theta().iter().map(|t| t * scale).collect());
        DistanceEvaluator {
            channels,
            tx_power_w,
            theta,
            cache: HashMap::new(),
        }
    }

    pub fn channels(&self) -> &ChannelSet {
        &self.channels
    }

    pub fn tx_power_w(&self) -> f64 {
        self.tx_power_w
    }

    pub fn min_distance(&mut self, states: &[ActivityState]) -> f64 {
        let mut key: Vec<u32> = states.iter().map(|s| s.mask()).collect();
        key.sort_unstable();
        key.dedup();
        if let Some(&d) = self.cache.get(&key) {
            return d;
        }
        let nodes = self.channels.len();
        let unique: Vec<_> = key.iter().map(|&m| ActivityState::from_mask(m, nodes)).collect();
        let c = union_constellation(&unique, &self.channels, self.tx_power_w);
        let d = match &self.theta {
            Some(theta) => min_distance_imperfect_csi(&c, theta),
            None => min_distance(&c),
        };
        self.cache.insert(key, d);
        d
    }
}

/// Symbol-based prediction outcome.
#[derive(Clone, Debug, PartialEq)]
pub struct Prediction {
    pub decision: PsfDecision,
    /// States considered possible in the predicted interval.
    pub retained: Vec<(ActivityState, f64)>,
}

/// Predicts the next interval from the last decided one and picks `rho`
/// for the states it considers possible.
pub fn sbp_predict(
    ctx: &PredictionContext,
    profiles: &[NodeProfile],
    distances: &mut DistanceEvaluator,
    noise: &NoiseParams,
    cfg: &ReliabilityConfig,
    prob_threshold: f64,
) -> Result<Prediction> {
    relevant::check_threshold(prob_threshold)?;
    let selection = select_relevant_states(profiles, &Hypothesis::certain(ctx), prob_threshold, HistoryRule::default())?;
    let states: Vec<_> = selection.retained.iter().map(|h| h.state).collect();
    let d0 = distances.min_distance(&states);
    Ok(Prediction {
        decision: psf_from_distance(d0, noise, cfg),
        retained: selection.retained.into_iter().map(|h| (h.state, h.prob)).collect(),
    })
}

/// Upper bound: the true activity state is known, only the symbols are not.
pub fn genie_psf(
    true_state: ActivityState,
    distances: &mut DistanceEvaluator,
    noise: &NoiseParams,
    cfg: &ReliabilityConfig,
) -> PsfDecision {
    let d0 = distances.min_distance(&[true_state]);
    psf_from_distance(d0, noise, cfg)
}

/// Lower bound: one constant `rho` that is reliable for every possible
/// activity state.
pub fn baseline_psf(distances: &mut DistanceEvaluator, noise: &NoiseParams, cfg: &ReliabilityConfig) -> Result<PsfDecision> {
    let nodes = distances.channels().len();
    check_enumerable(nodes)?;
    let states: Vec<_> = ActivityState::enumerate(nodes).collect();
    let d0 = distances.min_distance(&states);
    Ok(psf_from_distance(d0, noise, cfg))
}
