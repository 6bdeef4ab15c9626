use std::collections::HashMap;
use std::rc::Rc;

use crate::channel::{ChannelSet, NoiseParams};
use crate::error::{check_enumerable, Result};
use crate::psf::{PsfDecision, ReliabilityConfig};
use crate::traffic::{ActivityState, NodeProfile};

use super::{baseline_psf, bbp_predict, genie_psf, sbp_predict, DistanceEvaluator, PolicyKind, PredictionContext, PredictorPolicy};

/// The factor applied in one interval, with the states it was chosen for.
#[derive(Clone, Debug)]
pub struct StepDecision {
    pub decision: PsfDecision,
    /// Masks of the states considered possible, sorted.
    pub states: Rc<[u32]>,
    /// Whether the true state was among them.
    pub covered: bool,
    /// The baseline factor was applied because of a periodic reset.
    pub reset: bool,
}

#[derive(Clone, Debug)]
struct Cached {
    decision: PsfDecision,
    states: Rc<[u32]>,
}

#[derive(Debug)]
struct Block {
    decision: PsfDecision,
    per_symbol: Vec<Rc<[u32]>>,
}

/// Runs one policy across a scenario, interval by interval.
///
/// Predictions depend on the decided past only through a small key (the set
/// of nodes still inside a packet for the symbol-based predictor, the state
/// and capped packet residuals for the block-based one), so they are memoised per key.
#[derive(Debug)]
pub struct PolicyRunner {
    policy: PredictorPolicy,
    profiles: Vec<NodeProfile>,
    noise: NoiseParams,
    cfg: ReliabilityConfig,
    distances: DistanceEvaluator,
    baseline: Option<Cached>,
    by_forced: HashMap<u32, Cached>,
    by_state: HashMap<u32, Cached>,
    blocks: HashMap<(usize, u32, Vec<u32>), Rc<Block>>,
    current: Option<(usize, Rc<Block>)>,
}

impl PolicyRunner {
    /// `channels` is the receiver's channel knowledge, error variances included.
    pub fn new(
        policy: PredictorPolicy,
        profiles: &[NodeProfile],
        channels: ChannelSet,
        tx_power_w: f64,
        noise: NoiseParams,
        cfg: ReliabilityConfig,
    ) -> Result<Self> {
        policy.validate()?;
        if policy.kind != PolicyKind::Genie {
            check_enumerable(profiles.len())?;
        }
        Ok(PolicyRunner {
            policy,
            profiles: profiles.to_vec(),
            noise,
            cfg,
            distances: DistanceEvaluator::new(channels, tx_power_w),
            baseline: None,
            by_forced: HashMap::new(),
            by_state: HashMap::new(),
            blocks: HashMap::new(),
            current: None,
        })
    }

    pub fn policy(&self) -> &PredictorPolicy {
        &self.policy
    }

    /// Decides interval `m`. `contexts[k]` is the decided context after
    /// interval `k - 1` (so `contexts[0]` precedes the first interval) and
    /// must reach at least index `m`. `true_state` is only read by the genie
    /// and for bookkeeping.
    pub fn decide(&mut self, m: usize, true_state: ActivityState, contexts: &[PredictionContext]) -> Result<StepDecision> {
        if let Some(period) = self.policy.reset_period {
            if m > 0 && m % period == 0 && !matches!(self.policy.kind, PolicyKind::Baseline | PolicyKind::Genie) {
                let base = self.baseline()?;
                return Ok(step(base.decision, base.states, true_state, true));
            }
        }
        let (decision, states) = match self.policy.kind {
            PolicyKind::Baseline => {
                let base = self.baseline()?;
                (base.decision, base.states)
            }
            PolicyKind::Genie => {
                let entry = match self.by_state.get(&true_state.mask()) {
                    Some(c) => c.clone(),
                    None => {
                        let decision = genie_psf(true_state, &mut self.distances, &self.noise, &self.cfg);
                        let c = Cached {
                            decision,
                            states: Rc::from(vec![true_state.mask()]),
                        };
                        self.by_state.insert(true_state.mask(), c.clone());
                        c
                    }
                };
                (entry.decision, entry.states)
            }
            PolicyKind::Sbp => {
                let ctx = &contexts[m];
                let key = ctx.forced_mask();
                let entry = match self.by_forced.get(&key) {
                    Some(c) => c.clone(),
                    None => {
                        let pred = sbp_predict(
                            ctx,
                            &self.profiles,
                            &mut self.distances,
                            &self.noise,
                            &self.cfg,
                            self.policy.prob_threshold,
                        )?;
                        let c = Cached {
                            decision: pred.decision,
                            states: sorted_masks(pred.retained.iter().map(|(s, _)| *s)),
                        };
                        self.by_forced.insert(key, c.clone());
                        c
                    }
                };
                (entry.decision, entry.states)
            }
            PolicyKind::Bbp { block_len } => {
                let start = m - m % block_len;
                let block = match &self.current {
                    Some((s, b)) if *s == start => b.clone(),
                    _ => {
                        let b = self.block(start, block_len, contexts)?;
                        self.current = Some((start, b.clone()));
                        b
                    }
                };
                (block.decision, block.per_symbol[m - start].clone())
            }
        };
        Ok(step(decision, states, true_state, false))
    }

    fn baseline(&mut self) -> Result<Cached> {
        if let Some(b) = &self.baseline {
            return Ok(b.clone());
        }
        let decision = baseline_psf(&mut self.distances, &self.noise, &self.cfg)?;
        let nodes = self.profiles.len();
        let b = Cached {
            decision,
            states: (0..1u32 << nodes).collect(),
        };
        self.baseline = Some(b.clone());
        Ok(b)
    }

    fn block(&mut self, start: usize, block_len: usize, contexts: &[PredictionContext]) -> Result<Rc<Block>> {
        // The factor for a block is computed while the previous block is
        // received, so the last decided interval is `block_len` symbols
        // before the block starts.
        let ctx_index = start.saturating_sub(block_len);
        let lead = start - ctx_index;
        let ctx = &contexts[ctx_index];
        let horizon = (lead + block_len) as u32;
        let residual = ctx.residual.iter().map(|&r| r.min(horizon)).collect::<Vec<_>>();
        let key = (lead, ctx.state.mask(), residual);
        if let Some(b) = self.blocks.get(&key) {
            return Ok(b.clone());
        }
        let pred = bbp_predict(
            ctx,
            &self.profiles,
            &mut self.distances,
            &self.noise,
            &self.cfg,
            self.policy.prob_threshold,
            block_len,
            lead,
            self.policy.history_rule,
        )?;
        let block = Rc::new(Block {
            decision: pred.decision,
            per_symbol: pred
                .per_symbol
                .iter()
                .map(|states| sorted_masks(states.iter().map(|(s, _)| *s)))
                .collect(),
        });
        self.blocks.insert(key, block.clone());
        Ok(block)
    }
}

fn sorted_masks(states: impl Iterator<Item = ActivityState>) -> Rc<[u32]> {
    let mut v: Vec<u32> = states.map(|s| s.mask()).collect();
    v.sort_unstable();
    v.dedup();
    Rc::from(v)
}

fn step(decision: PsfDecision, states: Rc<[u32]>, true_state: ActivityState, reset: bool) -> StepDecision {
    let covered = states.binary_search(&true_state.mask()).is_ok();
    StepDecision {
        decision,
        states,
        covered,
        reset,
    }
}
