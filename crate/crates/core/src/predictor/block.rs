use crate::channel::NoiseParams;
use crate::error::{Error, Result};
use crate::psf::{psf_from_distance, PsfDecision, ReliabilityConfig};
use crate::traffic::{ActivityState, HistoryRule, NodeProfile};

use super::relevant::{check_threshold, select_relevant_states, Hypothesis, PredictionContext};
use super::DistanceEvaluator;

#[derive(Clone, Debug, PartialEq)]
pub struct BlockPrediction {
    /// One factor for the whole block, from the smallest per-symbol distance.
    pub decision: PsfDecision,
    /// For each symbol of the block, the possible states and their
    /// probabilities, sorted by state.
    pub per_symbol: Vec<Vec<(ActivityState, f64)>>,
    pub d0_per_symbol: Vec<f64>,
}

/// Block-based prediction.
///
/// `ctx` is the last decided interval. The block of `block_len` symbols
/// starts `lead` intervals after it (normally `lead = block_len`, the time
/// the computation itself takes), so the chain is run `lead + block_len`
/// steps ahead. Each step extends every surviving hypothesis by one
/// interval with the chained probability
/// `Pr(s[j]) = Pr(s[j] | s[j-1]) Pr(s[j-1])`, merges identical hypotheses
/// and drops those at or below `prob_threshold`.
///
/// Two hypotheses are identical when their states agree and every packet
/// residual agrees, where residuals that outlast the horizon are capped at
/// the steps left: such a node transmits until the end of the horizon
/// either way. Merged hypotheses add their probabilities.
#[allow(clippy::too_many_arguments)]
pub fn bbp_predict(
    ctx: &PredictionContext,
    profiles: &[NodeProfile],
    distances: &mut DistanceEvaluator,
    noise: &NoiseParams,
    cfg: &ReliabilityConfig,
    prob_threshold: f64,
    block_len: usize,
    lead: usize,
    rule: HistoryRule,
) -> Result<BlockPrediction> {
    check_threshold(prob_threshold)?;
    if block_len == 0 {
        return Err(Error::invalid("policies", "bbp block length must be >= 1"));
    }
    let horizon = lead + block_len;
    let mut frontier = vec![Hypothesis {
        state: ctx.state,
        residual: cap(&ctx.residual, horizon),
        prob: 1.0,
    }];
    let mut per_symbol = Vec::with_capacity(block_len);
    let mut d0_per_symbol = Vec::with_capacity(block_len);

    for step in 1..=horizon {
        let left = (horizon - step) as u32;
        let mut next = Vec::new();
        for hyp in &frontier {
            let selection = select_relevant_states(profiles, hyp, prob_threshold, rule)?;
            next.extend(selection.retained.into_iter().map(|mut h| {
                for r in &mut h.residual {
                    *r = (*r).min(left);
                }
                h
            }));
        }
        frontier = merge(next, prob_threshold);

        if step > lead {
            let marginal = state_marginals(&frontier);
            let states: Vec<_> = marginal.iter().map(|(s, _)| *s).collect();
            d0_per_symbol.push(distances.min_distance(&states));
            per_symbol.push(marginal);
        }
    }

    let d0 = d0_per_symbol.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(BlockPrediction {
        decision: psf_from_distance(d0, noise, cfg),
        per_symbol,
        d0_per_symbol,
    })
}

fn cap(residual: &[u32], limit: usize) -> Vec<u32> {
    residual.iter().map(|&r| r.min(limit as u32)).collect()
}

fn merge(mut hyps: Vec<Hypothesis>, threshold: f64) -> Vec<Hypothesis> {
    hyps.sort_by(|a, b| {
        a.state
            .mask()
            .cmp(&b.state.mask())
            .then_with(|| a.residual.cmp(&b.residual))
    });
    let mut out: Vec<Hypothesis> = Vec::with_capacity(hyps.len());
    for h in hyps {
        match out.last_mut() {
            Some(last) if last.state == h.state && last.residual == h.residual => last.prob += h.prob,
            _ => out.push(h),
        }
    }
    out.retain(|h| h.prob > threshold);
    out
}

/// Probability of each distinct state among sorted hypotheses.
fn state_marginals(hyps: &[Hypothesis]) -> Vec<(ActivityState, f64)> {
    let mut out: Vec<(ActivityState, f64)> = Vec::new();
    for h in hyps {
        match out.last_mut() {
            Some((s, p)) if *s == h.state => *p += h.prob,
            _ => out.push((h.state, h.prob)),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::ChannelSet;
    use crate::predictor::sbp_predict;
    use crate::traffic::NodeHistory;
    use num_complex::Complex64;

    fn setup(n: usize) -> (Vec<NodeProfile>, DistanceEvaluator) {
        let prof = vec![NodeProfile::new(0.2, 3).unwrap(); n];
        let h = (0..n).map(|i| Complex64::from_polar(0.3 + 0.1 * i as f64, 0.7 * i as f64)).collect();
        (prof, DistanceEvaluator::new(ChannelSet::perfect(h), 1.0))
    }

    fn noise() -> NoiseParams {
        NoiseParams {
            sigma2: 1e-6,
            delta2: 1e-4,
        }
    }

    #[test]
    fn unit_block_without_lead_is_sbp() {
        let (prof, mut ev) = setup(3);
        let ctx = PredictionContext::from_histories(&[
            NodeHistory::in_packet(3, 1),
            NodeHistory::idle(3),
            NodeHistory::in_packet(3, 3),
        ]);
        let cfg = ReliabilityConfig::default();
        let sbp = sbp_predict(&ctx, &prof, &mut ev, &noise(), &cfg, 1e-8).unwrap();
        let bbp = bbp_predict(&ctx, &prof, &mut ev, &noise(), &cfg, 1e-8, 1, 0, HistoryRule::Window).unwrap();
        assert_eq!(bbp.decision, sbp.decision);
        let mut expected = sbp.retained.clone();
        expected.sort_by_key(|(s, _)| s.mask());
        assert_eq!(bbp.per_symbol[0], expected);
    }

    #[test]
    fn chained_mass_never_exceeds_one() {
        let (prof, mut ev) = setup(4);
        let ctx = PredictionContext::from_histories(&[
            NodeHistory::in_packet(3, 2),
            NodeHistory::idle(3),
            NodeHistory::in_packet(3, 3),
            NodeHistory::idle(3),
        ]);
        let cfg = ReliabilityConfig::default();
        let bbp = bbp_predict(&ctx, &prof, &mut ev, &noise(), &cfg, 1e-8, 4, 4, HistoryRule::Window).unwrap();
        assert_eq!(bbp.per_symbol.len(), 4);
        for states in &bbp.per_symbol {
            let mass: f64 = states.iter().map(|(_, p)| p).sum();
            assert!(mass <= 1.0 + 1e-12 && mass > 0.99);
        }
        let min = bbp.d0_per_symbol.iter().copied().fold(f64::INFINITY, f64::min);
        assert_eq!(bbp.decision.d0, min);
    }
}
