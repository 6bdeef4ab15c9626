use crate::error::{check_enumerable, Error, Result};
use crate::traffic::{ActivityState, HistoryRule, NodeHistory, NodeProfile};

/// What the predictor knows about the nodes after the last decided symbol.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PredictionContext {
    /// Decided activity in the last interval.
    pub state: ActivityState,
    /// Per node, symbols of the current packet still to come (0 when the
    /// node is free to start a packet).
    pub residual: Vec<u32>,
}

impl PredictionContext {
    /// Reads the histories with the window rule.
    pub fn from_histories(histories: &[NodeHistory]) -> Self {
        Self::from_histories_with(histories, HistoryRule::Window)
    }

    pub fn from_histories_with(histories: &[NodeHistory], rule: HistoryRule) -> Self {
        let mut state = ActivityState::idle(histories.len());
        let mut residual = Vec::with_capacity(histories.len());
        for (n, h) in histories.iter().enumerate() {
            state.set(n, h.last());
            residual.push(h.remaining_under(rule) as u32);
        }
        PredictionContext { state, residual }
    }

    /// Nodes that must keep transmitting in the next interval.
    pub fn forced_mask(&self) -> u32 {
        forced_mask(&self.residual)
    }
}

pub(crate) fn forced_mask(residual: &[u32]) -> u32 {
    residual
        .iter()
        .enumerate()
        .filter(|(_, &r)| r > 0)
        .fold(0, |m, (n, _)| m | 1 << n)
}

/// One branch of the predicted activity process: a state, the packet
/// residuals that determine its successors, and its probability.
#[derive(Clone, Debug, PartialEq)]
pub struct Hypothesis {
    pub state: ActivityState,
    pub residual: Vec<u32>,
    pub prob: f64,
}

impl Hypothesis {
    pub fn certain(ctx: &PredictionContext) -> Self {
        Hypothesis {
            state: ctx.state,
            residual: ctx.residual.clone(),
            prob: 1.0,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Selection {
    /// Successors with probability above the threshold, in search order.
    pub retained: Vec<Hypothesis>,
    /// Probability mass of every successor that was dropped.
    pub filtered_mass: f64,
}

impl Selection {
    pub fn retained_mass(&self) -> f64 {
        self.retained.iter().map(|h| h.prob).sum()
    }
}

pub(crate) fn check_threshold(threshold: f64) -> Result<()> {
    if threshold > 0.0 && threshold < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(
            "prediction.prob_threshold",
            format!("must lie in (0, 1), got {threshold}"),
        ))
    }
}

/// Extends `prior` by one symbol interval and keeps the successor states
/// whose probability `prior.prob * prod_n Pr(s_n | history_n)` exceeds
/// `threshold`.
///
/// A node with packet symbols left continues with probability 1; a free
/// node (idle, or at the end of a packet) stays silent with `1 - p` or
/// starts a packet with `p`. Under [`HistoryRule::Window`] an active free
/// node that stays active is still free in the next interval, since its
/// window is still all ones. The `2^N` successors are searched depth-first
/// and a branch is cut as soon as its partial product falls to the
/// threshold, since the remaining factors are at most 1.
pub fn select_relevant_states(
    profiles: &[NodeProfile],
    prior: &Hypothesis,
    threshold: f64,
    rule: HistoryRule,
) -> Result<Selection> {
    check_enumerable(profiles.len())?;
    assert_eq!(prior.residual.len(), profiles.len());
    let mut search = Search {
        profiles,
        prior,
        threshold,
        rule,
        out: Selection::default(),
    };
    search.descend(0, 0, prior.prob);
    Ok(search.out)
}

struct Search<'a> {
    profiles: &'a [NodeProfile],
    prior: &'a Hypothesis,
    threshold: f64,
    rule: HistoryRule,
    out: Selection,
}

impl Search<'_> {
    fn descend(&mut self, node: usize, mask: u32, prob: f64) {
        if prob <= self.threshold {
            self.out.filtered_mass += prob;
            return;
        }
        let nodes = self.profiles.len();
        if node == nodes {
            let residual = (0..nodes)
                .map(|n| match self.prior.residual[n] {
                    0 if mask >> n & 1 == 1 => match self.rule {
                        HistoryRule::Window if self.prior.state.is_active(n) => 0,
                        _ => self.profiles[n].packet_len as u32 - 1,
                    },
                    0 => 0,
                    r => r - 1,
                })
                .collect();
            self.out.retained.push(Hypothesis {
                state: ActivityState::from_mask(mask, nodes),
                residual,
                prob,
            });
            return;
        }
        if self.prior.residual[node] > 0 {
            self.descend(node + 1, mask | 1 << node, prob);
        } else {
            let p = self.profiles[node].p;
            self.descend(node + 1, mask, prob * (1.0 - p));
            self.descend(node + 1, mask | 1 << node, prob * p);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn profiles(ps: &[f64], len: usize) -> Vec<NodeProfile> {
        ps.iter().map(|&p| NodeProfile::new(p, len).unwrap()).collect()
    }

    #[test]
    fn single_idle_node_keeps_both() {
        let prof = profiles(&[0.1], 20);
        let ctx = PredictionContext::from_histories(&[NodeHistory::idle(20)]);
        let sel = select_relevant_states(&prof, &Hypothesis::certain(&ctx), 1e-8, HistoryRule::Window).unwrap();
        assert_eq!(sel.retained.len(), 2);
        assert_eq!(sel.retained[0].state.mask(), 0);
        assert!((sel.retained[0].prob - 0.9).abs() < 1e-15);
        assert_eq!(sel.retained[1].state.mask(), 1);
        assert!((sel.retained[1].prob - 0.1).abs() < 1e-15);
        assert_eq!(sel.retained[1].residual, vec![19]);
    }

    #[test]
    fn mid_packet_node_cannot_stop() {
        let prof = profiles(&[0.1], 20);
        let ctx = PredictionContext::from_histories(&[NodeHistory::in_packet(20, 5)]);
        let sel = select_relevant_states(&prof, &Hypothesis::certain(&ctx), 1e-8, HistoryRule::Window).unwrap();
        assert_eq!(sel.retained.len(), 1);
        assert_eq!(sel.retained[0].state.mask(), 1);
        assert_eq!(sel.retained[0].prob, 1.0);
        assert_eq!(sel.retained[0].residual, vec![14]);
        assert_eq!(sel.filtered_mass, 0.0);
    }

    #[test]
    fn rare_triple_start_is_filtered() {
        let prof = profiles(&[1e-3; 3], 20);
        let ctx = PredictionContext::from_histories(&vec![NodeHistory::idle(20); 3]);
        let sel = select_relevant_states(&prof, &Hypothesis::certain(&ctx), 1e-8, HistoryRule::Window).unwrap();
        assert_eq!(sel.retained.len(), 7);
        assert!(sel.retained.iter().all(|h| h.state.mask() != 0b111));
        assert!((sel.filtered_mass - 1e-9).abs() < 1e-20);
    }

    #[test]
    fn restart_after_full_window_depends_on_rule() {
        let prof = profiles(&[0.1], 3);
        let mut h = NodeHistory::in_packet(3, 3);
        h.push(true);
        let window = PredictionContext::from_histories(std::slice::from_ref(&h));
        assert_eq!(window.residual, vec![0]);
        let sel = select_relevant_states(&prof, &Hypothesis::certain(&window), 1e-8, HistoryRule::Window).unwrap();
        assert_eq!(sel.retained.len(), 2);
        assert_eq!(sel.retained[1].residual, vec![0]);

        let phase = PredictionContext::from_histories_with(&[h], HistoryRule::Phase);
        assert_eq!(phase.residual, vec![2]);
        let sel = select_relevant_states(&prof, &Hypothesis::certain(&phase), 1e-8, HistoryRule::Phase).unwrap();
        assert_eq!(sel.retained.len(), 1);

        let done = PredictionContext::from_histories_with(&[NodeHistory::in_packet(3, 3)], HistoryRule::Phase);
        let sel = select_relevant_states(&prof, &Hypothesis::certain(&done), 1e-8, HistoryRule::Phase).unwrap();
        assert_eq!(sel.retained[1].residual, vec![2]);
    }

    #[test]
    fn size_guard() {
        let prof = profiles(&[0.1; 17], 5);
        let ctx = PredictionContext::from_histories(&vec![NodeHistory::idle(5); 17]);
        assert!(matches!(
            select_relevant_states(&prof, &Hypothesis::certain(&ctx), 1e-8, HistoryRule::Window),
            Err(Error::StateSpaceTooLarge { nodes: 17 })
        ));
    }
}
