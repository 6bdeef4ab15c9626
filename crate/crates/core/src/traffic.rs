//! Random packet arrivals.
//!
//! Every node runs the same renewal process: while it is not in the middle
//! of a packet it starts a new packet of `packet_len` symbols with
//! probability `p` in each symbol interval. A packet cannot be interrupted,
//! and a new one may start right after the previous one ends, so runs of
//! activity are whole multiples of the packet length.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::streams;

/// Largest node count an [`ActivityState`] can hold.
pub const MAX_NODES: usize = 32;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeProfile {
    /// Probability of starting a packet in an interval where the node is free.
    pub p: f64,
    /// Packet length in symbols.
    pub packet_len: usize,
}

impl NodeProfile {
    pub fn new(p: f64, packet_len: usize) -> Result<Self> {
        let profile = NodeProfile { p, packet_len };
        profile.validate("node")?;
        Ok(profile)
    }

    pub(crate) fn validate(&self, field: &str) -> Result<()> {
        if !(self.p > 0.0 && self.p <= 1.0) {
            return Err(Error::invalid(
                format!("{field}.p"),
                format!("must lie in (0, 1], got {}", self.p),
            ));
        }
        if self.packet_len == 0 {
            return Err(Error::invalid(
                format!("{field}.packet_len"),
                "must be at least 1",
            ));
        }
        Ok(())
    }

    /// Long-run fraction of intervals in which the node transmits,
    /// `pL / (pL + 1 - p)`.
    pub fn duty_cycle(&self) -> f64 {
        let busy = self.p * self.packet_len as f64;
        busy / (busy + (1.0 - self.p))
    }
}

/// Average power a node spends while transmitting at `tx_power_w`.
pub fn consumed_power(profile: &NodeProfile, tx_power_w: f64) -> f64 {
    tx_power_w * profile.duty_cycle()
}

/// Which nodes transmit in one symbol interval, as a bit mask.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ActivityState {
    mask: u32,
    len: u8,
}

impl ActivityState {
    pub fn idle(len: usize) -> Self {
        assert!(len <= MAX_NODES, "at most {MAX_NODES} nodes are supported");
        ActivityState {
            mask: 0,
            len: len as u8,
        }
    }

    pub fn from_mask(mask: u32, len: usize) -> Self {
        assert!(len <= MAX_NODES, "at most {MAX_NODES} nodes are supported");
        assert!(
            len == MAX_NODES || mask >> len == 0,
            "mask {mask:#b} has bits beyond node {len}"
        );
        ActivityState {
            mask,
            len: len as u8,
        }
    }

    pub fn from_bits(bits: &[u8]) -> Self {
        let mut state = Self::idle(bits.len());
        for (n, &b) in bits.iter().enumerate() {
            state.set(n, b != 0);
        }
        state
    }

    pub fn mask(&self) -> u32 {
        self.mask
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn is_active(&self, node: usize) -> bool {
        self.mask >> node & 1 == 1
    }

    pub fn set(&mut self, node: usize, active: bool) {
        assert!(node < self.len(), "node {node} out of range");
        if active {
            self.mask |= 1 << node;
        } else {
            self.mask &= !(1 << node);
        }
    }

    pub fn active_count(&self) -> usize {
        self.mask.count_ones() as usize
    }

    pub fn is_all_idle(&self) -> bool {
        self.mask == 0
    }

    /// Indices of the transmitting nodes in increasing order.
    pub fn active_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(move |&n| self.is_active(n))
    }

    pub fn bits(&self) -> Vec<u8> {
        (0..self.len()).map(|n| self.is_active(n) as u8).collect()
    }

    /// All `2^len` states in mask order.
    pub fn enumerate(len: usize) -> impl Iterator<Item = ActivityState> {
        assert!(len < MAX_NODES);
        (0..1u32 << len).map(move |mask| ActivityState::from_mask(mask, len))
    }
}

/// How a predictor reads a node's history to decide whether the node is
/// still inside a packet.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HistoryRule {
    /// A node that was active is free once its last `L` bits are all ones.
    /// This is exact for isolated packets; during back-to-back packets the
    /// node is taken to be free at every symbol, which only adds states.
    #[default]
    Window,
    /// Tracks the packet phase, so back-to-back packets are followed exactly.
    Phase,
}

/// The last `packet_len` activity bits of one node, plus the position inside
/// the packet currently on air.
///
/// The bit window alone cannot tell a packet that just ended from one that
/// started right behind it (both look like a window full of ones), so the
/// packet phase is carried alongside it. Traffic generation always uses the
/// phase; predictors choose with [`HistoryRule`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NodeHistory {
    window: Vec<bool>,
    head: usize,
    /// Symbols of the current packet already sent, modulo the packet length.
    /// Zero when idle or when the last packet has just completed.
    phase: usize,
    /// Consecutive ones ending at the newest bit, saturated at the window length.
    run: usize,
}

impl NodeHistory {
    pub fn idle(packet_len: usize) -> Self {
        assert!(packet_len >= 1);
        NodeHistory {
            window: vec![false; packet_len],
            head: 0,
            phase: 0,
            run: 0,
        }
    }

    /// A node that has sent `sent` symbols (`1..=packet_len`) of its current
    /// packet. `sent == packet_len` means the packet has just completed.
    pub fn in_packet(packet_len: usize, sent: usize) -> Self {
        assert!((1..=packet_len).contains(&sent));
        let mut history = Self::idle(packet_len);
        for _ in 0..sent {
            history.push(true);
        }
        history
    }

    pub fn packet_len(&self) -> usize {
        self.window.len()
    }

    /// Activity bit of the most recent interval.
    pub fn last(&self) -> bool {
        let len = self.window.len();
        self.window[(self.head + len - 1) % len]
    }

    /// Bits from oldest to newest.
    pub fn bits(&self) -> impl Iterator<Item = bool> + '_ {
        let len = self.window.len();
        (0..len).map(move |i| self.window[(self.head + i) % len])
    }

    /// True while a packet is on air and has symbols left to send.
    pub fn is_mid_packet(&self) -> bool {
        self.phase != 0
    }

    /// Symbols of the current packet still to come.
    pub fn remaining(&self) -> usize {
        if self.phase == 0 {
            0
        } else {
            self.packet_len() - self.phase
        }
    }

    /// The whole window is ones: read literally, a packet has just ended.
    pub fn window_complete(&self) -> bool {
        self.run >= self.packet_len()
    }

    /// Whether the node must transmit in the next interval under `rule`.
    pub fn is_forced(&self, rule: HistoryRule) -> bool {
        match rule {
            HistoryRule::Window => self.last() && !self.window_complete(),
            HistoryRule::Phase => self.is_mid_packet(),
        }
    }

    /// Symbols the node is certain to transmit from the next interval on,
    /// under `rule`.
    pub fn remaining_under(&self, rule: HistoryRule) -> usize {
        match rule {
            HistoryRule::Window if self.is_forced(rule) => self.packet_len() - self.run,
            HistoryRule::Window => 0,
            HistoryRule::Phase => self.remaining(),
        }
    }

    /// Appends one interval. A zero pushed mid-packet is accepted (a
    /// predictor reading the window may hypothesise one) and resets the phase.
    pub fn push(&mut self, active: bool) {
        let len = self.window.len();
        self.window[self.head] = active;
        self.head = (self.head + 1) % len;
        self.phase = if active { (self.phase + 1) % len } else { 0 };
        self.run = if active { (self.run + 1).min(len) } else { 0 };
    }
}

/// Advances one node by one symbol interval, recording the outcome in
/// `history`. Returns the BPSK symbol sent, or `None` when idle.
pub fn step_node<R: Rng + ?Sized>(
    history: &mut NodeHistory,
    profile: &NodeProfile,
    rng: &mut R,
) -> Option<i8> {
    let active = history.is_mid_packet() || rng.random::<f64>() < profile.p;
    history.push(active);
    active.then(|| if rng.random::<bool>() { 1 } else { -1 })
}

/// Per-node transition probability `Pr(next | prev)` given the node's
/// history, read with the window rule: an active node may stop or restart
/// only when its last `L` bits are all ones.
///
/// `history` must end with `prev`.
pub fn transition_probability(
    profile: &NodeProfile,
    history: &NodeHistory,
    prev: bool,
    next: bool,
) -> f64 {
    transition_probability_with(HistoryRule::Window, profile, history, prev, next)
}

pub fn transition_probability_with(
    rule: HistoryRule,
    profile: &NodeProfile,
    history: &NodeHistory,
    prev: bool,
    next: bool,
) -> f64 {
    debug_assert_eq!(history.last(), prev, "history does not end with prev");
    let p = profile.p;
    let forced = history.is_forced(rule);
    match (prev, next) {
        (false, false) => 1.0 - p,
        (false, true) => p,
        // A packet cannot be cut short.
        (true, false) if forced => 0.0,
        (true, false) => 1.0 - p,
        (true, true) if forced => 1.0,
        // Back-to-back packet.
        (true, true) => p,
    }
}

/// Joint transition probability of the activity vector under the window
/// rule; nodes are independent.
pub fn state_transition_probability(
    profiles: &[NodeProfile],
    histories: &[NodeHistory],
    prev: ActivityState,
    next: ActivityState,
) -> f64 {
    state_transition_probability_with(HistoryRule::Window, profiles, histories, prev, next)
}

pub fn state_transition_probability_with(
    rule: HistoryRule,
    profiles: &[NodeProfile],
    histories: &[NodeHistory],
    prev: ActivityState,
    next: ActivityState,
) -> f64 {
    assert_eq!(profiles.len(), histories.len());
    assert_eq!(prev.len(), profiles.len());
    assert_eq!(next.len(), profiles.len());
    profiles
        .iter()
        .zip(histories)
        .enumerate()
        .map(|(n, (profile, history))| {
            transition_probability_with(rule, profile, history, prev.is_active(n), next.is_active(n))
        })
        .product()
}

/// Activity and BPSK symbols of all nodes over a run of symbol intervals.
#[derive(Clone, Debug, PartialEq)]
pub struct TrafficTrace {
    nodes: usize,
    states: Vec<ActivityState>,
    /// Row-major `[interval][node]`, zero where the node is idle.
    symbols: Vec<i8>,
    initial: Vec<NodeHistory>,
}

impl TrafficTrace {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn state(&self, m: usize) -> ActivityState {
        self.states[m]
    }

    pub fn states(&self) -> &[ActivityState] {
        &self.states
    }

    pub fn symbols(&self, m: usize) -> &[i8] {
        &self.symbols[m * self.nodes..(m + 1) * self.nodes]
    }

    /// Node histories just before the first recorded interval.
    pub fn initial_histories(&self) -> &[NodeHistory] {
        &self.initial
    }

    pub fn activity_fraction(&self, node: usize) -> f64 {
        let active = self.states.iter().filter(|s| s.is_active(node)).count();
        active as f64 / self.len() as f64
    }

    /// Checks that every completed run of activity is a whole number of
    /// packets, counting a run already in progress at the start of the
    /// trace from its initial phase. A run still open at the end may be
    /// partial.
    pub fn runs_are_whole_packets(&self) -> bool {
        (0..self.nodes).all(|n| {
            let len = self.initial[n].packet_len();
            let mut run = if self.initial[n].last() {
                // Only the phase matters modulo the packet length.
                (len - self.initial[n].remaining()) % len
            } else {
                0
            };
            for state in &self.states {
                if state.is_active(n) {
                    run += 1;
                } else {
                    if run % len != 0 {
                        return false;
                    }
                    run = 0;
                }
            }
            true
        })
    }
}

/// Draws the starting condition of a node from the stationary law of its
/// arrival process: idle with probability `(1-p) / (pL + 1 - p)`, otherwise
/// uniformly positioned inside a packet.
fn stationary_history<R: Rng + ?Sized>(profile: &NodeProfile, rng: &mut R) -> NodeHistory {
    let len = profile.packet_len;
    let busy = profile.p * len as f64;
    let idle = (1.0 - profile.p) / (busy + 1.0 - profile.p);
    if rng.random::<f64>() < idle {
        NodeHistory::idle(len)
    } else {
        NodeHistory::in_packet(len, rng.random_range(1..=len))
    }
}

/// Generates `symbols` intervals of traffic for all nodes.
///
/// Each node draws from its own stream derived from `seed`, so the result is
/// a pure function of the arguments and a node's trace does not depend on how
/// many other nodes exist. Nodes start from the stationary law and then run
/// `packet_len` burn-in intervals that are not recorded, so the initial
/// histories hold real bits.
pub fn generate_trace(profiles: &[NodeProfile], symbols: usize, seed: u64) -> TrafficTrace {
    let nodes = profiles.len();
    assert!(nodes <= MAX_NODES, "at most {MAX_NODES} nodes are supported");
    let mut states = vec![ActivityState::idle(nodes); symbols];
    let mut sym = vec![0i8; symbols * nodes];
    let mut initial = Vec::with_capacity(nodes);

    for (n, profile) in profiles.iter().enumerate() {
        let mut rng = streams::traffic(seed, n);
        let mut history = stationary_history(profile, &mut rng);
        for _ in 0..profile.packet_len {
            step_node(&mut history, profile, &mut rng);
        }
        initial.push(history.clone());
        for m in 0..symbols {
            if let Some(s) = step_node(&mut history, profile, &mut rng) {
                states[m].set(n, true);
                sym[m * nodes + n] = s;
            }
        }
    }

    TrafficTrace {
        nodes,
        states,
        symbols: sym,
        initial,
    }
}
