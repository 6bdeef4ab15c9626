//! Brute-force reference implementations. They work from raw bit sequences
//! and exhaustive enumeration and share no code with the library beyond
//! its plain data types.
#![allow(dead_code, clippy::too_many_arguments)]

use std::collections::BTreeMap;

use swipt_core::{Complex64, HistoryRule, LabeledConstellation, NodeHistory};

/// Activity bits of a node that starts idle, where `starts[k]` decides
/// whether a free node begins a packet at step `k`.
pub fn physical_bits(starts: &[bool], packet_len: usize) -> Vec<bool> {
    let mut phase = 0;
    starts
        .iter()
        .map(|&start| {
            let active = phase != 0 || start;
            phase = if active { (phase + 1) % packet_len } else { 0 };
            active
        })
        .collect()
}

pub fn history_from_bits(bits: &[bool], packet_len: usize) -> NodeHistory {
    let mut h = NodeHistory::idle(packet_len);
    for &b in bits {
        h.push(b);
    }
    h
}

/// Whether a node with these bits (oldest first, starting idle) must send
/// in the next interval.
pub fn forced(bits: &[bool], packet_len: usize, rule: HistoryRule) -> bool {
    let trailing = bits.iter().rev().take_while(|&&b| b).count();
    if trailing == 0 {
        return false;
    }
    match rule {
        HistoryRule::Window => trailing < packet_len,
        HistoryRule::Phase => trailing % packet_len != 0,
    }
}

pub fn node_transition(bits: &[bool], p: f64, packet_len: usize, rule: HistoryRule, next: bool) -> f64 {
    if forced(bits, packet_len, rule) {
        if next {
            1.0
        } else {
            0.0
        }
    } else if next {
        p
    } else {
        1.0 - p
    }
}

/// Probability of every joint successor mask, by enumeration.
pub fn successor_table(bits: &[Vec<bool>], p: &[f64], len: &[usize], rule: HistoryRule) -> Vec<f64> {
    let nodes = bits.len();
    (0..1u32 << nodes)
        .map(|mask| {
            (0..nodes)
                .map(|n| node_transition(&bits[n], p[n], len[n], rule, mask >> n & 1 == 1))
                .product()
        })
        .collect()
}

/// Exact marginal law of the joint state at each of `steps` future
/// intervals, by walking every path.
pub fn path_marginals(
    bits: &[Vec<bool>],
    p: &[f64],
    len: &[usize],
    rule: HistoryRule,
    steps: usize,
) -> Vec<BTreeMap<u32, f64>> {
    let mut out = vec![BTreeMap::new(); steps];
    walk(bits.to_vec(), 1.0, 0, p, len, rule, &mut out, |acc, q| acc + q);
    out
}

/// Largest single-path probability of reaching each joint state at each
/// future interval.
pub fn path_maxima(
    bits: &[Vec<bool>],
    p: &[f64],
    len: &[usize],
    rule: HistoryRule,
    steps: usize,
) -> Vec<BTreeMap<u32, f64>> {
    let mut out = vec![BTreeMap::new(); steps];
    walk(bits.to_vec(), 1.0, 0, p, len, rule, &mut out, f64::max);
    out
}

fn walk(
    bits: Vec<Vec<bool>>,
    prob: f64,
    step: usize,
    p: &[f64],
    len: &[usize],
    rule: HistoryRule,
    out: &mut [BTreeMap<u32, f64>],
    combine: fn(f64, f64) -> f64,
) {
    if step == out.len() || prob == 0.0 {
        return;
    }
    let nodes = bits.len();
    let table = successor_table(&bits, p, len, rule);
    for (mask, &t) in table.iter().enumerate() {
        if t == 0.0 {
            continue;
        }
        let q = prob * t;
        let slot = out[step].entry(mask as u32).or_insert(0.0);
        *slot = combine(*slot, q);
        let mut next = bits.clone();
        for (n, b) in next.iter_mut().enumerate().take(nodes) {
            b.push(mask >> n & 1 == 1);
        }
        walk(next, q, step + 1, p, len, rule, out, combine);
    }
}

/// All pairwise distances, skipping coincident values.
pub fn min_distance_pairs(c: &LabeledConstellation, shrink: impl Fn(u32) -> f64) -> f64 {
    let pts = c.points();
    let mut best = f64::INFINITY;
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            let d = (pts[i].value - pts[j].value).norm();
            if d == 0.0 {
                continue;
            }
            let x = pts[i].label.mask() ^ pts[j].label.mask();
            best = best.min((d - shrink(x)).max(0.0));
        }
    }
    best
}

/// Every sign combination of the active gains, scaled by `sqrt(tx)`.
pub fn state_points(mask: u32, h: &[Complex64], tx: f64) -> Vec<Complex64> {
    let active: Vec<usize> = (0..h.len()).filter(|n| mask >> n & 1 == 1).collect();
    (0..1u32 << active.len())
        .map(|signs| {
            active
                .iter()
                .enumerate()
                .map(|(k, &n)| if signs >> k & 1 == 1 { h[n] } else { -h[n] })
                .sum::<Complex64>()
                * tx.sqrt()
        })
        .collect()
}

/// Smallest `rho` on a fine grid meeting the SNR threshold, for checking
/// the closed-form factor.
pub fn grid_rho(d0: f64, sigma2: f64, delta2: f64, snr_min: f64, rho_min: f64) -> Option<f64> {
    let steps = 1_000_000;
    (0..=steps)
        .map(|k| rho_min + (1.0 - rho_min) * k as f64 / steps as f64)
        .find(|&rho| (0.5 * d0).powi(2) * rho / (delta2 + rho * sigma2) >= snr_min)
}
