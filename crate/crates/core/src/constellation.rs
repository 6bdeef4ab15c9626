//! Joint symbol constellations and their minimum distances.
//!
//! When the nodes in an activity state transmit together, the relay sees
//! one of `2^k` superimposed points `sqrt(P_t) * sum(+-h_n)`. Every point
//! keeps the activity state that produced it, because the imperfect-CSI
//! distance rule depends on which nodes differ between two points.

use std::cmp::Ordering;

use num_complex::Complex64;

use crate::channel::ChannelSet;
use crate::error::{check_enumerable, Result};
use crate::traffic::ActivityState;

/// Margin applied per uncertain node: `4 theta` covers 99.994 % of the
/// Gaussian channel error.
pub const CSI_MARGIN_SIGMAS: f64 = 4.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LabeledPoint {
    pub value: Complex64,
    pub label: ActivityState,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct LabeledConstellation {
    points: Vec<LabeledPoint>,
}

impl LabeledConstellation {
    pub fn new(points: Vec<LabeledPoint>) -> Self {
        LabeledConstellation { points }
    }

    pub fn points(&self) -> &[LabeledPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn extend_with_state(&mut self, state: ActivityState, channels: &ChannelSet, tx_power_w: f64) {
        push_state_points(&mut self.points, state, channels, tx_power_w);
    }
}

impl FromIterator<LabeledPoint> for LabeledConstellation {
    fn from_iter<I: IntoIterator<Item = LabeledPoint>>(iter: I) -> Self {
        LabeledConstellation::new(iter.into_iter().collect())
    }
}

fn push_state_points(out: &mut Vec<LabeledPoint>, state: ActivityState, channels: &ChannelSet, tx_power_w: f64) {
    assert_eq!(state.len(), channels.len(), "state and channel sizes differ");
    let amp = tx_power_w.sqrt();
    let start = out.len();
    out.push(LabeledPoint {
        value: Complex64::new(0.0, 0.0),
        label: state,
    });
    // Doubling keeps bit j of a point's offset equal to the sign of the j-th
    // active node (set = +).
    for n in state.active_nodes() {
        let g = channels.h[n] * amp;
        let count = out.len() - start;
        for i in 0..count {
            let v = out[start + i].value;
            out[start + i].value = v - g;
            out.push(LabeledPoint {
                value: v + g,
                label: state,
            });
        }
    }
}

/// All `2^k` sign combinations of the active nodes' received amplitudes.
/// The all-idle state yields the single point 0.
pub fn points_for_state(state: ActivityState, channels: &ChannelSet, tx_power_w: f64) -> Vec<LabeledPoint> {
    let mut out = Vec::with_capacity(1 << state.active_count());
    push_state_points(&mut out, state, channels, tx_power_w);
    out
}

/// Concatenation of the point sets of `states`. Coinciding values from
/// different states are all kept.
pub fn union_constellation(states: &[ActivityState], channels: &ChannelSet, tx_power_w: f64) -> LabeledConstellation {
    let mut points = Vec::with_capacity(states.iter().map(|s| 1usize << s.active_count()).sum());
    for &state in states {
        push_state_points(&mut points, state, channels, tx_power_w);
    }
    LabeledConstellation { points }
}

/// The constellation of every possible activity state (`3^N` points).
pub fn baseline_constellation(channels: &ChannelSet, tx_power_w: f64) -> Result<LabeledConstellation> {
    check_enumerable(channels.len())?;
    let states: Vec<_> = ActivityState::enumerate(channels.len()).collect();
    Ok(union_constellation(&states, channels, tx_power_w))
}

/// Smallest distance between two distinct received values, or `+inf` when
/// there are fewer than two.
///
/// Points that coincide exactly are the same received value and are not a
/// pair the detector has to separate.
pub fn min_distance(c: &LabeledConstellation) -> f64 {
    closest_pair(&c.points, 0.0, |_, _, d| d)
}

/// Minimum distance after shrinking each pair by `4 theta_n` for every node
/// active in exactly one of the two labels, clipped at zero.
///
/// Nodes active in both labels move both points the same way and do not
/// shrink the pair.
pub fn min_distance_imperfect_csi(c: &LabeledConstellation, theta: &[f64]) -> f64 {
    assert!(theta.iter().all(|&t| t >= 0.0), "standard deviations must be >= 0");
    let Some(first) = c.points.first() else {
        return f64::INFINITY;
    };
    let nodes = first.label.len();
    assert_eq!(theta.len(), nodes, "one standard deviation per node");
    if theta.iter().all(|&t| t == 0.0) {
        return min_distance(c);
    }
    let margins = ShrinkTable::new(theta);
    closest_pair(&c.points, margins.max, |a, b, d| {
        (d - margins.get(a.label.mask() ^ b.label.mask())).max(0.0)
    })
}

/// `4 sum theta_n` over the nodes of a XOR mask.
struct ShrinkTable {
    table: Option<Vec<f64>>,
    theta: Vec<f64>,
    max: f64,
}

impl ShrinkTable {
    const TABLE_LIMIT: usize = 16;

    fn new(theta: &[f64]) -> Self {
        let scaled: Vec<f64> = theta.iter().map(|t| CSI_MARGIN_SIGMAS * t).collect();
        let max = scaled.iter().sum();
        let table = (scaled.len() <= Self::TABLE_LIMIT).then(|| {
            let mut t = vec![0.0; 1 << scaled.len()];
            for mask in 1..t.len() {
                let low = mask.trailing_zeros() as usize;
                t[mask] = t[mask & (mask - 1)] + scaled[low];
            }
            t
        });
        ShrinkTable {
            table,
            theta: scaled,
            max,
        }
    }

    fn get(&self, mask: u32) -> f64 {
        match &self.table {
            Some(t) => t[mask as usize],
            None => (0..self.theta.len())
                .filter(|n| mask >> n & 1 == 1)
                .map(|n| self.theta[n])
                .sum(),
        }
    }
}

/// Plane sweep over points sorted by real part. `metric` may only lower a
/// pair's distance by at most `slack`, which bounds the sweep window.
fn closest_pair<F>(points: &[LabeledPoint], slack: f64, metric: F) -> f64
where
    F: Fn(&LabeledPoint, &LabeledPoint, f64) -> f64,
{
    if points.len() < 2 {
        return f64::INFINITY;
    }
    let mut order: Vec<&LabeledPoint> = points.iter().collect();
    order.sort_unstable_by(|a, b| {
        a.value
            .re
            .partial_cmp(&b.value.re)
            .unwrap_or(Ordering::Equal)
    });
    let mut best = f64::INFINITY;
    for (i, a) in order.iter().enumerate() {
        for b in &order[i + 1..] {
            if b.value.re - a.value.re >= best + slack {
                break;
            }
            let diff = a.value - b.value;
            if diff.re == 0.0 && diff.im == 0.0 {
                continue;
            }
            let m = metric(a, b, diff.norm());
            if m < best {
                best = m;
                if best == 0.0 {
                    return 0.0;
                }
            }
        }
    }
    best
}
