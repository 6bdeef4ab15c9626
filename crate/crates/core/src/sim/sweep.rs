use std::fmt;
use std::str::FromStr;

use crate::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::predictor::PolicyKind;

use super::{run, RunMetrics};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SweepAxis {
    /// Number of nodes; new nodes copy the first node's profile.
    Nodes,
    /// Packet start probability of every node.
    P,
    /// Packet length of every node.
    L,
    /// Block length of every block predictor (one is added if none is configured).
    D,
    /// Channel uncertainty factor.
    Alpha,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Nodes => "N",
            SweepAxis::P => "p",
            SweepAxis::L => "L",
            SweepAxis::D => "D",
            SweepAxis::Alpha => "alpha",
        }
    }

    fn is_integer(self) -> bool {
        matches!(self, SweepAxis::Nodes | SweepAxis::L | SweepAxis::D)
    }

    /// `base` with this axis set to `value`.
    pub fn apply(self, base: &ScenarioConfig, value: f64) -> Result<ScenarioConfig> {
        let mut cfg = base.clone();
        let int = || -> Result<usize> {
            if value >= 1.0 && value.fract() == 0.0 && value < 1e9 {
                Ok(value as usize)
            } else {
                Err(Error::invalid(
                    format!("sweep.{}", self.name()),
                    format!("needs a positive integer, got {value}"),
                ))
            }
        };
        match self {
            SweepAxis::Nodes => {
                let first = base.profiles[0];
                cfg.profiles = vec![first; int()?];
            }
            SweepAxis::P => cfg.profiles.iter_mut().for_each(|p| p.p = value),
            SweepAxis::L => {
                let len = int()?;
                cfg.profiles.iter_mut().for_each(|p| p.packet_len = len);
            }
            SweepAxis::D => {
                let block_len = int()?;
                let mut found = false;
                for kind in &mut cfg.policies {
                    if let PolicyKind::Bbp { .. } = kind {
                        *kind = PolicyKind::Bbp { block_len };
                        found = true;
                    }
                }
                if !found {
                    cfg.policies.push(PolicyKind::Bbp { block_len });
                }
                cfg.policies.dedup();
            }
            SweepAxis::Alpha => cfg.csi_alpha = value,
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "N" | "n" | "nodes" => Ok(SweepAxis::Nodes),
            "p" | "P" => Ok(SweepAxis::P),
            "L" | "packet_len" => Ok(SweepAxis::L),
            "D" | "d" | "block_len" => Ok(SweepAxis::D),
            "alpha" | "csi_alpha" => Ok(SweepAxis::Alpha),
            other => Err(Error::invalid("sweep", format!("unknown axis `{other}`"))),
        }
    }
}

/// Parses `axis=values`, where values are a comma-separated list, an
/// inclusive integer range `a..b`, or `start:step:stop`.
pub fn parse_sweep(spec: &str) -> Result<(SweepAxis, Vec<f64>)> {
    let (axis, values) = spec
        .split_once('=')
        .ok_or_else(|| Error::invalid("sweep", format!("expected axis=values, got `{spec}`")))?;
    let axis: SweepAxis = axis.parse()?;
    let values = values.trim();
    let bad = |what: &str| Error::invalid("sweep", format!("bad {what} in `{spec}`"));
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad("number"));

    let out = if let Some((a, b)) = values.split_once("..") {
        let a: i64 = a.trim().parse().map_err(|_| bad("range start"))?;
        let b: i64 = b.trim().parse().map_err(|_| bad("range end"))?;
        if b < a {
            return Err(bad("range"));
        }
        (a..=b).map(|v| v as f64).collect()
    } else if values.matches(':').count() == 2 {
        let parts: Vec<f64> = values.split(':').map(num).collect::<Result<_>>()?;
        let (start, step, stop) = (parts[0], parts[1], parts[2]);
        if step.is_nan() || step <= 0.0 || stop < start {
            return Err(bad("step"));
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
        (0..count).map(|i| start + step * i as f64).collect()
    } else {
        values.split(',').map(num).collect::<Result<Vec<_>>>()?
    };
    if out.is_empty() {
        return Err(bad("value list"));
    }
    if axis.is_integer() && out.iter().any(|v: &f64| v.fract() != 0.0 || *v < 1.0) {
        return Err(Error::invalid(
            format!("sweep.{}", axis.name()),
            "needs positive integers",
        ));
    }
    Ok((axis, out))
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub axis: SweepAxis,
    pub value: f64,
    pub metrics: RunMetrics,
}

/// One run per value, all with the base seed, so every value sees the
/// same repetition seeds.
pub fn sweep(base: &ScenarioConfig, axis: SweepAxis, values: &[f64]) -> Result<Vec<SweepRow>> {
    values
        .iter()
        .map(|&value| {
            let cfg = axis.apply(base, value)?;
            Ok(SweepRow {
                axis,
                value,
                metrics: run(&cfg)?,
            })
        })
        .collect()
}
