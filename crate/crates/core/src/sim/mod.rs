//! Monte Carlo orchestration.
//!
//! A repetition draws one deployment and one channel set, generates one
//! traffic trace and evaluates every configured policy on the same trace,
//! channels and noise, symbol by symbol. Repetitions are independent and
//! run in parallel; their results are combined in repetition order, so the
//! output does not depend on the number of worker threads.

mod detect;
mod scenario;
mod sweep;

use std::time::Instant;

use rayon::prelude::*;

use crate::config::ScenarioConfig;
use crate::error::Result;
use crate::predictor::PolicyKind;
use crate::streams;
use crate::traffic::NodeProfile;
use crate::units::watts_to_dbuw;

pub use detect::jd_detect;
pub use scenario::{simulate_scenario, warmup_len, PolicyTally, ScenarioOutcome};
pub use sweep::{parse_sweep, sweep, SweepAxis, SweepRow};

/// Compensated (Neumaier) running sum.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct NeumaierSum {
    sum: f64,
    compensation: f64,
}

impl NeumaierSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl FromIterator<f64> for NeumaierSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = NeumaierSum::default();
        for x in iter {
            s.add(x);
        }
        s
    }
}

/// Aggregate results of one policy over all repetitions.
#[derive(Clone, Debug, PartialEq)]
pub struct PolicyMetrics {
    pub policy: PolicyKind,
    pub mean_harvest_w: f64,
    pub mean_harvest_dbuw: f64,
    /// Standard error of the mean harvest across repetitions.
    pub harvest_std_error_w: f64,
    /// Fraction of symbols where no `rho <= 1` met the SNR threshold.
    pub violation_fraction: f64,
    /// Fraction of symbols where a feasible decision still left the true
    /// state's constellation below the SNR threshold.
    pub breach_fraction: f64,
    /// Fraction of symbols whose true state was outside the predicted set.
    pub miss_fraction: f64,
    pub mean_rho: f64,
    /// Mean over symbols with a finite minimum distance.
    pub mean_d0: f64,
    pub mean_retained_states: f64,
    pub max_retained_states: usize,
    /// Fraction of symbols with a feasible decision where joint detection
    /// failed (zero unless detection is enabled).
    pub detection_error_fraction: f64,
    pub symbols: u64,
}

impl PolicyMetrics {
    pub fn from_tallies<'a>(tallies: impl IntoIterator<Item = &'a PolicyTally>) -> Self {
        let tallies: Vec<&PolicyTally> = tallies.into_iter().collect();
        assert!(!tallies.is_empty(), "no repetitions to aggregate");
        let policy = tallies[0].policy;
        let symbols: u64 = tallies.iter().map(|t| t.symbols).sum();
        let per_rep: Vec<f64> = tallies.iter().map(|t| t.mean_harvest_w()).collect();
        let harvest: NeumaierSum = tallies.iter().map(|t| t.harvest_w).collect();
        let rho: NeumaierSum = tallies.iter().map(|t| t.rho).collect();
        let d0: NeumaierSum = tallies.iter().map(|t| t.d0).collect();
        let d0_count: u64 = tallies.iter().map(|t| t.d0_count).sum();
        let count = |f: fn(&PolicyTally) -> u64| tallies.iter().map(|t| f(t)).sum::<u64>() as f64 / symbols as f64;
        let mean_harvest_w = harvest.value() / symbols as f64;
        PolicyMetrics {
            policy,
            mean_harvest_w,
            mean_harvest_dbuw: watts_to_dbuw(mean_harvest_w),
            harvest_std_error_w: std_error(&per_rep),
            violation_fraction: count(|t| t.infeasible),
            breach_fraction: count(|t| t.breaches),
            miss_fraction: count(|t| t.misses),
            mean_rho: rho.value() / symbols as f64,
            mean_d0: if d0_count == 0 {
                f64::INFINITY
            } else {
                d0.value() / d0_count as f64
            },
            mean_retained_states: count(|t| t.retained),
            max_retained_states: tallies.iter().map(|t| t.retained_max).max().unwrap_or(0),
            detection_error_fraction: count(|t| t.detection_errors),
            symbols,
        }
    }
}

fn std_error(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().copied().collect::<NeumaierSum>().value() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).collect::<NeumaierSum>().value() / (n - 1.0);
    (var / n).sqrt()
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunMetrics {
    /// In configuration order.
    pub policies: Vec<PolicyMetrics>,
    pub repetitions: usize,
    pub symbols_per_repetition: usize,
    pub seed: u64,
    /// Mean number of active nodes per evaluated symbol.
    pub mean_active_nodes: f64,
    pub wall_time_s: f64,
}

impl RunMetrics {
    pub fn from_outcomes(outcomes: &[ScenarioOutcome], seed: u64, wall_time_s: f64) -> Self {
        assert!(!outcomes.is_empty(), "no repetitions to aggregate");
        let policies = (0..outcomes[0].tallies.len())
            .map(|k| PolicyMetrics::from_tallies(outcomes.iter().map(|o| &o.tallies[k])))
            .collect();
        let active: NeumaierSum = outcomes.iter().map(|o| o.mean_active_nodes).collect();
        RunMetrics {
            policies,
            repetitions: outcomes.len(),
            symbols_per_repetition: outcomes[0].tallies.first().map_or(0, |t| t.symbols as usize),
            seed,
            mean_active_nodes: active.value() / outcomes.len() as f64,
            wall_time_s,
        }
    }

    pub fn policy(&self, kind: PolicyKind) -> Option<&PolicyMetrics> {
        self.policies.iter().find(|m| m.policy == kind)
    }
}

/// Seed of repetition `rep` in a run with master seed `seed`.
pub fn repetition_seed(seed: u64, rep: usize) -> u64 {
    streams::repetition_seed(seed, rep)
}

/// One repetition, aggregated on its own.
pub fn run_scenario(cfg: &ScenarioConfig, seed: u64) -> Result<RunMetrics> {
    let start = Instant::now();
    let outcome = simulate_scenario(cfg, seed)?;
    Ok(RunMetrics::from_outcomes(&[outcome], seed, start.elapsed().as_secs_f64()))
}

/// All `cfg.repetitions` repetitions, in order.
pub fn run_outcomes(cfg: &ScenarioConfig) -> Result<Vec<ScenarioOutcome>> {
    cfg.validate()?;
    (0..cfg.repetitions)
        .into_par_iter()
        .map(|rep| simulate_scenario(cfg, repetition_seed(cfg.seed, rep)))
        .collect()
}

pub fn run(cfg: &ScenarioConfig) -> Result<RunMetrics> {
    let start = Instant::now();
    let outcomes = run_outcomes(cfg)?;
    Ok(RunMetrics::from_outcomes(&outcomes, cfg.seed, start.elapsed().as_secs_f64()))
}

/// Expected number of simultaneously active nodes, `sum_n duty_n`.
pub fn average_active_nodes(profiles: &[NodeProfile]) -> f64 {
    profiles.iter().map(NodeProfile::duty_cycle).sum()
}
