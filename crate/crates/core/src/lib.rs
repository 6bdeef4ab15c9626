//! Symbol-level Monte Carlo simulator for a relay that harvests energy from
//! randomly scheduled short-packet BPSK uplinks while detecting every symbol
//! under a hard worst-case SNR constraint.
//!
//! The relay splits each received sample: a fraction `rho` feeds the joint
//! detector and `1 - rho` feeds the energy harvester. The smallest `rho`
//! that still keeps the closest pair of joint-constellation points
//! separable depends on which nodes are active, so it has to be predicted
//! before the symbol arrives. Four policies are provided:
//!
//! * [`PolicyKind::Baseline`]: one constant `rho` from the constellation of
//!   every possible activity state.
//! * [`PolicyKind::Genie`]: the true activity state is known (upper bound).
//! * [`PolicyKind::Sbp`]: symbol-based prediction from the last decided
//!   state through the packet-arrival Markov chain.
//! * [`PolicyKind::Bbp`]: block-based prediction, one `rho` per block of `D`
//!   symbols computed `2D` symbols ahead.
//!
//! The crate is organised bottom-up: [`traffic`] (arrival process),
//! [`channel`] (Rician gains and received samples), [`constellation`]
//! (joint constellations and minimum distances), [`psf`] (splitting factor
//! and harvest/SNR formulas), [`predictor`] (the four policies), [`sim`]
//! (scenario orchestration and sweeps) and [`config`] (TOML scenario files).

pub mod channel;
pub mod config;
pub mod constellation;
pub mod error;
pub mod predictor;
pub mod psf;
pub mod sim;
pub mod traffic;
pub mod units;

mod streams;

pub use channel::{ChannelParams, ChannelSet, NoiseParams};
pub use config::{Deployment, Placement, ScenarioConfig};
pub use constellation::{LabeledConstellation, LabeledPoint};
pub use error::{Error, Result, MAX_ENUMERATED_NODES};
pub use predictor::{PolicyKind, PredictionContext, PredictorPolicy};
pub use psf::{NonlinearHarvestParams, PsfDecision, ReliabilityConfig};
pub use sim::{PolicyMetrics, RunMetrics, SweepAxis, SweepRow};
pub use traffic::{ActivityState, HistoryRule, NodeHistory, NodeProfile, TrafficTrace};

pub use num_complex::Complex64;
