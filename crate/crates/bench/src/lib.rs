//! Fixtures shared by the benchmarks: a reproducible deployment and the
//! decided contexts of a generated trace.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use swipt_core::channel::draw_channel;
use swipt_core::predictor::DistanceEvaluator;
use swipt_core::traffic::generate_trace;
use swipt_core::{ChannelParams, ChannelSet, Deployment, NodeHistory, NodeProfile, PredictionContext};

pub const TX_POWER_W: f64 = 0.1;

pub struct Fixture {
    pub profiles: Vec<NodeProfile>,
    pub channels: ChannelSet,
    /// Decided contexts along a trace, one per interval.
    pub contexts: Vec<PredictionContext>,
}

impl Fixture {
    pub fn new(nodes: usize, p: f64, packet_len: usize, symbols: usize, seed: u64) -> Self {
        let profiles = vec![NodeProfile::new(p, packet_len).expect("valid profile"); nodes];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let deployment = Deployment::default();
        let params = ChannelParams::default();
        let h: Vec<Complex64> = (0..nodes)
            .map(|_| draw_channel(deployment.sample_distance(&mut rng), &params, &mut rng))
            .collect();
        let trace = generate_trace(&profiles, symbols, seed);
        let mut histories: Vec<NodeHistory> = trace.initial_histories().to_vec();
        let mut contexts = Vec::with_capacity(symbols);
        for m in 0..symbols {
            contexts.push(PredictionContext::from_histories(&histories));
            let state = trace.state(m);
            for (n, hist) in histories.iter_mut().enumerate() {
                hist.push(state.is_active(n));
            }
        }
        Fixture {
            profiles,
            channels: ChannelSet::perfect(h),
            contexts,
        }
    }

    pub fn evaluator(&self) -> DistanceEvaluator {
        DistanceEvaluator::new(self.channels.clone(), TX_POWER_W)
    }
}
