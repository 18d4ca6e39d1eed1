use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::run::EDP_STREAM;
use super::trace::RegretTrace;

/// Uniform draws over the played points of a trace, from the EDP stream of `seed`.
#[derive(Clone, Debug)]
pub struct EdpSampler {
    rng: ChaCha8Rng,
}

impl EdpSampler {
    pub fn new(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(EDP_STREAM);
        EdpSampler { rng }
    }

    /// Index of the recommended step (0-based).
    pub fn draw(&mut self, trace: &RegretTrace) -> usize {
        assert!(trace.horizon() >= 1, "EDP needs at least one step");
        self.rng.random_range(0..trace.horizon())
    }
}

/// Recommends `x_t` with probability `1/T`.
pub fn edp_recommend(trace: &RegretTrace, seed: u64) -> Vec<f64> {
    let i = EdpSampler::new(seed).draw(trace);
    trace.steps[i].x.clone()
}
