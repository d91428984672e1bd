use serde_json::json;

use crate::error::Result;
use crate::qubo::BinaryState;
use crate::sampleset::SampleSet;

use super::{run_reads, Sampler, SamplerRequest};

/// Independent uniform states; ignores any initial state.
#[derive(Debug, Clone, Copy, Default)]
pub struct RandomSampler;

impl Sampler for RandomSampler {
    fn name(&self) -> &str {
        "random"
    }

    fn params(&self) -> serde_json::Value {
        json!({})
    }

    fn sample(&self, request: &SamplerRequest<'_>) -> Result<SampleSet> {
        let n = request.problem.n();
        run_reads(self, request, |_, rng| Ok(vec![BinaryState::random(n, rng)]))
    }
}
