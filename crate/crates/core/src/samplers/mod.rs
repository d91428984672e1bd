//! Interchangeable QUBO samplers behind the [`Sampler`] trait.
//!
//! Every read owns a private ChaCha stream derived from `(seed, read index)`,
//! so reads run concurrently while results stay bit-identical for a given
//! request.

mod brute;
mod nebm;
mod random;
mod sa;

use std::time::Instant;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::qubo::{BinaryState, QuboProblem};
use crate::sampleset::{SampleMetadata, SampleSet};
use crate::seed::{rng_from, Rng};

pub use brute::{brute_force, BruteForce, GroundStates, MAX_BRUTE_FORCE_VARS};
pub use nebm::{spike_probability, Nebm, NebmConfig, NebmState, TemperatureCycle};
pub use random::RandomSampler;
pub use sa::{beta_schedule, default_beta_range, metropolis_anneal, BetaSchedule, SaConfig, SimulatedAnnealing};

/// Default reads per call, matching the 1000-sample batches used throughout.
pub const DEFAULT_READS: usize = 1000;

#[derive(Debug, Clone)]
pub struct SamplerRequest<'a> {
    pub problem: &'a QuboProblem,
    pub num_reads: usize,
    pub initial_state: Option<BinaryState>,
    pub seed: u64,
}

impl<'a> SamplerRequest<'a> {
    pub fn new(problem: &'a QuboProblem, num_reads: usize, seed: u64) -> Self {
        Self {
            problem,
            num_reads,
            initial_state: None,
            seed,
        }
    }

    pub fn with_initial_state(mut self, state: BinaryState) -> Self {
        self.initial_state = Some(state);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_reads == 0 {
            return Err(Error::InvalidConfig("num_reads must be positive".into()));
        }
        if let Some(s) = &self.initial_state {
            if s.len() != self.problem.n() {
                return Err(Error::Dimension {
                    expected: self.problem.n(),
                    found: s.len(),
                });
            }
        }
        Ok(())
    }
}

pub trait Sampler: Send + Sync {
    fn name(&self) -> &str;

    /// Parameter snapshot recorded in the sample set metadata.
    fn params(&self) -> serde_json::Value;

    fn sample(&self, request: &SamplerRequest<'_>) -> Result<SampleSet>;
}

impl<S: Sampler + ?Sized> Sampler for &S {
    fn name(&self) -> &str {
        (**self).name()
    }

    fn params(&self) -> serde_json::Value {
        (**self).params()
    }

    fn sample(&self, request: &SamplerRequest<'_>) -> Result<SampleSet> {
        (**self).sample(request)
    }
}

impl<S: Sampler + ?Sized> Sampler for Box<S> {
    fn name(&self) -> &str {
        (**self).name()
    }

    fn params(&self) -> serde_json::Value {
        (**self).params()
    }

    fn sample(&self, request: &SamplerRequest<'_>) -> Result<SampleSet> {
        (**self).sample(request)
    }
}

/// Run `read` once per requested read, in parallel, and collect every
/// returned state in read order.
pub(crate) fn run_reads<S, F>(sampler: &S, request: &SamplerRequest<'_>, read: F) -> Result<SampleSet>
where
    S: Sampler + ?Sized,
    F: Fn(usize, &mut Rng) -> Result<Vec<BinaryState>> + Sync,
{
    request.validate()?;
    let start = Instant::now();
    let per_read: Vec<Vec<BinaryState>> = (0..request.num_reads)
        .into_par_iter()
        .map(|k| {
            let mut rng = rng_from(request.seed, &[k as u64]);
            read(k, &mut rng)
        })
        .collect::<Result<_>>()?;
    let meta = SampleMetadata::new(sampler.name(), request.seed, sampler.params());
    let mut set = SampleSet::from_reads(request.problem, per_read.into_iter().flatten(), meta)?;
    set.set_duration(start.elapsed());
    Ok(set)
}
