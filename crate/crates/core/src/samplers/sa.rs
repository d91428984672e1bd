//! Simulated annealing with single-flip Metropolis sweeps.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qubo::{BinaryState, QuboProblem};
use crate::sampleset::SampleSet;
use crate::seed::Rng;

use super::{run_reads, Sampler, SamplerRequest};

const MIN_FLIP: f64 = 1e-9;

// exp(-40) < 5e-18: treated as a certain rejection without drawing.
const REJECT_EXPONENT: f64 = 40.0;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BetaSchedule {
    #[default]
    Geometric,
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SaConfig {
    pub sweeps: usize,
    pub schedule: BetaSchedule,
    /// `(β_hot, β_cold)`; derived from the problem coefficients when absent.
    pub beta_range: Option<(f64, f64)>,
}

impl Default for SaConfig {
    fn default() -> Self {
        Self {
            sweeps: 1000,
            schedule: BetaSchedule::Geometric,
            beta_range: None,
        }
    }
}

impl SaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sweeps == 0 {
            return Err(Error::InvalidConfig("sweeps must be positive".into()));
        }
        if let Some(range) = self.beta_range {
            check_beta_range(range)?;
        }
        Ok(())
    }

    pub fn resolve_beta_range(&self, problem: &QuboProblem) -> (f64, f64) {
        self.beta_range.unwrap_or_else(|| default_beta_range(problem))
    }
}

pub(crate) fn check_beta_range((hot, cold): (f64, f64)) -> Result<()> {
    if !(hot > 0.0 && cold > 0.0 && hot < cold && cold.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "beta range ({hot}, {cold}) must satisfy 0 < beta_hot < beta_cold < inf"
        )));
    }
    Ok(())
}

/// `β_hot = ln 2 / max_i σ_i` so the stiffest flip is accepted half the time
/// at the start; `β_cold = ln 100 / min_i σ'_i` so the gentlest nonzero flip
/// is accepted with probability 1/100 at the end.
pub fn default_beta_range(problem: &QuboProblem) -> (f64, f64) {
    let max_stiff = problem.stiffness().into_iter().fold(0.0, f64::max);
    let min_flip = problem
        .min_nonzero_flip()
        .into_iter()
        .flatten()
        .fold(f64::INFINITY, f64::min);
    if max_stiff == 0.0 || !min_flip.is_finite() {
        // Every state has the same energy; any valid range will do.
        return (0.1, 1.0);
    }
    let hot = std::f64::consts::LN_2 / max_stiff;
    let cold = 100f64.ln() / min_flip.max(MIN_FLIP);
    (hot, cold)
}

/// One β per sweep, from `hot` to `cold` inclusive.
pub fn beta_schedule(kind: BetaSchedule, hot: f64, cold: f64, sweeps: usize) -> Vec<f64> {
    if sweeps == 1 {
        return vec![cold];
    }
    let last = (sweeps - 1) as f64;
    match kind {
        BetaSchedule::Geometric => {
            let ratio = cold / hot;
            (0..sweeps).map(|k| hot * ratio.powf(k as f64 / last)).collect()
        }
        BetaSchedule::Linear => (0..sweeps).map(|k| hot + (cold - hot) * (k as f64 / last)).collect(),
    }
}

/// Metropolis sweeps over `bits` in index order, one sweep per β.
pub fn metropolis_anneal(problem: &QuboProblem, bits: &mut [u8], betas: &[f64], rng: &mut Rng) {
    let n = problem.n();
    let mut fields = problem.local_fields(bits);
    for &beta in betas {
        for i in 0..n {
            let delta = if bits[i] == 0 { fields[i] } else { -fields[i] };
            let accept = if delta <= 0.0 {
                true
            } else {
                let x = beta * delta;
                x < REJECT_EXPONENT && rng.random::<f64>() < (-x).exp()
            };
            if accept {
                bits[i] ^= 1;
                let sign = if bits[i] == 1 { 1.0 } else { -1.0 };
                for &(j, q) in problem.neighbors(i) {
                    fields[j] += sign * q;
                }
            }
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct SimulatedAnnealing {
    pub config: SaConfig,
}

impl SimulatedAnnealing {
    pub fn new(config: SaConfig) -> Self {
        Self { config }
    }
}

impl Sampler for SimulatedAnnealing {
    fn name(&self) -> &str {
        "sa"
    }

    fn params(&self) -> serde_json::Value {
        serde_json::to_value(self.config).expect("config is serializable")
    }

    fn sample(&self, request: &SamplerRequest<'_>) -> Result<SampleSet> {
        self.config.validate()?;
        let problem = request.problem;
        let (hot, cold) = self.config.resolve_beta_range(problem);
        let betas = beta_schedule(self.config.schedule, hot, cold, self.config.sweeps);
        run_reads(self, request, |_, rng| {
            let mut state = match &request.initial_state {
                Some(s) => s.clone(),
                None => BinaryState::random(problem.n(), rng),
            };
            let mut bits = state.clone().into_inner();
            metropolis_anneal(problem, &mut bits, &betas, rng);
            state = BinaryState::from_bits(bits)?;
            Ok(vec![state])
        })
    }
}
