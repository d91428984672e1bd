//! Iterative improvement protocols built on any [`Sampler`]:
//! iterated warm starting, a batch-chained Monte Carlo (QEMC-style) chain,
//! and a classical reverse-anneal emulation for driving that chain.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::error::{Error, Result};
use crate::qubo::{BinaryState, QuboProblem};
use crate::samplers::{default_beta_range, metropolis_anneal, run_reads, SaConfig, Sampler, SamplerRequest};
use crate::sampleset::SampleSet;
use crate::seed::{derive_seed, rng_from};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainStep {
    pub iteration: usize,
    /// State carried into the next iteration.
    pub incumbent: BinaryState,
    pub incumbent_energy: f64,
    pub batch_min_energy: f64,
    /// Reads consumed by this step.
    pub batch_size: usize,
    /// Mean fraction of bits each read shares with the state it started
    /// from; absent for unseeded batches.
    pub seed_overlap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainTrace {
    pub protocol: String,
    pub sampler: String,
    pub anneal_fraction: Option<f64>,
    pub seed: u64,
    pub steps: Vec<ChainStep>,
    pub best_state: Option<BinaryState>,
    pub best_energy: f64,
}

impl ChainTrace {
    fn new(protocol: &str, sampler: &str, anneal_fraction: Option<f64>, seed: u64) -> Self {
        Self {
            protocol: protocol.to_string(),
            sampler: sampler.to_string(),
            anneal_fraction,
            seed,
            steps: Vec::new(),
            best_state: None,
            best_energy: f64::INFINITY,
        }
    }

    fn record(&mut self, set: &SampleSet, start: Option<&BinaryState>, incumbent: BinaryState, incumbent_energy: f64) {
        let best = set.lowest();
        if best.energy < self.best_energy {
            self.best_energy = best.energy;
            self.best_state = Some(best.state.clone());
        }
        self.steps.push(ChainStep {
            iteration: self.steps.len(),
            incumbent,
            incumbent_energy,
            batch_min_energy: best.energy,
            batch_size: set.num_reads(),
            seed_overlap: start.map(|s| set.mean_overlap(s)),
        });
    }

    /// Running minimum of the batch minima.
    pub fn global_best_series(&self) -> Vec<f64> {
        self.steps
            .iter()
            .scan(f64::INFINITY, |best, s| {
                *best = best.min(s.batch_min_energy);
                Some(*best)
            })
            .collect()
    }

    pub fn incumbent_series(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.incumbent_energy).collect()
    }

    pub fn total_reads(&self) -> usize {
        self.steps.iter().map(|s| s.batch_size).sum()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("iteration,batch_min_energy,incumbent_energy,global_best_energy,seed_overlap\n");
        for (s, g) in self.steps.iter().zip(self.global_best_series()) {
            let overlap = s.seed_overlap.map(|o| o.to_string()).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                s.iteration, s.batch_min_energy, s.incumbent_energy, g, overlap
            ));
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("traces are always serializable")
    }

    pub fn checksum(&self) -> String {
        hex::encode(Sha256::digest(self.to_json().as_bytes()))
    }
}

/// A failed chain keeps every step completed before the failure.
#[derive(Debug, Error)]
#[error("chain aborted after {} completed steps: {source}", partial.steps.len())]
pub struct ChainError {
    pub partial: Box<ChainTrace>,
    #[source]
    pub source: Error,
}

pub type ChainResult = std::result::Result<ChainTrace, ChainError>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WarmStartConfig {
    pub iterations: usize,
    /// Sampler reads per iteration.
    pub reads: usize,
    pub seed: u64,
}

impl Default for WarmStartConfig {
    fn default() -> Self {
        Self {
            iterations: 100,
            reads: 1,
            seed: 0,
        }
    }
}

/// Start from a seeded random state and feed each run's best state into the
/// next run as its initial state.
pub fn iterated_warm_start(problem: &QuboProblem, sampler: &dyn Sampler, config: &WarmStartConfig) -> ChainResult {
    let mut trace = ChainTrace::new("warm-start", sampler.name(), None, config.seed);
    let fail = |trace: ChainTrace, source| ChainError {
        partial: Box::new(trace),
        source,
    };
    if config.iterations == 0 {
        return Err(fail(trace, Error::InvalidConfig("iterations must be positive".into())));
    }
    let mut init = BinaryState::random(problem.n(), &mut rng_from(config.seed, &[0]));
    for k in 0..config.iterations {
        let request = SamplerRequest::new(problem, config.reads, derive_seed(config.seed, &[1, k as u64]))
            .with_initial_state(init.clone());
        let set = match sampler.sample(&request) {
            Ok(set) => set,
            Err(e) => return Err(fail(trace, e)),
        };
        let best = set.lowest();
        trace.record(&set, Some(&init), best.state.clone(), best.energy);
        init = best.state.clone();
    }
    Ok(trace)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QemcConfig {
    /// Chain steps after the cold start.
    pub iterations: usize,
    /// Reads per step, cold start included.
    pub batch: usize,
    pub seed: u64,
    /// Keep the best state seen so far as incumbent instead of the latest
    /// batch minimum.
    pub elitist: bool,
}

impl Default for QemcConfig {
    fn default() -> Self {
        Self {
            iterations: 100,
            batch: 1000,
            seed: 0,
            elitist: false,
        }
    }
}

/// Cold-start batch from `cold_start`, then `iterations` batches from
/// `sampler`, each initialized at the incumbent. Step 0 of the trace is the
/// cold start; `(iterations + 1) * batch` reads are requested in total.
pub fn qemc_chain(
    problem: &QuboProblem,
    cold_start: &dyn Sampler,
    sampler: &dyn Sampler,
    config: &QemcConfig,
    anneal_fraction: Option<f64>,
) -> ChainResult {
    let mut trace = ChainTrace::new("qemc", sampler.name(), anneal_fraction, config.seed);
    let fail = |trace: ChainTrace, source| ChainError {
        partial: Box::new(trace),
        source,
    };
    if config.batch == 0 {
        return Err(fail(trace, Error::InvalidConfig("batch must be positive".into())));
    }
    let cold = SamplerRequest::new(problem, config.batch, derive_seed(config.seed, &[0]));
    let set = match cold_start.sample(&cold) {
        Ok(set) => set,
        Err(e) => return Err(fail(trace, e)),
    };
    let mut incumbent = set.lowest().state.clone();
    let mut incumbent_energy = set.lowest().energy;
    trace.record(&set, None, incumbent.clone(), incumbent_energy);

    for k in 1..=config.iterations {
        let request = SamplerRequest::new(problem, config.batch, derive_seed(config.seed, &[k as u64]))
            .with_initial_state(incumbent.clone());
        let set = match sampler.sample(&request) {
            Ok(set) => set,
            Err(e) => return Err(fail(trace, e)),
        };
        let start = incumbent.clone();
        let best = set.lowest();
        if !config.elitist || best.energy < incumbent_energy {
            incumbent = best.state.clone();
            incumbent_energy = best.energy;
        }
        trace.record(&set, Some(&start), incumbent.clone(), incumbent_energy);
    }
    Ok(trace)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReverseScheduleConfig {
    /// Anneal fraction held during the pause; 1 is fully cold.
    pub s: f64,
    /// Sweep fractions of (ramp down, hold, ramp up).
    pub segments: (f64, f64, f64),
    pub sweeps: usize,
    /// `(β_hot, β_cold)`; derived from the problem when absent.
    pub beta_range: Option<(f64, f64)>,
}

impl Default for ReverseScheduleConfig {
    fn default() -> Self {
        Self {
            s: 0.5,
            segments: (0.10, 0.80, 0.10),
            sweeps: SaConfig::default().sweeps,
            beta_range: None,
        }
    }
}

impl ReverseScheduleConfig {
    pub fn validate(&self) -> Result<()> {
        let (a, b, c) = self.segments;
        if !(self.s > 0.0 && self.s < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "anneal fraction {} must lie in (0, 1)",
                self.s
            )));
        }
        if !(a > 0.0 && b > 0.0 && c > 0.0) || ((a + b + c) - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidConfig(
                "segment fractions must be positive and sum to 1".into(),
            ));
        }
        if self.sweeps < 3 {
            return Err(Error::InvalidConfig("reverse schedule needs at least 3 sweeps".into()));
        }
        if let Some(range) = self.beta_range {
            crate::samplers::SaConfig {
                beta_range: Some(range),
                ..SaConfig::default()
            }
            .validate()?;
        }
        Ok(())
    }

    /// `β(s) = β_hot (β_cold / β_hot)^s`.
    pub fn pause_beta(&self, hot: f64, cold: f64) -> f64 {
        hot * (cold / hot).powf(self.s)
    }

    /// Sweep counts of the three segments; each is at least one sweep.
    pub fn segment_sweeps(&self) -> (usize, usize, usize) {
        let total = self.sweeps as f64;
        let down = ((self.segments.0 * total).round() as usize).max(1);
        let hold = ((self.segments.1 * total).round() as usize).max(1);
        let up = self.sweeps.saturating_sub(down + hold).max(1);
        (down, hold, up)
    }

    /// β per sweep: geometric ramp from `cold` to `β(s)`, a plateau, then a
    /// geometric ramp back to `cold`.
    pub fn schedule(&self, hot: f64, cold: f64) -> Vec<f64> {
        let pause = self.pause_beta(hot, cold);
        let (down, hold, up) = self.segment_sweeps();
        let mut betas = Vec::with_capacity(down + hold + up);
        let ratio = pause / cold;
        betas.extend((1..=down).map(|k| cold * ratio.powf(k as f64 / down as f64)));
        betas.extend(std::iter::repeat_n(pause, hold));
        betas.extend((1..=up).map(|k| pause * (1.0 / ratio).powf(k as f64 / up as f64)));
        betas
    }
}

/// Classical stand-in for reverse annealing: Metropolis sweeps starting from
/// the given state under the reverse β trajectory.
#[derive(Debug, Clone, Default)]
pub struct ReverseAnnealing {
    pub config: ReverseScheduleConfig,
}

impl ReverseAnnealing {
    pub fn new(config: ReverseScheduleConfig) -> Self {
        Self { config }
    }
}

impl Sampler for ReverseAnnealing {
    fn name(&self) -> &str {
        "reverse-sa"
    }

    fn params(&self) -> serde_json::Value {
        serde_json::to_value(self.config).expect("config is serializable")
    }

    fn sample(&self, request: &SamplerRequest<'_>) -> Result<SampleSet> {
        self.config.validate()?;
        let init = request.initial_state.as_ref().ok_or(Error::MissingInitialState)?;
        let problem = request.problem;
        let (hot, cold) = self.config.beta_range.unwrap_or_else(|| default_beta_range(problem));
        let betas = self.config.schedule(hot, cold);
        run_reads(self, request, |_, rng| {
            let mut bits = init.clone().into_inner();
            metropolis_anneal(problem, &mut bits, &betas, rng);
            Ok(vec![BinaryState::from_bits(bits)?])
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::samplers::{BruteForce, RandomSampler, SimulatedAnnealing};

    fn problem() -> QuboProblem {
        QuboProblem::new(
            vec![0.4, -0.6, 0.2, -0.3, 0.5, -0.1],
            [
                ((0, 1), 0.7),
                ((1, 2), -0.5),
                ((2, 3), 0.9),
                ((3, 4), -0.8),
                ((4, 5), 0.3),
                ((0, 5), -0.6),
            ],
            0.0,
        )
        .unwrap()
    }

    fn greedy() -> SimulatedAnnealing {
        SimulatedAnnealing::new(SaConfig {
            sweeps: 10,
            beta_range: Some((1e9, 1e10)),
            ..SaConfig::default()
        })
    }

    #[test]
    fn single_iteration_is_one_plain_call() {
        let p = problem();
        let sa = SimulatedAnnealing::new(SaConfig {
            sweeps: 50,
            ..Default::default()
        });
        let cfg = WarmStartConfig {
            iterations: 1,
            reads: 4,
            seed: 3,
        };
        let trace = iterated_warm_start(&p, &sa, &cfg).unwrap();
        let init = BinaryState::random(p.n(), &mut rng_from(3, &[0]));
        let direct = sa
            .sample(&SamplerRequest::new(&p, 4, derive_seed(3, &[1, 0])).with_initial_state(init))
            .unwrap();
        assert_eq!(trace.steps.len(), 1);
        assert_eq!(trace.steps[0].batch_min_energy, direct.min_energy());
        assert_eq!(trace.steps[0].incumbent, direct.lowest().state);
    }

    #[test]
    fn global_best_series_is_monotone() {
        let p = problem();
        let trace = iterated_warm_start(
            &p,
            &RandomSampler,
            &WarmStartConfig {
                iterations: 30,
                reads: 2,
                seed: 1,
            },
        )
        .unwrap();
        let g = trace.global_best_series();
        assert!(g.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(*g.last().unwrap(), trace.best_energy);
    }

    #[test]
    fn greedy_chain_never_regresses() {
        let p = problem();
        let cfg = QemcConfig {
            iterations: 15,
            batch: 5,
            seed: 2,
            elitist: false,
        };
        let trace = qemc_chain(&p, &RandomSampler, &greedy(), &cfg, None).unwrap();
        let inc = trace.incumbent_series();
        assert!(inc.windows(2).all(|w| w[1] <= w[0]), "{inc:?}");
    }

    #[test]
    fn chain_bookkeeping() {
        let p = problem();
        let cfg = QemcConfig {
            iterations: 7,
            batch: 3,
            seed: 4,
            elitist: false,
        };
        let trace = qemc_chain(&p, &RandomSampler, &RandomSampler, &cfg, Some(0.5)).unwrap();
        assert_eq!(trace.steps.len(), 8);
        assert_eq!(trace.total_reads(), 8 * 3);
        let min = trace
            .steps
            .iter()
            .map(|s| s.batch_min_energy)
            .fold(f64::INFINITY, f64::min);
        assert_eq!(trace.best_energy, min);
        assert!(trace.steps.iter().enumerate().all(|(k, s)| s.iteration == k));
        assert_eq!(trace.to_csv().lines().count(), 9);
    }

    #[test]
    fn elitist_incumbent_tracks_global_best() {
        let p = problem();
        let cfg = QemcConfig {
            iterations: 10,
            batch: 2,
            seed: 6,
            elitist: true,
        };
        let trace = qemc_chain(&p, &RandomSampler, &RandomSampler, &cfg, None).unwrap();
        for (s, g) in trace.steps.iter().zip(trace.global_best_series()) {
            assert_eq!(s.incumbent_energy, g);
        }
    }

    #[test]
    fn failures_keep_partial_trace() {
        let p = problem();
        let cfg = QemcConfig {
            iterations: 3,
            batch: 2,
            seed: 0,
            elitist: false,
        };
        // Reverse annealing cannot cold start.
        let rev = ReverseAnnealing::default();
        let err = qemc_chain(&p, &rev, &rev, &cfg, Some(0.5)).unwrap_err();
        assert!(err.partial.steps.is_empty());
        assert!(matches!(err.source, Error::MissingInitialState));

        let big = QuboProblem::new(vec![0.0; 31], [], 0.0).unwrap();
        let err = iterated_warm_start(
            &big,
            &BruteForce,
            &WarmStartConfig {
                iterations: 2,
                reads: 1,
                seed: 0,
            },
        )
        .unwrap_err();
        assert!(err.partial.steps.is_empty());
    }

    #[test]
    fn reverse_schedule_shape() {
        let cfg = ReverseScheduleConfig {
            s: 0.5,
            sweeps: 100,
            ..Default::default()
        };
        assert_eq!(cfg.segment_sweeps(), (10, 80, 10));
        let betas = cfg.schedule(0.01, 100.0);
        assert_eq!(betas.len(), 100);
        let pause = 0.01 * (100.0f64 / 0.01).powf(0.5);
        assert!((betas[9] - pause).abs() < 1e-12);
        assert!(betas[10..90].iter().all(|&b| b == pause));
        assert!((betas[99] - 100.0).abs() < 1e-9);
        assert!(betas[..10].windows(2).all(|w| w[1] < w[0]));
        assert!(betas[90..].windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn reverse_config_validation() {
        assert!(ReverseScheduleConfig::default().validate().is_ok());
        for bad in [
            ReverseScheduleConfig {
                s: 1.0,
                ..Default::default()
            },
            ReverseScheduleConfig {
                s: 0.0,
                ..Default::default()
            },
            ReverseScheduleConfig {
                segments: (0.2, 0.2, 0.2),
                ..Default::default()
            },
            ReverseScheduleConfig {
                segments: (0.0, 0.9, 0.1),
                ..Default::default()
            },
        ] {
            assert!(bad.validate().is_err());
        }
    }

    #[test]
    fn near_cold_reverse_anneal_does_not_worsen() {
        let p = problem();
        let rev = ReverseAnnealing::new(ReverseScheduleConfig {
            s: 0.999_999,
            sweeps: 50,
            beta_range: Some((1e-3, 1e9)),
            ..Default::default()
        });
        for w in 0..64 {
            let init = BinaryState::from_word(w, 6);
            let e0 = p.energy(&init).unwrap();
            let set = rev
                .sample(&SamplerRequest::new(&p, 5, w).with_initial_state(init))
                .unwrap();
            assert!(set.records().iter().all(|r| r.energy <= e0 + 1e-12));
        }
    }
}
