//! Software model of a non-equilibrium Boltzmann machine (NEBM) neuron
//! population solving a QUBO.
//!
//! Each variable is a neuron with membrane potential `v`, binary spike
//! output `a`, refractory trace `r` and a forced-hold counter. One step:
//!
//! ```text
//! r_i ← ρ r_i + a_i
//! v_i ← α v_i − (h_i + Σ_j Q_ij a_j) − κ r_i / 2^{k_i} + γ η_i
//! a_i ← Bernoulli(σ(v_i / T))        unless neuron i is held
//! ```
//!
//! The synaptic drive is the negated local field so that spiking lowers the
//! QUBO energy. Temperatures are in the same units as the drive; by default
//! the coefficients are rescaled so that the stiffest neuron's largest
//! possible drive is `drive_ratio · T_max`. `η_i` is standard logistic
//! noise. The temperature `T` steps down from `T_max` by `ΔT` every
//! `steps_per_temperature` steps and, in the cyclic mode, restarts at `T_max`
//! after visiting `T_min`.

use rand::Rng as _;
use rand_distr::Open01;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qubo::{BinaryState, QuboProblem};
use crate::sampleset::SampleSet;
use crate::seed::Rng;

use super::{run_reads, Sampler, SamplerRequest};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TemperatureCycle {
    /// Restart at `T_max` after the `T_min` plateau.
    #[default]
    Cyclic,
    /// Stay at `T_min` once reached.
    HoldAtFloor,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NebmConfig {
    pub t_max: f64,
    pub t_min: f64,
    pub delta_t: f64,
    pub steps_per_temperature: usize,
    pub total_steps: usize,
    pub sample_interval: usize,
    pub alpha: f64,
    pub gamma: f64,
    pub rho: f64,
    pub kappa: f64,
    /// Inclusive range for each neuron's hold length after an output change;
    /// `(0, 0)` disables holding.
    pub refract_hold: (u32, u32),
    /// Inclusive range for each neuron's penalty exponent `k` in `κ r / 2^k`.
    pub refract_scaling: (u32, u32),
    pub cycle: TemperatureCycle,
    /// Coefficient rescaling relative to `T_max`; `None` runs on the raw
    /// coefficients.
    pub drive_ratio: Option<f64>,
    /// Deterministic firing threshold. Accepted for completeness; the
    /// stochastic activation does not use it.
    pub threshold: Option<f64>,
}

impl Default for NebmConfig {
    fn default() -> Self {
        Self {
            t_max: 15.0,
            t_min: 1.0,
            delta_t: 1.0,
            steps_per_temperature: 20,
            total_steps: 6000,
            sample_interval: 20,
            alpha: 0.5,
            gamma: 1.0,
            rho: 0.7,
            kappa: 1.0,
            refract_hold: (5, 10),
            refract_scaling: (4, 8),
            cycle: TemperatureCycle::Cyclic,
            drive_ratio: Some(3.0),
            threshold: None,
        }
    }
}

impl NebmConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(format!("nebm: {msg}")));
        if !(self.t_min > 0.0 && self.t_max > self.t_min) {
            return bad("need 0 < t_min < t_max");
        }
        if !(self.delta_t > 0.0) {
            return bad("delta_t must be positive");
        }
        if self.steps_per_temperature == 0 || self.total_steps == 0 || self.sample_interval == 0 {
            return bad("step counts must be positive");
        }
        if self.total_steps % self.sample_interval != 0 {
            return bad("sample_interval must divide total_steps");
        }
        if !(0.0..1.0).contains(&self.alpha) {
            return bad("alpha must lie in [0, 1)");
        }
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return bad("rho must lie in (0, 1)");
        }
        if !(self.gamma >= 0.0 && self.kappa >= 0.0) {
            return bad("gamma and kappa must be non-negative");
        }
        if self.refract_hold.0 > self.refract_hold.1 || self.refract_scaling.0 > self.refract_scaling.1 {
            return bad("refractory ranges must be ordered");
        }
        if let Some(r) = self.drive_ratio {
            if !(r > 0.0 && r.is_finite()) {
                return bad("drive_ratio must be positive");
            }
        }
        if self.refract_scaling.1 > 62 {
            return bad("refract_scaling exponent too large");
        }
        Ok(())
    }

    /// Number of temperature plateaus in one anneal, `T_max` down to `T_min`.
    pub fn levels(&self) -> usize {
        ((self.t_max - self.t_min) / self.delta_t + 1e-9).floor() as usize + 1
    }

    /// Temperature in force during the step that starts at time `t`.
    pub fn temperature(&self, t: usize) -> f64 {
        let level = t / self.steps_per_temperature;
        let level = match self.cycle {
            TemperatureCycle::Cyclic => level % self.levels(),
            TemperatureCycle::HoldAtFloor => level.min(self.levels() - 1),
        };
        (self.t_max - self.delta_t * level as f64).max(self.t_min)
    }

    pub fn num_samples(&self) -> usize {
        self.total_steps / self.sample_interval
    }

    /// Factor applied to the problem coefficients before simulation.
    pub fn drive_scale(&self, problem: &QuboProblem) -> f64 {
        let Some(ratio) = self.drive_ratio else {
            return 1.0;
        };
        let stiffest = problem.stiffness().into_iter().fold(0.0, f64::max);
        if stiffest > 0.0 {
            ratio * self.t_max / stiffest
        } else {
            1.0
        }
    }
}

/// Logistic spike probability `σ(v / T)`.
pub fn spike_probability(v: f64, temperature: f64) -> f64 {
    1.0 / (1.0 + (-v / temperature).exp())
}

fn logistic_noise(rng: &mut Rng) -> f64 {
    let u: f64 = rng.sample(Open01);
    (u / (1.0 - u)).ln()
}

/// Full dynamical state of one simulated population.
#[derive(Debug, Clone, PartialEq)]
pub struct NebmState {
    pub v: Vec<f64>,
    pub a: Vec<u8>,
    pub r: Vec<f64>,
    pub hold: Vec<u32>,
    pub t: usize,
    pub temperature: f64,
    refract: Vec<u32>,
    penalty_scale: Vec<f64>,
}

impl NebmState {
    /// Fresh state at `t = 0` with spikes `initial`; per-neuron hold lengths
    /// and penalty exponents are drawn from the configured ranges.
    pub fn new(initial: BinaryState, config: &NebmConfig, rng: &mut Rng) -> Self {
        let n = initial.len();
        let refract = (0..n)
            .map(|_| rng.random_range(config.refract_hold.0..=config.refract_hold.1))
            .collect();
        let penalty_scale = (0..n)
            .map(|_| {
                let k = rng.random_range(config.refract_scaling.0..=config.refract_scaling.1);
                config.kappa / (1u64 << k) as f64
            })
            .collect();
        Self {
            v: vec![0.0; n],
            a: initial.into_inner(),
            r: vec![0.0; n],
            hold: vec![0; n],
            t: 0,
            temperature: config.temperature(0),
            refract,
            penalty_scale,
        }
    }

    pub fn spikes(&self) -> BinaryState {
        BinaryState::from_bits(self.a.clone()).expect("spike outputs are binary")
    }

    /// Advance one synchronous time step.
    pub fn step(&mut self, problem: &QuboProblem, config: &NebmConfig, rng: &mut Rng) {
        let n = self.a.len();
        self.temperature = config.temperature(self.t);
        let fields = problem.local_fields(&self.a);
        let mut next = self.a.clone();
        for i in 0..n {
            let noise = if config.gamma > 0.0 {
                config.gamma * logistic_noise(rng)
            } else {
                0.0
            };
            self.v[i] = config.alpha * self.v[i] - fields[i] - self.penalty_scale[i] * self.r[i] + noise;
            self.r[i] = config.rho * self.r[i] + f64::from(self.a[i]);
            if self.hold[i] > 0 {
                self.hold[i] -= 1;
                continue;
            }
            let fire = rng.random::<f64>() < spike_probability(self.v[i], self.temperature);
            next[i] = fire as u8;
            if next[i] != self.a[i] {
                self.hold[i] = self.refract[i];
            }
        }
        self.a = next;
        self.t += 1;
    }
}

#[derive(Debug, Clone, Default)]
pub struct Nebm {
    pub config: NebmConfig,
}

impl Nebm {
    pub fn new(config: NebmConfig) -> Self {
        Self { config }
    }

    /// One simulation from `initial` on `problem` as given (no rescaling),
    /// returning the recorded spike vectors.
    pub fn run(&self, problem: &QuboProblem, initial: BinaryState, rng: &mut Rng) -> Vec<BinaryState> {
        let cfg = &self.config;
        let mut state = NebmState::new(initial, cfg, rng);
        let mut samples = Vec::with_capacity(cfg.num_samples());
        while state.t < cfg.total_steps {
            state.step(problem, cfg, rng);
            if state.t % cfg.sample_interval == 0 {
                samples.push(state.spikes());
            }
        }
        samples
    }
}

impl Sampler for Nebm {
    fn name(&self) -> &str {
        "nebm"
    }

    fn params(&self) -> serde_json::Value {
        serde_json::to_value(self.config).expect("config is serializable")
    }

    /// Each read is an independent simulation contributing
    /// `total_steps / sample_interval` samples.
    fn sample(&self, request: &SamplerRequest<'_>) -> Result<SampleSet> {
        self.config.validate()?;
        let problem = request.problem;
        let driven = problem.scaled(self.config.drive_scale(problem));
        run_reads(self, request, |_, rng| {
            let initial = match &request.initial_state {
                Some(s) => s.clone(),
                None => BinaryState::random(problem.n(), rng),
            };
            Ok(self.run(&driven, initial, rng))
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from;

    #[test]
    fn default_schedule_cycles_twenty_times() {
        let cfg = NebmConfig::default();
        assert_eq!(cfg.levels(), 15);
        assert_eq!(cfg.num_samples(), 300);
        assert_eq!(cfg.temperature(0), 15.0);
        assert_eq!(cfg.temperature(19), 15.0);
        assert_eq!(cfg.temperature(20), 14.0);
        assert_eq!(cfg.temperature(299), 1.0);
        assert_eq!(cfg.temperature(300), 15.0);
        assert_eq!(cfg.temperature(5999), 1.0);
        let floor = NebmConfig {
            cycle: TemperatureCycle::HoldAtFloor,
            ..cfg
        };
        assert_eq!(floor.temperature(300), 1.0);
        assert_eq!(floor.temperature(5999), 1.0);
    }

    #[test]
    fn validation() {
        assert!(NebmConfig::default().validate().is_ok());
        let bad = [
            NebmConfig {
                sample_interval: 7,
                ..Default::default()
            },
            NebmConfig {
                t_min: 20.0,
                ..Default::default()
            },
            NebmConfig {
                alpha: 1.0,
                ..Default::default()
            },
            NebmConfig {
                rho: 0.0,
                ..Default::default()
            },
            NebmConfig {
                refract_hold: (10, 5),
                ..Default::default()
            },
        ];
        for cfg in bad {
            assert!(cfg.validate().is_err(), "{cfg:?}");
        }
    }

    #[test]
    fn returns_one_sample_per_interval() {
        let p = QuboProblem::new(vec![-0.5, 0.5, -0.1], [((0, 1), 0.3)], 0.0).unwrap();
        let set = Nebm::default().sample(&SamplerRequest::new(&p, 1, 1)).unwrap();
        assert_eq!(set.num_reads(), 300);
        let set = Nebm::default().sample(&SamplerRequest::new(&p, 2, 1)).unwrap();
        assert_eq!(set.num_reads(), 600);
    }

    #[test]
    fn uniform_attraction_settles_on_all_ones() {
        let p = QuboProblem::new(vec![-5.0; 8], [], 0.0).unwrap();
        let nebm = Nebm::default();
        let hits = (0..100)
            .filter(|&seed| {
                let set = nebm.sample(&SamplerRequest::new(&p, 1, seed)).unwrap();
                set.lowest().state == BinaryState::ones(8)
            })
            .count();
        assert!(hits >= 90, "{hits}/100");
    }

    #[test]
    fn cold_noiseless_limit_is_a_step_function() {
        assert!(spike_probability(1.0, 1e-3) > 1.0 - 1e-12);
        assert!(spike_probability(-1.0, 1e-3) < 1e-12);

        let h = vec![1.0, -1.0, 2.0, -0.5];
        let p = QuboProblem::new(h.clone(), [], 0.0).unwrap();
        let cfg = NebmConfig {
            t_max: 0.002,
            t_min: 0.001,
            delta_t: 0.001,
            alpha: 0.0,
            gamma: 0.0,
            refract_hold: (0, 0),
            total_steps: 200,
            ..NebmConfig::default()
        };
        let mut rng = rng_from(3, &[]);
        let samples = Nebm::new(cfg).run(&p, BinaryState::zeros(4), &mut rng);
        for s in samples {
            for (i, &hi) in h.iter().enumerate() {
                assert_eq!(s.get(i), (hi < 0.0) as u8);
            }
        }
    }

    #[test]
    fn held_neurons_keep_their_output() {
        let p = QuboProblem::new(vec![0.2, -0.3, 0.1, -0.1, 0.0], [((0, 1), -0.4), ((2, 4), 0.5)], 0.0).unwrap();
        let cfg = NebmConfig::default();
        let mut rng = rng_from(11, &[]);
        let mut state = NebmState::new(BinaryState::zeros(5), &cfg, &mut rng);
        for _ in 0..2000 {
            let held: Vec<(usize, u8)> = (0..5).filter(|&i| state.hold[i] > 0).map(|i| (i, state.a[i])).collect();
            state.step(&p, &cfg, &mut rng);
            for (i, before) in held {
                assert_eq!(state.a[i], before, "held neuron {i} changed at t={}", state.t);
            }
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let p = QuboProblem::new(vec![-0.5, 0.5, -0.1], [((0, 1), 0.3)], 0.0).unwrap();
        let a = Nebm::default().sample(&SamplerRequest::new(&p, 3, 5)).unwrap();
        let b = Nebm::default().sample(&SamplerRequest::new(&p, 3, 5)).unwrap();
        assert_eq!(a.checksum(), b.checksum());
    }

    #[test]
    fn drive_scale_maps_stiffest_neuron() {
        let p = QuboProblem::new(vec![-1.0, 0.5], [((0, 1), 2.0)], 0.0).unwrap();
        let cfg = NebmConfig::default();
        assert!((cfg.drive_scale(&p) - 3.0 * 15.0 / 3.0).abs() < 1e-12);
        let raw = NebmConfig {
            drive_ratio: None,
            ..cfg
        };
        assert_eq!(raw.drive_scale(&p), 1.0);
        let flat = QuboProblem::new(vec![0.0; 3], [], 0.0).unwrap();
        assert_eq!(cfg.drive_scale(&flat), 1.0);
    }

    #[test]
    fn energies_refer_to_the_unscaled_problem() {
        let p = QuboProblem::new(vec![-0.05, 0.02, -0.01], [((0, 2), 0.03)], 0.4).unwrap();
        let set = Nebm::default().sample(&SamplerRequest::new(&p, 2, 1)).unwrap();
        for r in set.records() {
            assert!((r.energy - p.energy(&r.state).unwrap()).abs() < 1e-12);
        }
    }
}
