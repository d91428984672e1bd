//! Unsupervised dictionary learning with an adaptive sparsity penalty.
//!
//! Each epoch codes every patch with a QUBO sampler against the current
//! dictionary and moves the active atoms along the residual,
//! `D_i ← D_i + η (x − D a)` for every `i` with `a_i = 1`. Atoms are never
//! re-normalized; their norms settle where the penalty `λ` balances the
//! reconstruction term. After an epoch whose mean active fraction exceeds
//! the target, `λ` is multiplied by `lambda_growth`.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Open01, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coding::{build_qubo, reconstruct, reconstruction_error, Dictionary, ImagePatch, QuboMode};
use crate::error::{Error, Result};
use crate::qubo::BinaryState;
use crate::samplers::{Sampler, SamplerRequest};
use crate::seed::{derive_seed, rng_from};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LearnConfig {
    pub p: usize,
    pub s_target: f64,
    pub lambda_init: f64,
    pub lambda_growth: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub convergence_tol: f64,
    pub seed: u64,
    /// Patches coded against one frozen dictionary before an update.
    pub batch_size: usize,
    /// Reads requested from the sampler per patch.
    pub reads: usize,
    pub mode: QuboMode,
}

impl Default for LearnConfig {
    fn default() -> Self {
        Self {
            p: 64,
            s_target: 0.15,
            lambda_init: 0.01,
            lambda_growth: 1.1,
            learning_rate: 0.05,
            epochs: 50,
            convergence_tol: 1e-3,
            seed: 0,
            batch_size: 1,
            reads: 100,
            mode: QuboMode::Exact,
        }
    }
}

impl LearnConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(format!("learning: {msg}")));
        if self.p == 0 {
            return bad("p must be positive");
        }
        if !(self.s_target > 0.0 && self.s_target < 1.0) {
            return bad("s_target must lie in (0, 1)");
        }
        if !(self.lambda_init > 0.0) {
            return bad("lambda_init must be positive");
        }
        if !(self.lambda_growth > 1.0) {
            return bad("lambda_growth must exceed 1");
        }
        if !(self.learning_rate > 0.0) {
            return bad("learning_rate must be positive");
        }
        if self.epochs == 0 || self.batch_size == 0 || self.reads == 0 {
            return bad("epochs, batch_size and reads must be positive");
        }
        if !(self.convergence_tol > 0.0) {
            return bad("convergence_tol must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean `½‖x − D a‖²` over the epoch, each patch coded before its update.
    pub mean_error: f64,
    /// Mean fraction of active atoms.
    pub mean_sparsity: f64,
    /// Penalty in force during the epoch.
    pub lambda: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LearnTrace {
    pub epochs: Vec<EpochRecord>,
    pub converged: bool,
}

impl LearnTrace {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,mean_error,mean_sparsity,lambda\n");
        for r in &self.epochs {
            out.push_str(&format!(
                "{},{},{},{}\n",
                r.epoch, r.mean_error, r.mean_sparsity, r.lambda
            ));
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct LearnOutcome {
    pub dictionary: Dictionary,
    pub trace: LearnTrace,
    pub lambda: f64,
}

/// Gaussian atoms rescaled to independent uniform norms in `(0, 1)`.
pub fn init_dictionary(m: usize, p: usize, seed: u64) -> Result<Dictionary> {
    if m == 0 || p == 0 {
        return Err(Error::InvalidConfig("dictionary dimensions must be positive".into()));
    }
    let mut rng = rng_from(seed, &[]);
    let atoms = (0..p)
        .map(|_| {
            let mut atom: Vec<f64> = (0..m).map(|_| rng.sample(StandardNormal)).collect();
            let norm = atom.iter().map(|v| v * v).sum::<f64>().sqrt();
            let target: f64 = rng.sample(Open01);
            // A zero draw has probability zero; fall back to a unit axis.
            if norm == 0.0 {
                atom[0] = target;
            } else {
                atom.iter_mut().for_each(|v| *v *= target / norm);
            }
            atom
        })
        .collect();
    Dictionary::new(atoms)
}

pub fn train(patches: &[ImagePatch], config: &LearnConfig, solver: &dyn Sampler) -> Result<LearnOutcome> {
    let m = patches.first().ok_or(Error::Empty("training set"))?.len();
    let dict = init_dictionary(m, config.p, config.seed)?;
    train_from(dict, patches, config, solver)
}

/// Train starting from an existing dictionary.
pub fn train_from(
    mut dict: Dictionary,
    patches: &[ImagePatch],
    config: &LearnConfig,
    solver: &dyn Sampler,
) -> Result<LearnOutcome> {
    config.validate()?;
    if patches.is_empty() {
        return Err(Error::Empty("training set"));
    }
    if dict.p() != config.p {
        return Err(Error::Dimension {
            expected: config.p,
            found: dict.p(),
        });
    }
    for x in patches {
        if x.len() != dict.m() {
            return Err(Error::Dimension {
                expected: dict.m(),
                found: x.len(),
            });
        }
    }

    let mut lambda = config.lambda_init;
    let mut trace = LearnTrace::default();
    for epoch in 0..config.epochs {
        let mut order: Vec<usize> = (0..patches.len()).collect();
        order.shuffle(&mut rng_from(config.seed, &[1, epoch as u64]));

        let mut error_sum = 0.0;
        let mut active_sum = 0usize;
        for batch in order.chunks(config.batch_size) {
            let snapshot = &dict;
            let codes: Vec<(usize, BinaryState, f64)> = batch
                .par_iter()
                .map(|&k| {
                    let seed = derive_seed(config.seed, &[2, epoch as u64, k as u64]);
                    let a = code_patch(&patches[k], snapshot, lambda, config, solver, seed)?;
                    let err = reconstruction_error(&patches[k], snapshot, &a)?;
                    Ok((k, a, err))
                })
                .collect::<Result<_>>()?;
            let mut updates: Vec<(usize, Vec<f64>)> = Vec::new();
            for (k, a, err) in &codes {
                error_sum += err;
                active_sum += a.popcount();
                let recon = reconstruct(&dict, a)?;
                let step: Vec<f64> = patches[*k]
                    .values
                    .iter()
                    .zip(&recon.values)
                    .map(|(x, r)| config.learning_rate * (x - r))
                    .collect();
                for i in a.active() {
                    updates.push((i, step.clone()));
                }
            }
            for (i, step) in updates {
                for (d, s) in dict.atom_mut(i).iter_mut().zip(&step) {
                    *d += s;
                }
            }
        }

        let count = patches.len() as f64;
        let record = EpochRecord {
            epoch,
            mean_error: error_sum / count,
            mean_sparsity: active_sum as f64 / (count * config.p as f64),
            lambda,
        };
        let converged = trace
            .epochs
            .last()
            .is_some_and(|prev| settled(prev, &record, config.convergence_tol));
        trace.epochs.push(record);
        if converged {
            trace.converged = true;
            break;
        }
        if record.mean_sparsity > config.s_target {
            lambda *= config.lambda_growth;
        }
    }
    Ok(LearnOutcome {
        dictionary: dict,
        trace,
        lambda,
    })
}

fn code_patch(
    x: &ImagePatch,
    dict: &Dictionary,
    lambda: f64,
    config: &LearnConfig,
    solver: &dyn Sampler,
    seed: u64,
) -> Result<BinaryState> {
    let problem = build_qubo(x, dict, lambda, config.mode)?;
    let set = solver.sample(&SamplerRequest::new(&problem, config.reads, seed))?;
    Ok(set.lowest().state.clone())
}

fn relative_change(prev: f64, next: f64) -> f64 {
    let scale = prev.abs().max(f64::EPSILON);
    (next - prev).abs() / scale
}

fn settled(prev: &EpochRecord, next: &EpochRecord, tol: f64) -> bool {
    relative_change(prev.mean_error, next.mean_error) < tol
        && relative_change(prev.mean_sparsity, next.mean_sparsity) < tol
}
