use std::time::Instant;

use serde_json::json;

use crate::error::{Error, Result};
use crate::qubo::{BinaryState, QuboProblem, ENERGY_TOL};
use crate::sampleset::{SampleMetadata, SampleSet};

use super::{Sampler, SamplerRequest};

pub const MAX_BRUTE_FORCE_VARS: usize = 30;

// Incremental energies are re-synchronized with an exact evaluation this often.
const RESYNC_INTERVAL: u64 = 1 << 16;

/// Exact minimum and every state attaining it (within [`ENERGY_TOL`]),
/// in ascending Gray-code visit order.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundStates {
    pub energy: f64,
    pub states: Vec<BinaryState>,
}

impl GroundStates {
    pub fn is_degenerate(&self) -> bool {
        self.states.len() > 1
    }
}

/// Enumerate all `2^n` states along a Gray code, one bit flip per step.
pub fn brute_force(problem: &QuboProblem) -> Result<GroundStates> {
    let n = problem.n();
    if n > MAX_BRUTE_FORCE_VARS {
        return Err(Error::TooLarge {
            n,
            max: MAX_BRUTE_FORCE_VARS,
        });
    }
    let mut bits = vec![0u8; n];
    let mut fields = problem.local_fields(&bits);
    let mut word = 0u64;
    let mut energy = problem.offset();
    let mut best = energy;
    let mut candidates = vec![0u64];

    for k in 1..(1u64 << n) {
        let i = k.trailing_zeros() as usize;
        let delta = if bits[i] == 0 { fields[i] } else { -fields[i] };
        bits[i] ^= 1;
        word ^= 1 << i;
        let sign = if bits[i] == 1 { 1.0 } else { -1.0 };
        for &(j, q) in problem.neighbors(i) {
            fields[j] += sign * q;
        }
        energy += delta;
        if k % RESYNC_INTERVAL == 0 {
            energy = problem.energy_bits(&bits);
            fields = problem.local_fields(&bits);
        }
        if energy < best - ENERGY_TOL {
            best = energy;
            candidates.clear();
            candidates.push(word);
        } else if energy <= best + ENERGY_TOL {
            best = best.min(energy);
            candidates.push(word);
        }
    }

    let scored: Vec<(BinaryState, f64)> = candidates
        .into_iter()
        .map(|w| {
            let s = BinaryState::from_word(w, n);
            let e = problem.energy_bits(s.as_slice());
            (s, e)
        })
        .collect();
    let energy = scored.iter().map(|(_, e)| *e).fold(f64::INFINITY, f64::min);
    let states = scored
        .into_iter()
        .filter(|(_, e)| *e <= energy + ENERGY_TOL)
        .map(|(s, _)| s)
        .collect();
    Ok(GroundStates { energy, states })
}

/// Exhaustive solver as a sampler: one read per optimal state.
#[derive(Debug, Clone, Copy, Default)]
pub struct BruteForce;

impl Sampler for BruteForce {
    fn name(&self) -> &str {
        "brute"
    }

    fn params(&self) -> serde_json::Value {
        json!({ "max_vars": MAX_BRUTE_FORCE_VARS })
    }

    fn sample(&self, request: &SamplerRequest<'_>) -> Result<SampleSet> {
        request.validate()?;
        let start = Instant::now();
        let ground = brute_force(request.problem)?;
        let meta = SampleMetadata::new(self.name(), request.seed, self.params());
        let mut set = SampleSet::from_reads(request.problem, ground.states, meta)?;
        set.set_duration(start.elapsed());
        Ok(set)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ferromagnetic_pair() {
        let p = QuboProblem::new(vec![1.0, -1.0], [((0, 1), -3.0)], 0.0).unwrap();
        let g = brute_force(&p).unwrap();
        assert_eq!(g.energy, -3.0);
        assert_eq!(g.states, vec!["11".parse().unwrap()]);
    }

    #[test]
    fn zero_problem_is_fully_degenerate() {
        let p = QuboProblem::new(vec![0.0; 3], [], 0.0).unwrap();
        let g = brute_force(&p).unwrap();
        assert_eq!(g.energy, 0.0);
        assert_eq!(g.states.len(), 8);
        assert!(g.is_degenerate());
    }

    #[test]
    fn repulsive_pair_prefers_zero() {
        let p = QuboProblem::new(vec![2.0, 2.0], [((0, 1), 1.0)], 0.0).unwrap();
        let g = brute_force(&p).unwrap();
        assert_eq!(g.energy, 0.0);
        assert_eq!(g.states, vec![BinaryState::zeros(2)]);
    }

    #[test]
    fn refuses_large_problems() {
        let p = QuboProblem::new(vec![0.0; 31], [], 0.0).unwrap();
        let err = brute_force(&p).unwrap_err();
        assert!(err.to_string().contains("31"));
    }

    #[test]
    fn sampler_returns_ground_states() {
        let p = QuboProblem::new(vec![0.0; 2], [], 1.5).unwrap();
        let set = BruteForce.sample(&SamplerRequest::new(&p, 1, 0)).unwrap();
        assert_eq!(set.num_reads(), 4);
        assert_eq!(set.min_energy(), 1.5);
    }
}
