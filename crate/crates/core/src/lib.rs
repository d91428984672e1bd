//! Binary sparse coding as quadratic unconstrained binary optimization.
//!
//! Image patches and a dictionary define a QUBO whose minimum is the best
//! L0-penalized binary code. The crate builds those problems, samples them
//! with simulated annealing, a software non-equilibrium Boltzmann machine or
//! exhaustive enumeration, chains samplers into warm-start and reverse-anneal
//! protocols, and learns dictionaries from the resulting codes.

pub mod coding;
pub mod error;
pub mod io;
pub mod learn;
pub mod qubo;
pub mod report;
pub mod samplers;
pub mod sampleset;
pub mod seed;
pub mod strategies;
pub mod synthetic;

pub use coding::{build_qubo, Dictionary, Image, ImagePatch, QuboMode};
pub use error::{Error, Result};
pub use qubo::{BinaryState, IsingProblem, QuboProblem, ENERGY_TOL};
pub use samplers::{Sampler, SamplerRequest};
pub use sampleset::SampleSet;
pub use strategies::ChainTrace;
