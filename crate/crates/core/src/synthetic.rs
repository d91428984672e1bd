//! Seeded generators for sparse coding instances with a planted answer.

use rand::seq::index::sample;
use rand::Rng;
use rand_distr::{Normal, StandardNormal, Uniform};

use crate::coding::{build_qubo, Dictionary, ImagePatch, QuboMode};
use crate::error::{Error, Result};
use crate::qubo::{BinaryState, QuboProblem};
use crate::seed::rng_from;

/// How dictionary atoms are drawn.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AtomKind {
    /// Isotropic Gaussian directions.
    Gaussian,
    /// Nonnegative, image-like atoms: each pixel is nonzero with probability
    /// `density`, with a uniform intensity.
    Nonnegative { density: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InstanceSpec {
    pub atoms: AtomKind,
    /// Signal dimension.
    pub m: usize,
    /// Number of atoms, i.e. QUBO variables.
    pub p: usize,
    /// Planted codes use between 1 and this many atoms.
    pub max_active: usize,
    /// Standard deviation of additive Gaussian noise on the patch.
    pub noise: f64,
    pub lambda: f64,
    pub mode: QuboMode,
}

impl Default for InstanceSpec {
    fn default() -> Self {
        Self {
            atoms: AtomKind::Nonnegative { density: 0.6 },
            m: 49,
            p: 16,
            max_active: 6,
            noise: 0.05,
            lambda: 0.1,
            mode: QuboMode::Full,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Instance {
    pub dictionary: Dictionary,
    pub patch: ImagePatch,
    pub planted: BinaryState,
    pub lambda: f64,
    pub qubo: QuboProblem,
}

/// `p` atoms of dimension `m`, each rescaled to a norm drawn uniformly from
/// `[0.5, 1.5)`.
pub fn random_dictionary<R: Rng + ?Sized>(kind: AtomKind, m: usize, p: usize, rng: &mut R) -> Result<Dictionary> {
    if let AtomKind::Nonnegative { density } = kind {
        if !(density > 0.0 && density <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "atom density {density} must lie in (0, 1]"
            )));
        }
    }
    let norms = Uniform::new(0.5, 1.5).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let atoms = (0..p)
        .map(|_| {
            let mut atom: Vec<f64> = match kind {
                AtomKind::Gaussian => (0..m).map(|_| rng.sample(StandardNormal)).collect(),
                AtomKind::Nonnegative { density } => (0..m)
                    .map(|_| {
                        if rng.random::<f64>() < density {
                            rng.random()
                        } else {
                            0.0
                        }
                    })
                    .collect(),
            };
            let norm = atom.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm == 0.0 {
                atom[rng.random_range(0..m)] = 1.0;
            }
            let scale = rng.sample(norms) / atom.iter().map(|v| v * v).sum::<f64>().sqrt();
            atom.iter_mut().for_each(|v| *v *= scale);
            atom
        })
        .collect();
    Dictionary::new(atoms)
}

/// A code with between 1 and `max_active` atoms switched on.
pub fn random_code<R: Rng + ?Sized>(p: usize, max_active: usize, rng: &mut R) -> BinaryState {
    let k = rng.random_range(1..=max_active.clamp(1, p.max(1)));
    let mut bits = vec![0u8; p];
    for i in sample(rng, p, k) {
        bits[i] = 1;
    }
    BinaryState::from_bits(bits).expect("bits are binary")
}

/// `D a + noise`.
pub fn planted_patch<R: Rng + ?Sized>(
    dict: &Dictionary,
    code: &BinaryState,
    noise: f64,
    rng: &mut R,
) -> Result<ImagePatch> {
    let mut values = crate::coding::reconstruct(dict, code)?.values;
    if noise > 0.0 {
        let normal = Normal::new(0.0, noise).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        values.iter_mut().for_each(|v| *v += rng.sample(normal));
    }
    ImagePatch::from_values(values)
}

pub fn instance(spec: &InstanceSpec, seed: u64) -> Result<Instance> {
    if spec.m == 0 || spec.p == 0 {
        return Err(Error::InvalidConfig("instance dimensions must be positive".into()));
    }
    let mut rng = rng_from(seed, &[]);
    let dictionary = random_dictionary(spec.atoms, spec.m, spec.p, &mut rng)?;
    let planted = random_code(spec.p, spec.max_active, &mut rng);
    let patch = planted_patch(&dictionary, &planted, spec.noise, &mut rng)?;
    let qubo = build_qubo(&patch, &dictionary, spec.lambda, spec.mode)?;
    Ok(Instance {
        dictionary,
        patch,
        planted,
        lambda: spec.lambda,
        qubo,
    })
}

/// Training patches drawn from a hidden dictionary, each a noisy sum of at
/// most `max_active` atoms.
pub fn planted_patches(
    hidden: &Dictionary,
    count: usize,
    max_active: usize,
    noise: f64,
    seed: u64,
) -> Result<Vec<ImagePatch>> {
    let mut rng = rng_from(seed, &[]);
    (0..count)
        .map(|_| {
            let code = random_code(hidden.p(), max_active, &mut rng);
            planted_patch(hidden, &code, noise, &mut rng)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coding::objective;

    #[test]
    fn reproducible() {
        let spec = InstanceSpec::default();
        let a = instance(&spec, 5).unwrap();
        let b = instance(&spec, 5).unwrap();
        assert_eq!(a.patch, b.patch);
        assert_eq!(a.qubo, b.qubo);
        assert_ne!(instance(&spec, 6).unwrap().patch, a.patch);
    }

    #[test]
    fn planted_code_energy_matches_objective() {
        let spec = InstanceSpec {
            mode: QuboMode::Exact,
            ..InstanceSpec::default()
        };
        let inst = instance(&spec, 1).unwrap();
        let k = inst.planted.popcount();
        assert!((1..=6).contains(&k));
        let e = inst.qubo.energy(&inst.planted).unwrap();
        let f = objective(&inst.patch, &inst.dictionary, &inst.planted, inst.lambda).unwrap();
        assert!((e - f).abs() < 1e-9);
    }

    #[test]
    fn noiseless_patch_is_exact_sum() {
        let mut rng = rng_from(0, &[]);
        let dict = random_dictionary(AtomKind::Gaussian, 9, 4, &mut rng).unwrap();
        let code = BinaryState::from_bits(vec![1, 0, 1, 0]).unwrap();
        let x = planted_patch(&dict, &code, 0.0, &mut rng).unwrap();
        for (r, v) in x.values.iter().enumerate() {
            assert!((v - dict.atom(0)[r] - dict.atom(2)[r]).abs() < 1e-15);
        }
        for n in dict.norms() {
            assert!((0.5..1.5).contains(&n));
        }
    }

    #[test]
    fn patch_batch() {
        let mut rng = rng_from(0, &[]);
        let dict = random_dictionary(AtomKind::Nonnegative { density: 0.3 }, 9, 6, &mut rng).unwrap();
        assert!(dict.atoms().iter().flatten().all(|&v| v >= 0.0));
        let patches = planted_patches(&dict, 12, 3, 0.0, 2).unwrap();
        assert_eq!(patches.len(), 12);
        assert!(patches.iter().all(|p| p.len() == 9));
    }
}
