use std::collections::BTreeMap;

use crate::error::{Error, Result};

use super::QuboProblem;

/// Ising form over spins `s ∈ {-1, +1}^n`:
/// `E(s) = offset + Σ_i b_i s_i + Σ_{i<j} J_ij s_i s_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct IsingProblem {
    biases: Vec<f64>,
    couplings: BTreeMap<(usize, usize), f64>,
    offset: f64,
}

impl IsingProblem {
    pub fn new<I>(biases: Vec<f64>, pairs: I, offset: f64) -> Result<Self>
    where
        I: IntoIterator<Item = ((usize, usize), f64)>,
    {
        // Reuse the QUBO validation rules; the structure is identical.
        let q = QuboProblem::new(biases, pairs, offset)?;
        Ok(Self {
            biases: q.linear,
            couplings: q.quadratic,
            offset: q.offset,
        })
    }

    /// Substitute `a_i = (s_i + 1) / 2`.
    pub(crate) fn from_qubo(q: &QuboProblem) -> Self {
        let mut biases: Vec<f64> = q.linear().iter().map(|h| h / 2.0).collect();
        let mut offset = q.offset() + q.linear().iter().sum::<f64>() / 2.0;
        let mut couplings = BTreeMap::new();
        for ((i, j), v) in q.quadratic() {
            let quarter = v / 4.0;
            couplings.insert((i, j), quarter);
            biases[i] += quarter;
            biases[j] += quarter;
            offset += quarter;
        }
        Self {
            biases,
            couplings,
            offset,
        }
    }

    /// Substitute `s_i = 2 a_i - 1`.
    pub fn to_qubo(&self) -> QuboProblem {
        let mut linear: Vec<f64> = self.biases.iter().map(|b| 2.0 * b).collect();
        let mut offset = self.offset - self.biases.iter().sum::<f64>();
        let mut pairs = Vec::with_capacity(self.couplings.len());
        for (&(i, j), &v) in &self.couplings {
            pairs.push(((i, j), 4.0 * v));
            linear[i] -= 2.0 * v;
            linear[j] -= 2.0 * v;
            offset += v;
        }
        QuboProblem::new(linear, pairs, offset).expect("ising structure is a valid qubo structure")
    }

    pub fn n(&self) -> usize {
        self.biases.len()
    }

    pub fn biases(&self) -> &[f64] {
        &self.biases
    }

    pub fn couplings(&self) -> impl Iterator<Item = ((usize, usize), f64)> + '_ {
        self.couplings.iter().map(|(&k, &v)| (k, v))
    }

    pub fn coupling(&self, i: usize, j: usize) -> f64 {
        self.couplings.get(&(i.min(j), i.max(j))).copied().unwrap_or(0.0)
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn energy(&self, spins: &[i8]) -> Result<f64> {
        if spins.len() != self.n() {
            return Err(Error::Dimension {
                expected: self.n(),
                found: spins.len(),
            });
        }
        if spins.iter().any(|&s| s != 1 && s != -1) {
            return Err(Error::InvalidProblem("spins must be -1 or +1".into()));
        }
        let mut e = self.offset;
        for (b, &s) in self.biases.iter().zip(spins) {
            e += b * f64::from(s);
        }
        for (&(i, j), &v) in &self.couplings {
            e += v * f64::from(spins[i] * spins[j]);
        }
        Ok(e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qubo::{BinaryState, ENERGY_TOL};
    use rand::Rng;

    fn spins_of(state: &BinaryState) -> Vec<i8> {
        state.as_slice().iter().map(|&a| 2 * a as i8 - 1).collect()
    }

    #[test]
    fn single_linear_term() {
        let q = QuboProblem::new(vec![2.0], [], 0.0).unwrap();
        let ising = q.to_ising();
        assert_eq!(ising.biases(), &[1.0]);
        assert_eq!(ising.offset(), 1.0);
    }

    #[test]
    fn zero_problem_maps_to_zero() {
        let q = QuboProblem::new(vec![0.0; 3], [], 0.0).unwrap();
        let ising = q.to_ising();
        assert_eq!(ising.biases(), &[0.0; 3]);
        assert_eq!(ising.couplings().count(), 0);
        assert_eq!(ising.offset(), 0.0);
    }

    #[test]
    fn single_coupling() {
        let q = QuboProblem::new(vec![0.0, 0.0], [((0, 1), 4.0)], 0.0).unwrap();
        let ising = q.to_ising();
        assert_eq!(ising.coupling(0, 1), 1.0);
        assert_eq!(ising.biases(), &[1.0, 1.0]);
        assert_eq!(ising.offset(), 1.0);
    }

    #[test]
    fn round_trip_preserves_every_energy() {
        let mut rng = crate::seed::rng_from(5, &[]);
        for n in 1..=12usize {
            let linear = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
            let mut pairs = Vec::new();
            for i in 0..n {
                for j in (i + 1)..n {
                    if rng.random::<f64>() < 0.6 {
                        pairs.push(((i, j), rng.random_range(-3.0..3.0)));
                    }
                }
            }
            let q = QuboProblem::new(linear, pairs, rng.random_range(-1.0..1.0)).unwrap();
            let ising = q.to_ising();
            let back = ising.to_qubo();
            for w in 0..(1u64 << n) {
                let s = BinaryState::from_word(w, n);
                let eq = q.energy(&s).unwrap();
                let ei = ising.energy(&spins_of(&s)).unwrap();
                let eb = back.energy(&s).unwrap();
                assert!((eq - ei).abs() <= ENERGY_TOL, "n={n} w={w}: {eq} vs {ei}");
                assert!((eq - eb).abs() <= ENERGY_TOL, "n={n} w={w}: {eq} vs {eb}");
            }
        }
    }

    #[test]
    fn energy_rejects_non_spins() {
        let ising = IsingProblem::new(vec![1.0, 1.0], [], 0.0).unwrap();
        assert!(ising.energy(&[1, 0]).is_err());
        assert!(ising.energy(&[1]).is_err());
    }
}
