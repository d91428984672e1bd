//! QUBO and Ising problem representations.
//!
//! A [`QuboProblem`] stores linear terms `h`, upper-triangular pair
//! couplings `Q` and a constant offset, and evaluates
//!
//! ```text
//! E(a) = offset + Σ_i h_i a_i + Σ_{i<j} Q_ij a_i a_j
//! ```
//!
//! over binary vectors `a ∈ {0,1}^n`.

mod format;
mod ising;

use std::collections::BTreeMap;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub use format::{load_qubo, parse_coo, parse_json, save_qubo, to_coo_string, to_json_string, QuboFormat};
pub use ising::IsingProblem;

/// Energy comparison tolerance used throughout the crate.
pub const ENERGY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct QuboProblem {
    linear: Vec<f64>,
    quadratic: BTreeMap<(usize, usize), f64>,
    offset: f64,
    // Symmetric adjacency view of `quadratic`, for O(deg) local fields.
    neighbors: Vec<Vec<(usize, f64)>>,
}

impl QuboProblem {
    /// Build a problem from linear terms and pair couplings.
    ///
    /// Pairs may be given in either orientation; `(j, i)` with `j > i` is
    /// folded onto `(i, j)` and repeated pairs are summed, so a full
    /// symmetric matrix can be fed in directly.
    pub fn new<I>(linear: Vec<f64>, pairs: I, offset: f64) -> Result<Self>
    where
        I: IntoIterator<Item = ((usize, usize), f64)>,
    {
        let n = linear.len();
        if n == 0 {
            return Err(Error::InvalidProblem("problem must have at least one variable".into()));
        }
        if let Some(i) = linear.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidProblem(format!("linear term {i} is not finite")));
        }
        if !offset.is_finite() {
            return Err(Error::InvalidProblem("offset is not finite".into()));
        }
        let mut quadratic = BTreeMap::new();
        for ((i, j), v) in pairs {
            if i == j {
                return Err(Error::InvalidProblem(format!(
                    "self-pair ({i}, {i}) belongs in the linear terms"
                )));
            }
            let key = (i.min(j), i.max(j));
            if key.1 >= n {
                return Err(Error::IndexOutOfRange { index: key.1, n });
            }
            if !v.is_finite() {
                return Err(Error::InvalidProblem(format!(
                    "coupling ({}, {}) is not finite",
                    key.0, key.1
                )));
            }
            *quadratic.entry(key).or_insert(0.0) += v;
        }
        Ok(Self::assemble(linear, quadratic, offset))
    }

    /// Fold a dense square matrix: the diagonal becomes `h`, and
    /// `M_ij + M_ji` becomes `Q_ij` for `i < j`. Exact zeros are dropped.
    pub fn from_dense(matrix: &[Vec<f64>], offset: f64) -> Result<Self> {
        let n = matrix.len();
        for row in matrix {
            if row.len() != n {
                return Err(Error::Dimension {
                    expected: n,
                    found: row.len(),
                });
            }
        }
        let linear = (0..n).map(|i| matrix[i][i]).collect();
        let mut pairs = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                let v = matrix[i][j] + matrix[j][i];
                if v != 0.0 {
                    pairs.push(((i, j), v));
                }
            }
        }
        Self::new(linear, pairs, offset)
    }

    fn assemble(linear: Vec<f64>, quadratic: BTreeMap<(usize, usize), f64>, offset: f64) -> Self {
        let n = linear.len();
        let mut neighbors = vec![Vec::new(); n];
        for (&(i, j), &v) in &quadratic {
            neighbors[i].push((j, v));
            neighbors[j].push((i, v));
        }
        Self {
            linear,
            quadratic,
            offset,
            neighbors,
        }
    }

    pub fn n(&self) -> usize {
        self.linear.len()
    }

    pub fn linear(&self) -> &[f64] {
        &self.linear
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// Upper-triangular couplings in ascending `(i, j)` order.
    pub fn quadratic(&self) -> impl Iterator<Item = ((usize, usize), f64)> + '_ {
        self.quadratic.iter().map(|(&k, &v)| (k, v))
    }

    pub fn num_quadratic(&self) -> usize {
        self.quadratic.len()
    }

    /// Coupling between `i` and `j` in either order; zero when absent.
    pub fn coupling(&self, i: usize, j: usize) -> f64 {
        self.quadratic.get(&(i.min(j), i.max(j))).copied().unwrap_or(0.0)
    }

    pub fn neighbors(&self, i: usize) -> &[(usize, f64)] {
        &self.neighbors[i]
    }

    /// Same problem with a different constant offset.
    pub fn with_offset(&self, offset: f64) -> Self {
        Self { offset, ..self.clone() }
    }

    /// Every coefficient and the offset multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let scale = |v: &f64| v * factor;
        Self {
            linear: self.linear.iter().map(scale).collect(),
            quadratic: self.quadratic.iter().map(|(&k, v)| (k, scale(v))).collect(),
            offset: self.offset * factor,
            neighbors: self
                .neighbors
                .iter()
                .map(|row| row.iter().map(|&(j, q)| (j, q * factor)).collect())
                .collect(),
        }
    }

    pub fn energy(&self, state: &BinaryState) -> Result<f64> {
        self.check_len(state)?;
        Ok(self.energy_bits(state.as_slice()))
    }

    /// Energy of a raw bit slice; the caller guarantees the length.
    pub(crate) fn energy_bits(&self, bits: &[u8]) -> f64 {
        let mut e = self.offset;
        for (h, &a) in self.linear.iter().zip(bits) {
            if a == 1 {
                e += h;
            }
        }
        for (&(i, j), &q) in &self.quadratic {
            if bits[i] == 1 && bits[j] == 1 {
                e += q;
            }
        }
        e
    }

    /// `h_i + Σ_{j≠i} Q_ij a_j`: the energy gained by switching bit `i` on.
    pub(crate) fn local_field(&self, bits: &[u8], i: usize) -> f64 {
        self.neighbors[i]
            .iter()
            .filter(|&&(j, _)| bits[j] == 1)
            .fold(self.linear[i], |acc, &(_, q)| acc + q)
    }

    /// Local fields for every variable at once.
    pub(crate) fn local_fields(&self, bits: &[u8]) -> Vec<f64> {
        (0..self.n()).map(|i| self.local_field(bits, i)).collect()
    }

    /// Energy change caused by flipping bit `i`, in O(deg(i)).
    pub fn delta_energy(&self, state: &BinaryState, i: usize) -> Result<f64> {
        self.check_len(state)?;
        if i >= self.n() {
            return Err(Error::IndexOutOfRange { index: i, n: self.n() });
        }
        let field = self.local_field(state.as_slice(), i);
        Ok(if state.get(i) == 0 { field } else { -field })
    }

    pub fn to_ising(&self) -> IsingProblem {
        IsingProblem::from_qubo(self)
    }

    /// Per-variable stiffness `|h_i| + Σ_j |Q_ij|`, an upper bound on the
    /// magnitude of any single flip of variable `i`.
    pub fn stiffness(&self) -> Vec<f64> {
        (0..self.n())
            .map(|i| {
                self.neighbors[i]
                    .iter()
                    .fold(self.linear[i].abs(), |acc, &(_, q)| acc + q.abs())
            })
            .collect()
    }

    /// Smallest nonzero coefficient magnitude touching each variable,
    /// `None` for a variable with no nonzero terms.
    pub fn min_nonzero_flip(&self) -> Vec<Option<f64>> {
        (0..self.n())
            .map(|i| {
                std::iter::once(self.linear[i])
                    .chain(self.neighbors[i].iter().map(|&(_, q)| q))
                    .map(f64::abs)
                    .filter(|&v| v > 0.0)
                    .min_by(f64::total_cmp)
            })
            .collect()
    }

    fn check_len(&self, state: &BinaryState) -> Result<()> {
        if state.len() != self.n() {
            return Err(Error::Dimension {
                expected: self.n(),
                found: state.len(),
            });
        }
        Ok(())
    }
}

/// A binary assignment `a ∈ {0,1}^n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BinaryState(Vec<u8>);

impl BinaryState {
    pub fn zeros(n: usize) -> Self {
        Self(vec![0; n])
    }

    pub fn ones(n: usize) -> Self {
        Self(vec![1; n])
    }

    pub fn from_bits(bits: Vec<u8>) -> Result<Self> {
        if let Some(pos) = bits.iter().position(|&b| b > 1) {
            return Err(Error::InvalidProblem(format!(
                "state entry {pos} is {}, expected 0 or 1",
                bits[pos]
            )));
        }
        Ok(Self(bits))
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        Self(bits.iter().map(|&b| b as u8).collect())
    }

    /// Low `n` bits of `word`, bit 0 first.
    pub fn from_word(word: u64, n: usize) -> Self {
        Self((0..n).map(|i| ((word >> i) & 1) as u8).collect())
    }

    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        Self((0..n).map(|_| rng.random::<bool>() as u8).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, i: usize) -> u8 {
        self.0[i]
    }

    pub fn is_set(&self, i: usize) -> bool {
        self.0[i] == 1
    }

    pub fn flip(&mut self, i: usize) {
        self.0[i] ^= 1;
    }

    pub fn flipped(&self, i: usize) -> Self {
        let mut s = self.clone();
        s.flip(i);
        s
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.0
    }

    /// Number of ones.
    pub fn popcount(&self) -> usize {
        self.0.iter().filter(|&&b| b == 1).count()
    }

    /// Indices of active bits.
    pub fn active(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().enumerate().filter(|(_, &b)| b == 1).map(|(i, _)| i)
    }

    /// Fraction of positions on which the two states agree.
    pub fn overlap(&self, other: &BinaryState) -> f64 {
        assert_eq!(self.len(), other.len(), "overlap of states with different lengths");
        let same = self.0.iter().zip(&other.0).filter(|(a, b)| a == b).count();
        same as f64 / self.len() as f64
    }

    pub fn into_inner(self) -> Vec<u8> {
        self.0
    }
}

impl fmt::Display for BinaryState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b == 1 { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl std::str::FromStr for BinaryState {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                other => Err(Error::Format(format!("invalid bit character {other:?}"))),
            })
            .collect::<Result<Vec<u8>>>()
            .map(BinaryState)
    }
}

impl Serialize for BinaryState {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BinaryState {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
