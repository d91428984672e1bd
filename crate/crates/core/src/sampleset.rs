//! The common output type of every sampler.

use std::collections::HashMap;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::qubo::{BinaryState, QuboProblem, ENERGY_TOL};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub state: BinaryState,
    pub energy: f64,
    pub count: usize,
    /// Read index at which this state was first observed.
    pub first_read: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleMetadata {
    pub sampler: String,
    pub seed: u64,
    pub params: serde_json::Value,
    /// Wall-clock time; excluded from checksums and persisted artifacts.
    #[serde(skip)]
    pub duration: Duration,
}

impl SampleMetadata {
    pub fn new(sampler: impl Into<String>, seed: u64, params: serde_json::Value) -> Self {
        Self {
            sampler: sampler.into(),
            seed,
            params,
            duration: Duration::ZERO,
        }
    }
}

/// Distinct states with occurrence counts, sorted by ascending energy.
/// Ties are ordered by first occurrence in read order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    records: Vec<SampleRecord>,
    num_reads: usize,
    metadata: SampleMetadata,
}

impl SampleSet {
    /// Aggregate raw reads (in read order), evaluating each energy exactly.
    pub fn from_reads(
        problem: &QuboProblem,
        reads: impl IntoIterator<Item = BinaryState>,
        metadata: SampleMetadata,
    ) -> Result<Self> {
        let mut evaluated = Vec::new();
        for state in reads {
            let e = problem.energy(&state)?;
            evaluated.push((state, e));
        }
        Self::aggregate(evaluated, metadata)
    }

    /// Like [`SampleSet::from_reads`] for reads that already carry an energy;
    /// every stored energy is re-verified against the problem.
    pub fn from_evaluated(
        problem: &QuboProblem,
        reads: impl IntoIterator<Item = (BinaryState, f64)>,
        metadata: SampleMetadata,
    ) -> Result<Self> {
        let mut evaluated = Vec::new();
        for (state, stored) in reads {
            let e = problem.energy(&state)?;
            if (e - stored).abs() > ENERGY_TOL {
                return Err(Error::EnergyMismatch { stored, evaluated: e });
            }
            evaluated.push((state, e));
        }
        Self::aggregate(evaluated, metadata)
    }

    fn aggregate(reads: Vec<(BinaryState, f64)>, metadata: SampleMetadata) -> Result<Self> {
        if reads.is_empty() {
            return Err(Error::Empty("sample set needs at least one read"));
        }
        let num_reads = reads.len();
        let mut index: HashMap<BinaryState, usize> = HashMap::new();
        let mut records: Vec<SampleRecord> = Vec::new();
        for (read, (state, energy)) in reads.into_iter().enumerate() {
            match index.get(&state) {
                Some(&k) => records[k].count += 1,
                None => {
                    index.insert(state.clone(), records.len());
                    records.push(SampleRecord {
                        state,
                        energy,
                        count: 1,
                        first_read: read,
                    });
                }
            }
        }
        records.sort_by(|a, b| a.energy.total_cmp(&b.energy).then(a.first_read.cmp(&b.first_read)));
        Ok(Self {
            records,
            num_reads,
            metadata,
        })
    }

    pub fn records(&self) -> &[SampleRecord] {
        &self.records
    }

    /// Lowest-energy record; the earliest read wins exact ties.
    pub fn lowest(&self) -> &SampleRecord {
        &self.records[0]
    }

    pub fn min_energy(&self) -> f64 {
        self.records[0].energy
    }

    pub fn num_reads(&self) -> usize {
        self.num_reads
    }

    pub fn metadata(&self) -> &SampleMetadata {
        &self.metadata
    }

    pub fn set_duration(&mut self, duration: Duration) {
        self.metadata.duration = duration;
    }

    /// Number of reads whose energy is within `tol` of `target`.
    pub fn count_within(&self, target: f64, tol: f64) -> usize {
        self.records
            .iter()
            .filter(|r| (r.energy - target).abs() <= tol)
            .map(|r| r.count)
            .sum()
    }

    /// Read-weighted mean overlap of the samples with `reference`.
    pub fn mean_overlap(&self, reference: &BinaryState) -> f64 {
        let total: f64 = self
            .records
            .iter()
            .map(|r| r.count as f64 * r.state.overlap(reference))
            .sum();
        total / self.num_reads as f64
    }

    /// SHA-256 over records, read count, sampler name, seed and parameters.
    pub fn checksum(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("sample sets are always serializable");
        hex::encode(Sha256::digest(&bytes))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("sample sets are always serializable")
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("state,energy,count,first_read\n");
        for r in &self.records {
            out.push_str(&format!("{},{},{},{}\n", r.state, r.energy, r.count, r.first_read));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn problem() -> QuboProblem {
        QuboProblem::new(vec![1.0, -1.0], [((0, 1), -3.0)], 0.0).unwrap()
    }

    fn meta() -> SampleMetadata {
        SampleMetadata::new("test", 1, serde_json::json!({}))
    }

    #[test]
    fn aggregates_and_sorts() {
        let reads = ["00", "11", "01", "11", "10"].map(|s| s.parse().unwrap());
        let set = SampleSet::from_reads(&problem(), reads, meta()).unwrap();
        assert_eq!(set.num_reads(), 5);
        let energies: Vec<f64> = set.records().iter().map(|r| r.energy).collect();
        assert_eq!(energies, [-3.0, -1.0, 0.0, 1.0]);
        assert_eq!(set.lowest().count, 2);
        assert_eq!(set.lowest().first_read, 1);
        assert_eq!(set.count_within(-3.0, 1e-9), 2);
    }

    #[test]
    fn ties_keep_read_order() {
        let p = QuboProblem::new(vec![0.0; 2], [], 0.0).unwrap();
        let reads = ["10", "01", "10"].map(|s| s.parse().unwrap());
        let set = SampleSet::from_reads(&p, reads, meta()).unwrap();
        assert_eq!(set.lowest().state.to_string(), "10");
    }

    #[test]
    fn stored_energies_are_verified() {
        let s: BinaryState = "11".parse().unwrap();
        assert!(SampleSet::from_evaluated(&problem(), [(s.clone(), -3.0)], meta()).is_ok());
        let err = SampleSet::from_evaluated(&problem(), [(s, -2.5)], meta()).unwrap_err();
        assert!(matches!(err, Error::EnergyMismatch { .. }));
    }

    #[test]
    fn wrong_length_and_empty_are_rejected() {
        assert!(SampleSet::from_reads(&problem(), [BinaryState::zeros(3)], meta()).is_err());
        assert!(SampleSet::from_reads(&problem(), [], meta()).is_err());
    }

    #[test]
    fn checksum_ignores_duration() {
        let reads = ["00", "11"].map(|s| s.parse().unwrap());
        let a = SampleSet::from_reads(&problem(), reads.clone(), meta()).unwrap();
        let mut b = SampleSet::from_reads(&problem(), reads, meta()).unwrap();
        b.set_duration(Duration::from_millis(7));
        assert_eq!(a.checksum(), b.checksum());
    }
}
