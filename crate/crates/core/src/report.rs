//! Per-instance result rows: ground state, best energy found, how often it was
//! hit and the sparsity of the optimum.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::coding::sparsity_label;
use crate::qubo::{BinaryState, ENERGY_TOL};
use crate::samplers::GroundStates;
use crate::sampleset::SampleSet;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub qubo_index: usize,
    pub ground_state_energy: Option<f64>,
    pub method_min_energy: f64,
    /// Reads that landed on the method's minimum.
    pub min_energy_count: usize,
    /// `"k / n"` for the exact optimum when known, otherwise for the best
    /// state the method found.
    pub optimal_sparsity: String,
}

impl ReportRow {
    pub fn new(qubo_index: usize, samples: &SampleSet, ground: Option<&GroundStates>) -> Self {
        let best = samples.lowest();
        let optimum: &BinaryState = ground.and_then(|g| g.states.first()).unwrap_or(&best.state);
        Self {
            qubo_index,
            ground_state_energy: ground.map(|g| g.energy),
            method_min_energy: best.energy,
            min_energy_count: samples.count_within(best.energy, ENERGY_TOL),
            optimal_sparsity: sparsity_label(optimum),
        }
    }

    /// `None` when no ground state is known.
    pub fn hit_optimum(&self) -> Option<bool> {
        self.ground_state_energy
            .map(|g| (self.method_min_energy - g).abs() <= ENERGY_TOL)
    }
}

pub const CSV_HEADER: &str = "qubo_index,ground_state_energy,method_min_energy,min_energy_count,optimal_sparsity";

fn csv_row(out: &mut String, row: &ReportRow, energy: impl Fn(f64) -> String) {
    let ground = row.ground_state_energy.map(&energy).unwrap_or_default();
    let _ = writeln!(
        out,
        "{},{},{},{},{}",
        row.qubo_index,
        ground,
        energy(row.method_min_energy),
        row.min_energy_count,
        row.optimal_sparsity
    );
}

/// Full-precision CSV.
pub fn to_csv(rows: &[ReportRow]) -> String {
    let mut out = format!("{CSV_HEADER}\n");
    for row in rows {
        csv_row(&mut out, row, |e| format!("{e:?}"));
    }
    out
}

/// Same columns with energies rounded to 4 decimals, for display.
pub fn to_display(rows: &[ReportRow]) -> String {
    let mut out = format!("{CSV_HEADER}\n");
    for row in rows {
        csv_row(&mut out, row, |e| format!("{e:.4}"));
    }
    out
}
