//! End-to-end drivers for each study: spectroscopy, iSWAP, hold and ramp sweeps,
//! loading contours, probe scans and the Ramsey/Stark protocol.

mod evolve;
mod hold;
mod iswap;
mod probe;
mod ramp;
mod ramsey;
mod spectrum;
mod system;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::Diagnostics;
use crate::error::{Error, Result};

pub use evolve::{run_evolve, EvolveSettings};
pub use hold::{hold_sweep, HoldSettings};
pub use iswap::{run_iswap, IswapSettings, Timing};
pub use probe::{probe_scan, ProbeSettings};
pub use ramp::{loading_contour, ramp_sweep, RampSettings};
pub use ramsey::{ramsey_run, stark_sweep, RamseySettings};
pub use spectrum::{
    avoided_crossing_gap, filter_spectrum, qubit_filter_spectrum, QubitSweep, SpectrumSettings,
};
pub use system::{frame_reference, standard_observables, PreparedSystem, Run};

/// Spacing of a sweep grid.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    #[default]
    Linear,
}

/// Uniform grid over one named parameter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub parameter: String,
    pub min: f64,
    pub max: f64,
    pub npoints: usize,
    #[serde(default)]
    pub scale: Scale,
}

impl SweepSpec {
    pub fn linear(parameter: &str, min: f64, max: f64, npoints: usize) -> Self {
        Self {
            parameter: parameter.to_string(),
            min,
            max,
            npoints,
            scale: Scale::Linear,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.min.is_finite() || !self.max.is_finite() || !(self.max > self.min) {
            return Err(Error::param(
                format!("sweep {}.max", self.parameter),
                "> min",
            ));
        }
        if self.npoints < 2 {
            return Err(Error::param(
                format!("sweep {}.npoints", self.parameter),
                ">= 2",
            ));
        }
        Ok(())
    }

    /// Grid values; the end points are exact.
    pub fn values(&self) -> Vec<f64> {
        let n = self.npoints;
        let step = (self.max - self.min) / (n - 1) as f64;
        (0..n)
            .map(|i| {
                if i + 1 == n {
                    self.max
                } else {
                    self.min + i as f64 * step
                }
            })
            .collect()
    }

    pub fn step(&self) -> f64 {
        (self.max - self.min) / (self.npoints - 1) as f64
    }
}

/// Named numeric column.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Column {
    pub name: String,
    pub values: Vec<f64>,
}

/// Equal-length columns written as one CSV file.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<Column>,
}

impl Table {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            columns: vec![],
        }
    }

    /// Appends a column; its length must match the existing ones.
    pub fn with(mut self, name: impl Into<String>, values: Vec<f64>) -> Self {
        self.push(name, values);
        self
    }

    pub fn push(&mut self, name: impl Into<String>, values: Vec<f64>) {
        let name = name.into();
        if let Some(first) = self.columns.first() {
            assert_eq!(
                first.values.len(),
                values.len(),
                "column {name} length differs in table {}",
                self.name
            );
        }
        self.columns.push(Column { name, values });
    }

    pub fn len(&self) -> usize {
        self.columns.first().map_or(0, |c| c.values.len())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.columns
            .iter()
            .find(|c| c.name == name)
            .map(|c| c.values.as_slice())
    }
}

/// Worst-case numerical health over all evolutions of an experiment.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct InvariantReport {
    pub runs: usize,
    /// `max |‖ψ‖ − 1|` over closed-system (ket) runs.
    pub max_norm_drift: f64,
    /// `max |tr ρ − 1|` over density-matrix runs.
    pub max_trace_drift: f64,
    pub max_hermiticity_dev: f64,
    /// `max |⟨N⟩(t) − ⟨N⟩(0)|` over runs without loss or probe.
    pub max_number_drift: f64,
    pub positivity_warnings: usize,
}

impl InvariantReport {
    pub fn record(&mut self, diag: &Diagnostics, density: bool, number_drift: Option<f64>) {
        self.runs += 1;
        if density {
            self.max_trace_drift = self.max_trace_drift.max(diag.max_norm_drift);
        } else {
            self.max_norm_drift = self.max_norm_drift.max(diag.max_norm_drift);
        }
        self.max_hermiticity_dev = self.max_hermiticity_dev.max(diag.max_hermiticity_dev);
        if let Some(d) = number_drift {
            self.max_number_drift = self.max_number_drift.max(d);
        }
        self.positivity_warnings += diag.positivity_warnings;
    }

    pub fn merge(&mut self, other: &InvariantReport) {
        self.runs += other.runs;
        self.max_norm_drift = self.max_norm_drift.max(other.max_norm_drift);
        self.max_trace_drift = self.max_trace_drift.max(other.max_trace_drift);
        self.max_hermiticity_dev = self.max_hermiticity_dev.max(other.max_hermiticity_dev);
        self.max_number_drift = self.max_number_drift.max(other.max_number_drift);
        self.positivity_warnings += other.positivity_warnings;
    }
}

/// Output of one experiment driver.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentResult {
    pub kind: String,
    pub tables: Vec<Table>,
    /// Headline numbers, in insertion order.
    pub scalars: Vec<(String, f64)>,
    pub invariants: InvariantReport,
    /// Resolved settings of the driver.
    pub metadata: serde_json::Value,
}

impl ExperimentResult {
    pub fn new(kind: &str, metadata: serde_json::Value) -> Self {
        Self {
            kind: kind.to_string(),
            tables: vec![],
            scalars: vec![],
            invariants: InvariantReport::default(),
            metadata,
        }
    }

    pub fn scalar(&self, name: &str) -> Option<f64> {
        self.scalars
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| *v)
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub(crate) fn push_scalar(&mut self, name: impl Into<String>, v: f64) {
        self.scalars.push((name.into(), v));
    }
}

/// Order-preserving parallel map; the first error (in input order) wins.
pub(crate) fn par_map<T, R, F>(items: &[T], f: F) -> Result<Vec<R>>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> Result<R> + Sync + Send,
{
    items
        .par_iter()
        .map(f)
        .collect::<Vec<_>>()
        .into_iter()
        .collect()
}
