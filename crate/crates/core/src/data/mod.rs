//! Cohort data model, CSV ingestion, descriptive statistics and the
//! calibrated synthetic-cohort simulator.

mod csv_io;
mod describe;
mod simulate;

pub use csv_io::{load_csv, read_csv, write_csv, CSV_HEADER};
pub use describe::{describe, CategoricalSummary, DescriptiveSummary, LevelCount, QuantitativeSummary};
pub use simulate::{simulate_cohort, DesignParams, Noise, SimulatedCohort, SimulationTruth};

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Observed gestational-age window in weeks.
pub const GA_MIN: f64 = 14.0;
pub const GA_MAX: f64 = 40.0;

/// One blood draw.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Visit {
    pub ga_weeks: f64,
    pub pcrh: f64,
}

/// One participant with subject-level covariates and ordered visits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Subject {
    pub id: String,
    pub ct_sum: u8,
    pub bmi: f64,
    pub cses: f64,
    pub dces: f64,
    pub ob_risk: u8,
    pub parity: u8,
    pub visits: Vec<Visit>,
}

impl Subject {
    /// Checks covariate ranges and visit ordering.
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::validation(None, format!("subject {}: {m}", self.id)));
        if self.ct_sum > 4 {
            return fail(format!("ct_sum {} outside 0..=4", self.ct_sum));
        }
        if self.parity > 4 {
            return fail(format!("parity {} outside 0..=4", self.parity));
        }
        if self.ob_risk > 1 {
            return fail(format!("ob_risk {} is not binary", self.ob_risk));
        }
        if !(self.bmi > 0.0 && self.bmi.is_finite()) {
            return fail(format!("bmi {} must be positive", self.bmi));
        }
        if !self.cses.is_finite() || !self.dces.is_finite() {
            return fail("non-finite covariate".into());
        }
        if self.visits.is_empty() {
            return fail("no visits".into());
        }
        for v in &self.visits {
            if !(GA_MIN..=GA_MAX).contains(&v.ga_weeks) {
                return fail(format!("ga_weeks {} outside [{GA_MIN}, {GA_MAX}]", v.ga_weeks));
            }
            if !(v.pcrh > 0.0 && v.pcrh.is_finite()) {
                return fail(format!("pcrh {} must be positive", v.pcrh));
            }
        }
        if self.visits.windows(2).any(|w| !(w[0].ga_weeks < w[1].ga_weeks)) {
            return fail("visits not strictly increasing in ga_weeks".into());
        }
        Ok(())
    }
}

/// Validated collection of subjects; iteration order is preserved everywhere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cohort {
    subjects: Vec<Subject>,
}

impl Cohort {
    pub fn new(subjects: Vec<Subject>) -> Result<Self> {
        let mut seen = HashSet::new();
        for s in &subjects {
            s.validate()?;
            if !seen.insert(s.id.as_str()) {
                return Err(Error::validation(None, format!("duplicate subject id {}", s.id)));
            }
        }
        Ok(Self { subjects })
    }

    pub fn subjects(&self) -> &[Subject] {
        &self.subjects
    }

    pub fn into_subjects(self) -> Vec<Subject> {
        self.subjects
    }

    pub fn n_subjects(&self) -> usize {
        self.subjects.len()
    }

    pub fn n_observations(&self) -> usize {
        self.subjects.iter().map(|s| s.visits.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.subjects.is_empty()
    }

    /// Same subjects in a different order (used for invariance checks).
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        let subjects = order
            .iter()
            .map(|&i| self.subjects.get(i).cloned().ok_or_else(|| Error::validation(None, "bad permutation")))
            .collect::<Result<Vec<_>>>()?;
        Self::new(subjects)
    }
}
