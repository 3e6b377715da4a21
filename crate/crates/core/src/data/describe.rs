use serde::{Deserialize, Serialize};

use super::Cohort;
use crate::error::{Error, Result};
use crate::numerics::{sample_skewness, Series};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelCount {
    pub level: u8,
    pub count: usize,
    pub percent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoricalSummary {
    pub variable: String,
    pub levels: Vec<LevelCount>,
}

/// Mean, range and moment skewness; skewness is `None` when undefined
/// (fewer than three values or no spread).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantitativeSummary {
    pub variable: String,
    pub n: usize,
    pub mean: f64,
    pub range: f64,
    pub skewness: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescriptiveSummary {
    pub n_subjects: usize,
    pub n_observations: usize,
    pub categorical: Vec<CategoricalSummary>,
    pub quantitative: Vec<QuantitativeSummary>,
}

impl DescriptiveSummary {
    pub fn categorical(&self, variable: &str) -> Option<&CategoricalSummary> {
        self.categorical.iter().find(|c| c.variable == variable)
    }

    pub fn quantitative(&self, variable: &str) -> Option<&QuantitativeSummary> {
        self.quantitative.iter().find(|q| q.variable == variable)
    }

    /// Plain-text rendering of both tables.
    pub fn to_table(&self) -> String {
        let mut out = format!("subjects: {}  observations: {}\n\n", self.n_subjects, self.n_observations);
        out.push_str(&format!("{:<10} {:>5} {:>7} {:>8}\n", "variable", "level", "count", "percent"));
        for c in &self.categorical {
            for l in &c.levels {
                out.push_str(&format!("{:<10} {:>5} {:>7} {:>7.1}%\n", c.variable, l.level, l.count, l.percent));
            }
        }
        out.push_str(&format!("\n{:<10} {:>6} {:>10} {:>10} {:>9}\n", "variable", "n", "mean", "range", "skewness"));
        for q in &self.quantitative {
            let skew = q.skewness.map_or_else(|| "-".to_string(), |s| format!("{s:.2}"));
            out.push_str(&format!("{:<10} {:>6} {:>10.2} {:>10.2} {:>9}\n", q.variable, q.n, q.mean, q.range, skew));
        }
        out
    }
}

/// Category counts over subjects, and mean/range/skewness for the
/// quantitative variables (pCRH and GA over all visits, the rest over subjects).
pub fn describe(cohort: &Cohort) -> Result<DescriptiveSummary> {
    if cohort.is_empty() {
        return Err(Error::EmptyCohort);
    }
    let subjects = cohort.subjects();
    let n = subjects.len();
    let categorical_of = |name: &str, levels: std::ops::RangeInclusive<u8>, get: &dyn Fn(usize) -> u8| {
        let levels = levels
            .map(|level| {
                let count = (0..n).filter(|&i| get(i) == level).count();
                LevelCount { level, count, percent: 100.0 * count as f64 / n as f64 }
            })
            .collect();
        CategoricalSummary { variable: name.to_string(), levels }
    };
    let categorical = vec![
        categorical_of("ct_sum", 0..=4, &|i| subjects[i].ct_sum),
        categorical_of("ob_risk", 0..=1, &|i| subjects[i].ob_risk),
        categorical_of("parity", 0..=4, &|i| subjects[i].parity),
    ];

    let per_subject = |f: fn(&super::Subject) -> f64| subjects.iter().map(f).collect::<Vec<_>>();
    let per_visit =
        |f: fn(&super::Visit) -> f64| subjects.iter().flat_map(|s| s.visits.iter().map(f)).collect::<Vec<_>>();
    let quantitative = vec![
        summarize("dces", per_subject(|s| s.dces))?,
        summarize("bmi", per_subject(|s| s.bmi))?,
        summarize("cses", per_subject(|s| s.cses))?,
        summarize("ga_weeks", per_visit(|v| v.ga_weeks))?,
        summarize("pcrh", per_visit(|v| v.pcrh))?,
    ];
    Ok(DescriptiveSummary { n_subjects: n, n_observations: cohort.n_observations(), categorical, quantitative })
}

fn summarize(name: &str, values: Vec<f64>) -> Result<QuantitativeSummary> {
    let s = Series::new(values)?;
    let skewness = match sample_skewness(&s) {
        Ok(v) => Some(v),
        Err(Error::DegenerateInput(_)) => None,
        Err(e) => return Err(e),
    };
    Ok(QuantitativeSummary {
        variable: name.to_string(),
        n: s.len(),
        mean: s.mean(),
        range: s.max() - s.min(),
        skewness,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Subject, Visit};

    fn subject(id: usize, ct: u8) -> Subject {
        Subject {
            id: format!("s{id}"),
            ct_sum: ct,
            bmi: 20.0 + id as f64 * 0.1,
            cses: 10.0,
            dces: 0.5,
            ob_risk: id.is_multiple_of(3) as u8,
            parity: (id % 5) as u8,
            visits: vec![Visit { ga_weeks: 20.0, pcrh: 50.0 + id as f64 }],
        }
    }

    #[test]
    fn table_four_percentages() {
        let counts = [45, 15, 13, 11, 4];
        let mut subjects = Vec::new();
        for (ct, &k) in counts.iter().enumerate() {
            for _ in 0..k {
                subjects.push(subject(subjects.len(), ct as u8));
            }
        }
        let summary = describe(&Cohort::new(subjects).unwrap()).unwrap();
        let pct: Vec<f64> =
            summary.categorical("ct_sum").unwrap().levels.iter().map(|l| (l.percent * 10.0).round() / 10.0).collect();
        assert_eq!(pct, vec![51.1, 17.0, 14.8, 12.5, 4.5]);
        for c in &summary.categorical {
            let total: f64 = c.levels.iter().map(|l| l.percent).sum();
            assert!((total - 100.0).abs() < 0.1);
        }
    }

    #[test]
    fn single_visit_cohort_has_zero_range_and_no_skewness() {
        let summary = describe(&Cohort::new(vec![subject(0, 1)]).unwrap()).unwrap();
        for q in &summary.quantitative {
            assert_eq!(q.range, 0.0);
            assert_eq!(q.skewness, None);
        }
    }

    #[test]
    fn empty_cohort_is_an_error() {
        assert!(matches!(describe(&Cohort::new(vec![]).unwrap()), Err(Error::EmptyCohort)));
    }
}
