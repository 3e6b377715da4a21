//! Synthetic cohorts whose covariate marginals follow the published
//! descriptive tables and whose responses follow the mixed model exactly.

use serde::{Deserialize, Serialize};

use super::{Cohort, Subject, Visit, GA_MAX, GA_MIN};
use crate::design::{FixedTerm, DEFAULT_KNOT};
use crate::error::{Error, Result};
use crate::numerics::{normal_cdf, normal_pdf, RngState};

/// CT-Sum counts 0..=4 out of 88.
pub const CT_SUM_COUNTS: [f64; 5] = [45.0, 15.0, 13.0, 11.0, 4.0];
/// Parity counts 0..=4 out of 88.
pub const PARITY_COUNTS: [f64; 5] = [35.0, 34.0, 11.0, 6.0, 2.0];
/// High obstetric risk proportion.
pub const OB_RISK_RATE: f64 = 28.0 / 88.0;

const BMI_MEAN: f64 = 24.56;
const BMI_SD: f64 = 5.5;
const BMI_SKEW: f64 = 1.15;
const CSES_MEAN: f64 = 11.50;
const CSES_SD: f64 = 2.8;
const CSES_BOUNDS: (f64, f64) = (0.0, 15.0);
const DCES_MEAN: f64 = 0.65;
const DCES_SD: f64 = 0.45;
const DCES_BOUNDS: (f64, f64) = (0.0, 3.0);

/// Residual error family used when generating responses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Noise {
    Normal,
    /// Student-t errors scaled by `sigma_eps`; heavy-tailed misspecification.
    StudentT(f64),
}

/// Generating parameters for a synthetic cohort.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationTruth {
    pub terms: Vec<FixedTerm>,
    pub beta: Vec<f64>,
    pub tau1_sq: f64,
    /// Random GA-slope variance; zero for the random-intercept model.
    pub tau2_sq: f64,
    pub sigma_eps_sq: f64,
    pub noise: Noise,
}

impl SimulationTruth {
    /// Random-intercept truth with the frequentist point estimates of the
    /// interaction model as coefficients.
    pub fn interaction() -> Self {
        use FixedTerm::*;
        Self {
            terms: vec![Intercept, Ga, CtSum, CtSumGa, Bmi, Cses, Dces, ObRisk, Parity],
            beta: vec![1.750, 0.142, -0.088, 0.005, -0.021, -0.018, -0.093, 0.035, -0.076],
            tau1_sq: 0.40 * 0.40,
            tau2_sq: 0.0,
            sigma_eps_sq: 0.25 * 0.25,
            noise: Noise::Normal,
        }
    }

    /// Piecewise truth: extra slope after week 20.
    pub fn piecewise() -> Self {
        use FixedTerm::*;
        Self {
            terms: vec![Intercept, Ga, CtSum, CtSumGa, Bmi, Cses, Dces, ObRisk, Parity, Hinge(DEFAULT_KNOT)],
            beta: vec![3.729, 0.032, -0.107, 0.005, -0.020, -0.020, -0.084, 0.039, -0.078, 0.127],
            ..Self::interaction()
        }
    }

    pub fn coefficient(&self, term: FixedTerm) -> Option<f64> {
        self.terms.iter().position(|t| *t == term).map(|i| self.beta[i])
    }

    fn validate(&self) -> Result<()> {
        if self.terms.len() != self.beta.len() {
            return Err(Error::Domain("one coefficient per term required".into()));
        }
        for (name, v) in [("tau1_sq", self.tau1_sq), ("tau2_sq", self.tau2_sq), ("sigma_eps_sq", self.sigma_eps_sq)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Domain(format!("{name} = {v} must be a non-negative variance")));
            }
        }
        if self.beta.iter().any(|b| !b.is_finite()) {
            return Err(Error::Domain("non-finite coefficient".into()));
        }
        if let Noise::StudentT(df) = self.noise {
            if !(df > 0.0) {
                return Err(Error::Domain(format!("t noise with df={df}")));
            }
        }
        Ok(())
    }
}

/// Cohort size and visit schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DesignParams {
    pub n_subjects: usize,
    pub visits_min: usize,
    pub visits_max: usize,
}

impl Default for DesignParams {
    fn default() -> Self {
        Self { n_subjects: 88, visits_min: 3, visits_max: 5 }
    }
}

/// A simulated cohort together with the realized random effects.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulatedCohort {
    pub cohort: Cohort,
    pub random_intercepts: Vec<f64>,
    pub random_slopes: Vec<f64>,
    pub seed: u64,
}

/// Draws covariates from the calibrated marginals, visit ages uniformly on
/// `[14, 40]`, and `ln(pCRH) = Xβ + b₁ + b₂·GA + ε`.
pub fn simulate_cohort(truth: &SimulationTruth, design: &DesignParams, seed: u64) -> Result<SimulatedCohort> {
    truth.validate()?;
    if design.visits_min == 0 || design.visits_min > design.visits_max {
        return Err(Error::Domain(format!("visits range {}..={}", design.visits_min, design.visits_max)));
    }
    let mut rng = RngState::new(seed);
    let bmi = ShiftedLogNormal::from_moments(BMI_MEAN, BMI_SD, BMI_SKEW);
    let cses = TruncatedNormal::with_mean(CSES_MEAN, CSES_SD, CSES_BOUNDS);
    let dces = TruncatedNormal::with_mean(DCES_MEAN, DCES_SD, DCES_BOUNDS);
    let tau1 = truth.tau1_sq.sqrt();
    let tau2 = truth.tau2_sq.sqrt();
    let sigma = truth.sigma_eps_sq.sqrt();

    let mut subjects = Vec::with_capacity(design.n_subjects);
    let mut b1s = Vec::with_capacity(design.n_subjects);
    let mut b2s = Vec::with_capacity(design.n_subjects);
    for i in 0..design.n_subjects {
        let ct_sum = rng.categorical(&CT_SUM_COUNTS) as u8;
        let ob_risk = rng.bernoulli(OB_RISK_RATE) as u8;
        let parity = rng.categorical(&PARITY_COUNTS) as u8;
        let mut subject = Subject {
            id: format!("S{:03}", i + 1),
            ct_sum,
            bmi: bmi.sample(&mut rng),
            cses: cses.sample(&mut rng),
            dces: dces.sample(&mut rng),
            ob_risk,
            parity,
            visits: Vec::new(),
        };
        let n_visits = rng.uniform_int(design.visits_min, design.visits_max);
        let mut ages: Vec<f64> = (0..n_visits).map(|_| rng.uniform_range(GA_MIN, GA_MAX)).collect();
        ages.sort_by(f64::total_cmp);
        ages.dedup();

        let b1 = tau1 * rng.standard_normal();
        let b2 = tau2 * rng.standard_normal();
        for ga in ages {
            let probe = Visit { ga_weeks: ga, pcrh: 1.0 };
            let mean: f64 = truth.terms.iter().zip(&truth.beta).map(|(t, b)| b * t.value(&subject, &probe)).sum();
            let eps = match truth.noise {
                Noise::Normal => sigma * rng.standard_normal(),
                Noise::StudentT(df) => sigma * rng.student_t(df),
            };
            let log_pcrh = mean + b1 + b2 * ga + eps;
            if !log_pcrh.exp().is_normal() {
                return Err(Error::Domain(format!("simulated log pCRH {log_pcrh:.3e} is not representable")));
            }
            subject.visits.push(Visit { ga_weeks: ga, pcrh: log_pcrh.exp() });
        }
        b1s.push(b1);
        b2s.push(b2);
        subjects.push(subject);
    }
    Ok(SimulatedCohort { cohort: Cohort::new(subjects)?, random_intercepts: b1s, random_slopes: b2s, seed })
}

/// `shift + exp(μ + s·Z)` matched to a mean, sd and skewness.
struct ShiftedLogNormal {
    shift: f64,
    mu: f64,
    s: f64,
}

impl ShiftedLogNormal {
    fn from_moments(mean: f64, sd: f64, skew: f64) -> Self {
        // lognormal skewness (w + 2)·sqrt(w − 1) with w = exp(s²) is increasing in w
        let (mut lo, mut hi) = (1.0 + 1e-12, 10.0f64);
        for _ in 0..200 {
            let w = 0.5 * (lo + hi);
            if (w + 2.0) * (w - 1.0).sqrt() < skew {
                lo = w;
            } else {
                hi = w;
            }
        }
        let w = 0.5 * (lo + hi);
        let s = w.ln().sqrt();
        let ln_mean = sd / (w - 1.0).sqrt();
        let mu = ln_mean.ln() - 0.5 * s * s;
        Self { shift: mean - ln_mean, mu, s }
    }

    fn sample(&self, rng: &mut RngState) -> f64 {
        self.shift + (self.mu + self.s * rng.standard_normal()).exp()
    }
}

/// Normal restricted to `[lo, hi]`, located so the truncated mean hits a target.
struct TruncatedNormal {
    loc: f64,
    sd: f64,
    lo: f64,
    hi: f64,
}

impl TruncatedNormal {
    fn with_mean(target: f64, sd: f64, (lo, hi): (f64, f64)) -> Self {
        let truncated_mean = |loc: f64| {
            let a = (lo - loc) / sd;
            let b = (hi - loc) / sd;
            loc + sd * (normal_pdf(a) - normal_pdf(b)) / (normal_cdf(b) - normal_cdf(a))
        };
        // truncated mean is increasing in the location
        let (mut l, mut h) = (lo - 5.0 * sd, hi + 5.0 * sd);
        for _ in 0..200 {
            let m = 0.5 * (l + h);
            if truncated_mean(m) < target {
                l = m;
            } else {
                h = m;
            }
        }
        Self { loc: 0.5 * (l + h), sd, lo, hi }
    }

    fn sample(&self, rng: &mut RngState) -> f64 {
        loop {
            let x = self.loc + self.sd * rng.standard_normal();
            if (self.lo..=self.hi).contains(&x) {
                return x;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::describe;
    use crate::numerics::{sample_skewness, Series};

    #[test]
    fn noise_free_responses_equal_linear_predictor() {
        let truth = SimulationTruth { tau1_sq: 0.0, sigma_eps_sq: 0.0, ..SimulationTruth::interaction() };
        let sim = simulate_cohort(&truth, &DesignParams { n_subjects: 20, ..Default::default() }, 4).unwrap();
        for s in sim.cohort.subjects() {
            for v in &s.visits {
                let xb: f64 = truth.terms.iter().zip(&truth.beta).map(|(t, b)| b * t.value(s, v)).sum();
                assert!((v.pcrh.ln() - xb).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn same_seed_same_cohort() {
        let t = SimulationTruth::interaction();
        let d = DesignParams::default();
        assert_eq!(simulate_cohort(&t, &d, 9).unwrap(), simulate_cohort(&t, &d, 9).unwrap());
        assert_ne!(simulate_cohort(&t, &d, 9).unwrap(), simulate_cohort(&t, &d, 10).unwrap());
    }

    #[test]
    fn negative_variance_rejected() {
        let t = SimulationTruth { tau1_sq: -1.0, ..SimulationTruth::interaction() };
        assert!(matches!(simulate_cohort(&t, &DesignParams::default(), 0), Err(Error::Domain(_))));
    }

    #[test]
    fn default_cohort_matches_calibration_targets() {
        let sim = simulate_cohort(&SimulationTruth::interaction(), &DesignParams::default(), 0).unwrap();
        assert_eq!(sim.cohort.n_subjects(), 88);
        let summary = describe(&sim.cohort).unwrap();
        let ct = summary.categorical("ct_sum").unwrap();
        for (level, &count) in ct.levels.iter().zip(&CT_SUM_COUNTS) {
            assert!((level.percent - 100.0 * count / 88.0).abs() <= 10.0, "{level:?}");
        }
        let ga = summary.quantitative("ga_weeks").unwrap();
        assert!((24.0..=29.0).contains(&ga.mean), "GA mean {}", ga.mean);
        let pcrh = summary.quantitative("pcrh").unwrap();
        assert!(pcrh.skewness.unwrap() > 1.0, "pCRH skewness {:?}", pcrh.skewness);
        assert!(sim.cohort.subjects().iter().flat_map(|s| &s.visits).all(|v| v.pcrh > 0.0));
    }

    #[test]
    fn large_cohort_reproduces_category_probabilities() {
        let d = DesignParams { n_subjects: 10_000, visits_min: 1, visits_max: 1 };
        let sim = simulate_cohort(&SimulationTruth::interaction(), &d, 1).unwrap();
        let summary = describe(&sim.cohort).unwrap();
        let check = |name: &str, targets: &[f64]| {
            let total: f64 = targets.iter().sum();
            for (l, &t) in summary.categorical(name).unwrap().levels.iter().zip(targets) {
                assert!((l.percent - 100.0 * t / total).abs() <= 1.5, "{name} {l:?}");
            }
        };
        check("ct_sum", &CT_SUM_COUNTS);
        check("parity", &PARITY_COUNTS);
        check("ob_risk", &[60.0, 28.0]);
        let bmi: Vec<f64> = sim.cohort.subjects().iter().map(|s| s.bmi).collect();
        let bmi = Series::new(bmi).unwrap();
        assert!((bmi.mean() - BMI_MEAN).abs() < 0.2);
        assert!((sample_skewness(&bmi).unwrap() - BMI_SKEW).abs() < 0.2);
        let cses = summary.quantitative("cses").unwrap();
        assert!((cses.mean - CSES_MEAN).abs() < 0.1);
        let dces = summary.quantitative("dces").unwrap();
        assert!((dces.mean - DCES_MEAN).abs() < 0.02);
    }
}
