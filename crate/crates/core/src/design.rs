//! Model specifications and their fixed/random design matrices.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::{Cohort, Subject, Visit, GA_MIN};
use crate::error::{Error, Result};
use crate::numerics::{first_dependent_column, Matrix, TOLERANCES};
use crate::scalar::Real;

/// Default knot for the hinge term, in weeks.
pub const DEFAULT_KNOT: f64 = 20.0;

/// A fixed-effect column.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum FixedTerm {
    Intercept,
    Ga,
    CtSum,
    CtSumGa,
    Bmi,
    Cses,
    Dces,
    ObRisk,
    Parity,
    /// `max(GA - knot, 0)`: extra slope after the knot.
    Hinge(f64),
    /// `1{GA > knot}`: intercept jump after the knot.
    Jump(f64),
}

impl FixedTerm {
    /// Covariate value of this column for one visit.
    pub fn value(&self, subject: &Subject, visit: &Visit) -> f64 {
        let ga = visit.ga_weeks;
        match *self {
            FixedTerm::Intercept => 1.0,
            FixedTerm::Ga => ga,
            FixedTerm::CtSum => subject.ct_sum as f64,
            FixedTerm::CtSumGa => subject.ct_sum as f64 * ga,
            FixedTerm::Bmi => subject.bmi,
            FixedTerm::Cses => subject.cses,
            FixedTerm::Dces => subject.dces,
            FixedTerm::ObRisk => subject.ob_risk as f64,
            FixedTerm::Parity => subject.parity as f64,
            FixedTerm::Hinge(k) => (ga - k).max(0.0),
            FixedTerm::Jump(k) => {
                if ga > k {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    pub fn label(&self) -> String {
        match *self {
            FixedTerm::Intercept => "Intercept".into(),
            FixedTerm::Ga => "GA".into(),
            FixedTerm::CtSum => "CT-Sum".into(),
            FixedTerm::CtSumGa => "CT-Sum*GA".into(),
            FixedTerm::Bmi => "BMI".into(),
            FixedTerm::Cses => "CSES".into(),
            FixedTerm::Dces => "DCES".into(),
            FixedTerm::ObRisk => "OB-risk".into(),
            FixedTerm::Parity => "Parity".into(),
            FixedTerm::Hinge(k) => format!("(GA-{})+", fmt_knot(k)),
            FixedTerm::Jump(k) => format!("1(GA>{})", fmt_knot(k)),
        }
    }

    fn token(&self) -> String {
        match *self {
            FixedTerm::Intercept => "1".into(),
            FixedTerm::Ga => "GA".into(),
            FixedTerm::CtSum => "CT".into(),
            FixedTerm::CtSumGa => "CT:GA".into(),
            FixedTerm::Bmi => "BMI".into(),
            FixedTerm::Cses => "CSES".into(),
            FixedTerm::Dces => "DCES".into(),
            FixedTerm::ObRisk => "OB".into(),
            FixedTerm::Parity => "PAR".into(),
            FixedTerm::Hinge(k) => format!("hinge@{}", fmt_knot(k)),
            FixedTerm::Jump(k) => format!("jump@{}", fmt_knot(k)),
        }
    }

    fn same_kind(&self, other: &FixedTerm) -> bool {
        std::mem::discriminant(self) == std::mem::discriminant(other)
    }
}

fn fmt_knot(k: f64) -> String {
    if k.fract() == 0.0 {
        format!("{k:.0}")
    } else {
        k.to_string()
    }
}

/// A random-effect column of `Z`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RandomTerm {
    Intercept,
    GaSlope,
}

impl RandomTerm {
    pub fn value(&self, visit: &Visit) -> f64 {
        match self {
            RandomTerm::Intercept => 1.0,
            RandomTerm::GaSlope => visit.ga_weeks,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            RandomTerm::Intercept => "Intercept",
            RandomTerm::GaSlope => "GA",
        }
    }
}

/// Declarative model: ordered fixed terms plus random terms.
///
/// Text form: `fixed=1+GA+CT+CT:GA+BMI+CSES+DCES+OB+PAR random=1`, with
/// optional `+hinge@20` / `+jump@20` fixed terms and `random=1+GA`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub fixed: Vec<FixedTerm>,
    pub random: Vec<RandomTerm>,
}

impl ModelSpec {
    pub fn new(fixed: Vec<FixedTerm>, random: Vec<RandomTerm>) -> Result<Self> {
        let spec = Self { fixed, random };
        spec.validate()?;
        Ok(spec)
    }

    /// All covariates plus the CT-Sum×GA interaction, random intercept.
    pub fn random_intercept() -> Self {
        use FixedTerm::*;
        Self {
            fixed: vec![Intercept, Ga, CtSum, CtSumGa, Bmi, Cses, Dces, ObRisk, Parity],
            random: vec![RandomTerm::Intercept],
        }
    }

    /// Same fixed effects with a random intercept and random GA slope.
    pub fn random_slope() -> Self {
        Self { random: vec![RandomTerm::Intercept, RandomTerm::GaSlope], ..Self::random_intercept() }
    }

    /// Random-intercept model with an extra slope after `knot`.
    pub fn hinge(knot: f64) -> Self {
        let mut s = Self::random_intercept();
        s.fixed.push(FixedTerm::Hinge(knot));
        s
    }

    pub fn with_fixed(mut self, term: FixedTerm) -> Result<Self> {
        self.fixed.push(term);
        self.validate()?;
        Ok(self)
    }

    pub fn without_fixed(mut self, pred: impl Fn(&FixedTerm) -> bool) -> Result<Self> {
        self.fixed.retain(|t| !pred(t));
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.fixed.contains(&FixedTerm::Intercept) {
            return Err(Error::InvalidSpec("fixed effects must include the intercept".into()));
        }
        if self.random.is_empty() {
            return Err(Error::InvalidSpec("at least one random term is required".into()));
        }
        for (i, t) in self.fixed.iter().enumerate() {
            if self.fixed[..i].iter().any(|u| u.same_kind(t)) {
                return Err(Error::InvalidSpec(format!("fixed term {} listed twice", t.token())));
            }
            if let FixedTerm::Hinge(k) | FixedTerm::Jump(k) = *t {
                if !(k > GA_MIN) || !k.is_finite() {
                    return Err(Error::InvalidSpec(format!("knot {k} must exceed {GA_MIN}")));
                }
            }
        }
        for (i, r) in self.random.iter().enumerate() {
            if self.random[..i].contains(r) {
                return Err(Error::InvalidSpec(format!("random term {} listed twice", r.label())));
            }
        }
        Ok(())
    }

    pub fn fixed_labels(&self) -> Vec<String> {
        self.fixed.iter().map(FixedTerm::label).collect()
    }

    pub fn has_random_slope(&self) -> bool {
        self.random.contains(&RandomTerm::GaSlope)
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let fixed: Vec<String> = self.fixed.iter().map(FixedTerm::token).collect();
        let random: Vec<&str> = self
            .random
            .iter()
            .map(|r| match r {
                RandomTerm::Intercept => "1",
                RandomTerm::GaSlope => "GA",
            })
            .collect();
        write!(f, "fixed={} random={}", fixed.join("+"), random.join("+"))
    }
}

impl FromStr for ModelSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        // a named model optionally followed by extra fixed terms: `model4+jump@20`
        let mut tokens = s.split('+');
        let base = match tokens.next().unwrap_or("") {
            "model4" | "intercept" => Some(Self::random_intercept()),
            "model2" | "slope" => Some(Self::random_slope()),
            "model5" | "hinge" => Some(Self::hinge(DEFAULT_KNOT)),
            _ => None,
        };
        if let Some(mut spec) = base {
            for t in tokens {
                spec = spec.with_fixed(parse_fixed(t)?)?;
            }
            return Ok(spec);
        }
        let mut fixed_part = None;
        let mut random_part = None;
        for part in s.split_whitespace() {
            if let Some(v) = part.strip_prefix("fixed=") {
                fixed_part = Some(v);
            } else if let Some(v) = part.strip_prefix("random=") {
                random_part = Some(v);
            } else {
                return Err(Error::InvalidSpec(format!("unexpected `{part}`")));
            }
        }
        let fixed_part = fixed_part.ok_or_else(|| Error::InvalidSpec("missing fixed=".into()))?;
        let random_part = random_part.unwrap_or("1");
        let fixed = fixed_part.split('+').filter(|t| !t.is_empty()).map(parse_fixed).collect::<Result<Vec<_>>>()?;
        let random = random_part
            .split('+')
            .filter(|t| !t.is_empty())
            .map(|t| match t {
                "1" => Ok(RandomTerm::Intercept),
                "GA" | "ga" => Ok(RandomTerm::GaSlope),
                other => Err(Error::InvalidSpec(format!("unknown random term `{other}`"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(fixed, random)
    }
}

fn parse_knot(rest: &str) -> Result<f64> {
    if rest.is_empty() {
        return Ok(DEFAULT_KNOT);
    }
    let k = rest.strip_prefix('@').ok_or_else(|| Error::InvalidSpec(format!("bad knot `{rest}`")))?;
    k.parse().map_err(|_| Error::InvalidSpec(format!("bad knot `{k}`")))
}

fn parse_fixed(token: &str) -> Result<FixedTerm> {
    use FixedTerm::*;
    Ok(match token {
        "1" | "intercept" => Intercept,
        "GA" => Ga,
        "CT" => CtSum,
        "CT:GA" | "GA:CT" => CtSumGa,
        "BMI" => Bmi,
        "CSES" => Cses,
        "DCES" => Dces,
        "OB" => ObRisk,
        "PAR" => Parity,
        t if t.starts_with("hinge") => Hinge(parse_knot(&t["hinge".len()..])?),
        t if t.starts_with("jump") => Jump(parse_knot(&t["jump".len()..])?),
        other => return Err(Error::InvalidSpec(format!("unknown fixed term `{other}`"))),
    })
}

/// Realized response, fixed design `X` and random design `Z`.
///
/// Rows follow cohort iteration order: subject by subject, visits ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrices<T> {
    pub y: Vec<T>,
    pub x: Matrix<T>,
    pub z: Matrix<T>,
    /// Row range of each subject.
    pub groups: Vec<Range<usize>>,
    pub subject_ids: Vec<String>,
    pub fixed_labels: Vec<String>,
    pub random_labels: Vec<String>,
    pub spec: Option<ModelSpec>,
}

impl<T: Real> DesignMatrices<T> {
    /// Assembles a design from raw parts (rows must be grouped contiguously).
    pub fn from_parts(
        y: Vec<T>,
        x: Matrix<T>,
        z: Matrix<T>,
        group_sizes: &[usize],
        fixed_labels: Vec<String>,
        random_labels: Vec<String>,
    ) -> Result<Self> {
        let n = y.len();
        if x.rows() != n || z.rows() != n || group_sizes.iter().sum::<usize>() != n {
            return Err(Error::DimensionMismatch("y, X, Z and group sizes disagree".into()));
        }
        if fixed_labels.len() != x.cols() || random_labels.len() != z.cols() {
            return Err(Error::DimensionMismatch("label count".into()));
        }
        if group_sizes.contains(&0) {
            return Err(Error::DimensionMismatch("empty group".into()));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("non-finite response".into()));
        }
        let mut groups = Vec::with_capacity(group_sizes.len());
        let mut start = 0;
        for &g in group_sizes {
            groups.push(start..start + g);
            start += g;
        }
        let subject_ids = (0..group_sizes.len()).map(|i| format!("g{i}")).collect();
        let dm = Self { y, x, z, groups, subject_ids, fixed_labels, random_labels, spec: None };
        dm.check_rank()?;
        Ok(dm)
    }

    /// The same design in another scalar type.
    pub fn cast<U: Real>(&self) -> DesignMatrices<U> {
        DesignMatrices {
            y: self.y.iter().map(|v| U::lit(v.as_f64())).collect(),
            x: self.x.cast(),
            z: self.z.cast(),
            groups: self.groups.clone(),
            subject_ids: self.subject_ids.clone(),
            fixed_labels: self.fixed_labels.clone(),
            random_labels: self.random_labels.clone(),
            spec: self.spec.clone(),
        }
    }

    pub fn n_obs(&self) -> usize {
        self.y.len()
    }

    pub fn n_fixed(&self) -> usize {
        self.x.cols()
    }

    pub fn n_random(&self) -> usize {
        self.z.cols()
    }

    pub fn n_subjects(&self) -> usize {
        self.groups.len()
    }

    /// Subject index of every row.
    pub fn subject_of_rows(&self) -> Vec<usize> {
        let mut out = vec![0; self.n_obs()];
        for (i, g) in self.groups.iter().enumerate() {
            out[g.clone()].iter_mut().for_each(|v| *v = i);
        }
        out
    }

    pub fn column_index(&self, label: &str) -> Option<usize> {
        self.fixed_labels.iter().position(|l| l == label)
    }

    fn check_rank(&self) -> Result<()> {
        if self.n_obs() <= self.n_fixed() {
            return Err(Error::RankDeficient {
                column: format!("{} observations for {} columns", self.n_obs(), self.n_fixed()),
            });
        }
        match first_dependent_column(&self.x.gram(), TOLERANCES.rank) {
            None => Ok(()),
            Some(c) => Err(Error::RankDeficient { column: self.fixed_labels[c].clone() }),
        }
    }
}

/// Builds `y = ln(pCRH)`, `X` (columns in `spec.fixed` order) and `Z`.
pub fn build_design<T: Real>(cohort: &Cohort, spec: &ModelSpec) -> Result<DesignMatrices<T>> {
    spec.validate()?;
    if cohort.is_empty() {
        return Err(Error::EmptyCohort);
    }
    let n = cohort.n_observations();
    let p = spec.fixed.len();
    let q = spec.random.len();
    let mut y = Vec::with_capacity(n);
    let mut x = Vec::with_capacity(n * p);
    let mut z = Vec::with_capacity(n * q);
    let mut sizes = Vec::with_capacity(cohort.n_subjects());
    for s in cohort.subjects() {
        sizes.push(s.visits.len());
        for v in &s.visits {
            y.push(T::lit(v.pcrh.ln()));
            x.extend(spec.fixed.iter().map(|t| T::lit(t.value(s, v))));
            z.extend(spec.random.iter().map(|r| T::lit(r.value(v))));
        }
    }
    let mut dm = DesignMatrices::from_parts(
        y,
        Matrix::new(n, p, x)?,
        Matrix::new(n, q, z)?,
        &sizes,
        spec.fixed_labels(),
        spec.random.iter().map(|r| r.label().to_string()).collect(),
    )?;
    dm.subject_ids = cohort.subjects().iter().map(|s| s.id.clone()).collect();
    dm.spec = Some(spec.clone());
    Ok(dm)
}
