//! Conditionally conjugate prior hyperparameters.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `σ_ε² ~ Inv-χ²(a, b)`, `τ² ~ Inv-χ²(c, d)` for every random-effect
/// variance, and independent `β_l ~ N(0, σ_l²)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorHyperparams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub sigma_l_sq: Vec<f64>,
}

pub const DEFAULT_DOF: f64 = 0.01;
pub const DEFAULT_SCALE: f64 = 1.0;
pub const DEFAULT_COEF_VARIANCE: f64 = 1e6;

impl PriorHyperparams {
    /// Weakly informative defaults for `p` coefficients.
    pub fn vague(p: usize) -> Self {
        Self {
            a: DEFAULT_DOF,
            b: DEFAULT_SCALE,
            c: DEFAULT_DOF,
            d: DEFAULT_SCALE,
            sigma_l_sq: vec![DEFAULT_COEF_VARIANCE; p],
        }
    }

    pub fn validate(&self, p: usize) -> Result<()> {
        let ok = |v: f64| v > 0.0 && v.is_finite();
        if !(ok(self.a) && ok(self.b) && ok(self.c) && ok(self.d)) {
            return Err(Error::Domain("prior dof and scale must be positive".into()));
        }
        if self.sigma_l_sq.len() != p {
            return Err(Error::DimensionMismatch(format!(
                "{} prior variances for {p} coefficients",
                self.sigma_l_sq.len()
            )));
        }
        if !self.sigma_l_sq.iter().all(|&v| ok(v)) {
            return Err(Error::Domain("prior coefficient variances must be positive".into()));
        }
        Ok(())
    }

    /// Applies `key=value` overrides separated by commas. Keys are `a`, `b`,
    /// `c`, `d` and `slsq` (all coefficient variances at once).
    pub fn with_overrides(mut self, spec: &str) -> Result<Self> {
        for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| Error::InvalidSpec(format!("prior override `{part}` is not key=value")))?;
            let v: f64 = value
                .trim()
                .parse()
                .map_err(|_| Error::InvalidSpec(format!("prior override `{part}` has a non-numeric value")))?;
            match key.trim() {
                "a" => self.a = v,
                "b" => self.b = v,
                "c" => self.c = v,
                "d" => self.d = v,
                "slsq" => self.sigma_l_sq.iter_mut().for_each(|s| *s = v),
                other => return Err(Error::InvalidSpec(format!("unknown prior key `{other}`"))),
            }
        }
        self.validate(self.sigma_l_sq.len())?;
        Ok(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides() {
        let p = PriorHyperparams::vague(3).with_overrides("a=2, d=0.5,slsq=10").unwrap();
        assert_eq!((p.a, p.b, p.c, p.d), (2.0, 1.0, 0.01, 0.5));
        assert_eq!(p.sigma_l_sq, vec![10.0; 3]);
        assert!(PriorHyperparams::vague(3).with_overrides("a=-1").is_err());
        assert!(PriorHyperparams::vague(3).with_overrides("e=1").is_err());
        assert!(PriorHyperparams::vague(3).with_overrides("a").is_err());
    }
}
