//! Back-transformation of log-scale coefficients into percent changes in
//! the median response.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectReport {
    pub ga: f64,
    pub ct_delta: f64,
    pub log_effect: f64,
    pub percent_change: f64,
}

/// Percent corresponding to a log-scale difference.
pub fn percent(log_effect: f64) -> f64 {
    100.0 * log_effect.exp_m1()
}

/// Effect of a `ct_delta` difference in CT-Sum at gestational age `ga`.
pub fn effect_percent(beta_ct: f64, beta_ctga: f64, ga: f64, ct_delta: f64) -> EffectReport {
    // adding zero turns a negative zero into positive zero
    let log_effect = ct_delta * (beta_ct + beta_ctga * ga) + 0.0;
    EffectReport { ga, ct_delta, log_effect, percent_change: percent(log_effect) }
}

/// Side of the knot in a hinge model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Segment {
    Before,
    After,
}

impl std::str::FromStr for Segment {
    type Err = crate::Error;
    fn from_str(s: &str) -> crate::Result<Self> {
        match s {
            "before" => Ok(Segment::Before),
            "after" => Ok(Segment::After),
            other => Err(crate::Error::InvalidSpec(format!("unknown segment `{other}`"))),
        }
    }
}

/// Weekly percent change in the median response at CT-Sum `ct`.
pub fn piecewise_slope_percent(beta_ga: f64, beta_hinge: f64, beta_ctga: f64, ct: f64, segment: Segment) -> f64 {
    let mut slope = beta_ga + ct * beta_ctga;
    if segment == Segment::After {
        slope += beta_hinge;
    }
    percent(slope)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interaction_effects() {
        let cases = [(40.0, 1.0, 11.9), (14.0, 1.0, -1.8), (26.7, 1.0, 4.7), (40.0, 1.2, 14.4)];
        for (ga, d, want) in cases {
            let r = effect_percent(-0.088, 0.005, ga, d);
            assert!((r.percent_change - want).abs() <= 0.15, "{ga} {d}: {}", r.percent_change);
            assert!((r.percent_change - 100.0 * (r.log_effect.exp() - 1.0)).abs() < 1e-12);
        }
        assert_eq!(effect_percent(0.0, 0.0, 33.0, 2.0).percent_change, 0.0);
        assert!(effect_percent(-0.088, 0.005, 14.0, 0.0).percent_change.is_sign_positive());
    }

    #[test]
    fn piecewise_slopes() {
        let p = |ct, s| piecewise_slope_percent(0.032, 0.127, 0.005, ct, s);
        for (ct, before, after) in [(1.2, 3.8, 17.9), (0.0, 3.3, 17.2)] {
            assert!((p(ct, Segment::Before) - before).abs() <= 0.15);
            assert!((p(ct, Segment::After) - after).abs() <= 0.15);
        }
        assert_eq!(piecewise_slope_percent(0.0, 0.0, 0.0, 3.0, Segment::After), 0.0);
    }

    #[test]
    fn monotone_in_ga_for_positive_interaction() {
        let mut last = f64::NEG_INFINITY;
        for i in 0..=260 {
            let r = effect_percent(-0.088, 0.005, 14.0 + 0.1 * i as f64, 1.0);
            assert!(r.percent_change > last);
            last = r.percent_change;
        }
    }
}
