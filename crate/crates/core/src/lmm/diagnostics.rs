//! Residual diagnostics: conditional Pearson residuals and normal QQ pairs.

use super::fit::LmmFit;
use crate::design::DesignMatrices;
use crate::error::{Error, Result};
use crate::numerics::{normal_quantile, Series};
use crate::scalar::Real;

/// `(y − Xβ̂ − Zb̂) / σ̂`, one per observation in design row order.
pub fn pearson_residuals<T: Real>(fit: &LmmFit<T>, dm: &DesignMatrices<T>) -> Result<Series<T>> {
    if dm.n_obs() != fit.n_obs || dm.n_fixed() != fit.beta.len() {
        return Err(Error::DimensionMismatch("fit and design disagree".into()));
    }
    let sigma = fit.vc.sigma_eps_sq.sqrt();
    let fitted = fit.fitted(dm);
    Series::new(dm.y.iter().zip(&fitted).map(|(&y, &f)| (y - f) / sigma).collect())
}

/// Sorted residuals paired with `Φ⁻¹((i − ½)/n)`, as `(theoretical, empirical)`.
pub fn qq_points<T: Real>(res: &Series<T>) -> Result<Vec<(T, T)>> {
    let n = res.len();
    if n < 3 {
        return Err(Error::DegenerateInput(format!("QQ plot needs at least 3 values, got {n}")));
    }
    if res.max() == res.min() {
        return Err(Error::DegenerateInput("constant residuals".into()));
    }
    let mut sorted = res.values().to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite series"));
    let nf = T::from_count(n);
    sorted
        .into_iter()
        .enumerate()
        .map(|(i, v)| Ok((normal_quantile((T::from_count(i) + T::lit(0.5)) / nf)?, v)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{simulate_cohort, DesignParams, SimulationTruth};
    use crate::design::{build_design, ModelSpec};
    use crate::lmm::{fit_lmm, Criterion};
    use crate::numerics::RngState;

    #[test]
    fn plotting_positions() {
        let pts = qq_points(&Series::new(vec![0.0f64, -1.0, 1.0]).unwrap()).unwrap();
        let expect = [1.0f64 / 6.0, 0.5, 5.0 / 6.0];
        for ((t, e), (p, v)) in pts.iter().zip(expect.iter().zip([-1.0, 0.0, 1.0])) {
            assert!((t - normal_quantile(*p).unwrap()).abs() < 1e-14);
            assert_eq!(*e, v);
        }
    }

    #[test]
    fn qq_slope_near_one_for_normal_sample() {
        let mut rng = RngState::new(11);
        let s = Series::new((0..1000).map(|_| rng.standard_normal()).collect()).unwrap();
        let pts = qq_points(&s).unwrap();
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / 1000.0;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / 1000.0;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        let slope = sxy / sxx;
        assert!((0.92..=1.08).contains(&slope), "{slope}");
    }

    #[test]
    fn qq_rejects_constant_and_short_input() {
        assert!(matches!(qq_points(&Series::new(vec![2.0; 5]).unwrap()), Err(Error::DegenerateInput(_))));
        assert!(matches!(qq_points(&Series::new(vec![1.0, 2.0]).unwrap()), Err(Error::DegenerateInput(_))));
    }

    #[test]
    fn residuals_standardized_and_patternless() {
        // ten visits per subject keeps BLUP shrinkage from deflating the spread
        let design = DesignParams { n_subjects: 40, visits_min: 10, visits_max: 10 };
        let sim = simulate_cohort(&SimulationTruth::interaction(), &design, 5).unwrap();
        let dm = build_design::<f64>(&sim.cohort, &ModelSpec::random_intercept()).unwrap();
        assert!(dm.n_obs() >= 300);
        let fit = fit_lmm(&dm, Criterion::Reml).unwrap();
        let res = pearson_residuals(&fit, &dm).unwrap();
        assert!(res.mean().abs() < 0.05, "mean {}", res.mean());
        assert!((0.9..=1.1).contains(&res.sd()), "sd {}", res.sd());

        let fitted = fit.fitted(&dm);
        let mf = fitted.iter().sum::<f64>() / fitted.len() as f64;
        let mr = res.mean();
        let sfr: f64 = fitted.iter().zip(res.values()).map(|(f, r)| (f - mf) * (r - mr)).sum();
        let sff: f64 = fitted.iter().map(|f| (f - mf).powi(2)).sum();
        let srr: f64 = res.values().iter().map(|r| (r - mr).powi(2)).sum();
        let r = sfr / (sff * srr).sqrt();
        assert!(r.abs() < 0.1, "corr {r}");
    }
}
