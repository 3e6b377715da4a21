use proptest::prelude::*;

use longmix::data::{read_csv, simulate_cohort, write_csv, DesignParams, SimulationTruth};
use longmix::design::{build_design, FixedTerm, ModelSpec};
use longmix::lmm::{effect_percent, fit_lmm, Criterion};
use longmix::numerics::{acf, chi2_survival, cholesky, normal_cdf, normal_quantile, Matrix, RngState, Series};

fn spd(n: usize, seed: u64) -> Matrix<f64> {
    let mut rng = RngState::new(seed);
    let a = Matrix::new(n, n, (0..n * n).map(|_| rng.standard_normal()).collect()).unwrap();
    a.gram().add(&Matrix::identity(n).scale(0.5)).unwrap()
}

/// Poisson-sum form of the χ² tail for even degrees of freedom.
fn chi2_even_tail(x: f64, df: u32) -> f64 {
    let h = x / 2.0;
    let mut term = 1.0;
    let mut sum = 0.0;
    for j in 0..df / 2 {
        if j > 0 {
            term *= h / j as f64;
        }
        sum += term;
    }
    (-h).exp() * sum
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn cholesky_round_trip(n in 1usize..=50, seed in any::<u64>()) {
        let m = spd(n, seed);
        let l = cholesky(&m).unwrap();
        for i in 0..n {
            for j in i + 1..n {
                prop_assert_eq!(l[(i, j)], 0.0);
            }
        }
        let back = l.matmul(&l.transpose()).unwrap();
        let err = back.add(&m.scale(-1.0)).unwrap().max_abs() / m.max_abs();
        prop_assert!(err < 1e-12, "relative error {}", err);
    }

    #[test]
    fn acf_is_bounded(values in prop::collection::vec(-1e3f64..1e3, 60..300)) {
        let s = Series::new(values).unwrap();
        prop_assume!(s.variance() > 1e-9);
        let r = acf(&s, 50).unwrap();
        prop_assert_eq!(r[0], 1.0);
        for v in &r {
            prop_assert!(v.abs() <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn chi2_tail_matches_poisson_sum(x in 0.0f64..80.0, half in 1u32..=10) {
        let df = 2 * half;
        let got = chi2_survival(x, df as f64).unwrap();
        let want = chi2_even_tail(x, df);
        prop_assert!((got - want).abs() <= 1e-12 + 1e-10 * want, "{} vs {}", got, want);
    }

    #[test]
    fn normal_quantile_inverts_cdf(p in 1e-12f64..(1.0 - 1e-12)) {
        let z = normal_quantile(p).unwrap();
        prop_assert!((normal_cdf(z) - p).abs() <= 1e-13 + 1e-9 * p.min(1.0 - p));
    }

    #[test]
    fn csv_round_trip(seed in any::<u64>(), n in 1usize..30) {
        let design = DesignParams { n_subjects: n, visits_min: 1, visits_max: 5 };
        let cohort = simulate_cohort(&SimulationTruth::interaction(), &design, seed).unwrap().cohort;
        let mut buf = Vec::new();
        write_csv(&cohort, &mut buf).unwrap();
        prop_assert_eq!(read_csv(buf.as_slice()).unwrap(), cohort);
    }

    #[test]
    fn seed_determinism(seed in any::<u64>()) {
        let design = DesignParams { n_subjects: 12, ..DesignParams::default() };
        let a = simulate_cohort(&SimulationTruth::interaction(), &design, seed).unwrap();
        let b = simulate_cohort(&SimulationTruth::interaction(), &design, seed).unwrap();
        prop_assert_eq!(a.cohort, b.cohort);
        let (mut r1, mut r2) = (RngState::new(seed), RngState::new(seed));
        for _ in 0..20 {
            prop_assert_eq!(r1.standard_gamma(2.5).to_bits(), r2.standard_gamma(2.5).to_bits());
        }
    }

    #[test]
    fn hinge_is_continuous_and_nonnegative(knot in 10.0f64..40.0, ga in 5.0f64..45.0) {
        let cohort = simulate_cohort(&SimulationTruth::interaction(), &DesignParams { n_subjects: 1, visits_min: 1, visits_max: 1 }, 1)
            .unwrap()
            .cohort;
        let subject = &cohort.subjects()[0];
        let mut visit = subject.visits[0];
        let h = FixedTerm::Hinge(knot);
        visit.ga_weeks = ga;
        let v = h.value(subject, &visit);
        prop_assert!(v >= 0.0);
        prop_assert_eq!(v, (ga - knot).max(0.0));
        visit.ga_weeks = knot - 1e-9;
        let below = h.value(subject, &visit);
        visit.ga_weeks = knot + 1e-9;
        prop_assert!((h.value(subject, &visit) - below).abs() < 1e-8);
    }

    #[test]
    fn effect_is_zero_without_ct_difference(bct in -1.0f64..1.0, bint in -0.1f64..0.1, ga in 10.0f64..42.0) {
        prop_assert_eq!(effect_percent(bct, bint, ga, 0.0).percent_change, 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn fit_is_permutation_invariant(seed in any::<u64>(), shift in 1usize..87) {
        let cohort = simulate_cohort(&SimulationTruth::interaction(), &DesignParams::default(), seed).unwrap().cohort;
        let n = cohort.n_subjects();
        let order: Vec<usize> = (0..n).map(|i| (i + shift) % n).collect();
        let spec = ModelSpec::random_intercept();
        let f0 = fit_lmm(&build_design::<f64>(&cohort, &spec).unwrap(), Criterion::Reml).unwrap();
        let f1 = fit_lmm(&build_design::<f64>(&cohort.permuted(&order).unwrap(), &spec).unwrap(), Criterion::Reml).unwrap();
        for (a, b) in f0.beta.iter().zip(&f1.beta) {
            prop_assert!((a - b).abs() < 1e-8);
        }
        prop_assert!((f0.loglik() - f1.loglik()).abs() < 1e-8);
        prop_assert!((f0.vc.tau1_sq - f1.vc.tau1_sq).abs() < 1e-8);
    }
}
