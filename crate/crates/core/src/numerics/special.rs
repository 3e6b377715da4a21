//! Special functions: log-gamma, incomplete gamma and beta, normal and
//! Student-t distribution functions.

use crate::error::{Error, Result};
use crate::scalar::Real;

const MAX_ITER: usize = 10_000;

fn term_tol<T: Real>() -> T {
    T::lit(1e-12).max(T::epsilon())
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural log of the gamma function for `x > 0`.
pub fn ln_gamma<T: Real>(x: T) -> T {
    let half = T::lit(0.5);
    if x < half {
        // reflection
        let pi = T::lit(std::f64::consts::PI);
        return (pi / (pi * x).sin()).ln() - ln_gamma(T::one() - x);
    }
    let x = x - T::one();
    let mut acc = T::lit(LANCZOS[0]);
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        acc += T::lit(c) / (x + T::from_count(i));
    }
    let t = x + T::lit(LANCZOS_G) + half;
    T::lit(0.5 * (2.0 * std::f64::consts::PI).ln()) + (x + half) * t.ln() - t + acc.ln()
}

/// Regularized lower incomplete gamma `P(a, x)`.
pub fn gamma_p<T: Real>(a: T, x: T) -> Result<T> {
    Ok(T::one() - gamma_q(a, x)?)
}

/// Regularized upper incomplete gamma `Q(a, x)`.
///
/// Series expansion below `x < a + 1`, Lentz continued fraction above.
pub fn gamma_q<T: Real>(a: T, x: T) -> Result<T> {
    if !(a > T::zero()) || !(x >= T::zero()) {
        return Err(Error::Domain(format!("incomplete gamma at a={a}, x={x}")));
    }
    if x == T::zero() {
        return Ok(T::one());
    }
    if x.is_infinite() {
        return Ok(T::zero());
    }
    let log_prefix = a * x.ln() - x - ln_gamma(a);
    if x < a + T::one() {
        let mut ap = a;
        let mut del = T::one() / a;
        let mut sum = del;
        for _ in 0..MAX_ITER {
            ap += T::one();
            del *= x / ap;
            sum += del;
            if del.abs() < sum.abs() * term_tol::<T>() {
                break;
            }
        }
        let p = sum * log_prefix.exp();
        Ok((T::one() - p).max(T::zero()).min(T::one()))
    } else {
        let tiny = T::min_positive_value() / T::epsilon();
        let mut b = x + T::one() - a;
        let mut c = T::one() / tiny;
        let mut d = T::one() / b;
        let mut h = d;
        for i in 1..=MAX_ITER {
            let an = -T::from_count(i) * (T::from_count(i) - a);
            b += T::lit(2.0);
            d = an * d + b;
            if d.abs() < tiny {
                d = tiny;
            }
            c = b + an / c;
            if c.abs() < tiny {
                c = tiny;
            }
            d = T::one() / d;
            let del = d * c;
            h *= del;
            if (del - T::one()).abs() < term_tol::<T>() {
                break;
            }
        }
        Ok((log_prefix.exp() * h).max(T::zero()).min(T::one()))
    }
}

/// `P(χ²_df > x)`.
pub fn chi2_survival<T: Real>(x: T, df: T) -> Result<T> {
    if !(x >= T::zero()) || !(df > T::zero()) {
        return Err(Error::Domain(format!("chi-square survival at x={x}, df={df}")));
    }
    let half = T::lit(0.5);
    gamma_q(df * half, x * half)
}

/// Complementary error function.
pub fn erfc<T: Real>(x: T) -> T {
    let q = gamma_q(T::lit(0.5), x * x).unwrap_or(T::zero());
    if x >= T::zero() {
        q
    } else {
        T::lit(2.0) - q
    }
}

/// Standard normal CDF.
pub fn normal_cdf<T: Real>(z: T) -> T {
    T::lit(0.5) * erfc(-z / T::lit(std::f64::consts::SQRT_2))
}

/// Standard normal density.
pub fn normal_pdf<T: Real>(z: T) -> T {
    (-(z * z) * T::lit(0.5)).exp() / T::lit((2.0 * std::f64::consts::PI).sqrt())
}

/// Inverse of the standard normal CDF.
///
/// Rational starting approximation followed by Halley refinement against
/// [`normal_cdf`].
pub fn normal_quantile<T: Real>(p: T) -> Result<T> {
    if !(p > T::zero() && p < T::one()) {
        return Err(Error::Domain(format!("normal quantile at p={p}")));
    }
    let pf = p.as_f64();
    let mut z = T::lit(acklam(pf));
    for _ in 0..3 {
        let e = normal_cdf(z) - p;
        let u = e / normal_pdf(z);
        let step = u / (T::one() + z * u * T::lit(0.5));
        z -= step;
        if step.abs() < T::epsilon() * (T::one() + z.abs()) {
            break;
        }
    }
    Ok(z)
}

fn acklam(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] =
        [7.784_695_709_041_462e-3, 3.224_671_290_700_398e-1, 2.445_134_137_142_996, 3.754_408_661_907_416];
    const P_LOW: f64 = 0.024_25;
    if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    }
}

/// Regularized incomplete beta `I_x(a, b)`.
pub fn beta_inc<T: Real>(a: T, b: T, x: T) -> Result<T> {
    if !(a > T::zero() && b > T::zero()) || !(x >= T::zero() && x <= T::one()) {
        return Err(Error::Domain(format!("incomplete beta at a={a}, b={b}, x={x}")));
    }
    if x == T::zero() || x == T::one() {
        return Ok(x);
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (T::one() - x).ln();
    let front = ln_front.exp();
    if x < (a + T::one()) / (a + b + T::lit(2.0)) {
        Ok(front * beta_cf(a, b, x) / a)
    } else {
        Ok(T::one() - front * beta_cf(b, a, T::one() - x) / b)
    }
}

fn beta_cf<T: Real>(a: T, b: T, x: T) -> T {
    let tiny = T::min_positive_value() / T::epsilon();
    let one = T::one();
    let two = T::lit(2.0);
    let qab = a + b;
    let qap = a + one;
    let qam = a - one;
    let mut c = one;
    let mut d = one - qab * x / qap;
    if d.abs() < tiny {
        d = tiny;
    }
    d = one / d;
    let mut h = d;
    for m in 1..=MAX_ITER {
        let m = T::from_count(m);
        let m2 = two * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = one + aa * d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = one + aa / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = one / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = one + aa * d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = one + aa / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = one / d;
        let del = d * c;
        h *= del;
        if (del - one).abs() < term_tol::<T>() {
            break;
        }
    }
    h
}

/// Two-sided p-value `P(|T_df| > |t|)` for Student's t.
pub fn student_t_two_sided<T: Real>(t: T, df: T) -> Result<T> {
    if !(df > T::zero()) {
        return Err(Error::Domain(format!("t distribution with df={df}")));
    }
    if !t.is_finite() {
        return Ok(T::zero());
    }
    let x = df / (df + t * t);
    beta_inc(df * T::lit(0.5), T::lit(0.5), x)
}

/// Two-sided standard-normal p-value.
pub fn normal_two_sided<T: Real>(z: T) -> T {
    erfc(z.abs() / T::lit(std::f64::consts::SQRT_2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    /// Composite Simpson on `[0, x]` of the chi-square density.
    fn chi2_cdf_quadrature(x: f64, df: f64) -> f64 {
        if x == 0.0 {
            return 0.0;
        }
        let k = df / 2.0;
        let norm = -(k * 2f64.ln() + ln_gamma(k));
        // substitution u = sqrt(t) removes the df=1 endpoint singularity
        let f = |u: f64| {
            if u == 0.0 {
                return if df == 1.0 { 2.0 * norm.exp() } else { 0.0 };
            }
            let t = u * u;
            2.0 * u * ((k - 1.0) * t.ln() - t / 2.0 + norm).exp()
        };
        let n = 20_000;
        let b = x.sqrt();
        let h = b / n as f64;
        let mut s = f(0.0) + f(b);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(i as f64 * h);
        }
        s * h / 3.0
    }

    #[test]
    fn ln_gamma_known_values() {
        assert_abs_diff_eq!(ln_gamma(1.0f64), 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(ln_gamma(0.5f64), std::f64::consts::PI.sqrt().ln(), epsilon = 1e-14);
        assert_abs_diff_eq!(ln_gamma(10.0f64), 362_880f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn chi2_survival_reference_points() {
        assert_eq!(chi2_survival(0.0f64, 1.0).unwrap(), 1.0);
        // quadrature oracle frozen: 1 - F(3.841; 1)
        let oracle = 1.0 - chi2_cdf_quadrature(3.841, 1.0);
        assert_abs_diff_eq!(oracle, 0.05, epsilon = 1e-3);
        assert_abs_diff_eq!(chi2_survival(3.841f64, 1.0).unwrap(), oracle, epsilon = 1e-8);
        assert_abs_diff_eq!(chi2_survival(5.991f64, 2.0).unwrap(), (-5.991f64 / 2.0).exp(), epsilon = 1e-12);
        assert_abs_diff_eq!(chi2_survival(5.991f64, 2.0).unwrap(), 0.05, epsilon = 1e-3);
    }

    #[test]
    fn chi2_survival_complements_integrated_cdf() {
        for &df in &[1.0, 2.0, 5.0, 10.0] {
            for i in 0..=25 {
                let x = 2.0 * i as f64;
                let total = chi2_survival(x, df).unwrap() + chi2_cdf_quadrature(x, df);
                assert!((total - 1.0).abs() < 1e-6, "df={df} x={x} total={total}");
            }
        }
    }

    #[test]
    fn chi2_survival_domain_errors() {
        assert!(chi2_survival(-1.0f64, 1.0).is_err());
        assert!(chi2_survival(1.0f64, 0.0).is_err());
    }

    #[test]
    fn normal_quantile_reference_points() {
        assert_abs_diff_eq!(normal_quantile(0.5f64).unwrap(), 0.0, epsilon = 1e-15);
        // bisection on a Simpson-integrated normal CDF
        let phi = |z: f64| {
            let n = 4000;
            let h = z / n as f64;
            let f = |t: f64| (-t * t / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt();
            let mut s = f(0.0) + f(z);
            for i in 1..n {
                s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h);
            }
            0.5 + s * h / 3.0
        };
        let (mut lo, mut hi) = (0.0, 5.0);
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if phi(mid) < 0.975 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let z975 = normal_quantile(0.975f64).unwrap();
        assert_abs_diff_eq!(z975, lo, epsilon = 1e-9);
        assert_abs_diff_eq!(z975, 1.960, epsilon = 1e-3);
        assert_abs_diff_eq!(normal_quantile(0.025f64).unwrap(), -z975, epsilon = 1e-12);
    }

    #[test]
    fn normal_quantile_inverts_cdf() {
        for &p in &[1e-10f64, 1e-4, 0.01, 0.3, 0.5, 0.77, 0.999, 1.0 - 1e-9] {
            let z = normal_quantile(p).unwrap();
            assert!((normal_cdf(z) - p).abs() < 1e-8, "p={p}");
        }
        assert!(normal_quantile(0.0f64).is_err());
        assert!(normal_quantile(1.0f64).is_err());
    }

    #[test]
    fn student_t_limits() {
        // t with 1 df is Cauchy: P(|T|>1) = 0.5
        assert_abs_diff_eq!(student_t_two_sided(1.0f64, 1.0).unwrap(), 0.5, epsilon = 1e-12);
        // df=2 closed form: P(|T|>t) = 1 - t / sqrt(2 + t^2)
        let t = 1.7f64;
        assert_abs_diff_eq!(student_t_two_sided(t, 2.0).unwrap(), 1.0 - t / (2.0 + t * t).sqrt(), epsilon = 1e-12);
        // large df approaches the normal
        assert_abs_diff_eq!(student_t_two_sided(1.96f64, 1e7).unwrap(), normal_two_sided(1.96f64), epsilon = 1e-6);
    }
}
