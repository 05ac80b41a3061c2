//! Special functions needed by the geometry and fitting code: log-gamma,
//! digamma, trigamma, the regularized lower incomplete gamma and erf.
//!
//! Everything is hand-rolled on standard approximations (Lanczos for
//! log-gamma, asymptotic series with downward recurrence for the psi
//! functions, series/continued-fraction for the incomplete gamma) so the
//! crate carries no numerics dependency and results are identical on every
//! target, including wasm.

use std::f64::consts::{E, PI};

const TWO_SQRT_E_OVER_PI: f64 = 1.860_382_734_205_265_7;
const LN_2_SQRT_E_OVER_PI: f64 = 0.620_782_237_635_245_2;
const LN_PI: f64 = 1.144_729_885_849_400_2;

/// Lanczos shift, per Pugh's analysis of the approximation.
const GAMMA_R: f64 = 10.900511;

const GAMMA_DK: &[f64] = &[
    2.485_740_891_387_535_5e-5,
    1.051_423_785_817_219_7,
    -3.456_870_972_220_162_5,
    4.512_277_094_668_948,
    -2.982_852_253_235_766_4,
    1.056_397_115_771_267,
    -1.954_287_731_916_458_7e-1,
    1.709_705_434_044_412e-2,
    -5.719_261_174_043_057e-4,
    4.633_994_733_599_057e-6,
    -2.719_949_084_886_077_2e-9,
];

/// Natural log of the gamma function, accurate to ~14 digits for x > 0.
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        let s = GAMMA_DK
            .iter()
            .enumerate()
            .skip(1)
            .fold(GAMMA_DK[0], |s, t| s + t.1 / (t.0 as f64 - x));
        LN_PI
            - (PI * x).sin().ln()
            - s.ln()
            - LN_2_SQRT_E_OVER_PI
            - (0.5 - x) * ((0.5 - x + GAMMA_R) / E).ln()
    } else {
        let s = GAMMA_DK
            .iter()
            .enumerate()
            .skip(1)
            .fold(GAMMA_DK[0], |s, t| s + t.1 / (x + t.0 as f64 - 1.0));
        s.ln() + LN_2_SQRT_E_OVER_PI + (x - 0.5) * ((x - 0.5 + GAMMA_R) / E).ln()
    }
}

/// Gamma function for moderate arguments (used only where overflow is
/// impossible; the volume formulas always go through [`ln_gamma`]).
pub fn gamma(x: f64) -> f64 {
    if x < 0.5 {
        let s = GAMMA_DK
            .iter()
            .enumerate()
            .skip(1)
            .fold(GAMMA_DK[0], |s, t| s + t.1 / (t.0 as f64 - x));
        PI / ((PI * x).sin() * s * TWO_SQRT_E_OVER_PI * ((0.5 - x + GAMMA_R) / E).powf(0.5 - x))
    } else {
        let s = GAMMA_DK
            .iter()
            .enumerate()
            .skip(1)
            .fold(GAMMA_DK[0], |s, t| s + t.1 / (x + t.0 as f64 - 1.0));
        s * TWO_SQRT_E_OVER_PI * ((x - 0.5 + GAMMA_R) / E).powf(x - 0.5)
    }
}

/// Digamma (psi) for x > 0: recurrence up to x >= 10, then the asymptotic
/// expansion with Bernoulli terms.
pub fn digamma(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    let mut result = 0.0;
    let mut x = x;
    while x < 10.0 {
        result -= 1.0 / x;
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    result + x.ln() - 0.5 * inv
        - inv2
            * (1.0 / 12.0
                - inv2 * (1.0 / 120.0 - inv2 * (1.0 / 252.0 - inv2 * (1.0 / 240.0 - inv2 / 132.0))))
}

/// Trigamma (psi') for x > 0, same recurrence/asymptotic structure.
pub fn trigamma(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    let mut result = 0.0;
    let mut x = x;
    while x < 10.0 {
        result += 1.0 / (x * x);
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    result
        + inv * (1.0
            + inv * (0.5
                + inv * (1.0 / 6.0
                    - inv2 * (1.0 / 30.0
                        - inv2 * (1.0 / 42.0 - inv2 * (1.0 / 30.0 - inv2 * 5.0 / 66.0))))))
}

/// Regularized lower incomplete gamma P(a, x) via the power series for
/// x < a + 1 and the Lentz continued fraction otherwise.
pub fn reg_lower_gamma(a: f64, x: f64) -> f64 {
    debug_assert!(a > 0.0);
    if x <= 0.0 {
        return 0.0;
    }
    if x < a + 1.0 {
        // series: P(a,x) = x^a e^-x / Gamma(a) * sum x^n / (a)_{n+1}
        let mut term = 1.0 / a;
        let mut sum = term;
        let mut n = a;
        for _ in 0..500 {
            n += 1.0;
            term *= x / n;
            sum += term;
            if term.abs() < sum.abs() * 1e-16 {
                break;
            }
        }
        (sum.ln() + a * x.ln() - x - ln_gamma(a)).exp()
    } else {
        // continued fraction for Q(a,x), modified Lentz
        let tiny = 1e-300;
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..500 {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < tiny {
                d = tiny;
            }
            c = b + an / c;
            if c.abs() < tiny {
                c = tiny;
            }
            d = 1.0 / d;
            let delta = d * c;
            h *= delta;
            if (delta - 1.0).abs() < 1e-16 {
                break;
            }
        }
        let q = (a * x.ln() - x - ln_gamma(a)).exp() * h;
        1.0 - q
    }
}

/// Error function, expressed through the incomplete gamma:
/// erf(x) = sign(x) * P(1/2, x^2).
pub fn erf(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else if x > 0.0 {
        reg_lower_gamma(0.5, x * x)
    } else {
        -reg_lower_gamma(0.5, x * x)
    }
}

/// Standard normal CDF.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * (1.0 + erf(z / std::f64::consts::SQRT_2))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol * b.abs().max(1.0), "{a} vs {b}");
    }

    #[test]
    fn ln_gamma_known_values() {
        close(ln_gamma(1.0), 0.0, 1e-13);
        close(ln_gamma(2.0), 0.0, 1e-13);
        close(ln_gamma(5.0), 24.0f64.ln(), 1e-13);
        close(ln_gamma(0.5), PI.sqrt().ln(), 1e-13);
        // Gamma(171) overflows f64; ln stays finite.
        assert!(ln_gamma(171.0).is_finite());
        close(ln_gamma(10.1), 454_760.751_441_585_95f64.ln(), 1e-12);
    }

    #[test]
    fn gamma_known_values() {
        close(gamma(5.0), 24.0, 1e-12);
        close(gamma(0.5), PI.sqrt(), 1e-12);
        close(gamma(3.5), 3.323_350_970_447_842_6, 1e-12);
    }

    #[test]
    fn digamma_known_values() {
        // psi(1) = -EulerGamma
        close(digamma(1.0), -0.577_215_664_901_532_9, 1e-12);
        // psi(1/2) = -EulerGamma - 2 ln 2
        close(digamma(0.5), -1.963_510_026_021_423_5, 1e-12);
        // recurrence psi(x+1) = psi(x) + 1/x
        for &x in &[0.3, 1.7, 4.2, 11.0] {
            close(digamma(x + 1.0), digamma(x) + 1.0 / x, 1e-12);
        }
    }

    #[test]
    fn trigamma_known_values() {
        // psi'(1) = pi^2/6
        close(trigamma(1.0), PI * PI / 6.0, 1e-12);
        // recurrence psi'(x+1) = psi'(x) - 1/x^2
        for &x in &[0.4, 2.3, 7.7] {
            close(trigamma(x + 1.0), trigamma(x) - 1.0 / (x * x), 1e-12);
        }
    }

    #[test]
    fn incomplete_gamma_against_exponential() {
        // P(1, x) = 1 - e^-x exactly.
        for &x in &[0.1, 0.5, 1.0, 3.0, 10.0] {
            close(reg_lower_gamma(1.0, x), 1.0 - (-x).exp(), 1e-13);
        }
    }

    #[test]
    fn erf_known_values() {
        close(erf(1.0), 0.842_700_792_949_714_9, 1e-12);
        close(erf(2.0), 0.995_322_265_018_952_7, 1e-12);
        assert!((erf(-1.0) + erf(1.0)).abs() < 1e-15);
        close(normal_cdf(0.0), 0.5, 1e-15);
        close(normal_cdf(1.959_963_984_540_054), 0.975, 1e-9);
    }
}
