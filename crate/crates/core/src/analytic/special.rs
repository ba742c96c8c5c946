//! Standard normal tail, CDF and heat kernel.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::error::{Error, Result};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Above this point the tail is evaluated through the Mills ratio instead of
/// `erfc`.
const TAIL_SWITCH: f64 = 8.0;

/// Mills ratio `G(u) / phi(u)` for large `u`, by backward evaluation of the
/// continued fraction `1 / (u + 1/(u + 2/(u + 3/(u + ...))))`.
fn mills_ratio(u: f64) -> f64 {
    let mut tail = u;
    for k in (1..=80).rev() {
        tail = u + k as f64 / tail;
    }
    1.0 / tail
}

/// Standard normal density.
#[inline]
pub fn standard_normal_pdf(u: f64) -> f64 {
    (-0.5 * u * u - LN_SQRT_2PI).exp()
}

/// Upper tail `G(u) = P(Z > u)` of the standard normal.
pub fn gaussian_tail(u: f64) -> f64 {
    if u > TAIL_SWITCH {
        standard_normal_pdf(u) * mills_ratio(u)
    } else {
        0.5 * libm::erfc(u * FRAC_1_SQRT_2)
    }
}

/// `F(v) = P(Z <= v)`.
pub fn gaussian_cdf(v: f64) -> f64 {
    gaussian_tail(-v)
}

/// `ln G(u)`, finite for every finite `u`.
pub fn ln_gaussian_tail(u: f64) -> f64 {
    if u > TAIL_SWITCH {
        -0.5 * u * u - LN_SQRT_2PI + mills_ratio(u).ln()
    } else if u < 0.0 {
        (-gaussian_tail(-u)).ln_1p()
    } else {
        gaussian_tail(u).ln()
    }
}

/// `ln F(v)`.
pub fn ln_gaussian_cdf(v: f64) -> f64 {
    ln_gaussian_tail(-v)
}

/// Heat kernel `gamma_t(u) = exp(-u^2 / 2t) / sqrt(2 pi t)`.
pub fn gaussian_kernel(t: f64, u: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::invalid("t", format!("heat kernel needs t > 0, got {t}")));
    }
    Ok(gaussian_kernel_unchecked(t, u))
}

#[inline]
pub(crate) fn gaussian_kernel_unchecked(t: f64, u: f64) -> f64 {
    (-u * u / (2.0 * t)).exp() / (2.0 * PI * t).sqrt()
}

#[inline]
pub(crate) fn ln_gaussian_kernel(t: f64, u: f64) -> f64 {
    -u * u / (2.0 * t) - 0.5 * (2.0 * PI * t).ln()
}

/// `ln(exp(x) + exp(y))` without overflow.
pub fn log_add_exp(x: f64, y: f64) -> f64 {
    if x == f64::NEG_INFINITY {
        return y;
    }
    if y == f64::NEG_INFINITY {
        return x;
    }
    let m = x.max(y);
    m + ((x - m).exp() + (y - m).exp()).ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    // (u, G(u), ln G(u)) from 40-digit arithmetic.
    const TAIL_TABLE: [(f64, f64, f64); 9] = [
        (-3.0, 0.998_650_101_968_369_9, -0.001_350_809_964_748_193_8),
        (0.5, 0.308_537_538_725_986_9, -1.175_911_761_593_618_6),
        (2.5, 0.006_209_665_325_776_135, -5.081_648_277_278_69),
        (5.0, 2.866_515_718_791_939e-7, -15.064_998_393_988_726),
        (7.9, 1.394_517_146_659_268_3e-15, -34.206_228_170_981_71),
        (8.5, 9.479_534_822_203_318e-18, -39.197_396_428_217_67),
        (12.0, 1.776_482_112_077_679e-33, -75.410_673_001_568_8),
        (30.0, 4.906_713_927_148_187e-198, -454.321_243_956_343_2),
        (40.0, 0.0, -804.608_442_013_753_8),
    ];

    #[test]
    fn tail_matches_reference_values() {
        for &(u, g, lng) in &TAIL_TABLE {
            if g > 0.0 {
                let rel = (gaussian_tail(u) - g).abs() / g;
                let tol = if u.abs() <= 8.0 { 1e-14 } else { 1e-12 };
                assert!(rel <= tol, "G({u}): rel err {rel:e}");
            }
            let rel = (ln_gaussian_tail(u) - lng).abs() / lng.abs();
            assert!(rel <= 1e-13, "ln G({u}): rel err {rel:e}");
        }
    }

    #[test]
    fn tail_and_cdf_basics() {
        assert_eq!(gaussian_tail(0.0), 0.5);
        assert_eq!(gaussian_cdf(0.0), 0.5);
        assert!((gaussian_tail(-20.0) - 1.0).abs() <= 1e-15);
        assert!((gaussian_cdf(1.0) - 0.841_344_746_068_542_9).abs() <= 1e-15);
        for &u in &[-9.0, -2.3, 0.0, 1.0, 2.3, 7.99, 8.01, 15.0] {
            assert!((gaussian_tail(u) + gaussian_cdf(u) - 1.0).abs() <= 1e-15, "u={u}");
        }
        assert!((gaussian_cdf(2.3) + gaussian_cdf(-2.3) - 1.0).abs() <= 1e-15);
    }

    #[test]
    fn tail_is_continuous_across_branch_switch() {
        let below = gaussian_tail(TAIL_SWITCH);
        let above = gaussian_tail(TAIL_SWITCH + 1e-12);
        assert!(((below - above) / below).abs() < 1e-10);
    }

    #[test]
    fn kernel_values() {
        assert!((gaussian_kernel(1.0, 0.0).unwrap() - 0.398_942_280_401_432_7).abs() < 1e-15);
        assert!((gaussian_kernel(4.0, 0.0).unwrap() - 0.199_471_140_200_716_35).abs() < 1e-15);
        assert!((gaussian_kernel(1.0, 2.0).unwrap() - 0.053_990_966_513_188_05).abs() < 1e-15);
        assert!(gaussian_kernel(0.0, 1.0).is_err());
        assert!(gaussian_kernel(-1.0, 1.0).is_err());
    }

    #[test]
    fn log_add_exp_handles_extremes() {
        assert_eq!(log_add_exp(f64::NEG_INFINITY, 3.0), 3.0);
        assert!((log_add_exp(1000.0, 1000.0) - (1000.0 + 2f64.ln())).abs() < 1e-12);
        assert!((log_add_exp(0.0, 0.0) - 2f64.ln()).abs() < 1e-15);
    }
}
