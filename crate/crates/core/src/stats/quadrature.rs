//! Adaptive Gauss–Kronrod (7/15) quadrature with global error control.
//!
//! Infinite endpoints are mapped onto a finite interval with
//! `v = lo + s u / (1 - u)` (and its mirror); `s` is the caller's length
//! scale for the tail.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

// Kronrod abscissae on [0, 1]; odd indices are the 7-point Gauss nodes.
#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureResult {
    pub value: f64,
    pub error_estimate: f64,
    pub panels: usize,
    pub converged: bool,
}

impl QuadratureResult {
    fn combine(self, other: QuadratureResult) -> QuadratureResult {
        QuadratureResult {
            value: self.value + other.value,
            error_estimate: self.error_estimate + other.error_estimate,
            panels: self.panels + other.panels,
            converged: self.converged && other.converged,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Budget on the number of panels (each costs 15 evaluations).
    pub max_panels: usize,
    /// Length scale used when mapping an infinite endpoint.
    pub tail_scale: f64,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions {
            abs_tol: 1e-10,
            rel_tol: 0.0,
            max_panels: 10_000,
            tail_scale: 1.0,
        }
    }
}

impl QuadOptions {
    pub fn abs(abs_tol: f64) -> Self {
        QuadOptions {
            abs_tol,
            ..Default::default()
        }
    }

    pub fn rel(rel_tol: f64) -> Self {
        QuadOptions {
            abs_tol: 0.0,
            rel_tol,
            ..Default::default()
        }
    }

    pub fn with_tail_scale(mut self, s: f64) -> Self {
        self.tail_scale = s;
        self
    }

    pub fn with_max_panels(mut self, n: usize) -> Self {
        self.max_panels = n;
        self
    }
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
    roundoff: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
    }
}

impl Eq for Panel {}

impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gauss_kronrod_15<F: Fn(f64) -> f64 + ?Sized>(f: &F, lo: f64, hi: f64) -> Panel {
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let fc = f(center);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    let mut abs_sum = kronrod.abs();
    let mut fv = [0.0; 14];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv[2 * j] = f1;
        fv[2 * j + 1] = f2;
        kronrod += WGK[j] * (f1 + f2);
        abs_sum += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * kronrod;
    let mut asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        asc += WGK[j] * ((fv[2 * j] - mean).abs() + (fv[2 * j + 1] - mean).abs());
    }
    let value = kronrod * half;
    let res_abs = abs_sum * half.abs();
    let res_asc = asc * half.abs();
    let mut error = ((kronrod - gauss) * half).abs();
    if res_asc != 0.0 && error != 0.0 {
        error = res_asc * (200.0 * error / res_asc).powf(1.5).min(1.0);
    }
    let roundoff = 50.0 * f64::EPSILON * res_abs;
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(roundoff);
    }
    Panel {
        lo,
        hi,
        value,
        error,
        roundoff,
    }
}

fn adaptive_finite<F: Fn(f64) -> f64 + ?Sized>(f: &F, lo: f64, hi: f64, opts: &QuadOptions) -> QuadratureResult {
    let first = gauss_kronrod_15(f, lo, hi);
    let mut heap = BinaryHeap::new();
    let mut frozen: Vec<Panel> = Vec::new();
    let mut total = first.value;
    let mut total_err = first.error;
    let mut total_roundoff = first.roundoff;
    let mut panels = 1;
    heap.push(first);

    let converged = loop {
        // the rounding floor of the rule itself cannot be beaten
        let tol = opts.abs_tol.max(opts.rel_tol * total.abs()).max(2.0 * total_roundoff);
        if total_err <= tol {
            break true;
        }
        if panels >= opts.max_panels {
            break false;
        }
        let Some(worst) = heap.pop() else {
            break false;
        };
        let mid = 0.5 * (worst.lo + worst.hi);
        if !(mid > worst.lo && mid < worst.hi) || (worst.hi - worst.lo) < 1e3 * f64::EPSILON * mid.abs() {
            // cannot split further without losing the nodes to rounding
            frozen.push(worst);
            if heap.is_empty() {
                break false;
            }
            continue;
        }
        let left = gauss_kronrod_15(f, worst.lo, mid);
        let right = gauss_kronrod_15(f, mid, worst.hi);
        total += left.value + right.value - worst.value;
        total_err += left.error + right.error - worst.error;
        total_roundoff += left.roundoff + right.roundoff - worst.roundoff;
        panels += 1;
        heap.push(left);
        heap.push(right);
    };

    // resum to shed the drift of the running updates
    let mut all: Vec<Panel> = heap.into_vec();
    all.extend(frozen);
    all.sort_by(|a, b| a.lo.total_cmp(&b.lo));
    let value = all.iter().map(|p| p.value).sum::<f64>();
    let error_estimate = all.iter().map(|p| p.error).sum::<f64>();
    QuadratureResult {
        value,
        error_estimate,
        panels,
        converged: converged && value.is_finite(),
    }
}

/// Integrates `f` over `[lo, hi]`, either endpoint possibly infinite.
pub fn integrate<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, opts: &QuadOptions) -> QuadratureResult {
    integrate_dyn(&f, lo, hi, opts)
}

fn integrate_dyn(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64, opts: &QuadOptions) -> QuadratureResult {
    if lo == hi {
        return QuadratureResult {
            value: 0.0,
            error_estimate: 0.0,
            panels: 0,
            converged: true,
        };
    }
    if lo > hi {
        let r = integrate_dyn(f, hi, lo, opts);
        return QuadratureResult { value: -r.value, ..r };
    }
    let s = opts.tail_scale;
    match (lo.is_finite(), hi.is_finite()) {
        (true, true) => adaptive_finite(f, lo, hi, opts),
        (true, false) => {
            let g = |u: f64| {
                let d = 1.0 - u;
                let val = f(lo + s * u / d);
                if val == 0.0 {
                    0.0
                } else {
                    val * s / (d * d)
                }
            };
            adaptive_finite(&g, 0.0, 1.0, opts)
        }
        (false, true) => {
            let g = |u: f64| {
                let d = 1.0 - u;
                let val = f(hi - s * u / d);
                if val == 0.0 {
                    0.0
                } else {
                    val * s / (d * d)
                }
            };
            adaptive_finite(&g, 0.0, 1.0, opts)
        }
        (false, false) => {
            let split = QuadOptions {
                abs_tol: 0.5 * opts.abs_tol,
                max_panels: opts.max_panels / 2,
                ..*opts
            };
            integrate_dyn(f, f64::NEG_INFINITY, 0.0, &split).combine(integrate_dyn(f, 0.0, f64::INFINITY, &split))
        }
    }
}

/// Integrates over consecutive pieces `[b_0, b_1], [b_1, b_2], ...` of a
/// sorted breakpoint list; used to put kinks on panel boundaries.
pub fn integrate_pieces<F: Fn(f64) -> f64>(f: F, breaks: &[f64], opts: &QuadOptions) -> QuadratureResult {
    let pieces = breaks.len().saturating_sub(1).max(1);
    let piece_opts = QuadOptions {
        abs_tol: opts.abs_tol / pieces as f64,
        max_panels: (opts.max_panels / pieces).max(64),
        ..*opts
    };
    let mut acc = QuadratureResult {
        value: 0.0,
        error_estimate: 0.0,
        panels: 0,
        converged: true,
    };
    for w in breaks.windows(2) {
        if w[1] > w[0] {
            acc = acc.combine(integrate_dyn(&f, w[0], w[1], &piece_opts));
        }
    }
    acc
}

/// Convenience form with an absolute tolerance and the default budget.
pub fn integrate_adaptive<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, abs_tol: f64) -> QuadratureResult {
    integrate(f, lo, hi, &QuadOptions::abs(abs_tol))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn constant_and_polynomials_are_exact() {
        let r = integrate_adaptive(|_| 1.0, 0.0, 1.0, 1e-14);
        assert!((r.value - 1.0).abs() <= 1e-14);
        assert!(r.converged);
        for deg in 0..=13 {
            let r = integrate_adaptive(|x: f64| x.powi(deg), -1.0, 2.0, 1e-13);
            let exact = (2f64.powi(deg + 1) - (-1f64).powi(deg + 1)) / (deg + 1) as f64;
            assert!((r.value - exact).abs() <= 1e-13 * exact.abs().max(1.0), "deg {deg}");
        }
    }

    #[test]
    fn gaussian_over_the_line() {
        let g = |u: f64| (-0.5 * u * u).exp() / (2.0 * PI).sqrt();
        let r = integrate_adaptive(g, f64::NEG_INFINITY, f64::INFINITY, 1e-12);
        assert!((r.value - 1.0).abs() < 1e-10, "{}", r.value);
        assert!(r.converged);
    }

    #[test]
    fn reversed_and_empty_ranges() {
        assert_eq!(integrate_adaptive(|x| x, 1.0, 1.0, 1e-12).value, 0.0);
        let r = integrate_adaptive(|x| x, 1.0, 0.0, 1e-12);
        assert!((r.value + 0.5).abs() < 1e-15);
    }

    #[test]
    fn endpoint_singularity() {
        let r = integrate(|x: f64| 1.0 / x.sqrt(), 0.0, 1.0, &QuadOptions::abs(1e-9));
        assert!((r.value - 2.0).abs() < 1e-8, "{}", r.value);
    }

    #[test]
    fn budget_exhaustion_is_flagged() {
        let opts = QuadOptions::abs(1e-14).with_max_panels(3);
        let r = integrate(|x: f64| (50.0 * x).sin().abs(), 0.0, 10.0, &opts);
        assert!(!r.converged);
        assert!(r.error_estimate > 0.0);
    }
}
