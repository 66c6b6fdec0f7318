//! Adaptive Gauss–Kronrod quadrature and bracketed root finding.
//!
//! The integrator is a global adaptive scheme over a 10-point Gauss / 21-point
//! Kronrod pair: the interval with the largest error estimate is bisected until
//! the summed estimate falls under the requested tolerance. Callers pass known
//! kinks and discontinuities as breakpoints; semi-infinite ranges are mapped
//! onto `[0, 1)` by `x = a + w / (1 - w)`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

/// Result of a quadrature call.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
    pub intervals: usize,
}

/// Tolerances for [`Quadrature`]. Convergence means
/// `error <= max(abs_tol, rel_tol * |value|)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quadrature {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_intervals: usize,
}

impl Default for Quadrature {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-300,
            max_intervals: 4000,
        }
    }
}

struct Piece {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}

impl Eq for Piece {}

impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Piece {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[10];
    let mut gauss = 0.0;
    for (j, &x) in XGK[..10].iter().enumerate() {
        let dx = half * x;
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    let value = kronrod * half;
    let error = ((kronrod - gauss) * half).abs();
    (value, error)
}

impl Quadrature {
    pub fn with_rel_tol(rel_tol: f64) -> Self {
        Self {
            rel_tol,
            ..Self::default()
        }
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F, a: f64, b: f64) -> Result<Integral> {
        self.integrate_breaks(f, &[a, b])
    }

    /// Integrates over `[points[0], points[last]]`, treating every interior
    /// point as a breakpoint. Points must be nondecreasing; repeated points
    /// are ignored.
    pub fn integrate_breaks<F: Fn(f64) -> f64>(&self, f: F, points: &[f64]) -> Result<Integral> {
        let mut heap = BinaryHeap::new();
        let mut frozen_value = 0.0;
        let mut frozen_error = 0.0;
        for w in points.windows(2) {
            let (a, b) = (w[0], w[1]);
            if b > a {
                let (value, error) = kronrod21(&f, a, b);
                heap.push(Piece { a, b, value, error });
            }
        }
        let mut value_sum: f64 = heap.iter().map(|p| p.value).sum();
        let mut error_sum: f64 = heap.iter().map(|p| p.error).sum();
        let mut steps = 0usize;
        loop {
            steps += 1;
            if steps.is_multiple_of(64) {
                // running sums drift; refresh them
                value_sum = heap.iter().map(|p| p.value).sum();
                error_sum = heap.iter().map(|p| p.error).sum();
            }
            let value = frozen_value + value_sum;
            let error = frozen_error + error_sum;
            if !value.is_finite() || !error.is_finite() {
                return Err(Error::Quadrature {
                    estimate: value,
                    error,
                });
            }
            let intervals = heap.len();
            if error <= self.abs_tol.max(self.rel_tol * value.abs()) || heap.is_empty() {
                let value = frozen_value + heap.iter().map(|p| p.value).sum::<f64>();
                let error = frozen_error + heap.iter().map(|p| p.error).sum::<f64>();
                return Ok(Integral {
                    value,
                    error,
                    intervals,
                });
            }
            if intervals >= self.max_intervals {
                return Err(Error::Quadrature {
                    estimate: value,
                    error,
                });
            }
            let worst = heap.pop().expect("nonempty heap");
            value_sum -= worst.value;
            error_sum -= worst.error;
            let mid = 0.5 * (worst.a + worst.b);
            if mid <= worst.a
                || mid >= worst.b
                || (worst.b - worst.a) < 1e-15 * worst.a.abs().max(worst.b.abs())
            {
                // interval at floating-point resolution; nothing more to gain
                frozen_value += worst.value;
                frozen_error += worst.error;
                continue;
            }
            let (lv, le) = kronrod21(&f, worst.a, mid);
            let (rv, re) = kronrod21(&f, mid, worst.b);
            value_sum += lv + rv;
            error_sum += le + re;
            heap.push(Piece {
                a: worst.a,
                b: mid,
                value: lv,
                error: le,
            });
            heap.push(Piece {
                a: mid,
                b: worst.b,
                value: rv,
                error: re,
            });
        }
    }

    /// Integrates over `[a, ∞)`. `breaks` are optional interior breakpoints in
    /// the original variable.
    pub fn integrate_to_infinity<F: Fn(f64) -> f64>(
        &self,
        f: F,
        a: f64,
        breaks: &[f64],
    ) -> Result<Integral> {
        let to_w = |x: f64| {
            let y = x - a;
            y / (1.0 + y)
        };
        let mut points = Vec::with_capacity(breaks.len() + 2);
        points.push(0.0);
        points.extend(breaks.iter().filter(|&&x| x > a && x.is_finite()).map(|&x| to_w(x)));
        points.push(1.0);
        points.sort_by(f64::total_cmp);
        self.integrate_breaks(
            |w| {
                let one_minus = 1.0 - w;
                let x = a + w / one_minus;
                let v = f(x) / (one_minus * one_minus);
                if v.is_finite() {
                    v
                } else {
                    0.0
                }
            },
            &points,
        )
    }
}

/// Bisection for a sign change of `f` on `[lo, hi]`, stopping once the
/// bracket is narrower than `rel_tol` relative to its endpoints.
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, rel_tol: f64) -> Result<f64> {
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::Bracket { lo, hi });
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if (hi - lo) <= rel_tol * lo.abs().max(hi.abs()) || mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `∫_{lo}^{hi} s^{-e} ds` for `0 <= lo <= hi`, stable near `e = 1`.
pub(crate) fn power_integral(lo: f64, hi: f64, e: f64) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    let k = 1.0 - e;
    if lo == 0.0 {
        debug_assert!(k > 0.0, "divergent power integral");
        return hi.powf(k) / k;
    }
    let log_ratio = (hi / lo).ln();
    if (k * log_ratio).abs() < 1e-300 {
        return lo.powf(k) * log_ratio;
    }
    lo.powf(k) * (k * log_ratio).exp_m1() / k
}

/// Volume of the Euclidean unit ball in `d` dimensions.
pub fn unit_ball_volume(d: usize) -> f64 {
    match d {
        0 => 1.0,
        1 => 2.0,
        _ => unit_ball_volume(d - 2) * 2.0 * std::f64::consts::PI / d as f64,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let q = Quadrature::default();
        let r = q.integrate(|x| 3.0 * x * x, 0.0, 2.0).unwrap();
        assert!((r.value - 8.0).abs() < 1e-13);
    }

    #[test]
    fn endpoint_singularity() {
        let q = Quadrature::with_rel_tol(1e-10);
        let r = q.integrate(|x| x.powf(-0.5), 0.0, 1.0).unwrap();
        assert!((r.value - 2.0).abs() < 1e-8, "{}", r.value);
    }

    #[test]
    fn step_with_breakpoint() {
        let q = Quadrature::default();
        let step = |x: f64| if x <= 0.3 { 1.0 } else { 0.0 };
        let r = q.integrate_breaks(step, &[0.0, 0.3, 1.0]).unwrap();
        assert!((r.value - 0.3).abs() < 1e-14);
    }

    #[test]
    fn semi_infinite() {
        let q = Quadrature::with_rel_tol(1e-12);
        let r = q.integrate_to_infinity(|x| (-x).exp(), 0.0, &[]).unwrap();
        assert!((r.value - 1.0).abs() < 1e-11);
        let r = q.integrate_to_infinity(|x| 1.0 / (x * x), 1.0, &[]).unwrap();
        assert!((r.value - 1.0).abs() < 1e-11);
    }

    #[test]
    fn non_convergence_is_reported() {
        let q = Quadrature {
            max_intervals: 50,
            ..Quadrature::default()
        };
        assert!(q.integrate(|x| 1.0 / x, 0.0, 1.0).is_err());
    }

    #[test]
    fn bisect_finds_sqrt2() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-14).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-13);
        assert!(bisect(|x| x * x + 1.0, 0.0, 2.0, 1e-10).is_err());
    }

    #[test]
    fn power_integral_matches_closed_form() {
        assert!((power_integral(0.0, 4.0, 0.5) - 4.0).abs() < 1e-14);
        assert!((power_integral(1.0, std::f64::consts::E, 1.0) - 1.0).abs() < 1e-14);
        let near = power_integral(1.0, 2.0, 1.0 + 1e-12);
        assert!((near - 2f64.ln()).abs() < 1e-10);
    }

    #[test]
    fn ball_volumes() {
        assert_eq!(unit_ball_volume(1), 2.0);
        assert!((unit_ball_volume(2) - std::f64::consts::PI).abs() < 1e-15);
        assert!((unit_ball_volume(3) - 4.0 / 3.0 * std::f64::consts::PI).abs() < 1e-14);
    }
}
