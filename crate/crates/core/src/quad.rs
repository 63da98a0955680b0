//! Adaptive Gauss–Kronrod quadrature.
//!
//! Globally adaptive bisection on the interval with the largest error
//! estimate, using the 10/21-point Gauss–Kronrod pair. Semi-infinite ranges
//! are mapped onto `[0, 1)` by `x = a + t / (1 - t)`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

#[allow(clippy::excessive_precision)]
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

#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

#[allow(clippy::excessive_precision)]
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

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadOptions {
    pub rel_tol: f64,
    /// Absolute error floor; integrals whose error falls below this are accepted.
    pub abs_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-15,
            max_intervals: 2000,
        }
    }
}

impl QuadOptions {
    pub fn with_rel_tol(rel_tol: f64) -> Self {
        Self {
            rel_tol,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub abs_error: f64,
    pub intervals: usize,
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    abs_sum: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}

impl Eq for Segment {}

impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gauss_kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Segment {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let f_center = f(center);
    let mut kronrod = f_center * WGK[10];
    let mut gauss = 0.0;
    let mut abs_sum = kronrod.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
        let x = half * XGK[j];
        let f1 = f(center - x);
        let f2 = f(center + x);
        fv1[j] = f1;
        fv2[j] = f2;
        kronrod += WGK[j] * (f1 + f2);
        abs_sum += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * kronrod;
    let mut asc = WGK[10] * (f_center - mean).abs();
    for j in 0..10 {
        asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = kronrod * half;
    let abs_sum = abs_sum * half.abs();
    let asc = asc * half.abs();
    let mut error = ((kronrod - gauss) * half).abs();
    if asc != 0.0 && error != 0.0 {
        error = asc * (200.0 * error / asc).powf(1.5).min(1.0);
    }
    if abs_sum > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * abs_sum);
    }
    if !value.is_finite() {
        error = f64::INFINITY;
    }
    Segment {
        a,
        b,
        value,
        error,
        abs_sum,
    }
}

/// Integrates `f` over `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, opts: QuadOptions) -> Result<Quadrature> {
    integrate_with_breaks(f, &[a, b], opts)
}

/// Integrates over `breaks[0]..breaks[last]`, seeding the adaptive scheme
/// with one segment per consecutive pair of break points.
pub fn integrate_with_breaks<F: Fn(f64) -> f64>(
    f: F,
    breaks: &[f64],
    opts: QuadOptions,
) -> Result<Quadrature> {
    assert!(breaks.len() >= 2, "need at least two break points");
    if breaks.windows(2).all(|w| w[0] == w[1]) {
        return Ok(Quadrature {
            value: 0.0,
            abs_error: 0.0,
            intervals: 0,
        });
    }
    let mut heap = BinaryHeap::new();
    for w in breaks.windows(2) {
        if w[0] != w[1] {
            heap.push(gauss_kronrod(&f, w[0], w[1]));
        }
    }
    loop {
        let (value, error, abs_sum) = heap.iter().fold((0.0, 0.0, 0.0), |(v, e, m), s| {
            (v + s.value, e + s.error, m + s.abs_sum)
        });
        // Errors at the rounding floor of every segment cannot be reduced further.
        let target = opts
            .abs_tol
            .max(opts.rel_tol * value.abs())
            .max(60.0 * f64::EPSILON * abs_sum);
        if error <= target && value.is_finite() {
            return Ok(Quadrature {
                value,
                abs_error: error,
                intervals: heap.len(),
            });
        }
        if heap.len() >= opts.max_intervals {
            return Err(Error::QuadratureNonConvergence {
                estimate: value,
                abs_error: error,
                intervals: heap.len(),
            });
        }
        let worst = heap.pop().expect("heap is non-empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Interval can no longer be split in floating point.
            return Err(Error::QuadratureNonConvergence {
                estimate: value,
                abs_error: error,
                intervals: heap.len() + 1,
            });
        }
        heap.push(gauss_kronrod(&f, worst.a, mid));
        heap.push(gauss_kronrod(&f, mid, worst.b));
    }
}

/// Integrates `f` over `[a, ∞)`.
pub fn integrate_to_infinity<F: Fn(f64) -> f64>(f: F, a: f64, opts: QuadOptions) -> Result<Quadrature> {
    let mapped = |t: f64| {
        let one_minus = 1.0 - t;
        let x = a + t / one_minus;
        let jac = 1.0 / (one_minus * one_minus);
        let v = f(x) * jac;
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    integrate_with_breaks(mapped, &[0.0, 0.5, 0.9, 0.99, 1.0], opts)
}

/// Geometric break points `a, 2a, 4a, … , b` for integrands concentrated
/// near the lower limit of a wide radial range.
pub fn geometric_breaks(a: f64, b: f64) -> Vec<f64> {
    let mut out = vec![a];
    if a > 0.0 {
        let mut x = 2.0 * a;
        while x < b {
            out.push(x);
            x *= 2.0;
        }
    }
    out.push(b);
    out
}
