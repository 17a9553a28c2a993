//! Adaptive Gauss–Kronrod integration against the standard Gaussian measure,
//! and a bracketing (Brent) root finder.
//!
//! The integrator is a globally adaptive G10/K21 scheme with the QUADPACK
//! error heuristic. Known kinks of the integrand are passed as breakpoints
//! and the initial partition is split there. Integrals against `μ₁` over
//! infinite ranges are truncated at `|x| = 40`; the Gaussian mass beyond is
//! below `1e-300`.

#![allow(clippy::excessive_precision)]

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gauss;

/// Default absolute tolerance for Gaussian integrals.
pub const DEFAULT_TOL: f64 = 1e-10;
/// Integration range cut-off for infinite endpoints.
pub const TAIL_CUTOFF: f64 = 40.0;
/// Default evaluation budget per integral.
pub const DEFAULT_MAX_EVALS: usize = 400_000;

/// Panel edges always inserted for Gaussian-weighted integrals.
const GAUSS_NODES: [f64; 11] = [-16.0, -8.0, -4.0, -2.0, -1.0, 0.0, 1.0, 2.0, 4.0, 8.0, 16.0];

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
/// 10-point Gauss weights for the odd-indexed Kronrod nodes.
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegrationResult {
    pub value: f64,
    /// Absolute error estimate, always `>= 0`.
    pub error_estimate: f64,
    pub evaluations: usize,
}

/// Tolerances and hints for one integral. The stopping target is
/// `max(abs_tol, rel_tol * ∫|f|)`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_evals: usize,
    pub breakpoints: Vec<f64>,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self::absolute(DEFAULT_TOL)
    }
}

impl QuadOptions {
    pub fn absolute(tol: f64) -> Self {
        QuadOptions {
            abs_tol: tol,
            rel_tol: 0.0,
            max_evals: DEFAULT_MAX_EVALS,
            breakpoints: Vec::new(),
        }
    }

    /// Purely relative control (relative to `∫|f|`), safe for integrands
    /// whose magnitude spans many decades.
    pub fn relative(rel_tol: f64) -> Self {
        QuadOptions {
            abs_tol: 0.0,
            rel_tol,
            max_evals: DEFAULT_MAX_EVALS,
            breakpoints: Vec::new(),
        }
    }

    pub fn with_breakpoints<I: IntoIterator<Item = f64>>(mut self, points: I) -> Self {
        self.breakpoints.extend(points);
        self
    }
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    abs: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
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
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.a.total_cmp(&self.a))
    }
}

fn kronrod21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Panel {
    let centre = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(centre);
    let mut resk = WGK[10] * fc;
    let mut resg = 0.0;
    let mut resabs = resk.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = f(centre - dx);
        let f2 = f(centre + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        resk += WGK[j] * (f1 + f2);
        resabs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            resg += WG[j / 2] * (f1 + f2);
        }
    }
    let reskh = 0.5 * resk;
    let mut resasc = WGK[10] * (fc - reskh).abs();
    for j in 0..10 {
        resasc += WGK[j] * ((fv1[j] - reskh).abs() + (fv2[j] - reskh).abs());
    }
    let value = resk * half;
    let resabs = resabs * half.abs();
    let resasc = resasc * half.abs();
    let mut err = ((resk - resg) * half).abs();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * resabs);
    }
    Panel {
        a,
        b,
        value,
        error: err,
        abs: resabs,
    }
}

/// Plain (Lebesgue) integral of `f` over the finite interval `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, opts: &QuadOptions) -> Result<IntegrationResult> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Domain(format!(
            "plain integration needs a finite interval, got [{a}, {b}]"
        )));
    }
    if a > b {
        return Err(Error::Domain(format!("reversed interval [{a}, {b}]")));
    }
    if a == b {
        return Ok(IntegrationResult {
            value: 0.0,
            error_estimate: 0.0,
            evaluations: 0,
        });
    }

    let mut edges: Vec<f64> = Vec::with_capacity(opts.breakpoints.len() + 2);
    edges.push(a);
    edges.extend(opts.breakpoints.iter().copied().filter(|&x| x > a && x < b));
    edges.push(b);
    edges.sort_by(f64::total_cmp);
    edges.dedup();

    let mut heap = BinaryHeap::with_capacity(64);
    let mut evaluations = 0usize;
    let (mut total_err, mut total_abs) = (0.0, 0.0);
    for w in edges.windows(2) {
        let p = kronrod21(&f, w[0], w[1]);
        evaluations += 21;
        total_err += p.error;
        total_abs += p.abs;
        heap.push(p);
    }

    loop {
        let target = opts.abs_tol.max(opts.rel_tol * total_abs);
        if total_err <= target {
            break;
        }
        if evaluations + 42 > opts.max_evals {
            return Err(Error::QuadratureNonConvergence {
                evaluations,
                error_estimate: total_err,
                target,
            });
        }
        let worst = heap.pop().expect("at least one panel");
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) {
            return Err(Error::QuadratureNonConvergence {
                evaluations,
                error_estimate: total_err,
                target,
            });
        }
        let left = kronrod21(&f, worst.a, mid);
        let right = kronrod21(&f, mid, worst.b);
        evaluations += 42;
        total_err += left.error + right.error - worst.error;
        total_abs += left.abs + right.abs - worst.abs;
        heap.push(left);
        heap.push(right);
        if !total_err.is_finite() {
            // recompute from scratch; the running sum can be poisoned by
            // inf - inf when a panel estimate overflowed
            total_err = heap.iter().map(|p| p.error).sum();
            total_abs = heap.iter().map(|p| p.abs).sum();
            if !total_err.is_finite() {
                return Err(Error::QuadratureNonConvergence {
                    evaluations,
                    error_estimate: total_err,
                    target,
                });
            }
        }
    }

    let mut panels = heap.into_vec();
    panels.sort_by(|p, q| p.a.total_cmp(&q.a));
    let value = panels.iter().map(|p| p.value).sum();
    let error_estimate = panels.iter().map(|p| p.error).sum();
    Ok(IntegrationResult {
        value,
        error_estimate,
        evaluations,
    })
}

/// `∫_a^b f(x) dμ₁(x)` with absolute tolerance `tol`; either end may be infinite.
pub fn integrate_gauss<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<IntegrationResult> {
    if !(tol > 0.0) {
        return Err(Error::Domain(format!("tolerance must be positive, got {tol}")));
    }
    integrate_gauss_with(f, a, b, &QuadOptions::absolute(tol))
}

/// `∫_a^b f(x) dμ₁(x)` under explicit options.
pub fn integrate_gauss_with<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, opts: &QuadOptions) -> Result<IntegrationResult> {
    if a.is_nan() || b.is_nan() || a > b {
        return Err(Error::Domain(format!("invalid interval [{a}, {b}]")));
    }
    let lo = a.max(-TAIL_CUTOFF);
    let hi = b.min(TAIL_CUTOFF);
    if lo >= hi {
        return Ok(IntegrationResult {
            value: 0.0,
            error_estimate: 0.0,
            evaluations: 0,
        });
    }
    let mut local = opts.clone();
    local.breakpoints.extend_from_slice(&GAUSS_NODES);
    integrate(
        |x| {
            let w = gauss::density(x);
            if w == 0.0 {
                0.0
            } else {
                f(x) * w
            }
        },
        lo,
        hi,
        &local,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RootResult {
    pub root: f64,
    pub residual: f64,
    /// Final bracket, always inside the initial one.
    pub bracket: (f64, f64),
    pub iterations: usize,
}

/// Stopping rules for [`find_root_with`]. Converged when the bracket
/// half-width drops below `xtol + rtol*|x|` or `|f(x)| <= ftol`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootOptions {
    pub xtol: f64,
    pub rtol: f64,
    pub ftol: f64,
    pub max_iter: usize,
}

impl RootOptions {
    pub fn new(xtol: f64) -> Self {
        RootOptions {
            xtol,
            rtol: 4.0 * f64::EPSILON,
            ftol: 0.0,
            max_iter: 200,
        }
    }

    pub fn with_ftol(mut self, ftol: f64) -> Self {
        self.ftol = ftol;
        self
    }
}

/// Brent's method on `[lo, hi]`; `|f(root)| <= tol` or bracket width `<= tol`.
///
/// Requires a strict sign change, or exactly one endpoint at zero. An
/// identically zero function does not form a bracket and is rejected.
pub fn find_root<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, tol: f64) -> Result<RootResult> {
    if !(tol > 0.0) {
        return Err(Error::Domain(format!("tolerance must be positive, got {tol}")));
    }
    find_root_with(|x| Ok(f(x)), lo, hi, &RootOptions::new(tol).with_ftol(tol))
}

/// Brent's method over a fallible function (e.g. one that integrates).
pub fn find_root_with<F: FnMut(f64) -> Result<f64>>(
    mut f: F,
    lo: f64,
    hi: f64,
    opts: &RootOptions,
) -> Result<RootResult> {
    let (lo, hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    if !(lo.is_finite() && hi.is_finite()) {
        return Err(Error::Domain(format!("bracket must be finite, got [{lo}, {hi}]")));
    }
    let f_lo = f(lo)?;
    let f_hi = f(hi)?;
    if f_lo.is_nan() || f_hi.is_nan() {
        return Err(Error::Domain(format!("function is NaN at a bracket end [{lo}, {hi}]")));
    }
    let done = |root: f64, residual: f64, bracket: (f64, f64), iterations: usize| RootResult {
        root,
        residual,
        bracket,
        iterations,
    };
    match (f_lo == 0.0, f_hi == 0.0) {
        (true, true) => {
            return Err(Error::NoSignChange { lo, hi, f_lo, f_hi });
        }
        (true, false) => return Ok(done(lo, 0.0, (lo, lo), 0)),
        (false, true) => return Ok(done(hi, 0.0, (hi, hi), 0)),
        _ => {}
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::NoSignChange { lo, hi, f_lo, f_hi });
    }

    let (mut a, mut b, mut c) = (lo, hi, hi);
    let (mut fa, mut fb, mut fc) = (f_lo, f_hi, f_hi);
    let mut d = b - a;
    let mut e = d;
    for iter in 1..=opts.max_iter {
        if (fb > 0.0) == (fc > 0.0) {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * (opts.xtol + opts.rtol * b.abs());
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb == 0.0 || fb.abs() <= opts.ftol {
            let bracket = if b <= c { (b, c) } else { (c, b) };
            return Ok(done(b.clamp(lo, hi), fb, bracket, iter));
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            let min1 = 3.0 * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if 2.0 * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol1 { d } else { tol1.copysign(xm) };
        fb = f(b)?;
        if fb.is_nan() {
            return Err(Error::Domain(format!("function returned NaN at {b}")));
        }
    }
    let (blo, bhi) = if b <= c { (b, c) } else { (c, b) };
    Err(Error::RootNonConvergence {
        iterations: opts.max_iter,
        lo: blo,
        hi: bhi,
    })
}
