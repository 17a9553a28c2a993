//! One-dimensional standard Gaussian primitives.
//!
//! Everything here is built on the Mills-ratio function
//! `g(x) = exp(x^2/2) ∫_x^∞ exp(-t^2/2) dt`, evaluated through the scaled
//! complementary error function so that the upper tail never goes through a
//! `1 - Φ` subtraction. Infinite arguments follow `Φ(-∞) = 0`, `Φ(∞) = 1`.

#![allow(clippy::excessive_precision)]

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special;

pub const SQRT_2PI: f64 = 2.506_628_274_631_000_502_4;
pub const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_677_94;
/// `g(0) = sqrt(pi/2)`.
pub const SQRT_FRAC_PI_2: f64 = 1.253_314_137_315_500_251_2;
/// `E|X| = sqrt(2/pi)` for a standard Gaussian `X`.
pub const SQRT_FRAC_2_PI: f64 = 0.797_884_560_802_865_355_88;

/// The x values tabulated in the tail-bound comparison table.
pub const TABLE_XS: [f64; 10] = [0.0, 2.0, 4.0, 6.0, 8.0, 10.0, 20.0, 30.0, 40.0, 50.0];

/// Standard Gaussian density.
#[inline]
pub fn density(x: f64) -> f64 {
    if x.is_infinite() {
        return 0.0;
    }
    FRAC_1_SQRT_2PI * special::exp_neg_half_sq(x)
}

/// Mills-ratio function `g(x) = exp(x^2/2) ∫_x^∞ exp(-t^2/2) dt`.
///
/// Positive and strictly decreasing; `g(x) ~ 1/x` as `x → ∞` and it
/// overflows to `+inf` below roughly `x = -37.7`.
pub fn mills(x: f64) -> f64 {
    if x >= 0.0 {
        SQRT_FRAC_PI_2 * special::erfcx(x * std::f64::consts::FRAC_1_SQRT_2)
    } else if x.is_nan() {
        f64::NAN
    } else {
        SQRT_2PI * special::exp_half_sq(x) - mills(-x)
    }
}

/// Gaussian hazard (failure-rate) function `f(x) = 1 / g(x)`.
pub fn hazard(x: f64) -> f64 {
    1.0 / mills(x)
}

/// Standard Gaussian CDF `Φ(x)`.
pub fn std_cdf(x: f64) -> f64 {
    if x.is_nan() {
        f64::NAN
    } else if x <= 0.0 {
        0.5 * special::erfc(-x * std::f64::consts::FRAC_1_SQRT_2)
    } else {
        1.0 - 0.5 * special::erfc(x * std::f64::consts::FRAC_1_SQRT_2)
    }
}

/// Upper tail `1 - Φ(x)`, accurate in relative terms for large `x`.
pub fn std_sf(x: f64) -> f64 {
    std_cdf(-x)
}

/// `μ₁([a, b])`, arranged to avoid cancellation when both ends sit in
/// the same tail. Returns 0 for `a >= b`.
pub fn gauss_mass(a: f64, b: f64) -> f64 {
    if !(a < b) {
        return 0.0;
    }
    if b <= 0.0 {
        std_cdf(b) - std_cdf(a)
    } else if a >= 0.0 {
        std_sf(a) - std_sf(b)
    } else {
        1.0 - std_cdf(a) - std_sf(b)
    }
}

/// `1 - μ₁([a, b])` without cancellation when the interval is wide.
pub fn gauss_mass_complement(a: f64, b: f64) -> f64 {
    if !(a < b) {
        return 1.0;
    }
    std_cdf(a) + std_sf(b)
}

/// `∫_a^b x dμ₁(x) = φ(a) - φ(b)`.
pub fn gauss_first_moment(a: f64, b: f64) -> f64 {
    density(a) - density(b)
}

/// Quantile `Φ⁻¹(p)`; `∓∞` at `p ∈ {0, 1}`.
pub fn std_cdf_inv(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Domain(format!("probability {p} outside [0, 1]")));
    }
    if p > 0.5 {
        Ok(-lower_quantile(1.0 - p))
    } else {
        Ok(lower_quantile(p))
    }
}

/// `x` with `1 - Φ(x) = q`; keeps precision for tiny `q`.
pub fn std_sf_inv(q: f64) -> Result<f64> {
    std_cdf_inv(q).map(|x| -x)
}

/// Quantile for `p <= 0.5`: Wichura's AS241 followed by one Newton step.
fn lower_quantile(p: f64) -> f64 {
    if p == 0.0 {
        return f64::NEG_INFINITY;
    }
    if p == 0.5 {
        return 0.0;
    }
    let mut x = as241(p);
    let d = density(x);
    if d > 0.0 && x.is_finite() {
        x -= (std_cdf(x) - p) / d;
    }
    x
}

fn as241(p: f64) -> f64 {
    const A: [f64; 8] = [
        3.387_132_872_796_366_608_0e0,
        1.331_416_678_917_843_774_5e2,
        1.971_590_950_306_551_442_7e3,
        1.373_169_376_550_946_112_5e4,
        4.592_195_393_154_987_145_7e4,
        6.726_577_092_700_870_085_3e4,
        3.343_057_558_358_812_810_5e4,
        2.509_080_928_730_122_672_7e3,
    ];
    const B: [f64; 8] = [
        1.0,
        4.231_333_070_160_091_125_2e1,
        6.871_870_074_920_579_083_0e2,
        5.394_196_021_424_751_107_7e3,
        2.121_379_430_158_659_586_7e4,
        3.930_789_580_009_271_061_0e4,
        2.872_908_573_572_194_267_4e4,
        5.226_495_278_852_854_561_0e3,
    ];
    const C: [f64; 8] = [
        1.423_437_110_749_683_577_34e0,
        4.630_337_846_156_545_295_90e0,
        5.769_497_221_460_691_405_50e0,
        3.647_848_324_763_204_605_04e0,
        1.270_458_252_452_368_382_58e0,
        2.417_807_251_774_506_117_70e-1,
        2.272_384_498_926_918_458_33e-2,
        7.745_450_142_783_414_076_40e-4,
    ];
    const D: [f64; 8] = [
        1.0,
        2.053_191_626_637_758_821_87e0,
        1.676_384_830_183_803_849_40e0,
        6.897_673_349_851_000_045_50e-1,
        1.481_039_764_274_800_745_90e-1,
        1.519_866_656_361_645_719_66e-2,
        5.475_938_084_995_344_946_00e-4,
        1.050_750_071_644_416_843_24e-9,
    ];
    const E: [f64; 8] = [
        6.657_904_643_501_103_777_20e0,
        5.463_784_911_164_114_369_90e0,
        1.784_826_539_917_291_335_80e0,
        2.965_605_718_285_048_912_30e-1,
        2.653_218_952_657_612_309_30e-2,
        1.242_660_947_388_078_438_60e-3,
        2.711_555_568_743_487_578_15e-5,
        2.010_334_399_292_288_132_65e-7,
    ];
    const F: [f64; 8] = [
        1.0,
        5.998_322_065_558_879_376_90e-1,
        1.369_298_809_227_358_053_10e-1,
        1.487_536_129_085_061_485_25e-2,
        7.868_691_311_456_132_591_00e-4,
        1.846_318_317_510_054_681_80e-5,
        1.421_511_758_316_445_888_70e-7,
        2.044_263_103_389_939_785_64e-15,
    ];
    fn horner(c: &[f64; 8], r: f64) -> f64 {
        c.iter().rev().fold(0.0, |acc, &k| acc * r + k)
    }

    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180_625 - q * q;
        return q * horner(&A, r) / horner(&B, r);
    }
    // p < 0.5 here, so the lower tail is the relevant one.
    let r = (-p.ln()).sqrt();
    let v = if r <= 5.0 {
        let r = r - 1.6;
        horner(&C, r) / horner(&D, r)
    } else {
        let r = r - 5.0;
        horner(&E, r) / horner(&F, r)
    };
    -v
}

/// Gaussian truncated mean of `[a, b]`, i.e. the `c` with
/// `∫_a^b (x - c) dμ₁(x) = 0`.
pub fn layer_centroid(a: f64, b: f64) -> Result<f64> {
    if a.is_nan() || b.is_nan() || a >= b {
        return Err(Error::Domain(format!("degenerate interval [{a}, {b}]")));
    }
    if a == f64::INFINITY || b == f64::NEG_INFINITY {
        return Err(Error::Degenerate(format!(
            "interval [{a}, {b}] has zero Gaussian measure"
        )));
    }
    if a >= 0.0 {
        // Upper tail: c = (φ(a) - φ(b)) / (Q(a) - Q(b)) = (1 - r) / (g(a) - r g(b))
        // with r = φ(b)/φ(a); no underflow even when both tails vanish.
        if !b.is_finite() {
            return Ok(1.0 / mills(a));
        }
        let e = (a - b) * (a + b) / 2.0;
        return Ok(-e.exp_m1() / (mills(a) - e.exp() * mills(b)));
    }
    if b <= 0.0 {
        return layer_centroid(-b, -a).map(|c| -c);
    }
    Ok(gauss_first_moment(a, b) / gauss_mass(a, b))
}

/// Closed-form tail estimates for `g` at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailBoundSet {
    pub x: f64,
    /// Komatsu lower bound `2 / (x + sqrt(x^2 + 4))`.
    pub lower: f64,
    /// Sharper upper bound `4 / (3x + sqrt(x^2 + 8))`, `+inf` for `x <= -1`.
    pub upper_new: f64,
    /// Komatsu upper bound `2 / (x + sqrt(x^2 + 2))`.
    pub upper_komatsu: f64,
    /// `false` when `x <= -1`, where the sharper upper bound does not apply.
    pub valid: bool,
}

/// Evaluates the three tail bounds. For large negative `x` the algebraically
/// equivalent forms `(sqrt(x^2+k) - x) / (k/2)` are used to avoid cancellation.
pub fn tail_bounds(x: f64) -> TailBoundSet {
    let lower = if x >= 0.0 {
        2.0 / (x + (x * x + 4.0).sqrt())
    } else {
        ((x * x + 4.0).sqrt() - x) / 2.0
    };
    let upper_komatsu = if x >= 0.0 {
        2.0 / (x + (x * x + 2.0).sqrt())
    } else {
        (x * x + 2.0).sqrt() - x
    };
    let valid = x > -1.0;
    let upper_new = if valid {
        4.0 / (3.0 * x + (x * x + 8.0).sqrt())
    } else {
        f64::INFINITY
    };
    TailBoundSet {
        x,
        lower,
        upper_new,
        upper_komatsu,
        valid,
    }
}

/// Relative errors `(bound - g) / g` of the three estimates at `x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorTableRow {
    pub x: f64,
    pub err_upper_new: f64,
    pub err_upper_komatsu: f64,
    pub err_lower: f64,
}

pub fn error_row(x: f64) -> Result<ErrorTableRow> {
    if !(x > -1.0) || !x.is_finite() {
        return Err(Error::Domain(format!("error table requires finite x > -1, got {x}")));
    }
    let g = mills(x);
    let b = tail_bounds(x);
    let rel = |v: f64| (v - g) / g;
    Ok(ErrorTableRow {
        x,
        err_upper_new: rel(b.upper_new),
        err_upper_komatsu: rel(b.upper_komatsu),
        err_lower: rel(b.lower),
    })
}

/// One row per input; rows with `x <= -1` carry a domain error.
pub fn error_table(xs: &[f64]) -> Vec<Result<ErrorTableRow>> {
    xs.iter().map(|&x| error_row(x)).collect()
}

/// Rounds to `digits` significant digits, ties away from zero.
///
/// Ties are judged on the shortest decimal representation of `v`, so
/// `0.0125` rounds to `0.013` even though its binary value is just below.
pub fn round_sig(v: f64, digits: u32) -> f64 {
    if v == 0.0 || !v.is_finite() || digits == 0 {
        return v;
    }
    let s = format!("{:e}", v.abs());
    let (mant, exp) = s.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("exponent digits");
    let mut all: Vec<u8> = mant.bytes().filter(u8::is_ascii_digit).map(|d| d - b'0').collect();
    let keep = digits as usize;
    all.resize(all.len().max(keep + 1), 0);
    let mut kept = all[..keep].iter().fold(0u64, |acc, &d| acc * 10 + d as u64);
    if all[keep] >= 5 {
        kept += 1;
    }
    let value: f64 = format!("{kept}e{}", exp - (keep as i32 - 1))
        .parse()
        .expect("decimal literal");
    v.signum() * value
}
