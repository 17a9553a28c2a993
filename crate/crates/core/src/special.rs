//! Complementary error function and its scaled form.
//!
//! Rational Chebyshev approximations from W. J. Cody, "Rational Chebyshev
//! approximation for the error function", Math. Comp. 23 (1969), as used in
//! the netlib `CALERF` routine. The exponential factors are evaluated with the
//! split-argument trick so that `exp(-x^2)` keeps full relative accuracy for
//! large arguments.

#![allow(clippy::excessive_precision, clippy::inconsistent_digit_grouping)]

const THRESHOLD: f64 = 0.46875;
const FRAC_1_SQRT_PI: f64 = 0.564_189_583_547_756_286_95;

const A: [f64; 5] = [
    3.161_123_743_870_565_6,
    113.864_154_151_050_156,
    377.485_237_685_302_021,
    3209.377_589_138_469_47,
    0.185_777_706_184_603_153,
];
const B: [f64; 4] = [
    23.601_290_952_344_120_9,
    244.024_637_934_444_173,
    1282.616_526_077_372_28,
    2844.236_833_439_170_62,
];
const C: [f64; 9] = [
    0.564_188_496_988_670_089,
    8.883_149_794_388_375_94,
    66.119_190_637_141_629_5,
    298.635_138_197_400_131,
    881.952_221_241_769_09,
    1712.047_612_634_070_58,
    2051.078_377_826_071_47,
    1230.339_354_797_997_25,
    2.153_115_354_744_038_46e-8,
];
const D: [f64; 8] = [
    15.744_926_110_709_834_7,
    117.693_950_891_312_499,
    537.181_101_862_009_858,
    1621.389_574_566_690_19,
    3290.799_235_733_459_63,
    4362.619_090_143_247_16,
    3439.367_674_143_721_64,
    1230.339_354_803_749_42,
];
const P: [f64; 6] = [
    0.305_326_634_961_232_344,
    0.360_344_899_949_804_439,
    0.125_781_726_111_229_246,
    0.016_083_785_148_742_276_6,
    6.587_491_615_298_378_03e-4,
    0.016_315_387_137_302_097_8,
];
const Q: [f64; 5] = [
    2.568_520_192_289_822_42,
    1.872_952_849_923_460_47,
    0.527_905_102_951_428_412,
    0.060_518_341_312_441_319_1,
    0.002_335_204_976_268_691_85,
];

#[inline]
fn small_ratio(z: f64) -> f64 {
    ((((A[4] * z + A[0]) * z + A[1]) * z + A[2]) * z + A[3]) / ((((z + B[0]) * z + B[1]) * z + B[2]) * z + B[3])
}

#[inline]
fn mid_ratio(y: f64) -> f64 {
    let mut num = C[8] * y;
    let mut den = y;
    for i in 0..7 {
        num = (num + C[i]) * y;
        den = (den + D[i]) * y;
    }
    (num + C[7]) / (den + D[7])
}

#[inline]
fn tail_ratio(z: f64) -> f64 {
    let mut num = P[5] * z;
    let mut den = z;
    for i in 0..4 {
        num = (num + P[i]) * z;
        den = (den + Q[i]) * z;
    }
    z * (num + P[4]) / (den + Q[4])
}

/// `erfcx(y) = exp(y^2) erfc(y)` for `y > THRESHOLD`.
#[inline]
fn erfcx_above_threshold(y: f64) -> f64 {
    if y <= 4.0 {
        mid_ratio(y)
    } else {
        (FRAC_1_SQRT_PI - tail_ratio(1.0 / (y * y))) / y
    }
}

/// Splits `x^2 = s + d` with `s` exactly representable and `|d|` small.
#[inline]
fn split_square(x: f64) -> (f64, f64) {
    let t = (x * 16.0).trunc() / 16.0;
    (t * t, (x - t) * (x + t))
}

/// `exp(-x^2)` with full relative accuracy for large `|x|`.
#[inline]
pub fn exp_neg_sq(x: f64) -> f64 {
    let (s, d) = split_square(x);
    (-s).exp() * (-d).exp()
}

/// `exp(-x^2 / 2)` with full relative accuracy for large `|x|`.
#[inline]
pub fn exp_neg_half_sq(x: f64) -> f64 {
    let (s, d) = split_square(x);
    (-0.5 * s).exp() * (-0.5 * d).exp()
}

/// `exp(x^2 / 2)`; overflows to `+inf` for `|x| > ~37.7`.
#[inline]
pub fn exp_half_sq(x: f64) -> f64 {
    let (s, d) = split_square(x);
    (0.5 * s).exp() * (0.5 * d).exp()
}

/// Scaled complementary error function `exp(x^2) erfc(x)`.
pub fn erfcx(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    let y = x.abs();
    if y <= THRESHOLD {
        let z = y * y;
        return z.exp() * (1.0 - x * small_ratio(z));
    }
    if x == f64::INFINITY {
        return 0.0;
    }
    let r = erfcx_above_threshold(y);
    if x < 0.0 {
        let (s, d) = split_square(x);
        2.0 * s.exp() * d.exp() - r
    } else {
        r
    }
}

/// Complementary error function.
pub fn erfc(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    let y = x.abs();
    if y <= THRESHOLD {
        return 1.0 - x * small_ratio(y * y);
    }
    let tail = if y >= 27.3 {
        0.0
    } else {
        erfcx_above_threshold(y) * exp_neg_sq(y)
    };
    if x < 0.0 {
        2.0 - tail
    } else {
        tail
    }
}
