//! Reference constants computed once with the double-double oracle (and
//! cross-checked with an independent 30-digit evaluator), then written down.

#![allow(dead_code)]

pub const CDF_1_96: f64 = 0.975_002_104_851_779_5;
pub const QUANTILE_0_975002: f64 = 1.959_998_205_853_851_2;
pub const MILLS_2: f64 = 0.421_369_229_288_054_5;
pub const HAZARD_2: f64 = 2.373_215_532_822_841;
pub const X_MINUS_HAZARD_5: f64 = -0.186_503_967_125_842_1;
pub const X_MINUS_HAZARD_10: f64 = -0.098_093_233_962_511_96;
pub const LAYER_CENTROID_1_2: f64 = 1.383_169_046_631_552_8;
pub const SQUARE_PROFILE: f64 = 0.475_232_849_247_083_6;
pub const QUANTILE_0_95: f64 = 1.644_853_626_951_472_2;
