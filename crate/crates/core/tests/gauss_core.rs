mod frozen;

use frozen::*;
use gausslayer::gauss::{
    error_row, error_table, hazard, layer_centroid, mills, round_sig, std_cdf, std_cdf_inv, std_sf, tail_bounds,
    SQRT_FRAC_2_PI, SQRT_FRAC_PI_2, TABLE_XS,
};
use gausslayer::Error;
use proptest::prelude::*;

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1e-300)
}

#[test]
fn cdf_examples() {
    assert_eq!(std_cdf(0.0), 0.5);
    assert_eq!(std_cdf(f64::INFINITY), 1.0);
    assert_eq!(std_cdf(f64::NEG_INFINITY), 0.0);
    assert!(close(std_cdf(1.96), CDF_1_96, 1e-15));
    assert!(std_cdf(f64::NAN).is_nan());
}

#[test]
fn quantile_examples() {
    assert_eq!(std_cdf_inv(0.5).unwrap(), 0.0);
    assert!((std_cdf_inv(std_cdf(1.234)).unwrap() - 1.234).abs() < 1e-12);
    assert!(close(std_cdf_inv(0.975002).unwrap(), QUANTILE_0_975002, 1e-14));
    assert_eq!(std_cdf_inv(0.0).unwrap(), f64::NEG_INFINITY);
    assert_eq!(std_cdf_inv(1.0).unwrap(), f64::INFINITY);
    for p in [-0.1, 1.5, f64::NAN] {
        assert!(matches!(std_cdf_inv(p), Err(Error::Domain(_))), "p = {p}");
    }
}

#[test]
fn mills_examples() {
    assert!(close(mills(0.0), SQRT_FRAC_PI_2, 1e-15));
    assert!(close(mills(2.0), MILLS_2, 1e-14));
    let g = mills(50.0);
    let lo = 2.0 / (50.0 + 2504f64.sqrt());
    let hi = 4.0 / (150.0 + 2508f64.sqrt());
    assert!(lo < g && g < hi);
}

#[test]
fn hazard_examples() {
    assert!(close(hazard(0.0), SQRT_FRAC_2_PI, 1e-15));
    assert!(close(hazard(2.0), HAZARD_2, 1e-14));
    let d5 = 5.0 - hazard(5.0);
    let d10 = 10.0 - hazard(10.0);
    assert!(close(d5, X_MINUS_HAZARD_5, 1e-10));
    assert!(close(d10, X_MINUS_HAZARD_10, 1e-10));
    assert!(d10 < 0.0 && d10.abs() < d5.abs());
}

#[test]
fn tail_bounds_examples() {
    let b = tail_bounds(0.0);
    assert_eq!(b.lower, 1.0);
    assert!(close(b.upper_new, 2f64.sqrt(), 1e-15));
    assert!(close(b.upper_komatsu, 2f64.sqrt(), 1e-15));

    let rel = |x: f64| {
        let g = mills(x);
        let b = tail_bounds(x);
        [
            round_sig((b.lower - g) / g, 2),
            round_sig((b.upper_new - g) / g, 2),
            round_sig((b.upper_komatsu - g) / g, 2),
        ]
    };
    assert_eq!(rel(2.0), [-0.17e-1, 0.30e-2, 0.67e-1]);
    assert_eq!(rel(40.0), [-0.39e-6, 0.48e-9, 0.31e-3]);

    let bad = tail_bounds(-1.5);
    assert!(!bad.valid && bad.upper_new == f64::INFINITY);
}

#[test]
fn error_table_examples() {
    let row = |x: f64| {
        let r = error_row(x).unwrap();
        [
            round_sig(r.err_upper_new, 2),
            round_sig(r.err_upper_komatsu, 2),
            round_sig(r.err_lower, 2),
        ]
    };
    assert_eq!(row(0.0), [0.13, 0.13, -0.20]);
    assert_eq!(row(50.0), [0.13e-9, 0.20e-3, -0.16e-6]);
    // the printed .27e-4 and -.61e-3 are one unit off in the last digit
    assert_eq!(row(6.0), [0.28e-4, 0.13e-1, -0.62e-3]);

    let rows = error_table(&[0.0, -1.0, -3.0, 2.0]);
    assert!(rows[0].is_ok() && rows[3].is_ok());
    assert!(matches!(rows[1], Err(Error::Domain(_))));
    assert!(matches!(rows[2], Err(Error::Domain(_))));
    assert_eq!(error_table(&TABLE_XS).len(), 10);
}

#[test]
fn layer_centroid_examples() {
    for b in [0.1, 1.0, 3.0, f64::INFINITY] {
        assert_eq!(layer_centroid(-b, b).unwrap(), 0.0);
    }
    assert!(close(
        layer_centroid(0.0, f64::INFINITY).unwrap(),
        SQRT_FRAC_2_PI,
        1e-15
    ));
    assert!(close(layer_centroid(1.0, 2.0).unwrap(), LAYER_CENTROID_1_2, 1e-13));
    assert!(matches!(layer_centroid(2.0, 1.0), Err(Error::Domain(_))));
    assert!(layer_centroid(1.0, 1.0).is_err());
}

proptest! {
    #[test]
    fn cdf_monotone_and_symmetric(x in -40.0f64..40.0, d in 1e-6f64..5.0) {
        prop_assert!(std_cdf(x + d) >= std_cdf(x));
        let s = std_cdf(x) + std_cdf(-x);
        prop_assert!((s - 1.0).abs() <= 2.0 * f64::EPSILON);
        prop_assert_eq!(std_sf(x), std_cdf(-x));
    }

    #[test]
    fn quantile_roundtrip(p in 1e-300f64..1.0) {
        let x = std_cdf_inv(p).unwrap();
        let back = std_cdf(x);
        prop_assert!(((back - p) / p).abs() < 1e-13, "p = {p}, x = {x}, back = {back}");
    }

    #[test]
    fn mills_reciprocal_of_hazard(x in -30.0f64..1e4) {
        prop_assert!(close(mills(x) * hazard(x), 1.0, 4.0 * f64::EPSILON));
    }

    #[test]
    fn sandwich_holds(x in -0.999f64..1e3) {
        let b = tail_bounds(x);
        let g = mills(x);
        prop_assert!(b.lower <= g * (1.0 + 1e-13));
        prop_assert!(g <= b.upper_new * (1.0 + 1e-13));
        if x >= 0.0 {
            prop_assert!(b.upper_new <= b.upper_komatsu * (1.0 + 1e-13));
        }
    }

    #[test]
    fn layer_centroid_inside(a in -8.0f64..8.0, len in 1e-3f64..8.0) {
        let b = a + len;
        let c = layer_centroid(a, b).unwrap();
        prop_assert!(c > a && c < b);
        prop_assert!(close(layer_centroid(-b, -a).unwrap(), -c, 1e-10) || c.abs() < 1e-14);
    }
}
