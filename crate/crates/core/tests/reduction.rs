mod frozen;

use frozen::SQUARE_PROFILE;
use gausslayer::gauss::{gauss_mass, std_cdf};
use gausslayer::geometry::{random_polygon, ConvexPolygon};
use gausslayer::profiles::{functionals, random_profile, ConcaveProfile, ProfileBox};
use gausslayer::quadrature::integrate_gauss;
use gausslayer::reduction::{
    check_concavity, ehrhard_profile, line_intersections, linearization_suite, linearize, mass_match_intercept,
    polygon_profile, profile_grid,
};
use gausslayer::{Error, Execution};
use proptest::prelude::*;

const INF: f64 = f64::INFINITY;

fn unit(theta: f64) -> [f64; 2] {
    [theta.cos(), theta.sin()]
}

#[test]
fn half_plane_in_a_huge_box() {
    let h = 0.8;
    let poly = ConvexPolygon::rectangle(-60.0, 60.0, -60.0, h).unwrap();
    let grid: Vec<f64> = (-20..=20).map(|i| i as f64 * 0.25).collect();
    for (t, psi) in ehrhard_profile(&poly, [1.0, 0.0], &grid).unwrap() {
        assert!((psi - h).abs() < 1e-12, "t = {t}: {psi}");
    }
}

#[test]
fn square_profile_is_constant() {
    let sq = ConvexPolygon::rectangle(-1.0, 1.0, -1.0, 1.0).unwrap();
    let grid = [-0.99, -0.5, 0.0, 0.3, 0.99];
    for (_, psi) in ehrhard_profile(&sq, [1.0, 0.0], &grid).unwrap() {
        assert!((psi - SQUARE_PROFILE).abs() < 1e-14);
    }
    let outside = ehrhard_profile(&sq, [1.0, 0.0], &[1.5]).unwrap();
    assert_eq!(outside[0].1, f64::NEG_INFINITY);
}

#[test]
fn concavity_examples() {
    let ts: Vec<f64> = (0..21).map(|i| -1.0 + 0.1 * i as f64).collect();
    let lin: Vec<_> = ts.iter().map(|&t| (t, 2.0 * t - 1.0)).collect();
    let r = check_concavity(&lin, 1e-12).unwrap();
    assert!(r.max_violation.abs() < 1e-15 && r.concave);
    let cap: Vec<_> = ts.iter().map(|&t| (t, -t * t)).collect();
    let r = check_concavity(&cap, 1e-12).unwrap();
    assert!(r.max_violation <= 0.0 && r.concave);
    let cup: Vec<_> = ts.iter().map(|&t| (t, t * t)).collect();
    let r = check_concavity(&cup, 1e-12).unwrap();
    assert!(r.max_violation > 0.0 && !r.concave);
    assert!(matches!(
        check_concavity(&lin[..2], 1e-12),
        Err(Error::InsufficientData(_))
    ));
}

#[test]
fn ehrhard_profiles_of_random_polygons_are_concave() {
    for seed in 0..200u64 {
        let poly = random_polygon(seed).unwrap();
        let u = unit(0.37 * seed as f64);
        let grid = profile_grid(&poly, u, 101).unwrap();
        let samples = ehrhard_profile(&poly, u, &grid).unwrap();
        let r = check_concavity(&samples, 1e-6).unwrap();
        assert!(r.concave, "seed {seed}: {r:?}");
    }
}

#[test]
fn intercept_examples() {
    let (m, h) = (0.7, 0.2);
    let line = ConcaveProfile::linear(m, h, (-INF, INF)).unwrap();
    let got = mass_match_intercept(&line, (-1.0, 1.5), m, 1e-13).unwrap();
    assert!((got - h).abs() < 1e-9);
    let flat = ConcaveProfile::constant(-0.4, (-INF, INF)).unwrap();
    let got = mass_match_intercept(&flat, (-0.5, 2.0), 0.0, 1e-13).unwrap();
    assert!((got + 0.4).abs() < 1e-9);
}

#[test]
fn random_intercepts_match_mass() {
    for seed in 0..50u64 {
        let p = random_profile(seed, 1 + (seed % 5) as usize, &ProfileBox::default()).unwrap();
        let (a, b) = (-1.0, 1.0);
        let h = mass_match_intercept(&p, (a, b), 1.0, 1e-12).unwrap();
        let line_mass = integrate_gauss(|x| std_cdf(x + h), a, b, 1e-14).unwrap().value;
        let prof_mass = functionals(&p, (a, b), 1e-14).unwrap().mass;
        assert!((line_mass - prof_mass).abs() < 1e-10, "seed {seed}");
    }
}

#[test]
fn linearize_examples() {
    let line = ConcaveProfile::linear(-0.6, 0.9, (-INF, INF)).unwrap();
    let r = linearize(&line, (-1.0, 2.0), 1e-10).unwrap();
    assert!(r.linear_input);
    assert!((r.m0 + 0.6).abs() < 1e-12 && (r.h0 - 0.9).abs() < 1e-12);
    assert_eq!((r.mass_residual, r.moment_residual), (0.0, 0.0));

    let tent = ConcaveProfile::new((-1.0, 1.0), vec![(-1.0, 0.0), (0.0, 1.0), (1.0, 0.0)]).unwrap();
    let r = linearize(&tent, (-1.0, 1.0), 1e-10).unwrap();
    assert!(r.m0.abs() < 1e-9, "m0 = {}", r.m0);
    let mass = functionals(&tent, (-1.0, 1.0), 1e-14).unwrap().mass;
    assert!((std_cdf(r.h0) * gauss_mass(-1.0, 1.0) - mass).abs() < 1e-10);
    assert!(r.holds(1e-10));
    assert_eq!(r.intersections.len(), 2);
}

#[test]
fn linearization_holds_on_random_profiles() {
    let suite = linearization_suite(100, 1, 1e-8, Execution::default()).unwrap();
    assert!(
        suite.pass,
        "{:?}",
        suite.failures.iter().map(|c| c.seed).collect::<Vec<_>>()
    );
    assert_eq!(suite.instances, 100);
    assert!(suite.max_mass_residual <= 1e-8 && suite.max_moment_residual <= 1e-8);
}

#[test]
fn polygon_profiles_are_concave_profiles() {
    for seed in 0..20u64 {
        let poly = random_polygon(seed).unwrap();
        let p = polygon_profile(&poly, unit(seed as f64), 64).unwrap();
        let s = p.slopes();
        assert!(s.windows(2).all(|w| w[1] <= w[0] + 1e-10 * (1.0 + w[0].abs())));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ehrhard_concavity(seed in 0u64..1_000_000, theta in 0.0f64..std::f64::consts::TAU) {
        let poly = random_polygon(seed).unwrap();
        let u = unit(theta);
        let grid = profile_grid(&poly, u, 101).unwrap();
        let samples = ehrhard_profile(&poly, u, &grid).unwrap();
        prop_assert!(check_concavity(&samples, 1e-6).unwrap().concave);
    }

    #[test]
    fn mass_matched_lines_cross_the_profile(seed in 0u64..1_000_000, m in -3.0f64..3.0, a in -2.0f64..0.0, len in 0.3f64..3.0) {
        let p = random_profile(seed, 1 + (seed % 6) as usize, &ProfileBox::default()).unwrap();
        let b = a + len;
        let (lo, hi) = p.support();
        prop_assume!(lo < b && hi > a && functionals(&p, (a, b), 1e-13).unwrap().mass > 1e-9);
        let h = mass_match_intercept(&p, (a, b), m, 1e-12).unwrap();
        let n = 400;
        let (mut above, mut below) = (false, false);
        for i in 0..=n {
            let x = a + (b - a) * i as f64 / n as f64;
            let d = p.eval(x) - (m * x + h);
            above |= d >= -1e-9;
            below |= d <= 1e-9;
        }
        prop_assert!(above && below);
        if lo <= a && hi >= b {
            let xs = line_intersections(&p, gausslayer::line::Line::new(m, h), a, b, 1e-12);
            prop_assert!(!xs.is_empty() || p.restricted(a, b).unwrap().is_linear());
        }
    }
}
