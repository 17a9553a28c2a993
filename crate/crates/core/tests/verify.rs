mod frozen;

use frozen::QUANTILE_0_95;
use gausslayer::gauss::{gauss_mass, layer_centroid};
use gausslayer::geometry::{polygon_mass, random_polygon, ConvexPolygon};
use gausslayer::profiles::ConcaveProfile;
use gausslayer::verify::{
    cross_validate, match_layer, pair_margin, pipeline_check, random_sidak_instance, relaxed_half_plane_check,
    search_problem2, theorem1_batch, theorem1_profile, verify_sidak, verify_theorem1, verify_theorem1_polygon,
    verify_theorem1a, verify_wedge, write_jsonl, GaussianVector, HypothesisMode, Method, Status, Theorem1aInput,
    WedgeInstance,
};
use gausslayer::{Error, Execution};
use serde_json::json;

const INF: f64 = f64::INFINITY;
const WS: [f64; 9] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];

#[test]
fn match_layer_examples() {
    let l = match_layer(0.0, 0.9, 1e-13).unwrap();
    assert!((l.b - QUANTILE_0_95).abs() < 1e-10 && (l.a + QUANTILE_0_95).abs() < 1e-10);
    for w in [0.01, 0.2, 0.5, 0.77, 0.99] {
        let l = match_layer(0.0, w, 1e-13).unwrap();
        assert!((l.a + l.b).abs() < 1e-9, "w = {w}: {l:?}");
    }
    let l = match_layer(0.3, 0.5, 1e-13).unwrap();
    assert!((layer_centroid(l.a, l.b).unwrap() - 0.3).abs() < 1e-10);
    assert!((gauss_mass(l.a, l.b) - 0.5).abs() < 1e-12);
}

#[test]
fn theorem1_trivial_bodies() {
    let full = ConcaveProfile::plus_infinity((-INF, INF)).unwrap();
    let flat = ConcaveProfile::constant(-0.4, (-INF, INF)).unwrap();
    for w in [0.1, 0.5, 0.9] {
        let r = verify_theorem1(&full, w, 1e-9).unwrap();
        assert!((r.lhs - w).abs() < 1e-10 && r.margin.abs() < 1e-10 && r.passed());
        assert_eq!(r.method, Method::Quadrature);
        let r = verify_theorem1(&flat, w, 1e-9).unwrap();
        assert!(r.margin.abs() < 1e-10 && r.passed());
    }
}

#[test]
fn theorem1_on_random_profiles() {
    let seq = theorem1_batch(200, &WS, 1, 1e-7, Execution::Sequential).unwrap();
    let par = theorem1_batch(200, &WS, 1, 1e-7, Execution::Parallel).unwrap();
    assert_eq!(seq, par);
    assert!(seq.passed(), "{:?}", seq.failures);
    assert!(seq.min_margin >= -1e-7);
    assert_eq!(seq.checked + seq.skipped, 200 * WS.len());
    assert!(seq.checked > 1000);
}

#[test]
fn theorem1_on_polygons() {
    let sq = ConvexPolygon::rectangle(-1.0, 1.0, -1.0, 1.0).unwrap();
    let r = verify_theorem1_polygon(&sq, [1.0, 0.0], 0.5, 1e-9).unwrap();
    assert!(r.passed() && r.margin > 0.0);
    for seed in 0..30 {
        let poly = random_polygon(seed).unwrap();
        let t = seed as f64;
        match verify_theorem1_polygon(&poly, [t.cos(), t.sin()], 0.4, 1e-9) {
            Ok(r) => assert!(r.passed(), "seed {seed}: {r:?}"),
            Err(Error::Infeasible(_) | Error::Degenerate(_)) => {}
            Err(e) => panic!("seed {seed}: {e}"),
        }
    }
}

#[test]
fn pipeline_is_consistent() {
    let mut passed = 0;
    for seed in 0..200 {
        let p = theorem1_profile(seed).unwrap();
        match pipeline_check(&p, 0.5, 1e-9) {
            Ok(r) => {
                assert!(
                    r.pass,
                    "seed {seed}: direct {} extremal {}",
                    r.margin_direct, r.margin_extremal
                );
                assert!(r.extension.mass_margin >= -1e-9);
                passed += 1;
            }
            Err(Error::Infeasible(_) | Error::Degenerate(_) | Error::OutOfScope(_)) => {}
            Err(e) => panic!("seed {seed}: {e}"),
        }
    }
    assert!(passed >= 150, "{passed}");
}

#[test]
fn relaxed_half_plane_mode() {
    for (m, h, a, b) in [(1.0, 0.5, -0.5, 1.0), (0.3, 2.0, 0.0, 3.0), (2.0, 0.0, -1.0, 1.0)] {
        assert!(relaxed_half_plane_check(m, h, a, b, 1e-10).unwrap().passed());
    }
    let s = 2f64.sqrt();
    let x0 = (-1.0 / s + 1.0) / 1.0;
    let r = relaxed_half_plane_check(1.0, -1.0, x0 - 0.4, x0 + 0.6, 1e-10).unwrap();
    assert!(r.passed(), "{r:?}");
    let out = relaxed_half_plane_check(1.0, 0.5, -2.0, 0.5, 1e-10);
    assert!(matches!(out, Err(Error::OutOfScope(_))));
}

fn input(vector: GaussianVector, thresholds: Vec<f64>, y_index: usize, w: f64, seed: u64) -> Theorem1aInput {
    Theorem1aInput {
        vector,
        thresholds,
        y_index,
        w,
        samples: 200_000,
        seed,
        mode: HypothesisMode::Centroid,
    }
}

#[test]
fn theorem1a_independent_blocks() {
    let cov = vec![vec![1.0, 0.6, 0.0], vec![0.6, 1.0, 0.0], vec![0.0, 0.0, 1.0]];
    let x = GaussianVector::centered(cov).unwrap();
    let r = verify_theorem1a(&input(x, vec![0.3, -0.2], 2, 0.5, 5), Execution::default()).unwrap();
    assert_eq!(r.method, Method::MonteCarlo);
    let se = r.mc_std_error.unwrap();
    assert!(r.margin.abs() <= 3.0 * se, "{r:?}");
    assert_eq!(r.status, Status::Pass);
}

#[test]
fn theorem1a_single_copy_of_y() {
    let x = GaussianVector::centered(vec![vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
    let r = verify_theorem1a(&input(x, vec![INF], 1, 0.6, 9), Execution::default()).unwrap();
    assert_eq!(r.status, Status::Pass, "{r:?}");
    let band = r.details["band"].as_array().unwrap();
    let (a, b) = (band[0].as_f64().unwrap(), band[1].as_f64().unwrap());
    assert!((a + b).abs() < 0.02, "{a}, {b}");
}

#[test]
fn theorem1a_rejects_bad_input() {
    let x = GaussianVector::centered(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
    let mut i = input(x.clone(), vec![0.0], 1, 0.5, 1);
    i.samples = 1000;
    assert!(matches!(
        verify_theorem1a(&i, Execution::default()),
        Err(Error::Domain(_))
    ));
    let i = input(x, vec![0.0, 1.0], 1, 0.5, 1);
    assert!(matches!(
        verify_theorem1a(&i, Execution::default()),
        Err(Error::Domain(_))
    ));
    let asym = GaussianVector::centered(vec![vec![1.0, 0.2], vec![0.3, 1.0]]);
    assert!(matches!(asym, Err(Error::InvalidCovariance(_))));
}

#[test]
fn wedges_pass_both_ways() {
    let mut done = 0;
    for seed in 0..12 {
        let inst = WedgeInstance::random(seed);
        match verify_wedge(&inst, 200_000, seed, 1e-9, Execution::default()) {
            Ok((quad, mc)) => {
                assert!(quad.passed(), "seed {seed}: {quad:?}");
                assert_eq!(mc.status, Status::Pass, "seed {seed}: {mc:?}");
                done += 1;
            }
            Err(Error::Infeasible(_) | Error::Degenerate(_)) => {}
            Err(e) => panic!("seed {seed}: {e}"),
        }
    }
    assert!(done >= 6);
}

fn basis(n: usize, i: usize) -> Vec<f64> {
    (0..n).map(|k| (k == i) as u8 as f64).collect()
}

#[test]
fn sidak_orthogonal_directions_factorize() {
    let dirs: Vec<_> = (0..4).map(|i| basis(5, i)).collect();
    let radii = [0.5, 1.0, 1.5, 0.8];
    let r = verify_sidak(&dirs, &radii, 400_000, 3, Execution::default()).unwrap();
    let se = r.mc_std_error.unwrap();
    assert!(r.margin.abs() <= 3.0 * se, "{r:?}");
    assert!(r.passed());
}

#[test]
fn sidak_equal_directions() {
    let d = vec![0.6, 0.8, 0.0];
    let r = verify_sidak(&[d.clone(), d.clone(), d], &[1.0; 3], 200_000, 4, Execution::default()).unwrap();
    let single = gauss_mass(-1.0, 1.0);
    assert!((r.rhs - single.powi(3)).abs() < 1e-15);
    assert!((r.lhs - single).abs() < 4.0 * r.mc_std_error.unwrap().max(1e-3));
    assert!(r.margin > 0.1 && r.passed());
}

#[test]
fn sidak_random_instances() {
    for seed in 0..10 {
        let (dirs, radii) = random_sidak_instance(seed, 5, 4);
        let r = verify_sidak(&dirs, &radii, 200_000, seed, Execution::default()).unwrap();
        assert!(r.passed(), "seed {seed}: {r:?}");
    }
    assert!(matches!(
        verify_sidak(&[vec![1.0]], &[1.0], 1000, 0, Execution::default()),
        Err(Error::Domain(_))
    ));
    let zero = verify_sidak(
        &[vec![0.0, 0.0], vec![1.0, 0.0]],
        &[1.0, 1.0],
        1000,
        0,
        Execution::default(),
    );
    assert!(matches!(zero, Err(Error::Degenerate(_))));
}

#[test]
fn monte_carlo_is_schedule_independent() {
    let (dirs, radii) = random_sidak_instance(11, 6, 3);
    let a = verify_sidak(&dirs, &radii, 300_000, 8, Execution::Parallel).unwrap();
    let b = verify_sidak(&dirs, &radii, 300_000, 8, Execution::Sequential).unwrap();
    assert_eq!(a, b);
    let c = verify_sidak(&dirs, &radii, 300_000, 9, Execution::Parallel).unwrap();
    assert_ne!(a.lhs, c.lhs);
}

#[test]
fn problem2_identities() {
    let k = random_polygon(4).unwrap();
    let p = pair_margin(&k, &k, 1e-10).unwrap();
    assert!((p.margin - (p.mass1 - p.mass1 * p.mass1)).abs() < 1e-12 && p.margin >= 0.0);
    let big = ConvexPolygon::rectangle(-60.0, 60.0, -60.0, 60.0).unwrap();
    let p = pair_margin(&k, &big, 1e-10).unwrap();
    assert!(p.margin.abs() < 1e-10, "{p:?}");
    assert!((p.mass1 - polygon_mass(&k, 1e-13).unwrap()).abs() < 1e-11);
}

#[test]
fn problem2_search_is_ranked_and_reproducible() {
    let a = search_problem2(200, 17, 1e-10, 20, Execution::Parallel).unwrap();
    let b = search_problem2(200, 17, 1e-10, 20, Execution::Sequential).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    assert_eq!(a.completed + a.skipped, 200);
    assert_eq!(a.ranked.len(), 20);
    assert!(a.ranked.windows(2).all(|w| w[0].margin.margin <= w[1].margin.margin));
    assert_eq!(a.min_margin, a.ranked[0].margin.margin);
}

#[test]
fn monte_carlo_agrees_with_quadrature() {
    let cv = cross_validate(1000, 100_000, 1, 1e-9, Execution::default()).unwrap();
    assert_eq!(cv.entries.len(), 1000);
    assert!(cv.agreeing >= 990, "{} of 1000 agree", cv.agreeing);
}

#[test]
fn jsonl_layout() {
    let mut buf = Vec::new();
    write_jsonl(&mut buf, &json!({ "version": "x" }), &[1, 2, 3]).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines, ["{\"version\":\"x\"}", "1", "2", "3"]);
}

#[test]
fn sampled_covariance_matches() {
    let cov = vec![vec![2.0, 0.5, -0.3], vec![0.5, 1.0, 0.2], vec![-0.3, 0.2, 0.7]];
    let g = GaussianVector::new(vec![1.0, -1.0, 0.0], cov.clone()).unwrap();
    let mut rng = gausslayer::mc::chunk_rng(1, 2, 0);
    let n = 200_000;
    let (mut z, mut x) = ([0.0; 3], [0.0; 3]);
    let mut s = [[0.0; 3]; 3];
    let mut mean = [0.0; 3];
    for _ in 0..n {
        g.sample_into(&mut rng, &mut z, &mut x);
        for i in 0..3 {
            mean[i] += x[i] / n as f64;
            for j in 0..3 {
                s[i][j] += x[i] * x[j] / n as f64;
            }
        }
    }
    assert!((mean[0] - 1.0).abs() < 0.02 && (mean[1] + 1.0).abs() < 0.02);
    for i in 0..3 {
        for j in 0..3 {
            let c = s[i][j] - mean[i] * mean[j];
            assert!((c - cov[i][j]).abs() < 0.03, "({i},{j}): {c}");
        }
    }
}
