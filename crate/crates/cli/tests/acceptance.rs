//! Acceptance suite. One `PASS`/`FAIL` line per criterion.
//!
//! The process exits nonzero only on failures outside [`KNOWN`]; known
//! divergences still print `FAIL`.

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use gausslayer::extremal::{final_case_suite, run_scan, ScanGrid};
use gausslayer::gauss::{mills, round_sig};
use gausslayer::geometry::random_polygon;
use gausslayer::props::{
    differential_inequality, hazard_gap_decreasing, hazard_suite, komatsu_comparison, log_grid, sandwich, uniform_grid,
    PropertyReport,
};
use gausslayer::reduction::{check_concavity, ehrhard_profile, linearization_suite, profile_grid};
use gausslayer::verify::{cross_validate, random_sidak_instance, search_problem2, theorem1_batch, verify_sidak};
use gausslayer::Execution;

const EXEC: Execution = Execution::Parallel;

/// Criteria expected to fail, with the cells that may differ.
const KNOWN: &[(u32, &str)] = &[(1, "x=6 upper_new, x=6 lower")];

/// Printed table: x, our upper, Komatsu upper, Komatsu lower.
const TABLE: [(f64, [f64; 3]); 10] = [
    (0.0, [0.13, 0.13, -0.20]),
    (2.0, [0.30e-2, 0.67e-1, -0.17e-1]),
    (4.0, [0.20e-3, 0.25e-1, -0.25e-2]),
    (6.0, [0.27e-4, 0.13e-1, -0.61e-3]),
    (8.0, [0.59e-5, 0.74e-2, -0.21e-3]),
    (10.0, [0.17e-5, 0.48e-2, -0.92e-4]),
    (20.0, [0.30e-7, 0.12e-2, -0.61e-5]),
    (30.0, [0.27e-8, 0.55e-3, -0.12e-5]),
    (40.0, [0.48e-9, 0.31e-3, -0.39e-6]),
    (50.0, [0.13e-9, 0.20e-3, -0.16e-6]),
];

struct Outcome {
    pass: bool,
    detail: String,
    /// Identifies what failed, for comparison with [`KNOWN`].
    failed: Vec<String>,
}

impl Outcome {
    fn new(pass: bool, detail: String) -> Self {
        Outcome {
            pass,
            detail,
            failed: Vec::new(),
        }
    }
}

fn err(e: impl std::fmt::Display) -> Outcome {
    Outcome::new(false, format!("error: {e}"))
}

fn worst(reports: &[PropertyReport]) -> String {
    reports
        .iter()
        .map(|r| format!("{}: {:.2e} at {}", r.name, r.worst_margin, r.worst_at))
        .collect::<Vec<_>>()
        .join("; ")
}

fn c1_table() -> Outcome {
    let out = match Command::new(env!("CARGO_BIN_EXE_gausslayer"))
        .arg("bounds-table")
        .env_remove("GAUSSLAYER_OUT_DIR")
        .output()
    {
        Ok(o) if o.status.success() => String::from_utf8_lossy(&o.stdout).into_owned(),
        Ok(o) => return err(format!("bounds-table exited with {}", o.status)),
        Err(e) => return err(e),
    };
    let rows: Vec<Vec<f64>> = out
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with('x'))
        .map(|l| l.split(',').map(|f| f.parse().unwrap_or(f64::NAN)).collect())
        .collect();
    if rows.len() != TABLE.len() {
        return err(format!("expected {} rows, got {}", TABLE.len(), rows.len()));
    }
    let cols = ["upper_new", "upper_komatsu", "lower"];
    let mut failed = Vec::new();
    let mut shown = Vec::new();
    for (row, (x, want)) in rows.iter().zip(TABLE) {
        for (j, &w) in want.iter().enumerate() {
            let got = round_sig(row[j + 1], 2);
            if row[0] != x || got != w {
                failed.push(format!("x={x} {}", cols[j]));
                shown.push(format!(
                    "x={x} {}: {got:.2e} vs {w:.2e} (unrounded {:.4e})",
                    cols[j],
                    row[j + 1]
                ));
            }
        }
    }
    let detail = format!("{}/30 entries match; {}", 30 - failed.len(), shown.join("; "));
    Outcome {
        pass: failed.is_empty(),
        detail,
        failed,
    }
}

fn c2_sandwich() -> Outcome {
    let xs = log_grid(10_000);
    let mut r = sandwich(&xs, 1e-12, EXEC);
    r.push(komatsu_comparison(&xs, 1e-12, EXEC));
    Outcome::new(r.iter().all(|r| r.pass), worst(&r))
}

fn c3_differential() -> Outcome {
    let xs = log_grid(10_000);
    let h = 1e-5;
    let (mut dev, mut at) = (0.0f64, f64::NAN);
    for &x in &xs {
        let fd = (mills(x + h) - mills(x - h)) / (2.0 * h);
        let d = (fd - (x * mills(x) - 1.0)).abs();
        if d > dev {
            (dev, at) = (d, x);
        }
    }
    let ineq = differential_inequality(&xs, 1e-12, EXEC);
    Outcome::new(
        dev <= 1e-6 && ineq.pass,
        format!("max |g' - (xg - 1)| = {dev:.2e} at {at}; {}", worst(&[ineq])),
    )
}

fn c4_hazard() -> Outcome {
    let mut r = hazard_suite(&uniform_grid(-10.0, 10.0, 1e-3), 1e-3, 1e-8, EXEC);
    r.push(hazard_gap_decreasing(&uniform_grid(1.0, 40.0, 0.5)));
    Outcome::new(r.iter().all(|r| r.pass), worst(&r))
}

fn c5_ehrhard() -> Outcome {
    let mut worst = 0.0f64;
    let mut bad = Vec::new();
    for seed in 0..200u64 {
        let t = std::f64::consts::TAU * (seed as f64 * 0.618_033_988_749_895).fract();
        let u = [t.cos(), t.sin()];
        let r = random_polygon(seed)
            .and_then(|p| profile_grid(&p, u, 101).and_then(|g| ehrhard_profile(&p, u, &g)))
            .and_then(|s| check_concavity(&s, 1e-6));
        match r {
            Ok(r) => {
                worst = worst.max(r.max_violation);
                if !r.concave {
                    bad.push(seed);
                }
            }
            Err(e) => return err(format!("seed {seed}: {e}")),
        }
    }
    Outcome::new(
        bad.is_empty(),
        format!("200 instances, max violation {worst:.2e}, non-concave seeds {bad:?}"),
    )
}

fn c6_linearization() -> Outcome {
    match linearization_suite(500, 1, 1e-8, EXEC) {
        Ok(s) => Outcome::new(
            s.pass && s.failures.is_empty() && s.max_mass_residual <= 1e-8 && s.max_moment_residual <= 1e-8,
            format!(
                "{} profiles ({} nonlinear), max mass residual {:.2e}, max moment residual {:.2e}, {} failures",
                s.instances,
                s.nonlinear,
                s.max_mass_residual,
                s.max_moment_residual,
                s.failures.len()
            ),
        ),
        Err(e) => err(e),
    }
}

fn c7_scans() -> Outcome {
    match run_scan(&ScanGrid::default(), 1e-8, EXEC) {
        Ok(s) => Outcome::new(
            s.pass
                && s.min_fd_boundary >= -1e-8
                && s.min_fd_f1 >= -1e-8
                && s.max_f1 <= 1.0 + 1e-8
                && s.max_f2 <= 1.0 + 1e-8,
            format!(
                "{} feasible cells ({} skipped), min fd B/A {:.2e}, min fd F1 {:.2e}, max F1 {:.6}, max F2 {:.6}",
                s.feasible_cells, s.skipped_cells, s.min_fd_boundary, s.min_fd_f1, s.max_f1, s.max_f2
            ),
        ),
        Err(e) => err(e),
    }
}

fn c8_final_case() -> Outcome {
    match final_case_suite(1e-9, EXEC) {
        Ok(s) => {
            let companions = s.companions.iter().all(|c| c.pass);
            let margins = [s.min_average_margin, s.min_reduced_margin, s.min_triangle_margin];
            Outcome::new(
                s.pass && companions && s.reports.len() == 100 && margins.iter().all(|&m| m >= -1e-9),
                format!(
                    "{} instances, min margins {:.2e} / {:.2e} / {:.2e}, h >= 0 average checks {}",
                    s.reports.len(),
                    margins[0],
                    margins[1],
                    margins[2],
                    if companions { "pass" } else { "FAIL" }
                ),
            )
        }
        Err(e) => err(e),
    }
}

fn c9_theorem1() -> Outcome {
    match theorem1_batch(1000, &[0.1, 0.3, 0.5, 0.7, 0.9], 1, 1e-7, EXEC) {
        Ok(s) => Outcome::new(
            s.passed() && s.failures.is_empty() && s.min_margin >= -1e-7,
            format!(
                "{} checked, {} skipped {:?}, min margin {:.3e}",
                s.checked, s.skipped, s.skip_reasons, s.min_margin
            ),
        ),
        Err(e) => err(e),
    }
}

fn c10_sidak() -> Outcome {
    let samples = 1_000_000;
    let mut min_z = f64::INFINITY;
    for seed in 1..=50u64 {
        let (dirs, radii) = random_sidak_instance(seed, 5, 4);
        match verify_sidak(&dirs, &radii, samples, seed, EXEC) {
            Ok(r) => min_z = min_z.min(r.margin / r.mc_std_error.unwrap_or(f64::NAN)),
            Err(e) => return err(format!("seed {seed}: {e}")),
        }
    }
    let basis = |i: usize| (0..5).map(|j| if i == j { 1.0 } else { 0.0 }).collect::<Vec<f64>>();
    let dirs: Vec<Vec<f64>> = (0..4).map(basis).collect();
    let mut max_orth = 0.0f64;
    for (k, radii) in [[0.5, 1.0, 1.5, 0.8], [1.0; 4], [0.3, 2.0, 0.7, 1.2]]
        .iter()
        .enumerate()
    {
        match verify_sidak(&dirs, radii, samples, 100 + k as u64, EXEC) {
            Ok(r) => max_orth = max_orth.max(r.margin.abs() / r.mc_std_error.unwrap_or(f64::NAN)),
            Err(e) => return err(e),
        }
    }
    Outcome::new(
        min_z >= -3.0 && max_orth <= 3.0,
        format!("50 instances, min margin {min_z:.2} SE; orthogonal |margin| up to {max_orth:.2} SE"),
    )
}

fn c11_problem2() -> Outcome {
    let run = || search_problem2(10_000, 1, 1e-10, 20, EXEC);
    match (run(), run()) {
        (Ok(a), Ok(b)) => {
            let same = serde_json::to_string(&a).ok() == serde_json::to_string(&b).ok();
            Outcome::new(
                same && a.completed + a.skipped == 10_000 && a.min_margin.is_finite(),
                format!(
                    "{} completed, {} skipped {:?}, min margin {:.3e} (SE {:.1e}), {} below -3 SE, identical reruns: {same}",
                    a.completed, a.skipped, a.skip_reasons, a.min_margin, a.min_margin_std_error, a.negative_beyond_error
                ),
            )
        }
        (Err(e), _) | (_, Err(e)) => err(e),
    }
}

fn c12_cross_validation() -> Outcome {
    match cross_validate(100, 1_000_000, 1, 1e-9, EXEC) {
        Ok(cv) => Outcome::new(
            cv.entries.len() == 100 && cv.agreeing >= 99,
            format!(
                "{} of {} agree within 3 SE ({} infeasible seeds replaced)",
                cv.agreeing,
                cv.entries.len(),
                cv.skipped
            ),
        ),
        Err(e) => err(e),
    }
}

fn main() -> ExitCode {
    type Criterion = (u32, &'static str, Option<Duration>, fn() -> Outcome);
    let secs = |s| Some(Duration::from_secs(s));
    let criteria: [Criterion; 12] = [
        (1, "tail bound table", secs(1), c1_table),
        (2, "Mills ratio sandwich", secs(1), c2_sandwich),
        (3, "differential identity and inequality", None, c3_differential),
        (4, "hazard function properties", None, c4_hazard),
        (5, "Ehrhard profile concavity", secs(30), c5_ehrhard),
        (6, "linearization suite", secs(60), c6_linearization),
        (7, "extremal monotonicity scans", secs(300), c7_scans),
        (8, "half-plane final case", None, c8_final_case),
        (9, "layer inequality end to end", secs(600), c9_theorem1),
        (10, "Sidak Monte Carlo", None, c10_sidak),
        (11, "random search over symmetric pairs", None, c11_problem2),
        (12, "Monte Carlo against quadrature", None, c12_cross_validation),
    ];
    let mut unexpected = Vec::new();
    let mut passed = 0;
    for (id, name, limit, check) in criteria {
        let start = Instant::now();
        let mut o = check();
        let took = start.elapsed();
        if let Some(l) = limit {
            if took > l {
                o.pass = false;
                o.failed.push("runtime".into());
                o.detail.push_str(&format!("; runtime over {}s", l.as_secs()));
            }
        }
        let known = KNOWN.iter().find(|(k, _)| *k == id).map(|(_, cells)| *cells);
        let tag = if o.pass { "PASS" } else { "FAIL" };
        let note = match (o.pass, known) {
            (false, Some(cells)) => format!(" [known divergence: {cells}]"),
            _ => String::new(),
        };
        println!("{tag} {id:>2} {name} ({:.2}s): {}{note}", took.as_secs_f64(), o.detail);
        if o.pass {
            passed += 1;
            continue;
        }
        let expected = known
            .is_some_and(|cells| !o.failed.is_empty() && o.failed.iter().all(|f| cells.split(", ").any(|c| c == f)));
        if !expected {
            unexpected.push(id);
        }
    }
    println!("{passed}/12 criteria pass");
    if unexpected.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("unexpected failures: {unexpected:?}");
        ExitCode::FAILURE
    }
}
