//! The subcommands.

use std::path::Path;

use gausslayer::extreal::ExtReal;
use gausslayer::extremal::{final_case_suite, run_scan, ScanGrid};
use gausslayer::gauss::{error_row, TABLE_XS};
use gausslayer::geometry::ConvexPolygon;
use gausslayer::profiles::{functionals, ConcaveProfile, ProfileFile};
use gausslayer::props::all_properties;
use gausslayer::reduction::{linearization_suite, linearize};
use gausslayer::verify::{
    match_layer, random_sidak_instance, search_problem2, theorem1_batch, verify_sidak, verify_theorem1,
    verify_theorem1_polygon, verify_theorem1a, verify_wedge, GaussianVector, HypothesisMode, Status, Theorem1aInput,
    VerificationReport, WedgeInstance,
};
use gausslayer::Error;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::config::{parse_grid_spec, Command, RunConfig, UsageError};
use crate::output::Produced;

/// Why a subcommand stopped early.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Internal(String),
}

impl From<UsageError> for Failure {
    fn from(e: UsageError) -> Self {
        Failure::Usage(e.0)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Domain(_)
            | Error::InvalidProfile(_)
            | Error::InvalidPolygon(_)
            | Error::InvalidCovariance(_)
            | Error::Infeasible(_)
            | Error::OutOfScope(_) => Failure::Usage(e.to_string()),
            _ => Failure::Internal(e.to_string()),
        }
    }
}

type Outcome = Result<Produced, Failure>;

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).unwrap_or(Value::Null)
}

/// `v` as a JSON object without the given keys.
fn without(v: Value, keys: &[&str]) -> Value {
    match v {
        Value::Object(mut m) => {
            for k in keys {
                m.remove(*k);
            }
            Value::Object(m)
        }
        other => other,
    }
}

fn read_json<T: DeserializeOwned>(path: &Path, what: &str) -> Result<T, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Usage(format!("cannot read {what} file {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("bad {what} file {}: {e}", path.display())))
}

fn load_profile(path: &Path) -> Result<ConcaveProfile, Failure> {
    let f: ProfileFile = read_json(path, "profile")?;
    Ok(ConcaveProfile::try_from(f)?)
}

fn load_polygon(path: &Path) -> Result<ConvexPolygon, Failure> {
    read_json(path, "polygon")
}

fn report_failures(reports: &[VerificationReport]) -> Vec<Value> {
    reports
        .iter()
        .filter(|r| r.status == Status::Fail)
        .map(to_value)
        .collect()
}

pub fn run(cfg: &RunConfig) -> Outcome {
    match cfg.subcommand {
        Command::BoundsTable => bounds_table(cfg),
        Command::CheckProps => check_props(cfg),
        Command::Linearize => linearize_cmd(cfg),
        Command::ScanExtremal => scan_extremal(cfg),
        Command::FinalCase => final_case(cfg),
        Command::VerifyTheorem1 => theorem1(cfg),
        Command::VerifyTheorem1a => theorem1a(cfg),
        Command::VerifySidak => sidak(cfg),
        Command::SearchProblem2 => problem2(cfg),
    }
}

pub const BOUNDS_COLUMNS: &str = "x,err_upper_new,err_upper_komatsu,err_lower";

fn bounds_table(cfg: &RunConfig) -> Outcome {
    let xs = match &cfg.grid_spec {
        None => TABLE_XS.to_vec(),
        Some(s) => parse_grid_spec(s)?
            .remove("x")
            .ok_or_else(|| Failure::Usage("bounds-table grid spec needs x=...".into()))?,
    };
    let mut out = Produced::default();
    let mut rows = Vec::new();
    for &x in &xs {
        match error_row(x) {
            Ok(r) => {
                rows.push(format!(
                    "{},{:e},{:e},{:e}",
                    x, r.err_upper_new, r.err_upper_komatsu, r.err_lower
                ));
                let ordered = r.err_lower <= 0.0 && 0.0 <= r.err_upper_new && r.err_upper_new <= r.err_upper_komatsu;
                if x >= 0.0 && !ordered {
                    out.failures
                        .push(json!({ "x": x, "check": "err_lower <= 0 <= err_upper_new <= err_upper_komatsu" }));
                }
                out.items.push(to_value(&r));
            }
            Err(e) => {
                rows.push(format!("{x},,,"));
                out.items.push(json!({ "x": ExtReal(x), "invalid": e.to_string() }));
            }
        }
    }
    out.summary = json!({ "rows": xs.len() });
    out.csv = Some((BOUNDS_COLUMNS.to_string(), rows));
    Ok(out)
}

fn check_props(cfg: &RunConfig) -> Outcome {
    let reports = all_properties(cfg.exec);
    let rows = reports
        .iter()
        .map(|r| {
            format!(
                "{},{},{:e},{},{:e},{}",
                r.name, r.points, r.worst_margin, r.worst_at, r.threshold, r.pass
            )
        })
        .collect();
    Ok(Produced {
        summary: json!({ "suites": reports.len(), "passed": reports.iter().filter(|r| r.pass).count() }),
        failures: reports.iter().filter(|r| !r.pass).map(to_value).collect(),
        items: reports.iter().map(to_value).collect(),
        csv: Some(("name,points,worst_margin,worst_at,threshold,pass".into(), rows)),
    })
}

fn linearize_cmd(cfg: &RunConfig) -> Outcome {
    let Some(path) = &cfg.profile else {
        let n = cfg.trials.unwrap_or(500) as usize;
        let suite = linearization_suite(n, cfg.seed, cfg.tol, cfg.exec)?;
        let failures: Vec<Value> = suite.failures.iter().map(to_value).collect();
        return Ok(Produced {
            summary: without(to_value(&suite), &["failures"]),
            items: failures.clone(),
            failures,
            csv: None,
        });
    };
    let profile = load_profile(path)?;
    let (a, b) = match cfg.interval {
        Some(i) => i,
        None => {
            let c = functionals(&profile, (f64::NEG_INFINITY, f64::INFINITY), 1e-13)?.centroid()?;
            let l = match_layer(c, cfg.w[0], 1e-12)?;
            (l.a, l.b)
        }
    };
    let r = linearize(&profile, (a, b), cfg.tol)?;
    let holds = r.holds(cfg.tol);
    let item = json!({ "interval": [ExtReal(a), ExtReal(b)], "holds": holds, "result": r });
    Ok(Produced {
        summary: json!({ "interval": [ExtReal(a), ExtReal(b)], "holds": holds }),
        failures: if holds { Vec::new() } else { vec![item.clone()] },
        items: vec![item],
        csv: None,
    })
}

fn scan_grid(cfg: &RunConfig) -> Result<ScanGrid, Failure> {
    let mut grid = ScanGrid::default();
    if let Some(spec) = &cfg.grid_spec {
        for (k, v) in parse_grid_spec(spec)? {
            match k.as_str() {
                "m" => grid.ms = v,
                "c" => grid.cs = v,
                "w" => grid.ws = v,
                "h" => match v.as_slice() {
                    &[n] if n >= 2.0 && n.fract() == 0.0 => grid.h_points = n as usize,
                    _ => return Err(Failure::Usage("grid spec h= takes one point count >= 2".into())),
                },
                _ => return Err(Failure::Usage(format!("unknown scan grid key {k:?} (use m, c, w, h)"))),
            }
        }
    }
    if grid.ws.iter().any(|&w| !(w > 0.0 && w < 1.0)) {
        return Err(Failure::Usage("scan weights must lie in (0, 1)".into()));
    }
    Ok(grid)
}

fn scan_extremal(cfg: &RunConfig) -> Outcome {
    let s = run_scan(&scan_grid(cfg)?, cfg.tol, cfg.exec)?;
    let mut out = Produced {
        items: s.cells.iter().map(to_value).collect(),
        summary: without(to_value(&s), &["cells"]),
        ..Produced::default()
    };
    if !s.pass {
        out.failures.push(out.summary.clone());
    }
    Ok(out)
}

fn final_case(cfg: &RunConfig) -> Outcome {
    let s = final_case_suite(cfg.tol, cfg.exec)?;
    let mut failures: Vec<Value> = s.reports.iter().filter(|r| !r.pass).map(to_value).collect();
    failures.extend(s.companions.iter().filter(|c| !c.pass).map(to_value));
    Ok(Produced {
        summary: without(to_value(&s), &["reports"]),
        items: s.reports.iter().map(to_value).collect(),
        failures,
        csv: None,
    })
}

fn theorem1(cfg: &RunConfig) -> Outcome {
    let single: Option<Vec<VerificationReport>> = if let Some(path) = &cfg.profile {
        let p = load_profile(path)?;
        Some(
            cfg.w
                .iter()
                .map(|&w| verify_theorem1(&p, w, cfg.tol).map(|r| r.with_instance(json!({ "profile": path, "w": w }))))
                .collect::<Result<_, _>>()?,
        )
    } else if let Some(path) = &cfg.polygon {
        let poly = load_polygon(path)?;
        let u = cfg.unit_direction();
        Some(
            cfg.w
                .iter()
                .map(|&w| verify_theorem1_polygon(&poly, u, w, cfg.tol))
                .collect::<Result<_, _>>()?,
        )
    } else {
        None
    };
    if let Some(reports) = single {
        let min = reports.iter().map(|r| r.margin).fold(f64::INFINITY, f64::min);
        return Ok(Produced {
            summary: json!({ "checked": reports.len(), "min_margin": min }),
            failures: report_failures(&reports),
            items: reports.iter().map(to_value).collect(),
            csv: None,
        });
    }
    let n = cfg.trials.unwrap_or(1000) as usize;
    let s = theorem1_batch(n, &cfg.w, cfg.seed, cfg.tol, cfg.exec)?;
    Ok(Produced {
        summary: without(to_value(&s), &["failures"]),
        items: s.failures.iter().map(to_value).collect(),
        failures: report_failures(&s.failures),
        csv: None,
    })
}

/// `--instance` file for `verify-theorem1a`.
#[derive(Debug, Deserialize)]
struct Theorem1aFile {
    #[serde(default)]
    mean: Option<Vec<f64>>,
    covariance: Vec<Vec<f64>>,
    thresholds: Vec<ExtReal>,
    y_index: usize,
    #[serde(default)]
    mode: HypothesisMode,
}

fn theorem1a(cfg: &RunConfig) -> Outcome {
    let samples = cfg.samples.unwrap_or(1_000_000);
    let mut reports = Vec::new();
    let mut skipped = 0usize;
    if let Some(path) = &cfg.instance {
        let f: Theorem1aFile = read_json(path, "instance")?;
        let n = f.covariance.len();
        let vector = GaussianVector::new(f.mean.unwrap_or_else(|| vec![0.0; n]), f.covariance)?;
        let input = Theorem1aInput {
            vector,
            thresholds: f.thresholds.into_iter().map(f64::from).collect(),
            y_index: f.y_index,
            w: cfg.w[0],
            samples,
            seed: cfg.seed,
            mode: f.mode,
        };
        reports.push(verify_theorem1a(&input, cfg.exec)?);
    } else {
        for i in 0..cfg.trials.unwrap_or(20) {
            let s = cfg.seed.wrapping_add(i);
            match verify_wedge(&WedgeInstance::random(s), samples, s, cfg.tol, cfg.exec) {
                Ok((quad, mc)) => {
                    reports.push(quad);
                    reports.push(mc);
                }
                Err(Error::Infeasible(_) | Error::Degenerate(_)) => skipped += 1,
                Err(e) => return Err(e.into()),
            }
        }
    }
    let count = |st: Status| reports.iter().filter(|r| r.status == st).count();
    Ok(Produced {
        summary: json!({
            "reports": reports.len(),
            "pass": count(Status::Pass),
            "fail": count(Status::Fail),
            "inconclusive": count(Status::Inconclusive),
            "skipped_instances": skipped,
        }),
        failures: report_failures(&reports),
        items: reports.iter().map(to_value).collect(),
        csv: None,
    })
}

/// `--instance` file for `verify-sidak`.
#[derive(Debug, Deserialize)]
struct SidakFile {
    directions: Vec<Vec<f64>>,
    radii: Vec<f64>,
}

fn sidak(cfg: &RunConfig) -> Outcome {
    let samples = cfg.samples.unwrap_or(1_000_000);
    let reports: Vec<VerificationReport> = if let Some(path) = &cfg.instance {
        let f: SidakFile = read_json(path, "instance")?;
        vec![verify_sidak(&f.directions, &f.radii, samples, cfg.seed, cfg.exec)?]
    } else {
        (0..cfg.trials.unwrap_or(50))
            .map(|i| {
                let s = cfg.seed.wrapping_add(i);
                let (dirs, radii) = random_sidak_instance(s, cfg.dim, cfg.count);
                verify_sidak(&dirs, &radii, samples, s, cfg.exec)
            })
            .collect::<Result<_, _>>()?
    };
    let worst = reports
        .iter()
        .map(|r| r.margin / r.mc_std_error.unwrap_or(f64::NAN))
        .fold(f64::INFINITY, f64::min);
    Ok(Produced {
        summary: json!({ "instances": reports.len(), "min_margin_in_se": worst }),
        failures: report_failures(&reports),
        items: reports.iter().map(to_value).collect(),
        csv: None,
    })
}

fn problem2(cfg: &RunConfig) -> Outcome {
    let r = search_problem2(cfg.trials.unwrap_or(10_000), cfg.seed, cfg.tol, cfg.keep, cfg.exec)?;
    Ok(Produced {
        summary: without(to_value(&r), &["ranked"]),
        items: r.ranked.iter().map(to_value).collect(),
        failures: Vec::new(),
        csv: None,
    })
}
