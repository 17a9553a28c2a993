//! End-to-end checks of `μ(K ∩ L) >= μ(K) μ(L)`.
//!
//! Deterministic checks integrate slice masses; the Gaussian-vector,
//! Sidak and cross-validation checks use [`crate::mc`].

use std::collections::BTreeMap;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::extremal::{extend_support, ExtensionReport, ExtremalConfig};
use crate::gauss::{gauss_mass, std_cdf};
use crate::geometry::{
    polygon_mass, polygon_moments, random_hull_polygon, random_polygon, ConvexPolygon, DirectionalBody, HalfPlane,
    Point,
};
use crate::line::Line;
use crate::mc::{normal, sample_moments};
use crate::profiles::{functionals, random_profile, ConcaveProfile, Layer, ProfileBox, SliceBody};
use crate::reduction::{linearize, polygon_profile, LinearizationResult};

const TAG_PILOT: u64 = 0x7069_6c6f_7431_6100;
const TAG_MAIN: u64 = 0x6d61_696e_3161_0000;
const TAG_SIDAK: u64 = 0x7369_6461_6b00_0000;
const TAG_CROSS: u64 = 0x6372_6f73_7300_0000;
const TAG_SEARCH: u64 = 0x7072_6f62_3200_0000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Quadrature,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Inconclusive,
}

/// One check of `lhs >= rhs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub check: String,
    pub instance: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub tolerance: f64,
    pub method: Method,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mc_std_error: Option<f64>,
    pub status: Status,
    #[serde(default, skip_serializing_if = "Value::is_null")]
    pub details: Value,
}

impl VerificationReport {
    fn quadrature(check: &str, lhs: f64, rhs: f64, tol: f64) -> Self {
        let margin = lhs - rhs;
        VerificationReport {
            check: check.into(),
            instance: Value::Null,
            seed: None,
            lhs,
            rhs,
            margin,
            tolerance: tol,
            method: Method::Quadrature,
            mc_std_error: None,
            status: if margin >= -tol { Status::Pass } else { Status::Fail },
            details: Value::Null,
        }
    }

    fn monte_carlo(check: &str, lhs: f64, rhs: f64, margin: f64, se: f64, seed: u64) -> Self {
        VerificationReport {
            check: check.into(),
            instance: Value::Null,
            seed: Some(seed),
            lhs,
            rhs,
            margin,
            tolerance: 3.0 * se,
            method: Method::MonteCarlo,
            mc_std_error: Some(se),
            status: if margin >= -3.0 * se {
                Status::Pass
            } else {
                Status::Fail
            },
            details: Value::Null,
        }
    }

    pub fn with_instance(mut self, instance: Value) -> Self {
        self.instance = instance;
        self
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }
}

/// Writes a header object followed by one JSON object per line.
pub fn write_jsonl<W: Write, T: Serialize>(out: &mut W, header: &Value, items: &[T]) -> std::io::Result<()> {
    serde_json::to_writer(&mut *out, header)?;
    out.write_all(b"\n")?;
    for item in items {
        serde_json::to_writer(&mut *out, item)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// The layer of weight `w` whose centroid is `c`.
pub fn match_layer(c: f64, w: f64, tol: f64) -> Result<Layer> {
    Layer::matching(c, w, tol)
}

fn quad_tol(tol: f64) -> f64 {
    (1e-3 * tol).max(1e-14)
}

/// Theorem 1 for the body `K` sliced along its own `x` axis: the layer is
/// matched to the centroid of `K` and both sides are integrated.
pub fn verify_theorem1<B: SliceBody + ?Sized>(body: &B, w: f64, tol: f64) -> Result<VerificationReport> {
    if !(tol > 0.0) {
        return Err(Error::Domain(format!("tolerance must be positive, got {tol}")));
    }
    let q = quad_tol(tol);
    let total = functionals(body, (f64::NEG_INFINITY, f64::INFINITY), q)?;
    let c = total.centroid()?;
    let layer = match_layer(c, w, 1e-12)?;
    let lhs = functionals(body, (layer.a, layer.b), q)?.mass;
    let mut r = VerificationReport::quadrature("theorem1", lhs, total.mass * layer.weight, tol);
    r.details = json!({ "centroid": c, "layer": layer, "mass": total.mass });
    Ok(r)
}

/// [`verify_theorem1`] for a polygon sliced perpendicular to `u`.
pub fn verify_theorem1_polygon(poly: &ConvexPolygon, u: Point, w: f64, tol: f64) -> Result<VerificationReport> {
    let body = DirectionalBody::from_polygon(poly, u)?;
    Ok(verify_theorem1(&body, w, tol)?.with_instance(json!({ "polygon": poly, "u": u, "w": w })))
}

/// Random concave profile used by the batch checks: `1 + seed % 6` pieces.
pub fn theorem1_profile(seed: u64) -> Result<ConcaveProfile> {
    random_profile(seed, 1 + (seed % 6) as usize, &ProfileBox::default())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchSummary {
    pub check: String,
    pub checked: usize,
    pub skipped: usize,
    pub skip_reasons: BTreeMap<String, usize>,
    pub min_margin: f64,
    pub worst: Option<VerificationReport>,
    pub failures: Vec<VerificationReport>,
}

impl BatchSummary {
    fn collect(check: &str, results: Vec<Result<VerificationReport>>) -> Result<Self> {
        let mut s = BatchSummary {
            check: check.into(),
            checked: 0,
            skipped: 0,
            skip_reasons: BTreeMap::new(),
            min_margin: f64::INFINITY,
            worst: None,
            failures: Vec::new(),
        };
        for r in results {
            match r {
                Ok(r) => {
                    s.checked += 1;
                    if r.margin < s.min_margin {
                        s.min_margin = r.margin;
                        s.worst = Some(r.clone());
                    }
                    if r.status == Status::Fail {
                        s.failures.push(r);
                    }
                }
                Err(e @ (Error::Infeasible(_) | Error::Degenerate(_) | Error::OutOfScope(_))) => {
                    s.skipped += 1;
                    let key = format!("{e:?}").split('(').next().unwrap_or("").to_string();
                    *s.skip_reasons.entry(key).or_default() += 1;
                }
                Err(e) => return Err(e),
            }
        }
        Ok(s)
    }

    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Theorem 1 on `profiles` random profiles (seeds `seed, seed + 1, …`)
/// for every weight in `ws`. Infeasible layers are skipped and counted.
pub fn theorem1_batch(profiles: usize, ws: &[f64], seed: u64, tol: f64, exec: Execution) -> Result<BatchSummary> {
    let results: Vec<Vec<Result<VerificationReport>>> = exec.map(profiles, |i| {
        let s = seed.wrapping_add(i as u64);
        match theorem1_profile(s) {
            Err(e) => vec![Err(e)],
            Ok(p) => ws
                .iter()
                .map(|&w| {
                    verify_theorem1(&p, w, tol).map(|r| {
                        let mut r = r.with_instance(json!({ "profile": p, "w": w }));
                        r.seed = Some(s);
                        r
                    })
                })
                .collect(),
        }
    });
    BatchSummary::collect("theorem1", results.into_iter().flatten().collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RefinementReport {
    pub points: usize,
    pub margin_coarse: f64,
    pub margin_fine: f64,
    pub margin_exact: f64,
}

/// Theorem 1 margins of a polygon through its sampled profile at `points`
/// and `2 points` grid points, and through exact slicing.
pub fn profile_refinement(poly: &ConvexPolygon, u: Point, w: f64, points: usize, tol: f64) -> Result<RefinementReport> {
    let coarse = polygon_profile(poly, u, points)?;
    let fine = polygon_profile(poly, u, 2 * points)?;
    Ok(RefinementReport {
        points,
        margin_coarse: verify_theorem1(&coarse, w, tol)?.margin,
        margin_fine: verify_theorem1(&fine, w, tol)?.margin,
        margin_exact: verify_theorem1_polygon(poly, u, w, tol)?.margin,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub layer: Layer,
    pub margin_direct: f64,
    pub margin_extremal: f64,
    pub linearization: LinearizationResult,
    pub extension: ExtensionReport,
    pub pass: bool,
}

/// Direct Theorem 1 margin of a profile against the margin of the extremal
/// configuration obtained by linearizing on the layer and extending.
pub fn pipeline_check(profile: &ConcaveProfile, w: f64, tol: f64) -> Result<PipelineReport> {
    let direct = verify_theorem1(profile, w, tol)?;
    let q = quad_tol(tol);
    let c = functionals(profile, (f64::NEG_INFINITY, f64::INFINITY), q)?.centroid()?;
    let layer = match_layer(c, w, 1e-12)?;
    let lin = linearize(profile, (layer.a, layer.b), tol)?;
    let ext = extend_support(profile, lin.line(), (layer.a, layer.b), c, tol)?;
    let cfg: ExtremalConfig = ext.config;
    let (a, b) = if ext.reflected {
        (-layer.b, -layer.a)
    } else {
        (layer.a, layer.b)
    };
    let margin_extremal = cfg.mass_in(a, b)? - cfg.mass()? * layer.weight;
    Ok(PipelineReport {
        layer,
        margin_direct: direct.margin,
        margin_extremal,
        pass: direct.margin >= margin_extremal - 2.0 * tol,
        linearization: lin,
        extension: ext,
    })
}

/// The half-plane `{y <= m x + h}` (`m >= 0`) against a layer `[a, b]`
/// under a relaxed hypothesis: `(a + b)/2 >= 0` when `h >= 0`, or
/// `(a + b)/2 >= x₀` when `h < 0`, instead of matched centroids.
pub fn relaxed_half_plane_check(m: f64, h: f64, a: f64, b: f64, tol: f64) -> Result<VerificationReport> {
    if !(m >= 0.0 && m.is_finite() && h.is_finite() && a < b && a.is_finite() && b.is_finite()) {
        return Err(Error::Domain(format!("invalid input m = {m}, h = {h}, [{a}, {b}]")));
    }
    let s = (1.0 + m * m).sqrt();
    let threshold = if h >= 0.0 {
        0.0
    } else if m > 0.0 {
        (h / s - h) / m
    } else {
        f64::NEG_INFINITY
    };
    let mid = 0.5 * (a + b);
    if mid < threshold {
        return Err(Error::OutOfScope(format!("midpoint {mid} below {threshold}")));
    }
    let lhs = Line::new(m, h).mass(a, b)?;
    let rhs = std_cdf(h / s) * gauss_mass(a, b);
    Ok(VerificationReport::quadrature("relaxed-half-plane", lhs, rhs, tol)
        .with_instance(json!({ "m": m, "h": h, "a": a, "b": b })))
}

/// A Gaussian vector `mean + L z` with `L Lᵀ = covariance`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianVector {
    pub mean: Vec<f64>,
    pub covariance: Vec<Vec<f64>>,
    #[serde(skip)]
    factor: Vec<Vec<f64>>,
}

impl GaussianVector {
    /// Validates symmetry (within `1e-12` relative to the largest entry)
    /// and positive semidefiniteness; singular covariances are allowed.
    pub fn new(mean: Vec<f64>, covariance: Vec<Vec<f64>>) -> Result<Self> {
        let n = mean.len();
        if n == 0 || covariance.len() != n || covariance.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidCovariance(format!("need an {n}×{n} matrix")));
        }
        if covariance.iter().flatten().chain(mean.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidCovariance("non-finite entry".into()));
        }
        let scale = covariance
            .iter()
            .flatten()
            .fold(0.0f64, |m, v| m.max(v.abs()))
            .max(f64::MIN_POSITIVE);
        for i in 0..n {
            for j in 0..i {
                if (covariance[i][j] - covariance[j][i]).abs() > 1e-12 * scale {
                    return Err(Error::InvalidCovariance(format!("not symmetric at ({i}, {j})")));
                }
            }
        }
        let eps = 1e-12 * scale;
        let mut l = vec![vec![0.0; n]; n];
        for j in 0..n {
            let d = covariance[j][j] - (0..j).map(|k| l[j][k] * l[j][k]).sum::<f64>();
            if d < -eps {
                return Err(Error::InvalidCovariance(format!(
                    "not positive semidefinite (pivot {j}: {d:e})"
                )));
            }
            if d <= eps {
                for i in j + 1..n {
                    let r = covariance[i][j] - (0..j).map(|k| l[i][k] * l[j][k]).sum::<f64>();
                    if r.abs() > 1e-8 * scale {
                        return Err(Error::InvalidCovariance(format!(
                            "not positive semidefinite (column {j} residual {r:e})"
                        )));
                    }
                }
                continue;
            }
            let p = d.sqrt();
            l[j][j] = p;
            for i in j + 1..n {
                let r = covariance[i][j] - (0..j).map(|k| l[i][k] * l[j][k]).sum::<f64>();
                l[i][j] = r / p;
            }
        }
        Ok(GaussianVector {
            mean,
            covariance,
            factor: l,
        })
    }

    pub fn centered(covariance: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(vec![0.0; covariance.len()], covariance)
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn sample_into(&self, rng: &mut ChaCha8Rng, z: &mut [f64], out: &mut [f64]) {
        for v in z.iter_mut() {
            *v = normal(rng);
        }
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.mean[i] + (0..=i).map(|k| self.factor[i][k] * z[k]).sum::<f64>();
        }
    }
}

/// Which reading of the conditional-mean hypothesis is checked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HypothesisMode {
    /// `E(Y | rect) = E(Y | band)`: the centroid condition of Theorem 1.
    #[default]
    Centroid,
    /// `E(Y | rect ∩ band) = E(Y | band)`.
    Conditional,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Theorem1aInput {
    pub vector: GaussianVector,
    /// Upper thresholds for the coordinates other than `y_index`, in order.
    pub thresholds: Vec<f64>,
    pub y_index: usize,
    pub w: f64,
    pub samples: u64,
    pub seed: u64,
    #[serde(default)]
    pub mode: HypothesisMode,
}

impl Theorem1aInput {
    fn validate(&self) -> Result<()> {
        let n = self.vector.dim();
        if self.y_index >= n || self.thresholds.len() + 1 != n {
            return Err(Error::Domain(format!(
                "need {} thresholds and y_index < {n}",
                n.saturating_sub(1)
            )));
        }
        if self.samples < 100_000 {
            return Err(Error::Domain(format!(
                "need at least 1e5 samples, got {}",
                self.samples
            )));
        }
        if self.thresholds.iter().any(|t| t.is_nan()) {
            return Err(Error::Domain("NaN threshold".into()));
        }
        Ok(())
    }

    fn in_rect(&self, x: &[f64]) -> bool {
        let mut k = 0;
        for (i, &v) in x.iter().enumerate() {
            if i == self.y_index {
                continue;
            }
            if v > self.thresholds[k] {
                return false;
            }
            k += 1;
        }
        true
    }

    fn sample<const K: usize, F>(&self, tag: u64, n: u64, exec: Execution, f: F) -> crate::mc::Moments<K>
    where
        F: Fn(&[f64]) -> [f64; K] + Sync + Send,
    {
        let d = self.vector.dim();
        sample_moments(self.seed, tag, n, exec, |rng| {
            let mut z = [0.0; 16];
            let mut x = [0.0; 16];
            if d <= 16 {
                self.vector.sample_into(rng, &mut z[..d], &mut x[..d]);
                f(&x[..d])
            } else {
                let mut z = vec![0.0; d];
                let mut x = vec![0.0; d];
                self.vector.sample_into(rng, &mut z, &mut x);
                f(&x)
            }
        })
    }
}

/// Theorem 1A by Monte Carlo. The band `[a, b]` for `Y` is matched (weight
/// `w`) to a pilot estimate of `E(Y | rect)`, drawn from a separate stream
/// four times the main sample size.
pub fn verify_theorem1a(input: &Theorem1aInput, exec: Execution) -> Result<VerificationReport> {
    input.validate()?;
    let y = input.y_index;
    let pilot = input.sample(TAG_PILOT, 4 * input.samples, exec, |x| {
        let r = input.in_rect(x) as u8 as f64;
        [r, r * x[y]]
    });
    if pilot.sum[0] == 0.0 {
        return Err(Error::Degenerate("rectangle has no pilot samples".into()));
    }
    let c_k = pilot.sum[1] / pilot.sum[0];
    let (mu, sigma) = (input.vector.mean[y], input.vector.covariance[y][y].sqrt());
    if !(sigma > 0.0) {
        return Err(Error::Degenerate("Y has zero variance".into()));
    }
    let layer = match_layer((c_k - mu) / sigma, input.w, 1e-12)?;
    let band = (mu + sigma * layer.a, mu + sigma * layer.b);
    let mut r = theorem1a_with_band(input, band, mu + sigma * layer.centroid, layer.weight, exec)?;
    r.details["pilot_centroid"] = json!(c_k);
    Ok(r)
}

/// Theorem 1A with a given band for `Y`, its centroid `c_band` and its
/// probability `p_band`.
pub fn theorem1a_with_band(
    input: &Theorem1aInput,
    band: (f64, f64),
    c_band: f64,
    p_band: f64,
    exec: Execution,
) -> Result<VerificationReport> {
    input.validate()?;
    let y = input.y_index;
    let (a, b) = band;
    let m = input.sample(TAG_MAIN, input.samples, exec, |x| {
        let r = input.in_rect(x) as u8 as f64;
        let rb = r * ((x[y] >= a && x[y] <= b) as u8 as f64);
        [rb - p_band * r, rb, r, (x[y] - c_band) * r, (x[y] - c_band) * rb]
    });
    let (p_r, p_rb) = (m.mean(2), m.mean(1));
    if p_r == 0.0 {
        return Err(Error::Degenerate("rectangle has probability 0 in the sample".into()));
    }
    let residual = |i: usize, p: f64| {
        if p > 0.0 {
            (m.mean(i) / p, m.std_error(i) / p)
        } else {
            (f64::NAN, f64::NAN)
        }
    };
    let (res_c, se_c) = residual(3, p_r);
    let (res_k, se_k) = residual(4, p_rb);
    let (res, se_res) = match input.mode {
        HypothesisMode::Centroid => (res_c, se_c),
        HypothesisMode::Conditional => (res_k, se_k),
    };
    let se = m.std_error(0);
    let mut r = VerificationReport::monte_carlo("theorem1a", p_rb, p_r * p_band, m.mean(0), se, input.seed)
        .with_instance(serde_json::to_value(input).unwrap_or(Value::Null));
    if !(res.abs() <= 3.0 * se_res) {
        r.status = Status::Inconclusive;
    }
    r.details = json!({
        "band": [a, b],
        "band_centroid": c_band,
        "band_probability": p_band,
        "hypothesis_residual": res,
        "hypothesis_std_error": se_res,
        "centroid_residual": res_c,
        "conditional_residual": res_k,
    });
    Ok(r)
}

/// A 2D Theorem 1 instance (a wedge `⟨v₁,z⟩ <= b₁, ⟨v₂,z⟩ <= b₂` and a
/// direction `u`) written as three jointly Gaussian variables
/// `X_i = ⟨v_i, Z⟩`, `Y = ⟨u, Z⟩`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WedgeInstance {
    pub v1: Point,
    pub v2: Point,
    pub b1: f64,
    pub b2: f64,
    pub u: Point,
    pub w: f64,
}

impl WedgeInstance {
    pub fn random(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let unit = |rng: &mut ChaCha8Rng| {
            let t: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            [t.cos(), t.sin()]
        };
        let v1 = unit(&mut rng);
        let mut v2 = unit(&mut rng);
        while (v1[0] * v2[1] - v1[1] * v2[0]).abs() < 0.2 {
            v2 = unit(&mut rng);
        }
        let u = unit(&mut rng);
        WedgeInstance {
            v1,
            v2,
            b1: rng.random_range(-0.5..1.5),
            b2: rng.random_range(-0.5..1.5),
            u,
            w: [0.2, 0.4, 0.6][rng.random_range(0..3)],
        }
    }

    pub fn body(&self) -> Result<DirectionalBody> {
        DirectionalBody::from_half_planes(
            vec![
                HalfPlane {
                    normal: self.v1,
                    offset: self.b1,
                },
                HalfPlane {
                    normal: self.v2,
                    offset: self.b2,
                },
            ],
            self.u,
        )
    }

    pub fn vector(&self) -> Result<GaussianVector> {
        let rows = [self.v1, self.v2, self.u];
        let cov = rows
            .iter()
            .map(|p| rows.iter().map(|q| p[0] * q[0] + p[1] * q[1]).collect())
            .collect();
        GaussianVector::centered(cov)
    }
}

/// Checks the wedge by quadrature, then the same instance as Theorem 1A by
/// Monte Carlo with the band taken from the quadrature centroid.
pub fn verify_wedge(
    inst: &WedgeInstance,
    samples: u64,
    seed: u64,
    tol: f64,
    exec: Execution,
) -> Result<(VerificationReport, VerificationReport)> {
    let body = inst.body()?;
    let quad = verify_theorem1(&body, inst.w, tol)?.with_instance(serde_json::to_value(inst).unwrap_or(Value::Null));
    let layer: Layer = serde_json::from_value(quad.details["layer"].clone())
        .map_err(|e| Error::Invariant(format!("layer round trip: {e}")))?;
    let input = Theorem1aInput {
        vector: inst.vector()?,
        thresholds: vec![inst.b1, inst.b2],
        y_index: 2,
        w: inst.w,
        samples,
        seed,
        mode: HypothesisMode::Centroid,
    };
    let mc = theorem1a_with_band(&input, (layer.a, layer.b), layer.centroid, layer.weight, exec)?;
    Ok((quad, mc))
}

/// Sidak: `μ(∩ K_i) >= ∏ μ(K_i)` for symmetric slabs
/// `K_i = {|⟨x, u_i⟩| <= t_i}`, by Monte Carlo against exact slab masses.
pub fn verify_sidak(
    directions: &[Vec<f64>],
    radii: &[f64],
    samples: u64,
    seed: u64,
    exec: Execution,
) -> Result<VerificationReport> {
    let n = directions.first().map(|d| d.len()).unwrap_or(0);
    if directions.len() < 2 || radii.len() != directions.len() || n == 0 || n > 64 {
        return Err(Error::Domain(
            "need N >= 2 directions of equal dimension (<= 64) and N radii".into(),
        ));
    }
    if directions.iter().any(|d| d.len() != n) {
        return Err(Error::Domain("directions differ in dimension".into()));
    }
    let mut norms = Vec::with_capacity(directions.len());
    for (d, &t) in directions.iter().zip(radii) {
        let norm = d.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(norm > 0.0 && norm.is_finite()) || !(t > 0.0) {
            return Err(Error::Degenerate("zero direction or nonpositive radius".into()));
        }
        norms.push(norm);
    }
    let product: f64 = radii
        .iter()
        .zip(&norms)
        .map(|(&t, &nr)| gauss_mass(-t / nr, t / nr))
        .product();
    let m = sample_moments(seed, TAG_SIDAK, samples, exec, |rng| {
        let mut z = [0.0; 64];
        for v in z[..n].iter_mut() {
            *v = normal(rng);
        }
        let inside = directions
            .iter()
            .zip(radii)
            .all(|(d, &t)| d.iter().zip(&z[..n]).map(|(a, b)| a * b).sum::<f64>().abs() <= t);
        let i = inside as u8 as f64;
        [i - product, i]
    });
    let se = m.std_error(0);
    Ok(
        VerificationReport::monte_carlo("sidak", m.mean(1), product, m.mean(0), se, seed)
            .with_instance(json!({ "directions": directions, "radii": radii, "samples": samples })),
    )
}

/// `n`-dimensional Sidak instance with `count` random directions and radii
/// in `[0.5, 2)`.
pub fn random_sidak_instance(seed: u64, n: usize, count: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dirs = (0..count)
        .map(|_| {
            let v: Vec<f64> = (0..n).map(|_| normal(&mut rng)).collect();
            let s = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.into_iter().map(|x| x / s).collect()
        })
        .collect();
    let radii = (0..count).map(|_| rng.random_range(0.5..2.0)).collect();
    (dirs, radii)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CentroidMatch {
    pub translation: Point,
    pub iterations: usize,
    pub residual: f64,
}

/// Translation `v` making the `μ₂`-centroid of `K₂ + v` equal that of
/// `K₁`, by damped Newton with a difference Jacobian.
pub fn match_centroids(k1: &ConvexPolygon, k2: &ConvexPolygon, tol: f64) -> Result<CentroidMatch> {
    let q = 1e-13;
    let target = polygon_moments(k1, q)?.centroid;
    let f = |v: Point| -> Result<Point> {
        let c = polygon_moments(&k2.translated(v), q)?.centroid;
        Ok([c[0] - target[0], c[1] - target[1]])
    };
    let norm = |p: Point| p[0].hypot(p[1]);
    let c2 = polygon_moments(k2, q)?.centroid;
    let mut v = [target[0] - c2[0], target[1] - c2[1]];
    let mut fv = f(v)?;
    for it in 0..60 {
        if norm(fv) <= tol {
            return Ok(CentroidMatch {
                translation: v,
                iterations: it,
                residual: norm(fv),
            });
        }
        let e = 1e-6;
        let f0 = f([v[0] + e, v[1]])?;
        let f1 = f([v[0], v[1] + e])?;
        let j = [
            [(f0[0] - fv[0]) / e, (f1[0] - fv[0]) / e],
            [(f0[1] - fv[1]) / e, (f1[1] - fv[1]) / e],
        ];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if !(det.abs() > 1e-14) {
            return Err(Error::RootNonConvergence {
                iterations: it,
                lo: v[0],
                hi: v[1],
            });
        }
        let step = [
            -(j[1][1] * fv[0] - j[0][1] * fv[1]) / det,
            -(-j[1][0] * fv[0] + j[0][0] * fv[1]) / det,
        ];
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let cand = [v[0] + lambda * step[0], v[1] + lambda * step[1]];
            if let Ok(fc) = f(cand) {
                if norm(fc) < norm(fv) {
                    v = cand;
                    fv = fc;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if norm(fv) <= tol {
        return Ok(CentroidMatch {
            translation: v,
            iterations: 60,
            residual: norm(fv),
        });
    }
    Err(Error::RootNonConvergence {
        iterations: 60,
        lo: v[0],
        hi: v[1],
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairMargin {
    pub mass1: f64,
    pub mass2: f64,
    pub mass_intersection: f64,
    pub margin: f64,
    /// Bound on the quadrature error of `margin`.
    pub std_error: f64,
}

/// `μ₂(K₁ ∩ K₂) - μ₂(K₁) μ₂(K₂)`.
pub fn pair_margin(k1: &ConvexPolygon, k2: &ConvexPolygon, tol: f64) -> Result<PairMargin> {
    let q = quad_tol(tol);
    let mass1 = polygon_mass(k1, q)?;
    let mass2 = polygon_mass(k2, q)?;
    let mass_intersection = match k1.intersection(k2) {
        Some(p) => polygon_mass(&p, q)?,
        None => 0.0,
    };
    Ok(PairMargin {
        mass1,
        mass2,
        mass_intersection,
        margin: mass_intersection - mass1 * mass2,
        std_error: 3.0 * q,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Problem2Instance {
    pub trial: u64,
    pub k1: ConvexPolygon,
    pub k2: ConvexPolygon,
    pub centroid_match: CentroidMatch,
    pub margin: PairMargin,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Problem2Report {
    pub trials: u64,
    pub seed: u64,
    pub completed: usize,
    pub skipped: usize,
    pub skip_reasons: BTreeMap<String, usize>,
    pub min_margin: f64,
    pub min_margin_std_error: f64,
    pub negative_beyond_error: usize,
    /// Most negative margins first.
    pub ranked: Vec<Problem2Instance>,
}

/// Pairs of random hull polygons, the second translated so that the two
/// `μ₂`-centroids coincide. Exploratory: nothing is asserted.
pub fn search_problem2(trials: u64, seed: u64, tol: f64, keep: usize, exec: Execution) -> Result<Problem2Report> {
    let results = exec.map(trials as usize, |t| -> Result<Option<Problem2Instance>> {
        let mut rng = crate::mc::chunk_rng(seed, TAG_SEARCH, t as u64);
        let draw = |rng: &mut ChaCha8Rng| -> Result<ConvexPolygon> {
            let n = rng.random_range(3..=12);
            let centre = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
            let scale = rng.random_range(0.3..2.0);
            random_hull_polygon(rng, n, centre, scale)
        };
        let k1 = draw(&mut rng)?;
        let k2 = draw(&mut rng)?;
        let cm = match match_centroids(&k1, &k2, 1e-9) {
            Ok(cm) => cm,
            Err(Error::RootNonConvergence { .. } | Error::Degenerate(_)) => return Ok(None),
            Err(e) => return Err(e),
        };
        let k2 = k2.translated(cm.translation);
        let margin = pair_margin(&k1, &k2, tol)?;
        Ok(Some(Problem2Instance {
            trial: t as u64,
            k1,
            k2,
            centroid_match: cm,
            margin,
        }))
    });
    let mut done = Vec::new();
    let mut skip_reasons = BTreeMap::new();
    for r in results {
        match r? {
            Some(i) => done.push(i),
            None => {
                *skip_reasons
                    .entry("centroid matching did not converge".to_string())
                    .or_insert(0) += 1
            }
        }
    }
    done.sort_by(|a, b| a.margin.margin.total_cmp(&b.margin.margin).then(a.trial.cmp(&b.trial)));
    let skipped = trials as usize - done.len();
    let (min_margin, min_se) = done
        .first()
        .map(|i| (i.margin.margin, i.margin.std_error))
        .unwrap_or((f64::NAN, f64::NAN));
    let negative_beyond_error = done
        .iter()
        .filter(|i| i.margin.margin < -3.0 * i.margin.std_error)
        .count();
    let completed = done.len();
    done.truncate(keep);
    Ok(Problem2Report {
        trials,
        seed,
        completed,
        skipped,
        skip_reasons,
        min_margin,
        min_margin_std_error: min_se,
        negative_beyond_error,
        ranked: done,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossEntry {
    pub instance_seed: u64,
    pub quadrature_margin: f64,
    pub mc_margin: f64,
    pub mc_std_error: f64,
    pub agree: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossValidation {
    pub instances: usize,
    pub agreeing: usize,
    pub skipped: usize,
    pub entries: Vec<CrossEntry>,
}

/// Random polygon instance for cross-validation: polygon, unit direction
/// and weight.
pub fn cross_instance(seed: u64) -> Result<(ConvexPolygon, Point, f64)> {
    let poly = random_polygon(seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ TAG_CROSS);
    let t: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    let w = [0.1, 0.3, 0.5, 0.7, 0.9][rng.random_range(0..5)];
    Ok((poly, [t.cos(), t.sin()], w))
}

/// Theorem 1 margins of `instances` polygon instances by quadrature and by
/// Monte Carlo; instances with infeasible layers are replaced by the next
/// seed.
pub fn cross_validate(instances: usize, samples: u64, seed: u64, tol: f64, exec: Execution) -> Result<CrossValidation> {
    let mut chosen = Vec::new();
    let mut skipped = 0;
    let mut s = seed;
    while chosen.len() < instances {
        let (poly, u, w) = cross_instance(s)?;
        match verify_theorem1_polygon(&poly, u, w, tol) {
            Ok(r) => chosen.push((s, poly, u, r)),
            Err(Error::Infeasible(_) | Error::Degenerate(_)) => skipped += 1,
            Err(e) => return Err(e),
        }
        s += 1;
        if s - seed > 100 * instances as u64 + 100 {
            return Err(Error::Invariant(
                "too many infeasible cross-validation instances".into(),
            ));
        }
    }
    let mut entries = Vec::with_capacity(instances);
    for (s, poly, u, r) in chosen {
        let layer: Layer = serde_json::from_value(r.details["layer"].clone())
            .map_err(|e| Error::Invariant(format!("layer round trip: {e}")))?;
        let planes = poly.half_planes();
        let m = sample_moments(s, TAG_CROSS, samples, exec, |rng| {
            let p = [normal(rng), normal(rng)];
            let inside = planes.iter().all(|h| h.contains(p)) as u8 as f64;
            let t = p[0] * u[0] + p[1] * u[1];
            let band = (t >= layer.a && t <= layer.b) as u8 as f64;
            [inside * band - layer.weight * inside]
        });
        let se = m.std_error(0);
        let mc_margin = m.mean(0);
        entries.push(CrossEntry {
            instance_seed: s,
            quadrature_margin: r.margin,
            mc_margin,
            mc_std_error: se,
            agree: (mc_margin - r.margin).abs() <= 3.0 * se,
        });
    }
    Ok(CrossValidation {
        instances,
        agreeing: entries.iter().filter(|e| e.agree).count(),
        skipped,
        entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const INF: f64 = f64::INFINITY;

    #[test]
    fn match_layer_symmetric() {
        let l = match_layer(0.0, 0.9, 1e-12).unwrap();
        assert!((l.a + 1.644_853_626_951_472_2).abs() < 1e-9);
        assert!((l.a + l.b).abs() < 1e-9);
        let l = match_layer(0.3, 0.5, 1e-12).unwrap();
        assert!((crate::gauss::layer_centroid(l.a, l.b).unwrap() - 0.3).abs() < 1e-10);
    }

    #[test]
    fn trivial_theorem1_cases() {
        let full = ConcaveProfile::plus_infinity((-INF, INF)).unwrap();
        let r = verify_theorem1(&full, 0.4, 1e-9).unwrap();
        assert!(r.margin.abs() < 1e-10 && r.passed());
        let flat = ConcaveProfile::constant(0.3, (-INF, INF)).unwrap();
        let r = verify_theorem1(&flat, 0.6, 1e-9).unwrap();
        assert!(r.margin.abs() < 1e-10 && r.passed());
    }

    #[test]
    fn psd_factor() {
        assert!(GaussianVector::centered(vec![vec![1.0, 2.0], vec![2.0, 1.0]]).is_err());
        assert!(GaussianVector::centered(vec![vec![1.0, 0.5], vec![0.4, 1.0]]).is_err());
        let g = WedgeInstance::random(3).vector().unwrap();
        assert_eq!(g.dim(), 3);
    }

    #[test]
    fn pair_margin_identities() {
        let k = ConvexPolygon::rectangle(-1.0, 0.5, -0.3, 2.0).unwrap();
        let p = pair_margin(&k, &k, 1e-10).unwrap();
        assert!((p.margin - (p.mass1 - p.mass1 * p.mass1)).abs() < 1e-10);
        let plane = ConvexPolygon::rectangle(-60.0, 60.0, -60.0, 60.0).unwrap();
        assert!(pair_margin(&k, &plane, 1e-10).unwrap().margin.abs() < 1e-10);
    }
}
