//! Extremal configurations
//! `R₁ = {x <= B, y <= m x + h}` and `R₂ = {x >= A, y <= m x + h}`,
//! the ratio functionals `F₁`, `F₂`, monotonicity scans in `h`, and the
//! reflection argument for `h < 0`.
//!
//! Every planar integral here is reduced to a one-dimensional integral of
//! `Φ(m x + h)` against `μ₁`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::extreal::{ext, ext_opt, ext_pair_opt};
use crate::gauss::{density, gauss_mass, hazard, std_cdf, SQRT_2PI};
use crate::line::Line;
use crate::profiles::{centered_moment, functionals, ConcaveProfile, Layer};
use crate::quadrature::{find_root_with, integrate, QuadOptions, RootOptions, TAIL_CUTOFF};

/// A signed moment smaller than this fraction of its absolute counterpart
/// is treated as zero: the boundary has escaped to `±∞`.
const ESCAPE_REL: f64 = 1e-10;
const PROFILE_TOL: f64 = 1e-13;
/// Length of the `h` window used when the feasible range is unbounded.
pub const OPEN_RANGE_SPAN: f64 = 16.0;
/// Window used when `h` ranges over the whole line (`m = 0`).
pub const FREE_WINDOW: (f64, f64) = (-4.0, 12.0);
/// Scans start no lower than `h = DENOMINATOR_FLOOR - m b`; below it
/// `Φ(m x + h) < Φ(-6.5)` on the whole layer.
pub const DENOMINATOR_FLOOR: f64 = -6.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RegionKind {
    R1,
    R2,
}

impl RegionKind {
    pub fn flipped(self) -> Self {
        match self {
            RegionKind::R1 => RegionKind::R2,
            RegionKind::R2 => RegionKind::R1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtremalConfig {
    pub kind: RegionKind,
    pub m: f64,
    #[serde(with = "ext")]
    pub h: f64,
    /// `B` for `R1`, `A` for `R2`.
    #[serde(with = "ext")]
    pub boundary: f64,
    pub c: f64,
}

impl ExtremalConfig {
    /// Configuration of the given kind whose centroid abscissa is `c`.
    pub fn solve(kind: RegionKind, m: f64, h: f64, c: f64, tol: f64) -> Result<Self> {
        let boundary = boundary_for_centroid(kind, m, h, c, tol)?;
        Ok(ExtremalConfig {
            kind,
            m,
            h,
            boundary,
            c,
        })
    }

    pub fn line(&self) -> Line {
        Line::new(self.m, self.h)
    }

    /// Range of `x` covered by the region.
    pub fn x_range(&self) -> (f64, f64) {
        match self.kind {
            RegionKind::R1 => (f64::NEG_INFINITY, self.boundary),
            RegionKind::R2 => (self.boundary, f64::INFINITY),
        }
    }

    /// `μ₂` of the region.
    pub fn mass(&self) -> Result<f64> {
        let (lo, hi) = self.x_range();
        self.line().mass(lo, hi)
    }

    /// `∫_R (x - c) dμ₂`, zero when the centroid condition holds.
    pub fn centroid_residual(&self) -> Result<f64> {
        let (lo, hi) = self.x_range();
        self.line().moment(lo, hi, self.c)
    }

    /// `μ₂` of the region inside the slab `[a, b]`.
    pub fn mass_in(&self, a: f64, b: f64) -> Result<f64> {
        let (lo, hi) = self.x_range();
        let (l, r) = (lo.max(a), hi.min(b));
        if l >= r {
            return Ok(0.0);
        }
        self.line().mass(l, r)
    }
}

fn check_slope(m: f64) -> Result<()> {
    if !(m >= 0.0 && m.is_finite()) {
        return Err(Error::Domain(format!("slope must be finite and >= 0, got {m}")));
    }
    Ok(())
}

/// Moments can be tiny in absolute terms, so roots are converged in `x`.
fn root_opts() -> RootOptions {
    RootOptions {
        xtol: 0.0,
        rtol: 4.0 * f64::EPSILON,
        ftol: 0.0,
        max_iter: 300,
    }
}

/// Centroid abscissa of the half-plane `{y <= m x + h}`.
pub fn half_plane_centroid(m: f64, h: f64) -> f64 {
    if h == f64::INFINITY {
        return 0.0;
    }
    let s = (1.0 + m * m).sqrt();
    // φ(t)/Φ(t) = hazard(-t)
    m / s * hazard(-h / s)
}

/// Solves the centroid condition `∫_R (x - c) dμ₂ = 0` for the free
/// boundary of `R1` (returns `B`) or `R2` (returns `A`).
///
/// Returns `+∞` (resp. `-∞`) when `c` is the centroid of the whole
/// half-plane, so the region is the half-plane itself.
pub fn boundary_for_centroid(kind: RegionKind, m: f64, h: f64, c: f64, tol: f64) -> Result<f64> {
    check_slope(m)?;
    if !c.is_finite() || h.is_nan() {
        return Err(Error::Domain(format!(
            "need finite c and a non-NaN h, got c = {c}, h = {h}"
        )));
    }
    if !(tol > 0.0) {
        return Err(Error::Domain(format!("tolerance must be positive, got {tol}")));
    }
    if h == f64::NEG_INFINITY {
        return Err(Error::Degenerate("h = -∞ gives an empty region".into()));
    }
    if c.abs() >= TAIL_CUTOFF {
        return Err(Error::Domain(format!("centroid {c} outside the numerical range")));
    }
    let line = Line::new(m, h);
    let total = line.moment(f64::NEG_INFINITY, f64::INFINITY, c)?;
    let scale = line.abs_moment(f64::NEG_INFINITY, f64::INFINITY, c)?;
    let kappa = half_plane_centroid(m, h);
    let escaped = total.abs() <= ESCAPE_REL * scale;
    let opts = root_opts();
    match kind {
        RegionKind::R1 => {
            if escaped {
                return Ok(f64::INFINITY);
            }
            if total < 0.0 {
                return Err(Error::Infeasible(format!(
                    "R1 needs c below the half-plane centroid κ(h) = {kappa}, got c = {c}"
                )));
            }
            let g = |b: f64| line.moment(f64::NEG_INFINITY, b, c);
            if !(g(c)? < 0.0) {
                return Err(Error::Degenerate(format!("no mass left of c = {c} under the line")));
            }
            Ok(find_root_with(g, c, TAIL_CUTOFF, &opts)?.root)
        }
        RegionKind::R2 => {
            if escaped {
                return Ok(f64::NEG_INFINITY);
            }
            if total > 0.0 {
                return Err(Error::Infeasible(format!(
                    "R2 needs c above the half-plane centroid κ(h) = {kappa}, got c = {c}"
                )));
            }
            let g = |a: f64| line.moment(a, f64::INFINITY, c);
            if !(g(c)? > 0.0) {
                return Err(Error::Degenerate(format!("no mass right of c = {c} under the line")));
            }
            Ok(find_root_with(g, -TAIL_CUTOFF, c, &opts)?.root)
        }
    }
}

/// `B̃(c)`: the `h = +∞` limit of `B`, solving `-φ(B)/Φ(B) = c`.
pub fn limit_b_tilde(c: f64, tol: f64) -> Result<f64> {
    boundary_for_centroid(RegionKind::R1, 0.0, f64::INFINITY, c, tol)
}

/// `Ã(c)`: the `h = +∞` limit of `A`, solving `φ(A)/(1 - Φ(A)) = c`.
pub fn limit_a_tilde(c: f64, tol: f64) -> Result<f64> {
    boundary_for_centroid(RegionKind::R2, 0.0, f64::INFINITY, c, tol)
}

/// `h̃(m, c)`: the intercept at which `B` reaches `+∞`, i.e. the half-plane
/// centroid equals `c`. `+∞` for `c <= 0`; `-∞` for `m = 0 < c`.
///
/// Uses `κ(h) = (m/σ)·φ(h/σ)/Φ(h/σ)`, so `h̃ = -σ·Ã(cσ/m)`.
pub fn h_tilde(m: f64, c: f64, tol: f64) -> Result<f64> {
    check_slope(m)?;
    if c <= 0.0 {
        return Ok(f64::INFINITY);
    }
    if m == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    let s = (1.0 + m * m).sqrt();
    Ok(-s * limit_a_tilde(c * s / m, tol)?)
}

/// `h*(m, c, b)`: the intercept at which `B(h) = b`. Below it the `R1`
/// boundary falls short of the layer.
pub fn h_star(m: f64, c: f64, b: f64) -> Result<f64> {
    check_slope(m)?;
    if !(b > c) {
        return Err(Error::Domain(format!("need b > c, got b = {b}, c = {c}")));
    }
    // sign of ∫_{-∞}^b (x - c) Φ(m x + h) dμ₁ is the sign of b - B(h)
    let strip = -density(b) - c * std_cdf(b);
    if strip > 0.0 || (m == 0.0 && c > 0.0) {
        return Err(Error::Infeasible(format!(
            "B(h) stays below b = {b} for every h at c = {c}"
        )));
    }
    if m == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    let s = (1.0 + m * m).sqrt();
    let g = |h: f64| Line::new(m, h).moment(f64::NEG_INFINITY, b, c);
    let g0 = g(0.0)?;
    if g0 == 0.0 {
        return Ok(0.0);
    }
    let dir = if g0 > 0.0 { 1.0 } else { -1.0 };
    let mut trace = vec![(0.0, g0)];
    let mut prev = 0.0;
    for k in 0..=6 {
        let h = dir * s * 2f64.powi(k);
        let v = g(h)?;
        trace.push((h, v));
        if v == 0.0 && dir < 0.0 {
            return Err(Error::BracketExpansion {
                reason: "moment underflowed before changing sign".into(),
                trace,
            });
        }
        if v == 0.0 || (v > 0.0) != (g0 > 0.0) {
            let (lo, hi) = if dir > 0.0 { (prev, h) } else { (h, prev) };
            return Ok(find_root_with(g, lo, hi, &root_opts())?.root);
        }
        prev = h;
    }
    Err(Error::BracketExpansion {
        reason: format!("B(h) - b kept its sign up to |h| = {}", 64.0 * s),
        trace,
    })
}

/// `F₁` (for `R1`) or `F₂` (for `R2`):
/// `μ₂(R) / (μ₂(R ∩ L) / μ₁([a, b]))`, with `L` the full slab.
///
/// Theorem 1 for the configuration is `ratio <= 1`. The centroid of
/// `config` is not required to equal the layer centroid.
pub fn f_ratio(config: &ExtremalConfig, layer: &Layer, _tol: f64) -> Result<f64> {
    if config.kind == RegionKind::R1 && config.boundary < layer.b - 1e-8 * (1.0 + layer.b.abs()) {
        return Err(Error::Domain(format!(
            "R1 boundary {} lies left of the layer end {}",
            config.boundary, layer.b
        )));
    }
    let num = config.mass()?;
    let den = config.line().mass(layer.a, layer.b)? / layer.weight;
    if !(den >= 1e-12) {
        return Err(Error::Degenerate(format!("denominator {den:e} below 1e-12")));
    }
    Ok(num / den)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct F1Derivative {
    /// `∂F₁/∂h` from the closed expression.
    pub formula: f64,
    /// Central difference of `F₁` with re-solved boundaries.
    pub finite_difference: f64,
    pub boundary: f64,
    /// `dB/dh` by implicit differentiation of the centroid condition.
    pub boundary_derivative: f64,
}

/// `∂F₁/∂h` at `h` for the layer, by the closed expression and by a
/// central difference. Requires a finite boundary.
pub fn f1_derivative(m: f64, h: f64, layer: &Layer, tol: f64) -> Result<F1Derivative> {
    let c = layer.centroid;
    let cfg = ExtremalConfig::solve(RegionKind::R1, m, h, c, tol)?;
    let b = cfg.boundary;
    if !b.is_finite() {
        return Err(Error::Domain(format!(
            "B(h) = {b} at h = {h}; derivative needs finite B"
        )));
    }
    let line = cfg.line();
    let g_b = (b - c) * std_cdf(m * b + h) * density(b);
    let g_h = line.moment_dh(f64::NEG_INFINITY, b, c)?;
    let b_prime = -g_h / g_b;
    let w = layer.weight;
    let num = line.mass(f64::NEG_INFINITY, b)?;
    let den = line.mass(layer.a, layer.b)? / w;
    // e^{-y²/2} integrals are √(2π) times φ-integrals
    let inner_top =
        b_prime * (-0.5 * b * b).exp() * std_cdf(m * b + h) + SQRT_2PI * line.mass_dh(f64::NEG_INFINITY, b)?;
    let inner_bottom = SQRT_2PI * line.mass_dh(layer.a, layer.b)? / w;
    let formula = (den * inner_top - num * inner_bottom) / (SQRT_2PI * den * den);

    let delta = 1e-4 * h.abs().max(1.0);
    let f_at = |hh: f64| -> Result<f64> {
        let cfg = ExtremalConfig::solve(RegionKind::R1, m, hh, c, tol)?;
        f_ratio(&cfg, layer, tol)
    };
    let finite_difference = (f_at(h + delta)? - f_at(h - delta)?) / (2.0 * delta);
    Ok(F1Derivative {
        formula,
        finite_difference,
        boundary: b,
        boundary_derivative: b_prime,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanParams {
    pub kind: RegionKind,
    pub m: f64,
    pub c: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w: Option<f64>,
    #[serde(with = "ext")]
    pub h: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanEntry {
    pub params: ScanParams,
    #[serde(with = "ext")]
    pub value: f64,
    /// `value(next) - value(this)`; absent on the last entry.
    #[serde(with = "ext_opt")]
    pub forward_difference: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedPoint {
    #[serde(with = "ext")]
    pub h: f64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityReport {
    pub quantity: String,
    pub entries: Vec<ScanEntry>,
    pub skipped: Vec<SkippedPoint>,
    #[serde(with = "ext")]
    pub min_forward_difference: f64,
    pub pass: bool,
}

fn forward_difference(v0: f64, v1: f64) -> f64 {
    if v0 == v1 {
        0.0
    } else {
        v1 - v0
    }
}

fn build_report(
    quantity: &str,
    values: Vec<(ScanParams, Result<f64>)>,
    mut skipped: Vec<SkippedPoint>,
    tol: f64,
) -> Result<MonotonicityReport> {
    let mut kept = Vec::new();
    for (p, v) in values {
        match v {
            Ok(v) => kept.push((p, v)),
            Err(Error::Infeasible(reason)) | Err(Error::Degenerate(reason)) => {
                skipped.push(SkippedPoint { h: p.h, reason })
            }
            Err(e) => return Err(e),
        }
    }
    let mut entries = Vec::with_capacity(kept.len());
    let mut min_fd = f64::INFINITY;
    for i in 0..kept.len() {
        let fd = kept.get(i + 1).map(|next| forward_difference(kept[i].1, next.1));
        if let Some(d) = fd {
            min_fd = min_fd.min(d);
        }
        entries.push(ScanEntry {
            params: kept[i].0.clone(),
            value: kept[i].1,
            forward_difference: fd,
        });
    }
    Ok(MonotonicityReport {
        quantity: quantity.to_string(),
        entries,
        skipped,
        min_forward_difference: min_fd,
        pass: !(min_fd < -tol),
    })
}

/// Boundary `B(h)` (or `A(h)`) along `h_grid`; checks it is nondecreasing.
pub fn scan_lemma8(
    kind: RegionKind,
    m: f64,
    c: f64,
    h_grid: &[f64],
    tol: f64,
    exec: Execution,
) -> Result<MonotonicityReport> {
    let values = exec.map_slice(h_grid, |&h| {
        let p = ScanParams { kind, m, c, w: None, h };
        (p, boundary_for_centroid(kind, m, h, c, 1e-3 * tol))
    });
    let name = match kind {
        RegionKind::R1 => "B(h)",
        RegionKind::R2 => "A(h)",
    };
    build_report(name, values, Vec::new(), tol)
}

/// `F₁(h, w)` along `h_grid ∩ [h*, h̃]` with the layer fixed by `(c, w)`;
/// checks it is nondecreasing.
pub fn scan_lemma9(m: f64, c: f64, w: f64, h_grid: &[f64], tol: f64, exec: Execution) -> Result<MonotonicityReport> {
    let layer = Layer::matching(c, w, 1e-12)?;
    let lo = h_star(m, c, layer.b)?;
    let hi = h_tilde(m, c, tol)?;
    let mut skipped = Vec::new();
    let inside: Vec<f64> = h_grid
        .iter()
        .copied()
        .filter(|&h| {
            let ok = h >= lo && h <= hi;
            if !ok {
                skipped.push(SkippedPoint {
                    h,
                    reason: format!("outside [h*, h̃] = [{lo}, {hi}]"),
                });
            }
            ok
        })
        .collect();
    let values = exec.map_slice(&inside, |&h| {
        let p = ScanParams {
            kind: RegionKind::R1,
            m,
            c,
            w: Some(w),
            h,
        };
        let v = ExtremalConfig::solve(RegionKind::R1, m, h, c, 1e-3 * tol).and_then(|cfg| f_ratio(&cfg, &layer, tol));
        (p, v)
    });
    build_report("F1(h,w)", values, skipped, tol)
}

/// `n` points from `lo` to `hi`, denser near `lo` (geometric steps with
/// ratio 1.5). Unbounded ends are replaced by [`OPEN_RANGE_SPAN`] or
/// [`FREE_WINDOW`].
pub fn h_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (lo, hi) = match (lo.is_finite(), hi.is_finite()) {
        (true, true) => (lo, hi),
        (true, false) => (lo, lo + OPEN_RANGE_SPAN),
        (false, true) => (hi - OPEN_RANGE_SPAN, hi),
        (false, false) => FREE_WINDOW,
    };
    if n <= 1 {
        return vec![lo];
    }
    let r: f64 = 1.5;
    let denom = r.powi(n as i32 - 1) - 1.0;
    let mut g: Vec<f64> = (0..n)
        .map(|k| lo + (hi - lo) * (r.powi(k as i32) - 1.0) / denom)
        .collect();
    g[n - 1] = hi;
    g
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftEntry {
    #[serde(with = "ext")]
    pub boundary: f64,
    pub centroid: f64,
    /// `μ₂(R₂ ∩ L) / μ₂(L)` for the layer matched to this centroid.
    pub ratio: f64,
    pub mass: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftReport {
    pub m: f64,
    pub h: f64,
    pub w: f64,
    pub entries: Vec<ShiftEntry>,
    pub skipped: usize,
    /// Largest increase of the ratio as `A` decreases.
    pub max_ratio_increase: f64,
    /// Largest decrease of `μ₂(R₂)` as `A` decreases.
    pub max_mass_decrease: f64,
    pub pass: bool,
}

/// Moves the `R₂` boundary `A` down the decreasing grid `boundaries` at
/// fixed `(m, h)`, re-matching a layer of weight `w` to the new centroid
/// each time.
pub fn r2_shift_monotonicity(m: f64, h: f64, w: f64, boundaries: &[f64], tol: f64) -> Result<ShiftReport> {
    check_slope(m)?;
    if boundaries.windows(2).any(|p| !(p[1] < p[0])) {
        return Err(Error::Domain("boundary grid must be strictly decreasing".into()));
    }
    let line = Line::new(m, h);
    let mut entries = Vec::new();
    let mut skipped = 0;
    for &a_bd in boundaries {
        let mass = line.mass(a_bd, f64::INFINITY)?;
        if !(mass > 1e-12) {
            skipped += 1;
            continue;
        }
        let c = line.moment(a_bd, f64::INFINITY, 0.0)? / mass;
        let layer = match Layer::matching(c, w, 1e-12) {
            Ok(l) => l,
            Err(Error::Infeasible(_)) => {
                skipped += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        let (l, r) = (a_bd.max(layer.a), layer.b);
        let inside = if l < r { line.mass(l, r)? } else { 0.0 };
        entries.push(ShiftEntry {
            boundary: a_bd,
            centroid: c,
            ratio: inside / layer.weight,
            mass,
        });
    }
    let mut max_ratio_increase = f64::NEG_INFINITY;
    let mut max_mass_decrease = f64::NEG_INFINITY;
    for p in entries.windows(2) {
        max_ratio_increase = max_ratio_increase.max(p[1].ratio - p[0].ratio);
        max_mass_decrease = max_mass_decrease.max(p[0].mass - p[1].mass);
    }
    Ok(ShiftReport {
        m,
        h,
        w,
        pass: !(max_ratio_increase > tol) && !(max_mass_decrease > tol),
        entries,
        skipped,
        max_ratio_increase,
        max_mass_decrease,
    })
}

/// `B(h) - c` for increasingly negative `h`. Not asserted anywhere.
pub fn boundary_tail_diagnostic(m: f64, c: f64, tol: f64) -> Result<Vec<(f64, f64)>> {
    [-2.0, -4.0, -8.0, -16.0]
        .iter()
        .map(|&h| Ok((h, boundary_for_centroid(RegionKind::R1, m, h, c, tol)? - c)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanGrid {
    pub ms: Vec<f64>,
    pub cs: Vec<f64>,
    pub ws: Vec<f64>,
    pub h_points: usize,
}

impl Default for ScanGrid {
    fn default() -> Self {
        ScanGrid {
            ms: vec![0.0, 0.25, 0.5, 1.0, 2.0, 4.0],
            cs: vec![-1.0, -0.5, -0.2, 0.0, 0.2, 0.5, 1.0],
            ws: vec![0.1, 0.3, 0.5, 0.7, 0.9],
            h_points: 17,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub m: f64,
    pub c: f64,
    pub w: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub skipped: Option<String>,
    #[serde(with = "ext_opt")]
    pub h_star: Option<f64>,
    #[serde(with = "ext_opt")]
    pub h_tilde: Option<f64>,
    /// Range actually scanned for `R1`.
    #[serde(default, with = "ext_pair_opt")]
    pub h_range: Option<(f64, f64)>,
    pub boundary_r1: Option<MonotonicityReport>,
    pub boundary_r2: Option<MonotonicityReport>,
    pub f1: Option<MonotonicityReport>,
    pub f2: Option<MonotonicityReport>,
    #[serde(with = "ext_opt")]
    pub handoff_gap: Option<f64>,
    /// Every scanned `R₂` boundary satisfied `A <= a`.
    pub r2_left_of_layer: Option<bool>,
    pub shift: Option<ShiftReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanSummary {
    pub grid: ScanGrid,
    pub tol: f64,
    pub cells: Vec<CellReport>,
    #[serde(with = "ext")]
    pub min_fd_boundary: f64,
    #[serde(with = "ext")]
    pub min_fd_f1: f64,
    #[serde(with = "ext")]
    pub max_f1: f64,
    #[serde(with = "ext")]
    pub max_f2: f64,
    #[serde(with = "ext")]
    pub max_handoff_gap: f64,
    #[serde(with = "ext")]
    pub max_shift_violation: f64,
    pub feasible_cells: usize,
    pub skipped_cells: usize,
    pub pass: bool,
}

fn max_value(r: &Option<MonotonicityReport>) -> f64 {
    r.as_ref()
        .map(|r| r.entries.iter().map(|e| e.value).fold(f64::NEG_INFINITY, f64::max))
        .unwrap_or(f64::NEG_INFINITY)
}

fn min_fd(r: &Option<MonotonicityReport>) -> f64 {
    r.as_ref().map(|r| r.min_forward_difference).unwrap_or(f64::INFINITY)
}

fn scan_cell(m: f64, c: f64, w: f64, n: usize, tol: f64) -> Result<CellReport> {
    let mut cell = CellReport {
        m,
        c,
        w,
        skipped: None,
        h_star: None,
        h_tilde: None,
        h_range: None,
        boundary_r1: None,
        boundary_r2: None,
        f1: None,
        f2: None,
        handoff_gap: None,
        r2_left_of_layer: None,
        shift: None,
    };
    let layer = match Layer::matching(c, w, 1e-12) {
        Ok(l) => l,
        Err(Error::Infeasible(reason)) => {
            cell.skipped = Some(reason);
            return Ok(cell);
        }
        Err(e) => return Err(e),
    };
    let seq = Execution::Sequential;
    let ht = h_tilde(m, c, tol)?;
    cell.h_tilde = Some(ht);
    if ht > f64::NEG_INFINITY {
        let hs = h_star(m, c, layer.b)?;
        cell.h_star = Some(hs);
        let lo = hs.max(DENOMINATOR_FLOOR - m * layer.b).min(ht);
        cell.h_range = Some((lo, ht));
        let grid = h_grid(lo, ht, n);
        cell.boundary_r1 = Some(scan_lemma8(RegionKind::R1, m, c, &grid, tol, seq)?);
        cell.f1 = Some(scan_lemma9(m, c, w, &grid, tol, seq)?);
    }
    if c > 0.0 {
        let (lo, hi) = if m == 0.0 {
            FREE_WINDOW
        } else {
            let s = (1.0 + m * m).sqrt();
            (ht, ht + OPEN_RANGE_SPAN * s)
        };
        let grid = h_grid(lo, hi, n);
        let r2 = scan_lemma8(RegionKind::R2, m, c, &grid, tol, seq)?;
        cell.r2_left_of_layer = Some(r2.entries.iter().all(|e| e.value <= layer.a + 1e-9));
        let values = grid
            .iter()
            .map(|&h| {
                let p = ScanParams {
                    kind: RegionKind::R2,
                    m,
                    c,
                    w: Some(w),
                    h,
                };
                let v = ExtremalConfig::solve(RegionKind::R2, m, h, c, 1e-3 * tol)
                    .and_then(|cfg| f_ratio(&cfg, &layer, tol));
                (p, v)
            })
            .collect();
        cell.f2 = Some(build_report("F2(h,w)", values, Vec::new(), tol)?);
        cell.boundary_r2 = Some(r2);
        if m > 0.0 {
            let r1 = ExtremalConfig::solve(RegionKind::R1, m, ht, c, 1e-3 * tol)?;
            let r2 = ExtremalConfig::solve(RegionKind::R2, m, ht, c, 1e-3 * tol)?;
            cell.handoff_gap = Some((f_ratio(&r1, &layer, tol)? - f_ratio(&r2, &layer, tol)?).abs());
            let h = ht + 1.0;
            let a0 = boundary_for_centroid(RegionKind::R2, m, h, c, 1e-3 * tol)?;
            let mut bds: Vec<f64> = (0..7).map(|k| a0 - 0.25 * (2f64.powi(k) - 1.0)).collect();
            bds.push(f64::NEG_INFINITY);
            cell.shift = Some(r2_shift_monotonicity(m, h, w, &bds, tol)?);
        }
    }
    Ok(cell)
}

/// Runs every `(m, c, w)` cell of `grid`; cells are evaluated in parallel
/// and reported in grid order.
pub fn run_scan(grid: &ScanGrid, tol: f64, exec: Execution) -> Result<ScanSummary> {
    let mut combos = Vec::new();
    for &m in &grid.ms {
        check_slope(m)?;
        for &c in &grid.cs {
            for &w in &grid.ws {
                combos.push((m, c, w));
            }
        }
    }
    let cells: Vec<CellReport> = exec
        .map_slice(&combos, |&(m, c, w)| scan_cell(m, c, w, grid.h_points, tol))
        .into_iter()
        .collect::<Result<_>>()?;

    let mut s = ScanSummary {
        grid: grid.clone(),
        tol,
        cells: Vec::new(),
        min_fd_boundary: f64::INFINITY,
        min_fd_f1: f64::INFINITY,
        max_f1: f64::NEG_INFINITY,
        max_f2: f64::NEG_INFINITY,
        max_handoff_gap: 0.0,
        max_shift_violation: f64::NEG_INFINITY,
        feasible_cells: 0,
        skipped_cells: 0,
        pass: true,
    };
    for cell in &cells {
        if cell.skipped.is_some() {
            s.skipped_cells += 1;
            continue;
        }
        s.feasible_cells += 1;
        s.min_fd_boundary = s
            .min_fd_boundary
            .min(min_fd(&cell.boundary_r1))
            .min(min_fd(&cell.boundary_r2));
        s.min_fd_f1 = s.min_fd_f1.min(min_fd(&cell.f1));
        s.max_f1 = s.max_f1.max(max_value(&cell.f1));
        s.max_f2 = s.max_f2.max(max_value(&cell.f2));
        if let Some(g) = cell.handoff_gap {
            s.max_handoff_gap = s.max_handoff_gap.max(g);
        }
        if let Some(sh) = &cell.shift {
            s.max_shift_violation = s
                .max_shift_violation
                .max(sh.max_ratio_increase)
                .max(sh.max_mass_decrease);
        }
    }
    s.pass = s.min_fd_boundary >= -tol
        && s.min_fd_f1 >= -tol
        && s.max_f1 <= 1.0 + tol
        && s.max_f2 <= 1.0 + tol
        && s.max_handoff_gap <= 1e-9
        && !(s.max_shift_violation > tol);
    s.cells = cells;
    Ok(s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Pass,
    Fail,
    HypothesisNotMet,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AveragingReport {
    pub outer_average: f64,
    pub inner_average: f64,
    pub outer_barycenter: f64,
    pub inner_barycenter: f64,
    /// `(outer barycenter - inner barycenter)(g(β') - g(α'))`.
    pub hypothesis: f64,
    pub margin: f64,
    pub status: CheckStatus,
}

/// Compares the `ρ`-averages of a convex `g` over nested intervals
/// `[α', β'] ⊂ [α, β]`. Infinite outer ends are cut at `±40`.
pub fn averaging_inequality_check<G, R>(
    g: G,
    rho: R,
    outer: (f64, f64),
    inner: (f64, f64),
    tol: f64,
) -> Result<AveragingReport>
where
    G: Fn(f64) -> f64,
    R: Fn(f64) -> f64,
{
    let (alpha, beta) = outer;
    let (a1, b1) = inner;
    if !(alpha <= a1 && a1 < b1 && b1 <= beta) || !a1.is_finite() || !b1.is_finite() {
        return Err(Error::Domain(format!(
            "need α <= α' < β' <= β with finite inner ends, got [{alpha}, {beta}] ⊃ [{a1}, {b1}]"
        )));
    }
    let clip = |x: f64| x.clamp(-TAIL_CUTOFF, TAIL_CUTOFF);
    let opts = QuadOptions::relative(1e-12).with_breakpoints([a1, b1]);
    let avg = |lo: f64, hi: f64| -> Result<(f64, f64)> {
        let (lo, hi) = (clip(lo), clip(hi));
        let w = integrate(&rho, lo, hi, &opts)?.value;
        if !(w > 0.0) {
            return Err(Error::Degenerate(format!("ρ has no mass on [{lo}, {hi}]")));
        }
        let gx = integrate(|x| g(x) * rho(x), lo, hi, &opts)?.value;
        let xx = integrate(|x| x * rho(x), lo, hi, &opts)?.value;
        Ok((gx / w, xx / w))
    };
    let (outer_average, outer_barycenter) = avg(alpha, beta)?;
    let (inner_average, inner_barycenter) = avg(a1, b1)?;
    let hypothesis = (outer_barycenter - inner_barycenter) * (g(b1) - g(a1));
    let margin = outer_average - inner_average;
    let status = if hypothesis < -tol {
        CheckStatus::HypothesisNotMet
    } else if margin >= -tol {
        CheckStatus::Pass
    } else {
        CheckStatus::Fail
    };
    Ok(AveragingReport {
        outer_average,
        inner_average,
        outer_barycenter,
        inner_barycenter,
        hypothesis,
        margin,
        status,
    })
}

/// The averaging inequality behind `∂F₁/∂h >= 0`:
/// `g(x) = e^{-y²/2}/Φ(y)`, `dρ = Φ(y) dμ₁` with `y = m x + h`, outer
/// `(-∞, B]`, inner `[a, b]`.
pub fn lemma9_averaging(m: f64, h: f64, layer: &Layer, tol: f64) -> Result<AveragingReport> {
    let cfg = ExtremalConfig::solve(RegionKind::R1, m, h, layer.centroid, 1e-3 * tol)?;
    let g = move |x: f64| SQRT_2PI * hazard(-(m * x + h));
    let rho = move |x: f64| std_cdf(m * x + h) * density(x);
    averaging_inequality_check(g, rho, (f64::NEG_INFINITY, cfg.boundary), (layer.a, layer.b), tol)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FinalCaseGeometry {
    pub h0: f64,
    pub x0: f64,
    pub x1: f64,
    pub x2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReducedCase {
    /// `b' = 2 x₀ - a`.
    pub b_reflected: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    /// The left side rewritten with the reflected line; equals `lhs`.
    pub reflected_lhs: f64,
    pub identity_residual: f64,
    pub triangle_lhs: f64,
    pub triangle_rhs: f64,
    pub triangle_margin: f64,
    pub triangle_area_left: f64,
    pub triangle_area_right: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FinalCaseReport {
    pub m: f64,
    pub h: f64,
    pub a: f64,
    pub b: f64,
    pub phi0: f64,
    pub geometry: FinalCaseGeometry,
    /// `a >= x₀`: nothing to prove beyond the direct average.
    pub trivial: bool,
    pub average: f64,
    pub average_margin: f64,
    pub reduced: Option<ReducedCase>,
    pub pass: bool,
}

/// Checks `avg_{[a,b]} Φ(m x + h) >= Φ(h/σ)` for `h < 0`, together with the
/// reflection argument in the symmetric case `b = 2 x₀ - a`.
pub fn final_case_check(m: f64, h: f64, a: f64, b: f64, tol: f64) -> Result<FinalCaseReport> {
    if !(m > 0.0 && m.is_finite()) || !(h < 0.0 && h.is_finite()) {
        return Err(Error::Domain(format!(
            "need m > 0 and finite h < 0, got m = {m}, h = {h}"
        )));
    }
    if !(a < b && a.is_finite() && b.is_finite()) {
        return Err(Error::Domain(format!("invalid layer [{a}, {b}]")));
    }
    let s = (1.0 + m * m).sqrt();
    let h0 = h / s;
    let phi0 = std_cdf(h0);
    let x0 = (h0 - h) / m;
    if 0.5 * (a + b) < x0 - 4.0 * f64::EPSILON * (1.0 + x0.abs() + a.abs().max(b.abs())) {
        return Err(Error::OutOfScope(format!(
            "midpoint {} lies left of x₀ = {x0}; no claim there",
            0.5 * (a + b)
        )));
    }
    let d = x0 - a;
    let geometry = FinalCaseGeometry {
        h0,
        x0,
        x1: x0 + d / s,
        x2: x0 + s * d,
    };
    let line = Line::new(m, h);
    let average = line.mass(a, b)? / gauss_mass(a, b);
    let average_margin = average - phi0;
    let mut report = FinalCaseReport {
        m,
        h,
        a,
        b,
        phi0,
        geometry,
        trivial: a >= x0,
        average,
        average_margin,
        reduced: None,
        pass: average_margin >= -tol,
    };
    if report.trivial {
        return Ok(report);
    }
    let FinalCaseGeometry { x1, x2, .. } = geometry;
    let bp = x0 + d;
    // reflected line ℓ(x) = (x₀ - x)/m + h₀ + σ d / m
    let refl = Line::new(-1.0 / m, x0 / m + h0 + s * d / m);
    let below = |l: &Line, lo: f64, hi: f64| -> Result<f64> { Ok(l.mass(lo, hi)? - phi0 * gauss_mass(lo, hi)) };
    let lhs = phi0 * gauss_mass(a, x0) - line.mass(a, x0)?;
    let rhs = below(&line, x0, bp)?;
    let reflected_lhs = below(&line, x0, x1)? + below(&refl, x1, x2)?;
    let triangle_lhs = below(&refl, bp, x2)?;
    let triangle_rhs = line.mass(x1, bp)? - refl.mass(x1, bp)?;
    let triangle_area_left = 0.5 * (x2 - bp) * (refl.eval(bp) - h0);
    let triangle_area_right = 0.5 * (bp - x1) * (line.eval(bp) - refl.eval(bp));
    let reduced = ReducedCase {
        b_reflected: bp,
        lhs,
        rhs,
        margin: rhs - lhs,
        reflected_lhs,
        identity_residual: reflected_lhs - lhs,
        triangle_lhs,
        triangle_rhs,
        triangle_margin: triangle_rhs - triangle_lhs,
        triangle_area_left,
        triangle_area_right,
    };
    report.pass = report.pass
        && reduced.margin >= -tol
        && reduced.triangle_margin >= -tol
        && reduced.identity_residual.abs() <= tol;
    report.reduced = Some(reduced);
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetricAverageReport {
    pub m: f64,
    pub h: f64,
    /// `(d, avg_{[-d, d]} Φ(m x + h))`.
    pub entries: Vec<(f64, f64)>,
    pub max_increase: f64,
    pub pass: bool,
}

/// For `h >= 0`, checks that `d ↦ avg_{[-d, d]} Φ(m x + h)` is
/// nonincreasing on the increasing grid `ds`.
pub fn symmetric_average_check(m: f64, h: f64, ds: &[f64], tol: f64) -> Result<SymmetricAverageReport> {
    if !(h >= 0.0) {
        return Err(Error::Domain(format!("need h >= 0, got {h}")));
    }
    if ds.iter().any(|&d| !(d > 0.0)) || ds.windows(2).any(|p| !(p[1] > p[0])) {
        return Err(Error::Domain("d grid must be positive and increasing".into()));
    }
    let line = Line::new(m, h);
    let entries = ds
        .iter()
        .map(|&d| Ok((d, line.mass(-d, d)? / gauss_mass(-d, d))))
        .collect::<Result<Vec<_>>>()?;
    let max_increase = entries
        .windows(2)
        .map(|p| p[1].1 - p[0].1)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(SymmetricAverageReport {
        m,
        h,
        pass: !(max_increase > tol),
        entries,
        max_increase,
    })
}

/// 100 instances: `m ∈ {0.25, 0.5, 1, 2, 4}`, `h ∈ {-0.5, -1, -2, -3}` and
/// five placements of `[a, b]` around `x₀` (symmetric, wider on the right,
/// or starting right of `x₀`).
pub fn final_case_grid() -> Vec<(f64, f64, f64, f64)> {
    let mut out = Vec::with_capacity(100);
    for m in [0.25, 0.5, 1.0, 2.0, 4.0] {
        for h in [-0.5, -1.0, -2.0, -3.0] {
            let s = (1.0f64 + m * m).sqrt();
            let x0 = (h / s - h) / m;
            for (left, right) in [(0.5, 0.5), (1.5, 1.5), (0.5, 1.5), (2.0, 2.5), (-0.5, 1.0)] {
                out.push((m, h, x0 - left, x0 + right));
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalCaseSuite {
    pub reports: Vec<FinalCaseReport>,
    pub companions: Vec<SymmetricAverageReport>,
    pub min_average_margin: f64,
    pub min_reduced_margin: f64,
    pub min_triangle_margin: f64,
    pub pass: bool,
}

/// [`final_case_check`] on [`final_case_grid`] and
/// [`symmetric_average_check`] for `m ∈ {0.25, …, 4}`, `h ∈ {0, 0.5, 1, 2}`.
pub fn final_case_suite(tol: f64, exec: Execution) -> Result<FinalCaseSuite> {
    let grid = final_case_grid();
    let reports = exec
        .map_slice(&grid, |&(m, h, a, b)| final_case_check(m, h, a, b, tol))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let ds: Vec<f64> = (0..40).map(|i| 0.05 * 1.15f64.powi(i)).collect();
    let mut companions = Vec::new();
    for m in [0.25, 0.5, 1.0, 2.0, 4.0] {
        for h in [0.0, 0.5, 1.0, 2.0] {
            companions.push(symmetric_average_check(m, h, &ds, tol)?);
        }
    }
    let min_of =
        |f: &dyn Fn(&FinalCaseReport) -> Option<f64>| reports.iter().filter_map(f).fold(f64::INFINITY, f64::min);
    let min_average_margin = min_of(&|r| Some(r.average_margin));
    let min_reduced_margin = min_of(&|r| r.reduced.as_ref().map(|c| c.margin));
    let min_triangle_margin = min_of(&|r| r.reduced.as_ref().map(|c| c.triangle_margin));
    let pass = reports.iter().all(|r| r.pass) && companions.iter().all(|c| c.pass);
    Ok(FinalCaseSuite {
        reports,
        companions,
        min_average_margin,
        min_reduced_margin,
        min_triangle_margin,
        pass,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtensionReport {
    /// The line as given (its slope may be negative).
    pub line: Line,
    pub c: f64,
    #[serde(with = "ext")]
    pub a0: f64,
    #[serde(with = "ext")]
    pub b0: f64,
    pub left_mass_line: f64,
    pub left_mass_profile: f64,
    pub right_mass_line: f64,
    pub right_mass_profile: f64,
    pub extended_mass: f64,
    pub profile_mass: f64,
    /// `ν(K_ψ₁) - ν(K_ψ)`, nonnegative.
    pub mass_margin: f64,
    /// Difference of the first moments about `c`.
    pub centroid_residual: f64,
    /// `∫_{x <= A₀} (x - c) Φ(m x + h) dμ₁` and its right analogue.
    pub tail_left: f64,
    pub tail_right: f64,
    /// End of the continued extension, normalized to `m >= 0`.
    pub config: ExtremalConfig,
    /// Whether normalizing required reflecting `x ↦ -x`.
    pub reflected: bool,
    pub final_mass: f64,
}

/// Extends the line `ψ₀` found on `[a, b]` outward, matching the
/// `c`-moments of `ψ` outside `[a, b]` on each side, then pushes the
/// boundaries further until one reaches infinity.
/// Root of `f` on `[lo, hi]`; an end whose value misses the sign change by
/// no more than the quadrature noise of the profile moments is taken as
/// the root.
fn root_or_end<F: Fn(f64) -> Result<f64>>(f: F, lo: f64, hi: f64, scale: f64) -> Result<f64> {
    let (f_lo, f_hi) = (f(lo)?, f(hi)?);
    if f_lo.signum() == f_hi.signum() && f_lo != 0.0 {
        let slack = 1e-14 * scale + 10.0 * PROFILE_TOL;
        if f_lo.abs() <= slack && f_lo.abs() <= f_hi.abs() {
            return Ok(lo);
        }
        if f_hi.abs() <= slack {
            return Ok(hi);
        }
    }
    Ok(find_root_with(f, lo, hi, &root_opts())?.root)
}

pub fn extend_support(
    profile: &ConcaveProfile,
    line: Line,
    interval: (f64, f64),
    c: f64,
    tol: f64,
) -> Result<ExtensionReport> {
    let (a, b) = interval;
    if !(a < b && a.is_finite() && b.is_finite()) {
        return Err(Error::Domain(format!("invalid layer [{a}, {b}]")));
    }
    if !(c > a && c < b) {
        return Err(Error::Domain(format!("c = {c} must lie strictly inside ({a}, {b})")));
    }
    if !line.h.is_finite() || !line.m.is_finite() {
        return Err(Error::Domain(format!("line must be finite, got {line:?}")));
    }
    let inf = f64::INFINITY;
    let esc = 1e-2 * tol;
    let scale = line.abs_moment(-inf, inf, c)?;

    let target_left = centered_moment(profile, (-inf, a), c, PROFILE_TOL)?;
    let a0 = if target_left == 0.0 {
        a
    } else {
        let f = |x: f64| line.moment(x, a, c).map(|v| v - target_left);
        let far = f(-inf)?;
        if far >= -esc {
            -inf
        } else {
            root_or_end(f, -TAIL_CUTOFF, a, scale)?
        }
    };
    let target_right = centered_moment(profile, (b, inf), c, PROFILE_TOL)?;
    let b0 = if target_right == 0.0 {
        b
    } else {
        let f = |x: f64| line.moment(b, x, c).map(|v| v - target_right);
        let far = f(inf)?;
        if far <= esc {
            inf
        } else {
            root_or_end(f, b, TAIL_CUTOFF, scale)?
        }
    };

    let left_mass_line = line.mass(a0, a)?;
    let left_mass_profile = functionals(profile, (-inf, a), PROFILE_TOL)?.mass;
    let right_mass_line = line.mass(b, b0)?;
    let right_mass_profile = functionals(profile, (b, inf), PROFILE_TOL)?.mass;
    let extended_mass = line.mass(a0, b0)?;
    let profile_mass = functionals(profile, (-inf, inf), PROFILE_TOL)?.mass;
    let mass_margin = extended_mass - profile_mass;
    if mass_margin < -tol {
        return Err(Error::Invariant(format!(
            "extended configuration lost mass: {extended_mass} < {profile_mass}"
        )));
    }
    let profile_moment = centered_moment(profile, (-inf, inf), c, PROFILE_TOL)?;
    let centroid_residual = line.moment(a0, b0, c)? - profile_moment;

    let tail_left = line.moment(-inf, a0, c)?;
    let tail_right = line.moment(b0, inf, c)?;
    let tails = tail_left + tail_right;
    let (kind, boundary) = if tails.abs() <= ESCAPE_REL * scale {
        (RegionKind::R1, inf)
    } else if tails > 0.0 {
        let f = |x: f64| line.moment(-inf, x, c).map(|v| v - profile_moment);
        (RegionKind::R1, root_or_end(f, b0.min(TAIL_CUTOFF), TAIL_CUTOFF, scale)?)
    } else {
        let f = |x: f64| line.moment(x, inf, c).map(|v| v - profile_moment);
        (
            RegionKind::R2,
            root_or_end(f, -TAIL_CUTOFF, a0.max(-TAIL_CUTOFF), scale)?,
        )
    };
    let raw = ExtremalConfig {
        kind,
        m: line.m,
        h: line.h,
        boundary,
        c,
    };
    let final_mass = raw.mass()?;
    let reflected = line.m < 0.0;
    let config = if reflected {
        ExtremalConfig {
            kind: kind.flipped(),
            m: -line.m,
            h: line.h,
            boundary: -boundary,
            c: -c,
        }
    } else {
        raw
    };
    Ok(ExtensionReport {
        line,
        c,
        a0,
        b0,
        left_mass_line,
        left_mass_profile,
        right_mass_line,
        right_mass_profile,
        extended_mass,
        profile_mass,
        mass_margin,
        centroid_residual,
        tail_left,
        tail_right,
        config,
        reflected,
        final_mass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gauss::SQRT_FRAC_2_PI;

    const INF: f64 = f64::INFINITY;

    #[test]
    fn strip_limits() {
        let b = limit_b_tilde(-SQRT_FRAC_2_PI, 1e-12).unwrap();
        assert!(b.abs() < 1e-10, "{b}");
        assert_eq!(limit_b_tilde(0.0, 1e-12).unwrap(), INF);
        assert!(matches!(limit_b_tilde(0.1, 1e-12), Err(Error::Infeasible(_))));
        let a = limit_a_tilde(SQRT_FRAC_2_PI, 1e-12).unwrap();
        assert!(a.abs() < 1e-10);
    }

    #[test]
    fn r1_residual() {
        let cfg = ExtremalConfig::solve(RegionKind::R1, 1.0, 0.0, -0.5, 1e-10).unwrap();
        assert!(cfg.centroid_residual().unwrap().abs() < 1e-10);
        assert!(cfg.boundary > -0.5);
    }

    #[test]
    fn h_tilde_sends_boundary_to_infinity() {
        let (m, c) = (1.0, 0.3);
        let ht = h_tilde(m, c, 1e-12).unwrap();
        assert!((half_plane_centroid(m, ht) - c).abs() < 1e-12);
        assert_eq!(boundary_for_centroid(RegionKind::R1, m, ht, c, 1e-10).unwrap(), INF);
        let below = boundary_for_centroid(RegionKind::R1, m, ht - 0.5, c, 1e-10).unwrap();
        assert!(below.is_finite() && below > c);
    }

    #[test]
    fn h_star_puts_boundary_on_b() {
        let layer = Layer::matching(-0.3, 0.4, 1e-12).unwrap();
        let hs = h_star(1.0, -0.3, layer.b).unwrap();
        let b = boundary_for_centroid(RegionKind::R1, 1.0, hs, -0.3, 1e-12).unwrap();
        assert!((b - layer.b).abs() < 1e-8, "{b} vs {}", layer.b);
    }

    #[test]
    fn flat_line_ratio_is_phi_b() {
        let layer = Layer::matching(-0.4, 0.3, 1e-12).unwrap();
        for &h in &[-1.0, 0.5, 3.0] {
            let cfg = ExtremalConfig::solve(RegionKind::R1, 0.0, h, -0.4, 1e-10).unwrap();
            let f = f_ratio(&cfg, &layer, 1e-10).unwrap();
            assert!((f - std_cdf(cfg.boundary)).abs() < 1e-12);
        }
    }

    #[test]
    fn grid_shape() {
        let g = h_grid(-1.0, 2.0, 17);
        assert_eq!(g.len(), 17);
        assert_eq!((g[0], g[16]), (-1.0, 2.0));
        assert!(g.windows(2).all(|p| p[1] > p[0]));
        assert!(g[1] - g[0] < g[16] - g[15]);
        assert_eq!(h_grid(f64::NEG_INFINITY, INF, 5)[0], -4.0);
    }

    #[test]
    fn derivative_formula_matches_differences() {
        let layer = Layer::matching(-0.3, 0.4, 1e-12).unwrap();
        let hs = h_star(1.0, -0.3, layer.b).unwrap();
        for h in [hs + 0.1, hs + 1.0, hs + 3.0] {
            let d = f1_derivative(1.0, h, &layer, 1e-10).unwrap();
            assert!(d.boundary_derivative >= 0.0);
            let rel = (d.formula - d.finite_difference).abs() / d.formula.abs().max(1e-12);
            assert!(rel < 1e-4, "h = {h}: {d:?}");
        }
    }

    #[test]
    fn averaging_closed_forms() {
        let r = averaging_inequality_check(|x| x * x, |_| 1.0, (-1.0, 1.0), (-0.5, 0.5), 1e-12).unwrap();
        assert!((r.outer_average - 1.0 / 3.0).abs() < 1e-12);
        assert!((r.inner_average - 1.0 / 12.0).abs() < 1e-12);
        assert_eq!(r.status, CheckStatus::Pass);
        let r = averaging_inequality_check(|x| 2.0 * x + 1.0, |_| 1.0, (-1.0, 1.0), (-0.5, 0.5), 1e-12).unwrap();
        assert!(r.margin.abs() < 1e-12);
        let r = averaging_inequality_check(|x| x, |_| 1.0, (-1.0, 1.0), (0.5, 1.0), 1e-12).unwrap();
        assert_eq!(r.status, CheckStatus::HypothesisNotMet);
    }

    #[test]
    fn final_case_symmetric() {
        let s = 2f64.sqrt();
        let x0 = (-1.0 / s + 1.0) / 1.0;
        let r = final_case_check(1.0, -1.0, x0 - 0.5, x0 + 0.5, 1e-10).unwrap();
        let red = r.reduced.unwrap();
        assert!(red.margin >= -1e-9);
        assert!(red.identity_residual.abs() < 1e-12);
        assert!((red.triangle_area_left - red.triangle_area_right).abs() < 1e-12);
        assert!(r.pass);
        assert!(r.geometry.x0 < r.geometry.x1 && r.geometry.x1 < r.geometry.x2);
        assert!(final_case_check(1.0, -1.0, x0 + 0.1, x0 + 1.0, 1e-10).unwrap().trivial);
        assert!(matches!(
            final_case_check(1.0, -1.0, x0 - 2.0, x0, 1e-10),
            Err(Error::OutOfScope(_))
        ));
    }

    #[test]
    fn extension_of_a_linear_profile() {
        let p = ConcaveProfile::linear(0.5, 0.2, (-INF, 1.0)).unwrap();
        let r = extend_support(&p, Line::new(0.5, 0.2), (-1.0, 1.0), 0.0, 1e-9).unwrap();
        assert_eq!((r.a0, r.b0), (f64::NEG_INFINITY, 1.0));
    }
}
