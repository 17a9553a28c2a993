//! Planar bodies described by their slice profile.
//!
//! A body `K_ψ = {(x, y): y <= ψ(x)}` is stored through a concave,
//! piecewise-linear `ψ` on a support interval. Everything downstream only
//! needs the Gaussian mass of each vertical slice, `Φ(ψ(t))`, so bodies that
//! are not stored as profiles (polygons, wedges) implement [`SliceBody`]
//! directly and share the same mass and moment routines.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extreal::{ext, ExtReal};
use crate::gauss::{self, layer_centroid, std_cdf, std_cdf_inv, std_sf_inv};
use crate::quadrature::{find_root_with, integrate_gauss_with, QuadOptions, RootOptions};

/// Regions lighter than this have no meaningful centroid.
pub const MIN_MASS: f64 = 1e-8;

/// Slopes may increase by at most this (relative) amount and still count
/// as concave.
const CONCAVITY_SLACK: f64 = 1e-10;

/// A body given by the Gaussian mass of its slices `{x = t}`.
pub trait SliceBody: Sync {
    /// `μ₁` of the slice at `t`; equals `Φ(ψ(t))` for a profile.
    fn slice_mass(&self, t: f64) -> f64;
    /// Interval outside which every slice is empty.
    fn support(&self) -> (f64, f64);
    /// Abscissae where `slice_mass` may fail to be smooth.
    fn kinks(&self) -> Vec<f64>;
}

/// Mass and first moment `∫ x Φ(ψ(x)) dμ₁(x)` over an interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussFunctionals {
    pub mass: f64,
    pub moment: f64,
}

impl GaussFunctionals {
    pub fn centroid(&self) -> Result<f64> {
        if !(self.mass > MIN_MASS) {
            return Err(Error::Degenerate(format!(
                "mass {:e} too small for a centroid",
                self.mass
            )));
        }
        Ok(self.moment / self.mass)
    }
}

fn quad_opts<B: SliceBody + ?Sized>(body: &B, tol: f64) -> QuadOptions {
    QuadOptions::absolute(tol).with_breakpoints(body.kinks().into_iter().filter(|x| x.is_finite()))
}

fn clip<B: SliceBody + ?Sized>(body: &B, interval: (f64, f64)) -> Result<Option<(f64, f64)>> {
    let (alpha, beta) = interval;
    if alpha.is_nan() || beta.is_nan() || alpha >= beta {
        return Err(Error::Domain(format!("invalid interval [{alpha}, {beta}]")));
    }
    let (lo, hi) = body.support();
    let (l, r) = (alpha.max(lo), beta.min(hi));
    Ok((l < r).then_some((l, r)))
}

/// Mass and moment of the part of `body` with `x` in `interval`, each to
/// absolute tolerance `tol`.
pub fn functionals<B: SliceBody + ?Sized>(body: &B, interval: (f64, f64), tol: f64) -> Result<GaussFunctionals> {
    if !(tol > 0.0) {
        return Err(Error::Domain(format!("tolerance must be positive, got {tol}")));
    }
    let Some((l, r)) = clip(body, interval)? else {
        return Ok(GaussFunctionals { mass: 0.0, moment: 0.0 });
    };
    let opts = quad_opts(body, tol);
    let mass = integrate_gauss_with(|t| body.slice_mass(t), l, r, &opts)?.value;
    let moment = integrate_gauss_with(|t| t * body.slice_mass(t), l, r, &opts)?.value;
    Ok(GaussFunctionals { mass, moment })
}

/// `∫ (x - c) Φ(ψ(x)) dμ₁(x)` over `interval`.
pub fn centered_moment<B: SliceBody + ?Sized>(body: &B, interval: (f64, f64), c: f64, tol: f64) -> Result<f64> {
    let Some((l, r)) = clip(body, interval)? else {
        return Ok(0.0);
    };
    let opts = quad_opts(body, tol).with_breakpoints([c]);
    Ok(integrate_gauss_with(|t| (t - c) * body.slice_mass(t), l, r, &opts)?.value)
}

/// Centroid abscissa of the part of `body` over `interval`.
pub fn centroid_x<B: SliceBody + ?Sized>(body: &B, interval: (f64, f64), tol: f64) -> Result<f64> {
    let f = functionals(body, interval, tol)?;
    if !(f.mass > (10.0 * tol).max(MIN_MASS)) {
        return Err(Error::Degenerate(format!(
            "mass {:e} over [{}, {}] is too small for a centroid",
            f.mass, interval.0, interval.1
        )));
    }
    Ok(f.moment / f.mass)
}

/// Concave piecewise-linear `ψ`, `-∞` outside its support.
///
/// The points are interpolated linearly and the first and last pieces are
/// extended to the ends of the support. A single point gives a constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ProfileFile", into = "ProfileFile")]
pub struct ConcaveProfile {
    support: (f64, f64),
    points: Vec<(f64, f64)>,
}

/// JSON shape: `{"support": [A, B], "points": [[x, y], ...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProfileFile {
    pub support: [ExtReal; 2],
    pub points: Vec<[ExtReal; 2]>,
}

impl TryFrom<ProfileFile> for ConcaveProfile {
    type Error = Error;

    fn try_from(f: ProfileFile) -> Result<Self> {
        let pts = f.points.iter().map(|p| (p[0].0, p[1].0)).collect();
        ConcaveProfile::new((f.support[0].0, f.support[1].0), pts)
    }
}

impl From<ConcaveProfile> for ProfileFile {
    fn from(p: ConcaveProfile) -> Self {
        ProfileFile {
            support: [ExtReal(p.support.0), ExtReal(p.support.1)],
            points: p.points.iter().map(|&(x, y)| [ExtReal(x), ExtReal(y)]).collect(),
        }
    }
}

/// Two distinct abscissae inside `[lo, hi]`.
fn two_points_in(lo: f64, hi: f64) -> (f64, f64) {
    match (lo.is_finite(), hi.is_finite()) {
        (true, true) => (lo, hi),
        (true, false) => (lo, lo + 1.0),
        (false, true) => (hi - 1.0, hi),
        (false, false) => (0.0, 1.0),
    }
}

impl ConcaveProfile {
    pub fn new(support: (f64, f64), points: Vec<(f64, f64)>) -> Result<Self> {
        let (lo, hi) = support;
        if lo.is_nan() || hi.is_nan() || !(lo < hi) || lo == f64::INFINITY || hi == f64::NEG_INFINITY {
            return Err(Error::InvalidProfile(format!("bad support [{lo}, {hi}]")));
        }
        if points.is_empty() {
            return Err(Error::InvalidProfile("no points".into()));
        }
        for (i, &(x, y)) in points.iter().enumerate() {
            if !x.is_finite() || x < lo || x > hi {
                return Err(Error::InvalidProfile(format!(
                    "point x = {x} outside support [{lo}, {hi}]"
                )));
            }
            if y.is_nan() || y == f64::NEG_INFINITY {
                return Err(Error::InvalidProfile(format!("point {i} has value {y}")));
            }
            if y == f64::INFINITY && points.len() > 1 {
                return Err(Error::InvalidProfile(
                    "+inf is only allowed as a single-point constant profile".into(),
                ));
            }
            if i > 0 && !(x > points[i - 1].0) {
                return Err(Error::InvalidProfile(format!(
                    "breakpoints not increasing at index {i}"
                )));
            }
        }
        let profile = ConcaveProfile { support, points };
        let s = profile.slopes();
        for i in 1..s.len() {
            if s[i] > s[i - 1] + CONCAVITY_SLACK * (1.0 + s[i - 1].abs()) {
                return Err(Error::InvalidProfile(format!(
                    "slopes increase at breakpoint {}: {} then {}",
                    profile.points[i].0,
                    s[i - 1],
                    s[i]
                )));
            }
        }
        Ok(profile)
    }

    pub fn constant(value: f64, support: (f64, f64)) -> Result<Self> {
        let (x, _) = two_points_in(support.0, support.1);
        Self::new(support, vec![(x, value)])
    }

    /// `ψ ≡ +∞` on the support: the full strip.
    pub fn plus_infinity(support: (f64, f64)) -> Result<Self> {
        Self::constant(f64::INFINITY, support)
    }

    /// `ψ(x) = m x + h` on the support.
    pub fn linear(m: f64, h: f64, support: (f64, f64)) -> Result<Self> {
        if !h.is_finite() || !m.is_finite() {
            return Err(Error::InvalidProfile(format!(
                "line needs finite slope and intercept, got {m}, {h}"
            )));
        }
        let (x0, x1) = two_points_in(support.0, support.1);
        Self::new(support, vec![(x0, m * x0 + h), (x1, m * x1 + h)])
    }

    /// Least concave majorant of the finite samples, on `support`.
    /// Tiny non-concave noise in sampled values is absorbed this way.
    pub fn from_samples(support: (f64, f64), samples: &[(f64, f64)]) -> Result<Self> {
        let mut pts: Vec<(f64, f64)> = samples
            .iter()
            .copied()
            .filter(|&(x, y)| x.is_finite() && y.is_finite() && x >= support.0 && x <= support.1)
            .collect();
        pts.sort_by(|p, q| p.0.total_cmp(&q.0));
        pts.dedup_by(|p, q| p.0 == q.0);
        if pts.is_empty() {
            return Err(Error::InsufficientData("no finite samples".into()));
        }
        let mut hull: Vec<(f64, f64)> = Vec::with_capacity(pts.len());
        for p in pts {
            while hull.len() >= 2 {
                let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
                let cross = (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0);
                if cross >= 0.0 {
                    hull.pop();
                } else {
                    break;
                }
            }
            hull.push(p);
        }
        Self::new(support, hull)
    }

    pub fn support(&self) -> (f64, f64) {
        self.support
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn is_plus_infinity(&self) -> bool {
        self.points[0].1 == f64::INFINITY
    }

    /// Slopes of the pieces between consecutive points.
    pub fn slopes(&self) -> Vec<f64> {
        self.points
            .windows(2)
            .map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0))
            .collect()
    }

    /// `true` when `ψ` is affine on its support (constants included).
    pub fn is_linear(&self) -> bool {
        let s = self.slopes();
        s.iter()
            .all(|&v| (v - s[0]).abs() <= CONCAVITY_SLACK * (1.0 + s[0].abs()))
    }

    fn segment(&self, x: f64) -> usize {
        let n = self.points.len();
        let idx = self.points.partition_point(|p| p.0 <= x);
        idx.saturating_sub(1).min(n - 2)
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x.is_nan() {
            return f64::NAN;
        }
        if x < self.support.0 || x > self.support.1 {
            return f64::NEG_INFINITY;
        }
        if self.points.len() == 1 {
            return self.points[0].1;
        }
        let i = self.segment(x);
        let (x0, y0) = self.points[i];
        let (x1, y1) = self.points[i + 1];
        if x == x1 {
            return y1;
        }
        y0 + (y1 - y0) / (x1 - x0) * (x - x0)
    }

    fn slope_at(&self, x: f64, right: bool) -> f64 {
        if self.points.len() == 1 {
            return 0.0;
        }
        let s = self.slopes();
        let idx = self.points.partition_point(|p| if right { p.0 <= x } else { p.0 < x });
        s[idx.saturating_sub(1).min(s.len() - 1)]
    }

    /// `ψ'(x+)`; `+∞` where the support starts at or after `x`.
    pub fn right_derivative(&self, x: f64) -> f64 {
        if x < self.support.0 || x >= self.support.1 {
            return f64::INFINITY;
        }
        self.slope_at(x, true)
    }

    /// `ψ'(x-)`; `-∞` where the support ends at or before `x`.
    pub fn left_derivative(&self, x: f64) -> f64 {
        if x > self.support.1 || x <= self.support.0 {
            return f64::NEG_INFINITY;
        }
        self.slope_at(x, false)
    }

    /// Interior breakpoints and finite support ends.
    pub fn breakpoints(&self) -> Vec<f64> {
        let (lo, hi) = self.support;
        let mut v: Vec<f64> = [lo, hi].into_iter().filter(|x| x.is_finite()).collect();
        if self.points.len() > 2 {
            v.extend(self.points[1..self.points.len() - 1].iter().map(|p| p.0));
        }
        v.sort_by(f64::total_cmp);
        v
    }

    /// `ψ + δ`.
    pub fn shifted(&self, delta: f64) -> Result<Self> {
        let pts = self.points.iter().map(|&(x, y)| (x, y + delta)).collect();
        Self::new(self.support, pts)
    }

    /// Same `ψ` with the support cut down to `[a, b]`.
    pub fn restricted(&self, a: f64, b: f64) -> Result<Self> {
        let lo = self.support.0.max(a);
        let hi = self.support.1.min(b);
        if !(lo < hi) {
            return Err(Error::InvalidProfile(format!(
                "support [{}, {}] does not meet [{a}, {b}]",
                self.support.0, self.support.1
            )));
        }
        if self.is_plus_infinity() {
            return Self::plus_infinity((lo, hi));
        }
        let mut pts = Vec::with_capacity(self.points.len() + 2);
        if lo.is_finite() {
            pts.push((lo, self.eval(lo)));
        }
        pts.extend(self.points.iter().copied().filter(|p| p.0 > lo && p.0 < hi));
        if hi.is_finite() {
            pts.push((hi, self.eval(hi)));
        }
        if pts.is_empty() {
            // both ends infinite and no interior point: nothing was cut
            return Ok(self.clone());
        }
        if pts.len() == 1 {
            // keep the slope of the piece we are on
            let x = pts[0].0;
            let other = if lo.is_finite() { x + 1.0 } else { x - 1.0 };
            if self.points.len() > 1 {
                let y = self.eval_unbounded(other);
                if lo.is_finite() {
                    pts.push((other, y));
                } else {
                    pts.insert(0, (other, y));
                }
            }
        }
        Self::new((lo, hi), pts)
    }

    /// The affine extension of the pieces, ignoring the support.
    fn eval_unbounded(&self, x: f64) -> f64 {
        if self.points.len() == 1 {
            return self.points[0].1;
        }
        let i = self.segment(x);
        let (x0, y0) = self.points[i];
        let (x1, y1) = self.points[i + 1];
        y0 + (y1 - y0) / (x1 - x0) * (x - x0)
    }
}

impl SliceBody for ConcaveProfile {
    fn slice_mass(&self, t: f64) -> f64 {
        std_cdf(self.eval(t))
    }

    fn support(&self) -> (f64, f64) {
        self.support
    }

    fn kinks(&self) -> Vec<f64> {
        self.breakpoints()
    }
}

/// Sampling box for [`random_profile`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileBox {
    /// Breakpoints are drawn from this window.
    pub x_range: (f64, f64),
    /// Value of `ψ` at the breakpoint closest to 0.
    pub value_range: (f64, f64),
    pub slope_range: (f64, f64),
    /// Chance that each end of the support is finite.
    pub finite_support_prob: f64,
    pub support_lo_range: (f64, f64),
    pub support_hi_range: (f64, f64),
}

impl Default for ProfileBox {
    fn default() -> Self {
        ProfileBox {
            x_range: (-2.5, 2.5),
            value_range: (-0.5, 2.5),
            slope_range: (-3.0, 3.0),
            finite_support_prob: 0.5,
            support_lo_range: (-3.5, -0.5),
            support_hi_range: (0.5, 3.5),
        }
    }
}

/// Deterministic random concave profile with `pieces` linear pieces.
pub fn random_profile(seed: u64, pieces: usize, bx: &ProfileBox) -> Result<ConcaveProfile> {
    if pieces == 0 {
        return Err(Error::Domain("a profile needs at least one piece".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let side = |range: (f64, f64), inf: f64, rng: &mut ChaCha8Rng| {
        if rng.random::<f64>() < bx.finite_support_prob {
            rng.random_range(range.0..range.1)
        } else {
            inf
        }
    };
    let lo = side(bx.support_lo_range, f64::NEG_INFINITY, &mut rng);
    let hi = side(bx.support_hi_range, f64::INFINITY, &mut rng);
    let (xl, xr) = (bx.x_range.0.max(lo), bx.x_range.1.min(hi));

    let mut xs: Vec<f64>;
    loop {
        xs = (0..=pieces).map(|_| rng.random_range(xl..xr)).collect();
        xs.sort_by(f64::total_cmp);
        if xs.windows(2).all(|w| w[1] - w[0] > 1e-6 * (xr - xl)) {
            break;
        }
    }
    let mut slopes: Vec<f64>;
    loop {
        slopes = (0..pieces)
            .map(|_| rng.random_range(bx.slope_range.0..bx.slope_range.1))
            .collect();
        slopes.sort_by(|a, b| b.total_cmp(a));
        if slopes.windows(2).all(|w| w[0] > w[1]) {
            break;
        }
    }
    let anchor = (0..xs.len())
        .min_by(|&i, &j| xs[i].abs().total_cmp(&xs[j].abs()))
        .unwrap_or(0);
    let mut ys = vec![0.0; xs.len()];
    ys[anchor] = rng.random_range(bx.value_range.0..bx.value_range.1);
    for i in anchor + 1..xs.len() {
        ys[i] = ys[i - 1] + slopes[i - 1] * (xs[i] - xs[i - 1]);
    }
    for i in (0..anchor).rev() {
        ys[i] = ys[i + 1] - slopes[i] * (xs[i + 1] - xs[i]);
    }
    ConcaveProfile::new((lo, hi), xs.into_iter().zip(ys).collect())
}

/// A slab `{a <= x <= b}` with its Gaussian weight and centroid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    #[serde(with = "ext")]
    pub a: f64,
    #[serde(with = "ext")]
    pub b: f64,
    pub weight: f64,
    pub centroid: f64,
}

impl Layer {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        let weight = gauss::gauss_mass(a, b);
        if !(weight > 0.0) {
            return Err(Error::Degenerate(format!("layer [{a}, {b}] has no mass")));
        }
        let centroid = layer_centroid(a, b)?;
        Ok(Layer { a, b, weight, centroid })
    }

    /// Open interval of centroids attainable by layers of weight `w`.
    pub fn centroid_range(w: f64) -> Result<(f64, f64)> {
        if !(w > 0.0 && w < 1.0) {
            return Err(Error::Domain(format!("weight {w} outside (0, 1)")));
        }
        let q = std_cdf_inv(w)?;
        let c = gauss::density(q) / w;
        Ok((-c, c))
    }

    /// The layer of weight `w` whose centroid is `c`.
    pub fn matching(c: f64, w: f64, tol: f64) -> Result<Self> {
        let (cmin, cmax) = Self::centroid_range(w)?;
        if !(c > cmin && c < cmax) {
            return Err(Error::Infeasible(format!(
                "no layer of weight {w} has centroid {c}; attainable range is ({cmin}, {cmax})"
            )));
        }
        // p = Φ(a) runs over (0, 1 - w); the centroid increases with p
        let ends = |p: f64| -> Result<(f64, f64)> {
            let a = std_cdf_inv(p)?;
            let upper = (1.0 - w) - p;
            let b = if p + w <= 0.5 {
                std_cdf_inv(p + w)?
            } else {
                std_sf_inv(upper.max(0.0))?
            };
            Ok((a, b))
        };
        let gap = |p: f64| -> Result<f64> {
            let (a, b) = ends(p)?;
            if !(a < b) {
                return Ok(if p < 0.5 * (1.0 - w) { cmin - c } else { cmax - c });
            }
            Ok(layer_centroid(a, b)? - c)
        };
        let opts = RootOptions {
            xtol: 0.0,
            rtol: 4.0 * f64::EPSILON,
            ftol: tol * 1e-3,
            max_iter: 300,
        };
        let root = find_root_with(gap, 0.0, 1.0 - w, &opts)?;
        let (a, b) = ends(root.root)?;
        let layer = Layer::new(a, b)?;
        if (layer.centroid - c).abs() > tol || (layer.weight - w).abs() > tol {
            return Err(Error::Invariant(format!(
                "layer [{a}, {b}] misses target: centroid {} vs {c}, weight {} vs {w}",
                layer.centroid, layer.weight
            )));
        }
        Ok(layer)
    }
}
