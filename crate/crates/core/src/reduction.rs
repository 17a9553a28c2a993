//! Reduction of a planar body to a concave profile, and replacement of a
//! profile on `[a, b]` by the line with the same Gaussian mass and moment.

use serde::{Deserialize, Serialize};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::gauss::{gauss_mass, gauss_mass_complement, std_cdf, std_cdf_inv, std_sf, std_sf_inv};
use crate::geometry::{ConvexPolygon, DirectionalBody, Point};
use crate::line::{Line, LINE_REL_TOL};
use crate::profiles::{functionals, random_profile, ConcaveProfile, ProfileBox, SliceBody};
use crate::quadrature::{find_root_with, integrate_gauss_with, QuadOptions, RootOptions, TAIL_CUTOFF};

/// Quadrature tolerance for profile integrals inside the reduction.
const PROFILE_TOL: f64 = 1e-13;
/// Relative threshold for the sign scan of `ψ - ψ₀`, against
/// `|ψ(x)| + |ψ₀(x)|`.
pub const INTERSECTION_TOL: f64 = 4.0 * f64::EPSILON;
/// Largest slope magnitude tried while bracketing the moment gap.
const MAX_SLOPE_EXPONENT: i32 = 40;

/// `ψ(t) = Φ⁻¹(μ₁(K ∩ {⟨x, u⟩ = t}))` at each grid point.
///
/// Slices are computed exactly from the edges; `t` outside the projection
/// gives `-∞`.
pub fn ehrhard_profile(polygon: &ConvexPolygon, u: Point, grid: &[f64]) -> Result<Vec<(f64, f64)>> {
    let body = DirectionalBody::from_polygon(polygon, u)?;
    grid.iter()
        .map(|&t| {
            let psi = match body.slice(t) {
                None => f64::NEG_INFINITY,
                Some((lo, hi)) => {
                    let p = gauss_mass(lo, hi);
                    if p < 0.5 {
                        std_cdf_inv(p)?
                    } else {
                        std_sf_inv(gauss_mass_complement(lo, hi))?
                    }
                }
            };
            Ok((t, psi))
        })
        .collect()
}

/// `n` points on the projection of `polygon` onto `u`, clustered towards
/// both ends (Chebyshev–Lobatto spacing), ends excluded.
pub fn profile_grid(polygon: &ConvexPolygon, u: Point, n: usize) -> Result<Vec<f64>> {
    let (lo, hi) = DirectionalBody::from_polygon(polygon, u)?.support();
    let n = n.max(2);
    Ok((1..=n)
        .map(|k| {
            let theta = std::f64::consts::PI * k as f64 / (n + 1) as f64;
            lo + 0.5 * (hi - lo) * (1.0 - theta.cos())
        })
        .collect())
}

/// Piecewise-linear profile of a polygon sampled on `n` points.
pub fn polygon_profile(polygon: &ConvexPolygon, u: Point, n: usize) -> Result<ConcaveProfile> {
    let grid = profile_grid(polygon, u, n)?;
    let body = DirectionalBody::from_polygon(polygon, u)?;
    let samples = ehrhard_profile(polygon, u, &grid)?;
    ConcaveProfile::from_samples(body.support(), &samples)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConcavityReport {
    /// Largest normalized excess of the chord over the middle sample;
    /// `<= 0` everywhere for concave data.
    pub max_violation: f64,
    pub location: f64,
    pub concave: bool,
    pub samples_used: usize,
}

/// Discrete concavity check on consecutive finite samples.
///
/// For each triple the chord value at the middle abscissa minus the middle
/// sample is divided by `1 + max|ψ|` of the triple.
pub fn check_concavity(samples: &[(f64, f64)], tol: f64) -> Result<ConcavityReport> {
    if samples.windows(2).any(|w| !(w[1].0 > w[0].0)) {
        return Err(Error::Domain("sample abscissae must be strictly increasing".into()));
    }
    let pts: Vec<(f64, f64)> = samples.iter().copied().filter(|p| p.1.is_finite()).collect();
    if pts.len() < 3 {
        return Err(Error::InsufficientData(format!("{} finite samples, need 3", pts.len())));
    }
    let mut worst = (f64::NEG_INFINITY, pts[1].0);
    for w in pts.windows(3) {
        let ((t0, y0), (t1, y1), (t2, y2)) = (w[0], w[1], w[2]);
        let chord = y0 * ((t2 - t1) / (t2 - t0)) + y2 * ((t1 - t0) / (t2 - t0));
        let scale = 1.0 + y0.abs().max(y1.abs()).max(y2.abs());
        let v = (chord - y1) / scale;
        if v > worst.0 {
            worst = (v, t1);
        }
    }
    Ok(ConcavityReport {
        max_violation: worst.0,
        location: worst.1,
        concave: worst.0 <= tol,
        samples_used: pts.len(),
    })
}

fn check_interval(a: f64, b: f64) -> Result<()> {
    if a.is_nan() || b.is_nan() || !(a < b) {
        return Err(Error::Domain(format!("invalid interval [{a}, {b}]")));
    }
    Ok(())
}

/// Intercept `h` with `∫_a^b Φ(m x + h) dμ₁ = target`, plus the residual.
fn intercept_for_mass(a: f64, b: f64, m: f64, target: f64, tol: f64) -> Result<(f64, f64)> {
    let weight = gauss_mass(a, b);
    if !(target > 0.0 && target < weight) {
        return Err(Error::Domain(format!(
            "mass {target:e} must lie strictly between 0 and the strip weight {weight:e}"
        )));
    }
    let q = std_cdf_inv(target / weight)?;
    let (ca, cb) = (a.max(-TAIL_CUTOFF), b.min(TAIL_CUTOFF));
    let (ma, mb) = (m * ca, m * cb);
    let mut lo = q - ma.max(mb);
    let mut hi = q - ma.min(mb);
    let f = |h: f64| Line::new(m, h).mass(a, b).map(|v| v - target);
    // the bracket is exact in theory; widen if rounding disagrees
    let step0 = 1e-9 * (1.0 + q.abs());
    let mut step = step0;
    let mut f_lo = f(lo)?;
    while f_lo > 0.0 {
        lo -= step;
        step *= 2.0;
        f_lo = f(lo)?;
    }
    if f_lo == 0.0 {
        return Ok((lo, 0.0));
    }
    step = step0;
    while f(hi)? < 0.0 || lo == hi {
        hi += step;
        step *= 2.0;
    }
    let opts = RootOptions {
        xtol: 0.0,
        rtol: 4.0 * f64::EPSILON,
        ftol: tol,
        max_iter: 200,
    };
    let r = find_root_with(f, lo, hi, &opts)?;
    Ok((r.root, r.residual))
}

fn profile_mass(profile: &ConcaveProfile, a: f64, b: f64) -> Result<f64> {
    Ok(functionals(profile, (a, b), PROFILE_TOL)?.mass)
}

/// Mass and moment about 0 of the part of the strip `[a, b]` below `ψ`
/// (`upper = false`) or above it (`upper = true`), whichever is lighter,
/// to relative accuracy.
fn side_functionals(profile: &ConcaveProfile, a: f64, b: f64, weight: f64) -> Result<(bool, f64, f64)> {
    let opts = QuadOptions::relative(LINE_REL_TOL).with_breakpoints(
        profile
            .kinks()
            .into_iter()
            .filter(|x| x.is_finite() && *x > a && *x < b),
    );
    let below = integrate_gauss_with(|t| std_cdf(profile.eval(t)), a, b, &opts)?.value;
    if below <= 0.5 * weight {
        let moment = integrate_gauss_with(|t| t * std_cdf(profile.eval(t)), a, b, &opts)?.value;
        return Ok((false, below, moment));
    }
    let above = integrate_gauss_with(|t| std_sf(profile.eval(t)), a, b, &opts)?.value;
    let moment = integrate_gauss_with(|t| t * std_sf(profile.eval(t)), a, b, &opts)?.value;
    Ok((true, above, moment))
}

/// `h(m)`: the intercept for which the line of slope `m` cuts the same
/// Gaussian mass out of the strip `[a, b]` as `ψ`.
pub fn mass_match_intercept(profile: &ConcaveProfile, interval: (f64, f64), m: f64, tol: f64) -> Result<f64> {
    let (a, b) = interval;
    check_interval(a, b)?;
    if !(tol > 0.0) {
        return Err(Error::Domain(format!("tolerance must be positive, got {tol}")));
    }
    let target = profile_mass(profile, a, b)?;
    let (h, residual) = intercept_for_mass(a, b, m, target, tol)?;
    if residual.abs() > tol {
        return Err(Error::Invariant(format!("mass residual {residual:e} exceeds {tol:e}")));
    }
    Ok(h)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearizationResult {
    pub m0: f64,
    pub h0: f64,
    pub mass_residual: f64,
    pub moment_residual: f64,
    /// Abscissae in `(a, b)` where `ψ₀` meets `ψ`.
    pub intersections: Vec<f64>,
    /// `ψ(a) <= ψ₀(a)` and `ψ(b) <= ψ₀(b)`.
    pub endpoint_values_ok: bool,
    /// `m₀ <= ψ'(a+)` and `m₀ >= ψ'(b-)`.
    pub endpoint_slopes_ok: bool,
    pub linear_input: bool,
    /// `(m, gap)` pairs visited while bracketing the moment gap.
    pub bracket_trace: Vec<(f64, f64)>,
}

impl LinearizationResult {
    pub fn line(&self) -> Line {
        Line::new(self.m0, self.h0)
    }

    /// All four matching conditions plus the two-intersection property.
    pub fn holds(&self, tol: f64) -> bool {
        self.mass_residual.abs() <= tol
            && self.moment_residual.abs() <= tol
            && self.endpoint_values_ok
            && self.endpoint_slopes_ok
            && (self.linear_input || self.intersections.len() == 2)
    }
}

/// Points in `(a, b)` where the line meets the graph of `ψ`, found by a
/// sign scan of `ψ - line` at the breakpoints. Runs of near-zero values
/// (within `tol` relative to `|ψ| + |line|`) count once, at their midpoint.
pub fn line_intersections(profile: &ConcaveProfile, line: Line, a: f64, b: f64, tol: f64) -> Vec<f64> {
    let (lo, hi) = profile.support();
    let mut knots: Vec<f64> = profile.breakpoints().into_iter().filter(|&x| x > a && x < b).collect();
    knots.push(a.max(-TAIL_CUTOFF));
    knots.push(b.min(TAIL_CUTOFF));
    knots.sort_by(f64::total_cmp);
    knots.dedup();

    let mut seq: Vec<(f64, f64)> = Vec::with_capacity(knots.len() + 2);
    for &x in &knots {
        let d = profile.eval(x) - line.eval(x);
        if x == lo && x > a {
            seq.push((x, f64::NEG_INFINITY));
        }
        seq.push((x, d));
        if x == hi && x < b {
            seq.push((x, f64::NEG_INFINITY));
        }
    }
    let sign = |(x, d): (f64, f64)| {
        if d.is_infinite() {
            return d.signum() as i32;
        }
        let t = tol * (profile.eval(x).abs() + line.eval(x).abs());
        if d > t {
            1
        } else if d < -t {
            -1
        } else {
            0
        }
    };
    let n = seq.len();
    let mut out = Vec::new();
    let mut i = 0;
    while i < n {
        if sign(seq[i]) == 0 {
            let start = i;
            while i + 1 < n && sign(seq[i + 1]) == 0 {
                i += 1;
            }
            let (x0, x1) = (seq[start].0, seq[i].0);
            if x0 > a && x1 < b {
                out.push(0.5 * (x0 + x1));
            }
            i += 1;
            continue;
        }
        if i + 1 < n {
            let (s0, s1) = (sign(seq[i]), sign(seq[i + 1]));
            if s1 != 0 && s0 != s1 {
                let ((x0, d0), (x1, d1)) = (seq[i], seq[i + 1]);
                let x = if d0.is_infinite() {
                    x0
                } else if d1.is_infinite() {
                    x1
                } else {
                    x0 + d0 / (d0 - d1) * (x1 - x0)
                };
                if x > a && x < b {
                    out.push(x);
                }
            }
        }
        i += 1;
    }
    out
}

/// Line `ψ₀(x) = m₀ x + h₀` with the same mass and first moment as `ψ` on
/// `[a, b]`.
///
/// The slope is found by bracketing the moment gap outward from `m = 0` in
/// powers of two; for each slope the intercept comes from
/// [`mass_match_intercept`].
pub fn linearize(profile: &ConcaveProfile, interval: (f64, f64), tol: f64) -> Result<LinearizationResult> {
    let (a, b) = interval;
    check_interval(a, b)?;
    if !(tol > 0.0) {
        return Err(Error::Domain(format!("tolerance must be positive, got {tol}")));
    }
    if profile.is_plus_infinity() {
        return Err(Error::OutOfScope(
            "ψ ≡ +∞ covers the whole strip; no line matches it".into(),
        ));
    }
    let (lo, hi) = profile.support();
    let on_layer = if lo <= a && hi >= b {
        Some(profile.restricted(a, b)?)
    } else {
        None
    };
    if let Some(r) = on_layer.filter(|r| r.is_linear()) {
        let s = r.slopes();
        let m = s.first().copied().unwrap_or(0.0);
        let (x, y) = r.points()[0];
        return Ok(LinearizationResult {
            m0: m,
            h0: y - m * x,
            mass_residual: 0.0,
            moment_residual: 0.0,
            intersections: Vec::new(),
            endpoint_values_ok: true,
            endpoint_slopes_ok: true,
            linear_input: true,
            bracket_trace: Vec::new(),
        });
    }

    // When ψ sits high over the layer, match the region above the graph
    // instead: its mass is the small complement and keeps full relative
    // precision. The region above y = m x + h is the region below the
    // flipped line y = -m x - h.
    let weight = gauss_mass(a, b);
    let (upper, mass, moment) = side_functionals(profile, a, b, weight)?;
    let sign = if upper { -1.0 } else { 1.0 };
    let gap = |m: f64| -> Result<f64> {
        let (h, _) = intercept_for_mass(a, b, m, mass, 0.0)?;
        Ok(Line::new(m, h).moment(a, b, 0.0)? - moment)
    };

    let g0 = gap(0.0)?;
    let mut trace = vec![(0.0, g0)];
    let (m_lo, m_hi) = if g0 == 0.0 {
        (0.0, 0.0)
    } else {
        let dir = if g0 < 0.0 { 1.0 } else { -1.0 };
        let mut prev = 0.0;
        let mut found = None;
        for k in 0..=MAX_SLOPE_EXPONENT {
            let m = dir * 2f64.powi(k);
            let g = gap(m)?;
            trace.push((sign * m, sign * g));
            if g == 0.0 || (g > 0.0) != (g0 > 0.0) {
                found = Some(if dir > 0.0 { (prev, m) } else { (m, prev) });
                break;
            }
            prev = m;
        }
        found.ok_or_else(|| Error::BracketExpansion {
            reason: "moment gap kept its sign up to |m| = 2^40".into(),
            trace: trace.clone(),
        })?
    };
    let m_solved = if m_lo == m_hi {
        m_lo
    } else {
        let opts = RootOptions {
            xtol: 0.0,
            rtol: 4.0 * f64::EPSILON,
            ftol: 0.0,
            max_iter: 200,
        };
        find_root_with(gap, m_lo, m_hi, &opts)?.root
    };
    let (h_solved, residual) = intercept_for_mass(a, b, m_solved, mass, 0.0)?;
    let moment_residual = sign * (Line::new(m_solved, h_solved).moment(a, b, 0.0)? - moment);
    let mass_residual = sign * residual;
    let (m0, h0) = (sign * m_solved, sign * h_solved);
    let line = Line::new(m0, h0);

    let intersections = line_intersections(profile, line, a, b, INTERSECTION_TOL);
    let value_ok = |x: f64| !x.is_finite() || profile.eval(x) <= line.eval(x) + tol;
    let endpoint_values_ok = value_ok(a) && value_ok(b);
    let slope_ok_a = !a.is_finite() || m0 <= profile.right_derivative(a) + tol;
    let slope_ok_b = !b.is_finite() || m0 >= profile.left_derivative(b) - tol;

    Ok(LinearizationResult {
        m0,
        h0,
        mass_residual,
        moment_residual,
        intersections,
        endpoint_values_ok,
        endpoint_slopes_ok: slope_ok_a && slope_ok_b,
        linear_input: false,
        bracket_trace: trace,
    })
}

/// Linearization outcome on one random instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearizationCase {
    pub seed: u64,
    pub profile: ConcaveProfile,
    #[serde(with = "crate::extreal::ext_pair")]
    pub interval: (f64, f64),
    pub result: LinearizationResult,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearizationSuite {
    pub instances: usize,
    pub nonlinear: usize,
    pub max_mass_residual: f64,
    pub max_moment_residual: f64,
    pub failures: Vec<LinearizationCase>,
    pub pass: bool,
}

/// Random profile (`1 + seed % 6` pieces) and a layer meeting its support;
/// finite support ends are overshot by up to 0.5 on a third of the draws.
pub fn linearization_instance(seed: u64) -> Result<(ConcaveProfile, (f64, f64))> {
    let profile = random_profile(seed, 1 + (seed % 6) as usize, &ProfileBox::default())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6c69_6e65_6172);
    let (lo, hi) = profile.support();
    let (l, r) = (lo.max(-3.0), hi.min(3.0));
    let mut a = l + rng.random_range(0.0..0.6) * (r - l);
    let mut b = a + rng.random_range(0.2..1.0) * (r - a);
    if rng.random_bool(1.0 / 3.0) {
        if lo.is_finite() {
            a = lo - rng.random_range(0.0..0.5);
        }
        if hi.is_finite() {
            b = hi + rng.random_range(0.0..0.5);
        }
    }
    Ok((profile, (a, b)))
}

/// [`linearize`] on `n` instances from [`linearization_instance`] with seeds
/// `seed, seed + 1, …`, each checked with [`LinearizationResult::holds`].
pub fn linearization_suite(n: usize, seed: u64, tol: f64, exec: Execution) -> Result<LinearizationSuite> {
    let cases = exec
        .map(n, |i| -> Result<LinearizationCase> {
            let s = seed.wrapping_add(i as u64);
            let (profile, interval) = linearization_instance(s)?;
            let result = linearize(&profile, interval, tol)?;
            let holds = result.holds(tol);
            Ok(LinearizationCase {
                seed: s,
                profile,
                interval,
                result,
                holds,
            })
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let max_of = |f: &dyn Fn(&LinearizationCase) -> f64| cases.iter().map(f).fold(0.0, f64::max);
    let max_mass_residual = max_of(&|c| c.result.mass_residual.abs());
    let max_moment_residual = max_of(&|c| c.result.moment_residual.abs());
    let nonlinear = cases.iter().filter(|c| !c.result.linear_input).count();
    let failures: Vec<_> = cases.into_iter().filter(|c| !c.holds).collect();
    Ok(LinearizationSuite {
        instances: n,
        nonlinear,
        max_mass_residual,
        max_moment_residual,
        pass: failures.is_empty(),
        failures,
    })
}
