//! Convex polygons and intersections of half-planes in the Gaussian plane.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gauss::{density, gauss_mass};
use crate::profiles::SliceBody;
use crate::quadrature::{integrate_gauss_with, QuadOptions};

pub type Point = [f64; 2];

fn cross(o: Point, a: Point, b: Point) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// Strictly convex polygon, vertices counterclockwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PolygonFile", into = "PolygonFile")]
pub struct ConvexPolygon {
    vertices: Vec<Point>,
}

/// JSON shape: `{"vertices": [[x, y], ...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PolygonFile {
    pub vertices: Vec<Point>,
}

impl TryFrom<PolygonFile> for ConvexPolygon {
    type Error = Error;
    fn try_from(f: PolygonFile) -> Result<Self> {
        ConvexPolygon::new(f.vertices)
    }
}

impl From<ConvexPolygon> for PolygonFile {
    fn from(p: ConvexPolygon) -> Self {
        PolygonFile { vertices: p.vertices }
    }
}

impl ConvexPolygon {
    pub fn new(vertices: Vec<Point>) -> Result<Self> {
        let n = vertices.len();
        if n < 3 {
            return Err(Error::InvalidPolygon(format!("{n} vertices, need at least 3")));
        }
        if vertices.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidPolygon("non-finite vertex".into()));
        }
        for i in 0..n {
            let c = cross(vertices[i], vertices[(i + 1) % n], vertices[(i + 2) % n]);
            if !(c > 0.0) {
                return Err(Error::InvalidPolygon(format!(
                    "turn at vertex {} is not strictly counterclockwise (cross = {c:e})",
                    (i + 1) % n
                )));
            }
        }
        let poly = ConvexPolygon { vertices };
        // a star-shaped winding (turning twice) also has positive turns
        let turning: f64 = (0..n)
            .map(|i| {
                let (a, b, c) = (poly.vertices[i], poly.vertices[(i + 1) % n], poly.vertices[(i + 2) % n]);
                let u = [b[0] - a[0], b[1] - a[1]];
                let v = [c[0] - b[0], c[1] - b[1]];
                (u[0] * v[1] - u[1] * v[0]).atan2(dot(u, v))
            })
            .sum();
        if (turning - std::f64::consts::TAU).abs() > 1e-6 {
            return Err(Error::InvalidPolygon("vertices wind more than once".into()));
        }
        Ok(poly)
    }

    /// Axis-aligned rectangle.
    pub fn rectangle(x0: f64, x1: f64, y0: f64, y1: f64) -> Result<Self> {
        Self::new(vec![[x0, y0], [x1, y0], [x1, y1], [x0, y1]])
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn area(&self) -> f64 {
        let n = self.vertices.len();
        0.5 * (0..n)
            .map(|i| {
                let (a, b) = (self.vertices[i], self.vertices[(i + 1) % n]);
                a[0] * b[1] - a[1] * b[0]
            })
            .sum::<f64>()
    }

    pub fn translated(&self, v: Point) -> Self {
        ConvexPolygon {
            vertices: self.vertices.iter().map(|p| [p[0] + v[0], p[1] + v[1]]).collect(),
        }
    }

    /// Edges as half-planes `n·x <= d` with outward normals.
    pub fn half_planes(&self) -> Vec<HalfPlane> {
        let n = self.vertices.len();
        (0..n)
            .map(|i| {
                let (a, b) = (self.vertices[i], self.vertices[(i + 1) % n]);
                let normal = [b[1] - a[1], a[0] - b[0]];
                HalfPlane {
                    normal,
                    offset: dot(normal, a),
                }
            })
            .collect()
    }

    pub fn contains(&self, p: Point) -> bool {
        self.half_planes().iter().all(|h| h.contains(p))
    }

    /// `K ∩ other`, or `None` when it has no interior.
    pub fn intersection(&self, other: &ConvexPolygon) -> Option<ConvexPolygon> {
        let mut poly: Vec<Point> = self.vertices.clone();
        for hp in other.half_planes() {
            if poly.is_empty() {
                break;
            }
            let mut out = Vec::with_capacity(poly.len() + 1);
            for i in 0..poly.len() {
                let (p, q) = (poly[i], poly[(i + 1) % poly.len()]);
                let (sp, sq) = (hp.slack(p), hp.slack(q));
                if sp >= 0.0 {
                    out.push(p);
                }
                if (sp >= 0.0) != (sq >= 0.0) {
                    let t = sp / (sp - sq);
                    out.push([p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]);
                }
            }
            poly = out;
        }
        convex_hull(&poly).ok()
    }
}

/// Convex hull (Andrew's monotone chain), counterclockwise and with
/// collinear and repeated points removed.
pub fn convex_hull(points: &[Point]) -> Result<ConvexPolygon> {
    let mut pts: Vec<Point> = points.to_vec();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    if pts.len() < 3 {
        return Err(Error::InvalidPolygon(format!("{} distinct points, need 3", pts.len())));
    }
    let scale = pts.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    let eps = 1e-12 * scale * scale;
    let mut hull: Vec<Point> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &Point>> = if pass == 0 {
            Box::new(pts.iter())
        } else {
            Box::new(pts.iter().rev())
        };
        for &p in iter {
            while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= eps {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    ConvexPolygon::new(hull)
}

/// Convex hull of `n` points drawn from `N(centre, scale² I)`.
pub fn random_hull_polygon(rng: &mut ChaCha8Rng, n: usize, centre: Point, scale: f64) -> Result<ConvexPolygon> {
    for _ in 0..100 {
        let pts: Vec<Point> = (0..n)
            .map(|_| {
                let x: f64 = rng.sample(StandardNormal);
                let y: f64 = rng.sample(StandardNormal);
                [centre[0] + scale * x, centre[1] + scale * y]
            })
            .collect();
        if let Ok(p) = convex_hull(&pts) {
            return Ok(p);
        }
    }
    Err(Error::InvalidPolygon("could not sample a non-degenerate hull".into()))
}

/// Seeded random polygon for test suites: hull of 3 to 12 Gaussian points
/// with a random centre and spread.
pub fn random_polygon(seed: u64) -> Result<ConvexPolygon> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(3..=12);
    let centre = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
    let scale = rng.random_range(0.3..2.0);
    random_hull_polygon(&mut rng, n, centre, scale)
}

/// Half-plane `normal·x <= offset`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HalfPlane {
    pub normal: Point,
    pub offset: f64,
}

impl HalfPlane {
    /// `offset - normal·p`, nonnegative inside.
    pub fn slack(&self, p: Point) -> f64 {
        self.offset - dot(self.normal, p)
    }

    pub fn contains(&self, p: Point) -> bool {
        self.slack(p) >= 0.0
    }
}

/// Intersection of finitely many half-planes, possibly unbounded, seen
/// through slices perpendicular to a unit direction `u`.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionalBody {
    planes: Vec<HalfPlane>,
    u: Point,
    support: (f64, f64),
    kinks: Vec<f64>,
}

fn unit(u: Point) -> Result<Point> {
    let n = dot(u, u).sqrt();
    if !((n - 1.0).abs() <= 1e-12) {
        return Err(Error::Domain(format!(
            "direction ({}, {}) is not a unit vector",
            u[0], u[1]
        )));
    }
    Ok(u)
}

impl DirectionalBody {
    pub fn from_polygon(poly: &ConvexPolygon, u: Point) -> Result<Self> {
        let u = unit(u)?;
        let proj: Vec<f64> = poly.vertices.iter().map(|&v| dot(v, u)).collect();
        let lo = proj.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = proj.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok(DirectionalBody {
            planes: poly.half_planes(),
            u,
            support: (lo, hi),
            kinks: proj,
        })
    }

    /// Unbounded region from half-planes (e.g. a wedge). Kinks are the
    /// projections of pairwise line intersections.
    pub fn from_half_planes(planes: Vec<HalfPlane>, u: Point) -> Result<Self> {
        let u = unit(u)?;
        if planes.iter().any(|h| dot(h.normal, h.normal) == 0.0) {
            return Err(Error::Domain("half-plane with zero normal".into()));
        }
        let mut kinks = Vec::new();
        for i in 0..planes.len() {
            for j in i + 1..planes.len() {
                let (p, q) = (planes[i], planes[j]);
                let det = p.normal[0] * q.normal[1] - p.normal[1] * q.normal[0];
                if det.abs() > 1e-14 {
                    let x = (p.offset * q.normal[1] - q.offset * p.normal[1]) / det;
                    let y = (p.normal[0] * q.offset - q.normal[0] * p.offset) / det;
                    kinks.push(dot([x, y], u));
                }
            }
        }
        Ok(DirectionalBody {
            planes,
            u,
            support: (f64::NEG_INFINITY, f64::INFINITY),
            kinks,
        })
    }

    pub fn direction(&self) -> Point {
        self.u
    }

    /// The slice at `t` as an interval of the coordinate along `u⊥`.
    pub fn slice(&self, t: f64) -> Option<(f64, f64)> {
        let v = [-self.u[1], self.u[0]];
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        for hp in &self.planes {
            let alpha = dot(hp.normal, v);
            let rhs = hp.offset - dot(hp.normal, self.u) * t;
            let scale = dot(hp.normal, hp.normal).sqrt();
            if alpha.abs() <= 1e-14 * scale {
                if rhs < 0.0 {
                    return None;
                }
            } else if alpha > 0.0 {
                hi = hi.min(rhs / alpha);
            } else {
                lo = lo.max(rhs / alpha);
            }
        }
        (lo < hi).then_some((lo, hi))
    }
}

impl SliceBody for DirectionalBody {
    fn slice_mass(&self, t: f64) -> f64 {
        match self.slice(t) {
            Some((lo, hi)) => gauss_mass(lo, hi),
            None => 0.0,
        }
    }

    fn support(&self) -> (f64, f64) {
        self.support
    }

    fn kinks(&self) -> Vec<f64> {
        self.kinks.clone()
    }
}

/// Gaussian mass and centroid of a polygon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanarMoments {
    pub mass: f64,
    pub centroid: Point,
}

/// `μ₂(K)` and the `μ₂`-centroid of `K`, by slicing along `x`.
pub fn polygon_moments(poly: &ConvexPolygon, tol: f64) -> Result<PlanarMoments> {
    let body = DirectionalBody::from_polygon(poly, [1.0, 0.0])?;
    let (lo, hi) = body.support;
    let opts = QuadOptions::absolute(tol).with_breakpoints(body.kinks.iter().copied());
    let mass = integrate_gauss_with(|t| body.slice_mass(t), lo, hi, &opts)?.value;
    let mx = integrate_gauss_with(|t| t * body.slice_mass(t), lo, hi, &opts)?.value;
    let my = integrate_gauss_with(
        |t| match body.slice(t) {
            Some((a, b)) => density(a) - density(b),
            None => 0.0,
        },
        lo,
        hi,
        &opts,
    )?
    .value;
    if !(mass > crate::profiles::MIN_MASS) {
        return Err(Error::Degenerate(format!(
            "polygon mass {mass:e} too small for a centroid"
        )));
    }
    Ok(PlanarMoments {
        mass,
        centroid: [mx / mass, my / mass],
    })
}

/// `μ₂(K)`.
pub fn polygon_mass(poly: &ConvexPolygon, tol: f64) -> Result<f64> {
    let body = DirectionalBody::from_polygon(poly, [1.0, 0.0])?;
    let (lo, hi) = body.support;
    let opts = QuadOptions::absolute(tol).with_breakpoints(body.kinks.iter().copied());
    Ok(integrate_gauss_with(|t| body.slice_mass(t), lo, hi, &opts)?.value)
}
