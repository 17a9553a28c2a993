//! Reference values in double-double arithmetic (about 30 digits).
//!
//! Kept apart from the library: the normal tail comes from the Taylor
//! series of `Φ` for `|x| < 3` and from the Laplace continued fraction
//! beyond, so nothing here shares code with `gausslayer`.

#![allow(dead_code)]

use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn quick(a: f64, b: f64) -> Dd {
    let s = a + b;
    Dd { hi: s, lo: b - (s - a) }
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };
    #[allow(clippy::approx_constant)]
    pub const PI: Dd = Dd {
        hi: 3.141_592_653_589_793,
        lo: 1.224_646_799_147_353_2e-16,
    };
    #[allow(clippy::approx_constant)]
    pub const LN2: Dd = Dd {
        hi: 0.693_147_180_559_945_3,
        lo: 2.319_046_813_846_299_6e-17,
    };

    pub fn new(x: f64) -> Dd {
        Dd { hi: x, lo: 0.0 }
    }

    pub fn f(self) -> f64 {
        self.hi + self.lo
    }

    pub fn abs(self) -> Dd {
        if self.hi < 0.0 {
            -self
        } else {
            self
        }
    }

    pub fn scale(self, k: i32) -> Dd {
        let s = 2f64.powi(k);
        Dd {
            hi: self.hi * s,
            lo: self.lo * s,
        }
    }

    pub fn sqrt(self) -> Dd {
        if self.hi <= 0.0 {
            return Dd::ZERO;
        }
        let y = Dd::new(self.hi.sqrt());
        y + (self - y * y) / (y * Dd::new(2.0))
    }

    pub fn exp(self) -> Dd {
        if self.hi < -745.0 {
            return Dd::ZERO;
        }
        let k = (self.hi / Dd::LN2.hi).round();
        let r = (self - Dd::LN2 * Dd::new(k)).scale(-10);
        let mut term = Dd::ONE;
        let mut sum = Dd::ONE;
        for n in 1..30 {
            term = term * r / Dd::new(n as f64);
            sum = sum + term;
            if term.hi.abs() < 1e-34 {
                break;
            }
        }
        for _ in 0..10 {
            sum = sum * sum;
        }
        sum.scale(k as i32)
    }
}

impl Add for Dd {
    type Output = Dd;
    fn add(self, o: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, o.hi);
        let (t, f) = two_sum(self.lo, o.lo);
        let r = quick(s, e + t);
        quick(r.hi, r.lo + f)
    }
}

impl Neg for Dd {
    type Output = Dd;
    fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Sub for Dd {
    type Output = Dd;
    fn sub(self, o: Dd) -> Dd {
        self + (-o)
    }
}

impl Mul for Dd {
    type Output = Dd;
    fn mul(self, o: Dd) -> Dd {
        let p = self.hi * o.hi;
        let e = self.hi.mul_add(o.hi, -p);
        quick(p, e + (self.hi * o.lo + self.lo * o.hi))
    }
}

impl Div for Dd {
    type Output = Dd;
    fn div(self, o: Dd) -> Dd {
        let q1 = self.hi / o.hi;
        let r = self - o * Dd::new(q1);
        let q2 = r.hi / o.hi;
        let r = r - o * Dd::new(q2);
        let q3 = r.hi / o.hi;
        quick(q1, q2) + Dd::new(q3)
    }
}

pub fn sqrt_2pi() -> Dd {
    (Dd::PI * Dd::new(2.0)).sqrt()
}

/// Standard normal density.
pub fn density(x: Dd) -> Dd {
    (-(x * x).scale(-1)).exp() / sqrt_2pi()
}

/// `Σ x^(2n+1) / (2n+1)!!`, so that `Φ(x) = 1/2 + φ(x) S(x)`.
fn taylor_s(x: Dd) -> Dd {
    let x2 = x * x;
    let mut term = x;
    let mut sum = x;
    for n in 1..400 {
        term = term * x2 / Dd::new((2 * n + 1) as f64);
        sum = sum + term;
        if term.abs().hi < 1e-34 * sum.abs().hi {
            break;
        }
    }
    sum
}

/// Laplace continued fraction `1 / (x + 1/(x + 2/(x + …)))` for `x >= 3`.
fn laplace_cf(x: Dd) -> Dd {
    let mut t = x;
    for k in (1..4000).rev() {
        t = x + Dd::new(k as f64) / t;
    }
    Dd::ONE / t
}

/// Mills ratio `g(x) = Φ̄(x) / φ(x)`.
pub fn mills(x: Dd) -> Dd {
    if x.hi >= 3.0 {
        laplace_cf(x)
    } else if x.hi <= -3.0 {
        Dd::ONE / density(x) - laplace_cf(-x)
    } else {
        Dd::ONE / (density(x) * Dd::new(2.0)) - taylor_s(x)
    }
}

pub fn sf(x: Dd) -> Dd {
    if x.hi >= 3.0 {
        density(x) * laplace_cf(x)
    } else if x.hi <= -3.0 {
        Dd::ONE - density(x) * laplace_cf(-x)
    } else {
        Dd::new(0.5) - density(x) * taylor_s(x)
    }
}

pub fn cdf(x: Dd) -> Dd {
    sf(-x)
}

/// `Φ⁻¹(p)`: Newton on `log Φ` in `f64` to get close, then Newton steps
/// on the oracle CDF.
pub fn quantile(p: Dd) -> Dd {
    let upper = p.hi > 0.5;
    let tail = if upper { Dd::ONE - p } else { p };
    let lt = tail.hi.ln();
    let mut x = 0.0f64;
    for _ in 0..100 {
        let c = cdf(Dd::new(x)).f();
        let step = ((c.ln() - lt) * c / density(Dd::new(x)).f()).clamp(-2.0, 2.0);
        x -= step;
        if step.abs() < 1e-12 * (1.0 + x.abs()) {
            break;
        }
    }
    let mut x = Dd::new(x);
    for _ in 0..4 {
        x = x - (cdf(x) - tail) / density(x);
    }
    if upper {
        -x
    } else {
        x
    }
}

/// `E(x | a <= x <= b)` under the standard normal law, finite ends.
pub fn layer_centroid(a: Dd, b: Dd) -> Dd {
    (density(a) - density(b)) / (cdf(b) - cdf(a))
}

pub fn hazard(x: Dd) -> Dd {
    Dd::ONE / mills(x)
}

pub fn cdf64(x: f64) -> f64 {
    cdf(Dd::new(x)).f()
}

pub fn mills64(x: f64) -> f64 {
    mills(Dd::new(x)).f()
}

/// Composite Gauss-Legendre (8 points) on `n` equal panels of `[lo, hi]`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, n: usize) -> f64 {
    const X: [f64; 4] = [
        0.183_434_642_495_649_8,
        0.525_532_409_916_329,
        0.796_666_477_413_626_7,
        0.960_289_856_497_536_3,
    ];
    const W: [f64; 4] = [
        0.362_683_783_378_362,
        0.313_706_645_877_887_3,
        0.222_381_034_453_374_5,
        0.101_228_536_290_376_3,
    ];
    let h = (hi - lo) / n as f64;
    let mut total = 0.0;
    for i in 0..n {
        let mid = lo + (i as f64 + 0.5) * h;
        let half = 0.5 * h;
        let mut s = 0.0;
        for k in 0..4 {
            s += W[k] * (f(mid - half * X[k]) + f(mid + half * X[k]));
        }
        total += s * half;
    }
    total
}

/// `∫ f dμ₁` over `[lo, hi]`, infinite ends cut at `±12`.
pub fn gauss_integral<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64) -> f64 {
    let (l, r) = (lo.max(-12.0), hi.min(12.0));
    if l.partial_cmp(&r) != Some(std::cmp::Ordering::Less) {
        return 0.0;
    }
    let n = (((r - l) * 400.0) as usize).max(50);
    integrate(
        |x| f(x) * (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt(),
        l,
        r,
        n,
    )
}
