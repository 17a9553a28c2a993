//! Gaussian functionals of the region under a straight line,
//! `{(x, y): lo <= x <= hi, y <= m x + h}`.
//!
//! All integrals are one-dimensional: the `y`-integral is `Φ(m x + h)`.
//! When the line sits high over the bulk of the measure the complement
//! `1 - Φ = Q` is integrated instead and subtracted from the closed-form
//! strip value, which keeps full relative accuracy when `Φ(m x + h) ≈ 1`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extreal::ext;
use crate::gauss::{density, gauss_mass, std_cdf, std_sf};
use crate::quadrature::{integrate_gauss_with, QuadOptions};

/// Relative accuracy requested from line integrals.
pub const LINE_REL_TOL: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Line {
    pub m: f64,
    /// Intercept; `+∞` means the whole vertical strip.
    #[serde(with = "ext")]
    pub h: f64,
}

fn check_range(lo: f64, hi: f64) -> Result<()> {
    if lo.is_nan() || hi.is_nan() || lo > hi {
        return Err(Error::Domain(format!("invalid range [{lo}, {hi}]")));
    }
    Ok(())
}

impl Line {
    pub fn new(m: f64, h: f64) -> Self {
        Line { m, h }
    }

    pub fn eval(&self, x: f64) -> f64 {
        if self.h.is_infinite() {
            self.h
        } else {
            self.m * x + self.h
        }
    }

    /// Where the line crosses `y = 0`, if it does.
    pub fn crossing(&self) -> Option<f64> {
        (self.m != 0.0 && self.h.is_finite()).then(|| -self.h / self.m)
    }

    fn opts(&self, extra: &[f64]) -> QuadOptions {
        QuadOptions::relative(LINE_REL_TOL)
            .with_breakpoints(self.crossing())
            .with_breakpoints(extra.iter().copied().filter(|x| x.is_finite()))
    }

    /// Whether to integrate `Q` rather than `Φ`.
    fn upper_side(&self, lo: f64, hi: f64) -> bool {
        let x = 0.0f64.clamp(lo, hi);
        self.m * x + self.h > 0.0
    }

    /// `∫_lo^hi Φ(m x + h) dμ₁(x)`.
    pub fn mass(&self, lo: f64, hi: f64) -> Result<f64> {
        check_range(lo, hi)?;
        if lo == hi || self.h == f64::NEG_INFINITY {
            return Ok(0.0);
        }
        if self.h == f64::INFINITY {
            return Ok(gauss_mass(lo, hi));
        }
        let (m, h) = (self.m, self.h);
        if self.upper_side(lo, hi) {
            let q = integrate_gauss_with(|x| std_sf(m * x + h), lo, hi, &self.opts(&[]))?;
            Ok((gauss_mass(lo, hi) - q.value).max(0.0))
        } else {
            Ok(integrate_gauss_with(|x| std_cdf(m * x + h), lo, hi, &self.opts(&[]))?.value)
        }
    }

    /// `∫_lo^hi (x - c) Φ(m x + h) dμ₁(x)`.
    pub fn moment(&self, lo: f64, hi: f64, c: f64) -> Result<f64> {
        check_range(lo, hi)?;
        if lo == hi || self.h == f64::NEG_INFINITY {
            return Ok(0.0);
        }
        let strip = density(lo) - density(hi) - c * gauss_mass(lo, hi);
        if self.h == f64::INFINITY {
            return Ok(strip);
        }
        let (m, h) = (self.m, self.h);
        let opts = self.opts(&[c]);
        if self.upper_side(lo, hi) {
            let q = integrate_gauss_with(|x| (x - c) * std_sf(m * x + h), lo, hi, &opts)?;
            Ok(strip - q.value)
        } else {
            Ok(integrate_gauss_with(|x| (x - c) * std_cdf(m * x + h), lo, hi, &opts)?.value)
        }
    }

    /// `∫_lo^hi |x - c| Φ(m x + h) dμ₁(x)`, the natural scale of [`Line::moment`].
    pub fn abs_moment(&self, lo: f64, hi: f64, c: f64) -> Result<f64> {
        check_range(lo, hi)?;
        if c <= lo {
            return self.moment(lo, hi, c);
        }
        if c >= hi {
            return self.moment(lo, hi, c).map(|v| -v);
        }
        Ok(self.moment(c, hi, c)? - self.moment(lo, c, c)?)
    }

    /// `∂/∂h` of [`Line::mass`]: `∫_lo^hi φ(m x + h) dμ₁(x)`.
    pub fn mass_dh(&self, lo: f64, hi: f64) -> Result<f64> {
        check_range(lo, hi)?;
        if lo == hi || self.h.is_infinite() {
            return Ok(0.0);
        }
        let (m, h) = (self.m, self.h);
        Ok(integrate_gauss_with(|x| density(m * x + h), lo, hi, &self.opts(&[]))?.value)
    }

    /// `∂/∂h` of [`Line::moment`]: `∫_lo^hi (x - c) φ(m x + h) dμ₁(x)`.
    pub fn moment_dh(&self, lo: f64, hi: f64, c: f64) -> Result<f64> {
        check_range(lo, hi)?;
        if lo == hi || self.h.is_infinite() {
            return Ok(0.0);
        }
        let (m, h) = (self.m, self.h);
        Ok(integrate_gauss_with(|x| (x - c) * density(m * x + h), lo, hi, &self.opts(&[c]))?.value)
    }
}
