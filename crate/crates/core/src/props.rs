//! Pointwise property suites for the Mills ratio `g` and the hazard `f`.
//!
//! Each suite evaluates a margin on a grid and keeps the worst point; a
//! suite passes when the worst margin is at least `-threshold`.

use serde::{Deserialize, Serialize};

use crate::exec::Execution;
use crate::gauss::{hazard, mills, tail_bounds};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyReport {
    pub name: String,
    pub points: usize,
    /// Smallest margin seen; the property holds where the margin is >= 0.
    pub worst_margin: f64,
    pub worst_at: f64,
    pub threshold: f64,
    pub pass: bool,
}

fn evaluate<F>(name: &str, xs: &[f64], threshold: f64, exec: Execution, margin: F) -> PropertyReport
where
    F: Fn(f64) -> f64 + Sync + Send,
{
    let ms = exec.map_slice(xs, |&x| margin(x));
    let (mut worst, mut at) = (f64::INFINITY, f64::NAN);
    for (&x, &m) in xs.iter().zip(&ms) {
        if !(m >= worst) {
            worst = m;
            at = x;
        }
    }
    PropertyReport {
        name: name.into(),
        points: xs.len(),
        worst_margin: worst,
        worst_at: at,
        threshold,
        pass: worst >= -threshold,
    }
}

/// `n` points with `x + 1` log-spaced over `[1e-6, 61]`, so `x` runs over
/// `(-1 + 1e-6, 60]`.
pub fn log_grid(n: usize) -> Vec<f64> {
    let (l0, l1) = (1e-6f64.ln(), 61f64.ln());
    (0..n)
        .map(|i| {
            let t = if n > 1 { i as f64 / (n - 1) as f64 } else { 1.0 };
            let x = (l0 + t * (l1 - l0)).exp() - 1.0;
            if i + 1 == n {
                60.0
            } else {
                x
            }
        })
        .collect()
}

/// `lo, lo + step, …` up to `hi`, without drift.
pub fn uniform_grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    (0..=n).map(|i| lo + i as f64 * step).collect()
}

/// Analytic derivative of `4 / (3x + sqrt(x^2 + 8))`.
pub fn upper_new_derivative(x: f64) -> f64 {
    let r = (x * x + 8.0).sqrt();
    let d = 3.0 * x + r;
    -4.0 * (3.0 + x / r) / (d * d)
}

/// `lower <= g <= upper_new`, relative margins.
pub fn sandwich(xs: &[f64], threshold: f64, exec: Execution) -> Vec<PropertyReport> {
    vec![
        evaluate("lower <= g", xs, threshold, exec, |x| {
            let g = mills(x);
            (g - tail_bounds(x).lower) / g
        }),
        evaluate("g <= upper_new", xs, threshold, exec, |x| {
            let g = mills(x);
            (tail_bounds(x).upper_new - g) / g
        }),
    ]
}

/// `upper_new <= upper_komatsu` on the points `x >= 0`, relative margin.
pub fn komatsu_comparison(xs: &[f64], threshold: f64, exec: Execution) -> PropertyReport {
    let pos: Vec<f64> = xs.iter().copied().filter(|&x| x >= 0.0).collect();
    evaluate("upper_new <= upper_komatsu", &pos, threshold, exec, |x| {
        let b = tail_bounds(x);
        (b.upper_komatsu - b.upper_new) / b.upper_komatsu
    })
}

/// `|g'(x) - (x g(x) - 1)|` with a central difference of step `step`,
/// measured relative to `max(1, |x g - 1|)`.
pub fn differential_identity(xs: &[f64], step: f64, threshold: f64, exec: Execution) -> PropertyReport {
    evaluate("g' = x g - 1", xs, threshold, exec, |x| {
        let fd = (mills(x + step) - mills(x - step)) / (2.0 * step);
        let rhs = x * mills(x) - 1.0;
        -(fd - rhs).abs() / rhs.abs().max(1.0)
    })
}

/// `g₊' <= x g₊ - 1` for the sharper upper bound `g₊`, on `x > -1`.
pub fn differential_inequality(xs: &[f64], threshold: f64, exec: Execution) -> PropertyReport {
    let dom: Vec<f64> = xs.iter().copied().filter(|&x| x > -1.0).collect();
    evaluate("g+' <= x g+ - 1", &dom, threshold, exec, |x| {
        let gp = tail_bounds(x).upper_new;
        x * gp - 1.0 - upper_new_derivative(x)
    })
}

/// `g(x) <= 1/x` for `x > 0`, relative margin.
pub fn mills_below_reciprocal(xs: &[f64], threshold: f64, exec: Execution) -> PropertyReport {
    let pos: Vec<f64> = xs.iter().copied().filter(|&x| x > 0.0).collect();
    evaluate("g <= 1/x", &pos, threshold, exec, |x| 1.0 - x * mills(x))
}

/// Hazard monotonicity and convexity by differences of step `h`, and
/// monotonicity of `x - f(x)`.
pub fn hazard_suite(xs: &[f64], h: f64, threshold: f64, exec: Execution) -> Vec<PropertyReport> {
    vec![
        evaluate("f' >= 0", xs, threshold, exec, |x| {
            (hazard(x + h) - hazard(x - h)) / (2.0 * h)
        }),
        evaluate("f'' >= 0", xs, threshold, exec, |x| {
            (hazard(x + h) - 2.0 * hazard(x) + hazard(x - h)) / (h * h)
        }),
        evaluate("(x - f)' >= 0", xs, threshold, exec, |x| {
            ((x + h - hazard(x + h)) - (x - h - hazard(x - h))) / (2.0 * h)
        }),
    ]
}

/// `|x - f(x)|` strictly decreasing along `xs` (sorted ascending); the margin
/// at each point is the drop from the previous one.
pub fn hazard_gap_decreasing(xs: &[f64]) -> PropertyReport {
    let gaps: Vec<f64> = xs.iter().map(|&x| (x - hazard(x)).abs()).collect();
    let (mut worst, mut at) = (f64::INFINITY, f64::NAN);
    for i in 1..xs.len() {
        let d = gaps[i - 1] - gaps[i];
        if d < worst {
            worst = d;
            at = xs[i];
        }
    }
    PropertyReport {
        name: "|x - f| strictly decreasing".into(),
        points: xs.len(),
        worst_margin: worst,
        worst_at: at,
        threshold: 0.0,
        pass: worst > 0.0,
    }
}

/// Everything above on the default grids.
pub fn all_properties(exec: Execution) -> Vec<PropertyReport> {
    let lg = log_grid(10_000);
    let wide = uniform_grid(-8.0, 60.0, 1e-2);
    let hz = uniform_grid(-10.0, 10.0, 1e-3);
    let mut out = sandwich(&lg, 1e-12, exec);
    out.push(komatsu_comparison(&lg, 1e-12, exec));
    out.push(differential_identity(&wide, 1e-5, 1e-6, exec));
    out.push(differential_inequality(&lg, 1e-12, exec));
    out.push(mills_below_reciprocal(&wide, 0.0, exec));
    out.extend(hazard_suite(&hz, 1e-3, 1e-8, exec));
    out.push(hazard_gap_decreasing(&uniform_grid(1.0, 40.0, 0.5)));
    out
}
