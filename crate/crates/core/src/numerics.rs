//! Scalar kernels shared by every analytic module: the complementary error
//! function and its inverse, the Gaussian CDF, adaptive Simpson quadrature,
//! bisection, and a grid-then-refine scalar minimizer.

use serde::{Deserialize, Serialize};

use crate::error::{PricingError, Result};

/// Tolerances and effort limits for the numerical kernels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToleranceConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_iter: usize,
    pub grid_points: usize,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 1e-9,
            max_iter: 200,
            grid_points: 10_001,
        }
    }
}

impl ToleranceConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0 && self.abs_tol.is_finite()) {
            return Err(PricingError::Domain(format!(
                "abs_tol must be positive, got {}",
                self.abs_tol
            )));
        }
        if !(self.rel_tol > 0.0 && self.rel_tol.is_finite()) {
            return Err(PricingError::Domain(format!(
                "rel_tol must be positive, got {}",
                self.rel_tol
            )));
        }
        if self.max_iter < 1 {
            return Err(PricingError::Domain("max_iter must be at least 1".into()));
        }
        if self.grid_points < 3 {
            return Err(PricingError::Domain(format!(
                "grid_points must be at least 3, got {}",
                self.grid_points
            )));
        }
        Ok(())
    }

    pub fn with_grid_points(mut self, grid_points: usize) -> Self {
        self.grid_points = grid_points;
        self
    }
}

/// Complementary error function, `erfc(x) = 2/sqrt(pi) * int_x^inf exp(-t^2) dt`.
///
/// Evaluated with the FreeBSD/musl rational approximations (via `libm`), which
/// are accurate to about one ulp over the whole real line.
pub fn erfc_accurate(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(PricingError::Domain(format!("erfc of non-finite {x}")));
    }
    Ok(libm::erfc(x))
}

/// Infallible erfc for call sites whose argument is finite by construction.
#[inline]
pub(crate) fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}

/// Inverse of erfc on (0, 2), found by bisection on [`erfc_accurate`].
pub fn erfc_inv(y: f64) -> Result<f64> {
    if !(y > 0.0 && y < 2.0) {
        return Err(PricingError::Domain(format!(
            "erfc_inv needs a value in (0, 2), got {y}"
        )));
    }
    if y == 1.0 {
        return Ok(0.0);
    }
    // erfc is strictly decreasing; erfc(-27) == 2 and erfc(27) underflows to 0.
    let (mut lo, mut hi) = (-27.0_f64, 27.0_f64);
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if erfc(mid) > y {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `Pr(X <= t)` for `X ~ Normal(mean, std^2)`.
pub fn gaussian_cdf(t: f64, mean: f64, std: f64) -> Result<f64> {
    if !(std > 0.0) {
        return Err(PricingError::Domain(format!(
            "standard deviation must be positive, got {std}"
        )));
    }
    if t == f64::NEG_INFINITY {
        return Ok(0.0);
    }
    if t == f64::INFINITY {
        return Ok(1.0);
    }
    Ok(0.5 * erfc(-(t - mean) / (std::f64::consts::SQRT_2 * std)))
}

/// Adaptive Simpson quadrature of `f` over `[a, b]`.
///
/// The interval is seeded with 16 panels, each refined by interval bisection
/// until the Richardson error estimate is below its share of
/// `max(abs_tol, rel_tol * |I|)`.
pub fn integrate<F>(f: F, a: f64, b: f64, tol: &ToleranceConfig) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if !(a.is_finite() && b.is_finite()) || a > b {
        return Err(PricingError::Domain(format!(
            "integration bounds must satisfy a <= b, got [{a}, {b}]"
        )));
    }
    if a == b {
        return Ok(0.0);
    }
    let eval = |x: f64| -> Result<f64> {
        let y = f(x);
        if y.is_finite() {
            Ok(y)
        } else {
            Err(PricingError::NonFinite { at: x, value: y })
        }
    };

    const PANELS: usize = 16;
    const MAX_DEPTH: u32 = 48;
    let h = (b - a) / PANELS as f64;
    let mut panels = Vec::with_capacity(PANELS);
    let mut fa = eval(a)?;
    let mut rough = 0.0;
    for i in 0..PANELS {
        let lo = a + h * i as f64;
        let hi = if i + 1 == PANELS { b } else { a + h * (i + 1) as f64 };
        let mid = 0.5 * (lo + hi);
        let fm = eval(mid)?;
        let fb = eval(hi)?;
        let whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
        rough += whole;
        panels.push(Panel { lo, hi, fa, fm, fb, whole });
        fa = fb;
    }
    let target = tol.abs_tol.max(tol.rel_tol * rough.abs());
    let share = target / PANELS as f64;
    let mut total = 0.0;
    for p in panels {
        total += simpson_refine(&eval, p, share, MAX_DEPTH)?;
    }
    Ok(total)
}

#[derive(Clone, Copy)]
struct Panel {
    lo: f64,
    hi: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
}

fn simpson_refine<E>(eval: &E, p: Panel, eps: f64, depth: u32) -> Result<f64>
where
    E: Fn(f64) -> Result<f64>,
{
    let mid = 0.5 * (p.lo + p.hi);
    let lm = 0.5 * (p.lo + mid);
    let rm = 0.5 * (mid + p.hi);
    let flm = eval(lm)?;
    let frm = eval(rm)?;
    let left = (mid - p.lo) / 6.0 * (p.fa + 4.0 * flm + p.fm);
    let right = (p.hi - mid) / 6.0 * (p.fm + 4.0 * frm + p.fb);
    let delta = left + right - p.whole;
    let width_exhausted = (p.hi - p.lo) <= 4.0 * f64::EPSILON * p.lo.abs().max(p.hi.abs());
    if depth == 0 || width_exhausted || delta.abs() <= 15.0 * eps {
        return Ok(left + right + delta / 15.0);
    }
    let l = Panel {
        lo: p.lo,
        hi: mid,
        fa: p.fa,
        fm: flm,
        fb: p.fm,
        whole: left,
    };
    let r = Panel {
        lo: mid,
        hi: p.hi,
        fa: p.fm,
        fm: frm,
        fb: p.fb,
        whole: right,
    };
    Ok(simpson_refine(eval, l, 0.5 * eps, depth - 1)? + simpson_refine(eval, r, 0.5 * eps, depth - 1)?)
}

/// Bisection for a root of `f` in `[lo, hi]`.
///
/// Stops when the bracket is narrower than `abs_tol`, when `f` vanishes
/// exactly, or when the bracket cannot be split further in floating point.
pub fn find_root_bisect<F>(f: F, lo: f64, hi: f64, tol: &ToleranceConfig) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    Ok(bisect_with_count(f, lo, hi, tol)?.0)
}

/// Same as [`find_root_bisect`] but also reports the number of iterations.
pub(crate) fn bisect_with_count<F>(f: F, lo: f64, hi: f64, tol: &ToleranceConfig) -> Result<(f64, usize)>
where
    F: Fn(f64) -> f64,
{
    if !(lo < hi) {
        return Err(PricingError::Domain(format!(
            "bisection needs lo < hi, got [{lo}, {hi}]"
        )));
    }
    let (mut a, mut b) = (lo, hi);
    let fa0 = f(a);
    let fb0 = f(b);
    if !fa0.is_finite() {
        return Err(PricingError::NonFinite { at: a, value: fa0 });
    }
    if !fb0.is_finite() {
        return Err(PricingError::NonFinite { at: b, value: fb0 });
    }
    if fa0 == 0.0 {
        return Ok((a, 0));
    }
    if fb0 == 0.0 {
        return Ok((b, 0));
    }
    if fa0.signum() == fb0.signum() {
        return Err(PricingError::Bracket {
            lo,
            hi,
            f_lo: fa0,
            f_hi: fb0,
        });
    }
    let lower_negative = fa0 < 0.0;
    let mut iterations = 0;
    while iterations < tol.max_iter {
        if b - a <= tol.abs_tol {
            break;
        }
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        iterations += 1;
        let fm = f(mid);
        if !fm.is_finite() {
            return Err(PricingError::NonFinite { at: mid, value: fm });
        }
        if fm == 0.0 {
            return Ok((mid, iterations));
        }
        if (fm < 0.0) == lower_negative {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok((0.5 * (a + b), iterations))
}

/// Result of [`minimize_scalar`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarMinimum {
    pub argmin: f64,
    pub min: f64,
    /// Whether the grid minimum was interior and locally convex, so that a
    /// derivative bisection refined it.
    pub refined: bool,
    pub evaluations: usize,
}

/// Exhaustive grid search over `grid_points` uniform abscissae followed by a
/// local bisection on the central-difference derivative.
///
/// Grid values within `abs_tol` of the best are treated as ties and the
/// lowest abscissa wins. The returned minimum never exceeds `f(lo)` or
/// `f(hi)`.
pub fn minimize_scalar<F>(f: F, lo: f64, hi: f64, tol: &ToleranceConfig) -> Result<ScalarMinimum>
where
    F: Fn(f64) -> f64,
{
    if !(lo.is_finite() && hi.is_finite()) || lo > hi {
        return Err(PricingError::Domain(format!(
            "minimization interval must satisfy lo <= hi, got [{lo}, {hi}]"
        )));
    }
    let eval = |x: f64| -> Result<f64> {
        let y = f(x);
        if y.is_finite() {
            Ok(y)
        } else {
            Err(PricingError::NonFinite { at: x, value: y })
        }
    };
    if lo == hi {
        return Ok(ScalarMinimum {
            argmin: lo,
            min: eval(lo)?,
            refined: false,
            evaluations: 1,
        });
    }
    let n = tol.grid_points.max(3);
    let step = (hi - lo) / (n - 1) as f64;
    let xs: Vec<f64> = (0..n)
        .map(|i| if i + 1 == n { hi } else { lo + step * i as f64 })
        .collect();
    let ys = xs.iter().map(|&x| eval(x)).collect::<Result<Vec<f64>>>()?;
    let best = ys.iter().copied().fold(f64::INFINITY, f64::min);
    let i = ys
        .iter()
        .position(|&y| y <= best + tol.abs_tol)
        .expect("grid is nonempty");
    let mut evaluations = n;

    let mut result = ScalarMinimum {
        argmin: xs[i],
        min: ys[i],
        refined: false,
        evaluations,
    };
    if i == 0 || i + 1 == n || !(ys[i - 1] >= ys[i] && ys[i + 1] >= ys[i]) {
        return Ok(result);
    }

    let (a, b) = (xs[i - 1], xs[i + 1]);
    let h = 1e-3 * step;
    let slope = |x: f64| (f(x + h) - f(x - h)) / (2.0 * h);
    if let Ok((x, iters)) = bisect_with_count(slope, a, b, tol) {
        evaluations += 2 * iters + 4;
        let y = eval(x)?;
        evaluations += 1;
        if y < result.min {
            result.argmin = x;
            result.min = y;
            result.refined = true;
        }
    }
    result.evaluations = evaluations;
    Ok(result)
}
