//! Scalar root finding for monotone functions.
//!
//! Everything here assumes the caller knows the direction of monotonicity,
//! which lets the bracket update use the sign of `f` alone.

use crate::error::{Error, Result};

/// Direction of monotonicity of the target function.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Monotone {
    Increasing,
    Decreasing,
}

impl Monotone {
    /// True if the root lies to the right of a point where `f` takes value `fx`.
    fn root_is_right(self, fx: f64) -> bool {
        match self {
            Monotone::Increasing => fx < 0.0,
            Monotone::Decreasing => fx > 0.0,
        }
    }
}

/// Plain bisection on `[lo, hi]` until the bracket is narrower than `xtol`.
///
/// The bracket is trusted: if `f` has no sign change the result converges to
/// whichever endpoint is nearest the crossing.
pub fn bisect<F>(mut f: F, mut lo: f64, mut hi: f64, dir: Monotone, xtol: f64, max_iter: usize) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    if lo > hi {
        std::mem::swap(&mut lo, &mut hi);
    }
    for _ in 0..max_iter {
        if hi - lo <= xtol {
            return Ok(0.5 * (lo + hi));
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            // bracket exhausted at floating-point resolution
            return Ok(mid);
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if dir.root_is_right(fm) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if hi - lo <= xtol {
        Ok(0.5 * (lo + hi))
    } else {
        Err(Error::NonConvergence { what: "bisection", iterations: max_iter })
    }
}

/// Grows `[lo, hi]` geometrically about its midpoint until `f` changes sign.
///
/// Stops with `NoBracket` once the half-width exceeds `limit`.
pub fn expand_bracket<F>(mut f: F, mut lo: f64, mut hi: f64, dir: Monotone, limit: f64, what: &'static str) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> f64,
{
    let centre = 0.5 * (lo + hi);
    let mut half = 0.5 * (hi - lo).max(f64::MIN_POSITIVE);
    loop {
        let flo = f(lo);
        let fhi = f(hi);
        if flo == 0.0 {
            return Ok((lo, lo));
        }
        if fhi == 0.0 {
            return Ok((hi, hi));
        }
        if dir.root_is_right(flo) && !dir.root_is_right(fhi) {
            return Ok((lo, hi));
        }
        if half > limit {
            return Err(Error::NoBracket(what));
        }
        half *= 2.0;
        // only move the side that fails
        if !dir.root_is_right(flo) {
            lo = centre - half;
        }
        if dir.root_is_right(fhi) {
            hi = centre + half;
        }
    }
}

/// Newton iteration safeguarded by a sign-change bracket.
///
/// `fdf` returns `(f(x), f'(x))`. A Newton step that leaves the bracket, or
/// that is longer than half the previous step, is replaced by a bisection
/// step. Converges when `|f| <= ftol` or the bracket collapses
/// below `xtol`.
#[allow(clippy::too_many_arguments)]
pub fn safeguarded_newton<F>(
    mut fdf: F,
    mut lo: f64,
    mut hi: f64,
    x0: f64,
    dir: Monotone,
    ftol: f64,
    xtol: f64,
    max_iter: usize,
) -> Result<f64>
where
    F: FnMut(f64) -> (f64, f64),
{
    if lo > hi {
        std::mem::swap(&mut lo, &mut hi);
    }
    let mut x = if x0 > lo && x0 < hi { x0 } else { 0.5 * (lo + hi) };
    let mut last_step = hi - lo;
    for _ in 0..max_iter {
        let (fx, dfx) = fdf(x);
        if fx.abs() <= ftol {
            return Ok(x);
        }
        if dir.root_is_right(fx) {
            lo = x;
        } else {
            hi = x;
        }
        if hi - lo <= xtol * (1.0 + x.abs()) {
            return Ok(0.5 * (lo + hi));
        }
        let newton = if dfx != 0.0 && dfx.is_finite() { x - fx / dfx } else { f64::NAN };
        let next = if newton > lo && newton < hi && (newton - x).abs() <= 0.5 * last_step.abs() {
            newton
        } else {
            0.5 * (lo + hi)
        };
        last_step = next - x;
        x = next;
    }
    Err(Error::NonConvergence { what: "safeguarded Newton", iterations: max_iter })
}
