//! Small numeric helpers shared by the solvers: monotone bisection and
//! relative comparisons.

use crate::{Error, Result};

/// Relative difference `|a - b| / max(|a|, |b|)`, zero when both are zero.
pub fn rel_diff(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// True when `a` and `b` agree within relative tolerance `tol`.
pub fn approx_eq(a: f64, b: f64, tol: f64) -> bool {
    rel_diff(a, b) <= tol
}

/// Root of a continuous function on `[lo, hi]` by bisection, to absolute
/// tolerance `tol` on the abscissa.
///
/// Requires `f(lo)` and `f(hi)` to have opposite signs (a zero endpoint is
/// returned directly). The sign of `f(lo)` decides which half is kept, so the
/// function may be increasing or decreasing.
pub fn bisect_root(mut lo: f64, mut hi: f64, tol: f64, f: impl Fn(f64) -> f64) -> Result<f64> {
    if !(lo < hi) {
        return Err(Error::internal(format!("bisect_root: empty bracket [{lo}, {hi}]")));
    }
    let flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::internal(format!(
            "bisect_root: no sign change on [{lo}, {hi}] (f = {flo:.6e}, {fhi:.6e})"
        )));
    }
    let neg_low = flo < 0.0;
    // 200 iterations bottom out far below f64 resolution for any sane bracket.
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= tol || mid <= lo || mid >= hi {
            return Ok(mid);
        }
        let fmid = f(mid);
        if fmid == 0.0 {
            return Ok(mid);
        }
        if (fmid < 0.0) == neg_low {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Doubles `hi` starting from `start` until `pred(hi)` holds, then returns it.
pub fn grow_until(start: f64, max_doublings: u32, pred: impl Fn(f64) -> bool) -> Result<f64> {
    let mut hi = start;
    for _ in 0..max_doublings {
        if pred(hi) {
            return Ok(hi);
        }
        hi *= 2.0;
    }
    if pred(hi) {
        Ok(hi)
    } else {
        Err(Error::internal(format!(
            "grow_until: predicate still false at {hi:.6e} after {max_doublings} doublings"
        )))
    }
}
