//! Scalar root finding and 1-D minimization.

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum RootError {
    #[error("no convergence after {iterations} iterations (last x = {last})")]
    NoConvergence { iterations: usize, last: f64 },
    #[error("zero or non-finite derivative at x = {x}")]
    BadDerivative { x: f64 },
    #[error("bracket [{lo}, {hi}] does not contain a sign change")]
    NoSignChange { lo: f64, hi: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root {
    pub x: f64,
    pub residual: f64,
    pub iterations: usize,
}

/// Plain Newton–Raphson. `f` returns `(value, derivative)`.
/// Stops when `|f(x)| < tol`.
pub fn newton<F>(mut f: F, x0: f64, tol: f64, max_iter: usize) -> Result<Root, RootError>
where
    F: FnMut(f64) -> (f64, f64),
{
    let mut x = x0;
    for it in 0..max_iter {
        let (fx, dfx) = f(x);
        if !fx.is_finite() {
            return Err(RootError::NoConvergence { iterations: it, last: x });
        }
        if fx.abs() < tol {
            return Ok(Root { x, residual: fx, iterations: it });
        }
        if dfx == 0.0 || !dfx.is_finite() {
            return Err(RootError::BadDerivative { x });
        }
        x -= fx / dfx;
    }
    let (fx, _) = f(x);
    if fx.abs() < tol {
        return Ok(Root { x, residual: fx, iterations: max_iter });
    }
    Err(RootError::NoConvergence { iterations: max_iter, last: x })
}

/// Bisection on `[lo, hi]`; requires a sign change. Stops on `|f| < tol` or
/// when the bracket is narrower than `x_tol`.
pub fn bisect<F>(mut f: F, mut lo: f64, mut hi: f64, tol: f64, x_tol: f64, max_iter: usize) -> Result<Root, RootError>
where
    F: FnMut(f64) -> f64,
{
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(Root { x: lo, residual: 0.0, iterations: 0 });
    }
    if fhi == 0.0 {
        return Ok(Root { x: hi, residual: 0.0, iterations: 0 });
    }
    if flo.signum() == fhi.signum() {
        return Err(RootError::NoSignChange { lo, hi });
    }
    for it in 0..max_iter {
        let mid = 0.5 * (lo + hi);
        let fmid = f(mid);
        if fmid.abs() < tol || (hi - lo).abs() < x_tol {
            return Ok(Root { x: mid, residual: fmid, iterations: it + 1 });
        }
        if fmid.signum() == flo.signum() {
            lo = mid;
            flo = fmid;
        } else {
            hi = mid;
        }
    }
    let mid = 0.5 * (lo + hi);
    Ok(Root { x: mid, residual: f(mid), iterations: max_iter })
}

/// Golden-section minimization of a unimodal function on `[lo, hi]`.
/// Returns `(x_min, f(x_min))`.
pub fn golden_section<F>(mut f: F, mut lo: f64, mut hi: f64, x_tol: f64) -> (f64, f64)
where
    F: FnMut(f64) -> f64,
{
    let inv_phi = 0.5 * (libm::sqrt(5.0) - 1.0);
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let mut fc = f(c);
    let mut fd = f(d);
    while (hi - lo).abs() > x_tol {
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = f(d);
        }
    }
    if fc < fd {
        (c, fc)
    } else {
        (d, fd)
    }
}
