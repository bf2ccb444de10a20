//! Small scalar routines shared by the fiber algebra and the path solvers.

use crate::error::{Error, Result};

/// `base^exp` for `base > 0`, routed through `exp(exp * ln base)` when the
/// exponent is large enough that a direct `powf` of an intermediate could
/// overflow.
pub(crate) fn pow_pos(base: f64, exp: f64) -> f64 {
    if exp.abs() > 10.0 {
        (exp * base.ln()).exp()
    } else {
        base.powf(exp)
    }
}

/// Safeguarded Newton iteration on a bracket `[lo, hi]` with `f(lo)` and
/// `f(hi)` of opposite sign. Falls back to bisection whenever the Newton step
/// leaves the bracket or fails to halve the interval.
pub(crate) fn bracketed_root<F>(f: F, mut lo: f64, mut hi: f64) -> Result<f64>
where
    F: Fn(f64) -> (f64, f64),
{
    let (flo, _) = f(lo);
    let (fhi, _) = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::BracketFailure(format!(
            "no sign change on [{lo:e}, {hi:e}]: f = ({flo:e}, {fhi:e})"
        )));
    }
    // orient so that f(lo) < 0
    if flo > 0.0 {
        std::mem::swap(&mut lo, &mut hi);
    }
    let mut x = 0.5 * (lo + hi);
    let mut dx_old = (hi - lo).abs();
    let mut dx = dx_old;
    let (mut fx, mut dfx) = f(x);
    for _ in 0..200 {
        let newton_out = ((x - hi) * dfx - fx) * ((x - lo) * dfx - fx) > 0.0;
        let slow = (2.0 * fx).abs() > (dx_old * dfx).abs();
        if newton_out || slow {
            dx_old = dx;
            dx = 0.5 * (hi - lo);
            x = lo + dx;
        } else {
            dx_old = dx;
            dx = fx / dfx;
            x -= dx;
        }
        if dx.abs() <= 2.0 * f64::EPSILON * x.abs() {
            return Ok(x);
        }
        let (fnew, dfnew) = f(x);
        fx = fnew;
        dfx = dfnew;
        if fx == 0.0 {
            return Ok(x);
        }
        if fx < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
    }
    Ok(x)
}

/// Golden-section maximization of a unimodal function on `[lo, hi]`.
/// Returns `(argmax, max)`; endpoints are included in the comparison so a
/// monotone function yields its boundary maximum.
pub(crate) fn golden_max<F>(f: F, lo: f64, hi: f64, tol: f64) -> (f64, f64)
where
    F: Fn(f64) -> f64,
{
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let mut best = if fc > fd { (c, fc) } else { (d, fd) };
    for x in [lo, hi] {
        let fx = f(x);
        if fx > best.1 {
            best = (x, fx);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn root_of_quadratic() {
        let r = bracketed_root(|x| (x * x - 2.0, 2.0 * x), 0.0, 3.0).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-15);
        let r = bracketed_root(|x| (2.0 - x * x, -2.0 * x), 0.0, 3.0).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn root_without_sign_change_is_rejected() {
        assert!(matches!(
            bracketed_root(|x| (x * x + 1.0, 2.0 * x), -1.0, 1.0),
            Err(Error::BracketFailure(_))
        ));
    }

    #[test]
    fn golden_finds_parabola_peak() {
        let (x, fx) = golden_max(|x| -(x - 0.3) * (x - 0.3) + 1.0, -1.0, 1.0, 1e-10);
        assert!((x - 0.3).abs() < 1e-8);
        assert!((fx - 1.0).abs() < 1e-15);
    }

    #[test]
    fn pow_pos_routes_agree() {
        let direct = 1.3f64.powf(12.0);
        assert!((pow_pos(1.3, 12.0) / direct - 1.0).abs() < 1e-14);
    }
}
