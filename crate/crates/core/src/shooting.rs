//! Shooting solutions of the 1D limit problem `−a w″ = |w|^{γ−2}w`,
//! `w(0) = w(L) = 0`, `w > 0`.
//!
//! [`discrete_shooting`] marches the three-point difference equation of the
//! node-quadrature discretization, so it reproduces the discrete solution up
//! to roundoff. [`continuum_shooting`] integrates the ODE itself with RK4 and
//! differs from the discrete solution by `O(h²)`; comparing the two calibrates
//! how much of a discrepancy is discretization error.

use crate::error::{Error, Result};

/// Bisection on the initial slope `s` for the largest slope whose trajectory
/// stays positive through `L`. `march(s)` returns the trajectory values
/// whose positivity is tested.
fn shoot<F>(march: F) -> Result<f64>
where
    F: Fn(f64) -> Vec<f64>,
{
    let positive = |s: f64| march(s).iter().all(|v| *v > 0.0);
    let mut lo = 1e-3;
    while !positive(lo) {
        lo *= 0.5;
        if lo < 1e-300 {
            return Err(Error::BracketFailure("no positive shot".into()));
        }
    }
    let mut hi = 2.0 * lo;
    while positive(hi) {
        lo = hi;
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::BracketFailure("shooting slope overflow".into()));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if positive(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

fn nonlinearity(w: f64, gamma: f64) -> f64 {
    w.abs().powf(gamma - 2.0) * w
}

/// Interior node values of the positive solution of
/// `a(2w_i − w_{i−1} − w_{i+1})/h² = |w_i|^{γ−2}w_i` on `n` interior nodes.
pub fn discrete_shooting(length: f64, n: usize, a: f64, gamma: f64) -> Result<Vec<f64>> {
    let h = length / (n + 1) as f64;
    let c = h * h / a;
    // values at nodes 1..=n, plus the boundary node n+1
    let march = |s: f64| -> Vec<f64> {
        let mut w = Vec::with_capacity(n + 1);
        let (mut prev, mut cur) = (0.0, s);
        w.push(cur);
        for _ in 0..n {
            let next = 2.0 * cur - prev - c * nonlinearity(cur, gamma);
            prev = cur;
            cur = next;
            w.push(cur);
        }
        w
    };
    let s = shoot(march)?;
    let mut w = march(s);
    w.truncate(n);
    Ok(w)
}

/// RK4 shooting for the continuum ODE with `steps` steps, sampled at the `n`
/// interior nodes of a uniform mesh. `steps` must be a multiple of `n + 1`.
pub fn continuum_shooting(
    length: f64,
    n: usize,
    a: f64,
    gamma: f64,
    steps: usize,
) -> Result<Vec<f64>> {
    if !steps.is_multiple_of(n + 1) {
        return Err(Error::Domain(format!(
            "RK4 steps {steps} must be a multiple of {}",
            n + 1
        )));
    }
    let dt = length / steps as f64;
    let every = steps / (n + 1);
    let rhs = |y: [f64; 2]| [y[1], -nonlinearity(y[0], gamma) / a];
    let integrate = |s: f64| -> Vec<f64> {
        let mut y = [0.0, s];
        let mut out = Vec::with_capacity(n + 1);
        for k in 1..=steps {
            let k1 = rhs(y);
            let k2 = rhs([y[0] + 0.5 * dt * k1[0], y[1] + 0.5 * dt * k1[1]]);
            let k3 = rhs([y[0] + 0.5 * dt * k2[0], y[1] + 0.5 * dt * k2[1]]);
            let k4 = rhs([y[0] + dt * k3[0], y[1] + dt * k3[1]]);
            for i in 0..2 {
                y[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
            if k % every == 0 {
                out.push(y[0]);
            }
        }
        out
    };
    let s = shoot(integrate)?;
    let mut w = integrate(s);
    w.truncate(n);
    Ok(w)
}
