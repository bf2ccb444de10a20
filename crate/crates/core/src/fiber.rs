//! Exact scalar analysis of fiber maps.
//!
//! For a nonzero field `u` the energy along the ray `t ↦ t·u` is
//!
//! ```text
//! ψ(t) = (a/2)·P·t² + (λ/4)·P²·t⁴ − (1/γ)·Q·t^γ,   P = ‖∇u‖²,  Q = ∫|u|^γ
//! ```
//!
//! so every question about the ray (how many critical points, where they sit,
//! at which λ they merge or reach zero energy) reduces to algebra in the pair
//! `(P, Q)`. Everything here is a pure function of its arguments.
//!
//! Zero-energy threshold: a fiber has negative infimum for `λ < λ₀(u)` and zero
//! infimum for `λ ≥ λ₀(u)`. The threshold is `λ₀(u)`, not `λ(u)`: for
//! `λ₀(u) < λ < λ(u)` the fiber still has two critical points but its local
//! minimum sits at positive energy.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::{bracketed_root, pow_pos};

/// Relative band around `λ(u)` inside which a fiber is classified degenerate.
pub const DEGENERACY_RTOL: f64 = 1e-12;

/// The constants `(a, γ, λ)` of the problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProblemParams {
    pub a: f64,
    pub gamma: f64,
    pub lambda: f64,
}

impl ProblemParams {
    pub fn new(a: f64, gamma: f64, lambda: f64) -> Result<Self> {
        if !(a.is_finite() && a > 0.0) {
            return Err(Error::InvalidParams(format!("a must be positive, got {a}")));
        }
        if !(gamma > 2.0 && gamma < 4.0) {
            return Err(Error::InvalidParams(format!(
                "gamma must lie in (2, 4), got {gamma}"
            )));
        }
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(Error::InvalidParams(format!(
                "lambda must be nonnegative, got {lambda}"
            )));
        }
        Ok(Self { a, gamma, lambda })
    }

    /// Parameters of the local limit problem (`λ = 0`).
    pub fn limit(a: f64, gamma: f64) -> Result<Self> {
        Self::new(a, gamma, 0.0)
    }

    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        Self::new(self.a, self.gamma, lambda)
    }

    pub fn constants(&self) -> DerivedConstants {
        DerivedConstants::new(self.a, self.gamma)
    }
}

/// `C_{a,γ}`, `C_{0,a,γ}` and the exponent `2γ/(γ−2)` linking `λ(u)` to the
/// embedding ratio `‖u‖_γ/‖u‖`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivedConstants {
    pub c_agamma: f64,
    pub c0_agamma: f64,
    pub ratio_exponent: f64,
    ln_c_agamma: f64,
}

impl DerivedConstants {
    fn new(a: f64, gamma: f64) -> Self {
        let e = 2.0 / (gamma - 2.0);
        let base = (4.0 - gamma) / (2.0 * a);
        let ln_c_agamma = a.ln() + ((gamma - 2.0) / (4.0 - gamma)).ln() + e * base.ln();
        let c_agamma = if e > 10.0 {
            ln_c_agamma.exp()
        } else {
            a * ((gamma - 2.0) / (4.0 - gamma)) * base.powf(e)
        };
        let c0_agamma = 2.0 * pow_pos(2.0 / gamma, e);
        Self {
            c_agamma,
            c0_agamma,
            ratio_exponent: 2.0 * gamma / (gamma - 2.0),
            ln_c_agamma,
        }
    }
}

/// The pair `(P, Q) = (‖u‖², ‖u‖_γ^γ)` that determines a fiber map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FiberScalars {
    pub p: f64,
    pub q: f64,
}

impl FiberScalars {
    pub fn new(p: f64, q: f64) -> Result<Self> {
        if !(p.is_finite() && p > 0.0 && q.is_finite() && q > 0.0) {
            return Err(Error::Domain(format!(
                "fiber scalars must be positive and finite, got P = {p}, Q = {q}"
            )));
        }
        Ok(Self { p, q })
    }

    /// Scalars of the field `c·u`.
    pub fn scaled(&self, c: f64, gamma: f64) -> Self {
        Self {
            p: c * c * self.p,
            q: c.abs().powf(gamma) * self.q,
        }
    }

    /// `‖u‖_γ / ‖u‖`.
    pub fn embedding_ratio(&self, gamma: f64) -> f64 {
        self.q.powf(1.0 / gamma) / self.p.sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FiberKind {
    /// Local maximum at `t⁻` followed by a local minimum at `t⁺`.
    TwoCritical,
    /// A single inflection-type critical point.
    Degenerate,
    /// Strictly increasing, no critical point.
    Monotone,
}

impl FiberKind {
    pub fn label(&self) -> &'static str {
        match self {
            FiberKind::TwoCritical => "two-critical",
            FiberKind::Degenerate => "degenerate",
            FiberKind::Monotone => "monotone",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FiberClass {
    pub kind: FiberKind,
    pub t_minus: Option<f64>,
    pub t_plus: Option<f64>,
    pub t_deg: Option<f64>,
    /// Minimizer of `g(t) = aP + λP²t² − Q t^{γ−2}`.
    pub t_bracket: f64,
}

pub fn eval_psi(params: &ProblemParams, s: &FiberScalars, t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::Domain(format!(
            "fiber abscissa must be >= 0, got {t}"
        )));
    }
    let t2 = t * t;
    Ok(
        0.5 * params.a * s.p * t2 + 0.25 * params.lambda * s.p * s.p * t2 * t2
            - s.q * t.powf(params.gamma) / params.gamma,
    )
}

/// `(ψ′(t), ψ″(t))`.
pub fn eval_psi_derivs(params: &ProblemParams, s: &FiberScalars, t: f64) -> Result<(f64, f64)> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!(
            "fiber abscissa must be > 0, got {t}"
        )));
    }
    let ProblemParams { a, gamma, lambda } = *params;
    let lp2t2 = lambda * s.p * s.p * t * t;
    let qt = s.q * t.powf(gamma - 2.0);
    let d1 = t * (a * s.p + lp2t2 - qt);
    let d2 = a * s.p + 3.0 * lp2t2 - (gamma - 1.0) * qt;
    Ok((d1, d2))
}

/// `λ(u)`: the unique λ at which the fiber of `u` degenerates. Ignores
/// `params.lambda`.
pub fn lambda_of(params: &ProblemParams, s: &FiberScalars) -> f64 {
    let k = params.constants();
    let gamma = params.gamma;
    if k.ratio_exponent > 10.0 {
        let e = 1.0 / (gamma - 2.0);
        (k.ln_c_agamma + 2.0 * e * s.q.ln() - gamma * e * s.p.ln()).exp()
    } else {
        let ratio = s.q.powf(1.0 / gamma) / s.p.sqrt();
        k.c_agamma * ratio.powf(k.ratio_exponent)
    }
}

/// `λ₀(u) = C_{0,a,γ}·λ(u)`, the λ at which the fiber's local minimum has zero
/// energy.
pub fn lambda0_of(params: &ProblemParams, s: &FiberScalars) -> f64 {
    params.constants().c0_agamma * lambda_of(params, s)
}

/// `t(u)`: abscissa of the degenerate critical point at `λ = λ(u)`.
pub fn degenerate_point(params: &ProblemParams, s: &FiberScalars) -> f64 {
    let ProblemParams { a, gamma, .. } = *params;
    pow_pos(2.0 * a / (4.0 - gamma) * s.p / s.q, 1.0 / (gamma - 2.0))
}

/// `(t₀(u), λ₀(u))` solving `ψ(t) = 0, ψ′(t) = 0`.
///
/// Subtracting the derivative equation from four times the energy equation
/// (both divided by `t²`) eliminates λ and leaves
/// `t₀^{γ−2} = γ·a·P / ((4−γ)·Q)`.
pub fn zero_energy_point(params: &ProblemParams, s: &FiberScalars) -> (f64, f64) {
    let ProblemParams { a, gamma, .. } = *params;
    let t0 = pow_pos(gamma * a * s.p / ((4.0 - gamma) * s.q), 1.0 / (gamma - 2.0));
    (t0, lambda0_of(params, s))
}

/// Universal energy of any point of `N⁰_λ`.
pub fn n0_energy(params: &ProblemParams) -> Result<f64> {
    let ProblemParams { a, gamma, lambda } = *params;
    if !(lambda > 0.0) {
        return Err(Error::Domain(format!(
            "n0 energy needs lambda > 0, got {lambda}"
        )));
    }
    Ok((gamma - 2.0).powi(2) / (4.0 * gamma * (4.0 - gamma)) * a * a / lambda)
}

/// `g(t) = ψ′(t)/t` and its derivative.
fn g_and_dg(params: &ProblemParams, s: &FiberScalars, t: f64) -> (f64, f64) {
    let ProblemParams { a, gamma, lambda } = *params;
    let lp2 = lambda * s.p * s.p;
    let qt = s.q * t.powf(gamma - 3.0);
    (
        a * s.p + lp2 * t * t - qt * t,
        2.0 * lp2 * t - (gamma - 2.0) * qt,
    )
}

/// Scale against which the residual of `g` is judged: the largest of its three
/// terms at `t`.
fn g_scale(params: &ProblemParams, s: &FiberScalars, t: f64) -> f64 {
    let ProblemParams { a, gamma, lambda } = *params;
    (a * s.p)
        .max(lambda * s.p * s.p * t * t)
        .max(s.q * t.powf(gamma - 2.0))
}

pub fn classify_fiber(params: &ProblemParams, s: &FiberScalars) -> Result<FiberClass> {
    let ProblemParams { a, gamma, lambda } = *params;
    if !(lambda > 0.0) {
        return Err(Error::Domain(format!(
            "fiber classification needs lambda > 0, got {lambda}"
        )));
    }
    let t_bracket = pow_pos(
        (gamma - 2.0) * s.q / (2.0 * lambda * s.p * s.p),
        1.0 / (4.0 - gamma),
    );
    let lam_u = lambda_of(params, s);
    if (lambda - lam_u).abs() <= DEGENERACY_RTOL * lam_u {
        return Ok(FiberClass {
            kind: FiberKind::Degenerate,
            t_minus: None,
            t_plus: None,
            t_deg: Some(t_bracket),
            t_bracket,
        });
    }
    if lambda > lam_u {
        return Ok(FiberClass {
            kind: FiberKind::Monotone,
            t_minus: None,
            t_plus: None,
            t_deg: None,
            t_bracket,
        });
    }

    let g = |t: f64| g_and_dg(params, s, t);
    if g(t_bracket).0 >= 0.0 {
        return Err(Error::BracketFailure(format!(
            "g(t_bracket) = {:e} >= 0 although lambda = {lambda:e} < lambda(u) = {lam_u:e}",
            g(t_bracket).0
        )));
    }
    let mut lo = 0.5 * t_bracket;
    while g(lo).0 <= 0.0 {
        lo *= 0.5;
        if lo < f64::MIN_POSITIVE {
            return Err(Error::BracketFailure("lower bracket underflow".into()));
        }
    }
    let mut hi = 2.0 * t_bracket;
    while g(hi).0 <= 0.0 {
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::BracketFailure("upper bracket overflow".into()));
        }
    }
    let t_minus = bracketed_root(g, lo, t_bracket)?;
    let t_plus = bracketed_root(g, t_bracket, hi)?;
    for t in [t_minus, t_plus] {
        let r = g(t).0.abs();
        if r > 1e-12 * g_scale(params, s, t).max(a * s.p) {
            return Err(Error::BracketFailure(format!(
                "root residual {r:e} at t = {t:e} above tolerance"
            )));
        }
    }
    Ok(FiberClass {
        kind: FiberKind::TwoCritical,
        t_minus: Some(t_minus),
        t_plus: Some(t_plus),
        t_deg: None,
        t_bracket,
    })
}
