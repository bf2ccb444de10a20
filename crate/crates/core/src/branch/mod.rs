//! Solution branches: the minimizer branch on `N⁺`, the mountain-pass branch,
//! the `λ = 0` limit problem and the studies built on them.
//!
//! Residuals are reported twice. `residual_abs` is the `H⁻¹` norm of
//! `Φ′_λ(u)`; `residual` divides it by `(a + λP)‖u‖`, the size of the
//! leading term, so that tolerances mean the same thing on the small-λ end of
//! a branch where `‖u‖` grows like `λ^{−1/(4−γ)}`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fiber::{classify_fiber, FiberKind, ProblemParams};
use crate::space::{
    energy, fiber_scalars, gradient, solve_shifted_laplacian, solve_shifted_laplacian_tol,
    DiscreteField, DiscreteSpace, CG_RTOL,
};

pub mod mountain;
pub mod studies;

pub use mountain::{limit_problem, mountain_pass, nehari_minus_minimize, MountainPassConfig};
pub use studies::{
    asymptotic_study, bracket_lambda0, continue_to_lambda_star, lambda_star_point, AsymptoticRow,
    Lambda0Bracket,
};

/// Dense Newton polishing is skipped above this many unknowns.
pub const NEWTON_MAX_UNKNOWNS: usize = 2500;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum NehariSign {
    Plus,
    Zero,
    Minus,
}

impl NehariSign {
    pub fn symbol(&self) -> char {
        match self {
            NehariSign::Plus => '+',
            NehariSign::Zero => '0',
            NehariSign::Minus => '-',
        }
    }

    /// Sign of `ψ″(1)` with a relative dead band against the size of its terms.
    pub fn classify(params: &ProblemParams, u: &DiscreteField) -> Result<(Self, f64)> {
        let s = fiber_scalars(u, params.gamma)?;
        let (a, g, l) = (params.a, params.gamma, params.lambda);
        let psi2 = a * s.p + 3.0 * l * s.p * s.p - (g - 1.0) * s.q;
        let scale = a * s.p + 3.0 * l * s.p * s.p + (g - 1.0) * s.q;
        let sign = if psi2.abs() <= 1e-12 * scale {
            NehariSign::Zero
        } else if psi2 > 0.0 {
            NehariSign::Plus
        } else {
            NehariSign::Minus
        };
        Ok((sign, psi2))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BranchKind {
    Minimizer,
    MountainPass,
    LimitProblem,
}

#[derive(Debug, Clone, Serialize)]
pub struct BranchPoint {
    pub lambda: f64,
    #[serde(skip)]
    pub field: DiscreteField,
    pub energy: f64,
    /// `‖u‖²`.
    pub normsq: f64,
    /// `ψ″_{λ,u}(1)`.
    pub psi2: f64,
    pub nehari_class: NehariSign,
    pub residual: f64,
    pub residual_abs: f64,
    pub kind: BranchKind,
    pub iterations: usize,
}

impl BranchPoint {
    pub fn new(
        params: &ProblemParams,
        field: DiscreteField,
        kind: BranchKind,
        iterations: usize,
    ) -> Result<Self> {
        let (nehari_class, psi2) = NehariSign::classify(params, &field)?;
        let (residual, residual_abs) = residuals(params, &field)?;
        Ok(Self {
            lambda: params.lambda,
            energy: energy(params, &field),
            normsq: field.norm_sq(),
            psi2,
            nehari_class,
            residual,
            residual_abs,
            kind,
            iterations,
            field,
        })
    }

    /// `ψ′(1) = aP + λP² − Q` divided by `Q`.
    pub fn nehari_defect(&self, params: &ProblemParams) -> f64 {
        let s = fiber_scalars(&self.field, params.gamma).expect("branch field is nonzero");
        (params.a * s.p + params.lambda * s.p * s.p - s.q) / s.q
    }
}

/// `(relative, absolute)` residual of `Φ′_λ(u)`.
pub fn residuals(params: &ProblemParams, u: &DiscreteField) -> Result<(f64, f64)> {
    let r = gradient(params, u);
    let p = u.norm_sq();
    let coef = params.a + params.lambda * p;
    let d = solve_shifted_laplacian(u.space(), coef, &r)?;
    let abs = (coef * r.dot(&d)).max(0.0).sqrt();
    Ok((abs / (coef * p.sqrt()), abs))
}

/// `t^±_λ(u)·u`. At `λ = 0` only the `−` projection exists.
pub fn project_nehari(
    u: &DiscreteField,
    params: &ProblemParams,
    sign: NehariSign,
) -> Result<DiscreteField> {
    let s = fiber_scalars(u, params.gamma)?;
    if params.lambda == 0.0 {
        return match sign {
            NehariSign::Minus => {
                let t = (params.a * s.p / s.q).powf(1.0 / (params.gamma - 2.0));
                Ok(u.scaled(t))
            }
            _ => Err(Error::ProjectionInfeasible("single-critical", 0.0)),
        };
    }
    let class = classify_fiber(params, &s)?;
    let t = match (class.kind, sign) {
        (FiberKind::TwoCritical, NehariSign::Plus) => class.t_plus,
        (FiberKind::TwoCritical, NehariSign::Minus) => class.t_minus,
        (FiberKind::TwoCritical, NehariSign::Zero) => None,
        (kind, _) => return Err(Error::ProjectionInfeasible(kind.label(), params.lambda)),
    };
    match t {
        Some(t) => Ok(u.scaled(t)),
        None => Err(Error::Domain("projection needs sign + or -".into())),
    }
}

#[derive(Debug, Clone)]
pub struct DescentOptions {
    /// Relative residual at which the descent stops.
    pub residual_tol: f64,
    pub max_steps: usize,
    pub initial_step: f64,
    pub armijo: f64,
    pub min_step: f64,
    /// Switch to Newton steps once the residual is below this, if the space is
    /// small enough for a dense factorization.
    pub newton_switch: Option<f64>,
    /// Conjugate-gradient tolerance of the preconditioning solve.
    pub cg_rtol: f64,
}

impl Default for DescentOptions {
    fn default() -> Self {
        Self {
            residual_tol: 1e-8,
            max_steps: 5000,
            initial_step: 1.0,
            armijo: 1e-4,
            min_step: 1e-12,
            newton_switch: Some(1e-4),
            cg_rtol: CG_RTOL,
        }
    }
}

/// Preconditioned projected descent of `Φ_λ` on `N^±`. Returns the final field
/// and the number of accepted steps.
pub(crate) fn nehari_descent(
    params: &ProblemParams,
    start: &DiscreteField,
    sign: NehariSign,
    opts: &DescentOptions,
) -> Result<(DiscreteField, usize)> {
    let space = Arc::clone(start.space());
    let mut u = project_nehari(start, params, sign)?;
    let mut e = energy(params, &u);
    let mut step = opts.initial_step;
    let mut use_newton = opts.newton_switch.is_some() && space.unknowns() <= NEWTON_MAX_UNKNOWNS;
    let mut rel = residuals(params, &u)?.0;
    for it in 0..opts.max_steps {
        if rel <= opts.residual_tol {
            return Ok((u, it));
        }
        if use_newton && rel <= opts.newton_switch.unwrap_or(0.0) {
            let cand = newton_step(params, &u).and_then(|w| project_nehari(&w, params, sign));
            if let Ok(cand) = cand {
                let r_cand = residuals(params, &cand)?.0;
                if r_cand < 0.5 * rel {
                    e = energy(params, &cand);
                    u = cand;
                    rel = r_cand;
                    continue;
                }
            }
            use_newton = false;
        }
        let r = gradient(params, &u);
        let coef = params.a + params.lambda * u.norm_sq();
        let d = solve_shifted_laplacian_tol(&space, coef, &r, opts.cg_rtol)?;
        let slope = r.dot(&d);
        loop {
            let trial = project_nehari(&u.add_scaled(-step, &d), params, sign);
            match trial {
                Ok(w) => {
                    let ew = energy(params, &w);
                    let drop = opts.armijo * step * slope;
                    let accept = if drop > 1e-12 * (e.abs() + coef * u.norm_sq()) {
                        ew <= e - drop
                    } else {
                        // below roundoff of the energy; judge by the residual
                        residuals(params, &w)?.0 < rel
                    };
                    if accept {
                        u = w;
                        e = ew;
                        step = (2.0 * step).min(opts.initial_step);
                        break;
                    }
                }
                Err(Error::ProjectionInfeasible(..)) => {}
                Err(err) => return Err(err),
            }
            step *= 0.5;
            if step < opts.min_step {
                return Err(Error::DescentStall {
                    iterations: it,
                    residual: rel,
                });
            }
        }
        rel = residuals(params, &u)?.0;
    }
    if rel <= opts.residual_tol {
        return Ok((u, opts.max_steps));
    }
    Err(Error::NonConvergence {
        solver: "nehari descent",
        iterations: opts.max_steps,
        residual: rel,
    })
}

/// Stiffness matrix as a dense matrix.
fn dense_stiffness(space: &DiscreteSpace) -> DMatrix<f64> {
    let n = space.unknowns();
    let mut k = DMatrix::zeros(n, n);
    let mut e = vec![0.0; n];
    let mut col = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        space.apply_stiffness(&e, &mut col);
        e[j] = 0.0;
        k.column_mut(j).copy_from_slice(&col);
    }
    k
}

/// One Newton step `u − H⁻¹Φ′(u)` with
/// `H = (a+λP)K + 2λ(Ku)(Ku)ᵀ − diag((γ−1)w|u|^{γ−2})`.
pub(crate) fn newton_step(params: &ProblemParams, u: &DiscreteField) -> Result<DiscreteField> {
    let space = u.space();
    let n = space.unknowns();
    let ku = u.stiffness_apply();
    let p = u.dot(&ku);
    let mut h = dense_stiffness(space) * (params.a + params.lambda * p);
    let kv = DVector::from_column_slice(ku.values());
    h += (&kv * kv.transpose()) * (2.0 * params.lambda);
    for (i, (x, w)) in u.values().iter().zip(space.mass_weights()).enumerate() {
        h[(i, i)] -= (params.gamma - 1.0) * w * x.abs().powf(params.gamma - 2.0);
    }
    let r = DVector::from_column_slice(gradient(params, u).values());
    let delta = h
        .lu()
        .solve(&r)
        .ok_or_else(|| Error::Domain("singular Hessian in Newton polish".into()))?;
    let values: Vec<f64> = (0..n).map(|i| u.values()[i] - delta[i]).collect();
    DiscreteField::from_values(space, values)
}

/// Minimizer branch at `params.lambda`. Seeds are tried in order: the warm
/// start, the half-sine field, then `extra_seeds`; the first whose fiber has
/// two critical points and whose descent converges wins.
pub fn minimize_branch(
    space: &Arc<DiscreteSpace>,
    params: &ProblemParams,
    warm_start: Option<&DiscreteField>,
    extra_seeds: &[DiscreteField],
    opts: &DescentOptions,
) -> Result<BranchPoint> {
    if !(params.lambda > 0.0) {
        return Err(Error::Domain(format!(
            "minimizer branch needs lambda > 0, got {}",
            params.lambda
        )));
    }
    let mut seeds: Vec<DiscreteField> = Vec::new();
    if let Some(w) = warm_start {
        if w.space().config() != space.config() {
            return Err(Error::SpaceMismatch);
        }
        seeds.push(w.clone());
    }
    seeds.push(DiscreteField::half_sine(space));
    seeds.extend(extra_seeds.iter().cloned());

    let mut last_err = None;
    let mut feasible = false;
    for seed in &seeds {
        if seed.is_zero() {
            continue;
        }
        let s = fiber_scalars(seed, params.gamma)?;
        if classify_fiber(params, &s)?.kind != FiberKind::TwoCritical {
            continue;
        }
        feasible = true;
        match nehari_descent(params, seed, NehariSign::Plus, opts) {
            Ok((u, it)) => return BranchPoint::new(params, u, BranchKind::Minimizer, it),
            Err(e) => last_err = Some(e),
        }
    }
    match (feasible, last_err) {
        (false, _) => Err(Error::InfeasibleStart(params.lambda)),
        (true, Some(e)) => Err(e),
        (true, None) => unreachable!("a feasible seed either converges or errors"),
    }
}
