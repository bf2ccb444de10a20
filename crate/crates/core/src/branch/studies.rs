use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::extremal::ExtremalEstimate;
use crate::fiber::{degenerate_point, ProblemParams};
use crate::space::{energy, fiber_scalars, DiscreteSpace};

use super::mountain::{limit_problem, mountain_pass, MountainPassConfig};
use super::{minimize_branch, BranchKind, BranchPoint, DescentOptions};

/// Minimizer branch at `λ = f·λ*_h` for each increasing fraction `f < 1`,
/// warm-started from the previous point.
pub fn continue_to_lambda_star(
    space: &Arc<DiscreteSpace>,
    params: &ProblemParams,
    extremal: &ExtremalEstimate,
    fractions: &[f64],
    opts: &DescentOptions,
) -> Result<Vec<BranchPoint>> {
    if !extremal.converged {
        return Err(Error::Domain(
            "continuation needs a converged extremal estimate".into(),
        ));
    }
    if fractions.windows(2).any(|w| w[1] <= w[0])
        || fractions.iter().any(|f| !(*f > 0.0 && *f < 1.0))
    {
        return Err(Error::Domain(
            "fractions must increase strictly inside (0, 1)".into(),
        ));
    }
    let seeds = [extremal.maximizer.clone()];
    let mut out: Vec<BranchPoint> = Vec::with_capacity(fractions.len());
    for f in fractions {
        let p = params.with_lambda(f * extremal.lambda_star)?;
        let warm = out.last().map(|b| &b.field);
        out.push(minimize_branch(space, &p, warm, &seeds, opts)?);
    }
    Ok(out)
}

/// The degenerate point `t(u*)·u*` at `λ = λ*_h`, where `ψ′(1) = ψ″(1) = 0`.
pub fn lambda_star_point(
    params: &ProblemParams,
    extremal: &ExtremalEstimate,
) -> Result<BranchPoint> {
    let p = params.with_lambda(extremal.lambda_star)?;
    let s = fiber_scalars(&extremal.maximizer, p.gamma)?;
    let field = extremal.maximizer.scaled(degenerate_point(&p, &s));
    BranchPoint::new(&p, field, BranchKind::Minimizer, 0)
}

/// `λ₀*_h` located twice: as `C₀·λ*_h` and as the sign change of
/// `Φ_λ(u_λ)`, found by bisection on the minimizer branch.
#[derive(Debug, Clone, Serialize)]
pub struct Lambda0Bracket {
    pub closed_form: f64,
    pub bisected: f64,
    pub lo: f64,
    pub hi: f64,
    pub rel_diff: f64,
    pub solves: usize,
}

pub fn bracket_lambda0(
    space: &Arc<DiscreteSpace>,
    params: &ProblemParams,
    extremal: &ExtremalEstimate,
    mut lo: f64,
    mut hi: f64,
    rtol: f64,
    opts: &DescentOptions,
) -> Result<Lambda0Bracket> {
    let seeds = [extremal.maximizer.clone()];
    let mut solves = 0;
    let mut solve = |lam: f64, warm: Option<&BranchPoint>| -> Result<BranchPoint> {
        solves += 1;
        let p = params.with_lambda(lam)?;
        minimize_branch(space, &p, warm.map(|b| &b.field), &seeds, opts)
    };
    let b_lo = solve(lo, None)?;
    let b_hi = solve(hi, Some(&b_lo))?;
    if !(b_lo.energy < 0.0 && b_hi.energy > 0.0) {
        return Err(Error::BracketFailure(format!(
            "minimizer energy has no sign change on [{lo:e}, {hi:e}]: ({:e}, {:e})",
            b_lo.energy, b_hi.energy
        )));
    }
    let mut warm = b_lo;
    while hi - lo > rtol * hi {
        let mid = 0.5 * (lo + hi);
        let b = solve(mid, Some(&warm))?;
        if b.energy < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        warm = b;
    }
    let bisected = 0.5 * (lo + hi);
    let closed_form = extremal.lambda0_star;
    Ok(Lambda0Bracket {
        closed_form,
        bisected,
        lo,
        hi,
        rel_diff: (bisected - closed_form).abs() / closed_form,
        solves,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct AsymptoticRow {
    pub lambda: f64,
    pub energy_min: f64,
    pub normsq_min: f64,
    pub energy_mp: f64,
    /// `λ‖w_λ‖⁴`.
    pub lambda_normsq2_mp: f64,
    /// `‖w_λ − w₀‖`.
    pub dist_to_limit: f64,
    /// `‖w_λ − w₀‖ / ‖w₀‖`.
    pub rel_dist_to_limit: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AsymptoticStudy {
    pub rows: Vec<AsymptoticRow>,
    /// `c₀ = Φ₀(w₀)`.
    pub c0: f64,
    #[serde(skip)]
    pub limit: BranchPoint,
}

/// Both branches along a decreasing sequence in `(0, λ₀*_h)` next to the
/// limit problem.
pub fn asymptotic_study(
    space: &Arc<DiscreteSpace>,
    params: &ProblemParams,
    extremal: &ExtremalEstimate,
    lambdas: &[f64],
    opts: &DescentOptions,
) -> Result<AsymptoticStudy> {
    if lambdas.windows(2).any(|w| w[1] >= w[0])
        || lambdas
            .iter()
            .any(|l| !(*l > 0.0 && *l < extremal.lambda0_star))
    {
        return Err(Error::Domain(
            "asymptotic sequence must decrease strictly inside (0, lambda0*)".into(),
        ));
    }
    let limit = limit_problem(space, params.a, params.gamma, Some(extremal))?;
    let w0_norm = limit.field.norm();
    let seeds = [extremal.maximizer.clone()];
    let mut rows = Vec::with_capacity(lambdas.len());
    let mut warm: Option<BranchPoint> = None;
    for &lam in lambdas {
        let p = params.with_lambda(lam)?;
        let u = minimize_branch(space, &p, warm.as_ref().map(|b| &b.field), &seeds, opts)?;
        let cfg = MountainPassConfig::from_extremal(&p, extremal, 0.9)?;
        let w = mountain_pass(space, &p, &cfg)?;
        let dist = w.field.sub(&limit.field).norm();
        rows.push(AsymptoticRow {
            lambda: lam,
            energy_min: u.energy,
            normsq_min: u.normsq,
            energy_mp: w.energy,
            lambda_normsq2_mp: lam * w.normsq * w.normsq,
            dist_to_limit: dist,
            rel_dist_to_limit: dist / w0_norm,
        });
        warm = Some(u);
    }
    Ok(AsymptoticStudy {
        rows,
        c0: energy(&params.with_lambda(0.0)?, &limit.field),
        limit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extremal::{maximize_lambda, AscentOptions, AscentStart};
    use crate::fiber::n0_energy;
    use crate::space::{build_space, SpaceConfig};

    fn setup() -> (Arc<DiscreteSpace>, ProblemParams, ExtremalEstimate) {
        let space = build_space(SpaceConfig::interval(1.0, 99)).unwrap();
        let params = ProblemParams::new(1.0, 3.0, 0.0).unwrap();
        let ext = maximize_lambda(
            &space,
            &params,
            AscentStart::HalfSine,
            &AscentOptions::default(),
        )
        .unwrap();
        (space, params, ext)
    }

    #[test]
    fn collapse_toward_lambda_star() {
        let (space, params, ext) = setup();
        let pts = continue_to_lambda_star(
            &space,
            &params,
            &ext,
            &[0.9, 0.99, 0.999],
            &DescentOptions::default(),
        )
        .unwrap();
        assert!(pts[0].psi2.abs() > pts[1].psi2.abs() && pts[1].psi2.abs() > pts[2].psi2.abs());
        let n0 = n0_energy(&params.with_lambda(ext.lambda_star).unwrap()).unwrap();
        assert!(pts[2].energy < n0 && (n0 - pts[2].energy) / n0 < 0.05);
        let star = lambda_star_point(&params, &ext).unwrap();
        let s = fiber_scalars(&star.field, 3.0).unwrap();
        let (d1, d2) =
            crate::fiber::eval_psi_derivs(&params.with_lambda(ext.lambda_star).unwrap(), &s, 1.0)
                .unwrap();
        assert!(d1.abs() <= 1e-9 * s.q && d2.abs() <= 1e-9 * s.q);
    }

    #[test]
    fn sign_change_of_branch_energy_is_lambda0() {
        let (space, params, ext) = setup();
        let b = bracket_lambda0(
            &space,
            &params,
            &ext,
            0.9 * ext.lambda0_star,
            1.1 * ext.lambda0_star,
            1e-10,
            &DescentOptions::default(),
        )
        .unwrap();
        assert!(b.rel_diff <= 1e-8, "{b:?}");
    }

    #[test]
    fn asymptotic_trends() {
        let (space, params, ext) = setup();
        let l0 = ext.lambda0_star;
        let st = asymptotic_study(
            &space,
            &params,
            &ext,
            &[1e-1 * l0, 1e-2 * l0, 1e-3 * l0],
            &DescentOptions::default(),
        )
        .unwrap();
        let r = &st.rows;
        for w in r.windows(2) {
            assert!(w[1].energy_min < w[0].energy_min);
            assert!(w[1].normsq_min > w[0].normsq_min);
            assert!(w[1].lambda_normsq2_mp < 0.5 * w[0].lambda_normsq2_mp);
            assert!(w[1].rel_dist_to_limit < w[0].rel_dist_to_limit);
            assert!(w[1].energy_mp <= w[0].energy_mp);
        }
        assert!(r.last().unwrap().energy_mp >= st.c0);
        assert!(st.c0 > 0.0);
    }
}
