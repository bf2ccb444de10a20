//! Mountain-pass solutions by path deformation.
//!
//! The path `0 → ū` is a polyline. Each sweep locates its highest point
//! (golden section on the two segments around the highest vertex), pushes
//! that point one preconditioned descent step downhill and resamples both
//! halves of the path by arclength while keeping the pushed vertex. Once the
//! residual at the top is small the point is polished by Newton steps.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::extremal::{maximize_lambda, AscentOptions, AscentStart, ExtremalEstimate};
use crate::fiber::{eval_psi, n0_energy, zero_energy_point, FiberScalars, ProblemParams};
use crate::scalar::golden_max;
use crate::space::{
    energy, fiber_scalars, gradient, solve_shifted_laplacian, DiscreteField, DiscreteSpace,
};

use super::{
    nehari_descent, newton_step, project_nehari, residuals, BranchKind, BranchPoint,
    DescentOptions, NehariSign, NEWTON_MAX_UNKNOWNS,
};

#[derive(Debug, Clone)]
pub struct MountainPassConfig {
    pub path_points: usize,
    /// `ū_λ`, a field beyond the ring with energy below `ring_level`.
    pub endpoint: DiscreteField,
    pub deform_step: f64,
    pub max_sweeps: usize,
    /// Radius of the ring around the origin.
    pub rho: f64,
    /// Lower bound of the energy on the ring.
    pub ring_level: f64,
    /// `min(ring_level, n0_energy)`; `ring_level` alone at `λ = 0`.
    pub barrier: f64,
    /// Relative residual at which the deformation hands over to the polish.
    pub residual_tol: f64,
    pub polish: bool,
}

impl MountainPassConfig {
    /// Ring and endpoint built from the extremal maximizer `u*`.
    ///
    /// Every field satisfies `‖u‖_γ^γ ≤ σ‖u‖^γ` with `σ = sobolev_ratio^γ`, so
    /// `h(r) = (a/2)r² + (λ/4)r⁴ − (σ/γ)r^γ` bounds the energy on the sphere
    /// of radius `r` from below. The ring sits at `rho_fraction` of the
    /// smallest Nehari norm `r_λ`. The endpoint is the zero-energy point of
    /// `u*` for `λ ≤ λ₀*_h` and the `N⁺` point of `u*` above it.
    pub fn from_extremal(
        params: &ProblemParams,
        extremal: &ExtremalEstimate,
        rho_fraction: f64,
    ) -> Result<Self> {
        if !(rho_fraction > 0.0 && rho_fraction < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "rho fraction must lie in (0, 1), got {rho_fraction}"
            )));
        }
        let gamma = params.gamma;
        let sigma = FiberScalars::new(1.0, extremal.embedding_constant(gamma))?;
        let unit = extremal.maximizer.normalized()?;
        let r_lambda = if params.lambda == 0.0 {
            (params.a / sigma.q).powf(1.0 / (gamma - 2.0))
        } else {
            let top = project_nehari(&unit, params, NehariSign::Minus)?;
            top.norm()
        };
        let rho = rho_fraction * r_lambda;
        let ring_level = eval_psi(params, &sigma, rho)?;
        let barrier = if params.lambda > 0.0 {
            ring_level.min(n0_energy(params)?)
        } else {
            ring_level
        };
        let endpoint = if params.lambda <= extremal.lambda0_star {
            let s = fiber_scalars(&unit, gamma)?;
            unit.scaled(zero_energy_point(params, &s).0)
        } else {
            project_nehari(&unit, params, NehariSign::Plus)?
        };
        Ok(Self {
            path_points: 32,
            endpoint,
            deform_step: 1.0,
            max_sweeps: 4000,
            rho,
            ring_level,
            barrier,
            residual_tol: 1e-7,
            polish: true,
        })
    }
}

/// Equal-arclength resampling of the polyline `pts` with the same number of
/// points, measured in `(field / field_scale, energy / energy_scale)`.
fn resample(
    params: &ProblemParams,
    pts: &[DiscreteField],
    field_scale: f64,
    energy_scale: f64,
) -> Vec<DiscreteField> {
    let m = pts.len();
    if m < 3 {
        return pts.to_vec();
    }
    let en: Vec<f64> = pts.iter().map(|p| energy(params, p)).collect();
    let mut cum = vec![0.0; m];
    for i in 1..m {
        let dx = pts[i].sub(&pts[i - 1]).norm() / field_scale;
        let de = (en[i] - en[i - 1]) / energy_scale;
        cum[i] = cum[i - 1] + (dx * dx + de * de).sqrt();
    }
    let total = cum[m - 1];
    if !(total > 0.0) {
        return pts.to_vec();
    }
    let mut out = Vec::with_capacity(m);
    out.push(pts[0].clone());
    let mut seg = 1;
    for j in 1..m - 1 {
        let target = total * j as f64 / (m - 1) as f64;
        while cum[seg] < target && seg < m - 1 {
            seg += 1;
        }
        let len = cum[seg] - cum[seg - 1];
        let s = if len > 0.0 {
            (target - cum[seg - 1]) / len
        } else {
            0.0
        };
        out.push(pts[seg - 1].add_scaled(s, &pts[seg].sub(&pts[seg - 1])));
    }
    out.push(pts[m - 1].clone());
    out
}

/// Highest point on the two segments adjacent to vertex `k`.
fn refine_top(params: &ProblemParams, path: &[DiscreteField], k: usize) -> (DiscreteField, f64) {
    let mut best = (path[k].clone(), energy(params, &path[k]));
    for (from, to) in [(k - 1, k), (k, k + 1)] {
        let dir = path[to].sub(&path[from]);
        let f = |s: f64| energy(params, &path[from].add_scaled(s, &dir));
        let (s, e) = golden_max(f, 0.0, 1.0, 1e-10);
        if e > best.1 {
            best = (path[from].add_scaled(s, &dir), e);
        }
    }
    best
}

fn kind_for(params: &ProblemParams) -> BranchKind {
    if params.lambda == 0.0 {
        BranchKind::LimitProblem
    } else {
        BranchKind::MountainPass
    }
}

/// Newton steps from `u` as long as each one at least halves the residual.
fn polish(
    params: &ProblemParams,
    mut u: DiscreteField,
    mut rel: f64,
) -> Result<(DiscreteField, f64)> {
    if u.space().unknowns() > NEWTON_MAX_UNKNOWNS {
        return Ok((u, rel));
    }
    for _ in 0..20 {
        if rel <= 1e-14 {
            break;
        }
        let Ok(cand) = newton_step(params, &u) else {
            break;
        };
        if cand.is_zero() {
            break;
        }
        let r = residuals(params, &cand)?.0;
        if !(r < 0.5 * rel) {
            break;
        }
        u = cand;
        rel = r;
    }
    Ok((u, rel))
}

pub fn mountain_pass(
    space: &Arc<DiscreteSpace>,
    params: &ProblemParams,
    cfg: &MountainPassConfig,
) -> Result<BranchPoint> {
    if cfg.path_points < 3 {
        return Err(Error::InvalidConfig(format!(
            "mountain pass needs at least 3 path points, got {}",
            cfg.path_points
        )));
    }
    if cfg.endpoint.space().config() != space.config() {
        return Err(Error::SpaceMismatch);
    }
    let end = &cfg.endpoint;
    let e_end = energy(params, end);
    if !(e_end < cfg.ring_level) || end.norm() <= cfg.rho {
        return Err(Error::GeometryViolation {
            endpoint: e_end,
            ring: cfg.ring_level,
        });
    }
    let m = cfg.path_points;
    let mut path: Vec<DiscreteField> = (0..m)
        .map(|i| end.scaled(i as f64 / (m - 1) as f64))
        .collect();
    let field_scale = end.norm();
    let mut step = cfg.deform_step;
    let mut top = path[1].clone();
    let mut rel = f64::INFINITY;
    let mut sweeps = 0;
    while sweeps < cfg.max_sweeps {
        sweeps += 1;
        let k = (1..m - 1)
            .max_by(|&i, &j| energy(params, &path[i]).total_cmp(&energy(params, &path[j])))
            .expect("path has interior points");
        let (z, ez) = refine_top(params, &path, k);
        path[k] = z.clone();
        top = z;
        rel = residuals(params, &top)?.0;
        if rel <= cfg.residual_tol {
            break;
        }
        let r = gradient(params, &top);
        let coef = params.a + params.lambda * top.norm_sq();
        let d = solve_shifted_laplacian(space, coef, &r)?;
        let slope = r.dot(&d);
        loop {
            let w = top.add_scaled(-step, &d);
            let ew = energy(params, &w);
            let drop = 1e-4 * step * slope;
            let accept = if drop > 1e-12 * (ez.abs() + coef * top.norm_sq()) {
                ew <= ez - drop
            } else {
                residuals(params, &w)?.0 < rel
            };
            if accept {
                path[k] = w;
                step = (2.0 * step).min(cfg.deform_step);
                break;
            }
            step *= 0.5;
            if step < 1e-14 {
                return Err(Error::DescentStall {
                    iterations: sweeps,
                    residual: rel,
                });
            }
        }
        let energy_scale = path
            .iter()
            .map(|p| energy(params, p).abs())
            .fold(0.0, f64::max)
            .max(f64::MIN_POSITIVE);
        let left = resample(params, &path[..=k], field_scale, energy_scale);
        let right = resample(params, &path[k..], field_scale, energy_scale);
        path = left.into_iter().chain(right.into_iter().skip(1)).collect();
    }
    if cfg.polish {
        let (u, r) = polish(params, top, rel)?;
        top = u;
        rel = r;
    }
    if rel > cfg.residual_tol {
        return Err(Error::NonConvergence {
            solver: "mountain pass",
            iterations: sweeps,
            residual: rel,
        });
    }
    let pt = BranchPoint::new(params, top, kind_for(params), sweeps)?;
    if pt.nehari_class != NehariSign::Minus {
        return Err(Error::SaddleEscape(pt.nehari_class.symbol()));
    }
    Ok(pt)
}

/// Minimize `Φ_λ` over `N⁻`: the cross-check for the path algorithm.
pub fn nehari_minus_minimize(
    params: &ProblemParams,
    start: &DiscreteField,
    opts: &DescentOptions,
) -> Result<BranchPoint> {
    let (u, it) = nehari_descent(params, start, NehariSign::Minus, opts)?;
    BranchPoint::new(params, u, kind_for(params), it)
}

/// Energies of the path-deformation saddle and the `N⁻` minimizer. A mismatch
/// is reported, not resolved.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct SaddleComparison {
    pub path_energy: f64,
    pub nehari_energy: f64,
    pub rel_diff: f64,
    pub agree: bool,
}

impl SaddleComparison {
    pub const RTOL: f64 = 1e-6;

    pub fn new(path: &BranchPoint, nehari: &BranchPoint) -> Self {
        let rel_diff =
            (path.energy - nehari.energy).abs() / nehari.energy.abs().max(f64::MIN_POSITIVE);
        Self {
            path_energy: path.energy,
            nehari_energy: nehari.energy,
            rel_diff,
            agree: rel_diff <= Self::RTOL,
        }
    }
}

/// Mountain-pass solution of `−aΔw = |w|^{γ−2}w`. Computes the extremal
/// maximizer when none is given.
pub fn limit_problem(
    space: &Arc<DiscreteSpace>,
    a: f64,
    gamma: f64,
    extremal: Option<&ExtremalEstimate>,
) -> Result<BranchPoint> {
    let params = ProblemParams::limit(a, gamma)?;
    let owned;
    let ext = match extremal {
        Some(e) => e,
        None => {
            owned = maximize_lambda(
                space,
                &params,
                AscentStart::HalfSine,
                &AscentOptions::default(),
            )?;
            &owned
        }
    };
    let cfg = MountainPassConfig::from_extremal(&params, ext, 0.9)?;
    mountain_pass(space, &params, &cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fiber::classify_fiber;
    use crate::space::{build_space, SpaceConfig};
    use rand::SeedableRng;

    fn setup(n: usize) -> (Arc<DiscreteSpace>, ProblemParams, ExtremalEstimate) {
        let space = build_space(SpaceConfig::interval(1.0, n)).unwrap();
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
    fn saddle_matches_ray_oracle_and_clears_barrier() {
        let (space, params, ext) = setup(99);
        let p = params.with_lambda(0.5 * ext.lambda0_star).unwrap();
        let cfg = MountainPassConfig::from_extremal(&p, &ext, 0.9).unwrap();
        let w = mountain_pass(&space, &p, &cfg).unwrap();
        assert!(w.energy > cfg.barrier);
        assert!(w.residual <= 1e-8);
        let s = ext.scalars(3.0);
        let tm = classify_fiber(&p, &s).unwrap().t_minus.unwrap();
        let oracle = energy(&p, &ext.maximizer.scaled(tm));
        assert!(
            (w.energy - oracle).abs() <= 1e-9 * oracle,
            "{} vs {oracle}",
            w.energy
        );
    }

    #[test]
    fn deformation_from_an_off_ray_endpoint() {
        let (space, params, ext) = setup(49);
        let p = params.with_lambda(0.3 * ext.lambda0_star).unwrap();
        let mut cfg = MountainPassConfig::from_extremal(&p, &ext, 0.9).unwrap();
        // bend the endpoint away from the maximizer ray, keeping it low
        let bump = DiscreteField::from_fn(&space, |x| (2.0 * std::f64::consts::PI * x[0]).sin());
        let bent = cfg.endpoint.add_scaled(0.3 * cfg.endpoint.max_abs(), &bump);
        cfg.endpoint = bent.scaled(1.5);
        assert!(energy(&p, &cfg.endpoint) < cfg.ring_level);
        let w = mountain_pass(&space, &p, &cfg).unwrap();
        let nm = nehari_minus_minimize(&p, &ext.maximizer, &DescentOptions::default()).unwrap();
        let cmp = SaddleComparison::new(&w, &nm);
        assert!(cmp.agree, "{cmp:?}");
        assert!(w.iterations > 1);
    }

    #[test]
    fn ring_bounds_random_fields() {
        let (space, params, ext) = setup(49);
        let p = params.with_lambda(0.5 * ext.lambda0_star).unwrap();
        let cfg = MountainPassConfig::from_extremal(&p, &ext, 0.9).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let u = DiscreteField::random(&space, &mut rng);
            let u = u.scaled(cfg.rho / u.norm());
            assert!(energy(&p, &u) >= cfg.ring_level);
        }
        let at_ring = ext.maximizer.normalized().unwrap().scaled(cfg.rho);
        assert!((energy(&p, &at_ring) - cfg.ring_level).abs() <= 1e-10 * cfg.ring_level);
    }

    #[test]
    fn geometry_violation_detected() {
        let (space, params, ext) = setup(49);
        let p = params.with_lambda(0.5 * ext.lambda0_star).unwrap();
        let mut cfg = MountainPassConfig::from_extremal(&p, &ext, 0.9).unwrap();
        cfg.endpoint = cfg.endpoint.scaled(0.5 * cfg.rho / cfg.endpoint.norm());
        assert!(matches!(
            mountain_pass(&space, &p, &cfg),
            Err(Error::GeometryViolation { .. })
        ));
    }

    #[test]
    fn limit_problem_positive_level_and_scaling() {
        let (space, _, ext) = setup(99);
        let w1 = limit_problem(&space, 1.0, 3.0, Some(&ext)).unwrap();
        assert_eq!(w1.kind, BranchKind::LimitProblem);
        assert!(w1.energy > 0.0);
        assert!(w1.residual <= 1e-10);
        let a: f64 = 2.5;
        let wa = limit_problem(&space, a, 3.0, Some(&ext)).unwrap();
        let mapped = w1.field.scaled(a.powf(1.0 / (3.0 - 2.0)));
        let err = wa.field.sub(&mapped).max_abs() / wa.field.max_abs();
        assert!(err < 1e-10, "{err}");
    }
}
