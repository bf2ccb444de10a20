//! Discrete extremal parameters `λ*_h`, `λ₀*_h` and the best embedding ratio.
//!
//! `λ(u)` depends on `u` only through `‖u‖_γ/‖u‖`, so `λ*_h = sup λ(u)` is a
//! maximization of that ratio over the discrete space. The ascent is the
//! fixed-point map of its Euler–Lagrange equation,
//!
//! ```text
//! u ← normalize(K⁻¹ (w|u|^{γ−2}u))
//! ```
//!
//! which is monotone because `u ↦ ‖u‖_γ` is convex: with `F = ‖·‖_γ^γ` and
//! `v = K⁻¹∇F(u)/‖K⁻¹∇F(u)‖`, Cauchy–Schwarz in the `K`-inner product gives
//! `⟨∇F(u), v⟩ ≥ ⟨∇F(u), u⟩`, and convexity turns that into `F(v) ≥ F(u)`.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fiber::{lambda_of, FiberScalars, ProblemParams};
use crate::space::{
    dual_norm, fiber_scalars, solve_shifted_laplacian_tol, DiscreteField, DiscreteSpace,
};

#[derive(Debug, Clone, Serialize)]
pub struct ExtremalEstimate {
    pub lambda_star: f64,
    pub lambda0_star: f64,
    /// `max ‖u‖_γ / ‖u‖` over the discrete space.
    pub sobolev_ratio: f64,
    #[serde(skip)]
    pub maximizer: DiscreteField,
    pub iterations: usize,
    pub converged: bool,
    /// `H⁻¹` norm of the ratio gradient at the maximizer.
    pub stationarity: f64,
}

impl ExtremalEstimate {
    pub fn scalars(&self, gamma: f64) -> FiberScalars {
        fiber_scalars(&self.maximizer, gamma).expect("maximizer is nonzero")
    }

    /// The maximizer `Q` at unit norm, `sobolev_ratio^γ`: the sharp constant
    /// in `∫|u|^γ ≤ σ ‖u‖^γ`.
    pub fn embedding_constant(&self, gamma: f64) -> f64 {
        self.sobolev_ratio.powf(gamma)
    }
}

#[derive(Debug, Clone)]
pub struct AscentOptions {
    /// Stop once the ratio grows by less than this (relative) in one step...
    pub ratio_rtol: f64,
    /// ...and the ratio gradient is below this in the dual norm.
    pub stationarity_tol: f64,
    pub max_iterations: usize,
    /// Use a gradient ascent with backtracking instead of the fixed-point map.
    pub line_search_ascent: bool,
}

impl Default for AscentOptions {
    fn default() -> Self {
        Self {
            ratio_rtol: 1e-12,
            stationarity_tol: 1e-10,
            max_iterations: 20_000,
            line_search_ascent: false,
        }
    }
}

/// Starting field for the ascent.
#[derive(Debug, Clone)]
pub enum AscentStart {
    /// Product of half-sine waves.
    HalfSine,
    Field(DiscreteField),
    /// Deterministic pseudo-random field from a seed, taken in absolute value.
    Seed(u64),
}

fn ratio(s: &FiberScalars, gamma: f64) -> f64 {
    s.embedding_ratio(gamma)
}

/// Gradient of `R(u) = Q^{1/γ}/P^{1/2}` as a coefficient vector.
fn ratio_gradient(u: &DiscreteField, gamma: f64) -> Result<DiscreteField> {
    let s = fiber_scalars(u, gamma)?;
    let r = ratio(&s, gamma);
    let f = u.weighted_power(gamma);
    let ku = u.stiffness_apply();
    Ok(f.scaled(r / s.q).add_scaled(-r / s.p, &ku))
}

/// Dual norm of the ratio gradient at `u`, normalized to unit `H₀¹` norm.
pub fn ratio_stationarity(u: &DiscreteField, gamma: f64) -> Result<f64> {
    let un = u.normalized()?;
    dual_norm(&ratio_gradient(&un, gamma)?)
}

pub fn maximize_lambda(
    space: &Arc<DiscreteSpace>,
    params: &ProblemParams,
    start: AscentStart,
    opts: &AscentOptions,
) -> Result<ExtremalEstimate> {
    use rand::SeedableRng;
    let gamma = params.gamma;
    let init = match start {
        AscentStart::HalfSine => DiscreteField::half_sine(space),
        AscentStart::Field(f) => {
            if !Arc::ptr_eq(f.space(), space) && f.space().config() != space.config() {
                return Err(Error::SpaceMismatch);
            }
            f
        }
        AscentStart::Seed(seed) => {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            DiscreteField::random(space, &mut rng).abs()
        }
    };
    let mut u = init.normalized()?;
    let mut r = ratio(&fiber_scalars(&u, gamma)?, gamma);
    let mut iterations = 0;
    let mut converged = false;
    let mut step = 1.0;
    let mut best_stat = f64::INFINITY;
    let mut stale = 0;
    while iterations < opts.max_iterations {
        iterations += 1;
        let next = if opts.line_search_ascent {
            let g = ratio_gradient(&u, gamma)?;
            let dir = solve_shifted_laplacian_tol(space, 1.0, &g, 1e-12)?;
            let mut cand;
            loop {
                cand = u.add_scaled(step, &dir).normalized()?;
                if ratio(&fiber_scalars(&cand, gamma)?, gamma) >= r || step < 1e-12 {
                    break;
                }
                step *= 0.5;
            }
            step = (step * 2.0).min(1e3);
            cand
        } else {
            let f = u.weighted_power(gamma);
            solve_shifted_laplacian_tol(space, 1.0, &f, 1e-13)?.normalized()?
        };
        let r_next = ratio(&fiber_scalars(&next, gamma)?, gamma);
        let gain = (r_next - r) / r;
        // the fixed-point map is monotone in exact arithmetic; near the
        // maximizer the ratio only jitters at roundoff level
        if r_next >= r || !opts.line_search_ascent {
            u = next;
            r = r_next;
        }
        if gain < opts.ratio_rtol {
            let stat = ratio_stationarity(&u, gamma)?;
            if stat <= opts.stationarity_tol {
                converged = true;
                break;
            }
            if stat < 0.5 * best_stat {
                best_stat = stat;
                stale = 0;
            } else {
                stale += 1;
                if stale >= 50 {
                    break;
                }
            }
        }
    }
    finish(params, u, iterations, converged)
}

fn finish(
    params: &ProblemParams,
    maximizer: DiscreteField,
    iterations: usize,
    converged: bool,
) -> Result<ExtremalEstimate> {
    let gamma = params.gamma;
    let s = fiber_scalars(&maximizer, gamma)?;
    let lambda_star = lambda_of(params, &s);
    let c0 = params.constants().c0_agamma;
    let stationarity = ratio_stationarity(&maximizer, gamma)?;
    Ok(ExtremalEstimate {
        lambda_star,
        lambda0_star: c0 * lambda_star,
        sobolev_ratio: ratio(&s, gamma),
        maximizer,
        iterations,
        converged,
        stationarity,
    })
}

/// Estimates on a sequence of meshes plus a Richardson guess of the
/// continuum `λ*` assuming `O(h²)` error.
#[derive(Debug, Clone, Serialize)]
pub struct RefinementStudy {
    pub estimates: Vec<ExtremalEstimate>,
    /// Mesh width of the first axis per estimate.
    pub h: Vec<f64>,
    /// `λ*_{h_{k+1}} − λ*_{h_k}`.
    pub differences: Vec<f64>,
    pub extrapolated: Option<f64>,
}

pub fn refine_extremal(
    configs: &[crate::space::SpaceConfig],
    params: &ProblemParams,
    opts: &AscentOptions,
) -> Result<RefinementStudy> {
    for w in configs.windows(2) {
        let grows = w[0].n.len() == w[1].n.len() && w[0].n.iter().zip(&w[1].n).all(|(a, b)| b > a);
        if !grows {
            return Err(Error::InvalidConfig(
                "refinement needs strictly increasing node counts".into(),
            ));
        }
    }
    let mut estimates = Vec::with_capacity(configs.len());
    let mut h = Vec::with_capacity(configs.len());
    for cfg in configs {
        let space = crate::space::build_space(cfg.clone())?;
        h.push(space.spacing()[0]);
        estimates.push(maximize_lambda(
            &space,
            params,
            AscentStart::HalfSine,
            opts,
        )?);
    }
    let differences: Vec<f64> = estimates
        .windows(2)
        .map(|w| w[1].lambda_star - w[0].lambda_star)
        .collect();
    let extrapolated = (estimates.len() >= 2).then(|| {
        let k = estimates.len();
        let (h1, h2) = (h[k - 2], h[k - 1]);
        let (l1, l2) = (estimates[k - 2].lambda_star, estimates[k - 1].lambda_star);
        (h1 * h1 * l2 - h2 * h2 * l1) / (h1 * h1 - h2 * h2)
    });
    Ok(RefinementStudy {
        estimates,
        h,
        differences,
        extrapolated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fiber::{classify_fiber, FiberKind};
    use crate::space::{build_space, SpaceConfig};
    use rand::SeedableRng;
    use std::f64::consts::PI;

    fn params(gamma: f64) -> ProblemParams {
        ProblemParams::new(1.0, gamma, 0.0).unwrap()
    }

    #[test]
    fn estimate_identities() {
        let space = build_space(SpaceConfig::interval(1.0, 99)).unwrap();
        let p = params(3.0);
        let est = maximize_lambda(&space, &p, AscentStart::HalfSine, &Default::default()).unwrap();
        assert!(est.converged);
        assert_eq!(est.lambda0_star, p.constants().c0_agamma * est.lambda_star);
        let k = p.constants();
        let via_ratio = k.c_agamma * est.sobolev_ratio.powf(k.ratio_exponent);
        assert!((via_ratio - est.lambda_star).abs() <= 1e-12 * est.lambda_star);
        let again = lambda_of(&p, &fiber_scalars(&est.maximizer, 3.0).unwrap());
        assert!((again - est.lambda_star).abs() <= 1e-12 * est.lambda_star);
        assert!(est.stationarity <= 1e-8);
        assert!(est.lambda0_star < est.lambda_star);
        assert!((est.maximizer.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn near_linear_exponent_recovers_eigenvalue_ratio() {
        let space = build_space(SpaceConfig::interval(1.0, 99)).unwrap();
        let est = maximize_lambda(
            &space,
            &params(2.05),
            AscentStart::HalfSine,
            &Default::default(),
        )
        .unwrap();
        assert!(
            (est.sobolev_ratio * PI - 1.0).abs() < 0.02,
            "{}",
            est.sobolev_ratio
        );
        assert!(est.lambda_star.is_finite() && est.lambda_star > 0.0);
    }

    #[test]
    fn absolute_value_does_not_lower_the_ratio() {
        let space = build_space(SpaceConfig::interval(1.0, 49)).unwrap();
        let est = maximize_lambda(
            &space,
            &params(3.0),
            AscentStart::Seed(5),
            &Default::default(),
        )
        .unwrap();
        let r_abs = fiber_scalars(&est.maximizer.abs(), 3.0)
            .unwrap()
            .embedding_ratio(3.0);
        assert!(r_abs >= est.sobolev_ratio * (1.0 - 1e-15));
    }

    #[test]
    fn ascent_is_monotone() {
        let space = build_space(SpaceConfig::interval(1.0, 49)).unwrap();
        let p = params(3.3);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let mut u = DiscreteField::random(&space, &mut rng)
            .abs()
            .normalized()
            .unwrap();
        let mut r = fiber_scalars(&u, 3.3).unwrap().embedding_ratio(3.3);
        for _ in 0..60 {
            let f = u.weighted_power(3.3);
            u = solve_shifted_laplacian_tol(&space, 1.0, &f, 1e-13)
                .unwrap()
                .normalized()
                .unwrap();
            let r_next = fiber_scalars(&u, 3.3).unwrap().embedding_ratio(3.3);
            assert!(r_next >= r * (1.0 - 1e-13));
            r = r_next;
        }
        let _ = p;
    }

    #[test]
    fn line_search_cross_check_agrees() {
        let space = build_space(SpaceConfig::interval(1.0, 49)).unwrap();
        let p = params(3.0);
        let a = maximize_lambda(&space, &p, AscentStart::HalfSine, &Default::default()).unwrap();
        let opts = AscentOptions {
            line_search_ascent: true,
            ..Default::default()
        };
        let b = maximize_lambda(&space, &p, AscentStart::HalfSine, &opts).unwrap();
        assert!((a.lambda_star - b.lambda_star).abs() <= 1e-10 * a.lambda_star);
    }

    #[test]
    fn random_fields_are_monotone_above_lambda_star() {
        let space = build_space(SpaceConfig::interval(1.0, 99)).unwrap();
        let p = params(3.0);
        let est = maximize_lambda(&space, &p, AscentStart::HalfSine, &Default::default()).unwrap();
        let above = p.with_lambda(est.lambda_star * (1.0 + 1e-9)).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        for _ in 0..100 {
            let u = DiscreteField::random(&space, &mut rng);
            let c = classify_fiber(&above, &fiber_scalars(&u, 3.0).unwrap()).unwrap();
            assert_eq!(c.kind, FiberKind::Monotone);
        }
    }

    #[test]
    fn refinement_single_mesh_has_no_extrapolation() {
        let study = refine_extremal(
            &[SpaceConfig::interval(1.0, 49)],
            &params(3.0),
            &Default::default(),
        )
        .unwrap();
        assert_eq!(study.estimates.len(), 1);
        assert!(study.extrapolated.is_none());
        assert!(study.differences.is_empty());
    }

    #[test]
    fn refinement_differences_shrink() {
        let cfgs: Vec<_> = [49, 99, 199]
            .iter()
            .map(|n| SpaceConfig::interval(1.0, *n))
            .collect();
        let study = refine_extremal(&cfgs, &params(3.0), &Default::default()).unwrap();
        let d = &study.differences;
        assert!(d[1].abs() < d[0].abs(), "{d:?}");
        assert!(study.extrapolated.is_some());
    }

    #[test]
    fn refinement_rejects_shrinking_meshes() {
        let cfgs = [
            SpaceConfig::interval(1.0, 99),
            SpaceConfig::interval(1.0, 49),
        ];
        assert!(refine_extremal(&cfgs, &params(3.0), &Default::default()).is_err());
    }
}
