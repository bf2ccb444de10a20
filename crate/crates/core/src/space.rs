//! Discrete `H₀¹` spaces on intervals and rectangles.
//!
//! Unknowns are the values at interior nodes of a uniform grid (boundary nodes
//! are eliminated, which builds the Dirichlet condition into the vector). The
//! stiffness operator is the standard 3-point / 5-point stencil scaled by the
//! cell volume, so that `uᵀKu` approximates `∫|∇u|²` and coincides with the
//! P1 finite-element stiffness on a uniform (triangulated) grid. Integrals of
//! nonlinear terms use node quadrature with weights equal to the cell volume.
//! With that rule the discrete energy is an exact function of `(uᵀKu, Σ w|u|^γ)`
//! and its gradient is exact, so fiber algebra applies to discrete fields
//! without approximation.
//!
//! In 2D, node `(ix, iy)` is stored at `ix * ny + iy`.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fiber::{FiberScalars, ProblemParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Quadrature {
    /// Weights equal to the cell volume at every interior node.
    #[default]
    Nodal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceConfig {
    pub dim: usize,
    pub extent: Vec<f64>,
    pub n: Vec<usize>,
    pub quadrature: Quadrature,
}

impl SpaceConfig {
    pub fn interval(length: f64, n: usize) -> Self {
        Self {
            dim: 1,
            extent: vec![length],
            n: vec![n],
            quadrature: Quadrature::Nodal,
        }
    }

    pub fn rectangle(lx: f64, ly: f64, nx: usize, ny: usize) -> Self {
        Self {
            dim: 2,
            extent: vec![lx, ly],
            n: vec![nx, ny],
            quadrature: Quadrature::Nodal,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim != 1 && self.dim != 2 {
            return Err(Error::InvalidConfig(format!(
                "dim must be 1 or 2, got {}",
                self.dim
            )));
        }
        if self.extent.len() != self.dim || self.n.len() != self.dim {
            return Err(Error::InvalidConfig(format!(
                "expected {} extents and node counts, got {} and {}",
                self.dim,
                self.extent.len(),
                self.n.len()
            )));
        }
        if let Some(l) = self.extent.iter().find(|l| !(l.is_finite() && **l > 0.0)) {
            return Err(Error::InvalidConfig(format!(
                "extent must be positive, got {l}"
            )));
        }
        if let Some(n) = self.n.iter().find(|n| **n < 3) {
            return Err(Error::InvalidConfig(format!(
                "at least 3 interior nodes per axis required, got {n}"
            )));
        }
        Ok(())
    }

    pub fn spacing(&self) -> Vec<f64> {
        self.extent
            .iter()
            .zip(&self.n)
            .map(|(l, n)| l / (*n as f64 + 1.0))
            .collect()
    }

    pub fn unknowns(&self) -> usize {
        self.n.iter().product()
    }
}

/// An assembled space. Immutable after construction; share it through `Arc`.
#[derive(Debug)]
pub struct DiscreteSpace {
    config: SpaceConfig,
    h: Vec<f64>,
    /// Stiffness diagonal and per-axis off-diagonal couplings (negative).
    diag: f64,
    coupling: Vec<f64>,
    mass_weights: Vec<f64>,
}

pub fn build_space(config: SpaceConfig) -> Result<Arc<DiscreteSpace>> {
    config.validate()?;
    let h = config.spacing();
    let cell: f64 = h.iter().product();
    // ∫∂_k u ∂_k v ≈ cell · (2u_i − u_{i−1} − u_{i+1}) / h_k²
    let coupling: Vec<f64> = h.iter().map(|hk| cell / (hk * hk)).collect();
    let diag = 2.0 * coupling.iter().sum::<f64>();
    let mass_weights = vec![cell; config.unknowns()];
    Ok(Arc::new(DiscreteSpace {
        config,
        h,
        diag,
        coupling,
        mass_weights,
    }))
}

impl DiscreteSpace {
    pub fn config(&self) -> &SpaceConfig {
        &self.config
    }

    pub fn spacing(&self) -> &[f64] {
        &self.h
    }

    pub fn unknowns(&self) -> usize {
        self.mass_weights.len()
    }

    pub fn mass_weights(&self) -> &[f64] {
        &self.mass_weights
    }

    /// Diagonal entry and per-axis off-diagonal magnitude of the stiffness.
    pub fn stencil(&self) -> (f64, &[f64]) {
        (self.diag, &self.coupling)
    }

    /// Coordinates of node `idx`.
    pub fn node(&self, idx: usize) -> Vec<f64> {
        match self.config.dim {
            1 => vec![(idx as f64 + 1.0) * self.h[0]],
            _ => {
                let ny = self.config.n[1];
                let (ix, iy) = (idx / ny, idx % ny);
                vec![(ix as f64 + 1.0) * self.h[0], (iy as f64 + 1.0) * self.h[1]]
            }
        }
    }

    /// `out = K u`.
    pub fn apply_stiffness(&self, u: &[f64], out: &mut [f64]) {
        debug_assert_eq!(u.len(), self.unknowns());
        match self.config.dim {
            1 => {
                let n = u.len();
                let c = self.coupling[0];
                for i in 0..n {
                    let left = if i > 0 { u[i - 1] } else { 0.0 };
                    let right = if i + 1 < n { u[i + 1] } else { 0.0 };
                    out[i] = self.diag * u[i] - c * (left + right);
                }
            }
            _ => {
                let (nx, ny) = (self.config.n[0], self.config.n[1]);
                let (cx, cy) = (self.coupling[0], self.coupling[1]);
                for ix in 0..nx {
                    for iy in 0..ny {
                        let k = ix * ny + iy;
                        let mut s = self.diag * u[k];
                        if ix > 0 {
                            s -= cx * u[k - ny];
                        }
                        if ix + 1 < nx {
                            s -= cx * u[k + ny];
                        }
                        if iy > 0 {
                            s -= cy * u[k - 1];
                        }
                        if iy + 1 < ny {
                            s -= cy * u[k + 1];
                        }
                        out[k] = s;
                    }
                }
            }
        }
    }

    /// Sum of squared edge differences weighted like the stiffness: an
    /// assembly of `uᵀKu` that does not go through the operator.
    fn gradient_energy_by_edges(&self, u: &[f64]) -> f64 {
        let mut acc = 0.0;
        match self.config.dim {
            1 => {
                let c = self.coupling[0];
                let mut prev = 0.0;
                for &x in u.iter().chain(std::iter::once(&0.0)) {
                    acc += c * (x - prev) * (x - prev);
                    prev = x;
                }
            }
            _ => {
                let (nx, ny) = (self.config.n[0], self.config.n[1]);
                let (cx, cy) = (self.coupling[0], self.coupling[1]);
                let at = |ix: isize, iy: isize| -> f64 {
                    if ix < 0 || iy < 0 || ix >= nx as isize || iy >= ny as isize {
                        0.0
                    } else {
                        u[ix as usize * ny + iy as usize]
                    }
                };
                for ix in -1..nx as isize {
                    for iy in 0..ny as isize {
                        let d = at(ix + 1, iy) - at(ix, iy);
                        acc += cx * d * d;
                    }
                }
                for ix in 0..nx as isize {
                    for iy in -1..ny as isize {
                        let d = at(ix, iy + 1) - at(ix, iy);
                        acc += cy * d * d;
                    }
                }
            }
        }
        acc
    }
}

/// A function in the discrete `H₀¹` space.
#[derive(Debug, Clone)]
pub struct DiscreteField {
    values: Vec<f64>,
    space: Arc<DiscreteSpace>,
}

impl DiscreteField {
    pub fn zeros(space: &Arc<DiscreteSpace>) -> Self {
        Self {
            values: vec![0.0; space.unknowns()],
            space: Arc::clone(space),
        }
    }

    pub fn from_values(space: &Arc<DiscreteSpace>, values: Vec<f64>) -> Result<Self> {
        if values.len() != space.unknowns() {
            return Err(Error::Domain(format!(
                "field has {} values, space has {} unknowns",
                values.len(),
                space.unknowns()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("field values must be finite".into()));
        }
        Ok(Self {
            values,
            space: Arc::clone(space),
        })
    }

    /// Interpolant of `f` at the interior nodes.
    pub fn from_fn<F: Fn(&[f64]) -> f64>(space: &Arc<DiscreteSpace>, f: F) -> Self {
        let values = (0..space.unknowns()).map(|i| f(&space.node(i))).collect();
        Self {
            values,
            space: Arc::clone(space),
        }
    }

    /// Product of half-sine waves, the shape of the first Dirichlet
    /// eigenfunction.
    pub fn half_sine(space: &Arc<DiscreteSpace>) -> Self {
        let ext = space.config().extent.clone();
        Self::from_fn(space, |x| {
            x.iter()
                .zip(&ext)
                .map(|(xi, l)| (PI * xi / l).sin())
                .product()
        })
    }

    /// Independent uniform values in `[-1, 1]`.
    pub fn random<R: Rng + ?Sized>(space: &Arc<DiscreteSpace>, rng: &mut R) -> Self {
        let values = (0..space.unknowns())
            .map(|_| rng.gen_range(-1.0..=1.0))
            .collect();
        Self {
            values,
            space: Arc::clone(space),
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn space(&self) -> &Arc<DiscreteSpace> {
        &self.space
    }

    pub fn same_space(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.space, &other.space) || self.space.config == other.space.config
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| *v == 0.0)
    }

    /// Euclidean pairing of coefficient vectors.
    pub fn dot(&self, other: &Self) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| x * y)
            .sum()
    }

    /// `‖u‖² = uᵀKu`.
    pub fn norm_sq(&self) -> f64 {
        self.dot(&self.stiffness_apply())
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// `Σ w_i |u_i|^γ`.
    pub fn power_integral(&self, gamma: f64) -> f64 {
        self.values
            .iter()
            .zip(self.space.mass_weights())
            .map(|(u, w)| w * u.abs().powf(gamma))
            .sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn stiffness_apply(&self) -> Self {
        let mut out = vec![0.0; self.values.len()];
        self.space.apply_stiffness(&self.values, &mut out);
        Self {
            values: out,
            space: Arc::clone(&self.space),
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            values: self.values.iter().map(|v| c * v).collect(),
            space: Arc::clone(&self.space),
        }
    }

    pub fn abs(&self) -> Self {
        Self {
            values: self.values.iter().map(|v| v.abs()).collect(),
            space: Arc::clone(&self.space),
        }
    }

    /// `self + c·other`.
    pub fn add_scaled(&self, c: f64, other: &Self) -> Self {
        Self {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(x, y)| x + c * y)
                .collect(),
            space: Arc::clone(&self.space),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add_scaled(-1.0, other)
    }

    /// Rescaled to unit `H₀¹` norm.
    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if n == 0.0 {
            return Err(Error::ZeroField);
        }
        Ok(self.scaled(1.0 / n))
    }

    /// Mass-weighted nonlinearity `w_i |u_i|^{γ−2} u_i`.
    pub fn weighted_power(&self, gamma: f64) -> Self {
        Self {
            values: self
                .values
                .iter()
                .zip(self.space.mass_weights())
                .map(|(u, w)| w * u.abs().powf(gamma - 2.0) * u)
                .collect(),
            space: Arc::clone(&self.space),
        }
    }

    /// Number of sign changes among nonzero coefficients is zero.
    pub fn is_sign_constant(&self) -> bool {
        let pos = self.values.iter().any(|v| *v > 0.0);
        let neg = self.values.iter().any(|v| *v < 0.0);
        !(pos && neg)
    }
}

pub fn fiber_scalars(u: &DiscreteField, gamma: f64) -> Result<FiberScalars> {
    if u.is_zero() {
        return Err(Error::ZeroField);
    }
    FiberScalars::new(u.norm_sq(), u.power_integral(gamma))
}

/// `Φ_λ(u)`, assembled from edge differences and node quadrature.
pub fn energy(params: &ProblemParams, u: &DiscreteField) -> f64 {
    let p = u.space.gradient_energy_by_edges(&u.values);
    let q = u.power_integral(params.gamma);
    0.5 * params.a * p + 0.25 * params.lambda * p * p - q / params.gamma
}

/// Coefficient vector `r` with `⟨r, v⟩ = Φ′_λ(u)v` for every `v`:
/// `(a + λP)·K u − w|u|^{γ−2}u`.
pub fn gradient(params: &ProblemParams, u: &DiscreteField) -> DiscreteField {
    let ku = u.stiffness_apply();
    let p = u.dot(&ku);
    let coef = params.a + params.lambda * p;
    let f = u.weighted_power(params.gamma);
    let values = ku
        .values
        .iter()
        .zip(&f.values)
        .map(|(k, f)| coef * k - f)
        .collect();
    DiscreteField {
        values,
        space: Arc::clone(&u.space),
    }
}

/// Relative mismatch between `⟨gradient(u), v⟩` and the central difference
/// `(Φ(u+hv) − Φ(u−hv))/2h`.
pub fn fd_gradient_error(
    params: &ProblemParams,
    u: &DiscreteField,
    v: &DiscreteField,
    h: f64,
) -> f64 {
    let analytic = gradient(params, u).dot(v);
    let fd =
        (energy(params, &u.add_scaled(h, v)) - energy(params, &u.add_scaled(-h, v))) / (2.0 * h);
    (fd - analytic).abs() / analytic.abs().max(f64::MIN_POSITIVE)
}

/// Default relative residual for the conjugate-gradient solver.
pub const CG_RTOL: f64 = 1e-10;

/// Solve `coefficient · K v = rhs` by unpreconditioned conjugate gradients.
pub fn solve_shifted_laplacian(
    space: &Arc<DiscreteSpace>,
    coefficient: f64,
    rhs: &DiscreteField,
) -> Result<DiscreteField> {
    solve_shifted_laplacian_tol(space, coefficient, rhs, CG_RTOL)
}

pub fn solve_shifted_laplacian_tol(
    space: &Arc<DiscreteSpace>,
    coefficient: f64,
    rhs: &DiscreteField,
    rtol: f64,
) -> Result<DiscreteField> {
    if !(coefficient > 0.0 && coefficient.is_finite()) {
        return Err(Error::Domain(format!(
            "shift coefficient must be positive, got {coefficient}"
        )));
    }
    let n = space.unknowns();
    if rhs.values.len() != n {
        return Err(Error::SpaceMismatch);
    }
    let b = &rhs.values;
    let b_norm = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut x = vec![0.0; n];
    if b_norm == 0.0 {
        return Ok(DiscreteField::zeros(space));
    }
    let mut r = b.clone();
    let mut p = r.clone();
    let mut ap = vec![0.0; n];
    let mut rr: f64 = r.iter().map(|v| v * v).sum();
    let cap = 10 * n;
    for _ in 0..cap {
        if rr.sqrt() <= rtol * b_norm {
            break;
        }
        space.apply_stiffness(&p, &mut ap);
        ap.iter_mut().for_each(|v| *v *= coefficient);
        let pap: f64 = p.iter().zip(&ap).map(|(x, y)| x * y).sum();
        let alpha = rr / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rr_new: f64 = r.iter().map(|v| v * v).sum();
        let beta = rr_new / rr;
        rr = rr_new;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
    }
    // true residual, guards against drift of the recursive one
    space.apply_stiffness(&x, &mut ap);
    let res = ap
        .iter()
        .zip(b)
        .map(|(kx, bi)| (coefficient * kx - bi).powi(2))
        .sum::<f64>()
        .sqrt();
    // tighter requests are best effort down to the roundoff floor of CG
    if res > (10.0 * rtol).max(CG_RTOL) * b_norm {
        return Err(Error::NonConvergence {
            solver: "conjugate gradients",
            iterations: cap,
            residual: res / b_norm,
        });
    }
    Ok(DiscreteField {
        values: x,
        space: Arc::clone(space),
    })
}

/// `H⁻¹` norm of a coefficient vector: `sqrt(rᵀK⁻¹r)`.
pub fn dual_norm(r: &DiscreteField) -> Result<f64> {
    let z = solve_shifted_laplacian_tol(&r.space, 1.0, r, 1e-12)?;
    Ok(r.dot(&z).max(0.0).sqrt())
}

/// `ψ″_{λ,u}(1) = aP + 3λP² − (γ−1)Q`: positive on `N⁺`, negative on `N⁻`.
pub fn psi_second_at_one(params: &ProblemParams, u: &DiscreteField) -> Result<f64> {
    let s = fiber_scalars(u, params.gamma)?;
    Ok(params.a * s.p + 3.0 * params.lambda * s.p * s.p - (params.gamma - 1.0) * s.q)
}

/// `ψ′_{λ,u}(1) = aP + λP² − Q`.
pub fn psi_first_at_one(params: &ProblemParams, u: &DiscreteField) -> Result<f64> {
    let s = fiber_scalars(u, params.gamma)?;
    Ok(params.a * s.p + params.lambda * s.p * s.p - s.q)
}

/// Smallest eigenvalue of `K v = μ M v` by inverse iteration, with the
/// corresponding eigenvector normalized to unit `H₀¹` norm.
pub fn first_dirichlet_eigenpair(space: &Arc<DiscreteSpace>) -> Result<(f64, DiscreteField)> {
    let mut v = DiscreteField::half_sine(space).add_scaled(
        1e-3,
        &DiscreteField::from_fn(space, |x| x.iter().product::<f64>()),
    );
    let mut mu = f64::INFINITY;
    for _ in 0..500 {
        let mv = DiscreteField {
            values: v
                .values
                .iter()
                .zip(space.mass_weights())
                .map(|(x, w)| x * w)
                .collect(),
            space: Arc::clone(space),
        };
        let next = solve_shifted_laplacian_tol(space, 1.0, &mv, 1e-13)?.normalized()?;
        let m_norm: f64 = next
            .values
            .iter()
            .zip(space.mass_weights())
            .map(|(x, w)| w * x * x)
            .sum();
        let mu_new = 1.0 / m_norm;
        v = next;
        if (mu - mu_new).abs() <= 1e-15 * mu_new {
            mu = mu_new;
            break;
        }
        mu = mu_new;
    }
    Ok((mu, v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn config_validation() {
        assert!(build_space(SpaceConfig::interval(1.0, 2)).is_err());
        assert!(build_space(SpaceConfig::interval(-1.0, 5)).is_err());
        let mut c = SpaceConfig::interval(1.0, 5);
        c.dim = 3;
        assert!(build_space(c).is_err());
        let mut c = SpaceConfig::rectangle(1.0, 1.0, 5, 5);
        c.n.pop();
        assert!(build_space(c).is_err());
    }

    #[test]
    fn one_d_stencil_entries() {
        let space = build_space(SpaceConfig::interval(1.0, 3)).unwrap();
        let h = 0.25;
        let mut col = vec![0.0; 3];
        space.apply_stiffness(&[1.0, 0.0, 0.0], &mut col);
        assert!((col[0] - 2.0 / h).abs() < 1e-12);
        assert!((col[1] + 1.0 / h).abs() < 1e-12);
        assert_eq!(col[2], 0.0);
        assert_eq!(space.mass_weights(), &[h, h, h]);
    }

    #[test]
    fn stiffness_is_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for cfg in [
            SpaceConfig::interval(2.0, 17),
            SpaceConfig::rectangle(1.0, 2.0, 7, 9),
        ] {
            let space = build_space(cfg).unwrap();
            for _ in 0..10 {
                let u = DiscreteField::random(&space, &mut rng);
                let v = DiscreteField::random(&space, &mut rng);
                let a = u.stiffness_apply().dot(&v);
                let b = v.stiffness_apply().dot(&u);
                assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
                assert!(u.norm_sq() > 0.0);
            }
        }
    }

    #[test]
    fn edge_assembly_matches_operator() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for cfg in [
            SpaceConfig::interval(1.0, 11),
            SpaceConfig::rectangle(1.5, 1.0, 6, 8),
        ] {
            let space = build_space(cfg).unwrap();
            let u = DiscreteField::random(&space, &mut rng);
            let a = space.gradient_energy_by_edges(u.values());
            assert!((a - u.norm_sq()).abs() <= 1e-12 * a);
        }
    }

    #[test]
    fn eigenvalue_one_d_matches_closed_form() {
        let space = build_space(SpaceConfig::interval(1.0, 99)).unwrap();
        let (mu, v) = first_dirichlet_eigenpair(&space).unwrap();
        let h = 0.01f64;
        let exact_discrete = 4.0 / (h * h) * (PI * h / 2.0).sin().powi(2);
        assert!((mu - exact_discrete).abs() < 1e-9 * exact_discrete);
        assert!((mu - PI * PI).abs() < 1e-3 * PI * PI);
        assert!(v.is_sign_constant());
    }

    #[test]
    fn eigenvalue_square() {
        let space = build_space(SpaceConfig::rectangle(1.0, 1.0, 31, 31)).unwrap();
        let (mu, _) = first_dirichlet_eigenpair(&space).unwrap();
        assert!((mu - 2.0 * PI * PI).abs() < 1e-2 * 2.0 * PI * PI);
    }

    #[test]
    fn eigenvalue_error_is_second_order() {
        let errs: Vec<f64> = [24, 49, 99]
            .iter()
            .map(|n| {
                let s = build_space(SpaceConfig::interval(1.0, *n)).unwrap();
                (first_dirichlet_eigenpair(&s).unwrap().0 - PI * PI).abs()
            })
            .collect();
        for w in errs.windows(2) {
            let ratio = w[0] / w[1];
            assert!((3.8..4.2).contains(&ratio), "ratio {ratio}");
        }
    }

    #[test]
    fn zero_field_rejected() {
        let space = build_space(SpaceConfig::interval(1.0, 5)).unwrap();
        assert!(matches!(
            fiber_scalars(&DiscreteField::zeros(&space), 3.0),
            Err(Error::ZeroField)
        ));
    }

    #[test]
    fn sine_gradient_norm() {
        let space = build_space(SpaceConfig::interval(1.0, 399)).unwrap();
        let u = DiscreteField::half_sine(&space);
        let p = fiber_scalars(&u, 3.0).unwrap().p;
        assert!((p - PI * PI / 2.0).abs() < 1e-4);
    }

    #[test]
    fn scalars_scale_homogeneously() {
        let space = build_space(SpaceConfig::rectangle(1.0, 1.0, 9, 9)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let u = DiscreteField::random(&space, &mut rng);
        let s = fiber_scalars(&u, 2.7).unwrap();
        for c in [-3.0, 0.1, 7.5] {
            let sc = fiber_scalars(&u.scaled(c), 2.7).unwrap();
            let expect = s.scaled(c, 2.7);
            assert!((sc.p - expect.p).abs() <= 1e-13 * expect.p);
            assert!((sc.q - expect.q).abs() <= 1e-13 * expect.q);
        }
    }

    #[test]
    fn energy_of_zero_and_limit() {
        let space = build_space(SpaceConfig::interval(1.0, 9)).unwrap();
        let params = ProblemParams::new(1.0, 3.0, 0.5).unwrap();
        assert_eq!(energy(&params, &DiscreteField::zeros(&space)), 0.0);
        let u = DiscreteField::half_sine(&space);
        let s = fiber_scalars(&u, 3.0).unwrap();
        let lim = ProblemParams::limit(1.0, 3.0).unwrap();
        let e = energy(&lim, &u);
        assert!((e - (0.5 * s.p - s.q / 3.0)).abs() < 1e-13 * e.abs());
    }

    #[test]
    fn gradient_matches_central_differences() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for cfg in [
            SpaceConfig::interval(1.0, 99),
            SpaceConfig::rectangle(1.0, 1.0, 15, 15),
        ] {
            let space = build_space(cfg).unwrap();
            let params = ProblemParams::new(1.3, 2.6, 0.7).unwrap();
            for _ in 0..20 {
                let u = DiscreteField::random(&space, &mut rng);
                let v = DiscreteField::random(&space, &mut rng);
                assert!(fd_gradient_error(&params, &u, &v, 1e-5) <= 1e-6);
            }
        }
    }

    #[test]
    fn gradient_of_zero_is_zero() {
        let space = build_space(SpaceConfig::interval(1.0, 9)).unwrap();
        let params = ProblemParams::new(1.0, 3.0, 0.5).unwrap();
        assert!(gradient(&params, &DiscreteField::zeros(&space)).is_zero());
    }

    #[test]
    fn poisson_with_unit_load() {
        let space = build_space(SpaceConfig::interval(1.0, 49)).unwrap();
        let rhs = DiscreteField::from_fn(&space, |_| 1.0).weighted_power(2.0);
        let v = solve_shifted_laplacian(&space, 1.0, &rhs).unwrap();
        let exact = DiscreteField::from_fn(&space, |x| x[0] * (1.0 - x[0]) / 2.0);
        // the 3-point stencil is exact on quadratics
        assert!(v.sub(&exact).max_abs() < 1e-10);
        let v2 = solve_shifted_laplacian(&space, 4.0, &rhs).unwrap();
        assert!(v2.scaled(4.0).sub(&v).max_abs() < 1e-10);
        let z = solve_shifted_laplacian(&space, 1.0, &DiscreteField::zeros(&space)).unwrap();
        assert!(z.is_zero());
        assert!(solve_shifted_laplacian(&space, 0.0, &rhs).is_err());
    }

    #[test]
    fn psi_second_classifies_scaled_fields() {
        use crate::fiber::{classify_fiber, degenerate_point, lambda_of};
        let space = build_space(SpaceConfig::interval(1.0, 9)).unwrap();
        let u = DiscreteField::half_sine(&space).normalized().unwrap();
        let base = ProblemParams::new(1.0, 3.0, 0.0).unwrap();
        let s = fiber_scalars(&u, 3.0).unwrap();
        let at_fold = base.with_lambda(lambda_of(&base, &s)).unwrap();
        let v = u.scaled(degenerate_point(&at_fold, &s));
        let sv = fiber_scalars(&v, 3.0).unwrap();
        assert!(psi_second_at_one(&at_fold, &v).unwrap().abs() < 1e-12 * sv.p);
        assert!(psi_first_at_one(&at_fold, &v).unwrap().abs() < 1e-12 * sv.p);

        let below = base.with_lambda(0.8 * lambda_of(&base, &s)).unwrap();
        let c = classify_fiber(&below, &s).unwrap();
        assert!(psi_second_at_one(&below, &u.scaled(c.t_plus.unwrap())).unwrap() > 0.0);
        assert!(psi_second_at_one(&below, &u.scaled(c.t_minus.unwrap())).unwrap() < 0.0);
    }
}
