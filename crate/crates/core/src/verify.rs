//! The acceptance suite: ten numbered criteria, each reported as one line with
//! the measured value, the tolerance and PASS or FAIL.
//!
//! Report text carries no timings so that two runs with the same config are
//! byte-identical.

use std::cell::OnceCell;
use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::branch::{
    asymptotic_study, bracket_lambda0, continue_to_lambda_star, limit_problem, project_nehari,
    DescentOptions, NehariSign,
};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::extremal::{maximize_lambda, AscentOptions, AscentStart, ExtremalEstimate};
use crate::fiber::{
    classify_fiber, degenerate_point, eval_psi, eval_psi_derivs, lambda0_of, lambda_of, n0_energy,
    zero_energy_point, FiberKind, FiberScalars, ProblemParams,
};
use crate::shooting::{continuum_shooting, discrete_shooting};
use crate::space::{
    build_space, fd_gradient_error, fiber_scalars, first_dirichlet_eigenpair,
    solve_shifted_laplacian, DiscreteField, DiscreteSpace, SpaceConfig,
};
use crate::sweep::{run_sweep, RowStatus, SweepOptions, SweepTable};

#[derive(Debug, Clone, PartialEq)]
pub struct CriterionResult {
    pub id: u8,
    pub name: &'static str,
    pub measured: String,
    pub tolerance: String,
    pub pass: bool,
}

impl CriterionResult {
    pub fn line(&self) -> String {
        format!(
            "[{}] {:>2} {:<20} measured: {} | tolerance: {}",
            if self.pass { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.measured,
            self.tolerance
        )
    }

    fn failed(id: u8, name: &'static str, err: &Error) -> Self {
        Self {
            id,
            name,
            measured: format!("error[{}]: {err}", err.kind()),
            tolerance: "-".into(),
            pass: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub results: Vec<CriterionResult>,
}

impl VerifyReport {
    pub fn all_pass(&self) -> bool {
        self.results.iter().all(|r| r.pass)
    }

    pub fn text(&self) -> String {
        let mut o = String::new();
        for r in &self.results {
            o.push_str(&r.line());
            o.push('\n');
        }
        let passed = self.results.iter().filter(|r| r.pass).count();
        o.push_str(&format!("summary: {passed}/{} PASS\n", self.results.len()));
        o
    }
}

fn rel(x: f64, y: f64) -> f64 {
    (x - y).abs() / y.abs()
}

fn smoothed(space: &Arc<DiscreteSpace>, u: DiscreteField, times: usize) -> Result<DiscreteField> {
    let mut u = u;
    for _ in 0..times {
        u = solve_shifted_laplacian(space, 1.0, &u)?;
    }
    Ok(u)
}

/// Seeded fields of varying smoothness: raw noise, noise smoothed by one to
/// three inverse-stiffness solves, and their absolute values.
fn seeded_fields(
    space: &Arc<DiscreteSpace>,
    seed: u64,
    count: usize,
) -> Result<Vec<DiscreteField>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let raw = DiscreteField::random(space, &mut rng);
            let raw = if i % 2 == 0 { raw.abs() } else { raw };
            smoothed(space, raw, (i / 2) % 4)
        })
        .collect()
}

/// Shared state of one suite run: the configured space and its extremal
/// estimate, computed on first use.
pub struct Verifier {
    cfg: RunConfig,
    space: Arc<DiscreteSpace>,
    extremal: OnceCell<ExtremalEstimate>,
    sweep: OnceCell<SweepTable>,
}

impl Verifier {
    pub fn new(cfg: &RunConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            space: build_space(cfg.space.clone())?,
            cfg: cfg.clone(),
            extremal: OnceCell::new(),
            sweep: OnceCell::new(),
        })
    }

    fn base(&self) -> Result<ProblemParams> {
        self.cfg.params(0.0)
    }

    fn descent(&self) -> DescentOptions {
        DescentOptions {
            residual_tol: self.cfg.tolerances.residual,
            cg_rtol: self.cfg.tolerances.cg,
            ..Default::default()
        }
    }

    pub fn extremal(&self) -> Result<&ExtremalEstimate> {
        if let Some(e) = self.extremal.get() {
            return Ok(e);
        }
        let e = maximize_lambda(
            &self.space,
            &self.base()?,
            AscentStart::HalfSine,
            &AscentOptions::default(),
        )?;
        Ok(self.extremal.get_or_init(|| e))
    }

    pub fn sweep(&self) -> Result<&SweepTable> {
        if let Some(t) = self.sweep.get() {
            return Ok(t);
        }
        let ext = self.extremal()?;
        let lambdas = self.cfg.sweep_lambdas(Some(ext.lambda_star))?;
        let opts = SweepOptions {
            descent: self.descent(),
            path_points: self.cfg.path_points,
            rho_fraction: self.cfg.rho_fraction,
            warm_start: self.cfg.sweep.warm_start,
            parallel: self.cfg.sweep.parallel,
        };
        let t = run_sweep(&self.space, &self.base()?, ext, &lambdas, &opts)?;
        Ok(self.sweep.get_or_init(|| t))
    }

    pub fn criterion(&self, id: u8) -> CriterionResult {
        let (name, r): (&'static str, Result<CriterionResult>) = match id {
            1 => ("fiber-closed-forms", self.c1()),
            2 => ("fiber-random-suite", self.c2()),
            3 => ("discretization", self.c3()),
            4 => ("extremal", self.c4()),
            5 => ("branch-structure", self.c5()),
            6 => ("collapse-at-lambda*", self.c6()),
            7 => ("nonexistence", self.c7()),
            8 => ("asymptotics", self.c8()),
            9 => ("limit-problem", self.c9()),
            _ => ("unknown", Err(Error::Domain(format!("no criterion {id}")))),
        };
        r.unwrap_or_else(|e| CriterionResult::failed(id, name, &e))
    }

    /// Criteria 1 to 9.
    pub fn run(&self) -> Vec<CriterionResult> {
        (1..=9).map(|id| self.criterion(id)).collect()
    }

    fn c1(&self) -> Result<CriterionResult> {
        let tol = self.cfg.tolerances.fiber;
        let p = ProblemParams::new(1.0, 3.0, 0.25)?;
        let s = FiberScalars::new(1.0, 1.0)?;
        let lam = lambda_of(&p, &s);
        let t = degenerate_point(&p, &s);
        let lam0 = lambda0_of(&p, &s);
        let (t0, _) = zero_energy_point(&p, &s);
        let psi = eval_psi(&p.with_lambda(lam)?, &s, t)?;
        let n0 = n0_energy(&p)?;
        let errs = [
            rel(lam, 0.25),
            rel(t, 2.0),
            rel(lam0, 2.0 / 9.0),
            rel(t0, 3.0),
            rel(psi, 1.0 / 3.0),
            rel(n0, 1.0 / 3.0),
        ];
        let worst = errs.iter().cloned().fold(0.0, f64::max);
        Ok(CriterionResult {
            id: 1,
            name: "fiber-closed-forms",
            measured: format!(
                "lambda={lam:e} t={t:e} lambda0={lam0:e} t0={t0:e} psi={psi:e} n0={n0:e} max_rel_err={worst:e}"
            ),
            tolerance: format!("{tol:e} relative"),
            pass: worst <= tol,
        })
    }

    fn c2(&self) -> Result<CriterionResult> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.seed);
        let (mut zero_res, mut coalesce) = (0.0f64, 0.0f64);
        let (mut order_ok, mut monotone_ok) = (true, true);
        let grid: Vec<f64> = (0..41)
            .map(|i| 10f64.powf(-3.0 + 0.15 * i as f64))
            .collect();
        for _ in 0..1000 {
            let a = rng.gen_range(0.1..=10.0);
            let gamma = rng.gen_range(2.1..=3.9);
            let p = 10f64.powf(rng.gen_range(-3.0..=3.0));
            let q = 10f64.powf(rng.gen_range(-3.0..=3.0));
            let s = FiberScalars::new(p, q)?;
            let base = ProblemParams::new(a, gamma, 0.0)?;
            let lam = lambda_of(&base, &s);
            let (t0, lam0) = zero_energy_point(&base, &s);
            order_ok &= lam0 < lam;

            let at0 = base.with_lambda(lam0)?;
            // each residual against the size of its leading term
            let psi = eval_psi(&at0, &s, t0)?;
            let (d1, _) = eval_psi_derivs(&at0, &s, t0)?;
            zero_res = zero_res
                .max(psi.abs() / (0.5 * a * p * t0 * t0))
                .max(d1.abs() / (t0 * a * p));

            let mut last = 0;
            for f in grid.iter().chain([1.0].iter()) {
                let kind = classify_fiber(&base.with_lambda(lam * f)?, &s)?.kind;
                let rank = match kind {
                    FiberKind::TwoCritical => 0,
                    FiberKind::Degenerate => 1,
                    FiberKind::Monotone => 2,
                };
                if *f == 1.0 {
                    monotone_ok &= kind == FiberKind::Degenerate;
                } else {
                    monotone_ok &= rank >= last && rank != 1;
                    last = rank;
                }
            }

            let td = degenerate_point(&base, &s);
            let near = classify_fiber(&base.with_lambda(lam * (1.0 - 1e-10))?, &s)?;
            let (tm, tp) = (near.t_minus.unwrap_or(0.0), near.t_plus.unwrap_or(0.0));
            let at = classify_fiber(&base.with_lambda(lam)?, &s)?;
            coalesce = coalesce
                .max(rel(0.5 * (tm + tp), td))
                .max(rel(at.t_deg.unwrap_or(0.0), td));
        }
        let pass = zero_res <= 1e-10 && order_ok && monotone_ok && coalesce <= 1e-8;
        Ok(CriterionResult {
            id: 2,
            name: "fiber-random-suite",
            measured: format!(
                "samples=1000 zero_energy_residual={zero_res:e} lambda0<lambda={order_ok} transition_monotone={monotone_ok} coalescence={coalesce:e}"
            ),
            tolerance: "residual 1e-10, coalescence 1e-8".into(),
            pass,
        })
    }

    fn c3(&self) -> Result<CriterionResult> {
        let s1 = build_space(SpaceConfig::interval(1.0, 99))?;
        let s2 = build_space(SpaceConfig::rectangle(1.0, 1.0, 31, 31))?;
        let (mu1, _) = first_dirichlet_eigenpair(&s1)?;
        let (mu2, _) = first_dirichlet_eigenpair(&s2)?;
        let e1 = rel(mu1, PI * PI);
        let e2 = rel(mu2, 2.0 * PI * PI);
        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.seed.wrapping_add(3));
        let params = ProblemParams::new(self.cfg.a, self.cfg.gamma, 0.5)?;
        let mut fd = 0.0f64;
        for space in [&s1, &s2] {
            for _ in 0..20 {
                let u = DiscreteField::random(space, &mut rng);
                let v = DiscreteField::random(space, &mut rng);
                fd = fd.max(fd_gradient_error(&params, &u, &v, 1e-5));
            }
        }
        Ok(CriterionResult {
            id: 3,
            name: "discretization",
            measured: format!("eig1d_rel={e1:e} eig2d_rel={e2:e} fd_gradient_rel={fd:e}"),
            tolerance: "1e-3 (1D), 1e-2 (2D), 1e-6 (gradient)".into(),
            pass: e1 <= 1e-3 && e2 <= 1e-2 && fd <= 1e-6,
        })
    }

    fn c4(&self) -> Result<CriterionResult> {
        let ext = self.extremal()?;
        let base = self.base()?;
        let c0 = base.constants().c0_agamma;
        let exact = ext.lambda0_star == c0 * ext.lambda_star;
        let lam_max = lambda_of(&base, &fiber_scalars(&ext.maximizer, base.gamma)?);
        let lam_err = rel(lam_max, ext.lambda_star);
        let above = base.with_lambda(ext.lambda_star * (1.0 + 1e-10))?;
        let mut fields = seeded_fields(&self.space, self.cfg.seed, 99)?;
        fields.push(ext.maximizer.clone());
        let mut monotone = 0;
        for u in &fields {
            if classify_fiber(&above, &fiber_scalars(u, base.gamma)?)?.kind == FiberKind::Monotone {
                monotone += 1;
            }
        }
        let pass = exact
            && lam_err <= 1e-12
            && monotone == fields.len()
            && ext.converged
            && ext.lambda0_star < ext.lambda_star;
        Ok(CriterionResult {
            id: 4,
            name: "extremal",
            measured: format!(
                "lambda*={:e} lambda0*={:e} ratio_exact={exact} lambda(maximizer)_rel={lam_err:e} monotone_above={monotone}/{} converged={} stationarity={:e}",
                ext.lambda_star,
                ext.lambda0_star,
                fields.len(),
                ext.converged,
                ext.stationarity
            ),
            tolerance: "ratio exact, 1e-12 relative, all fields".into(),
            pass,
        })
    }

    fn c5(&self) -> Result<CriterionResult> {
        branch_structure(&self.space, &self.cfg, self.extremal()?, self.sweep()?)
    }

    fn c6(&self) -> Result<CriterionResult> {
        let ext = self.extremal()?;
        let base = self.base()?;
        let pts = continue_to_lambda_star(
            &self.space,
            &base,
            ext,
            &[0.9, 0.99, 0.999],
            &self.descent(),
        )?;
        let psi2: Vec<f64> = pts.iter().map(|p| p.psi2.abs()).collect();
        let decreasing = psi2.windows(2).all(|w| w[1] < w[0]);
        let n0 = n0_energy(&base.with_lambda(ext.lambda_star)?)?;
        let last = pts.last().expect("three fractions").energy;
        let gap = (n0 - last) / n0;
        Ok(CriterionResult {
            id: 6,
            name: "collapse-at-lambda*",
            measured: format!(
                "|psi2|=[{:e}, {:e}, {:e}] decreasing={decreasing} energy/n0={:e} gap={gap:e}",
                psi2[0],
                psi2[1],
                psi2[2],
                last / n0
            ),
            tolerance: format!("gap {}", self.cfg.tolerances.collapse),
            pass: decreasing && gap.abs() <= self.cfg.tolerances.collapse,
        })
    }

    fn c7(&self) -> Result<CriterionResult> {
        let ext = self.extremal()?;
        let base = self.base()?;
        let lambdas: Vec<f64> = [1.001, 1.01, 1.1]
            .iter()
            .map(|f| f * ext.lambda_star)
            .collect();
        let table = run_sweep(
            &self.space,
            &base,
            ext,
            &lambdas,
            &SweepOptions {
                descent: self.descent(),
                ..Default::default()
            },
        )?;
        let infeasible = table
            .rows
            .iter()
            .filter(|r| r.min.status == RowStatus::Infeasible)
            .count();
        let above = base.with_lambda(ext.lambda_star * (1.0 + 1e-10))?;
        let mut fields = seeded_fields(&self.space, self.cfg.seed.wrapping_add(7), 99)?;
        fields.push(ext.maximizer.clone());
        let mut nehari = 0;
        for u in &fields {
            for sign in [NehariSign::Plus, NehariSign::Minus] {
                match project_nehari(u, &above, sign) {
                    Err(Error::ProjectionInfeasible(..)) => {}
                    Err(e) => return Err(e),
                    Ok(_) => nehari += 1,
                }
            }
        }
        Ok(CriterionResult {
            id: 7,
            name: "nonexistence",
            measured: format!(
                "infeasible_rows={infeasible}/{} nehari_points={nehari}/{}",
                lambdas.len(),
                fields.len()
            ),
            tolerance: "all rows infeasible, no Nehari point".into(),
            pass: infeasible == lambdas.len() && nehari == 0,
        })
    }

    fn c8(&self) -> Result<CriterionResult> {
        let ext = self.extremal()?;
        let lambdas: Vec<f64> = self
            .cfg
            .asym_fractions
            .iter()
            .map(|f| f * ext.lambda0_star)
            .collect();
        let st = asymptotic_study(&self.space, &self.base()?, ext, &lambdas, &self.descent())?;
        let r = &st.rows;
        let strictly = |f: &dyn Fn(usize) -> bool| (1..r.len()).all(f);
        let e_dec = strictly(&|i| r[i].energy_min < r[i - 1].energy_min);
        let n_inc = strictly(&|i| r[i].normsq_min > r[i - 1].normsq_min);
        let q_dec = strictly(&|i| r[i].lambda_normsq2_mp < r[i - 1].lambda_normsq2_mp);
        let d_dec = strictly(&|i| r[i].rel_dist_to_limit < r[i - 1].rel_dist_to_limit);
        let c_noninc = strictly(&|i| r[i].energy_mp <= r[i - 1].energy_mp)
            && r.iter().all(|row| row.energy_mp >= st.c0);
        let last = r.last().expect("nonempty sequence");
        Ok(CriterionResult {
            id: 8,
            name: "asymptotics",
            measured: format!(
                "energy_min_decreasing={e_dec} normsq_increasing={n_inc} lambda_normsq2_decreasing={q_dec} dist_to_w0_decreasing={d_dec} c_lambda_toward_c0={c_noninc} c0={:e} last_c_lambda={:e} last_rel_dist={:e}",
                st.c0, last.energy_mp, last.rel_dist_to_limit
            ),
            tolerance: "strict trends".into(),
            pass: e_dec && n_inc && q_dec && d_dec && c_noninc,
        })
    }

    fn c9(&self) -> Result<CriterionResult> {
        let (space, ext) = if self.cfg.space.dim == 1 {
            (Arc::clone(&self.space), self.extremal()?.clone())
        } else {
            let s = build_space(SpaceConfig::interval(1.0, 99))?;
            let e = maximize_lambda(
                &s,
                &self.base()?,
                AscentStart::HalfSine,
                &AscentOptions::default(),
            )?;
            (s, e)
        };
        let (a, gamma) = (self.cfg.a, self.cfg.gamma);
        let w0 = limit_problem(&space, a, gamma, Some(&ext))?;
        let (length, n) = (space.config().extent[0], space.config().n[0]);
        let oracle = discrete_shooting(length, n, a, gamma)?;
        let diff = |o: &[f64]| {
            w0.field
                .values()
                .iter()
                .zip(o)
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max)
        };
        let err = diff(&oracle);
        let continuum = continuum_shooting(length, n, a, gamma, 20 * (n + 1))?;
        let calib = diff(&continuum);
        Ok(CriterionResult {
            id: 9,
            name: "limit-problem",
            measured: format!(
                "max_abs_diff={err:e} (max w0={:e}) continuum_diff={calib:e} c0={:e} residual={:e}",
                w0.field.max_abs(),
                w0.energy,
                w0.residual
            ),
            tolerance: "1e-6 max norm against the discrete shooting oracle".into(),
            pass: err <= 1e-6 && w0.energy > 0.0,
        })
    }
}

/// Criteria 1 to 9 twice on fresh state; criterion 10 compares the two
/// renderings byte for byte.
pub fn run_verify(cfg: &RunConfig) -> Result<VerifyReport> {
    let first = Verifier::new(cfg)?.run();
    let second = Verifier::new(cfg)?.run();
    let render = |v: &[CriterionResult]| v.iter().map(|r| r.line() + "\n").collect::<String>();
    let identical = render(&first) == render(&second);
    let mut results = first;
    results.push(CriterionResult {
        id: 10,
        name: "determinism",
        measured: format!("identical_reports={identical}"),
        tolerance: "byte-identical".into(),
        pass: identical,
    });
    Ok(VerifyReport { results })
}

/// Criterion 5 on an already computed sweep.
pub fn branch_structure(
    space: &Arc<DiscreteSpace>,
    cfg: &RunConfig,
    ext: &ExtremalEstimate,
    table: &SweepTable,
) -> Result<CriterionResult> {
    let base = cfg.params(0.0)?;
    let tol = cfg.tolerances.residual;
    let descent = DescentOptions {
        residual_tol: tol,
        cg_rtol: cfg.tolerances.cg,
        ..Default::default()
    };
    let inside: Vec<_> = table
        .rows
        .iter()
        .filter(|r| r.lambda < ext.lambda_star)
        .collect();
    let all_min_ok = inside.iter().all(|r| r.min.status == RowStatus::Ok);
    let mins: Vec<(f64, f64)> = inside
        .iter()
        .filter_map(|r| r.min.ok().map(|p| (r.lambda, p.energy)))
        .collect();
    let increasing = mins.windows(2).all(|w| w[1].1 > w[0].1);
    let changes: Vec<usize> = (1..mins.len())
        .filter(|&i| (mins[i - 1].1 < 0.0) != (mins[i].1 < 0.0))
        .collect();
    let (mut l0_err, mut brackets) = (f64::INFINITY, false);
    if let [i] = changes[..] {
        let (lo, hi) = (mins[i - 1].0, mins[i].0);
        brackets = lo < ext.lambda0_star && ext.lambda0_star < hi;
        let b = bracket_lambda0(
            space,
            &base,
            ext,
            lo,
            hi,
            1e-3 * cfg.tolerances.grid,
            &descent,
        )?;
        l0_err = b.rel_diff;
    }
    let mut n0_ok = true;
    for r in &inside {
        if let Some(p) = r.min.ok() {
            if r.lambda > ext.lambda0_star {
                let n0 = n0_energy(&base.with_lambda(r.lambda)?)?;
                n0_ok &= p.energy > 0.0 && p.energy < n0;
            }
        }
    }
    let (mut both, mut separated, mut max_res, mut mismatches) = (0, true, 0.0f64, 0);
    for r in &table.rows {
        for cell in [&r.min, &r.mp] {
            if let Some(p) = cell.ok() {
                max_res = max_res.max(p.residual);
            }
        }
        if let (Some(u), Some(w)) = (r.min.ok(), r.mp.ok()) {
            both += 1;
            separated &= w.energy > u.energy;
        }
        if let Some(c) = r.cross_check {
            mismatches += usize::from(!c.agree);
        }
    }
    let reach = table.mountain_pass_reach();
    let pass = all_min_ok
        && increasing
        && changes.len() == 1
        && brackets
        && l0_err <= cfg.tolerances.grid
        && n0_ok
        && both > 0
        && separated
        && max_res <= tol;
    Ok(CriterionResult {
        id: 5,
        name: "branch-structure",
        measured: format!(
            "rows={} minimizer_ok={all_min_ok} increasing={increasing} sign_changes={} brackets_lambda0={brackets} lambda0_bisection_rel={l0_err:e} n0_bound={n0_ok} separated={separated} ({both} rows) max_residual={max_res:e} saddle_mismatches={mismatches} mp_reach={}",
            table.rows.len(),
            changes.len(),
            reach.map_or("none".to_string(), |l| format!("{:e}", l / ext.lambda_star))
        ),
        tolerance: format!(
            "lambda0 {:e} relative, residual {tol:e}",
            cfg.tolerances.grid
        ),
        pass,
    })
}
