//! λ-sweeps over both branches and their CSV / plot-data output.

use std::fmt::Write as _;
use std::sync::Arc;

use serde::Serialize;

use crate::branch::mountain::SaddleComparison;
use crate::branch::{
    minimize_branch, mountain_pass, nehari_minus_minimize, BranchPoint, DescentOptions,
    MountainPassConfig,
};
use crate::error::{Error, Result};
use crate::extremal::ExtremalEstimate;
use crate::fiber::ProblemParams;
use crate::space::{DiscreteField, DiscreteSpace};

pub const CSV_HEADER: &str = "lambda,energy_min,energy_mp,normsq_min,normsq_mp,psi2_min,residual_min,residual_mp,status_min,status_mp";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RowStatus {
    Ok,
    Infeasible,
    Unconverged,
}

impl RowStatus {
    pub fn label(&self) -> &'static str {
        match self {
            RowStatus::Ok => "ok",
            RowStatus::Infeasible => "infeasible",
            RowStatus::Unconverged => "unconverged",
        }
    }

    fn of_error(e: &Error) -> Self {
        match e {
            Error::InfeasibleStart(_)
            | Error::ProjectionInfeasible(..)
            | Error::GeometryViolation { .. } => RowStatus::Infeasible,
            _ => RowStatus::Unconverged,
        }
    }
}

/// Outcome of one branch at one λ.
#[derive(Debug, Clone, Serialize)]
pub struct BranchCell {
    pub status: RowStatus,
    pub point: Option<BranchPoint>,
    pub error: Option<String>,
}

impl BranchCell {
    fn from_result(r: Result<BranchPoint>, residual_tol: f64) -> Self {
        match r {
            Ok(p) => Self {
                status: if p.residual <= residual_tol {
                    RowStatus::Ok
                } else {
                    RowStatus::Unconverged
                },
                point: Some(p),
                error: None,
            },
            Err(e) => Self {
                status: RowStatus::of_error(&e),
                point: None,
                error: Some(format!("{}: {e}", e.kind())),
            },
        }
    }

    pub fn ok(&self) -> Option<&BranchPoint> {
        match self.status {
            RowStatus::Ok => self.point.as_ref(),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub lambda: f64,
    pub min: BranchCell,
    pub mp: BranchCell,
    /// `N⁻` minimization against the path saddle, where both converge.
    pub cross_check: Option<SaddleComparison>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepTable {
    pub lambda_star: f64,
    pub lambda0_star: f64,
    pub rows: Vec<SweepRow>,
}

#[derive(Debug, Clone)]
pub struct SweepOptions {
    pub descent: DescentOptions,
    pub path_points: usize,
    pub rho_fraction: f64,
    pub warm_start: bool,
    pub parallel: bool,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            descent: DescentOptions::default(),
            path_points: 32,
            rho_fraction: 0.9,
            warm_start: true,
            parallel: false,
        }
    }
}

fn solve_row(
    space: &Arc<DiscreteSpace>,
    base: &ProblemParams,
    extremal: &ExtremalEstimate,
    lambda: f64,
    warm: Option<&DiscreteField>,
    opts: &SweepOptions,
) -> Result<SweepRow> {
    let p = base.with_lambda(lambda)?;
    let tol = opts.descent.residual_tol;
    let seeds = [extremal.maximizer.clone()];
    let min = BranchCell::from_result(minimize_branch(space, &p, warm, &seeds, &opts.descent), tol);
    let mp_result =
        MountainPassConfig::from_extremal(&p, extremal, opts.rho_fraction).and_then(|mut cfg| {
            cfg.path_points = opts.path_points;
            mountain_pass(space, &p, &cfg)
        });
    let mp = BranchCell::from_result(mp_result, tol);
    let cross_check = match mp.ok() {
        Some(w) => nehari_minus_minimize(&p, &DiscreteField::half_sine(space), &opts.descent)
            .ok()
            .map(|n| SaddleComparison::new(w, &n)),
        None => None,
    };
    Ok(SweepRow {
        lambda,
        min,
        mp,
        cross_check,
    })
}

/// Solve both branches at each λ (sorted ascending first). With warm starts
/// the minimizer at one λ seeds the next and rows run in order; without them
/// rows are independent and may run on separate threads.
pub fn run_sweep(
    space: &Arc<DiscreteSpace>,
    base: &ProblemParams,
    extremal: &ExtremalEstimate,
    lambdas: &[f64],
    opts: &SweepOptions,
) -> Result<SweepTable> {
    let mut grid = lambdas.to_vec();
    grid.sort_by(f64::total_cmp);
    let rows = if opts.warm_start {
        let mut rows: Vec<SweepRow> = Vec::with_capacity(grid.len());
        for &lam in &grid {
            let warm = rows
                .iter()
                .rev()
                .find_map(|r| r.min.ok())
                .map(|b| b.field.clone());
            rows.push(solve_row(space, base, extremal, lam, warm.as_ref(), opts)?);
        }
        rows
    } else if opts.parallel {
        let workers = std::thread::available_parallelism()
            .map_or(1, |n| n.get())
            .min(grid.len());
        let chunk = grid.len().div_ceil(workers);
        std::thread::scope(|s| {
            let handles: Vec<_> = grid
                .chunks(chunk)
                .map(|part| {
                    s.spawn(move || {
                        part.iter()
                            .map(|&lam| solve_row(space, base, extremal, lam, None, opts))
                            .collect::<Result<Vec<_>>>()
                    })
                })
                .collect();
            let mut rows = Vec::with_capacity(grid.len());
            for h in handles {
                rows.extend(h.join().expect("sweep worker panicked")?);
            }
            Ok::<_, Error>(rows)
        })?
    } else {
        grid.iter()
            .map(|&lam| solve_row(space, base, extremal, lam, None, opts))
            .collect::<Result<Vec<_>>>()?
    };
    Ok(SweepTable {
        lambda_star: extremal.lambda_star,
        lambda0_star: extremal.lambda0_star,
        rows,
    })
}

fn num(x: Option<f64>) -> String {
    match x {
        Some(v) => format!("{v:e}"),
        None => "nan".into(),
    }
}

impl SweepTable {
    pub fn to_csv(&self) -> String {
        let mut o = String::new();
        o.push_str(CSV_HEADER);
        o.push('\n');
        for r in &self.rows {
            let m = r.min.point.as_ref();
            let w = r.mp.point.as_ref();
            let _ = writeln!(
                o,
                "{:e},{},{},{},{},{},{},{},{},{}",
                r.lambda,
                num(m.map(|p| p.energy)),
                num(w.map(|p| p.energy)),
                num(m.map(|p| p.normsq)),
                num(w.map(|p| p.normsq)),
                num(m.map(|p| p.psi2)),
                num(m.map(|p| p.residual)),
                num(w.map(|p| p.residual)),
                r.min.status.label(),
                r.mp.status.label(),
            );
        }
        o
    }

    /// Two-column `lambda energy` data of the converged points of one branch.
    pub fn plot_data(&self, mountain: bool) -> String {
        let mut o = String::from("# lambda energy\n");
        for r in &self.rows {
            let cell = if mountain { &r.mp } else { &r.min };
            if let Some(p) = cell.ok() {
                let _ = writeln!(o, "{:e} {:e}", r.lambda, p.energy);
            }
        }
        o
    }

    /// Every row produced a result for both branches, feasible or not.
    pub fn complete(&self) -> bool {
        self.rows.iter().all(|r| {
            r.min.status != RowStatus::Unconverged && r.mp.status != RowStatus::Unconverged
        })
    }

    /// Largest λ above `λ₀*_h` at which the mountain pass converged.
    pub fn mountain_pass_reach(&self) -> Option<f64> {
        self.rows
            .iter()
            .rev()
            .find(|r| r.lambda > self.lambda0_star && r.mp.ok().is_some())
            .map(|r| r.lambda)
    }
}

pub const GNUPLOT_SCRIPT: &str = "\
set xlabel 'lambda'
set ylabel 'energy'
set key top left
set logscale x
plot 'branch_min.dat' using 1:2 with linespoints title 'minimizer', \\
     'branch_mp.dat' using 1:2 with linespoints title 'mountain pass'
";

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extremal::{maximize_lambda, AscentOptions, AscentStart};
    use crate::space::{build_space, SpaceConfig};

    fn setup() -> (Arc<DiscreteSpace>, ProblemParams, ExtremalEstimate) {
        let space = build_space(SpaceConfig::interval(1.0, 49)).unwrap();
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
    fn csv_layout_and_infeasible_rows() {
        let (space, params, ext) = setup();
        let l = [0.5 * ext.lambda_star, 1.2 * ext.lambda_star];
        let t = run_sweep(&space, &params, &ext, &l, &SweepOptions::default()).unwrap();
        let csv = t.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines.len(), 3);
        assert!(lines.iter().all(|l| l.split(',').count() == 10));
        assert_eq!(t.rows[0].min.status, RowStatus::Ok);
        assert_eq!(t.rows[1].min.status, RowStatus::Infeasible);
        assert!(lines[2].ends_with("infeasible,infeasible"));
        assert!(t.complete());
    }

    #[test]
    fn parallel_rows_match_sequential() {
        let (space, params, ext) = setup();
        let l: Vec<f64> = (1..=6).map(|i| 0.1 * i as f64 * ext.lambda_star).collect();
        let seq = SweepOptions {
            warm_start: false,
            ..Default::default()
        };
        let par = SweepOptions {
            parallel: true,
            ..seq.clone()
        };
        let a = run_sweep(&space, &params, &ext, &l, &seq).unwrap();
        let b = run_sweep(&space, &params, &ext, &l, &par).unwrap();
        assert_eq!(a.to_csv(), b.to_csv());
    }
}
