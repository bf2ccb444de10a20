//! Command-line front end. Every command writes its human-readable output to
//! the given writer and its files into the output directory; errors are
//! printed as a single `error[kind]: message` line.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Parser, Subcommand};
use serde::Serialize;

use crate::branch::{asymptotic_study, limit_problem, DescentOptions};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::extremal::{maximize_lambda, AscentOptions, AscentStart, ExtremalEstimate};
use crate::fiber::{
    classify_fiber, degenerate_point, lambda0_of, lambda_of, zero_energy_point, FiberClass,
    ProblemParams,
};
use crate::shooting::discrete_shooting;
use crate::snapshot::{read_snapshot, write_snapshot};
use crate::space::{build_space, fiber_scalars, DiscreteSpace};
use crate::sweep::{run_sweep, RowStatus, SweepOptions, GNUPLOT_SCRIPT};
use crate::verify::{branch_structure, run_verify};

#[derive(Debug, Parser)]
#[command(
    name = "kirchhoff",
    version,
    about = "Bifurcation toolkit for the Kirchhoff problem"
)]
pub struct Cli {
    /// Run configuration (key = value). Defaults apply when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory, overriding `out_dir` of the config.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Seed for random fields, overriding `seed` of the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate lambda*, lambda0* and the best embedding ratio.
    Extremal,
    /// Fiber-map analysis of a snapshot.
    Fiber {
        #[arg(long)]
        snapshot: PathBuf,
        /// Lambda to classify at; defaults to the snapshot's own.
        #[arg(long)]
        lambda: Option<f64>,
        /// Multiply the (snapshot or given) lambda by this factor.
        #[arg(long)]
        lambda_scale: Option<f64>,
    },
    /// Both branches over the configured lambda grid.
    Sweep,
    /// The acceptance suite.
    Verify,
    /// The lambda = 0 limit problem.
    Limit,
    /// Branches along a sequence of lambda decreasing to zero.
    Asym,
}

/// Parse `args` (program name first), run, and return the exit code.
pub fn main_with_args<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = if e.use_stderr() {
                write!(stderr, "{e}")
            } else {
                write!(stdout, "{e}")
            };
            return code;
        }
    };
    match run(&cli, stdout) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(
                stderr,
                "error[{}]: {}",
                e.kind(),
                e.to_string().replace('\n', " ")
            );
            match e {
                Error::MissingFile(_) | Error::InvalidConfig(_) => 2,
                _ => 1,
            }
        }
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(o) = &cli.out {
        cfg.out_dir = o.clone();
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<i32> {
    let cfg = load_config(cli)?;
    std::fs::create_dir_all(&cfg.out_dir)?;
    let mut text = String::new();
    let code = match &cli.command {
        Command::Extremal => cmd_extremal(&cfg, &mut text)?,
        Command::Fiber {
            snapshot,
            lambda,
            lambda_scale,
        } => cmd_fiber(&cfg, snapshot, *lambda, *lambda_scale, &mut text)?,
        Command::Sweep => cmd_sweep(&cfg, &mut text)?,
        Command::Verify => cmd_verify(&cfg, &mut text)?,
        Command::Limit => cmd_limit(&cfg, &mut text)?,
        Command::Asym => cmd_asym(&cfg, &mut text)?,
    };
    out.write_all(text.as_bytes())?;
    Ok(code)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Domain(format!("json encoding: {e}")))?;
    s.push('\n');
    std::fs::write(path, s)?;
    Ok(())
}

fn extremal_for(cfg: &RunConfig, space: &Arc<DiscreteSpace>) -> Result<ExtremalEstimate> {
    maximize_lambda(
        space,
        &cfg.params(0.0)?,
        AscentStart::HalfSine,
        &AscentOptions::default(),
    )
}

fn descent(cfg: &RunConfig) -> DescentOptions {
    DescentOptions {
        residual_tol: cfg.tolerances.residual,
        cg_rtol: cfg.tolerances.cg,
        ..Default::default()
    }
}

/// Ascent restarted from a seeded random field, compared with the half-sine
/// run. Uniqueness of the maximizer is reported, not assumed.
#[derive(Debug, Serialize)]
struct SeededRestart {
    seed: u64,
    sobolev_ratio: f64,
    converged: bool,
    /// Relative max-norm distance between the two unit-norm maximizers.
    distance: f64,
    same_maximizer: bool,
}

#[derive(Debug, Serialize)]
struct ExtremalReport<'a> {
    #[serde(flatten)]
    estimate: &'a ExtremalEstimate,
    c_agamma: f64,
    c0_agamma: f64,
    seeded_restart: SeededRestart,
}

pub fn cmd_extremal(cfg: &RunConfig, out: &mut String) -> Result<i32> {
    let space = build_space(cfg.space.clone())?;
    let params = cfg.params(0.0)?;
    let ext = extremal_for(cfg, &space)?;
    let other = maximize_lambda(
        &space,
        &params,
        AscentStart::Seed(cfg.seed),
        &AscentOptions::default(),
    )?;
    let (u, v) = (ext.maximizer.normalized()?, other.maximizer.normalized()?);
    let distance = u.sub(&v).max_abs() / u.max_abs();
    let k = params.constants();
    let report = ExtremalReport {
        estimate: &ext,
        c_agamma: k.c_agamma,
        c0_agamma: k.c0_agamma,
        seeded_restart: SeededRestart {
            seed: cfg.seed,
            sobolev_ratio: other.sobolev_ratio,
            converged: other.converged,
            distance,
            same_maximizer: distance <= 1e-6,
        },
    };
    write_json(&cfg.out_dir.join("extremal.json"), &report)?;
    let snap = cfg.out_dir.join("maximizer.snap");
    write_snapshot(&snap, &ext.maximizer, &params.with_lambda(ext.lambda_star)?)?;
    let _ = writeln!(out, "lambda_star    {:e}", ext.lambda_star);
    let _ = writeln!(out, "lambda0_star   {:e}", ext.lambda0_star);
    let _ = writeln!(
        out,
        "ratio          {:e}",
        ext.lambda0_star / ext.lambda_star
    );
    let _ = writeln!(out, "sobolev_ratio  {:e}", ext.sobolev_ratio);
    let _ = writeln!(out, "iterations     {}", ext.iterations);
    let _ = writeln!(out, "converged      {}", ext.converged);
    let _ = writeln!(out, "stationarity   {:e}", ext.stationarity);
    let _ = writeln!(
        out,
        "seeded restart ratio {:e}, distance {:e}, same maximizer {}",
        other.sobolev_ratio, distance, report.seeded_restart.same_maximizer
    );
    let _ = writeln!(out, "wrote {}", snap.display());
    Ok(0)
}

#[derive(Debug, Serialize)]
struct FiberReport {
    a: f64,
    gamma: f64,
    lambda: f64,
    p: f64,
    q: f64,
    lambda_of: f64,
    lambda0_of: f64,
    t_deg: f64,
    t_zero: f64,
    class: FiberClass,
}

pub fn cmd_fiber(
    cfg: &RunConfig,
    snapshot: &Path,
    lambda: Option<f64>,
    scale: Option<f64>,
    out: &mut String,
) -> Result<i32> {
    let snap = read_snapshot(snapshot)?;
    let lam = lambda.unwrap_or(snap.params.lambda) * scale.unwrap_or(1.0);
    let params = snap.params.with_lambda(lam)?;
    let s = fiber_scalars(&snap.field, params.gamma)?;
    let class = classify_fiber(&params, &s)?;
    let report = FiberReport {
        a: params.a,
        gamma: params.gamma,
        lambda: lam,
        p: s.p,
        q: s.q,
        lambda_of: lambda_of(&params, &s),
        lambda0_of: lambda0_of(&params, &s),
        t_deg: degenerate_point(&params, &s),
        t_zero: zero_energy_point(&params, &s).0,
        class,
    };
    write_json(&cfg.out_dir.join("fiber.json"), &report)?;
    let _ = writeln!(out, "P          {:e}", s.p);
    let _ = writeln!(out, "Q          {:e}", s.q);
    let _ = writeln!(out, "lambda(u)  {:e}", report.lambda_of);
    let _ = writeln!(out, "lambda0(u) {:e}", report.lambda0_of);
    let _ = writeln!(out, "t(u)       {:e}", report.t_deg);
    let _ = writeln!(out, "t0(u)      {:e}", report.t_zero);
    let _ = writeln!(out, "lambda     {lam:e}");
    let _ = writeln!(out, "class      {}", class.kind.label());
    for (name, t) in [
        ("t_minus", class.t_minus),
        ("t_plus", class.t_plus),
        ("t_deg", class.t_deg),
    ] {
        if let Some(t) = t {
            let _ = writeln!(out, "{name:<10} {t:e}");
        }
    }
    Ok(0)
}

#[derive(Debug, Serialize)]
struct SweepSummary {
    lambda_star: f64,
    lambda0_star: f64,
    rows: usize,
    minimizer_ok: usize,
    mountain_pass_ok: usize,
    infeasible: usize,
    unconverged: usize,
    /// Largest swept λ above `λ₀*_h` with a converged mountain pass.
    mountain_pass_reach: Option<f64>,
    saddle_mismatches: usize,
}

pub fn cmd_sweep(cfg: &RunConfig, out: &mut String) -> Result<i32> {
    let space = build_space(cfg.space.clone())?;
    let base = cfg.params(0.0)?;
    let ext = extremal_for(cfg, &space)?;
    let lambdas = cfg.sweep_lambdas(Some(ext.lambda_star))?;
    let opts = SweepOptions {
        descent: descent(cfg),
        path_points: cfg.path_points,
        rho_fraction: cfg.rho_fraction,
        warm_start: cfg.sweep.warm_start,
        parallel: cfg.sweep.parallel,
    };
    let table = run_sweep(&space, &base, &ext, &lambdas, &opts)?;
    std::fs::write(cfg.out_dir.join("sweep.csv"), table.to_csv())?;
    std::fs::write(cfg.out_dir.join("branch_min.dat"), table.plot_data(false))?;
    std::fs::write(cfg.out_dir.join("branch_mp.dat"), table.plot_data(true))?;
    std::fs::write(cfg.out_dir.join("bifurcation.gp"), GNUPLOT_SCRIPT)?;
    let count = |f: &dyn Fn(RowStatus, RowStatus) -> usize| -> usize {
        table
            .rows
            .iter()
            .map(|r| f(r.min.status, r.mp.status))
            .sum()
    };
    let summary = SweepSummary {
        lambda_star: ext.lambda_star,
        lambda0_star: ext.lambda0_star,
        rows: table.rows.len(),
        minimizer_ok: count(&|m, _| usize::from(m == RowStatus::Ok)),
        mountain_pass_ok: count(&|_, w| usize::from(w == RowStatus::Ok)),
        infeasible: count(&|m, w| {
            usize::from(m == RowStatus::Infeasible) + usize::from(w == RowStatus::Infeasible)
        }),
        unconverged: count(&|m, w| {
            usize::from(m == RowStatus::Unconverged) + usize::from(w == RowStatus::Unconverged)
        }),
        mountain_pass_reach: table.mountain_pass_reach(),
        saddle_mismatches: table
            .rows
            .iter()
            .filter(|r| r.cross_check.is_some_and(|c| !c.agree))
            .count(),
    };
    write_json(&cfg.out_dir.join("sweep.json"), &summary)?;
    let _ = writeln!(
        out,
        "sweep: {} rows, lambda* = {:e}, lambda0* = {:e}",
        summary.rows, ext.lambda_star, ext.lambda0_star
    );
    let _ = writeln!(
        out,
        "minimizer ok {}, mountain pass ok {}, infeasible {}, unconverged {}",
        summary.minimizer_ok, summary.mountain_pass_ok, summary.infeasible, summary.unconverged
    );
    if summary.saddle_mismatches > 0 {
        let _ = writeln!(
            out,
            "warning: {} rows where the path saddle and the N- minimizer disagree",
            summary.saddle_mismatches
        );
    }
    let _ = writeln!(
        out,
        "{}",
        branch_structure(&space, cfg, &ext, &table)?.line()
    );
    let above: Vec<_> = table
        .rows
        .iter()
        .filter(|r| r.lambda > ext.lambda_star)
        .collect();
    if !above.is_empty() {
        let infeasible = above
            .iter()
            .filter(|r| r.min.status == RowStatus::Infeasible)
            .count();
        let _ = writeln!(
            out,
            "[{}]  7 nonexistence         measured: infeasible_rows={infeasible}/{} | tolerance: all rows above lambda* infeasible",
            if infeasible == above.len() { "PASS" } else { "FAIL" },
            above.len()
        );
    }
    let _ = writeln!(out, "wrote {}", cfg.out_dir.join("sweep.csv").display());
    Ok(if table.complete() { 0 } else { 1 })
}

pub fn cmd_verify(cfg: &RunConfig, out: &mut String) -> Result<i32> {
    let report = run_verify(cfg)?;
    let text = report.text();
    std::fs::write(cfg.out_dir.join("verify.txt"), &text)?;
    out.push_str(&text);
    Ok(if report.all_pass() { 0 } else { 1 })
}

#[derive(Debug, Serialize)]
struct LimitReport {
    a: f64,
    gamma: f64,
    c0: f64,
    normsq: f64,
    max_value: f64,
    residual: f64,
    residual_abs: f64,
    sweeps: usize,
    /// Max-norm distance to the discrete shooting solution (1D only).
    shooting_diff: Option<f64>,
}

pub fn cmd_limit(cfg: &RunConfig, out: &mut String) -> Result<i32> {
    let space = build_space(cfg.space.clone())?;
    let ext = extremal_for(cfg, &space)?;
    let w0 = limit_problem(&space, cfg.a, cfg.gamma, Some(&ext))?;
    let shooting_diff = if cfg.space.dim == 1 {
        let o = discrete_shooting(cfg.space.extent[0], cfg.space.n[0], cfg.a, cfg.gamma)?;
        Some(
            w0.field
                .values()
                .iter()
                .zip(&o)
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max),
        )
    } else {
        None
    };
    let report = LimitReport {
        a: cfg.a,
        gamma: cfg.gamma,
        c0: w0.energy,
        normsq: w0.normsq,
        max_value: w0.field.max_abs(),
        residual: w0.residual,
        residual_abs: w0.residual_abs,
        sweeps: w0.iterations,
        shooting_diff,
    };
    write_json(&cfg.out_dir.join("limit.json"), &report)?;
    let snap = cfg.out_dir.join("limit.snap");
    write_snapshot(&snap, &w0.field, &ProblemParams::limit(cfg.a, cfg.gamma)?)?;
    let _ = writeln!(out, "c0         {:e}", w0.energy);
    let _ = writeln!(out, "max w0     {:e}", report.max_value);
    let _ = writeln!(out, "residual   {:e}", w0.residual);
    if let Some(d) = shooting_diff {
        let _ = writeln!(out, "shooting   {d:e}");
    }
    let _ = writeln!(out, "wrote {}", snap.display());
    Ok(0)
}

pub fn cmd_asym(cfg: &RunConfig, out: &mut String) -> Result<i32> {
    let space = build_space(cfg.space.clone())?;
    let ext = extremal_for(cfg, &space)?;
    let lambdas: Vec<f64> = cfg
        .asym_fractions
        .iter()
        .map(|f| f * ext.lambda0_star)
        .collect();
    let st = asymptotic_study(&space, &cfg.params(0.0)?, &ext, &lambdas, &descent(cfg))?;
    let mut csv =
        String::from("lambda,energy_min,normsq_min,energy_mp,lambda_normsq2_mp,dist_to_limit,rel_dist_to_limit\n");
    for r in &st.rows {
        let _ = writeln!(
            csv,
            "{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
            r.lambda,
            r.energy_min,
            r.normsq_min,
            r.energy_mp,
            r.lambda_normsq2_mp,
            r.dist_to_limit,
            r.rel_dist_to_limit
        );
    }
    std::fs::write(cfg.out_dir.join("asym.csv"), &csv)?;
    write_json(&cfg.out_dir.join("asym.json"), &st)?;
    let _ = writeln!(out, "c0 = {:e}", st.c0);
    out.push_str(&csv);
    Ok(0)
}
