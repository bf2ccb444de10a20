//! As λ → 0 the minimizers blow up while the mountain-pass solutions settle
//! on the positive solution `w₀` of the local problem.

use kirchhoff::branch::{asymptotic_study, limit_problem, DescentOptions};
use kirchhoff::extremal::{maximize_lambda, AscentOptions, AscentStart};
use kirchhoff::fiber::ProblemParams;
use kirchhoff::shooting::{continuum_shooting, discrete_shooting};
use kirchhoff::space::{build_space, SpaceConfig};

fn main() -> kirchhoff::Result<()> {
    let n = 99;
    let space = build_space(SpaceConfig::interval(1.0, n))?;
    let base = ProblemParams::new(1.0, 3.0, 0.0)?;
    let ext = maximize_lambda(
        &space,
        &base,
        AscentStart::HalfSine,
        &AscentOptions::default(),
    )?;

    let lambdas: Vec<f64> = [1e-1, 1e-2, 1e-3, 1e-4]
        .iter()
        .map(|f| f * ext.lambda0_star)
        .collect();
    let st = asymptotic_study(&space, &base, &ext, &lambdas, &DescentOptions::default())?;
    println!("c0 = {:.12e}", st.c0);
    println!(
        "lambda          min energy      |u|^2          c_lambda        lambda|w|^4   |w-w0|/|w0|"
    );
    for r in &st.rows {
        println!(
            "{:.4e}  {:>14.6e}  {:.6e}  {:.10e}  {:.4e}  {:.4e}",
            r.lambda,
            r.energy_min,
            r.normsq_min,
            r.energy_mp,
            r.lambda_normsq2_mp,
            r.rel_dist_to_limit
        );
    }

    let w0 = limit_problem(&space, 1.0, 3.0, Some(&ext))?;
    let max_diff = |o: &[f64]| {
        w0.field
            .values()
            .iter()
            .zip(o)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    };
    let d = discrete_shooting(1.0, n, 1.0, 3.0)?;
    let c = continuum_shooting(1.0, n, 1.0, 3.0, 40 * (n + 1))?;
    println!("\nmax w0 = {:.10}", w0.field.max_abs());
    println!("vs difference-equation shooting {:.2e}", max_diff(&d));
    println!(
        "vs RK4 shooting of the ODE      {:.2e}  (discretization error)",
        max_diff(&c)
    );
    Ok(())
}
