//! Energy of both branches over λ as CSV, plus a linear grid between
//! `λ₀*_h` and `λ*_h` to see how far the mountain-pass construction still reaches.

use kirchhoff::config::{RunConfig, Spacing};
use kirchhoff::extremal::{maximize_lambda, AscentOptions, AscentStart};
use kirchhoff::space::build_space;
use kirchhoff::sweep::{run_sweep, SweepOptions};

fn main() -> kirchhoff::Result<()> {
    let mut cfg = RunConfig::default();
    let space = build_space(cfg.space.clone())?;
    let base = cfg.params(0.0)?;
    let ext = maximize_lambda(
        &space,
        &base,
        AscentStart::HalfSine,
        &AscentOptions::default(),
    )?;
    let opts = SweepOptions::default();

    let table = run_sweep(
        &space,
        &base,
        &ext,
        &cfg.sweep_lambdas(Some(ext.lambda_star))?,
        &opts,
    )?;
    print!("{}", table.to_csv());

    cfg.sweep.spacing = Spacing::Linear;
    cfg.sweep.lambda_min = ext.lambda0_star * 1.0001;
    cfg.sweep.lambda_max = ext.lambda_star * 0.9999;
    cfg.sweep.count = 16;
    let fine = run_sweep(
        &space,
        &base,
        &ext,
        &cfg.sweep_lambdas(Some(ext.lambda_star))?,
        &opts,
    )?;
    println!("\nlambda/lambda0*  mountain pass");
    for r in &fine.rows {
        println!(
            "{:.5}          {}",
            r.lambda / ext.lambda0_star,
            r.mp.status.label()
        );
    }
    match fine.mountain_pass_reach() {
        Some(l) => println!("reach: {:.6} lambda0*", l / ext.lambda0_star),
        None => println!("no mountain pass above lambda0* on this grid"),
    }
    Ok(())
}
