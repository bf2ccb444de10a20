//! Approaching `λ*_h` the two branches merge: `ψ″(1)` on the minimizer
//! branch goes to zero and its energy tends to the degenerate level.

use kirchhoff::branch::{continue_to_lambda_star, lambda_star_point, DescentOptions};
use kirchhoff::extremal::{maximize_lambda, AscentOptions, AscentStart};
use kirchhoff::fiber::{n0_energy, ProblemParams};
use kirchhoff::space::{build_space, SpaceConfig};

fn main() -> kirchhoff::Result<()> {
    let space = build_space(SpaceConfig::interval(1.0, 99))?;
    let base = ProblemParams::new(1.0, 3.0, 0.0)?;
    let ext = maximize_lambda(
        &space,
        &base,
        AscentStart::HalfSine,
        &AscentOptions::default(),
    )?;
    let fractions = [0.9, 0.99, 0.999, 0.9999];
    let pts = continue_to_lambda_star(&space, &base, &ext, &fractions, &DescentOptions::default())?;

    let n0 = n0_energy(&base.with_lambda(ext.lambda_star)?)?;
    println!("degenerate level at lambda*: {n0:.10e}");
    println!("lambda/lambda*   energy           psi''(1)        energy/n0");
    for (f, b) in fractions.iter().zip(&pts) {
        println!(
            "{f:>13}  {:.10e}  {:>14.6e}  {:.6}",
            b.energy,
            b.psi2,
            b.energy / n0
        );
    }
    let star = lambda_star_point(&base, &ext)?;
    println!(
        "at lambda*: energy {:.10e}, psi''(1) = {:.2e}, class {}",
        star.energy,
        star.psi2,
        star.nehari_class.symbol()
    );
    Ok(())
}
