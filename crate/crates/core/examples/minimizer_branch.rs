//! The local-minimizer branch `u_λ` on `N⁺` below `λ*_h`, and the sign
//! change of its energy located by bisection.

use kirchhoff::branch::{bracket_lambda0, minimize_branch, residuals, DescentOptions};
use kirchhoff::extremal::{maximize_lambda, AscentOptions, AscentStart};
use kirchhoff::fiber::ProblemParams;
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
    let opts = DescentOptions::default();
    let seeds = [ext.maximizer.clone()];

    println!("lambda/lambda*   energy          |u|^2          class  residual   steps");
    let mut warm = None;
    for f in [0.05, 0.2, 0.5, 0.8, 0.88, 0.9, 0.95, 0.99] {
        let p = base.with_lambda(f * ext.lambda_star)?;
        let b = minimize_branch(&space, &p, warm.as_ref(), &seeds, &opts)?;
        let (rel, _) = residuals(&p, &b.field)?;
        println!(
            "{f:>13}  {:>14.6e}  {:>13.6e}  {:>5}  {rel:.2e}  {:>5}",
            b.energy,
            b.normsq,
            b.nehari_class.symbol(),
            b.iterations
        );
        warm = Some(b.field);
    }

    let br = bracket_lambda0(
        &space,
        &base,
        &ext,
        0.5 * ext.lambda0_star,
        ext.lambda_star * 0.999,
        1e-10,
        &opts,
    )?;
    println!(
        "\nenergy changes sign at {:.12e}; closed form {:.12e} (rel diff {:.1e}, {} solves)",
        br.bisected, br.closed_form, br.rel_diff, br.solves
    );
    Ok(())
}
