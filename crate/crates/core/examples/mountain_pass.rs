//! Mountain-pass solutions `w_λ` on `N⁻`, checked against direct
//! minimization over `N⁻` and the ray through the extremal maximizer.

use kirchhoff::branch::{
    mountain_pass, nehari_minus_minimize, project_nehari, DescentOptions, MountainPassConfig,
    NehariSign,
};
use kirchhoff::extremal::{maximize_lambda, AscentOptions, AscentStart};
use kirchhoff::fiber::ProblemParams;
use kirchhoff::space::{build_space, energy, DiscreteField, SpaceConfig};

fn main() -> kirchhoff::Result<()> {
    let space = build_space(SpaceConfig::interval(1.0, 99))?;
    let base = ProblemParams::new(1.0, 3.0, 0.0)?;
    let ext = maximize_lambda(
        &space,
        &base,
        AscentStart::HalfSine,
        &AscentOptions::default(),
    )?;

    for f in [0.1, 0.5, 0.9, 0.99] {
        let p = base.with_lambda(f * ext.lambda0_star)?;
        let cfg = MountainPassConfig::from_extremal(&p, &ext, 0.9)?;
        let w = mountain_pass(&space, &p, &cfg)?;
        let n = nehari_minus_minimize(
            &p,
            &DiscreteField::half_sine(&space),
            &DescentOptions::default(),
        )?;
        // u* maximizes λ(u), so its N⁻ point carries the least N⁻ energy
        let ray = energy(&p, &project_nehari(&ext.maximizer, &p, NehariSign::Minus)?);
        println!(
            "lambda = {f:>4} lambda0*: c = {:.10e}  N- min {:.10e}  ray {:.10e}  ring {:.4e}  residual {:.1e}  sweeps {}",
            w.energy, n.energy, ray, cfg.ring_level, w.residual, w.iterations
        );
    }

    // above lambda0* the endpoint must leave the ring with negative energy,
    // which fails once the zero-energy level is out of reach
    let p = base.with_lambda(0.999 * ext.lambda_star)?;
    match MountainPassConfig::from_extremal(&p, &ext, 0.9)
        .and_then(|c| mountain_pass(&space, &p, &c))
    {
        Ok(w) => println!("0.999 lambda*: c = {:.6e}", w.energy),
        Err(e) => println!("0.999 lambda*: error[{}]: {e}", e.kind()),
    }
    Ok(())
}
