//! `λ*_h` and `λ₀*_h` from the embedding-ratio ascent, with a refinement
//! study. Nodal quadrature converges from above, so the estimates decrease.

use kirchhoff::extremal::{maximize_lambda, refine_extremal, AscentOptions, AscentStart};
use kirchhoff::fiber::ProblemParams;
use kirchhoff::space::{build_space, SpaceConfig};

fn main() -> kirchhoff::Result<()> {
    let params = ProblemParams::new(1.0, 3.0, 0.0)?;
    let space = build_space(SpaceConfig::interval(1.0, 99))?;
    let opts = AscentOptions::default();

    let ext = maximize_lambda(&space, &params, AscentStart::HalfSine, &opts)?;
    println!("lambda*   = {:.15e}", ext.lambda_star);
    println!("lambda0*  = {:.15e}", ext.lambda0_star);
    println!("ratio     = {}", ext.sobolev_ratio);
    println!(
        "{} iterations, stationarity {:.2e}",
        ext.iterations, ext.stationarity
    );

    // a random start lands on the same maximizer
    let other = maximize_lambda(&space, &params, AscentStart::Seed(9), &opts)?;
    println!("seeded restart: lambda* = {:.15e}", other.lambda_star);

    let meshes: Vec<SpaceConfig> = [24, 49, 99, 199]
        .into_iter()
        .map(|n| SpaceConfig::interval(1.0, n))
        .collect();
    let study = refine_extremal(&meshes, &params, &opts)?;
    println!("\n      h          lambda*");
    for (h, e) in study.h.iter().zip(&study.estimates) {
        println!("{h:.6}  {:.12e}", e.lambda_star);
    }
    for w in study.differences.windows(2) {
        println!("difference ratio {:.3}", w[0] / w[1]);
    }
    if let Some(x) = study.extrapolated {
        println!("Richardson extrapolation {x:.12e}");
    }
    Ok(())
}
