//! The finite-difference space: eigenvalue accuracy, gradient consistency
//! and snapshot round trips.

use std::f64::consts::PI;

use kirchhoff::fiber::ProblemParams;
use kirchhoff::snapshot::{read_snapshot, write_snapshot};
use kirchhoff::space::{
    build_space, energy, fd_gradient_error, fiber_scalars, first_dirichlet_eigenpair,
    DiscreteField, SpaceConfig,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> kirchhoff::Result<()> {
    for (cfg, exact) in [
        (SpaceConfig::interval(1.0, 24), PI * PI),
        (SpaceConfig::interval(1.0, 49), PI * PI),
        (SpaceConfig::interval(1.0, 99), PI * PI),
        (SpaceConfig::rectangle(1.0, 1.0, 15, 15), 2.0 * PI * PI),
        (SpaceConfig::rectangle(1.0, 1.0, 31, 31), 2.0 * PI * PI),
    ] {
        let n = cfg.n.clone();
        let space = build_space(cfg)?;
        let (mu, _) = first_dirichlet_eigenpair(&space)?;
        println!(
            "n = {n:?}: mu1 = {mu:.8}  rel err {:.3e}",
            (mu - exact).abs() / exact
        );
    }

    let space = build_space(SpaceConfig::interval(1.0, 99))?;
    let params = ProblemParams::new(1.0, 3.0, 1e-3)?;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let worst = (0..20)
        .map(|_| {
            let u = DiscreteField::random(&space, &mut rng);
            let v = DiscreteField::random(&space, &mut rng);
            fd_gradient_error(&params, &u, &v, 1e-5)
        })
        .fold(0.0, f64::max);
    println!("gradient vs central differences, worst of 20: {worst:.3e}");

    let u = DiscreteField::half_sine(&space);
    let s = fiber_scalars(&u, params.gamma)?;
    println!(
        "half sine: P = {:.8} (pi^2/2 = {:.8}), Q = {:.8}",
        s.p,
        PI * PI / 2.0,
        s.q
    );
    println!("energy {:.8}", energy(&params, &u));

    let path = std::env::temp_dir().join("kirchhoff_half_sine.snap");
    write_snapshot(&path, &u, &params)?;
    let back = read_snapshot(&path)?;
    println!(
        "snapshot {}: exact round trip = {}",
        path.display(),
        back.field.values() == u.values() && back.params == params
    );
    Ok(())
}
