//! Fiber maps `t ↦ ψ(t)` for fixed scalars `P = ‖u‖²`, `Q = ‖u‖_γ^γ` as λ
//! crosses the thresholds `λ₀(u)` and `λ(u)`.

use kirchhoff::fiber::{
    classify_fiber, eval_psi, lambda0_of, lambda_of, n0_energy, zero_energy_point, FiberScalars,
    ProblemParams,
};

fn main() -> kirchhoff::Result<()> {
    let base = ProblemParams::new(1.0, 3.0, 0.0)?;
    let s = FiberScalars::new(1.0, 1.0)?;
    let (lam, lam0) = (lambda_of(&base, &s), lambda0_of(&base, &s));
    println!("P = Q = 1, a = 1, gamma = 3");
    println!(
        "lambda(u) = {lam}, lambda0(u) = {lam0}, ratio {}",
        lam0 / lam
    );

    for f in [0.5, lam0 / lam, 1.0, 1.5] {
        let p = base.with_lambda(f * lam)?;
        let c = classify_fiber(&p, &s)?;
        print!("lambda = {:.6}  {:<13}", p.lambda, c.kind.label());
        if let (Some(tm), Some(tp)) = (c.t_minus, c.t_plus) {
            print!(
                " t- = {tm:.6} (psi {:.6})  t+ = {tp:.6} (psi {:.6})",
                eval_psi(&p, &s, tm)?,
                eval_psi(&p, &s, tp)?
            );
        }
        if let Some(t) = c.t_deg {
            print!(
                " t_deg = {t:.6} (psi {:.6}, n0 level {:.6})",
                eval_psi(&p, &s, t)?,
                n0_energy(&p)?
            );
        }
        println!();
    }

    // at lambda0(u) the local minimum touches zero
    let p0 = base.with_lambda(lam0)?;
    let (t0, _) = zero_energy_point(&p0, &s);
    println!("t0 = {t0}, psi(t0) = {:e}", eval_psi(&p0, &s, t0)?);

    println!("\n  t      psi(0.5 lambda(u))  psi(lambda(u))  psi(1.5 lambda(u))");
    for i in 0..=16 {
        let t = 0.25 * i as f64;
        let row: Vec<String> = [0.5, 1.0, 1.5]
            .iter()
            .map(|f| {
                Ok(format!(
                    "{:>16.6}",
                    eval_psi(&base.with_lambda(f * lam)?, &s, t)?
                ))
            })
            .collect::<kirchhoff::Result<_>>()?;
        println!("{t:5.2} {}", row.join("  "));
    }
    Ok(())
}
