// Linearize at the equilibrium and compare the predicted rate with the
// slope fitted to a simulated trajectory.

use bosenet::analysis::{fit_rate, linearize};
use bosenet::collision::CollisionOperator;
use bosenet::equilibrium::equilibrium_for;
use bosenet::gspace::f_to_g;
use bosenet::integrator::{integrate, IntegratorOptions};
use bosenet::{Kernels, Mode, StateF};

pub fn run() -> bosenet::Result<()> {
    let kernels = Kernels::ones(Mode::C12C22C13);
    let f0 = StateF::new(vec![1.2, 0.3, 0.8, 0.5])?;
    let f_star = StateF::new(equilibrium_for(&kernels, &f0)?.f_star)?;

    let report = linearize(&f_to_g(&f_star), &kernels)?;
    println!("eigenvalues {:?}", report.eigenvalues);
    println!("verdict: {}", serde_json::to_string(&report.verdict)?);
    let predicted = report.predicted_rate.expect("not frozen");

    let op = CollisionOperator::new(f0.len(), &kernels)?;
    let t_max = 30.0 / predicted;
    let opts = IntegratorOptions::rk4(1e-4, t_max).record_every(10);
    let traj = integrate(&op, f0.as_slice(), &opts, Some(f_star.as_slice()))?;
    let fit = fit_rate(&traj, &f_star, 0.5)?;
    println!("predicted {predicted:.4}, fitted {:.4} (r^2 = {:.6})", fit.rate(), fit.r_squared);
    Ok(())
}

#[allow(dead_code)]
fn main() -> bosenet::Result<()> {
    run()
}
