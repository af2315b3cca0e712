// Integrate one ray to equilibrium and watch the error decay.

use bosenet::collision::CollisionOperator;
use bosenet::equilibrium::equilibrium_for;
use bosenet::integrator::{integrate, IntegratorOptions};
use bosenet::{Kernels, Mode, StateF};

pub fn run() -> bosenet::Result<()> {
    let kernels = Kernels::ones(Mode::C12);
    let f0 = StateF::new(vec![0.4, 1.5, 0.2, 0.9])?;
    let eq = equilibrium_for(&kernels, &f0)?;
    println!("equilibrium: {:?}", eq.family);

    let op = CollisionOperator::new(f0.len(), &kernels)?;
    let opts = IntegratorOptions::rk4(1e-3, 4.0).record_every(500);
    let traj = integrate(&op, f0.as_slice(), &opts, Some(&eq.f_star))?;
    for (t, d) in traj.times().iter().zip(traj.diagnostics()) {
        println!("t = {t:4.1}  max err {:.3e}  energy {:.12}", d.max_err, d.energy);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> bosenet::Result<()> {
    run()
}
