// The entropy-like Lyapunov function along a trajectory.

use bosenet::analysis::{first_increase, lyapunov_series};
use bosenet::collision::CollisionOperator;
use bosenet::equilibrium::equilibrium_for;
use bosenet::integrator::{integrate, IntegratorOptions};
use bosenet::{Kernels, Mode, StateF};

pub fn run() -> bosenet::Result<()> {
    let kernels = Kernels::ones(Mode::C12C22);
    let f0 = StateF::new(vec![0.3, 2.0, 0.1, 1.2, 0.4])?;
    let eq = equilibrium_for(&kernels, &f0)?;
    let op = CollisionOperator::new(f0.len(), &kernels)?;
    let traj = integrate(&op, f0.as_slice(), &IntegratorOptions::rk4(1e-3, 2.0).record_every(200), None)?;

    let samples = lyapunov_series(&traj, &StateF::new(eq.f_star)?, &op)?;
    for s in &samples {
        println!("t = {:.1}  L = {:.10}  dL/dt = {:.3e}", s.t, s.value, s.dissipation);
    }
    match first_increase(&samples, 1e-12) {
        None => println!("non-increasing at every sample"),
        Some(i) => println!("increase at sample {i}"),
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> bosenet::Result<()> {
    run()
}
