// The same relaxation integrated in G = F/(F+1) coordinates.

use bosenet::gspace::{f_to_g, g_to_f, GSystem, StateG};
use bosenet::integrator::{integrate, IntegratorOptions, Space};
use bosenet::{Kernels, Mode, StateF};

pub fn run() -> bosenet::Result<()> {
    let kernels = Kernels::ones(Mode::C12C22);
    let f0 = StateF::new(vec![0.5, 2.5, 0.2, 1.0])?;
    let sys = GSystem::new(f0.len(), &kernels)?;
    let g0 = f_to_g(&f0);
    println!("G0 = {:?}", g0.as_slice());
    println!("dG/dt = {:?}", sys.g_rhs(&g0)?);

    let mut opts = IntegratorOptions::rk4(1e-3, 3.0).record_every(1000);
    opts.space = Space::G;
    let traj = integrate(&sys, g0.as_slice(), &opts, None)?;
    let g_end = StateG::new(traj.final_state().to_vec())?;
    println!("G(3) = {:?}", g_end.as_slice());
    println!("F(3) = {:?}", g_to_f(&g_end).as_slice());
    Ok(())
}

#[allow(dead_code)]
fn main() -> bosenet::Result<()> {
    run()
}
