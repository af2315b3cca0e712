// Equilibria from conserved quantities: the Bose family, the C22
// two-parameter family, and the general solver for extra invariants.

use bosenet::equilibrium::{conservation_basis, energy_of_rho, equilibrium_for, solve_c22_equilibrium, solve_rho};
use bosenet::{Kernels, Mode, StateF};

pub fn run() -> bosenet::Result<()> {
    let e = energy_of_rho(std::f64::consts::LN_2, 3)?;
    println!("energy at rho = ln 2, I = 3: {e:.6}; back to rho: {:.12}", solve_rho(e, 3)?);

    let (r1, r2) = solve_c22_equilibrium(31.0 / 21.0, 44.0 / 21.0, 3, None)?;
    println!("C22 (M, E) = (31/21, 44/21): rho1 = {r1:.9}, rho2 = {r2:.9}");

    // C13 on four points also conserves F_2 + F_4
    let kernels = Kernels::ones(Mode::C13);
    println!("C13 I=4 conservation basis has {} columns", conservation_basis(4, &kernels)?.ncols());
    let sol = equilibrium_for(&kernels, &StateF::new(vec![1.0, 0.5, 0.2, 0.3])?)?;
    println!("F* = {:?}, residuals {:?}", sol.f_star, sol.residuals);
    Ok(())
}

#[allow(dead_code)]
fn main() -> bosenet::Result<()> {
    run()
}
