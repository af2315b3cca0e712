// Evaluate the three collision operators on one ray and check that the
// velocity conserves energy (and mass, for C22).

use bosenet::collision::{c12_rhs, c13_rhs, c22_rhs, combined_rhs};
use bosenet::{Kernel, Kernels, Mode, StateF};

pub fn run() -> bosenet::Result<()> {
    let f = StateF::new(vec![2.0, 1.0, 1.0, 0.5])?;

    let v12 = c12_rhs(&f, &Kernel::ones(3))?;
    let v13 = c13_rhs(&f, &Kernel::ones(4))?;
    let v22 = c22_rhs(&f, &Kernel::ones(4))?;
    let all = combined_rhs(&f, &Kernels::ones(Mode::C12C22C13))?;

    for (name, v) in [("C12", &v12), ("C13", &v13), ("C22", &v22), ("all", &all)] {
        let de: f64 = v.iter().enumerate().map(|(i, x)| (i + 1) as f64 * x).sum();
        let dm: f64 = v.iter().sum();
        println!("{name:>4}: {v:?}  d(energy)={de:.1e} d(mass)={dm:.3}");
    }

    // a Bose-Einstein state is stationary for every operator
    let rho = 0.8f64;
    let bose = StateF::new((1..=4).map(|k| 1.0 / (rho * k as f64).exp_m1()).collect())?;
    println!("at Bose state: {:?}", combined_rhs(&bose, &Kernels::ones(Mode::C12C22C13))?);
    Ok(())
}

#[allow(dead_code)]
fn main() -> bosenet::Result<()> {
    run()
}
