// The C12 ray as a mass-action reaction network: export, siphons and a
// persistence certificate.

use bosenet::collision::c12_rhs;
use bosenet::network::{build_c12_network, energy_weights, mass_action_rhs, minimal_siphons, persistence_certificate};
use bosenet::{Kernel, StateF};

pub fn run() -> bosenet::Result<()> {
    let k = Kernel::ones(3);
    let net = build_c12_network(3, &k)?;
    println!("{}", serde_json::to_string_pretty(&net.to_export())?);

    let x = [0.7, 1.1, 0.4];
    println!("mass action: {:?}", mass_action_rhs(&net, &x)?);
    println!("collision:   {:?}", c12_rhs(&StateF::new(x.to_vec())?, &k)?);

    println!("minimal siphons: {:?}", minimal_siphons(&net)?);
    let cert = persistence_certificate(&net, &[vec![1.0; 3], energy_weights(3)])?;
    println!("semiflows valid: {:?}, certified: {}", cert.valid_semiflows, cert.certified);
    Ok(())
}

#[allow(dead_code)]
fn main() -> bosenet::Result<()> {
    run()
}
