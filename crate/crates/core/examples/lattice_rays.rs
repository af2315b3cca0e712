// Split the momentum lattice of a ball into independent rays.

use bosenet::lattice::{enumerate_rays, lattice_points, DispersionConfig, LatticeConfig};

pub fn run() -> bosenet::Result<()> {
    let cfg = LatticeConfig::new(3.0)?;
    let rays = enumerate_rays(&cfg);
    let points = lattice_points(&cfg).len();
    println!("R = {}: {} lattice points, {} rays", cfg.radius, points, rays.len());

    let mut by_len = std::collections::BTreeMap::new();
    for r in &rays {
        *by_len.entry(r.len).or_insert(0) += 1;
    }
    for (len, count) in by_len {
        println!("  {count} rays with I = {len}");
    }

    let phonons = DispersionConfig::from_speed(1.0)?;
    let long = rays.iter().max_by_key(|r| r.len).expect("nonempty lattice");
    for k in 1..=long.len {
        let p = long.point(k);
        println!("  {:?}: energy {:.4}", p, phonons.energy(p));
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> bosenet::Result<()> {
    run()
}
