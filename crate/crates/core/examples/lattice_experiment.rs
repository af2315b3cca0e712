// A full-lattice experiment from a JSON config, written to a directory.

use bosenet::experiment::{simulate_to_dir, ExperimentConfig};

const CONFIG: &str = r#"{
  "mode": "c12+c22",
  "lattice_radius": 3.0,
  "kernels": { "k12": "const:1", "k22": "const:1", "k13": "const:1" },
  "init": { "kind": "random_positive", "seed": 11, "scale": 1.0 },
  "integrator": { "method": "rk4_fixed", "h": 0.001, "t_max": 2.0, "record_every": 100 }
}"#;

pub fn run() -> bosenet::Result<()> {
    let cfg = ExperimentConfig::from_json(CONFIG)?;
    let out = std::env::temp_dir().join("bosenet_lattice_example");
    let summary = simulate_to_dir(&cfg, &out)?;
    for ray in summary.rays.iter().filter(|r| !r.frozen) {
        println!(
            "ray {:2} {:?} I={} equilibrium {} max err {:.2e}",
            ray.index,
            ray.direction.expect("lattice ray"),
            ray.dim,
            serde_json::to_string(&ray.equilibrium.family)?,
            ray.final_max_err
        );
    }
    let frozen = summary.rays.iter().filter(|r| r.frozen).count();
    println!("{frozen} of {} rays frozen; output in {}", summary.rays.len(), out.display());
    Ok(())
}

#[allow(dead_code)]
fn main() -> bosenet::Result<()> {
    run()
}
