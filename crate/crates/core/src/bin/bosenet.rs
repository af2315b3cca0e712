use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use bosenet::experiment::{
    analyze, equilibrium_from_conserved, equilibrium_from_state, network_report, simulate_to_dir, write_json,
    ExperimentConfig, InitialCondition, KernelSpecs,
};
use bosenet::integrator::{IntegratorOptions, Method, Space};
use bosenet::{Error, KernelSpec, Mode, Operator, Result, StateF};

#[derive(Parser)]
#[command(name = "bosenet", version, about = "Discrete kinetic equations of Bose gases as reaction networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one ray or every ray of a lattice; writes traj_ray{i}.csv and summary.json.
    Simulate(RunArgs),
    /// Equilibrium from conserved quantities (or from an initial state).
    Equilibrium(EquilibriumArgs),
    /// Compile the C12 reaction network and certify persistence.
    Network(NetworkArgs),
    /// Simulate one ray and compare the fitted rate with the linearization.
    Analyze(RunArgs),
}

#[derive(Args)]
struct KernelArgs {
    /// Kernel for every enabled operator: const:<v> or table:<path>.
    #[arg(long, default_value = "const:1")]
    kernel: KernelSpec,
    #[arg(long)]
    kernel12: Option<KernelSpec>,
    #[arg(long)]
    kernel22: Option<KernelSpec>,
    #[arg(long)]
    kernel13: Option<KernelSpec>,
}

impl KernelArgs {
    fn specs(&self) -> KernelSpecs {
        let pick = |o: &Option<KernelSpec>| o.clone().unwrap_or_else(|| self.kernel.clone());
        KernelSpecs { k12: pick(&self.kernel12), k22: pick(&self.kernel22), k13: pick(&self.kernel13) }
    }
}

#[derive(Args)]
struct RunArgs {
    /// JSON experiment config. It replaces every other flag; --out applies only if the config has no `out`.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "c12")]
    mode: Mode,
    #[arg(long = "I")]
    dim: Option<usize>,
    #[arg(long = "lattice-R")]
    lattice_radius: Option<f64>,
    #[command(flatten)]
    kernels: KernelArgs,
    /// Comma-separated initial state; random when omitted.
    #[arg(long)]
    init: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1.0)]
    scale: f64,
    #[arg(long = "t-max", default_value_t = 40.0)]
    t_max: f64,
    #[arg(long, default_value_t = 1e-3)]
    h: f64,
    /// rk4 or rk45.
    #[arg(long, default_value = "rk4")]
    method: String,
    #[arg(long = "record-every", default_value_t = 10)]
    record_every: usize,
    /// Integrate in G = F/(F+1) coordinates.
    #[arg(long)]
    g_space: bool,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

impl RunArgs {
    fn config(&self) -> Result<ExperimentConfig> {
        if let Some(path) = &self.config {
            return ExperimentConfig::load(path);
        }
        let init = match &self.init {
            Some(s) => InitialCondition::Explicit { values: parse_list(s)? },
            None => InitialCondition::RandomPositive { seed: self.seed, scale: self.scale },
        };
        let method = match self.method.as_str() {
            "rk4" => Method::rk4(self.h),
            "rk45" => match Method::rk45() {
                Method::Rk45Adaptive { abs_tol, rel_tol, .. } => Method::Rk45Adaptive { abs_tol, rel_tol, h_init: self.h },
                m => m,
            },
            other => return Err(Error::Config(format!("unknown method {other:?}; use rk4 or rk45"))),
        };
        let dim = match (self.dim, self.lattice_radius, &init) {
            (None, None, InitialCondition::Explicit { values }) => Some(values.len()),
            (d, _, _) => d,
        };
        let cfg = ExperimentConfig {
            mode: self.mode,
            dim,
            lattice_radius: self.lattice_radius,
            kernels: self.kernels.specs(),
            init,
            integrator: IntegratorOptions {
                method,
                t_max: self.t_max,
                record_every: self.record_every,
                stop_epsilon: None,
                space: if self.g_space { Space::G } else { Space::F },
            },
            out: Some(self.out.clone()),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct EquilibriumArgs {
    #[arg(long, default_value = "c12")]
    mode: Mode,
    #[arg(long = "I")]
    dim: Option<usize>,
    #[arg(long)]
    energy: Option<f64>,
    #[arg(long)]
    mass: Option<f64>,
    /// Initial state whose conserved quantities fix the equilibrium.
    #[arg(long)]
    init: Option<String>,
    #[command(flatten)]
    kernels: KernelArgs,
    /// Also write the JSON to this file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct NetworkArgs {
    #[arg(long = "I")]
    dim: usize,
    #[arg(long, default_value = "const:1")]
    kernel: KernelSpec,
    /// Seed for the random states of the equivalence check.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|e| Error::Config(format!("bad number {v:?}: {e}"))))
        .collect()
}

fn emit<T: serde::Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    if let Some(path) = out {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        write_json(path, value)?;
    }
    Ok(())
}

fn warn(warnings: &[String]) {
    for w in warnings {
        eprintln!("warning: {w}");
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(args) => {
            let cfg = args.config()?;
            let out = cfg.out.clone().unwrap_or_else(|| args.out.clone());
            let summary = simulate_to_dir(&cfg, &out)?;
            warn(&summary.warnings);
            for ray in &summary.rays {
                let rate = ray.fit.map_or("-".to_string(), |f| format!("{:.6}", f.rate()));
                println!(
                    "ray {} I={} frozen={} max_err={:.3e} rate={rate}",
                    ray.index, ray.dim, ray.frozen, ray.final_max_err
                );
            }
            if summary.fully_degenerate {
                println!("fully degenerate: no ray has any dynamics");
            }
            println!("wrote {}", out.join("summary.json").display());
        }
        Command::Equilibrium(args) => {
            let report = match (&args.init, args.energy) {
                (Some(init), _) => {
                    let f0 = StateF::new(parse_list(init)?).map_err(|e| Error::Config(e.to_string()))?;
                    let kernels = args.kernels.specs().build(args.mode)?;
                    equilibrium_from_state(args.mode, &kernels, &f0)?
                }
                (None, Some(energy)) => {
                    let dim = args.dim.ok_or_else(|| Error::Config("--I is required".into()))?;
                    equilibrium_from_conserved(args.mode, dim, energy, args.mass)?
                }
                (None, None) => return Err(Error::Config("give --energy (and --mass) or --init".into())),
            };
            warn(&report.warnings);
            emit(&report, args.out.as_deref())?;
        }
        Command::Network(args) => {
            let k = args.kernel.build(Operator::C12.kernel_arity())?;
            let report = network_report(args.dim, &k, args.seed, 100)?;
            warn(&report.warnings);
            emit(&report, args.out.as_deref())?;
        }
        Command::Analyze(args) => {
            let cfg = args.config()?;
            let report = analyze(&cfg)?;
            warn(&report.warnings);
            let out = cfg.out.clone().unwrap_or_else(|| args.out.clone());
            std::fs::create_dir_all(&out)?;
            emit(&report, Some(&out.join("report.json")))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
