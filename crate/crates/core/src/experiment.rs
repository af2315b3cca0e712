//! Configured experiments behind the command-line tool: simulate,
//! equilibrium, network and analyze.

use std::path::{Path, PathBuf};

use nalgebra::DVector;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::analysis::{fit_rate, g_from_log, linearize, RateFit, SpectralReport, Verdict};
use crate::collision::{conserved, CollisionOperator, ConservedQuantities, Kernels, Mode, Operator, StateF};
use crate::equilibrium::{
    conservation_basis, equilibrium_for, solve_c22_equilibrium, solve_rho, EquilibriumFamily, EquilibriumSolution,
};
use crate::error::{Error, Result};
use crate::gspace::{f_to_g, GSystem};
use crate::integrator::{integrate, IntegratorOptions, Space, Trajectory};
use crate::kernel::{Kernel, KernelSpec};
use crate::lattice::{enumerate_rays, LatticeConfig, Vec3};
use crate::network::{
    build_c12_network, energy_weights, mass_action_rhs, mass_weights, persistence_certificate, check_p_semiflow,
    NetworkExport, PersistenceReport, SIPHON_SPECIES_BOUND,
};

/// Name of the seeded generator behind every random initial condition.
pub const GENERATOR: &str = "ChaCha8";
/// Tail fraction used for rate fits in reports.
pub const FIT_WINDOW: f64 = 0.5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelSpecs {
    #[serde(default)]
    pub k12: KernelSpec,
    #[serde(default)]
    pub k22: KernelSpec,
    #[serde(default)]
    pub k13: KernelSpec,
}

impl Default for KernelSpecs {
    fn default() -> Self {
        Self::uniform(KernelSpec::default())
    }
}

impl KernelSpecs {
    pub fn uniform(spec: KernelSpec) -> Self {
        Self { k12: spec.clone(), k22: spec.clone(), k13: spec }
    }

    /// Loads the kernels needed by `mode`.
    pub fn build(&self, mode: Mode) -> Result<Kernels> {
        let mut out = Kernels::default();
        let mut built = Vec::new();
        for &op in mode.operators() {
            let spec = match op {
                Operator::C12 => &self.k12,
                Operator::C22 => &self.k22,
                Operator::C13 => &self.k13,
            };
            built.push((op, spec.build(op.kernel_arity())?));
        }
        for (op, k) in built {
            out = out.with(op, k);
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialCondition {
    Explicit { values: Vec<f64> },
    /// `F_k = scale * u_k`, `u_k` uniform on `[0.1, 2)`, drawn from a
    /// [`GENERATOR`] stream seeded with `seed`.
    RandomPositive { seed: u64, scale: f64 },
}

/// `dim` random occupation numbers from `seed`.
pub fn random_positive(seed: u64, scale: f64, dim: usize) -> Result<StateF> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::Config(format!("random scale must be positive, got {scale}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    StateF::new((0..dim).map(|_| scale * rng.gen_range(0.1..2.0)).collect())
}

/// Seed of the ray with primitive direction `p0` in a lattice run seeded by `base`.
pub fn ray_seed(base: u64, p0: Vec3) -> u64 {
    let stream = p0.iter().fold(0u64, |acc, &c| (acc << 21) | ((c + (1 << 20)) as u64 & 0x1f_ffff));
    let mut rng = ChaCha8Rng::seed_from_u64(base);
    rng.set_stream(stream);
    rng.next_u64()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub mode: Mode,
    /// Ray length for single-ray runs.
    #[serde(rename = "I", default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    /// Lattice radius for full-lattice runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lattice_radius: Option<f64>,
    #[serde(default)]
    pub kernels: KernelSpecs,
    pub init: InitialCondition,
    pub integrator: IntegratorOptions,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn single_ray(mode: Mode, dim: usize, init: InitialCondition, integrator: IntegratorOptions) -> Self {
        Self { mode, dim: Some(dim), lattice_radius: None, kernels: KernelSpecs::default(), init, integrator, out: None }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("bad config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable config")
    }

    pub fn validate(&self) -> Result<()> {
        self.integrator.validate()?;
        match (self.dim, self.lattice_radius) {
            (Some(0), _) => return Err(Error::Config("I must be at least 1".into())),
            (Some(_), None) => {}
            (None, Some(r)) => {
                LatticeConfig::new(r).map_err(|e| Error::Config(e.to_string()))?;
                if matches!(self.init, InitialCondition::Explicit { .. }) {
                    return Err(Error::Config("lattice runs need a random initial condition".into()));
                }
            }
            (Some(_), Some(_)) => return Err(Error::Config("give either I or a lattice radius, not both".into())),
            (None, None) => return Err(Error::Config("give I or a lattice radius".into())),
        }
        if let (Some(dim), InitialCondition::Explicit { values }) = (self.dim, &self.init) {
            if values.len() != dim {
                return Err(Error::Config(format!("initial state has {} entries, I = {dim}", values.len())));
            }
            StateF::new(values.clone()).map_err(|e| Error::Config(e.to_string()))?;
        }
        Ok(())
    }

    /// The rays this configuration runs, with their initial states.
    pub fn rays(&self) -> Result<Vec<RayJob>> {
        self.validate()?;
        if let Some(dim) = self.dim {
            let initial = match &self.init {
                InitialCondition::Explicit { values } => StateF::new(values.clone())?,
                InitialCondition::RandomPositive { seed, scale } => random_positive(*seed, *scale, dim)?,
            };
            let seed = match self.init {
                InitialCondition::RandomPositive { seed, .. } => Some(seed),
                InitialCondition::Explicit { .. } => None,
            };
            return Ok(vec![RayJob { direction: None, seed, initial }]);
        }
        let InitialCondition::RandomPositive { seed, scale } = self.init else {
            unreachable!("validated above")
        };
        let radius = self.lattice_radius.expect("validated above");
        enumerate_rays(&LatticeConfig::new(radius)?)
            .into_iter()
            .map(|ray| {
                let s = ray_seed(seed, ray.direction);
                Ok(RayJob { direction: Some(ray.direction), seed: Some(s), initial: random_positive(s, scale, ray.len)? })
            })
            .collect()
    }

    /// The single-ray configuration that reproduces one ray of a lattice run.
    pub fn standalone(&self, job: &RayJob) -> Self {
        let init = match (&self.init, job.seed) {
            (InitialCondition::RandomPositive { scale, .. }, Some(seed)) => {
                InitialCondition::RandomPositive { seed, scale: *scale }
            }
            _ => InitialCondition::Explicit { values: job.initial.as_slice().to_vec() },
        };
        Self { dim: Some(job.initial.len()), lattice_radius: None, init, out: None, ..self.clone() }
    }

    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        let Some(dim) = self.dim else { return out };
        if self.mode.operators().contains(&Operator::C13) && dim < 4 {
            out.push(format!("C13 is intended for rays with I >= 4; I = {dim}"));
        }
        if self.mode.operators().contains(&Operator::C22) && dim < 3 {
            out.push(format!("C22 has no resonant quadruples for I < 3; I = {dim}"));
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RayJob {
    pub direction: Option<Vec3>,
    pub seed: Option<u64>,
    pub initial: StateF,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RaySummary {
    pub index: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub direction: Option<Vec3>,
    #[serde(rename = "I")]
    pub dim: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub frozen: bool,
    pub initial: Vec<f64>,
    pub final_time: f64,
    pub final_state: Vec<f64>,
    pub conserved_initial: ConservedQuantities,
    pub conserved_final: ConservedQuantities,
    pub equilibrium: EquilibriumSolution,
    pub final_max_err: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit: Option<RateFit>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit_error: Option<String>,
    pub trajectory_file: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationSummary {
    pub config: ExperimentConfig,
    pub generator: String,
    /// Every ray is frozen: the run has no dynamics at all.
    pub fully_degenerate: bool,
    pub warnings: Vec<String>,
    pub rays: Vec<RaySummary>,
}

#[derive(Clone, Debug)]
pub struct RayRun {
    pub trajectory: Trajectory,
    pub summary: RaySummary,
}

/// Integrates one ray, measuring against the equilibrium fixed by its
/// initial conserved quantities.
pub fn run_ray(index: usize, job: &RayJob, kernels: &Kernels, opts: &IntegratorOptions) -> Result<RayRun> {
    let dim = job.initial.len();
    let op = CollisionOperator::new(dim, kernels)?;
    let eq = equilibrium_for(kernels, &job.initial)?;
    let trajectory = match opts.space {
        Space::F => integrate(&op, job.initial.as_slice(), opts, Some(&eq.f_star))?,
        Space::G => {
            let sys = GSystem::new(dim, kernels)?;
            integrate(&sys, f_to_g(&job.initial).as_slice(), opts, Some(&eq.f_star))?
        }
    };
    let final_state = trajectory.f_states().last().expect("initial sample").clone();
    let (fit, fit_error) = if op.is_frozen() {
        (None, None)
    } else {
        match fit_rate(&trajectory, &StateF::new(eq.f_star.clone())?, FIT_WINDOW) {
            Ok(f) => (Some(f), None),
            Err(e) => (None, Some(e.to_string())),
        }
    };
    let summary = RaySummary {
        index,
        direction: job.direction,
        dim,
        seed: job.seed,
        frozen: op.is_frozen(),
        initial: job.initial.as_slice().to_vec(),
        final_time: trajectory.final_time(),
        conserved_initial: conserved(&job.initial),
        conserved_final: conserved(&StateF::new(final_state.clone())?),
        final_max_err: trajectory.diagnostics().last().expect("initial sample").max_err,
        final_state,
        equilibrium: eq,
        fit,
        fit_error,
        trajectory_file: format!("traj_ray{index}.csv"),
    };
    Ok(RayRun { trajectory, summary })
}

/// Runs every ray of `config` without writing files.
pub fn simulate(config: &ExperimentConfig) -> Result<(SimulationSummary, Vec<Trajectory>)> {
    let kernels = config.kernels.build(config.mode)?;
    let jobs = config.rays()?;
    let mut warnings = config.warnings();
    let mut rays = Vec::with_capacity(jobs.len());
    let mut trajectories = Vec::with_capacity(jobs.len());
    for (i, job) in jobs.iter().enumerate() {
        let run = run_ray(i, job, &kernels, &config.integrator)?;
        if let Some(e) = &run.summary.fit_error {
            warnings.push(format!("ray {i}: rate fit skipped: {e}"));
        }
        rays.push(run.summary);
        trajectories.push(run.trajectory);
    }
    let summary = SimulationSummary {
        config: config.clone(),
        generator: GENERATOR.to_string(),
        fully_degenerate: rays.iter().all(|r| r.frozen),
        warnings,
        rays,
    };
    Ok((summary, trajectories))
}

/// Runs `config` and writes `traj_ray{i}.csv` and `summary.json` into `out`.
pub fn simulate_to_dir(config: &ExperimentConfig, out: &Path) -> Result<SimulationSummary> {
    let (summary, trajectories) = simulate(config)?;
    std::fs::create_dir_all(out)?;
    for (ray, traj) in summary.rays.iter().zip(&trajectories) {
        traj.write_csv(&out.join(&ray.trajectory_file))?;
    }
    write_json(&out.join("summary.json"), &summary)?;
    Ok(summary)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumReport {
    pub mode: Mode,
    #[serde(rename = "I")]
    pub dim: usize,
    #[serde(flatten)]
    pub solution: EquilibriumSolution,
    pub warnings: Vec<String>,
}

/// The equilibrium of `mode` on a ray of length `dim` with the given
/// conserved energy (and mass, for pure C22).
pub fn equilibrium_from_conserved(mode: Mode, dim: usize, energy: f64, mass: Option<f64>) -> Result<EquilibriumReport> {
    if dim == 0 {
        return Err(Error::Config("I must be at least 1".into()));
    }
    let mut warnings = Vec::new();
    let family = if mode == Mode::C22 {
        let mass = mass.ok_or_else(|| Error::Config("C22 equilibria need --mass".into()))?;
        if dim < 2 {
            return Err(Error::Config(format!("C22 equilibria need I >= 2, got {dim}")));
        }
        let (rho1, rho2) = solve_c22_equilibrium(mass, energy, dim, None)?;
        EquilibriumFamily::TwoParam { rho1, rho2 }
    } else {
        if !(energy > 0.0) {
            return Err(Error::Infeasible(format!("energy must be positive, got {energy}")));
        }
        let basis = conservation_basis(dim, &Kernels::ones(mode))?;
        if basis.ncols() > 1 {
            warnings.push(format!(
                "{} on I = {dim} conserves {} independent quantities; this is the Bose point with the given energy",
                mode.as_str(),
                basis.ncols()
            ));
        }
        EquilibriumFamily::Bose { rho: solve_rho(energy, dim)? }
    };
    let mut solution = EquilibriumSolution::new(family, dim)?;
    let q = crate::collision::conserved_slice(&solution.f_star);
    solution.residuals = match mass {
        Some(m) if mode == Mode::C22 => vec![q.mass - m, q.energy - energy],
        _ => vec![q.energy - energy],
    };
    Ok(EquilibriumReport { mode, dim, solution, warnings })
}

/// The equilibrium reached from `f0` under `kernels`.
pub fn equilibrium_from_state(mode: Mode, kernels: &Kernels, f0: &StateF) -> Result<EquilibriumReport> {
    Ok(EquilibriumReport { mode, dim: f0.len(), solution: equilibrium_for(kernels, f0)?, warnings: Vec::new() })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SemiflowCheck {
    pub name: String,
    pub weights: Vec<f64>,
    pub valid: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkReport {
    #[serde(rename = "I")]
    pub dim: usize,
    pub reaction_count: usize,
    pub reactions: Vec<String>,
    pub network: NetworkExport,
    pub semiflows: Vec<SemiflowCheck>,
    /// Absent when `I` exceeds the siphon search bound.
    pub persistence: Option<PersistenceReport>,
    pub persistent: Option<bool>,
    /// Largest `|mass-action rhs - C12 rhs|` over the sampled states.
    pub equivalence_residual: f64,
    pub equivalence_samples: usize,
    pub warnings: Vec<String>,
}

/// Compiles the C12 network on `dim` species and certifies it.
pub fn network_report(dim: usize, k12: &Kernel, seed: u64, samples: usize) -> Result<NetworkReport> {
    k12.require_arity(3)?;
    let net = build_c12_network(dim, k12)?;
    let candidates = [("energy", energy_weights(dim)), ("mass", mass_weights(dim))];
    let semiflows: Vec<SemiflowCheck> = candidates
        .iter()
        .map(|(name, w)| SemiflowCheck { name: name.to_string(), weights: w.clone(), valid: check_p_semiflow(&net, w) })
        .collect();
    let mut warnings = Vec::new();
    let persistence = if dim > SIPHON_SPECIES_BOUND {
        warnings.push(format!(
            "I = {dim} exceeds the siphon search bound {SIPHON_SPECIES_BOUND}; certificate skipped"
        ));
        None
    } else {
        Some(persistence_certificate(&net, &[energy_weights(dim)])?)
    };
    let op = CollisionOperator::new(dim, &Kernels::default().with(Operator::C12, k12.clone()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut residual = 0.0f64;
    for _ in 0..samples {
        let x: Vec<f64> = (0..dim).map(|_| rng.gen_range(0.05..3.0)).collect();
        let a = mass_action_rhs(&net, &x)?;
        let b = op.rhs(&StateF::new(x)?)?;
        residual = a.iter().zip(&b).fold(residual, |m, (p, q)| m.max((p - q).abs()));
    }
    Ok(NetworkReport {
        dim,
        reaction_count: net.reactions().len(),
        reactions: net.reactions().iter().map(|r| r.to_string()).collect(),
        network: net.to_export(),
        semiflows,
        persistent: persistence.as_ref().map(|p| p.certified),
        persistence,
        equivalence_residual: residual,
        equivalence_samples: samples,
        warnings,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub mode: Mode,
    #[serde(rename = "I")]
    pub dim: usize,
    pub equilibrium: EquilibriumSolution,
    pub spectral: SpectralReport,
    pub eigenvalues: Vec<f64>,
    pub verdict: Verdict,
    pub predicted_rate: Option<f64>,
    pub fitted_rate: Option<f64>,
    pub fit_r_squared: Option<f64>,
    /// `|fitted - predicted| / predicted`.
    pub relative_mismatch: Option<f64>,
    pub warnings: Vec<String>,
}

/// Simulates a single ray, linearizes at its equilibrium and compares the
/// predicted and fitted rates.
pub fn analyze(config: &ExperimentConfig) -> Result<AnalysisReport> {
    if config.dim.is_none() {
        return Err(Error::Config("analyze runs a single ray; give I".into()));
    }
    let kernels = config.kernels.build(config.mode)?;
    let job = config.rays()?.remove(0);
    let run = run_ray(0, &job, &kernels, &config.integrator)?;
    let eq = run.summary.equilibrium.clone();
    let g_star = match &eq.family {
        EquilibriumFamily::Toric { log_g } => g_from_log(log_g)?,
        _ => f_to_g(&StateF::new(eq.f_star.clone())?),
    };
    let mut spectral = linearize(&g_star, &kernels)?;
    let mut warnings = config.warnings();
    let fit = run.summary.fit;
    if let Some(e) = run.summary.fit_error {
        warnings.push(format!("rate fit skipped: {e}"));
    }
    spectral.prefactor_estimate = fit.map(|f| f.prefactor());
    let fitted_rate = fit.map(|f| f.rate());
    let relative_mismatch = match (fitted_rate, spectral.predicted_rate) {
        (Some(f), Some(p)) => Some((f - p).abs() / p),
        _ => None,
    };
    Ok(AnalysisReport {
        mode: config.mode,
        dim: job.initial.len(),
        equilibrium: eq,
        eigenvalues: spectral.eigenvalues.clone(),
        verdict: spectral.verdict,
        predicted_rate: spectral.predicted_rate,
        fitted_rate,
        fit_r_squared: fit.map(|f| f.r_squared),
        relative_mismatch,
        spectral,
        warnings,
    })
}

/// Conserved quantities of a state given as a plain vector.
pub fn conserved_of(values: &[f64]) -> Result<ConservedQuantities> {
    Ok(conserved(&StateF::new(values.to_vec())?))
}

/// Largest `|basis^T (a - b)|` entry, the conservation mismatch between two states.
pub fn conservation_gap(kernels: &Kernels, a: &[f64], b: &[f64]) -> Result<f64> {
    let basis = conservation_basis(a.len(), kernels)?;
    let d = DVector::from_iterator(a.len(), a.iter().zip(b).map(|(x, y)| x - y));
    Ok((basis.transpose() * d).amax())
}
