//! Equilibria fixed by the conserved quantities of a ray.
//!
//! Every equilibrium of these systems is detailed balanced:
//! `G^y = G^{y'}` on every reversible pair, i.e. `log G*` is orthogonal to
//! the stoichiometric subspace. With energy as the only conservation law
//! this gives the Bose-Einstein family `F*_k = 1 / (e^{rho k} - 1)`; with
//! mass and energy (pure C22) the two-parameter family
//! `F*_k = 1 / (e^{rho2 (k-1) - rho1 (k-2)} - 1)`. Rays whose networks
//! carry additional conservation laws are solved by [`solve_toric`].

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::collision::{conserved, Kernels, StateF};
use crate::error::{Error, Result};
use crate::gspace::GSystem;
use crate::network::left_kernel;

const BISECTION_STEPS: usize = 200;
const NEWTON_STEPS: usize = 200;
const MAX_HALVINGS: usize = 60;
/// Accepted conservation mismatch, relative to `max(1, |target|)`.
pub const RESIDUAL_TOL: f64 = 1e-10;
/// Newton keeps iterating below `RESIDUAL_TOL` while the residual still
/// halves per step, down to this level.
const POLISH_TOL: f64 = 1e-15;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum EquilibriumFamily {
    /// `F*_k = 1 / (e^{rho k} - 1)`.
    Bose { rho: f64 },
    /// `F*_k = 1 / (e^{rho2 (k-1) - rho1 (k-2)} - 1)`.
    TwoParam { rho1: f64, rho2: f64 },
    /// General detailed-balanced point given by `log G*`.
    Toric { log_g: Vec<f64> },
    /// No reaction acts on the ray; every state is stationary.
    Frozen { state: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumSolution {
    #[serde(flatten)]
    pub family: EquilibriumFamily,
    pub f_star: Vec<f64>,
    /// Conservation mismatches between `f_star` and the targets.
    pub residuals: Vec<f64>,
}

impl EquilibriumSolution {
    pub fn new(family: EquilibriumFamily, dim: usize) -> Result<Self> {
        let f_star = family_state(&family, dim)?.into_vec();
        Ok(Self { family, f_star, residuals: Vec::new() })
    }
}

/// `sum_{k=1}^{I} k / (e^{rho k} - 1)`, strictly decreasing in `rho`.
pub fn energy_of_rho(rho: f64, dim: usize) -> Result<f64> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::Domain(format!("rho must be positive, got {rho}")));
    }
    Ok((1..=dim).map(|k| k as f64 / (rho * k as f64).exp_m1()).sum())
}

/// Inverts [`energy_of_rho`] by bisection on a geometric midpoint.
pub fn solve_rho(energy: f64, dim: usize) -> Result<f64> {
    if !(energy > 0.0 && energy.is_finite()) {
        return Err(Error::Domain(format!("energy must be positive, got {energy}")));
    }
    if dim == 0 {
        return Err(Error::Domain("ray must have at least one index".into()));
    }
    let f = |rho: f64| energy_of_rho(rho, dim).map(|e| e - energy);
    let mut lo: f64 = 1e-8;
    let mut hi: f64 = 1e3;
    while f(lo)? < 0.0 {
        lo /= 16.0;
        if lo < 1e-300 {
            return Err(Error::Numeric(format!("cannot bracket rho for energy {energy}")));
        }
    }
    while f(hi)? > 0.0 {
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::Numeric(format!("cannot bracket rho for energy {energy}")));
        }
    }
    for _ in 0..BISECTION_STEPS {
        let mid = (lo * hi).sqrt();
        if mid <= lo || mid >= hi {
            return Ok(mid);
        }
        let r = f(mid)?;
        if r == 0.0 {
            return Ok(mid);
        }
        if r > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi / lo - 1.0 <= 2.0 * f64::EPSILON {
            return Ok((lo * hi).sqrt());
        }
    }
    Err(Error::Numeric(format!(
        "bisection for energy {energy} did not converge in {BISECTION_STEPS} steps"
    )))
}

fn two_param_exponent(rho1: f64, rho2: f64, k: usize) -> f64 {
    rho2 * (k as f64 - 1.0) - rho1 * (k as f64 - 2.0)
}

fn two_param_in_domain(rho: [f64; 2], dim: usize) -> bool {
    rho.iter().all(|v| v.is_finite())
        && two_param_exponent(rho[0], rho[1], 1) > 0.0
        && two_param_exponent(rho[0], rho[1], dim) > 0.0
}

/// `(ln sum F - ln M, ln sum k F - ln E)` and its Jacobian in `(rho1, rho2)`.
fn two_param_system(rho: [f64; 2], mass: f64, energy: f64, dim: usize) -> ([f64; 2], [[f64; 2]; 2], [f64; 2]) {
    let (mut s_m, mut s_e) = (0.0, 0.0);
    let mut jm = [0.0; 2];
    let mut je = [0.0; 2];
    for k in 1..=dim {
        let x = two_param_exponent(rho[0], rho[1], k);
        let f = 1.0 / x.exp_m1();
        let df = -f * (1.0 + f);
        let dx = [-(k as f64 - 2.0), k as f64 - 1.0];
        s_m += f;
        s_e += k as f64 * f;
        for j in 0..2 {
            jm[j] += df * dx[j];
            je[j] += k as f64 * df * dx[j];
        }
    }
    let r = [(s_m / mass).ln(), (s_e / energy).ln()];
    let jac = [[jm[0] / s_m, jm[1] / s_m], [je[0] / s_e, je[1] / s_e]];
    (r, jac, [s_m - mass, s_e - energy])
}

fn norm2(r: [f64; 2]) -> f64 {
    r[0].hypot(r[1])
}

/// Grid seed over `rho1, rho2 in {2^-4, ..., 2^4}` with the smallest residual.
fn two_param_seed(mass: f64, energy: f64, dim: usize) -> Option<[f64; 2]> {
    let grid: Vec<f64> = (-4..=4).map(|e| 2f64.powi(e)).collect();
    let mut best: Option<([f64; 2], f64)> = None;
    for &a in &grid {
        for &b in &grid {
            let rho = [a, b];
            if !two_param_in_domain(rho, dim) {
                continue;
            }
            let (r, _, _) = two_param_system(rho, mass, energy, dim);
            let n = norm2(r);
            if n.is_finite() && best.is_none_or(|(_, m)| n < m) {
                best = Some((rho, n));
            }
        }
    }
    best.map(|(rho, _)| rho)
}

/// Solves for `(rho1, rho2)` with `sum F*_k = mass` and
/// `sum k F*_k = energy` by damped Newton, starting from `seed` or from the
/// best point of a coarse grid.
pub fn solve_c22_equilibrium(mass: f64, energy: f64, dim: usize, seed: Option<(f64, f64)>) -> Result<(f64, f64)> {
    if dim < 2 {
        return Err(Error::Domain(format!("two-parameter family needs I >= 2, got {dim}")));
    }
    if !(mass > 0.0 && energy > mass && energy < dim as f64 * mass) {
        return Err(Error::Infeasible(format!(
            "need 0 < M < E < I*M, got M = {mass}, E = {energy}, I = {dim}"
        )));
    }
    let mut rho = match seed {
        Some((a, b)) if two_param_in_domain([a, b], dim) => [a, b],
        Some(s) => return Err(Error::Domain(format!("seed {s:?} gives a nonpositive exponent"))),
        None => two_param_seed(mass, energy, dim)
            .ok_or_else(|| Error::Numeric("no admissible grid seed".into()))?,
    };
    let within = |abs: [f64; 2], tol: f64| abs[0].abs() <= tol * mass.max(1.0) && abs[1].abs() <= tol * energy.max(1.0);
    let converged = |abs: [f64; 2]| within(abs, RESIDUAL_TOL);
    let (mut r, mut jac, mut abs) = two_param_system(rho, mass, energy, dim);
    let mut last = f64::INFINITY;
    for _ in 0..NEWTON_STEPS {
        let size = norm2(r);
        if within(abs, POLISH_TOL) || (converged(abs) && size >= 0.5 * last) {
            return Ok((rho[0], rho[1]));
        }
        last = size;
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        if !(det.abs() > 0.0 && det.is_finite()) {
            break;
        }
        let step = [
            -(jac[1][1] * r[0] - jac[0][1] * r[1]) / det,
            -(-jac[1][0] * r[0] + jac[0][0] * r[1]) / det,
        ];
        let current = norm2(r);
        let mut alpha = 1.0;
        let mut accepted = false;
        for _ in 0..MAX_HALVINGS {
            let trial = [rho[0] + alpha * step[0], rho[1] + alpha * step[1]];
            if two_param_in_domain(trial, dim) {
                let (r2, j2, a2) = two_param_system(trial, mass, energy, dim);
                if norm2(r2) < current || converged(a2) {
                    (rho, r, jac, abs) = (trial, r2, j2, a2);
                    accepted = true;
                    break;
                }
            }
            alpha *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if converged(abs) {
        return Ok((rho[0], rho[1]));
    }
    Err(Error::Numeric(format!(
        "Newton stagnated at rho = {rho:?} with residuals {abs:?}"
    )))
}

/// Finds `log G*` in the span of the conservation basis `basis` (one
/// orthonormal vector per column) such that `basis^T F* = targets`.
///
/// Minimizes the strictly convex function
/// `sum_k -ln(1 - e^{x_k}) - theta . targets` with `x = basis theta`,
/// whose gradient is `basis^T F(x) - targets`.
pub fn solve_toric(basis: &DMatrix<f64>, targets: &[f64]) -> Result<Vec<f64>> {
    let dim = basis.nrows();
    let m = basis.ncols();
    if targets.len() != m {
        return Err(Error::Dimension { expected: m, found: targets.len() });
    }
    let c = DVector::from_column_slice(targets);
    // Energy is conserved by every operator, so x = -energy is a feasible start.
    let energy = DVector::from_iterator(dim, (1..=dim).map(|k| k as f64));
    let coeffs = basis.transpose() * &energy;
    if (basis * &coeffs - &energy).norm() > 1e-8 * energy.norm() {
        return Err(Error::Domain("conservation basis does not contain the energy".into()));
    }
    let mut theta = -coeffs;
    let objective = |theta: &DVector<f64>| -> Option<f64> {
        let x = basis * theta;
        if x.iter().any(|&v| !(v < 0.0)) {
            return None;
        }
        Some(x.iter().map(|&v| -(-v.exp_m1()).ln()).sum::<f64>() - theta.dot(&c))
    };
    let scale = c.amax().max(1.0);
    let mut phi = objective(&theta).expect("feasible start");
    let mut last = f64::INFINITY;
    for _ in 0..NEWTON_STEPS {
        let x = basis * &theta;
        let f: DVector<f64> = x.map(|v| -1.0 / v.exp_m1() - 1.0);
        let grad = basis.transpose() * &f - &c;
        let g = grad.amax();
        if g <= POLISH_TOL * scale || (g <= RESIDUAL_TOL * scale && g >= 0.5 * last) {
            return Ok(x.iter().copied().collect());
        }
        last = g;
        let weights = f.map(|v| v * (1.0 + v));
        let hess = basis.transpose() * DMatrix::from_diagonal(&weights) * basis;
        let step = hess
            .cholesky()
            .ok_or_else(|| Error::Numeric("singular Hessian in equilibrium solve".into()))?
            .solve(&(-&grad));
        let slope = grad.dot(&step);
        let mut alpha = 1.0;
        let mut accepted = false;
        for _ in 0..MAX_HALVINGS {
            let trial = &theta + alpha * &step;
            if let Some(p) = objective(&trial) {
                if p <= phi + 1e-4 * alpha * slope || (p - phi).abs() <= 4.0 * f64::EPSILON * phi.abs() {
                    theta = trial;
                    phi = p;
                    accepted = true;
                    break;
                }
            }
            alpha *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    let x = basis * &theta;
    let f: DVector<f64> = x.map(|v| -1.0 / v.exp_m1() - 1.0);
    let grad = basis.transpose() * &f - &c;
    if grad.amax() <= RESIDUAL_TOL * scale {
        return Ok(x.iter().copied().collect());
    }
    Err(Error::Numeric(format!("equilibrium solve stagnated with residual {:e}", grad.amax())))
}

fn family_state(family: &EquilibriumFamily, dim: usize) -> Result<StateF> {
    let exponents: Vec<f64> = match family {
        EquilibriumFamily::Bose { rho } => (1..=dim).map(|k| rho * k as f64).collect(),
        EquilibriumFamily::TwoParam { rho1, rho2 } => {
            (1..=dim).map(|k| two_param_exponent(*rho1, *rho2, k)).collect()
        }
        EquilibriumFamily::Toric { log_g } => {
            if log_g.len() != dim {
                return Err(Error::Dimension { expected: dim, found: log_g.len() });
            }
            log_g.iter().map(|v| -v).collect()
        }
        EquilibriumFamily::Frozen { state } => return StateF::new(state.clone()),
    };
    if let Some(k) = exponents.iter().position(|&x| !(x > 0.0)) {
        return Err(Error::Domain(format!(
            "equilibrium exponent {} at k = {} is not positive",
            exponents[k],
            k + 1
        )));
    }
    StateF::new(exponents.iter().map(|x| 1.0 / x.exp_m1()).collect())
}

/// Materializes `F*` from a solution's family parameters.
pub fn equilibrium_state(sol: &EquilibriumSolution) -> Result<StateF> {
    family_state(&sol.family, sol.f_star.len())
}

fn in_span(basis: &DMatrix<f64>, v: &DVector<f64>) -> bool {
    let proj = basis * (basis.transpose() * v);
    (proj - v).norm() <= 1e-8 * v.norm()
}

/// Orthonormal conservation basis of the kernel set on a ray of length `dim`.
pub fn conservation_basis(dim: usize, kernels: &Kernels) -> Result<DMatrix<f64>> {
    let sys = GSystem::new(dim, kernels)?;
    let mut stoich = DMatrix::zeros(dim, sys.pairs().len());
    for (j, p) in sys.pairs().iter().enumerate() {
        for (i, d) in p.delta().into_iter().enumerate() {
            stoich[(i, j)] = d;
        }
    }
    Ok(left_kernel(&stoich))
}

/// The equilibrium reached from `f0`: picks the family from the
/// conservation laws of the kernel set and matches `f0`'s conserved values.
pub fn equilibrium_for(kernels: &Kernels, f0: &StateF) -> Result<EquilibriumSolution> {
    let dim = f0.len();
    let sys = GSystem::new(dim, kernels)?;
    if sys.pairs().is_empty() {
        return Ok(EquilibriumSolution {
            family: EquilibriumFamily::Frozen { state: f0.as_slice().to_vec() },
            f_star: f0.as_slice().to_vec(),
            residuals: Vec::new(),
        });
    }
    let basis = conservation_basis(dim, kernels)?;
    let energy_w = DVector::from_iterator(dim, (1..=dim).map(|k| k as f64));
    let mass_w = DVector::from_element(dim, 1.0);
    let q = conserved(f0);
    let family = match basis.ncols() {
        1 if in_span(&basis, &energy_w) => EquilibriumFamily::Bose { rho: solve_rho(q.energy, dim)? },
        2 if in_span(&basis, &energy_w) && in_span(&basis, &mass_w) => {
            let (rho1, rho2) = solve_c22_equilibrium(q.mass, q.energy, dim, None)?;
            EquilibriumFamily::TwoParam { rho1, rho2 }
        }
        _ => {
            let targets: Vec<f64> = (basis.transpose() * DVector::from_column_slice(f0.as_slice())).iter().copied().collect();
            EquilibriumFamily::Toric { log_g: solve_toric(&basis, &targets)? }
        }
    };
    let f_star = family_state(&family, dim)?.into_vec();
    let residuals = match &family {
        EquilibriumFamily::Bose { .. } => vec![conserved_mismatch(&f_star, f0).0],
        EquilibriumFamily::TwoParam { .. } => {
            let (e, m) = conserved_mismatch(&f_star, f0);
            vec![m, e]
        }
        _ => {
            let diff = DVector::from_iterator(dim, f_star.iter().zip(f0.as_slice()).map(|(a, b)| a - b));
            (basis.transpose() * diff).iter().copied().collect()
        }
    };
    Ok(EquilibriumSolution { family, f_star, residuals })
}

fn conserved_mismatch(f_star: &[f64], f0: &StateF) -> (f64, f64) {
    let a = crate::collision::conserved_slice(f_star);
    let b = conserved(f0);
    (a.energy - b.energy, a.mass - b.mass)
}
