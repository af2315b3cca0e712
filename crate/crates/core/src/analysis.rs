//! Lyapunov functions, linearization at equilibrium, and empirical
//! convergence-rate fits.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::collision::{check_positive, CollisionOperator, Kernels, StateF};
use crate::error::{Error, Result};
use crate::gspace::{check_unit_interval, f_to_g, GSystem, StateG};
use crate::integrator::Trajectory;

/// Largest admissible `||G'||_inf` at a point passed to [`linearize`].
pub const EQUILIBRIUM_TOL: f64 = 1e-10;
/// Tail errors at or below this are treated as numerical noise by [`fit_rate`].
pub const FIT_ERROR_CUTOFF: f64 = 1e-12;
/// Every tail error below this means the run is already at the error floor.
pub const ERROR_FLOOR: f64 = 1e-13;
pub const MIN_FIT_POINTS: usize = 20;

fn check_pair(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::Dimension { expected: b.len(), found: a.len() });
    }
    Ok(())
}

/// `sum [ln(1-G) + G ln G / (1-G) - ln G* / (1-G)]`.
pub fn lyapunov_g(g: &StateG, g_star: &StateG) -> Result<f64> {
    check_pair(g.as_slice(), g_star.as_slice())?;
    Ok(g.as_slice()
        .iter()
        .zip(g_star.as_slice())
        .map(|(&g, &gs)| (1.0 - g).ln() + (g * g.ln() - gs.ln()) / (1.0 - g))
        .sum())
}

/// `sum [F ln F - (1+F) ln(1+F) + (ln(F*+1) - ln F*)(F+1)]`, the same
/// function as [`lyapunov_g`] written in occupation numbers.
pub fn lyapunov_f(f: &StateF, f_star: &StateF) -> Result<f64> {
    lyapunov_f_slice(f.as_slice(), f_star.as_slice())
}

pub(crate) fn lyapunov_f_slice(f: &[f64], f_star: &[f64]) -> Result<f64> {
    check_pair(f, f_star)?;
    check_positive(f)?;
    check_positive(f_star)?;
    Ok(f.iter()
        .zip(f_star)
        .map(|(&f, &fs)| f * f.ln() - (1.0 + f) * f.ln_1p() + (fs.ln_1p() - fs.ln()) * (f + 1.0))
        .sum())
}

/// `dL/dG_k = ln(G_k / G*_k) / (1 - G_k)^2`.
pub fn lyapunov_gradient(g: &StateG, g_star: &StateG) -> Result<Vec<f64>> {
    check_pair(g.as_slice(), g_star.as_slice())?;
    Ok(g.as_slice()
        .iter()
        .zip(g_star.as_slice())
        .map(|(&g, &gs)| (g / gs).ln() / ((1.0 - g) * (1.0 - g)))
        .collect())
}

/// `dL/dt = sum_k F'_k ln(G_k / G*_k)` for the F-space velocity `velocity`.
pub fn dissipation_rate(f: &StateF, f_star: &StateF, velocity: &[f64]) -> Result<f64> {
    check_pair(f.as_slice(), f_star.as_slice())?;
    check_pair(velocity, f.as_slice())?;
    let g = f_to_g(f);
    let gs = f_to_g(f_star);
    Ok(velocity
        .iter()
        .zip(g.as_slice().iter().zip(gs.as_slice()))
        .map(|(v, (g, gs))| v * (g / gs).ln())
        .sum())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LyapunovSample {
    pub t: f64,
    pub value: f64,
    /// `dL/dt` at the sample, from the operator's velocity.
    pub dissipation: f64,
}

/// Lyapunov values and dissipation rates along a trajectory of `op`,
/// measured against `f_star`.
pub fn lyapunov_series(traj: &Trajectory, f_star: &StateF, op: &CollisionOperator) -> Result<Vec<LyapunovSample>> {
    let mut velocity = vec![0.0; f_star.len()];
    traj.f_states()
        .iter()
        .zip(traj.times())
        .map(|(f, &t)| {
            let value = lyapunov_f_slice(f, f_star.as_slice())?;
            op.eval(f, &mut velocity)?;
            let dissipation = dissipation_rate(&StateF::new(f.clone())?, f_star, &velocity)?;
            Ok(LyapunovSample { t, value, dissipation })
        })
        .collect()
}

/// Index of the first sample whose value exceeds its predecessor by more than `slack`.
pub fn first_increase(samples: &[LyapunovSample], slack: f64) -> Option<usize> {
    samples.windows(2).position(|w| w[1].value > w[0].value + slack).map(|i| i + 1)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    #[serde(rename = "negative definite")]
    NegativeDefinite,
    #[serde(rename = "not negative definite")]
    NotNegativeDefinite,
    #[serde(rename = "frozen")]
    Frozen,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralReport {
    pub g_star: Vec<f64>,
    /// Nonzero spectrum of the G-space Jacobian, ascending.
    pub eigenvalues: Vec<f64>,
    /// Minus the largest restricted eigenvalue.
    pub predicted_rate: Option<f64>,
    /// `exp(intercept)` of a rate fit, filled in once a trajectory is analyzed.
    pub prefactor_estimate: Option<f64>,
    pub verdict: Verdict,
    /// Full G-space Jacobian `diag((1-G*)^2) Jac(S)(G*)`, row-major.
    pub jacobian: Vec<Vec<f64>>,
}

struct Linearization {
    /// `sum c (y'-y)(y'-y)^T` with `c = k (G*)^y H(G*)`.
    m: DMatrix<f64>,
    stoich: DMatrix<f64>,
}

fn linearization(sys: &GSystem, g: &[f64]) -> Linearization {
    let n = sys.dim();
    let mut m = DMatrix::zeros(n, n);
    let mut stoich = DMatrix::zeros(n, sys.pairs().len());
    for (j, p) in sys.pairs().iter().enumerate() {
        let c = p.rate_constant * p.reactant.monomial(g) * sys.scale(p, g);
        let d = DVector::from_vec(p.delta());
        m += c * &d * d.transpose();
        stoich.set_column(j, &d);
    }
    Linearization { m, stoich }
}

fn require_equilibrium(sys: &GSystem, g_star: &StateG) -> Result<()> {
    let v = sys.g_rhs(g_star)?;
    let residual = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if residual > EQUILIBRIUM_TOL {
        return Err(Error::NotEquilibrium(residual));
    }
    Ok(())
}

/// `Jac(S)(G*) = -M W` with `W = diag(1/G*)`, i.e. `delta -> -sum c ((y'-y)*delta)(y'-y)`.
pub fn jacobian_s(sys: &GSystem, g_star: &StateG) -> Result<DMatrix<f64>> {
    require_equilibrium(sys, g_star)?;
    let lin = linearization(sys, g_star.as_slice());
    let w = DMatrix::from_diagonal(&DVector::from_iterator(sys.dim(), g_star.as_slice().iter().map(|g| 1.0 / g)));
    Ok(-lin.m * w)
}

/// `(J delta) * delta = sum_k (J delta)_k delta_k / G*_k`.
pub fn weighted_quadratic_form(j: &DMatrix<f64>, delta: &[f64], g_star: &[f64]) -> f64 {
    let d = DVector::from_column_slice(delta);
    let jd = j * &d;
    jd.iter().zip(delta).zip(g_star).map(|((a, b), g)| a * b / g).sum()
}

/// Orthonormal basis of the stoichiometric subspace `span{y' - y}`.
pub fn stoichiometric_basis(sys: &GSystem) -> DMatrix<f64> {
    range_basis(&linearization(sys, &vec![0.5; sys.dim()]).stoich)
}

fn range_basis(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    if a.ncols() == 0 {
        return DMatrix::zeros(n, 0);
    }
    let eig = SymmetricEigen::new(a * a.transpose());
    let scale = eig.eigenvalues.amax();
    let keep: Vec<usize> = (0..n).filter(|&i| eig.eigenvalues[i] > 1e-10 * scale).collect();
    DMatrix::from_fn(n, keep.len(), |r, c| eig.eigenvectors[(r, keep[c])])
}

/// Linearizes the G-space field at an equilibrium.
///
/// The Jacobian `-D M W` (`D = diag((1-G*)^2)`) is similar to the symmetric
/// `-A M A` with `A = (D W)^{1/2}`; its nonzero spectrum is that of `-A M A`
/// restricted to `A span{y'-y}`.
pub fn linearize(g_star: &StateG, kernels: &Kernels) -> Result<SpectralReport> {
    let sys = GSystem::new(g_star.len(), kernels)?;
    linearize_system(&sys, g_star)
}

pub fn linearize_system(sys: &GSystem, g_star: &StateG) -> Result<SpectralReport> {
    require_equilibrium(sys, g_star)?;
    let g = g_star.as_slice();
    let n = sys.dim();
    let lin = linearization(sys, g);
    let d = DVector::from_iterator(n, g.iter().map(|g| (1.0 - g) * (1.0 - g)));
    let w = DVector::from_iterator(n, g.iter().map(|g| 1.0 / g));
    let jac = -DMatrix::from_diagonal(&d) * &lin.m * DMatrix::from_diagonal(&w);
    let jacobian = (0..n).map(|i| jac.row(i).iter().copied().collect()).collect();
    if sys.pairs().is_empty() {
        return Ok(SpectralReport {
            g_star: g.to_vec(),
            eigenvalues: Vec::new(),
            predicted_rate: None,
            prefactor_estimate: None,
            verdict: Verdict::Frozen,
            jacobian,
        });
    }
    let a = DMatrix::from_diagonal(&d.component_mul(&w).map(f64::sqrt));
    let sym = -(&a * &lin.m * &a);
    let q = range_basis(&(&a * &lin.stoich));
    let restricted = q.transpose() * sym * &q;
    let restricted = (&restricted + restricted.transpose()) * 0.5;
    let mut eigenvalues: Vec<f64> = SymmetricEigen::new(restricted).eigenvalues.iter().copied().collect();
    eigenvalues.sort_by(f64::total_cmp);
    let largest = *eigenvalues.last().expect("nonempty stoichiometric subspace");
    Ok(SpectralReport {
        g_star: g.to_vec(),
        predicted_rate: Some(-largest),
        prefactor_estimate: None,
        verdict: if largest < 0.0 { Verdict::NegativeDefinite } else { Verdict::NotNegativeDefinite },
        eigenvalues,
        jacobian,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    /// Slope of `ln max_k |F_k - F*_k|` against `t`.
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: usize,
}

impl RateFit {
    pub fn rate(&self) -> f64 {
        -self.slope
    }

    /// `C1` in `max |F - F*| < C1 e^{-C2 t}`, estimated as `exp(intercept)`.
    pub fn prefactor(&self) -> f64 {
        self.intercept.exp()
    }
}

/// `max_k |F_k - F*_k|` for each recorded state.
pub fn max_errors(traj: &Trajectory, f_star: &[f64]) -> Vec<f64> {
    traj.f_states()
        .iter()
        .map(|f| f.iter().zip(f_star).fold(0.0f64, |m, (a, b)| m.max((a - b).abs())))
        .collect()
}

/// Least-squares line through `(t, ln max-error)` over the last `window`
/// fraction of the samples whose error exceeds [`FIT_ERROR_CUTOFF`].
pub fn fit_rate(traj: &Trajectory, f_star: &StateF, window: f64) -> Result<RateFit> {
    if !(window > 0.0 && window <= 1.0) {
        return Err(Error::Config(format!("fit window must be in (0, 1], got {window}")));
    }
    check_pair(f_star.as_slice(), &traj.f_states().first().cloned().unwrap_or_default())?;
    let errors = max_errors(traj, f_star.as_slice());
    let above: Vec<usize> = (0..errors.len()).filter(|&i| errors[i] > FIT_ERROR_CUTOFF).collect();
    if above.is_empty() && errors.iter().all(|&e| e < ERROR_FLOOR) {
        return Err(Error::ErrorFloor(errors.iter().copied().fold(0.0, f64::max)));
    }
    let take = ((above.len() as f64 * window).ceil() as usize).min(above.len());
    let pts: Vec<(f64, f64)> = above[above.len() - take..]
        .iter()
        .map(|&i| (traj.times()[i], errors[i].ln()))
        .collect();
    if pts.len() < MIN_FIT_POINTS {
        return Err(Error::TooFewSamples { needed: MIN_FIT_POINTS, found: pts.len() });
    }
    Ok(linear_fit(&pts))
}

fn linear_fit(pts: &[(f64, f64)]) -> RateFit {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    RateFit { slope, intercept: my - slope * mx, r_squared, points: pts.len() }
}

/// G-state from `log G`, checked against the unit interval.
pub fn g_from_log(log_g: &[f64]) -> Result<StateG> {
    let g: Vec<f64> = log_g.iter().map(|v| v.exp()).collect();
    check_unit_interval(&g)?;
    StateG::new(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::collision::{combined_rhs, Mode};

    fn sg(v: &[f64]) -> StateG {
        StateG::new(v.to_vec()).unwrap()
    }

    fn sf(v: &[f64]) -> StateF {
        StateF::new(v.to_vec()).unwrap()
    }

    #[test]
    fn lyapunov_examples() {
        assert!(lyapunov_g(&sg(&[0.5]), &sg(&[0.5])).unwrap().abs() < 1e-15);
        let v = lyapunov_g(&sg(&[0.5, 0.25]), &sg(&[0.5, 0.25])).unwrap();
        assert!((v - 3f64.ln()).abs() < 1e-15);
        assert!(lyapunov_f(&sf(&[1.0]), &sf(&[1.0])).unwrap().abs() < 1e-15);
        let v = lyapunov_f(&sf(&[1.0, 1.0 / 3.0]), &sf(&[1.0, 1.0 / 3.0])).unwrap();
        assert!((v - 3f64.ln()).abs() < 1e-15);
        let (f, fs) = (sf(&[2.0, 1.0 / 3.0]), sf(&[1.0, 1.0 / 3.0]));
        let a = lyapunov_f(&f, &fs).unwrap();
        let b = lyapunov_g(&f_to_g(&f), &f_to_g(&fs)).unwrap();
        assert!((a - b).abs() < 1e-14);
    }

    #[test]
    fn dissipation_is_negative_off_equilibrium() {
        let f = sf(&[2.0, 0.1, 0.7]);
        let fs = sf(&[1.0, 1.0 / 3.0, 1.0 / 7.0]);
        let v = combined_rhs(&f, &Kernels::ones(Mode::C12)).unwrap();
        assert!(dissipation_rate(&f, &fs, &v).unwrap() < 0.0);
    }

    #[test]
    fn frozen_and_non_equilibrium() {
        let r = linearize(&sg(&[0.5]), &Kernels::ones(Mode::C12)).unwrap();
        assert_eq!(r.verdict, Verdict::Frozen);
        assert!(r.eigenvalues.is_empty() && r.predicted_rate.is_none());
        assert!(matches!(
            linearize(&sg(&[0.5, 0.5]), &Kernels::ones(Mode::C12)),
            Err(Error::NotEquilibrium(_))
        ));
    }

    #[test]
    fn c12_two_point_spectrum() {
        let r = linearize(&sg(&[0.5, 0.25]), &Kernels::ones(Mode::C12)).unwrap();
        assert_eq!(r.verdict, Verdict::NegativeDefinite);
        assert_eq!(r.eigenvalues.len(), 1);
        // one pair, y'-y = (-2, 1): eigenvalue = -c (4 d1/g1 + d2/g2)
        let (g1, g2) = (0.5f64, 0.25f64);
        let c = g1 * g1 / ((1.0 - g1).powi(2) * (1.0 - g2));
        let want = -c * (4.0 * (1.0 - g1).powi(2) / g1 + (1.0 - g2).powi(2) / g2);
        assert!((r.eigenvalues[0] - want).abs() < 1e-13, "{:?} {want}", r.eigenvalues);
    }

    #[test]
    fn linear_fit_recovers_line() {
        let pts: Vec<(f64, f64)> = (0..30).map(|i| (i as f64, 2.0 - 0.5 * i as f64)).collect();
        let fit = linear_fit(&pts);
        assert!((fit.slope + 0.5).abs() < 1e-14 && (fit.intercept - 2.0).abs() < 1e-13);
        assert!((fit.r_squared - 1.0).abs() < 1e-14);
    }
}
