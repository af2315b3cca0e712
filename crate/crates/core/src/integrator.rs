//! Explicit time stepping with reject-and-halve at the domain boundary.
//!
//! Steps whose stages or result leave the open domain are retried with half
//! the step; nothing is ever clamped or projected.

use std::borrow::Cow;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analysis::lyapunov_f_slice;
use crate::collision::{conserved_slice, CollisionOperator};
use crate::error::{Error, Result};
use crate::gspace::{GSystem, BOUNDARY_GUARD};

pub const MAX_HALVINGS: usize = 60;

/// A velocity field on `R^dim`. Evaluation may fail outside its domain.
pub trait VectorField {
    fn dim(&self) -> usize;
    fn eval(&self, x: &[f64], out: &mut [f64]) -> Result<()>;
}

impl VectorField for CollisionOperator {
    fn dim(&self) -> usize {
        CollisionOperator::dim(self)
    }

    fn eval(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        CollisionOperator::eval(self, x, out)
    }
}

impl VectorField for GSystem {
    fn dim(&self) -> usize {
        GSystem::dim(self)
    }

    fn eval(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        GSystem::eval(self, x, out)
    }
}

/// Adapts a closure into a [`VectorField`].
pub struct FnField<F> {
    pub dim: usize,
    pub f: F,
}

impl<F: Fn(&[f64], &mut [f64]) -> Result<()>> VectorField for FnField<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        (self.f)(x, out)
    }
}

/// Coordinates a trajectory is integrated in: occupation numbers on
/// `(0, inf)^I` or their transforms on `(0, 1)^I`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Space {
    #[default]
    F,
    G,
}

impl Space {
    fn contains(self, x: &[f64]) -> bool {
        match self {
            Space::F => x.iter().all(|&v| v > 0.0 && v.is_finite()),
            Space::G => x.iter().all(|&v| v > BOUNDARY_GUARD && v < 1.0 - BOUNDARY_GUARD),
        }
    }

    fn to_f(self, x: &[f64]) -> Vec<f64> {
        match self {
            Space::F => x.to_vec(),
            Space::G => x.iter().map(|g| g / (1.0 - g)).collect(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum Method {
    Rk4Fixed { h: f64 },
    /// Dormand-Prince 5(4) with step control on the mixed error norm.
    Rk45Adaptive {
        #[serde(default = "default_abs_tol")]
        abs_tol: f64,
        #[serde(default = "default_rel_tol")]
        rel_tol: f64,
        #[serde(default = "default_h_init")]
        h_init: f64,
    },
}

fn default_abs_tol() -> f64 {
    1e-10
}

fn default_rel_tol() -> f64 {
    1e-8
}

fn default_h_init() -> f64 {
    1e-3
}

impl Method {
    pub fn rk4(h: f64) -> Self {
        Method::Rk4Fixed { h }
    }

    pub fn rk45() -> Self {
        Method::Rk45Adaptive { abs_tol: default_abs_tol(), rel_tol: default_rel_tol(), h_init: default_h_init() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegratorOptions {
    #[serde(flatten)]
    pub method: Method,
    pub t_max: f64,
    #[serde(default = "default_record_every")]
    pub record_every: usize,
    /// Stop once `max_k |F_k - F*_k|` drops below this (needs a reference).
    #[serde(default)]
    pub stop_epsilon: Option<f64>,
    #[serde(default)]
    pub space: Space,
}

fn default_record_every() -> usize {
    1
}

impl IntegratorOptions {
    pub fn rk4(h: f64, t_max: f64) -> Self {
        Self { method: Method::rk4(h), t_max, record_every: 1, stop_epsilon: None, space: Space::F }
    }

    pub fn record_every(mut self, n: usize) -> Self {
        self.record_every = n;
        self
    }

    pub fn stop_epsilon(mut self, eps: f64) -> Self {
        self.stop_epsilon = Some(eps);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let h_ok = match self.method {
            Method::Rk4Fixed { h } => h > 0.0 && h.is_finite(),
            Method::Rk45Adaptive { abs_tol, rel_tol, h_init } => {
                abs_tol > 0.0 && rel_tol >= 0.0 && h_init > 0.0 && h_init.is_finite()
            }
        };
        if !h_ok {
            return Err(Error::Config(format!("invalid step settings {:?}", self.method)));
        }
        if !(self.t_max > 0.0 && self.t_max.is_finite()) {
            return Err(Error::Config(format!("t_max must be positive, got {}", self.t_max)));
        }
        if self.record_every == 0 {
            return Err(Error::Config("record_every must be at least 1".into()));
        }
        Ok(())
    }
}

/// Diagnostics at one recorded sample. Quantities that need a reference
/// equilibrium are NaN when none was given.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub energy: f64,
    pub mass: f64,
    pub lyapunov: f64,
    pub max_err: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    space: Space,
    times: Vec<f64>,
    states: Vec<Vec<f64>>,
    diagnostics: Vec<Diagnostics>,
}

impl Trajectory {
    pub fn space(&self) -> Space {
        self.space
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// States in the coordinates they were integrated in.
    pub fn states(&self) -> &[Vec<f64>] {
        &self.states
    }

    /// States as occupation numbers.
    pub fn f_states(&self) -> Cow<'_, [Vec<f64>]> {
        match self.space {
            Space::F => Cow::Borrowed(&self.states),
            Space::G => Cow::Owned(self.states.iter().map(|x| Space::G.to_f(x)).collect()),
        }
    }

    pub fn diagnostics(&self) -> &[Diagnostics] {
        &self.diagnostics
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("trajectories hold the initial sample")
    }

    pub fn final_state(&self) -> &[f64] {
        self.states.last().expect("trajectories hold the initial sample")
    }

    /// CSV with header `t,F_1,...,F_I,energy,mass,lyapunov,max_err`.
    pub fn to_csv(&self) -> String {
        let dim = self.states.first().map_or(0, Vec::len);
        let mut out = String::from("t");
        for k in 1..=dim {
            write!(out, ",F_{k}").unwrap();
        }
        out.push_str(",energy,mass,lyapunov,max_err\n");
        for ((t, x), d) in self.times.iter().zip(self.f_states().iter()).zip(&self.diagnostics) {
            write!(out, "{}", fmt17(*t)).unwrap();
            for v in x.iter().chain([d.energy, d.mass, d.lyapunov, d.max_err].iter()) {
                write!(out, ",{}", fmt17(*v)).unwrap();
            }
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }
}

/// 17 significant digits.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

struct Recorder<'a> {
    space: Space,
    reference: Option<&'a [f64]>,
    traj: Trajectory,
}

impl Recorder<'_> {
    fn max_err(&self, f: &[f64]) -> f64 {
        match self.reference {
            Some(r) => f.iter().zip(r).fold(0.0f64, |m, (a, b)| m.max((a - b).abs())),
            None => f64::NAN,
        }
    }

    fn record(&mut self, t: f64, x: &[f64]) -> f64 {
        let f = self.space.to_f(x);
        let q = conserved_slice(&f);
        let lyapunov = match self.reference {
            Some(r) => lyapunov_f_slice(&f, r).unwrap_or(f64::NAN),
            None => f64::NAN,
        };
        let max_err = self.max_err(&f);
        self.traj.times.push(t);
        self.traj.states.push(x.to_vec());
        self.traj.diagnostics.push(Diagnostics { energy: q.energy, mass: q.mass, lyapunov, max_err });
        max_err
    }
}

struct Stepper<'a> {
    field: &'a dyn VectorField,
    space: Space,
    k: Vec<Vec<f64>>,
    tmp: Vec<f64>,
}

enum Attempt {
    Accepted(Vec<f64>, Option<f64>),
    /// Error-control rejection with the suggested next step.
    TooCoarse(f64),
    OutOfDomain,
}

// Dormand-Prince tableau
const DP_C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const DP_A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const DP_B: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const DP_E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

impl Stepper<'_> {
    /// Evaluates stage `i` at `x`; `false` if `x` is outside the domain.
    fn stage(&mut self, i: usize, x: &[f64]) -> Result<bool> {
        if !self.space.contains(x) {
            return Ok(false);
        }
        match self.field.eval(x, &mut self.k[i]) {
            Ok(()) => {}
            Err(Error::Domain(_)) => return Ok(false),
            Err(e) => return Err(e),
        }
        if let Some(j) = self.k[i].iter().position(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!("velocity component {} is {}", j + 1, self.k[i][j])));
        }
        Ok(true)
    }

    fn combine(&mut self, x: &[f64], h: f64, weights: &[f64]) {
        for (j, t) in self.tmp.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (w, k) in weights.iter().zip(&self.k) {
                if *w != 0.0 {
                    acc += w * k[j];
                }
            }
            *t = x[j] + h * acc;
        }
    }

    fn rk4(&mut self, x: &[f64], h: f64) -> Result<Attempt> {
        if !self.stage(0, x)? {
            return Ok(Attempt::OutOfDomain);
        }
        let plans: [(usize, [f64; 3]); 3] = [(1, [0.5, 0.0, 0.0]), (2, [0.0, 0.5, 0.0]), (3, [0.0, 0.0, 1.0])];
        for (i, w) in plans {
            self.combine(x, h, &w[..i]);
            let y = self.tmp.clone();
            if !self.stage(i, &y)? {
                return Ok(Attempt::OutOfDomain);
            }
        }
        self.combine(x, h, &[1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0]);
        let next = self.tmp.clone();
        Ok(if self.space.contains(&next) { Attempt::Accepted(next, None) } else { Attempt::OutOfDomain })
    }

    fn dopri(&mut self, x: &[f64], h: f64, abs_tol: f64, rel_tol: f64) -> Result<Attempt> {
        if !self.stage(0, x)? {
            return Ok(Attempt::OutOfDomain);
        }
        for i in 1..7 {
            self.combine(x, h, &DP_A[i][..i]);
            let y = self.tmp.clone();
            if !self.stage(i, &y)? {
                return Ok(Attempt::OutOfDomain);
            }
        }
        let next = self.tmp.clone();
        if !self.space.contains(&next) {
            return Ok(Attempt::OutOfDomain);
        }
        debug_assert!(DP_C.len() == DP_B.len());
        let mut err = 0.0f64;
        for j in 0..x.len() {
            let e: f64 = DP_E.iter().zip(&self.k).map(|(w, k)| w * k[j]).sum::<f64>() * h;
            let scale = abs_tol + rel_tol * x[j].abs().max(next[j].abs());
            err = err.max(e.abs() / scale);
        }
        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        Ok(if err <= 1.0 { Attempt::Accepted(next, Some(h * factor)) } else { Attempt::TooCoarse(h * factor) })
    }
}

/// Integrates `field` from `x0` (given in `opts.space` coordinates).
///
/// `reference`, when given, is an equilibrium in F coordinates used for the
/// Lyapunov and error diagnostics and for `stop_epsilon`.
pub fn integrate(
    field: &dyn VectorField,
    x0: &[f64],
    opts: &IntegratorOptions,
    reference: Option<&[f64]>,
) -> Result<Trajectory> {
    opts.validate()?;
    let dim = field.dim();
    if x0.len() != dim {
        return Err(Error::Dimension { expected: dim, found: x0.len() });
    }
    if let Some(r) = reference {
        if r.len() != dim {
            return Err(Error::Dimension { expected: dim, found: r.len() });
        }
    }
    if !opts.space.contains(x0) {
        return Err(Error::Domain(format!("initial state {x0:?} is outside the {:?} domain", opts.space)));
    }
    if opts.stop_epsilon.is_some() && reference.is_none() {
        return Err(Error::Config("stop_epsilon needs a reference equilibrium".into()));
    }
    let mut rec = Recorder {
        space: opts.space,
        reference,
        traj: Trajectory { space: opts.space, times: Vec::new(), states: Vec::new(), diagnostics: Vec::new() },
    };
    let n_stages = match opts.method {
        Method::Rk4Fixed { .. } => 4,
        Method::Rk45Adaptive { .. } => 7,
    };
    let mut stepper = Stepper { field, space: opts.space, k: vec![vec![0.0; dim]; n_stages], tmp: vec![0.0; dim] };
    let mut x = x0.to_vec();
    let mut t = 0.0;
    let first_err = rec.record(t, &x);
    if opts.stop_epsilon.is_some_and(|eps| first_err < eps) {
        return Ok(rec.traj);
    }
    let mut h_next = match opts.method {
        Method::Rk4Fixed { h } => h,
        Method::Rk45Adaptive { h_init, .. } => h_init,
    };
    let end_slack = 1e-12 * opts.t_max;
    let mut accepted = 0usize;
    loop {
        let remaining = opts.t_max - t;
        if remaining <= end_slack {
            break;
        }
        let mut h = h_next.min(remaining);
        let mut halvings = 0;
        let (next, suggestion) = loop {
            let attempt = match opts.method {
                Method::Rk4Fixed { .. } => stepper.rk4(&x, h)?,
                Method::Rk45Adaptive { abs_tol, rel_tol, .. } => stepper.dopri(&x, h, abs_tol, rel_tol)?,
            };
            match attempt {
                Attempt::Accepted(next, s) => break (next, s),
                Attempt::OutOfDomain | Attempt::TooCoarse(_) if halvings == MAX_HALVINGS => {
                    return Err(Error::Stiff { halvings: halvings as u32, t, state: x });
                }
                Attempt::OutOfDomain => h *= 0.5,
                Attempt::TooCoarse(smaller) => h = smaller.min(0.5 * h),
            }
            halvings += 1;
        };
        let full_step = h >= remaining;
        t = if full_step { opts.t_max } else { t + h };
        x = next;
        accepted += 1;
        if let Some(s) = suggestion {
            h_next = s;
        }
        let done = t >= opts.t_max - end_slack;
        if accepted.is_multiple_of(opts.record_every) || done {
            let err = rec.record(t, &x);
            if opts.stop_epsilon.is_some_and(|eps| err < eps) {
                break;
            }
        } else if let Some(eps) = opts.stop_epsilon {
            if rec.max_err(&opts.space.to_f(&x)) < eps {
                rec.record(t, &x);
                break;
            }
        }
    }
    Ok(rec.traj)
}
