//! Right-hand sides of the decoupled discrete kinetic equations on one ray.
//!
//! Species are indexed `1..=I` in formulas and `0..I` in slices. Every
//! operator is written as a sum over *ordered* index tuples of
//!
//! ```text
//! coeff * [ prod_{a in lhs}(F_a + 1) prod_{b in rhs} F_b
//!         - prod_{a in lhs} F_a      prod_{b in rhs}(F_b + 1) ]
//! ```
//!
//! accumulated into one output component:
//!
//! | operator | output | lhs        | rhs            | coeff | constraint          |
//! |----------|--------|------------|----------------|-------|---------------------|
//! | C12 gain | k1     | {k1}       | {k2, k3}       | K     | k2 + k3 = k1        |
//! | C12 loss | k1     | {k2}       | {k1, k3}       | -2K   | k1 + k3 = k2        |
//! | C13 gain | k1     | {k1}       | {k2, k3, k4}   | K     | k2 + k3 + k4 = k1   |
//! | C13 loss | k1     | {k2}       | {k1, k3, k4}   | -3K   | k1 + k3 + k4 = k2   |
//! | C22      | k1     | {k1, k2}   | {k3, k4}       | K     | k1 + k2 = k3 + k4   |
//!
//! The tuples are enumerated once per `(I, kernels)` into a [`CollisionOperator`].

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::Kernel;

/// Occupation numbers `F_k > 0` along one ray.
#[derive(Clone, Debug, PartialEq)]
pub struct StateF(Vec<f64>);

impl StateF {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Domain("state must have at least one component".into()));
        }
        check_positive(&values)?;
        Ok(Self(values))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl AsRef<[f64]> for StateF {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

pub(crate) fn check_positive(values: &[f64]) -> Result<()> {
    match values.iter().position(|&v| !(v > 0.0 && v.is_finite())) {
        Some(k) => Err(Error::Domain(format!(
            "occupation number F_{} = {} is not a positive finite number",
            k + 1,
            values[k]
        ))),
        None => Ok(()),
    }
}

/// Energy `sum k F_k` and mass `sum F_k` of a ray state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConservedQuantities {
    pub energy: f64,
    pub mass: f64,
}

pub fn conserved(f: &StateF) -> ConservedQuantities {
    conserved_slice(f.as_slice())
}

pub(crate) fn conserved_slice(f: &[f64]) -> ConservedQuantities {
    let mut energy = 0.0;
    let mut mass = 0.0;
    for (i, &v) in f.iter().enumerate() {
        energy += (i + 1) as f64 * v;
        mass += v;
    }
    ConservedQuantities { energy, mass }
}

/// The individual collision processes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Operator {
    /// One phonon splitting into two and the reverse.
    C12,
    /// One excitation splitting into three and the reverse.
    C13,
    /// Two-on-two scattering.
    C22,
}

impl Operator {
    pub fn kernel_arity(self) -> usize {
        match self {
            Operator::C12 => 3,
            Operator::C13 | Operator::C22 => 4,
        }
    }
}

/// The operator combinations that can drive a simulation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Mode {
    C12,
    C13,
    C22,
    C12C22,
    C12C22C13,
}

impl Mode {
    pub const ALL: [Mode; 5] = [Mode::C12, Mode::C13, Mode::C22, Mode::C12C22, Mode::C12C22C13];

    pub fn operators(self) -> &'static [Operator] {
        match self {
            Mode::C12 => &[Operator::C12],
            Mode::C13 => &[Operator::C13],
            Mode::C22 => &[Operator::C22],
            Mode::C12C22 => &[Operator::C12, Operator::C22],
            Mode::C12C22C13 => &[Operator::C12, Operator::C22, Operator::C13],
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::C12 => "c12",
            Mode::C13 => "c13",
            Mode::C22 => "c22",
            Mode::C12C22 => "c12+c22",
            Mode::C12C22C13 => "c12+c22+c13",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Mode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown mode {s:?}")))
    }
}

impl TryFrom<String> for Mode {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Mode> for String {
    fn from(m: Mode) -> String {
        m.as_str().to_string()
    }
}

/// The enabled operators and their kernels.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Kernels {
    pub k12: Option<Kernel>,
    pub k22: Option<Kernel>,
    pub k13: Option<Kernel>,
}

impl Kernels {
    /// Kernels identically 1 for every operator of `mode`.
    pub fn ones(mode: Mode) -> Self {
        Self::for_mode(mode, |op| Kernel::ones(op.kernel_arity()))
    }

    pub fn for_mode(mode: Mode, mut kernel: impl FnMut(Operator) -> Kernel) -> Self {
        let mut out = Kernels::default();
        for &op in mode.operators() {
            *out.slot_mut(op) = Some(kernel(op));
        }
        out
    }

    /// Enables `op` with kernel `k`, replacing any previous kernel.
    pub fn with(mut self, op: Operator, k: Kernel) -> Self {
        *self.slot_mut(op) = Some(k);
        self
    }

    pub fn get(&self, op: Operator) -> Option<&Kernel> {
        match op {
            Operator::C12 => self.k12.as_ref(),
            Operator::C13 => self.k13.as_ref(),
            Operator::C22 => self.k22.as_ref(),
        }
    }

    fn slot_mut(&mut self, op: Operator) -> &mut Option<Kernel> {
        match op {
            Operator::C12 => &mut self.k12,
            Operator::C13 => &mut self.k13,
            Operator::C22 => &mut self.k22,
        }
    }

    /// Enabled operators in the order C12, C22, C13.
    pub fn enabled(&self) -> impl Iterator<Item = (Operator, &Kernel)> {
        [Operator::C12, Operator::C22, Operator::C13]
            .into_iter()
            .filter_map(|op| self.get(op).map(|k| (op, k)))
    }

    pub fn is_empty(&self) -> bool {
        self.enabled().next().is_none()
    }

    /// The mode matching the enabled operator set, if there is one.
    pub fn mode(&self) -> Option<Mode> {
        let ops: Vec<Operator> = self.enabled().map(|(op, _)| op).collect();
        Mode::ALL.into_iter().find(|m| m.operators() == ops.as_slice())
    }

    pub fn validate(&self) -> Result<()> {
        if self.is_empty() {
            return Err(Error::NoOperator);
        }
        for (op, k) in self.enabled() {
            k.require_arity(op.kernel_arity())?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug)]
struct Term {
    out: usize,
    coeff: f64,
    lhs: [usize; 2],
    n_lhs: usize,
    rhs: [usize; 3],
    n_rhs: usize,
}

impl Term {
    #[inline]
    fn bracket(&self, f: &[f64]) -> f64 {
        let mut lhs_plus = 1.0;
        let mut lhs_bare = 1.0;
        for &a in &self.lhs[..self.n_lhs] {
            lhs_plus *= f[a] + 1.0;
            lhs_bare *= f[a];
        }
        let mut rhs_plus = 1.0;
        let mut rhs_bare = 1.0;
        for &b in &self.rhs[..self.n_rhs] {
            rhs_plus *= f[b] + 1.0;
            rhs_bare *= f[b];
        }
        lhs_plus * rhs_bare - lhs_bare * rhs_plus
    }
}

/// The collision right-hand side for a fixed ray length and kernel set,
/// with all resonant ordered tuples enumerated up front.
#[derive(Clone, Debug)]
pub struct CollisionOperator {
    dim: usize,
    terms: Vec<Term>,
}

impl CollisionOperator {
    pub fn new(dim: usize, kernels: &Kernels) -> Result<Self> {
        kernels.validate()?;
        let mut terms = Vec::new();
        for (op, k) in kernels.enabled() {
            match op {
                Operator::C12 => push_c12(dim, k, &mut terms),
                Operator::C13 => push_c13(dim, k, &mut terms),
                Operator::C22 => push_c22(dim, k, &mut terms),
            }
        }
        Ok(Self { dim, terms })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// True when no resonant tuple carries a nonzero rate, so every state is
    /// stationary.
    pub fn is_frozen(&self) -> bool {
        self.terms.is_empty()
    }

    /// Writes the velocity at `f` into `out`. Rejects nonpositive entries.
    pub fn eval(&self, f: &[f64], out: &mut [f64]) -> Result<()> {
        if f.len() != self.dim {
            return Err(Error::Dimension { expected: self.dim, found: f.len() });
        }
        if out.len() != self.dim {
            return Err(Error::Dimension { expected: self.dim, found: out.len() });
        }
        check_positive(f)?;
        out.fill(0.0);
        for t in &self.terms {
            out[t.out] += t.coeff * t.bracket(f);
        }
        Ok(())
    }

    pub fn rhs(&self, f: &StateF) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim];
        self.eval(f.as_slice(), &mut out)?;
        Ok(out)
    }
}

fn push(terms: &mut Vec<Term>, out: usize, coeff: f64, lhs: &[usize], rhs: &[usize]) {
    if coeff == 0.0 {
        return;
    }
    let mut t = Term { out: out - 1, coeff, lhs: [0; 2], n_lhs: lhs.len(), rhs: [0; 3], n_rhs: rhs.len() };
    for (slot, &a) in t.lhs.iter_mut().zip(lhs) {
        *slot = a - 1;
    }
    for (slot, &b) in t.rhs.iter_mut().zip(rhs) {
        *slot = b - 1;
    }
    terms.push(t);
}

fn push_c12(dim: usize, k: &Kernel, terms: &mut Vec<Term>) {
    for k1 in 1..=dim {
        for k2 in 1..=dim {
            if k2 < k1 {
                let k3 = k1 - k2;
                push(terms, k1, k.value(&[k1, k2, k3]), &[k1], &[k2, k3]);
            }
        }
        for k3 in 1..=dim {
            let k2 = k1 + k3;
            if k2 <= dim {
                push(terms, k1, -2.0 * k.value(&[k2, k1, k3]), &[k2], &[k1, k3]);
            }
        }
    }
}

fn push_c13(dim: usize, k: &Kernel, terms: &mut Vec<Term>) {
    for k1 in 1..=dim {
        for k2 in 1..=dim {
            for k3 in 1..=dim {
                if k2 + k3 < k1 {
                    let k4 = k1 - k2 - k3;
                    push(terms, k1, k.value(&[k1, k2, k3, k4]), &[k1], &[k2, k3, k4]);
                }
            }
        }
        for k3 in 1..=dim {
            for k4 in 1..=dim {
                let k2 = k1 + k3 + k4;
                if k2 <= dim {
                    push(terms, k1, -3.0 * k.value(&[k2, k1, k3, k4]), &[k2], &[k1, k3, k4]);
                }
            }
        }
    }
}

fn push_c22(dim: usize, k: &Kernel, terms: &mut Vec<Term>) {
    for k1 in 1..=dim {
        for k2 in 1..=dim {
            for k3 in 1..=dim {
                let total = k1 + k2;
                if k3 < total && total - k3 <= dim {
                    let k4 = total - k3;
                    // (k3, k4) a permutation of (k1, k2): the bracket vanishes identically
                    if k3 == k1 || k3 == k2 {
                        continue;
                    }
                    push(terms, k1, k.value(&[k1, k2, k3, k4]), &[k1, k2], &[k3, k4]);
                }
            }
        }
    }
}

fn single(op: Operator, f: &StateF, k: &Kernel) -> Result<Vec<f64>> {
    k.require_arity(op.kernel_arity())?;
    let mut kernels = Kernels::default();
    *kernels.slot_mut(op) = Some(k.clone());
    CollisionOperator::new(f.len(), &kernels)?.rhs(f)
}

/// The discrete C12 operator on one ray.
pub fn c12_rhs(f: &StateF, k12: &Kernel) -> Result<Vec<f64>> {
    single(Operator::C12, f, k12)
}

/// The discrete C13 operator on one ray.
pub fn c13_rhs(f: &StateF, k13: &Kernel) -> Result<Vec<f64>> {
    single(Operator::C13, f, k13)
}

/// The simplified scalar-index C22 operator.
pub fn c22_rhs(f: &StateF, k22: &Kernel) -> Result<Vec<f64>> {
    single(Operator::C22, f, k22)
}

/// Pointwise sum of the enabled operators.
pub fn combined_rhs(f: &StateF, kernels: &Kernels) -> Result<Vec<f64>> {
    CollisionOperator::new(f.len(), kernels)?.rhs(f)
}
