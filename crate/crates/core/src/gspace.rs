//! The substitution `G_k = F_k / (F_k + 1)`, which maps `(0, inf)` onto
//! `(0, 1)` and turns each collision operator into
//!
//! ```text
//! G' = diag((1 - G_k)^2) * sum_{y <-> y'} [K_{y->y'}(G) - K_{y'->y}(G)] (y' - y)
//! ```
//!
//! with `K_{y->y'}(G) = k_{y<->y'} G^y H(G)` and
//! `H(G) = 1 / prod_{s in y + y'} (1 - G_s)` (product with multiplicity).
//! `H` is the same for both directions of a pair.

use serde::{Deserialize, Serialize};

use crate::collision::{Kernels, StateF};
use crate::error::{Error, Result};
use crate::network::{reversible_pairs, Complex, ReversiblePair};

/// Distance from 0 and 1 below which a G-state is rejected.
pub const BOUNDARY_GUARD: f64 = 1e-12;

/// Transformed occupation numbers, each strictly inside `(0, 1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct StateG(Vec<f64>);

impl StateG {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Domain("state must have at least one component".into()));
        }
        check_unit_interval(&values)?;
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

impl AsRef<[f64]> for StateG {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

pub(crate) fn check_unit_interval(g: &[f64]) -> Result<()> {
    match g.iter().position(|&v| !(v > BOUNDARY_GUARD && v < 1.0 - BOUNDARY_GUARD)) {
        Some(k) => Err(Error::Domain(format!(
            "G_{} = {} is not inside (0, 1) away from the boundary",
            k + 1,
            g[k]
        ))),
        None => Ok(()),
    }
}

pub fn f_to_g(f: &StateF) -> StateG {
    StateG(f.as_slice().iter().map(|&v| v / (v + 1.0)).collect())
}

pub fn g_to_f(g: &StateG) -> StateF {
    StateF::new(g.as_slice().iter().map(|&v| v / (1.0 - v)).collect()).expect("G in (0,1) maps to F > 0")
}

/// Rates of one reversible pair evaluated at a state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GRateTerm {
    pub reactant: Vec<u32>,
    pub product: Vec<u32>,
    pub rate_constant: f64,
    /// `K_{y->y'}(G)`.
    pub forward: f64,
    /// `K_{y'->y}(G)`.
    pub backward: f64,
    /// `K_{y->y'}(G) / (k G^y)`.
    pub scaled_forward: f64,
    /// `K_{y'->y}(G) / (k G^{y'})`.
    pub scaled_backward: f64,
}

/// The G-space vector field for a fixed ray length and kernel set.
#[derive(Clone, Debug)]
pub struct GSystem {
    dim: usize,
    pairs: Vec<ReversiblePair>,
}

fn one_minus_product(c: &Complex, g: &[f64]) -> f64 {
    c.multiplicities()
        .iter()
        .zip(g)
        .filter(|(&m, _)| m > 0)
        .map(|(&m, &v)| (1.0 - v).powi(m as i32))
        .product()
}

impl GSystem {
    pub fn new(dim: usize, kernels: &Kernels) -> Result<Self> {
        kernels.validate()?;
        let mut pairs = Vec::new();
        for (op, k) in kernels.enabled() {
            pairs.extend(reversible_pairs(dim, op, k)?);
        }
        Ok(Self { dim, pairs })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn pairs(&self) -> &[ReversiblePair] {
        &self.pairs
    }

    /// `H_{y,y'}(G)`, shared by both directions.
    pub fn scale(&self, pair: &ReversiblePair, g: &[f64]) -> f64 {
        1.0 / (one_minus_product(&pair.reactant, g) * one_minus_product(&pair.product, g))
    }

    pub fn rate_terms(&self, g: &StateG) -> Result<Vec<GRateTerm>> {
        self.check(g.as_slice())?;
        let g = g.as_slice();
        Ok(self
            .pairs
            .iter()
            .map(|p| {
                let h = self.scale(p, g);
                let gy = p.reactant.monomial(g);
                let gy2 = p.product.monomial(g);
                let forward = p.rate_constant * gy * h;
                let backward = p.rate_constant * gy2 * h;
                GRateTerm {
                    reactant: p.reactant.multiplicities().to_vec(),
                    product: p.product.multiplicities().to_vec(),
                    rate_constant: p.rate_constant,
                    forward,
                    backward,
                    scaled_forward: forward / (p.rate_constant * gy),
                    scaled_backward: backward / (p.rate_constant * gy2),
                }
            })
            .collect())
    }

    fn check(&self, g: &[f64]) -> Result<()> {
        if g.len() != self.dim {
            return Err(Error::Dimension { expected: self.dim, found: g.len() });
        }
        check_unit_interval(g)
    }

    /// `sum [K_{y->y'}(G) - K_{y'->y}(G)] (y' - y)`, the field before the
    /// diagonal `(1 - G)^2` factor.
    pub fn s_field(&self, g: &[f64]) -> Result<Vec<f64>> {
        self.check(g)?;
        let mut out = vec![0.0; self.dim];
        for p in &self.pairs {
            let net = p.rate_constant * (p.reactant.monomial(g) - p.product.monomial(g)) * self.scale(p, g);
            for (o, d) in out.iter_mut().zip(p.delta()) {
                *o += net * d;
            }
        }
        Ok(out)
    }

    pub fn eval(&self, g: &[f64], out: &mut [f64]) -> Result<()> {
        let s = self.s_field(g)?;
        for ((o, s), &v) in out.iter_mut().zip(s).zip(g) {
            *o = (1.0 - v) * (1.0 - v) * s;
        }
        Ok(())
    }

    pub fn g_rhs(&self, g: &StateG) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim];
        self.eval(g.as_slice(), &mut out)?;
        Ok(out)
    }
}

/// The G-space velocity of the kernel set at `g`.
pub fn g_rhs(g: &StateG, kernels: &Kernels) -> Result<Vec<f64>> {
    GSystem::new(g.len(), kernels)?.g_rhs(g)
}
