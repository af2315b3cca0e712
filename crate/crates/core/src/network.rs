//! Chemical reaction networks whose mass-action kinetics reproduce the
//! collision operators, plus Petri-net structure (siphons, P-semiflows)
//! used to certify persistence.
//!
//! For C12 the network is the explicit polynomial one: every condensation
//! `X_{k2} + X_{k3} <-> X_{k1}` comes with irreversible companions
//! `X_{k2} + X_{k1} -> 2 X_{k2} + X_{k3}` (and the same with `k2`, `k3`
//! exchanged), with rate constants chosen so that mass-action kinetics
//! equals the C12 operator term for term. For C13 and C22 only the
//! reversible skeletons are built; their kinetics live in G-space.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::collision::{check_positive, Kernels, Operator};
use crate::error::{Error, Result};
use crate::kernel::Kernel;

/// Largest species count accepted by the exhaustive siphon search.
pub const SIPHON_SPECIES_BOUND: usize = 16;

/// A multiset of species, stored as multiplicities over `X_1..X_I`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Complex(Vec<u32>);

impl Complex {
    pub fn zero(species: usize) -> Self {
        Complex(vec![0; species])
    }

    /// Builds a complex from 1-based species indices, repeated by
    /// multiplicity.
    pub fn from_species(species: usize, members: &[usize]) -> Self {
        let mut c = Complex::zero(species);
        for &k in members {
            c.0[k - 1] += 1;
        }
        c
    }

    pub fn multiplicities(&self) -> &[u32] {
        &self.0
    }

    pub fn species_count(&self) -> usize {
        self.0.len()
    }

    /// Bit `k` is set when `X_{k+1}` occurs.
    pub fn support_mask(&self) -> u64 {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &m)| m > 0)
            .fold(0, |acc, (k, _)| acc | (1 << k))
    }

    /// `x^alpha`.
    pub fn monomial(&self, x: &[f64]) -> f64 {
        self.0
            .iter()
            .zip(x)
            .filter(|(&m, _)| m > 0)
            .map(|(&m, &v)| v.powi(m as i32))
            .product()
    }

    fn sparse(&self) -> BTreeMap<usize, u32> {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &m)| m > 0)
            .map(|(k, &m)| (k + 1, m))
            .collect()
    }
}

impl fmt::Display for Complex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (k, m) in self.sparse() {
            if !first {
                f.write_str(" + ")?;
            }
            first = false;
            if m > 1 {
                write!(f, "{m}")?;
            }
            write!(f, "X{k}")?;
        }
        if first {
            f.write_str("0")?;
        }
        Ok(())
    }
}

/// `reactant -> product` with a positive rate constant.
#[derive(Clone, Debug, PartialEq)]
pub struct Reaction {
    pub reactant: Complex,
    pub product: Complex,
    pub rate_constant: f64,
}

impl Reaction {
    pub fn new(reactant: Complex, product: Complex, rate_constant: f64) -> Result<Self> {
        if reactant == product {
            return Err(Error::Domain(format!("reaction {reactant} -> {product} is trivial")));
        }
        if reactant.species_count() != product.species_count() {
            return Err(Error::Dimension {
                expected: reactant.species_count(),
                found: product.species_count(),
            });
        }
        if !(rate_constant > 0.0 && rate_constant.is_finite()) {
            return Err(Error::Domain(format!("rate constant must be positive, got {rate_constant}")));
        }
        Ok(Self { reactant, product, rate_constant })
    }

    /// Reaction vector `beta - alpha`.
    pub fn delta(&self) -> Vec<i64> {
        self.product
            .0
            .iter()
            .zip(&self.reactant.0)
            .map(|(&b, &a)| b as i64 - a as i64)
            .collect()
    }
}

impl fmt::Display for Reaction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} -> {} ({})", self.reactant, self.product, self.rate_constant)
    }
}

/// A reversible reaction `y <-> y'` with a common rate constant.
#[derive(Clone, Debug, PartialEq)]
pub struct ReversiblePair {
    pub reactant: Complex,
    pub product: Complex,
    pub rate_constant: f64,
}

impl ReversiblePair {
    /// `y' - y`.
    pub fn delta(&self) -> Vec<f64> {
        self.product
            .0
            .iter()
            .zip(&self.reactant.0)
            .map(|(&b, &a)| b as f64 - a as f64)
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReactionNetwork {
    species: usize,
    reactions: Vec<Reaction>,
}

impl ReactionNetwork {
    pub fn new(species: usize, reactions: Vec<Reaction>) -> Result<Self> {
        for r in &reactions {
            if r.reactant.species_count() != species {
                return Err(Error::Dimension { expected: species, found: r.reactant.species_count() });
            }
        }
        Ok(Self { species, reactions })
    }

    pub fn species(&self) -> usize {
        self.species
    }

    pub fn reactions(&self) -> &[Reaction] {
        &self.reactions
    }

    pub fn is_empty(&self) -> bool {
        self.reactions.is_empty()
    }

    /// Columns are the reaction vectors `beta - alpha`; one row per species.
    pub fn stoichiometric_matrix(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.species, self.reactions.len());
        for (j, r) in self.reactions.iter().enumerate() {
            for (i, d) in r.delta().into_iter().enumerate() {
                m[(i, j)] = d as f64;
            }
        }
        m
    }

    /// Orthonormal basis of the linear conservation laws (left kernel of the
    /// stoichiometric matrix), one vector per column.
    pub fn conservation_basis(&self) -> DMatrix<f64> {
        left_kernel(&self.stoichiometric_matrix())
    }

    fn merge(mut self, other: ReactionNetwork) -> Self {
        self.reactions.extend(other.reactions);
        self
    }

    pub fn to_export(&self) -> NetworkExport {
        NetworkExport {
            species: (1..=self.species).map(|k| format!("X{k}")).collect(),
            reactions: self
                .reactions
                .iter()
                .map(|r| ReactionExport {
                    reactants: r.reactant.sparse(),
                    products: r.product.sparse(),
                    rate: r.rate_constant,
                })
                .collect(),
        }
    }

    pub fn from_export(export: &NetworkExport) -> Result<Self> {
        let species = export.species.len();
        let complex = |sparse: &BTreeMap<usize, u32>| -> Result<Complex> {
            let mut c = Complex::zero(species);
            for (&k, &m) in sparse {
                if k == 0 || k > species {
                    return Err(Error::Config(format!("species index {k} out of range")));
                }
                c.0[k - 1] = m;
            }
            Ok(c)
        };
        let reactions = export
            .reactions
            .iter()
            .map(|r| Reaction::new(complex(&r.reactants)?, complex(&r.products)?, r.rate))
            .collect::<Result<Vec<_>>>()?;
        Self::new(species, reactions)
    }
}

/// On-disk form of a network: species names and sparse complexes keyed by
/// 1-based species index.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkExport {
    pub species: Vec<String>,
    pub reactions: Vec<ReactionExport>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReactionExport {
    pub reactants: BTreeMap<usize, u32>,
    pub products: BTreeMap<usize, u32>,
    pub rate: f64,
}

pub(crate) fn left_kernel(stoich: &DMatrix<f64>) -> DMatrix<f64> {
    let n = stoich.nrows();
    if stoich.ncols() == 0 {
        return DMatrix::identity(n, n);
    }
    let gram = stoich * stoich.transpose();
    let eig = SymmetricEigen::new(gram);
    let scale = eig.eigenvalues.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let cols: Vec<_> = (0..n)
        .filter(|&i| eig.eigenvalues[i].abs() <= 1e-9 * scale)
        .map(|i| eig.eigenvectors.column(i).into_owned())
        .collect();
    if cols.is_empty() {
        DMatrix::zeros(n, 0)
    } else {
        DMatrix::from_columns(&cols)
    }
}

fn reaction(species: usize, reactant: &[usize], product: &[usize], rate: f64) -> Option<Reaction> {
    (rate > 0.0).then(|| Reaction {
        reactant: Complex::from_species(species, reactant),
        product: Complex::from_species(species, product),
        rate_constant: rate,
    })
}

/// The polynomial network whose mass-action kinetics is the C12 operator.
///
/// For each `k1 = k2 + k3` with `k2 < k3` (rate constant `2K` throughout):
/// `X_{k2}+X_{k3} -> X_{k1}`, `X_{k1} -> X_{k2}+X_{k3}`,
/// `X_{k2}+X_{k1} -> 2X_{k2}+X_{k3}`, `X_{k3}+X_{k1} -> 2X_{k3}+X_{k2}`.
/// For `k1 = 2 k2`: `2X_{k2} -> X_{k1}` (K), `X_{k1} -> 2X_{k2}` (K),
/// `X_{k2}+X_{k1} -> 3X_{k2}` (2K). Tuples with zero kernel are skipped.
pub fn build_c12_network(species: usize, k12: &Kernel) -> Result<ReactionNetwork> {
    k12.require_arity(3)?;
    let mut reactions = Vec::new();
    for k1 in 2..=species {
        for k2 in 1..=k1 / 2 {
            let k3 = k1 - k2;
            let k = k12.value(&[k1, k2, k3]);
            let rs = if k2 != k3 {
                vec![
                    reaction(species, &[k2, k3], &[k1], 2.0 * k),
                    reaction(species, &[k1], &[k2, k3], 2.0 * k),
                    reaction(species, &[k2, k1], &[k2, k2, k3], 2.0 * k),
                    reaction(species, &[k3, k1], &[k3, k3, k2], 2.0 * k),
                ]
            } else {
                vec![
                    reaction(species, &[k2, k2], &[k1], k),
                    reaction(species, &[k1], &[k2, k2], k),
                    reaction(species, &[k2, k1], &[k2, k2, k2], 2.0 * k),
                ]
            };
            reactions.extend(rs.into_iter().flatten());
        }
    }
    ReactionNetwork::new(species, reactions)
}

/// Number of distinct orderings of a small multiset.
fn orderings(parts: &[usize]) -> f64 {
    let mut sorted = parts.to_vec();
    sorted.sort_unstable();
    let mut denom = 1.0;
    let mut run = 1.0;
    for w in sorted.windows(2) {
        if w[0] == w[1] {
            run += 1.0;
            denom *= run;
        } else {
            run = 1.0;
        }
    }
    let n: f64 = (1..=parts.len()).map(|v| v as f64).product();
    n / denom
}

/// Reversible reactions of one operator with the rate constants that make
/// the G-space form agree with the F-space operator:
///
/// * C12: `X_a + X_b <-> X_c`, constant `K * #orderings(a, b)`.
/// * C13: `X_b + X_c + X_d <-> X_a`, constant `K * #orderings(b, c, d)`.
/// * C22: `X_a + X_b <-> X_c + X_d`, constant
///   `K * #orderings(a, b) * #orderings(c, d) / 2`.
pub fn reversible_pairs(species: usize, op: Operator, k: &Kernel) -> Result<Vec<ReversiblePair>> {
    k.require_arity(op.kernel_arity())?;
    let mut out = Vec::new();
    let mut add = |y: &[usize], y2: &[usize], rate: f64| {
        if rate > 0.0 {
            out.push(ReversiblePair {
                reactant: Complex::from_species(species, y),
                product: Complex::from_species(species, y2),
                rate_constant: rate,
            });
        }
    };
    match op {
        Operator::C12 => {
            for c in 2..=species {
                for a in 1..=c / 2 {
                    let b = c - a;
                    add(&[a, b], &[c], k.value(&[c, a, b]) * orderings(&[a, b]));
                }
            }
        }
        Operator::C13 => {
            for a in 3..=species {
                for b in 1..=a {
                    for c in b..=a {
                        if b + c < a && a - b - c >= c {
                            let d = a - b - c;
                            add(&[b, c, d], &[a], k.value(&[a, b, c, d]) * orderings(&[b, c, d]));
                        }
                    }
                }
            }
        }
        Operator::C22 => {
            for total in 2..=2 * species {
                let pairs: Vec<(usize, usize)> = (1..=total / 2)
                    .filter(|&a| total - a <= species)
                    .map(|a| (a, total - a))
                    .collect();
                for (i, &(a, b)) in pairs.iter().enumerate() {
                    for &(c, d) in &pairs[i + 1..] {
                        let rate = k.value(&[a, b, c, d]) * orderings(&[a, b]) * orderings(&[c, d]) / 2.0;
                        add(&[a, b], &[c, d], rate);
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Both directions of every reversible pair of one operator.
pub fn skeleton_network(species: usize, op: Operator, k: &Kernel) -> Result<ReactionNetwork> {
    let mut reactions = Vec::new();
    for p in reversible_pairs(species, op, k)? {
        reactions.push(Reaction::new(p.reactant.clone(), p.product.clone(), p.rate_constant)?);
        reactions.push(Reaction::new(p.product, p.reactant, p.rate_constant)?);
    }
    ReactionNetwork::new(species, reactions)
}

/// The network used for structural analysis of a kernel set: the C12
/// polynomial network when C12 is enabled, plus the C22 and C13 skeletons.
pub fn build_network(species: usize, kernels: &Kernels) -> Result<ReactionNetwork> {
    kernels.validate()?;
    let mut net = ReactionNetwork::new(species, Vec::new())?;
    for (op, k) in kernels.enabled() {
        let part = match op {
            Operator::C12 => build_c12_network(species, k)?,
            _ => skeleton_network(species, op, k)?,
        };
        net = net.merge(part);
    }
    Ok(net)
}

/// `x' = sum_j K_j x^{alpha_j} (beta_j - alpha_j)`.
pub fn mass_action_rhs(net: &ReactionNetwork, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != net.species {
        return Err(Error::Dimension { expected: net.species, found: x.len() });
    }
    check_positive(x)?;
    let mut out = vec![0.0; net.species];
    for r in &net.reactions {
        let flux = r.rate_constant * r.reactant.monomial(x);
        for (o, d) in out.iter_mut().zip(r.delta()) {
            if d != 0 {
                *o += flux * d as f64;
            }
        }
    }
    Ok(out)
}

/// A species set, as sorted 1-based indices.
pub type SpeciesSet = Vec<usize>;

fn mask_to_set(mask: u64) -> SpeciesSet {
    (0..64).filter(|k| mask >> k & 1 == 1).map(|k| k + 1).collect()
}

fn set_to_mask(set: &[usize]) -> u64 {
    set.iter().fold(0, |m, &k| m | 1 << (k - 1))
}

/// True when every reaction with a product in `set` also has a reactant in
/// `set`.
pub fn is_siphon(net: &ReactionNetwork, set: &[usize]) -> bool {
    let s = set_to_mask(set);
    s != 0
        && net
            .reactions
            .iter()
            .all(|r| r.product.support_mask() & s == 0 || r.reactant.support_mask() & s != 0)
}

/// All inclusion-minimal nonempty siphons, by exhaustive subset search.
pub fn minimal_siphons(net: &ReactionNetwork) -> Result<Vec<SpeciesSet>> {
    let n = net.species;
    if n > SIPHON_SPECIES_BOUND {
        return Err(Error::Capability { species: n, bound: SIPHON_SPECIES_BOUND });
    }
    let masks: Vec<(u64, u64)> = net
        .reactions
        .iter()
        .map(|r| (r.reactant.support_mask(), r.product.support_mask()))
        .collect();
    let mut siphons: Vec<u64> = (1u64..1 << n)
        .filter(|&s| masks.iter().all(|&(re, pr)| pr & s == 0 || re & s != 0))
        .collect();
    siphons.sort_by_key(|s| s.count_ones());
    let mut minimal: Vec<u64> = Vec::new();
    for s in siphons {
        if !minimal.iter().any(|&m| m & !s == 0) {
            minimal.push(s);
        }
    }
    let mut sets: Vec<SpeciesSet> = minimal.into_iter().map(mask_to_set).collect();
    sets.sort();
    Ok(sets)
}

/// True when `w` is a nonzero nonnegative vector orthogonal to every
/// reaction vector.
pub fn check_p_semiflow(net: &ReactionNetwork, w: &[f64]) -> bool {
    if w.len() != net.species || w.iter().any(|v| v.is_nan() || *v < 0.0) || w.iter().all(|&v| v == 0.0) {
        return false;
    }
    let scale = w.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    net.reactions.iter().all(|r| {
        let dot: f64 = r.delta().iter().zip(w).map(|(&d, &wk)| d as f64 * wk).sum();
        dot.abs() <= 1e-12 * scale
    })
}

/// Support of a weight vector as 1-based species indices.
pub fn support(w: &[f64]) -> SpeciesSet {
    w.iter().enumerate().filter(|(_, &v)| v != 0.0).map(|(k, _)| k + 1).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SiphonCover {
    pub siphon: SpeciesSet,
    /// Index into the candidate list of the first semiflow whose support
    /// lies in the siphon.
    pub covered_by: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PersistenceReport {
    pub siphons: Vec<SiphonCover>,
    /// Which candidates passed the semiflow check.
    pub valid_semiflows: Vec<bool>,
    pub uncovered: Vec<SpeciesSet>,
    pub certified: bool,
}

/// Certifies persistence when every minimal siphon contains the support of
/// some valid candidate P-semiflow. A network without reactions is
/// stationary and certified without a siphon search.
pub fn persistence_certificate(net: &ReactionNetwork, candidates: &[Vec<f64>]) -> Result<PersistenceReport> {
    let valid: Vec<bool> = candidates.iter().map(|w| check_p_semiflow(net, w)).collect();
    if net.is_empty() {
        return Ok(PersistenceReport {
            siphons: Vec::new(),
            valid_semiflows: valid,
            uncovered: Vec::new(),
            certified: true,
        });
    }
    let supports: Vec<u64> = candidates.iter().map(|w| set_to_mask(&support(w))).collect();
    let siphons: Vec<SiphonCover> = minimal_siphons(net)?
        .into_iter()
        .map(|siphon| {
            let s = set_to_mask(&siphon);
            let covered_by = (0..candidates.len()).find(|&j| valid[j] && supports[j] & s == supports[j]);
            SiphonCover { siphon, covered_by }
        })
        .collect();
    let uncovered: Vec<SpeciesSet> =
        siphons.iter().filter(|c| c.covered_by.is_none()).map(|c| c.siphon.clone()).collect();
    Ok(PersistenceReport { certified: uncovered.is_empty(), siphons, valid_semiflows: valid, uncovered })
}

/// `(1, 2, ..., I)`.
pub fn energy_weights(species: usize) -> Vec<f64> {
    (1..=species).map(|k| k as f64).collect()
}

/// `(1, 1, ..., 1)`.
pub fn mass_weights(species: usize) -> Vec<f64> {
    vec![1.0; species]
}
