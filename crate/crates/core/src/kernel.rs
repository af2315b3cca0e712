//! Symmetric collision-rate coefficients over scalar ray indices.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
enum KernelKind {
    Constant(f64),
    Table(BTreeMap<Vec<usize>, f64>),
}

/// A kernel `K_{k1,...,kn}` that is invariant under any permutation of its
/// indices and vanishes whenever an index is zero.
///
/// Tables are stored under sorted index tuples, so lookups never depend on
/// argument order. Tuples missing from a table evaluate to zero.
#[derive(Clone, Debug, PartialEq)]
pub struct Kernel {
    arity: usize,
    kind: KernelKind,
}

#[derive(Debug, Serialize, Deserialize)]
struct TableEntry {
    indices: Vec<usize>,
    value: f64,
}

fn canonical(indices: &[usize]) -> Vec<usize> {
    let mut key = indices.to_vec();
    key.sort_unstable();
    key
}

impl Kernel {
    pub fn constant(arity: usize, value: f64) -> Result<Self> {
        check_arity(arity)?;
        if !(value >= 0.0 && value.is_finite()) {
            return Err(Error::Kernel(format!("kernel value must be nonnegative, got {value}")));
        }
        Ok(Self { arity, kind: KernelKind::Constant(value) })
    }

    /// The default kernel: 1 on every tuple of positive indices.
    pub fn ones(arity: usize) -> Self {
        Self::constant(arity, 1.0).expect("valid constant kernel")
    }

    /// Builds a table from `(indices, value)` pairs. Two entries that agree
    /// after sorting their indices are rejected.
    pub fn table<I>(arity: usize, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<usize>, f64)>,
    {
        check_arity(arity)?;
        let mut map = BTreeMap::new();
        for (indices, value) in entries {
            if indices.len() != arity {
                return Err(Error::KernelArity { expected: arity, found: indices.len() });
            }
            if !(value >= 0.0 && value.is_finite()) {
                return Err(Error::Kernel(format!(
                    "kernel value at {indices:?} must be nonnegative, got {value}"
                )));
            }
            let key = canonical(&indices);
            if map.insert(key.clone(), value).is_some() {
                return Err(Error::Kernel(format!("duplicate kernel entry for indices {key:?}")));
            }
        }
        Ok(Self { arity, kind: KernelKind::Table(map) })
    }

    /// Table over every sorted tuple of indices in `1..=max_index`, with
    /// values supplied by `value`.
    pub fn from_fn(arity: usize, max_index: usize, mut value: impl FnMut(&[usize]) -> f64) -> Result<Self> {
        check_arity(arity)?;
        let mut entries = Vec::new();
        let mut tuple = vec![1usize; arity];
        if max_index >= 1 {
            loop {
                entries.push((tuple.clone(), value(&tuple)));
                // next nondecreasing tuple
                let mut pos = arity;
                while pos > 0 && tuple[pos - 1] == max_index {
                    pos -= 1;
                }
                if pos == 0 {
                    break;
                }
                let next = tuple[pos - 1] + 1;
                for t in &mut tuple[pos - 1..] {
                    *t = next;
                }
            }
        }
        Self::table(arity, entries)
    }

    /// Parses the JSON table format: an array of `{"indices": [...], "value": v}`.
    pub fn from_json(arity: usize, text: &str) -> Result<Self> {
        let entries: Vec<TableEntry> = serde_json::from_str(text)?;
        Self::table(arity, entries.into_iter().map(|e| (e.indices, e.value)))
    }

    pub fn load(arity: usize, path: &Path) -> Result<Self> {
        Self::from_json(arity, &std::fs::read_to_string(path)?)
    }

    /// Serializes a table kernel in the same format `from_json` reads.
    /// Constant kernels have no finite table and return `None`.
    pub fn to_json(&self) -> Option<String> {
        match &self.kind {
            KernelKind::Constant(_) => None,
            KernelKind::Table(map) => {
                let entries: Vec<TableEntry> = map
                    .iter()
                    .map(|(k, &v)| TableEntry { indices: k.clone(), value: v })
                    .collect();
                Some(serde_json::to_string_pretty(&entries).expect("serializable"))
            }
        }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn require_arity(&self, arity: usize) -> Result<()> {
        if self.arity == arity {
            Ok(())
        } else {
            Err(Error::KernelArity { expected: arity, found: self.arity })
        }
    }

    pub fn value(&self, indices: &[usize]) -> f64 {
        debug_assert_eq!(indices.len(), self.arity);
        if indices.contains(&0) {
            return 0.0;
        }
        match &self.kind {
            KernelKind::Constant(v) => *v,
            KernelKind::Table(map) => map.get(&canonical(indices)).copied().unwrap_or(0.0),
        }
    }
}

fn check_arity(arity: usize) -> Result<()> {
    if arity == 3 || arity == 4 {
        Ok(())
    } else {
        Err(Error::Kernel(format!("kernel arity must be 3 or 4, got {arity}")))
    }
}

/// Textual kernel description used in configs and on the command line:
/// `const:<value>` or `table:<path to JSON>`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum KernelSpec {
    Constant(f64),
    Table(String),
}

impl Default for KernelSpec {
    fn default() -> Self {
        KernelSpec::Constant(1.0)
    }
}

impl KernelSpec {
    pub fn build(&self, arity: usize) -> Result<Kernel> {
        match self {
            KernelSpec::Constant(v) => Kernel::constant(arity, *v),
            KernelSpec::Table(path) => Kernel::load(arity, Path::new(path)),
        }
    }
}

impl FromStr for KernelSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.split_once(':') {
            Some(("const", v)) => v
                .trim()
                .parse::<f64>()
                .map(KernelSpec::Constant)
                .map_err(|e| Error::Config(format!("bad kernel constant {v:?}: {e}"))),
            Some(("table", path)) if !path.is_empty() => Ok(KernelSpec::Table(path.to_string())),
            _ => Err(Error::Config(format!(
                "kernel spec must be const:<value> or table:<path>, got {s:?}"
            ))),
        }
    }
}

impl TryFrom<String> for KernelSpec {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<KernelSpec> for String {
    fn from(spec: KernelSpec) -> String {
        match spec {
            KernelSpec::Constant(v) => format!("const:{v:?}"),
            KernelSpec::Table(path) => format!("table:{path}"),
        }
    }
}
