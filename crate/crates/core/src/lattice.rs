//! Lattice points of the ball `|p| < R` and their decomposition into rays.
//!
//! Under the linear phonon dispersion `E(p) = c|p|`, a resonance
//! `p1 = p2 + p3` with `|p1| = |p2| + |p3|` forces the three momenta to be
//! positively collinear. The lattice system therefore splits into
//! independent one-dimensional chains `{k P0 : 1 <= k <= I}`, one for each
//! primitive direction `P0`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Integer lattice vector.
pub type Vec3 = [i64; 3];

/// Phonon dispersion parameters. Only documents the physical setup: the
/// sound speed cancels out of every resonance restricted to a ray.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DispersionConfig {
    c: f64,
}

impl DispersionConfig {
    pub fn from_speed(c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::Config(format!("sound speed must be positive, got {c}")));
        }
        Ok(Self { c })
    }

    /// `c = sqrt(g n_c / m)`.
    pub fn from_condensate(g: f64, n_c: f64, m: f64) -> Result<Self> {
        for (name, v) in [("g", g), ("n_c", n_c), ("m", m)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        Self::from_speed((g * n_c / m).sqrt())
    }

    pub fn speed(&self) -> f64 {
        self.c
    }

    /// `E(p) = c |p|`.
    pub fn energy(&self, p: Vec3) -> f64 {
        self.c * norm(p)
    }
}

/// Radius of the lattice ball.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeConfig {
    pub radius: f64,
}

impl LatticeConfig {
    pub fn new(radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::Config(format!("lattice radius must be positive, got {radius}")));
        }
        Ok(Self { radius })
    }
}

/// One decoupled chain: the lattice points `k * direction`, `1 <= k <= len`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Ray {
    pub direction: Vec3,
    pub len: usize,
}

impl Ray {
    /// The lattice point `k * direction`.
    pub fn point(&self, k: usize) -> Vec3 {
        let k = k as i64;
        [k * self.direction[0], k * self.direction[1], k * self.direction[2]]
    }
}

pub fn norm2(p: Vec3) -> i64 {
    p[0] * p[0] + p[1] * p[1] + p[2] * p[2]
}

pub fn norm(p: Vec3) -> f64 {
    (norm2(p) as f64).sqrt()
}

fn gcd(mut a: i64, mut b: i64) -> i64 {
    a = a.abs();
    b = b.abs();
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

fn content(p: Vec3) -> i64 {
    gcd(gcd(p[0], p[1]), p[2])
}

pub fn is_primitive(p: Vec3) -> bool {
    content(p) == 1
}

/// Divides `p` by the gcd of its components. Signs are kept, so the result
/// lies on the same side of the origin as `p`.
pub fn primitive_direction(p: Vec3) -> Result<Vec3> {
    let g = content(p);
    if g == 0 {
        return Err(Error::ZeroMomentum);
    }
    Ok([p[0] / g, p[1] / g, p[2] / g])
}

/// Largest `k >= 0` with `k |direction| < radius`.
pub fn ray_index_count(direction: Vec3, radius: f64) -> Result<usize> {
    if !is_primitive(direction) {
        return Err(Error::NotPrimitive(direction));
    }
    if radius <= 0.0 {
        return Ok(0);
    }
    let n2 = norm2(direction) as f64;
    let r2 = radius * radius;
    let mut k = (radius / n2.sqrt()).floor().max(0.0) as usize;
    // k^2 |P0|^2 is an exact integer in f64 at any realistic radius.
    while k > 0 && (k * k) as f64 * n2 >= r2 {
        k -= 1;
    }
    while ((k + 1) * (k + 1)) as f64 * n2 < r2 {
        k += 1;
    }
    Ok(k)
}

/// All nonzero points of `{p in Z^3 : |p| < R}` in ascending lexicographic
/// order.
pub fn lattice_points(cfg: &LatticeConfig) -> Vec<Vec3> {
    let r2 = cfg.radius * cfg.radius;
    let m = cfg.radius.ceil() as i64;
    let mut out = Vec::new();
    for x in -m..=m {
        for y in -m..=m {
            for z in -m..=m {
                let p = [x, y, z];
                if p != [0, 0, 0] && (norm2(p) as f64) < r2 {
                    out.push(p);
                }
            }
        }
    }
    out
}

/// Rays covering every nonzero lattice point exactly once, sorted by
/// direction. The origin is not part of any ray.
pub fn enumerate_rays(cfg: &LatticeConfig) -> Vec<Ray> {
    let mut rays: Vec<Ray> = lattice_points(cfg)
        .into_iter()
        .filter(|&p| is_primitive(p))
        .map(|direction| Ray {
            direction,
            len: ray_index_count(direction, cfg.radius).expect("primitive by filter"),
        })
        .collect();
    rays.sort();
    rays
}
