//! Brute-force reference implementations shared by the integration tests.
//! Nothing here calls into the library's evaluation code.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use bosenet::{Kernel, Kernels, Mode};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// The three operator sums written out with full index loops and explicit
/// resonance tests, summed over whichever kernels are present.
pub fn naive_rhs(f: &[f64], kernels: &Kernels) -> Vec<f64> {
    let n = f.len();
    let idx = 1..=n;
    let fv = |k: usize| f[k - 1];
    let mut out = vec![0.0; n];
    for k1 in 1..=n {
        let mut acc = 0.0;
        if let Some(k12) = kernels.k12.as_ref() {
            for k2 in idx.clone() {
                for k3 in idx.clone() {
                    if k2 + k3 == k1 {
                        acc += k12.value(&[k1, k2, k3])
                            * ((fv(k1) + 1.0) * fv(k2) * fv(k3) - fv(k1) * (fv(k2) + 1.0) * (fv(k3) + 1.0));
                    }
                }
            }
            for k2 in idx.clone() {
                for k3 in idx.clone() {
                    if k1 + k3 == k2 {
                        acc -= 2.0
                            * k12.value(&[k2, k1, k3])
                            * ((fv(k2) + 1.0) * fv(k1) * fv(k3) - fv(k2) * (fv(k1) + 1.0) * (fv(k3) + 1.0));
                    }
                }
            }
        }
        if let Some(k13) = kernels.k13.as_ref() {
            for k2 in idx.clone() {
                for k3 in idx.clone() {
                    for k4 in idx.clone() {
                        if k2 + k3 + k4 == k1 {
                            acc += k13.value(&[k1, k2, k3, k4])
                                * ((fv(k1) + 1.0) * fv(k2) * fv(k3) * fv(k4)
                                    - fv(k1) * (fv(k2) + 1.0) * (fv(k3) + 1.0) * (fv(k4) + 1.0));
                        }
                    }
                }
            }
            for k2 in idx.clone() {
                for k3 in idx.clone() {
                    for k4 in idx.clone() {
                        if k1 + k2 + k3 == k4 {
                            acc -= 3.0
                                * k13.value(&[k1, k2, k3, k4])
                                * ((fv(k4) + 1.0) * fv(k1) * fv(k2) * fv(k3)
                                    - fv(k4) * (fv(k1) + 1.0) * (fv(k2) + 1.0) * (fv(k3) + 1.0));
                        }
                    }
                }
            }
        }
        if let Some(k22) = kernels.k22.as_ref() {
            for k2 in idx.clone() {
                for k3 in idx.clone() {
                    for k4 in idx.clone() {
                        if k1 + k2 == k3 + k4 {
                            acc += k22.value(&[k1, k2, k3, k4])
                                * ((fv(k1) + 1.0) * (fv(k2) + 1.0) * fv(k3) * fv(k4)
                                    - fv(k1) * fv(k2) * (fv(k3) + 1.0) * (fv(k4) + 1.0));
                        }
                    }
                }
            }
        }
        out[k1 - 1] = acc;
    }
    out
}

/// Central-difference Jacobian, `J[i][j] = d f_i / d x_j`.
pub fn fd_jacobian(f: impl Fn(&[f64]) -> Vec<f64>, x: &[f64], h: f64) -> Vec<Vec<f64>> {
    let n = x.len();
    let mut cols = Vec::with_capacity(n);
    for j in 0..n {
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[j] += h;
        xm[j] -= h;
        let (fp, fm) = (f(&xp), f(&xm));
        cols.push(fp.iter().zip(&fm).map(|(a, b)| (a - b) / (2.0 * h)).collect::<Vec<f64>>());
    }
    (0..cols.first().map_or(0, Vec::len)).map(|i| (0..n).map(|j| cols[j][i]).collect()).collect()
}

/// `F_k = 1 / (e^{rho k} - 1)`.
pub fn bose(rho: f64, n: usize) -> Vec<f64> {
    (1..=n).map(|k| 1.0 / ((rho * k as f64).exp() - 1.0)).collect()
}

/// `F_k = 1 / (e^{rho2 (k-1) - rho1 (k-2)} - 1)`.
pub fn two_param(rho1: f64, rho2: f64, n: usize) -> Vec<f64> {
    (1..=n)
        .map(|k| 1.0 / ((rho2 * (k as f64 - 1.0) - rho1 * (k as f64 - 2.0)).exp() - 1.0))
        .collect()
}

pub fn energy(f: &[f64]) -> f64 {
    f.iter().enumerate().map(|(i, v)| (i + 1) as f64 * v).sum()
}

pub fn mass(f: &[f64]) -> f64 {
    f.iter().sum()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

/// `max(1, |v|_inf)`: differences are measured on this scale so that large
/// velocities are compared to working precision.
pub fn velocity_scale(v: &[f64]) -> f64 {
    v.iter().fold(1.0f64, |m, x| m.max(x.abs()))
}

pub fn random_state(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(0.05..3.0)).collect()
}

/// A random table kernel over every index tuple up to `n`.
pub fn random_kernel(rng: &mut ChaCha8Rng, arity: usize, n: usize) -> Kernel {
    Kernel::from_fn(arity, n, |_| rng.gen_range(0.1..2.0)).unwrap()
}

pub fn random_kernels(rng: &mut ChaCha8Rng, mode: Mode, n: usize) -> Kernels {
    Kernels::for_mode(mode, |op| random_kernel(rng, op.kernel_arity(), n))
}

/// A reaction given as reactant and product multiplicity vectors.
pub type RawReaction = (Vec<u32>, Vec<u32>);

/// Every minimal siphon by checking every subset against the definition,
/// as sorted 1-based index lists.
pub fn brute_force_siphons(n: usize, reactions: &[RawReaction]) -> Vec<Vec<usize>> {
    let subsets: Vec<Vec<usize>> = (1u32..1 << n)
        .map(|m| (1..=n).filter(|k| m >> (k - 1) & 1 == 1).collect())
        .collect();
    let is_siphon = |s: &Vec<usize>| {
        reactions.iter().all(|(re, pr)| {
            let produces = s.iter().any(|&k| pr[k - 1] > 0);
            let consumes = s.iter().any(|&k| re[k - 1] > 0);
            !produces || consumes
        })
    };
    let siphons: Vec<&Vec<usize>> = subsets.iter().filter(|s| is_siphon(s)).collect();
    let mut minimal: Vec<Vec<usize>> = siphons
        .iter()
        .filter(|s| !siphons.iter().any(|t| t.len() < s.len() && t.iter().all(|k| s.contains(k))))
        .map(|s| (*s).clone())
        .collect();
    minimal.sort();
    minimal
}

/// The reversible C22 skeleton `X_a + X_b <-> X_c + X_d`, `a + b = c + d`,
/// both directions, trivial exchanges dropped.
pub fn c22_skeleton(n: usize) -> Vec<RawReaction> {
    let mut out = Vec::new();
    for a in 1..=n {
        for b in a..=n {
            for c in 1..=n {
                for d in c..=n {
                    if a + b == c + d && (a, b) != (c, d) {
                        let mut re = vec![0; n];
                        let mut pr = vec![0; n];
                        re[a - 1] += 1;
                        re[b - 1] += 1;
                        pr[c - 1] += 1;
                        pr[d - 1] += 1;
                        out.push((re, pr));
                    }
                }
            }
        }
    }
    out
}

/// The C12 network of condensations and their companions written out by hand.
pub fn c12_reactions(n: usize) -> Vec<RawReaction> {
    let unit = |ks: &[usize]| {
        let mut v = vec![0u32; n];
        for &k in ks {
            v[k - 1] += 1;
        }
        v
    };
    let mut out = Vec::new();
    for k1 in 1..=n {
        for k2 in 1..=k1 / 2 {
            let k3 = k1 - k2;
            out.push((unit(&[k2, k3]), unit(&[k1])));
            out.push((unit(&[k1]), unit(&[k2, k3])));
            out.push((unit(&[k2, k1]), unit(&[k2, k2, k3])));
            if k2 != k3 {
                out.push((unit(&[k3, k1]), unit(&[k3, k3, k2])));
            }
        }
    }
    out
}

/// Every nonzero integer point with `|p| < radius`, grouped by the ray it
/// lies on: `(primitive direction, number of points)`, sorted by direction.
pub fn brute_force_rays(radius: f64) -> Vec<([i64; 3], usize)> {
    fn gcd(a: i64, b: i64) -> i64 {
        if b == 0 {
            a.abs()
        } else {
            gcd(b, a % b)
        }
    }
    let r = radius.ceil() as i64;
    let mut rays = std::collections::BTreeMap::new();
    for x in -r..=r {
        for y in -r..=r {
            for z in -r..=r {
                if (x, y, z) == (0, 0, 0) || ((x * x + y * y + z * z) as f64).sqrt() >= radius {
                    continue;
                }
                let g = gcd(gcd(x, y), z);
                *rays.entry([x / g, y / g, z / g]).or_insert(0usize) += 1;
            }
        }
    }
    rays.into_iter().collect()
}

fn bisect(mut lo: f64, mut hi: f64, decreasing: impl Fn(f64) -> f64) -> f64 {
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        if decreasing(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// The Bose parameter with `energy(bose(rho)) = e`, by plain bisection.
pub fn oracle_rho(e: f64, n: usize) -> f64 {
    bisect(1e-12, 60.0, |rho| energy(&bose(rho, n)) - e)
}

/// The two-parameter family written as `F_k = 1/(e^{a + b k} - 1)` with
/// `b = rho2 - rho1`, `a = 2 rho1 - rho2`: bisect `a` for the mass at each
/// `b`, then bisect `b` for the energy. Returns `(rho1, rho2)`.
pub fn oracle_two_param(m: f64, e: f64, n: usize) -> (f64, f64) {
    let state = |a: f64, b: f64| -> Vec<f64> { (1..=n).map(|k| 1.0 / ((a + b * k as f64).exp() - 1.0)).collect() };
    let a_for = |b: f64| {
        let floor = (1..=n).map(|k| -b * k as f64).fold(f64::NEG_INFINITY, f64::max);
        bisect(floor + 1e-14 * (1.0 + floor.abs()), floor + 80.0, |a| mass(&state(a, b)) - m)
    };
    let b = bisect(-20.0, 20.0, |b| energy(&state(a_for(b), b)) - e);
    let a = a_for(b);
    (a + b, a + 2.0 * b)
}

/// `dG/dt = (1 - G)^2 dF/dt` evaluated through the naive sums.
pub fn naive_g_rhs(g: &[f64], kernels: &Kernels) -> Vec<f64> {
    let f: Vec<f64> = g.iter().map(|x| x / (1.0 - x)).collect();
    naive_rhs(&f, kernels).iter().zip(g).map(|(v, x)| (1.0 - x) * (1.0 - x) * v).collect()
}
