mod common;

use proptest::prelude::*;

use bosenet::analysis::{lyapunov_f, lyapunov_g, lyapunov_gradient};
use bosenet::collision::{conserved, CollisionOperator};
use bosenet::equilibrium::{energy_of_rho, solve_c22_equilibrium, solve_rho};
use bosenet::experiment::{simulate, ExperimentConfig, InitialCondition, KernelSpecs};
use bosenet::gspace::{f_to_g, g_to_f, GSystem, StateG};
use bosenet::integrator::{integrate, IntegratorOptions};
use bosenet::lattice::{enumerate_rays, lattice_points, LatticeConfig};
use bosenet::{Kernel, Kernels, Mode, StateF};

use common::*;

const MODES: [Mode; 5] = [Mode::C12, Mode::C13, Mode::C22, Mode::C12C22, Mode::C12C22C13];

fn mode() -> impl Strategy<Value = Mode> {
    proptest::sample::select(MODES.to_vec())
}

fn state(max_dim: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(0.05f64..3.0, 1..=max_dim)
}

fn rhs(f: &[f64], kernels: &Kernels) -> Vec<f64> {
    CollisionOperator::new(f.len(), kernels).unwrap().rhs(&StateF::new(f.to_vec()).unwrap()).unwrap()
}

/// Bound on the sum of absolute terms in any component: at most `3 I^3`
/// terms, kernels below 2, brackets below `2 (1 + max F)^4`.
fn term_bound(f: &[f64]) -> f64 {
    let n = f.len() as f64;
    let top = 1.0 + f.iter().fold(0.0f64, |m, x| m.max(*x));
    12.0 * n.powi(3) * top.powi(4)
}

fn weighted_scale(v: &[f64]) -> f64 {
    1.0 + v.iter().enumerate().map(|(i, x)| (i + 1) as f64 * x.abs()).sum::<f64>()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn energy_is_conserved(mode in mode(), f in state(8), seed in any::<u64>()) {
        let kernels = random_kernels(&mut rng(seed), mode, f.len());
        let v = rhs(&f, &kernels);
        let de: f64 = v.iter().enumerate().map(|(i, x)| (i + 1) as f64 * x).sum();
        prop_assert!(de.abs() <= 1e-12 * weighted_scale(&v), "{de:e}");
    }

    #[test]
    fn c22_conserves_mass(f in state(8), seed in any::<u64>()) {
        let kernels = random_kernels(&mut rng(seed), Mode::C22, f.len());
        let v = rhs(&f, &kernels);
        let dm: f64 = v.iter().sum();
        prop_assert!(dm.abs() <= 1e-12 * weighted_scale(&v), "{dm:e}");
    }

    #[test]
    fn kernels_are_permutation_invariant(seed in any::<u64>(), idx in proptest::collection::vec(1usize..=6, 4), perm in Just([3usize, 0, 2, 1])) {
        let k = random_kernel(&mut rng(seed), 4, 6);
        let permuted: Vec<usize> = perm.iter().map(|&p| idx[p]).collect();
        prop_assert_eq!(k.value(&idx), k.value(&permuted));
        let k3 = random_kernel(&mut rng(seed), 3, 6);
        prop_assert_eq!(k3.value(&idx[..3]), k3.value(&[idx[2], idx[0], idx[1]]));
    }

    #[test]
    fn bose_states_are_stationary(mode in mode(), rho in 0.05f64..3.0, dim in 1usize..=8, seed in any::<u64>()) {
        let kernels = random_kernels(&mut rng(seed), mode, dim);
        let f = bose(rho, dim);
        let v = rhs(&f, &kernels);
        prop_assert!(v.iter().all(|x| x.abs() <= 1e-13 * term_bound(&f)), "{v:?}");
    }

    #[test]
    fn two_param_states_are_c22_stationary(rho1 in 0.1f64..2.0, slope in -0.2f64..1.0, dim in 3usize..=8, seed in any::<u64>()) {
        let rho2 = rho1 + slope;
        prop_assume!(rho2 * (dim as f64 - 1.0) - rho1 * (dim as f64 - 2.0) > 0.05);
        let kernels = random_kernels(&mut rng(seed), Mode::C22, dim);
        let f = two_param(rho1, rho2, dim);
        let v = rhs(&f, &kernels);
        prop_assert!(v.iter().all(|x| x.abs() <= 1e-13 * term_bound(&f)), "{v:?}");
    }

    #[test]
    fn g_field_follows_the_chain_rule(mode in mode(), f in state(7), seed in any::<u64>()) {
        let kernels = random_kernels(&mut rng(seed), mode, f.len());
        let g = f_to_g(&StateF::new(f.clone()).unwrap());
        let got = GSystem::new(f.len(), &kernels).unwrap().g_rhs(&g).unwrap();
        let want: Vec<f64> = rhs(&f, &kernels).iter().zip(&f).map(|(v, x)| v / ((1.0 + x) * (1.0 + x))).collect();
        let terms = rhs(&f, &Kernels::for_mode(mode, |op| Kernel::constant(op.kernel_arity(), 2.0).unwrap()));
        let scale = velocity_scale(&want).max(velocity_scale(&terms));
        prop_assert!(max_abs_diff(&got, &want) <= 1e-12 * scale, "{got:?} vs {want:?}");
    }

    #[test]
    fn pair_scale_is_shared_by_both_directions(mode in mode(), f in state(6)) {
        let g = f_to_g(&StateF::new(f.clone()).unwrap());
        let sys = GSystem::new(f.len(), &Kernels::ones(mode)).unwrap();
        for term in sys.rate_terms(&g).unwrap() {
            prop_assert!((term.scaled_forward - term.scaled_backward).abs() <= 1e-14 * term.scaled_forward.abs());
        }
    }

    #[test]
    fn transform_round_trips(f in state(8)) {
        let back = g_to_f(&f_to_g(&StateF::new(f.clone()).unwrap()));
        prop_assert!(max_abs_diff(back.as_slice(), &f) <= 1e-14 * velocity_scale(&f));
    }

    #[test]
    fn lyapunov_is_the_same_in_both_coordinates(f in state(8), rho in 0.1f64..3.0) {
        let fs = bose(rho, f.len());
        let a = lyapunov_f(&StateF::new(f.clone()).unwrap(), &StateF::new(fs.clone()).unwrap()).unwrap();
        let b = lyapunov_g(&f_to_g(&StateF::new(f).unwrap()), &f_to_g(&StateF::new(fs).unwrap())).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()), "{a} vs {b}");
    }

    #[test]
    fn lyapunov_gradient_matches_differences(g in proptest::collection::vec(0.05f64..0.9, 1..=6), rho in 0.2f64..2.0) {
        let gs = f_to_g(&StateF::new(bose(rho, g.len())).unwrap());
        let grad = lyapunov_gradient(&StateG::new(g.clone()).unwrap(), &gs).unwrap();
        let l = |x: &[f64]| vec![lyapunov_g(&StateG::new(x.to_vec()).unwrap(), &gs).unwrap()];
        let fd = fd_jacobian(l, &g, 1e-6);
        for (a, b) in grad.iter().zip(&fd[0]) {
            prop_assert!((a - b).abs() <= 1e-6 * (1.0 + b.abs()), "{a} vs {b}");
        }
    }

    #[test]
    fn lyapunov_is_convex(a in proptest::collection::vec(0.02f64..0.95, 4), b in proptest::collection::vec(0.02f64..0.95, 4), t in 0.0f64..1.0) {
        let gs = f_to_g(&StateF::new(bose(0.7, 4)).unwrap());
        let l = |x: &[f64]| lyapunov_g(&StateG::new(x.to_vec()).unwrap(), &gs).unwrap();
        let mid: Vec<f64> = a.iter().zip(&b).map(|(x, y)| t * x + (1.0 - t) * y).collect();
        let chord = t * l(&a) + (1.0 - t) * l(&b);
        prop_assert!(l(&mid) <= chord + 1e-12 * (1.0 + chord.abs()));
        prop_assert!(l(&mid) >= l(gs.as_slice()) - 1e-12);
    }

    #[test]
    fn solve_rho_inverts_energy(rho in 0.05f64..5.0, dim in 1usize..=8) {
        let e = energy_of_rho(rho, dim).unwrap();
        let back = solve_rho(e, dim).unwrap();
        prop_assert!((back - rho).abs() <= 1e-9 * rho.max(1.0), "{back} vs {rho}");
    }

    #[test]
    fn c22_equilibrium_is_seed_independent(rho1 in 0.1f64..2.0, slope in -0.2f64..1.0, dim in 3usize..=8) {
        let rho2 = rho1 + slope;
        prop_assume!(rho2 * (dim as f64 - 1.0) - rho1 * (dim as f64 - 2.0) > 0.05);
        let f = two_param(rho1, rho2, dim);
        let (m, e) = (mass(&f), energy(&f));
        let a = solve_c22_equilibrium(m, e, dim, None).unwrap();
        // every exponent scales by 1.5 and shifts by 0.3, so the seed is admissible
        let b = solve_c22_equilibrium(m, e, dim, Some((1.5 * rho1 + 0.3, 1.5 * rho2 + 0.3))).unwrap();
        prop_assert!((a.0 - b.0).abs() <= 1e-8 && (a.1 - b.1).abs() <= 1e-8, "{a:?} vs {b:?}");
        prop_assert!((a.0 - rho1).abs() <= 1e-7 && (a.1 - rho2).abs() <= 1e-7, "{a:?} vs {:?}", (rho1, rho2));
    }
}

#[test]
fn inadmissible_seed_is_a_domain_error() {
    let r = solve_c22_equilibrium(4.0, 7.0, 3, Some((5.0, 1.7)));
    assert!(matches!(r, Err(bosenet::Error::Domain(_))), "{r:?}");
}

fn small_config(mode: Mode, dim: usize, seed: u64) -> ExperimentConfig {
    ExperimentConfig {
        mode,
        dim: Some(dim),
        lattice_radius: None,
        kernels: KernelSpecs::uniform(bosenet::KernelSpec::Constant(1.0)),
        init: InitialCondition::RandomPositive { seed, scale: 1.0 },
        integrator: IntegratorOptions::rk4(1e-2, 0.5).record_every(10),
        out: None,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn config_json_round_trips(mode in mode(), dim in 1usize..=8, seed in any::<u64>(), every in 1usize..100) {
        let mut cfg = small_config(mode, dim, seed);
        cfg.integrator = cfg.integrator.record_every(every);
        prop_assert_eq!(ExperimentConfig::from_json(&cfg.to_json()).unwrap(), cfg);
    }

    #[test]
    fn simulation_is_deterministic(mode in mode(), dim in 1usize..=5, seed in any::<u64>()) {
        let cfg = small_config(mode, dim, seed);
        let a = simulate(&cfg).unwrap();
        let b = simulate(&cfg).unwrap();
        prop_assert_eq!(serde_json::to_string(&a.0).unwrap(), serde_json::to_string(&b.0).unwrap());
        for (x, y) in a.1.iter().zip(&b.1) {
            prop_assert_eq!(x.to_csv(), y.to_csv());
        }
    }

    #[test]
    fn rays_partition_the_lattice(radius in 0.5f64..6.5) {
        let cfg = LatticeConfig::new(radius).unwrap();
        let mut covered: Vec<[i64; 3]> = enumerate_rays(&cfg).iter().flat_map(|r| (1..=r.len).map(move |k| r.point(k))).collect();
        let mut points: Vec<[i64; 3]> = lattice_points(&cfg).into_iter().filter(|p| *p != [0, 0, 0]).collect();
        covered.sort();
        points.sort();
        let before = covered.len();
        covered.dedup();
        prop_assert_eq!(before, covered.len());
        prop_assert_eq!(covered, points);
    }

    #[test]
    fn integration_conserves_and_stays_positive(mode in mode(), f in state(5), seed in any::<u64>()) {
        let kernels = random_kernels(&mut rng(seed), mode, f.len());
        let op = CollisionOperator::new(f.len(), &kernels).unwrap();
        let traj = integrate(&op, &f, &IntegratorOptions::rk4(1e-3, 1.0).record_every(50), None).unwrap();
        let c0 = conserved(&StateF::new(f.clone()).unwrap());
        for x in traj.states() {
            prop_assert!(x.iter().all(|v| *v > 0.0));
            let c = conserved(&StateF::new(x.clone()).unwrap());
            prop_assert!((c.energy - c0.energy).abs() <= 1e-10 * c0.energy);
            if matches!(mode, Mode::C22) {
                prop_assert!((c.mass - c0.mass).abs() <= 1e-10 * c0.mass);
            }
        }
    }
}

#[test]
fn rk4_is_fourth_order() {
    let op = CollisionOperator::new(3, &Kernels::ones(Mode::C12)).unwrap();
    let x0 = [0.8, 0.5, 0.3];
    let run = |h: f64| integrate(&op, &x0, &IntegratorOptions::rk4(h, 1.0).record_every(1_000_000), None).unwrap();
    let reference = run(1e-4);
    let err = |h: f64| max_abs_diff(run(h).final_state(), reference.final_state());
    for h in [0.1, 0.05] {
        let ratio = err(h) / err(h / 2.0);
        assert!((8.0..=32.0).contains(&ratio), "h={h}: ratio {ratio}");
    }
}
