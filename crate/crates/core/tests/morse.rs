use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use scfred_core::morse::*;
use scfred_core::splicing::GluingProfile;

fn tanh_options() -> SolveOptions {
    SolveOptions { half_length: 20.0, step: 0.025, tol: 1e-13, max_newton: 50 }
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

#[test]
fn cubic_orbit_is_tanh() {
    let p = MorseProblem::cubic().unwrap();
    let t = solve_trajectory(&p, "c0", "c1", None, &tanh_options()).unwrap();
    let err = t.mesh.iter().enumerate().fold(0.0f64, |m, (i, s)| m.max((t.node(i)[0] - s.tanh()).abs()));
    assert!(err < 1e-8, "sup error {err:e}");
    assert!(t.energy_monotone(&p, 1e-14));
    assert!(t.residual <= 1e-12);
}

#[test]
fn converged_guess_needs_no_newton_step() {
    let p = MorseProblem::cubic().unwrap();
    let t = solve_trajectory(&p, "c0", "c1", None, &tanh_options()).unwrap();
    let again = solve_trajectory(&p, "c0", "c1", Some(&t), &tanh_options()).unwrap();
    assert_eq!(again.newton_steps, 0);
    assert_eq!(again.values, t.values);
}

#[test]
fn wrong_order_is_rejected() {
    let p = MorseProblem::cubic().unwrap();
    assert!(matches!(
        solve_trajectory(&p, "c1", "c0", None, &tanh_options()),
        Err(MorseError::Ordering { .. })
    ));
}

#[test]
fn index_gap_two_is_not_square() {
    let p = MorseProblem::chain(0.1).unwrap();
    let opts = SolveOptions::for_pair(&p, "c0", "c3").unwrap();
    assert!(matches!(solve_trajectory(&p, "c0", "c3", None, &opts), Err(MorseError::IndexMismatch { .. })));
}

/// `x(s) = −(1 + C e^{2s})^{−1/2}` solves `ẋ = x³ − x` from −1 to 0; `C`
/// puts `Φ = 1/8` at `s = 0`.
fn double_well_orbit(s: f64) -> f64 {
    let y0 = 1.0 - 0.5f64.sqrt();
    let c = 1.0 / y0 - 1.0;
    -1.0 / (1.0 + c * (2.0 * s).exp()).sqrt()
}

#[test]
fn double_well_enumeration() {
    let p = MorseProblem::double_well().unwrap();
    let opts = SolveOptions::for_pair(&p, "c0", "c2").unwrap();
    let e = enumerate_trajectories_index1(&p, "c0", "c2", &ShootingOptions::default(), &opts).unwrap();
    assert_eq!(e.count, 1);
    assert!(e.reliable);
    let t = &e.trajectories[0];
    for i in 0..t.len() {
        assert!(t.node(i)[1].abs() < 1e-10);
        assert!((t.node(i)[0] - double_well_orbit(t.mesh[i])).abs() < 1e-5);
    }
    let mirror = enumerate_trajectories_index1(&p, "c1", "c2", &ShootingOptions::default(), &opts).unwrap();
    assert_eq!(mirror.count, 1);
    for i in 0..t.len() {
        assert!((mirror.trajectories[0].node(i)[0] + t.node(i)[0]).abs() < 1e-8);
    }
}

#[test]
fn enumeration_requires_index_difference_one() {
    let p = MorseProblem::chain(0.1).unwrap();
    let opts = SolveOptions::for_pair(&p, "c0", "c3").unwrap();
    assert!(enumerate_trajectories_index1(&p, "c0", "c3", &ShootingOptions::default(), &opts).is_err());
}

#[test]
fn counting_functions() {
    let p = MorseProblem::double_well().unwrap();
    let q = counting_function(&p, &ShootingOptions::default()).unwrap();
    assert_eq!(q.get("c0", "c2"), 1);
    assert_eq!(q.get("c1", "c2"), 1);
    assert_eq!(q.values.values().map(|v| *v as u32).sum::<u32>(), 2);
    assert_eq!(q.to_json()["(c0,c2)"], 1);

    let single = MorseProblem::builtin("quadratic").unwrap();
    let q = counting_function(&single, &ShootingOptions::default()).unwrap();
    assert!(q.values.is_empty());

    let chain = MorseProblem::chain(0.1).unwrap();
    let q = counting_function(&chain, &ShootingOptions::default()).unwrap();
    // Q∗Q(min, max) sums over the two saddles
    let qq = (q.get("c0", "c1") * q.get("c1", "c3") + q.get("c0", "c2") * q.get("c2", "c3")) % 2;
    assert_eq!(qq, 0);
    assert_eq!(q.get("c0", "c3"), 0);
    assert_eq!(q.gradings[&("c0".to_string(), "c3".to_string())], 0);
    assert_eq!(q.gradings[&("c0".to_string(), "c1".to_string())], 1);
}

fn vals_of(c: &[f64], n: usize) -> Vec<f64> {
    (0..n).flat_map(|_| c.iter().cloned()).collect()
}

fn chain_pair() -> (MorseProblem, BrokenTrajectory) {
    let p = MorseProblem::chain(0.1).unwrap();
    let u1 = solve_trajectory(&p, "c0", "c1", None, &SolveOptions::for_pair(&p, "c0", "c1").unwrap()).unwrap();
    let u2 = solve_trajectory(&p, "c1", "c3", None, &SolveOptions::for_pair(&p, "c1", "c3").unwrap()).unwrap();
    (p.clone(), BrokenTrajectory::new(vec![u1, u2]).unwrap())
}

#[test]
fn preglued_constants_have_gradient_residual() {
    let p = MorseProblem::chain(0.1).unwrap();
    let c = [0.3, 0.2];
    let mesh: Vec<f64> = (0..41).map(|i| -2.0 + 0.1 * i as f64).collect();
    let vals: Vec<f64> = mesh.iter().flat_map(|_| c).collect();
    let u1 = Trajectory::from_samples("c0", "c1", 2, mesh.clone(), vals.clone()).unwrap();
    let u2 = Trajectory::from_samples("c1", "c3", 2, mesh, vals).unwrap();
    let x = BrokenTrajectory::new(vec![u1, u2]).unwrap();
    let g = preglue_broken(&p, &x, 0.4, &GluingProfile::Exponential).unwrap();
    assert!(sup_diff(&g.curve.values, &vals_of(&c, g.curve.len())) <= 1e-15);
    let grad = p.gradient(&c);
    assert!((g.residual - grad.amax()).abs() <= 1e-12);
}

#[test]
fn pregluing_residual_shrinks_with_r() {
    let (p, x) = chain_pair();
    let res: Vec<f64> = [0.9, 0.5, 0.3, 0.2, 0.1, 0.05]
        .iter()
        .map(|&r| preglue_broken(&p, &x, r, &GluingProfile::Exponential).unwrap().residual)
        .collect();
    // strictly decreasing until the round-off floor
    assert!(res.windows(2).all(|w| w[1] < w[0] || w[0] < 1e-12), "{res:?}");
    assert!(res[5] < 1e-6);
}

#[test]
fn correction_converges_to_the_broken_pair() {
    let (p, x) = chain_pair();
    let mut dists = Vec::new();
    for r in [0.3, 0.2, 0.1] {
        let g = preglue_broken(&p, &x, r, &GluingProfile::Exponential).unwrap();
        let c = correct_pregluing(&p, &g, &CorrectionOptions::default()).unwrap();
        assert!(c.trajectory.residual <= 1e-9);
        assert!(c.trajectory.energy_monotone(&p, 1e-12));
        dists.push(shifted_distance(&c, &x));
    }
    assert!(dists.windows(2).all(|w| w[1] < w[0]), "{dists:?}");
}

#[test]
fn large_perturbation_leaves_the_basin() {
    let (p, x) = chain_pair();
    let mut g = preglue_broken(&p, &x, 0.2, &GluingProfile::Exponential).unwrap();
    for v in g.curve.values.iter_mut() {
        *v += 3.0;
    }
    assert!(matches!(
        correct_pregluing(&p, &g, &CorrectionOptions::default()),
        Err(MorseError::CorrectionFailure { .. })
    ));
}

#[test]
fn spectra_of_chains() {
    let (_, x) = chain_pair();
    let s = x.spectrum();
    assert_eq!(s.pairs, vec![("c0".into(), "c1".into()), ("c1".into(), "c3".into())]);
    assert_eq!(s.target, ("c0".into(), "c3".into()));
    assert_eq!(s.degeneracy, 1);
    let single = BrokenTrajectory::new(vec![x.components[0].clone()]).unwrap();
    assert_eq!(single.spectrum().degeneracy, 0);
    assert_eq!(single.spectrum().target, ("c0".into(), "c1".into()));
}

#[test]
fn trajectory_csv_shape() {
    let p = MorseProblem::cubic().unwrap();
    let t = solve_trajectory(&p, "c0", "c1", None, &SolveOptions { step: 0.5, ..tanh_options() }).unwrap();
    let csv = t.to_csv();
    assert!(csv.starts_with("s,u1\n"));
    assert_eq!(csv.lines().count(), t.len() + 1);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn shifted_guess_gives_same_normalized_orbit(tau in -3.0f64..3.0) {
        let p = MorseProblem::cubic().unwrap();
        let opts = SolveOptions { half_length: 20.0, step: 0.1, tol: 1e-13, max_newton: 50 };
        let base = solve_trajectory(&p, "c0", "c1", None, &opts).unwrap();
        let vals: Vec<f64> = base.mesh.iter().map(|s| (s - tau).tanh()).collect();
        let guess = Trajectory::from_samples("c0", "c1", 1, base.mesh.clone(), vals).unwrap();
        let t = solve_trajectory_on(&p, "c0", "c1", &guess, &opts).unwrap();
        prop_assert!(sup_diff(&t.values, &base.values) < 1e-9);
    }

    #[test]
    fn banded_solve_matches_dense(n in 3usize..40, kl in 0usize..4, ku in 0usize..4, seed in any::<u64>()) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut entries = Vec::new();
        let mut dense = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            for j in i.saturating_sub(kl)..(i + ku + 1).min(n) {
                let v: f64 = rng.gen_range(-1.0..1.0) + if i == j { 3.0 } else { 0.0 };
                entries.push((i, j, v));
                dense[(i, j)] = v;
            }
        }
        let rhs: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let want = dense.lu().solve(&DVector::from_vec(rhs.clone())).unwrap();
        let got = BandedMatrix::from_triplets(n, &entries).lu().unwrap().solve(&rhs);
        prop_assert!(sup_diff(&got, want.as_slice()) < 1e-9);
    }

    #[test]
    fn critical_points_are_roots(eps in 0.05f64..1.0) {
        let p = MorseProblem::chain(eps).unwrap();
        prop_assert_eq!(p.critical_points.len(), 4);
        for c in &p.critical_points {
            prop_assert!(p.gradient(&c.location).amax() <= CRITICAL_TOL);
        }
    }
}
