use std::sync::Arc;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use scfred_core::scspace::{make_scale_space, DomainSpec, GridFunction, ScaleSpace, SpaceSpec};
use scfred_core::splicing::*;

fn line_space(l: f64, h: f64) -> Arc<ScaleSpace> {
    make_scale_space(&SpaceSpec {
        domain: DomainSpec::Line { half_length: l, step: h },
        base_order: 0,
        weights: vec![0.0, 0.5],
        target_dim: 1,
        weight_bound: None,
    })
    .unwrap()
}

fn line_kernel(l: f64, h: f64) -> SplicingKernel {
    SplicingKernel::new(GluingProfile::Exponential, line_space(l, h), Variant::MorseLine)
}

fn cyl_kernel(l: f64, h: f64, profile: GluingProfile) -> SplicingKernel {
    let space = make_scale_space(&SpaceSpec {
        domain: DomainSpec::Cylinder { half_length: l, step: h },
        base_order: 0,
        weights: vec![0.0, 1.0],
        target_dim: 1,
        weight_bound: None,
    })
    .unwrap();
    SplicingKernel::new(profile, space, Variant::GwCylinder)
}

/// Independent β: ψ(x) = e^{-1/x} for x > 0.
fn beta_ref(s: f64) -> f64 {
    let psi = |x: f64| if x > 0.0 { (-1.0 / x).exp() } else { 0.0 };
    psi(1.0 - s) / (psi(1.0 - s) + psi(1.0 + s))
}

/// Random line pair with matching interface values.
fn random_line_pair(k: &SplicingKernel, rng: &mut ChaCha8Rng) -> FieldPair {
    let n = k.space.s_nodes();
    let h: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let shift = h[n - 1] - v[0];
    v.iter_mut().for_each(|x| *x += shift);
    FieldPair::new(
        GridFunction::new(k.space.clone(), h, 1).unwrap(),
        GridFunction::new(k.space.clone(), v, 1).unwrap(),
    )
}

/// Random half-cylinder pair `(h⁺ on [0,L], h⁻ on [−L,0])` with matching circle averages.
fn random_cyl_pair(k: &SplicingKernel, rng: &mut ChaCha8Rng) -> FieldPair {
    let space = &k.space;
    let half = (space.s_nodes() - 1) / 2 + 1;
    let plus = space.with_s_range(0.0, half);
    let minus = space.with_s_range(space.s_start(), half);
    let nt = space.t_nodes();
    let mut gen = |s: &Arc<ScaleSpace>| -> Vec<f64> { (0..s.value_len()).map(|_| rng.gen_range(-1.0..1.0)).collect() };
    let hp = gen(&plus);
    let mut hm = gen(&minus);
    let end_plus: f64 = hp[(half - 1) * nt..half * nt].iter().sum::<f64>() / nt as f64;
    let start_minus: f64 = hm[..nt].iter().sum::<f64>() / nt as f64;
    hm.iter_mut().for_each(|x| *x += end_plus - start_minus);
    FieldPair::new(GridFunction::new(plus, hp, 1).unwrap(), GridFunction::new(minus, hm, 1).unwrap())
}

#[test]
fn cutoff_identities_on_dense_sample() {
    for i in 0..=10_000 {
        let s = -3.0 + 6.0 * i as f64 / 10_000.0;
        let b = beta(s);
        assert!((b + beta(-s) - 1.0).abs() <= 1e-12, "s = {s}");
        assert!((b - beta_ref(s)).abs() <= 1e-14);
        if s <= -1.0 {
            assert_eq!(b, 1.0);
        }
        // closer to ±1 the derivative underflows to 0
        if s.abs() < 0.99 {
            assert!(beta_derivative(s) < 0.0, "s = {s}");
        }
    }
    // one-sided derivatives vanish at ±1
    assert!(beta_derivative(-0.999).abs() < 1e-100);
    assert!(beta_derivative(0.999).abs() < 1e-100);
}

#[test]
fn profiles_invert() {
    for p in [GluingProfile::Exponential, GluingProfile::Logarithmic] {
        assert_eq!(p.length(1.0).unwrap(), 0.0);
        // e^{1/r} overflows below r ≈ 1/709
        for i in 2..=1000 {
            let r = i as f64 / 1000.0;
            let len = p.length(r).unwrap();
            assert!((p.parameter(len).unwrap() - r).abs() <= 1e-10, "{} at r = {r}", p.name());
        }
        assert!(p.length(1e-3).unwrap() > p.length(1e-2).unwrap());
    }
    let e = std::f64::consts::E;
    assert!((GluingProfile::Exponential.length(0.5).unwrap() - (e * e - e)).abs() < 1e-13);
}

#[test]
fn glue_line_matches_formula() {
    let k = line_kernel(8.0, 0.05);
    let u = GridFunction::from_fn(&k.space, 1, |s, _, o| o[0] = s.tanh() + 1.0);
    let mut v = GridFunction::from_fn(&k.space, 1, |s, _, o| o[0] = s.tanh() + 3.0);
    // pin the interface to the value u takes at the window end
    let gap = u.values()[u.values().len() - 1] - v.values()[0];
    v = v.axpy(gap, &GridFunction::from_fn(&k.space, 1, |_, _, o| o[0] = 1.0)).unwrap();
    let r = 6.0;
    let g = k.glue_line(&u, &v, r).unwrap();
    let ext = g.space();
    let n = k.space.s_nodes();
    for p in 0..ext.s_nodes() {
        let s = ext.s_at(p);
        let uu = u.values()[p.min(n - 1)];
        let j = ((s - r - k.space.s_start()) / k.space.s_step()).round().clamp(0.0, (n - 1) as f64) as usize;
        let want = beta_ref(s - r / 2.0) * uu + (1.0 - beta_ref(s - r / 2.0)) * v.values()[j];
        assert!((g.values()[p] - want).abs() < 1e-13, "s = {s}");
    }
}

#[test]
fn total_gluing_round_trip_line() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let k = line_kernel(5.0, 0.1);
    for trial in 0..200 {
        let e = random_line_pair(&k, &mut rng);
        let len = rng.gen_range(0.0..8.0);
        let (g, a) = k.total_glue(&e.first, &e.second, len).unwrap();
        let back = k.total_unglue(&g, &a, len).unwrap();
        let err = back.sub(&e).unwrap().sup_norm();
        assert!(err <= 1e-10, "trial {trial}: {err}");
        assert!(k.min_determinant(len).unwrap() >= 0.5 - 1e-12);
    }
}

#[test]
fn determinant_minimum_is_one_half() {
    let k = line_kernel(5.0, 0.1);
    let d = k.min_determinant(4.0).unwrap();
    assert!((d - 0.5).abs() < 1e-12);
    let grid_min = (0..=1000)
        .map(|i| total_gluing_determinant(i as f64 / 1000.0))
        .fold(f64::INFINITY, f64::min);
    assert!((grid_min - 0.5).abs() < 1e-15);
}

#[test]
fn unglue_constants_and_kernel_of_glue() {
    let k = line_kernel(5.0, 0.1);
    let r = 3.0;
    let ext_nodes = k.shift_mode(r).unwrap().nodes() + k.space.s_nodes();
    let ext = k.space.with_s_range(k.space.s_start(), ext_nodes);
    let r_grid = k.shift_mode(r).unwrap().length();
    // constants glue to c and anti-glue to c(2β − 1), which is not zero
    let c = GridFunction::from_fn(&ext, 1, |_, _, o| o[0] = 1.75);
    let anti = GridFunction::from_fn(&ext, 1, |s, _, o| o[0] = 1.75 * (2.0 * beta_ref(s - r_grid / 2.0) - 1.0));
    let e = k.total_unglue(&c, &anti, r).unwrap();
    assert!(e.first.values().iter().chain(e.second.values()).all(|&x| (x - 1.75).abs() < 1e-14));
    let zero = GridFunction::zeros(&ext, 1);

    let w = GridFunction::from_fn(&ext, 1, |s, _, o| o[0] = (-4.0 * (s - 1.5).powi(2)).exp());
    let e = k.total_unglue(&zero, &w, r).unwrap();
    assert!(e.sup_norm() > 1e-3);
    assert!(k.glue_line(&e.first, &e.second, r).unwrap().sup_norm() < 1e-14);
    assert!(!k.splicing_core_contains(k.profile.parameter(r).map(GluingParameter::real).unwrap(), &e, 1e-6).unwrap());
}

#[test]
fn projection_is_idempotent() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let k = line_kernel(6.0, 0.1);
    for i in 1..=9 {
        let r = i as f64 / 10.0;
        let param = GluingParameter::real(r);
        for _ in 0..12 {
            let e = random_line_pair(&k, &mut rng);
            let p1 = k.splicing_projection(param, &e).unwrap();
            let p2 = k.splicing_projection(param, &p1).unwrap();
            assert!(p2.sub(&p1).unwrap().sup_norm() <= 1e-9, "r = {r}");
            // the range is the kernel of anti-gluing
            let len = k.profile.length(r).unwrap();
            if len < 2.0 * 7.0 {
                let a = k.antiglue_line(&p1.first, &p1.second, len).unwrap();
                assert!(a.sup_norm() <= 1e-9, "r = {r}");
            }
        }
    }
}

#[test]
fn projection_at_zero_is_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let k = line_kernel(4.0, 0.2);
    let e = random_line_pair(&k, &mut rng);
    assert_eq!(k.splicing_projection(GluingParameter::real(0.0), &e).unwrap(), e);
    assert!(k.splicing_core_contains(GluingParameter::real(0.0), &e, 0.0).unwrap());
    let zero = FieldPair::new(GridFunction::zeros(&k.space, 1), GridFunction::zeros(&k.space, 1));
    assert!(k.splicing_core_contains(GluingParameter::real(0.7), &zero, 1e-12).unwrap());
    assert!(matches!(k.splicing_projection(GluingParameter::real(1.0), &e), Err(SplicingError::Domain(_))));
}

#[test]
fn ranks_add_up_on_coarse_grid() {
    let k = line_kernel(3.0, 0.25);
    let template = FieldPair::new(GridFunction::zeros(&k.space, 0), GridFunction::zeros(&k.space, 0));
    for r in [0.6, 0.75, 0.9] {
        let (p, q, dim) = k.projection_ranks(GluingParameter::real(r), &template).unwrap();
        assert_eq!(p + q, dim, "r = {r}");
        assert!(p > 0 && q > 0);
    }
}

#[test]
fn cylinder_gluing_basics() {
    let k = cyl_kernel(4.0, 0.125, GluingProfile::Exponential);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let e = random_cyl_pair(&k, &mut rng);
    match k.glue_cylinder(&e, GluingParameter::real(0.0)).unwrap() {
        CylinderGlued::Nodal(p) => assert_eq!(p, e),
        CylinderGlued::Glued(_) => panic!("a = 0 must not glue"),
    }
    assert!(k.antiglue_cylinder(&e, GluingParameter::real(0.0)).unwrap().is_none());
    assert!(matches!(
        k.glue_cylinder(&e, GluingParameter::real(0.6)),
        Err(SplicingError::ParameterOutOfRange(_))
    ));

    let c = |s: &Arc<ScaleSpace>| GridFunction::from_fn(s, 1, |_, _, o| o[0] = -0.4);
    let consts = FieldPair::new(c(e.first.space()), c(e.second.space()));
    let Ok(CylinderGlued::Glued(g)) = k.glue_cylinder(&consts, GluingParameter::real(0.5)) else { panic!() };
    assert!(g.values().iter().all(|&v| (v + 0.4).abs() < 1e-14));
    let a = k.antiglue_cylinder(&consts, GluingParameter::real(0.5)).unwrap().unwrap();
    assert!(a.sup_norm() < 1e-14);
}

#[test]
fn cylinder_glue_matches_formula() {
    let k = cyl_kernel(4.0, 0.125, GluingProfile::Exponential);
    let plus = k.space.with_s_range(0.0, 33);
    let minus = k.space.with_s_range(-4.0, 33);
    let up = GridFunction::from_fn(&plus, 1, |s, t, o| o[0] = (-s).exp() * (2.0 * std::f64::consts::PI * t).cos());
    let um = GridFunction::zeros(&minus, 1);
    // interface average of e^{-s}cos(2πt) over the circle is zero
    let e = FieldPair::new(up.clone(), um);
    let Ok(CylinderGlued::Glued(g)) = k.glue_cylinder(&e, GluingParameter::real(0.5)) else { panic!() };
    let r = k.shift_mode(GluingProfile::Exponential.length(0.5).unwrap()).unwrap().length();
    let z = g.space();
    for i in 0..z.s_nodes() {
        for j in 0..z.t_nodes() {
            let (s, t) = (z.s_at(i), z.t_at(j));
            let want = beta_ref(s - r / 2.0) * (-s).exp() * (2.0 * std::f64::consts::PI * t).cos();
            assert!((g.at(i, j)[0] - want).abs() < 1e-12, "({s}, {t})");
        }
    }
}

#[test]
fn cylinder_round_trip_and_antipodal_relation() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for profile in [GluingProfile::Exponential, GluingProfile::Logarithmic] {
        let k = cyl_kernel(3.0, 0.125, profile.clone());
        for trial in 0..200 {
            let e = random_cyl_pair(&k, &mut rng);
            // grid-aligned length with R/2 on a node
            let len = 0.25 * rng.gen_range(8..20) as f64;
            let modulus = profile.parameter(len).unwrap();
            if modulus > 0.5 {
                continue;
            }
            let twist = rng.gen_range(0..8) as f64 / 8.0;
            let a = GluingParameter { modulus, twist };
            let Ok(CylinderGlued::Glued(g)) = k.glue_cylinder(&e, a) else { panic!() };
            let anti = k.antiglue_cylinder(&e, a).unwrap().unwrap();
            let back = k.total_unglue_cylinder(&g, &anti, a, &e.first, &e.second).unwrap();
            let err = back.sub(&e).unwrap().sup_norm();
            assert!(err <= 1e-10, "{} trial {trial}: {err}", profile.name());

            // the two asymptotic ends of Σ_a carry opposite averages
            let sp = anti.space();
            let nt = sp.t_nodes();
            let end = |i: usize| (0..nt).map(|j| anti.at(i, j)[0]).sum::<f64>() / nt as f64;
            let lo = end(0);
            let hi = end(sp.s_nodes() - 1);
            let av = k.average(&e, len)[0];
            let plus_end = e.first.values()[e.first.values().len() - nt..].iter().sum::<f64>() / nt as f64;
            // ⊖ → −(h⁺(∞) − av) on the right and (h⁻(−∞) − av) on the left
            assert!((hi + (plus_end - av)).abs() < 1e-12);
            let minus_start = e.second.values()[..nt].iter().sum::<f64>() / nt as f64;
            assert!((lo - (minus_start - av)).abs() < 1e-12);
        }
    }
}

proptest! {
    #[test]
    fn total_glue_is_linear(seed in any::<u64>(), alpha in -3.0f64..3.0, len in 0.0f64..6.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = line_kernel(4.0, 0.2);
        let x = random_line_pair(&k, &mut rng);
        let y = random_line_pair(&k, &mut rng);
        let z = y.axpy(alpha, &x).unwrap();
        let (gx, ax) = k.total_glue(&x.first, &x.second, len).unwrap();
        let (gy, ay) = k.total_glue(&y.first, &y.second, len).unwrap();
        let (gz, az) = k.total_glue(&z.first, &z.second, len).unwrap();
        prop_assert!(gz.sub(&gy.axpy(alpha, &gx).unwrap()).unwrap().sup_norm() < 1e-12);
        prop_assert!(az.sub(&ay.axpy(alpha, &ax).unwrap()).unwrap().sup_norm() < 1e-12);
    }

    #[test]
    fn interpolated_shift_is_still_invertible_at_nodes(seed in any::<u64>(), len in 0.5f64..6.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = line_kernel(4.0, 0.2).with_alignment(Alignment::Interpolate);
        let e = random_line_pair(&k, &mut rng);
        let (g, a) = k.total_glue(&e.first, &e.second, len).unwrap();
        let back = k.total_unglue(&g, &a, len).unwrap();
        // h is recovered exactly; k only up to interpolation
        prop_assert!(back.first.sub(&e.first).unwrap().sup_norm() < 1e-12);
    }
}
