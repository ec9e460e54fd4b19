use std::sync::Arc;

use nalgebra::DMatrix;
use proptest::prelude::*;
use scfred_core::germ::*;
use scfred_core::scspace::{make_scale_space, DomainSpec, GridFunction, SpaceSpec};

/// Root of `x − a·sin x = v` by bisection; the map is increasing for `a < 1`.
fn bisect_root(v: f64, a: f64) -> f64 {
    let f = |x: f64| x - a * x.sin() - v;
    let span = v.abs() / (1.0 - a) + 1.0;
    let (mut lo, mut hi) = (-span, span);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= f64::EPSILON * mid.abs() {
            break;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn linear_germ_recovers_twice_the_parameter() {
    let g = ContractionGerm::linear(3, 4);
    for v in [[0.1, -0.05, 0.2], [0.0, 0.0, 0.0], [-0.2, 0.17, 0.013]] {
        for level in 0..4 {
            let s = solve_germ(&g, &v, level, 0.0, 2000).unwrap();
            // the floating-point fixed point may sit one ulp from 2v
            for (u, p) in s.value.iter().zip(&v) {
                assert!((u - 2.0 * p).abs() <= 2.0 * f64::EPSILON * p.abs(), "level {level}");
            }
            assert!(s.observed_rate <= 0.5 + 0.05);
        }
    }
}

#[test]
fn sine_germ_matches_bisection() {
    let g = ContractionGerm::sine(4, 3, 0.3).unwrap();
    let v = [0.2, -0.11, 0.05, 0.0];
    for level in 0..3 {
        let s = solve_germ(&g, &v, level, 0.0, 2000).unwrap();
        for (u, p) in s.value.iter().zip(&v) {
            assert!((u - bisect_root(*p, 0.3)).abs() < 1e-12);
        }
        assert!(s.observed_rate <= 0.3 + 0.05, "rate {}", s.observed_rate);
    }
}

#[test]
fn convergence_log_is_csv() {
    let g = ContractionGerm::linear(1, 1);
    let s = solve_germ(&g, &[0.25], 0, 1e-10, 200).unwrap();
    let csv = s.log_csv();
    assert!(csv.starts_with("iteration,level,residual\n"));
    assert_eq!(csv.lines().count(), s.log.len() + 1);
    assert!(s.log.windows(2).all(|w| w[1].residual < w[0].residual));
}

#[test]
fn smoothness_of_linear_germ() {
    let sol = SolutionGerm::new(ContractionGerm::linear(2, 2), 1);
    let steps: Vec<f64> = (0..5).map(|k| 0.05 * 0.5f64.powi(k)).collect();
    let r = germ_smoothness_diagnostic(&sol, &[0.1, 0.0], &[1.0, 0.5], 2, &steps).unwrap();
    assert!(r.passed);
    for d in &r.second {
        assert!(d.iter().all(|x| x.abs() < 1e-9));
    }
    for d in &r.first {
        assert!((d[0] - 2.0).abs() < 1e-12 && (d[1] - 1.0).abs() < 1e-12);
    }
}

#[test]
fn smoothness_of_sine_germ_matches_implicit_derivatives() {
    let a = 0.3;
    let sol = SolutionGerm::new(ContractionGerm::sine(1, 1, a).unwrap(), 0);
    let v0 = 0.4;
    let steps: Vec<f64> = (0..5).map(|k| 0.08 * 0.5f64.powi(k)).collect();
    let r = germ_smoothness_diagnostic(&sol, &[v0], &[1.0], 2, &steps).unwrap();
    assert!(r.passed);
    let d = bisect_root(v0, a);
    let d1 = 1.0 / (1.0 - a * d.cos());
    let d2 = -a * d.sin() * d1.powi(3);
    let last = steps.len() - 1;
    assert!((r.first[last][0] - d1).abs() < 1e-5);
    assert!((r.second[last][0] - d2).abs() < 1e-4);
    // centered differences: errors shrink by four per halving
    for o in &r.first_orders {
        assert!((o - 2.0).abs() < 0.1, "first orders {:?}", r.first_orders);
    }
    for o in &r.second_orders {
        assert!((o - 2.0).abs() < 0.2, "second orders {:?}", r.second_orders);
    }
}

fn line(l: f64, h: f64, dim: usize) -> Arc<scfred_core::scspace::ScaleSpace> {
    make_scale_space(&SpaceSpec {
        domain: DomainSpec::Line { half_length: l, step: h },
        base_order: 0,
        weights: vec![0.0, 0.25, 0.5],
        target_dim: dim,
        weight_bound: Some(0.9),
    })
    .unwrap()
}

#[test]
fn filler_annihilates_exponential_for_unit_hessian() {
    let space = line(2.0, 0.001, 1);
    let f = build_morse_filler(&DMatrix::identity(1, 1), space.clone()).unwrap();
    let h = GridFunction::from_fn(&space, 1, |s, _, o| o[0] = s.exp());
    let out = f.apply(&h).unwrap();
    // interior nodes: centered difference error ≈ h²/6·eˢ
    let n = space.s_nodes();
    for i in 1..n - 1 {
        assert!(out.values()[i].abs() < 1e-6 * space.s_at(i).exp());
    }
}

#[test]
fn filler_on_zero_is_zero() {
    let space = line(3.0, 0.1, 1);
    let f = build_morse_filler(&(-DMatrix::<f64>::identity(1, 1)), space.clone()).unwrap();
    let out = f.apply(&GridFunction::zeros(&space, 1)).unwrap();
    assert_eq!(out.sup_norm(), 0.0);
}

#[test]
fn degenerate_hessian_rejected() {
    let space = line(3.0, 0.1, 2);
    let h = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1e-12]);
    assert!(matches!(build_morse_filler(&h, space), Err(GermError::DegenerateCriticalPoint(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn hyperbolic_filler_is_invertible(a in 0.3f64..2.0, b in 0.3f64..2.0, th in 0.0f64..3.14, sign in prop::bool::ANY) {
        let space = line(6.0, 0.1, 2);
        let (c, s) = (th.cos(), th.sin());
        let rot = DMatrix::from_row_slice(2, 2, &[c, -s, s, c]);
        let lam2 = if sign { -b } else { b };
        let diag = DMatrix::from_row_slice(2, 2, &[a, 0.0, 0.0, lam2]);
        let hess = &rot * diag * rot.transpose();
        let f = build_morse_filler(&hess, space).unwrap();
        let sigma = f.weighted_min_singular_value(0.25);
        prop_assert!(sigma > 0.05, "sigma {}", sigma);
    }

    #[test]
    fn germ_fixed_point_satisfies_section(v in prop::collection::vec(-0.2f64..0.2, 3)) {
        let g = ContractionGerm::sine(3, 2, 0.3).unwrap();
        let s = solve_germ(&g, &v, 1, 1e-13, 500).unwrap();
        let f = g.section(&v, &s.value, 1);
        prop_assert!(g.norm(&f, 1) <= 1e-13);
    }
}

fn splitting_section() -> FilledSection {
    // core = span(e0, e1) rotated by v[0]; filler = 2·I
    FilledSection::new(
        3,
        |v| {
            let (c, s) = (v[0].cos(), v[0].sin());
            let q = DMatrix::from_row_slice(3, 3, &[c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0]);
            let p = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 1.0, 0.0]));
            &q * p * q.transpose()
        },
        |_, u| vec![u[0] - 0.5 * u[1], 0.0, 0.0],
        |_| DMatrix::identity(3, 3) * 2.0,
    )
}

#[test]
fn filled_zero_set_matches_base() {
    let f = splitting_section();
    let v = vec![0.0];
    let core = [0.5, 1.0, 0.0];
    let samples = vec![
        (v.clone(), core.to_vec()),
        (v.clone(), vec![core[0], core[1], 0.4]),
        (v.clone(), vec![0.0; 3]),
        (v.clone(), vec![1.0, 0.0, 0.0]),
    ];
    let r = filled_zero_set_check(&f, &samples, 1e-12);
    assert!(r.violations.is_empty());
    assert_eq!(r.filled_solutions, 2);
    assert_eq!(r.base_solutions, 2);
}

#[test]
fn filler_block_bounded_below_across_parameters() {
    let f = splitting_section();
    for k in 0..20 {
        let sigma = f.complement_min_singular_value(&[k as f64 * 0.1]);
        assert!((sigma - 2.0).abs() < 1e-12);
    }
}
