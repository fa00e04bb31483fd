mod common;

use std::sync::OnceLock;

use carnot_lab::carnot::{monomial_basis, CarnotGroup, GaugeBall, GradedPolynomial, Point, TestFunction};
use carnot_lab::cli::config::ExperimentConfig;
use carnot_lab::lab::{best_polynomial, campanato_norm, poincare_test, Normalization};
use carnot_lab::operators::ball_scheme;
use carnot_lab::quad::{ball_nodes, integrate_ball, integrate_singular_product, lp_norm_ball, QuadratureScheme};
use carnot_lab::rng::StreamKey;
use carnot_lab::weights::{
    ball_term, weight_condition_sup, BallSampler, Branch, ExponentSystem, Weight, DEFAULT_T_GRID,
};
use common::{box_volume, close, slope_of};
use proptest::prelude::*;
use proptest::test_runner::{Config, RngSeed};

fn groups() -> &'static [CarnotGroup] {
    static GROUPS: OnceLock<Vec<CarnotGroup>> = OnceLock::new();
    GROUPS.get_or_init(common::groups)
}

fn config(cases: u32) -> Config {
    Config { cases, rng_seed: RngSeed::Fixed(0x1ab), failure_persistence: None, ..Config::default() }
}

fn coords(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-2.0f64..2.0, n)
}

fn group_and_points(count: usize) -> impl Strategy<Value = (usize, Vec<Vec<f64>>)> {
    (0..groups().len()).prop_flat_map(move |g| {
        let n = groups()[g].ambient_dim();
        (Just(g), prop::collection::vec(coords(n), count))
    })
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(config(1000))]

    #[test]
    fn group_axioms((g, pts) in group_and_points(3)) {
        let grp = &groups()[g];
        let (a, b, c) = (&pts[0], &pts[1], &pts[2]);
        let left = grp.compose_slice(&grp.compose_slice(a, b), c);
        let right = grp.compose_slice(a, &grp.compose_slice(b, c));
        prop_assert!(max_abs_diff(&left, &right) <= 1e-12 * (1.0 + left.iter().fold(0.0f64, |m, v| m.max(v.abs()))));
        let e = vec![0.0; a.len()];
        prop_assert_eq!(grp.compose_slice(&e, a), a.clone());
        prop_assert_eq!(grp.compose_slice(a, &e), a.clone());
        let inv = grp.inverse(&Point::new(a.clone()));
        prop_assert!(max_abs_diff(&grp.compose_slice(a, inv.coords()), &e) <= 1e-12);
        prop_assert!(max_abs_diff(&grp.compose_slice(inv.coords(), a), &e) <= 1e-12);
    }

    #[test]
    fn dilations_are_automorphisms((g, pts) in group_and_points(2), lambda in 0.05f64..20.0) {
        let grp = &groups()[g];
        let dil = |v: &[f64]| {
            let mut w = v.to_vec();
            grp.dilate_in_place(lambda, &mut w);
            w
        };
        let lhs = dil(&grp.compose_slice(&pts[0], &pts[1]));
        let rhs = grp.compose_slice(&dil(&pts[0]), &dil(&pts[1]));
        let scale = 1.0 + lhs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        prop_assert!(max_abs_diff(&lhs, &rhs) <= 1e-12 * scale);
    }

    #[test]
    fn gauge_is_homogeneous_and_distance_left_invariant((g, pts) in group_and_points(3), lambda in 0.05f64..20.0) {
        let grp = &groups()[g];
        let mut d = pts[0].clone();
        grp.dilate_in_place(lambda, &mut d);
        prop_assert!(close(grp.gauge(&d), lambda * grp.gauge(&pts[0]), 1e-13));
        let (x, y, h) = (&pts[0], &pts[1], &pts[2]);
        let moved = grp.distance_slice(&grp.compose_slice(h, x), &grp.compose_slice(h, y));
        prop_assert!(close(moved, grp.distance_slice(x, y), 1e-11));
    }
}

proptest! {
    #![proptest_config(config(8))]

    #[test]
    fn volume_exponent_matches_homogeneous_dimension(g in 0..4usize, seed in any::<u64>()) {
        let grp = &groups()[g];
        let radii = [0.5, 1.0, 2.0, 4.0];
        let key = StreamKey::new(seed);
        let logs: Vec<f64> = radii
            .iter()
            .enumerate()
            .map(|(i, &r)| box_volume(grp, r, 20_000, key.fork(i as u64)).0.ln())
            .collect();
        let xs: Vec<f64> = radii.iter().map(|r: &f64| r.ln()).collect();
        let q = grp.homogeneous_dimension() as f64;
        prop_assert!((slope_of(&xs, &logs) - q).abs() <= 0.01 * q);
    }

    #[test]
    fn reverse_doubling_ratio(g in 0..4usize, r in 0.2f64..3.0, seed in any::<u64>()) {
        let grp = &groups()[g];
        let key = StreamKey::new(seed);
        let (small, s1) = box_volume(grp, r, 40_000, key.fork(0));
        let (big, s2) = box_volume(grp, 2.0 * r, 40_000, key.fork(1));
        let ratio = big / small;
        let se = ratio * ((s1 / small).powi(2) + (s2 / big).powi(2)).sqrt();
        let expected = 2f64.powi(grp.homogeneous_dimension() as i32);
        prop_assert!((ratio - expected).abs() <= 4.0 * se, "ratio {} vs {} (se {})", ratio, expected, se);
    }
}

fn scheme_for(kind: usize, seed: u64) -> QuadratureScheme {
    match kind {
        0 => QuadratureScheme::uniform(4000, seed),
        1 => QuadratureScheme::annuli(4000, 8, seed),
        _ => QuadratureScheme::grid(24),
    }
}

proptest! {
    #![proptest_config(config(32))]

    #[test]
    fn nonnegative_integrands_have_nonnegative_estimates(
        kind in 0..3usize,
        seed in any::<u64>(),
        c in prop::collection::vec(-3.0f64..3.0, 3),
        r in 0.1f64..3.0,
    ) {
        let grp = common::r2();
        let ball = GaugeBall::new(&grp, Point::new(vec![c[0], c[1]]), r).unwrap();
        let est = integrate_ball(&grp, |y| (y[0] * c[2] - y[1]).powi(2), &ball, &ball_scheme(&scheme_for(kind, seed))).unwrap();
        prop_assert!(est.value >= 0.0);
    }

    #[test]
    fn singular_estimates_are_monotone(seed in any::<u64>(), x in -1.0f64..1.0, shift in 0.0f64..2.0) {
        let grp = common::r1();
        let supports = vec![GaugeBall::new(&grp, Point::new(vec![0.0]), 1.0).unwrap(); 2];
        let scheme = QuadratureScheme::annuli(4000, 12, seed);
        let g = |ys: &[f64]| (1.0 - ys[0] * ys[0]).max(0.0) * (1.0 - ys[1] * ys[1]).max(0.0);
        let f = |ys: &[f64]| g(ys) + shift * (ys[0] - ys[1]).powi(2);
        let low = integrate_singular_product(&grp, 2, g, &[x], 1.0, &supports, &scheme).unwrap();
        let high = integrate_singular_product(&grp, 2, f, &[x], 1.0, &supports, &scheme).unwrap();
        prop_assert!(high.estimate.value >= low.estimate.value);
    }

    #[test]
    fn annuli_and_uniform_agree_without_a_kernel(seed in any::<u64>(), x in -1.0f64..1.0) {
        let grp = common::r1();
        let ball = GaugeBall::new(&grp, Point::new(vec![0.2]), 0.8).unwrap();
        let f = |y: &[f64]| if ball.contains(&grp, y) { (y[0] + 1.0).powi(2) } else { 0.0 };
        let uni = integrate_ball(&grp, f, &ball, &QuadratureScheme::uniform(20_000, seed)).unwrap();
        let sing = integrate_singular_product(
            &grp, 1, f, &[x], 1.0, std::slice::from_ref(&ball), &QuadratureScheme::annuli(20_000, 12, seed ^ 1),
        ).unwrap();
        let se = (uni.std_error.powi(2) + sing.estimate.std_error.powi(2)).sqrt();
        prop_assert!(se > 0.0);
        prop_assert!((uni.value - sing.estimate.value).abs() <= 4.0 * se, "{:?} vs {:?}", uni, sing);
    }

    #[test]
    fn std_error_shrinks_like_inverse_root(seed in any::<u64>()) {
        let grp = common::h1();
        let ball = GaugeBall::centered(&grp, 1.0).unwrap();
        let f = |y: &[f64]| y[0] * y[0] + y[2];
        let a = integrate_ball(&grp, f, &ball, &QuadratureScheme::uniform(4000, seed)).unwrap();
        let b = integrate_ball(&grp, f, &ball, &QuadratureScheme::uniform(16_000, seed)).unwrap();
        let ratio = a.std_error / b.std_error;
        prop_assert!((1.0..=4.0).contains(&ratio), "se ratio {}", ratio);
    }
}

proptest! {
    #![proptest_config(config(16))]

    #[test]
    fn sup_estimates_grow_with_more_balls(seed in any::<u64>(), extra in 1usize..8, beta in -0.4f64..1.5) {
        let grp = common::r1();
        let u = Weight::power(Point::new(vec![0.1]), beta);
        let vs = [Weight::one(), Weight::one()];
        let system = ExponentSystem::new(vec![4.0 / 3.0, 4.0 / 3.0], 2.0, 1);
        let scheme = QuadratureScheme::annuli(2000, 8, seed);
        let few = BallSampler::new(6, seed);
        let more = BallSampler { count: 6 + extra, ..few.clone() };
        let a = weight_condition_sup(&grp, &u, &vs, &system, &few, &DEFAULT_T_GRID, &scheme).unwrap();
        let b = weight_condition_sup(&grp, &u, &vs, &system, &more, &DEFAULT_T_GRID, &scheme).unwrap();
        for (ra, rb) in a.rows.iter().zip(&b.rows) {
            prop_assert!(rb.evaluated >= ra.evaluated);
            if ra.evaluated > 0 {
                prop_assert!(rb.sup >= ra.sup, "{:?} vs {:?}", ra, rb);
            }
        }
    }

    #[test]
    fn constant_weight_ball_term_ignores_center(
        center in prop::collection::vec(-5.0f64..5.0, 3),
        r in 0.01f64..50.0,
        cu in 0.5f64..3.0,
        cv in 0.5f64..3.0,
    ) {
        let grp = common::h1();
        let system = ExponentSystem::new(vec![2.0, 2.0], 4.0 / 3.0, 1);
        let u = Weight::Constant { c: cu };
        let vs = [Weight::Constant { c: cv }, Weight::Constant { c: cv }];
        let scheme = QuadratureScheme::uniform(2000, 3);
        let at = |c: Vec<f64>| {
            let ball = GaugeBall::new(&grp, Point::new(c), r).unwrap();
            ball_term(&grp, &u, &vs, &system, &ball, 1.5, Branch::QAboveOne, &scheme).unwrap().value.value
        };
        let here = at(center);
        let origin = at(vec![0.0; 3]);
        prop_assert!(close(here, origin, 1e-12));
        prop_assert!(close(here, cu / (cv * cv), 1e-12));
    }

    #[test]
    fn branches_meet_at_q_one(r in 0.05f64..20.0, cu in 0.5f64..3.0, cv in 0.5f64..3.0) {
        let grp = common::r1();
        let u = Weight::Constant { c: cu };
        let vs = [Weight::Constant { c: cv }, Weight::Constant { c: cv }];
        let ball = GaugeBall::centered(&grp, r).unwrap();
        let scheme = QuadratureScheme::uniform(2000, 3);
        let at_one = ExponentSystem::new(vec![4.0, 4.0], 1.0, 1);
        let above = ExponentSystem::new(vec![4.0, 4.0], 1.0 + 1e-9, 1);
        let a = ball_term(&grp, &u, &vs, &at_one, &ball, 1.0 + 1e-9, Branch::QAtMostOne, &scheme).unwrap();
        let b = ball_term(&grp, &u, &vs, &above, &ball, 1.0 + 1e-9, Branch::QAboveOne, &scheme).unwrap();
        prop_assert!(close(a.value.value, b.value.value, 1e-6));
    }

    #[test]
    fn campanato_ignores_low_degree_polynomials(
        seed in any::<u64>(),
        coefs in prop::collection::vec(-5.0f64..5.0, 4),
        p in prop::sample::select(vec![1.0, 2.0]),
    ) {
        let grp = common::h1();
        let f = TestFunction::bump(Point::new(vec![0.1, -0.2, 0.0]), 1.0);
        let basis = monomial_basis(&grp, 2);
        let poly = GradedPolynomial::from_terms(3, basis.into_iter().zip(coefs));
        let sampler = BallSampler { count: 4, r_min: 0.2, r_max: 2.0, ..BallSampler::new(4, seed) };
        let scheme = QuadratureScheme::uniform(3000, seed);
        let norm = |g: &(dyn Fn(&[f64]) -> f64 + Sync)| {
            campanato_norm(&grp, g, &Weight::one(), p, 3.0, 2, &sampler, &scheme, Normalization::Ambient).unwrap().estimate.value
        };
        let plain = norm(&|y: &[f64]| f.value(&grp, y));
        let shifted = norm(&|y: &[f64]| f.value(&grp, y) + poly.eval(y));
        prop_assert!(close(plain, shifted, 1e-6), "{} vs {}", plain, shifted);
    }

    #[test]
    fn poincare_is_left_translation_covariant(
        seed in any::<u64>(),
        shift in prop::collection::vec(-3.0f64..3.0, 3),
        k in 1u32..3,
    ) {
        let grp = common::h1();
        let fs = vec![
            TestFunction::bump(Point::new(vec![0.2, 0.0, 0.1]), 0.8),
            TestFunction::bump(Point::new(vec![-0.1, 0.3, 0.0]), 0.9),
        ];
        let ball = GaugeBall::new(&grp, Point::new(vec![0.0, 0.1, 0.0]), 0.7).unwrap();
        let q = if k == 1 { 4.0 / 3.0 } else { 2.0 };
        let system = ExponentSystem::new(vec![2.0, 2.0], q, k);
        let vs = [Weight::one(), Weight::one()];
        let scheme = QuadratureScheme::uniform(3000, seed);
        let base = poincare_test(&grp, &fs, &Weight::one(), &vs, &system, &ball, &scheme).unwrap();
        let by = Point::new(shift);
        let moved_fs: Vec<TestFunction> = fs.iter().map(|f| f.clone().translated(by.clone())).collect();
        let moved_ball = GaugeBall::new(&grp, grp.compose(&by, &ball.center).unwrap(), ball.radius).unwrap();
        let moved = poincare_test(&grp, &moved_fs, &Weight::one(), &vs, &system, &moved_ball, &scheme).unwrap();
        for (a, b) in [(base.lhs, moved.lhs), (base.rhs, moved.rhs)] {
            let se = (a.std_error.powi(2) + b.std_error.powi(2)).sqrt();
            prop_assert!((a.value - b.value).abs() <= 3.0 * se + 1e-9 * a.value.abs());
        }
    }

    #[test]
    fn best_polynomial_beats_perturbations(
        seed in any::<u64>(),
        g in 0..3usize,
        q in prop::sample::select(vec![1.0, 1.5, 2.0]),
        k in 1u32..3,
    ) {
        let grp = [common::r1(), common::r2(), common::h1()][g].clone();
        let n = grp.ambient_dim();
        let center = Point::new((0..n).map(|i| 0.1 * i as f64).collect());
        let ball = GaugeBall::new(&grp, center, 0.9).unwrap();
        let f = |y: &[f64]| (y[0] * 1.3).sin() + y.iter().map(|v| v * v).sum::<f64>().sqrt();
        let u = Weight::one();
        let scheme = QuadratureScheme::uniform(3000, seed);
        let fit = best_polynomial(&grp, f, &u, q, &ball, k, &scheme).unwrap();
        let nodes_scheme = ball_scheme(&scheme);
        let mut rng = StreamKey::new(seed).fork_label("probe").sample(0);
        let basis = monomial_basis(&grp, k);
        for probe in 0..100 {
            let size = 0.3 * 0.9f64.powi(probe / 10);
            let delta = GradedPolynomial::from_terms(n, basis.iter().map(|a| (a.clone(), rng.uniform(-size, size))));
            let cand = fit.polynomial.add(&delta);
            let value = lp_norm_ball(&grp, |y| f(y) - cand.eval(y), |_| 1.0, q, &ball, &nodes_scheme).unwrap();
            prop_assert!(value.value >= fit.value.value - 3.0 * fit.value.std_error - 1e-9);
        }
    }

    #[test]
    fn ball_nodes_follow_the_ball(seed in any::<u64>(), c in coords(3), r in 0.1f64..4.0) {
        let grp = common::h1();
        let ball = GaugeBall::new(&grp, Point::new(c), r).unwrap();
        let nodes = ball_nodes(&grp, &ball, &QuadratureScheme::uniform(1000, seed)).unwrap();
        prop_assert!((0..nodes.len()).all(|i| ball.contains(&grp, nodes.point(i))));
    }

    #[test]
    fn configs_round_trip(seed in any::<u64>(), samples in 1000usize..100_000) {
        let cfg = ExperimentConfig { seed, samples, ..ExperimentConfig::default() };
        let text = cfg.to_toml().unwrap();
        let back = ExperimentConfig::from_toml(&text).unwrap();
        prop_assert_eq!(back.to_toml().unwrap(), text);
    }
}
