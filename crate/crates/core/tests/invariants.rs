mod common;

use fy_invopt::cli;
use fy_invopt::losses::{self, fy_loss};
use fy_invopt::metrics;
use fy_invopt::model::{CostMap, ForwardProblem, NoiseModel};
use fy_invopt::solvers::{self, fw_project, FwConfig};
use fy_invopt::spath::{self, GridSpec};
use fy_invopt::synth::{self, build_example, ExampleKind, ExampleSpec};
use fy_invopt::train::{self, SgdConfig};
use fy_invopt::{Dataset, Parameter};
use proptest::prelude::*;

fn vec_in(d: usize, lo: f64, hi: f64) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(lo..hi, d)
}

fn kind() -> impl Strategy<Value = ExampleKind> {
    prop::sample::select(ExampleKind::ALL.to_vec())
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

fn empirical_fy_risk(fp: &ForwardProblem, theta: &Parameter, ds: &Dataset, lambda: f64) -> f64 {
    ds.points()
        .iter()
        .map(|p| fy_loss(fp, theta, &p.u, &p.y, lambda).unwrap())
        .sum::<f64>()
        / ds.len() as f64
}

proptest! {
    #[test]
    fn matrix_cost_is_linear(
        t1 in vec_in(6, -3.0, 3.0),
        t2 in vec_in(6, -3.0, 3.0),
        u in vec_in(2, -2.0, 2.0),
        a in -2.0..2.0f64,
        b in -2.0..2.0f64,
    ) {
        let cm = CostMap::matrix_product(3, 2);
        let p = |v: Vec<f64>| Parameter::matrix(3, 2, v).unwrap();
        let mix: Vec<f64> = t1.iter().zip(&t2).map(|(x, y)| a * x + b * y).collect();
        let lhs = cm.cost(&p(mix), &u).unwrap();
        let c1 = cm.cost(&p(t1), &u).unwrap();
        let c2 = cm.cost(&p(t2), &u).unwrap();
        for k in 0..3 {
            prop_assert!((lhs[k] - (a * c1[k] + b * c2[k])).abs() <= 1e-12 * (1.0 + lhs[k].abs()) * 10.0);
        }
    }

    #[test]
    fn additive_and_hadamard_are_affine(
        t1 in vec_in(4, -3.0, 3.0),
        t2 in vec_in(4, -3.0, 3.0),
        u in vec_in(4, -2.0, 2.0),
        a in -2.0..2.0f64,
    ) {
        for cm in [CostMap::additive(4), CostMap::hadamard(4)] {
            let mix: Vec<f64> = t1.iter().zip(&t2).map(|(x, y)| a * x + (1.0 - a) * y).collect();
            let lhs = cm.cost(&Parameter::vector(mix), &u).unwrap();
            let c1 = cm.cost(&Parameter::vector(t1.clone()), &u).unwrap();
            let c2 = cm.cost(&Parameter::vector(t2.clone()), &u).unwrap();
            for k in 0..4 {
                prop_assert!((lhs[k] - (a * c1[k] + (1.0 - a) * c2[k])).abs() <= 1e-11);
            }
        }
    }

    #[test]
    fn jacobian_matches_finite_step(
        t in vec_in(6, -3.0, 3.0),
        dt in vec_in(6, -1.0, 1.0),
        u in vec_in(2, -2.0, 2.0),
    ) {
        let cm = CostMap::matrix_product(3, 2);
        let th = Parameter::matrix(3, 2, t.clone()).unwrap();
        let moved: Vec<f64> = t.iter().zip(&dt).map(|(a, b)| a + b).collect();
        let diff: Vec<f64> = cm
            .cost(&Parameter::matrix(3, 2, moved).unwrap(), &u)
            .unwrap()
            .iter()
            .zip(cm.cost(&th, &u).unwrap())
            .map(|(a, b)| a - b)
            .collect();
        let jd = cm.jacobian(&u).unwrap().apply(&dt);
        for k in 0..3 {
            prop_assert!((jd[k] - diff[k]).abs() <= 1e-12);
        }
    }

    #[test]
    fn noiseless_observations_are_feasible(kind in kind(), seed in any::<u64>()) {
        let spec = ExampleSpec::with_dim(kind, 4);
        let (fp, _) = build_example(&spec).unwrap();
        let ds = synth::generate(&spec, 20, NoiseModel::Noiseless, seed).unwrap();
        for p in ds.points() {
            prop_assert!(fp.region.contains(&p.y, 1e-12));
        }
    }

    #[test]
    fn regularized_solve_is_deterministic_and_lipschitz(
        kind in kind(),
        t1 in vec_in(5, -2.0, 2.0),
        t2 in vec_in(5, -2.0, 2.0),
        u in vec_in(5, 0.0, 1.0),
        lambda in 0.01..2.0f64,
    ) {
        prop_assume!(kind != ExampleKind::B);
        let (fp, _) = build_example(&ExampleSpec::with_dim(kind, 5)).unwrap();
        let p1 = Parameter::vector(t1.clone());
        let a = solvers::solve_regularized(&fp, &p1, &u, lambda).unwrap();
        prop_assert_eq!(&a, &solvers::solve_regularized(&fp, &p1, &u, lambda).unwrap());
        let b = solvers::solve_regularized(&fp, &Parameter::vector(t2.clone()), &u, lambda).unwrap();
        let coef = fp.base_quad + lambda;
        prop_assert!(dist(&a, &b) <= dist(&t1, &t2) / coef + 1e-12);
    }

    #[test]
    fn regularized_converges_to_exact(
        t in vec_in(4, -2.0, 2.0),
        u in vec_in(4, 0.0, 2.0),
        ball in any::<bool>(),
    ) {
        let (kind, scale) = if ball { (ExampleKind::E, 3.0) } else { (ExampleKind::C, 1.0) };
        let (fp, _) = build_example(&ExampleSpec::with_dim(kind, 4)).unwrap();
        let th = Parameter::vector(t);
        let h = fp.cost_map.cost(&th, &u).unwrap();
        // x* is unique only away from ties (box) and away from h = 0 (ball).
        prop_assume!(h.iter().all(|v| v.abs() > 0.05) && norm(&h) > 0.05);
        let x = solvers::solve_exact(&fp, &th, &u).unwrap();
        let mut prev = f64::INFINITY;
        for lambda in [1.0, 0.1, 0.01, 0.001] {
            let d = dist(&solvers::solve_regularized(&fp, &th, &u, lambda * scale).unwrap(), &x);
            prop_assert!(d <= prev + 1e-15);
            prev = d;
        }
        prop_assert!(prev <= 1e-3);
    }

    #[test]
    fn example_d_small_lambda_limit(t in vec_in(3, -1.0, 2.0), u in vec_in(3, 0.0, 2.0)) {
        let (fp, _) = build_example(&ExampleSpec::with_dim(ExampleKind::D, 3)).unwrap();
        let th = Parameter::vector(t.clone());
        let x = solvers::solve_regularized(&fp, &th, &u, 1e-9).unwrap();
        for k in 0..3 {
            let expect = ((t[k] + u[k]) / 2.0).clamp(0.0, 1.0);
            prop_assert!((x[k] - expect).abs() <= 1e-8);
        }
    }

    #[test]
    fn projections_satisfy_kkt(v in vec_in(5, -4.0, 4.0), a in 0.2..3.0f64) {
        // Box: residual lies in the normal cone coordinatewise.
        let x = solvers::project_box(&v, &[-1.0; 5], &[1.0; 5]);
        for k in 0..5 {
            let r = v[k] - x[k];
            prop_assert!(r.abs() <= 1e-9 || (r > 0.0 && x[k] == 1.0) || (r < 0.0 && x[k] == -1.0));
        }
        // Ball: v − x is a nonnegative multiple of x.
        let x = solvers::project_ball(&v, a);
        let r: Vec<f64> = v.iter().zip(&x).map(|(p, q)| p - q).collect();
        if norm(&v) > a {
            prop_assert!((norm(&x) - a).abs() <= 1e-9);
            let mu = r[0] / x[0];
            prop_assert!(mu >= -1e-9);
            for k in 0..5 {
                prop_assert!((r[k] - mu * x[k]).abs() <= 1e-9);
            }
        } else {
            prop_assert!(norm(&r) <= 1e-12);
        }
        // Capped simplex: r_k = τ on the support, r_k ≥ τ off it, τ ≥ 0.
        let x = solvers::project_nonneg_l1cap(&v, a);
        let sum: f64 = x.iter().sum();
        let tau = (0..5).filter(|&k| x[k] > 0.0).map(|k| v[k] - x[k]).next().unwrap_or(0.0);
        prop_assert!(tau >= -1e-9 && sum <= a + 1e-9);
        prop_assert!(tau <= 1e-9 || (sum - a).abs() <= 1e-9);
        for k in 0..5 {
            prop_assert!(x[k] >= 0.0);
            if x[k] > 0.0 {
                prop_assert!((v[k] - x[k] - tau).abs() <= 1e-9);
            } else {
                prop_assert!(v[k] <= tau + 1e-9);
            }
        }
    }

    #[test]
    fn fy_loss_nonnegative_and_zero_at_optimum(
        kind in kind(),
        t in vec_in(4, -2.0, 2.0),
        raw in vec_in(4, -3.0, 3.0),
        lambda in 0.01..2.0f64,
        seed in any::<u64>(),
    ) {
        let spec = ExampleSpec::with_dim(kind, 4);
        let (fp, _) = build_example(&spec).unwrap();
        let u = spec.contexts.sample(&mut fy_invopt::rng::from_seed(seed));
        let th = Parameter::vector(t);
        let y = solvers::project(&fp.region, &raw).unwrap();
        prop_assert!(fy_loss(&fp, &th, &u, &y, lambda).unwrap() >= -1e-12);
        let opt = solvers::solve_regularized(&fp, &th, &u, lambda).unwrap();
        prop_assert!(fy_loss(&fp, &th, &u, &opt, lambda).unwrap().abs() <= 1e-12);
    }

    #[test]
    fn metrics_vanish_at_truth(kind in kind(), seed in any::<u64>()) {
        let spec = ExampleSpec::with_dim(kind, 3);
        let (fp, th) = build_example(&spec).unwrap();
        let us = spec.contexts.sample_many(30, &mut fy_invopt::rng::from_seed(seed));
        let r = metrics::evaluate(&fp, &th, &th, &us, 0.0).unwrap();
        prop_assert_eq!(r.parameter_error, Some(0.0));
        prop_assert_eq!(r.decision_error, 0.0);
        prop_assert_eq!(r.regret, 0.0);
    }

    #[test]
    fn regret_is_nonnegative(kind in kind(), t in vec_in(3, -2.0, 2.0), seed in any::<u64>()) {
        let spec = ExampleSpec::with_dim(kind, 3);
        let (fp, th) = build_example(&spec).unwrap();
        let us = spec.contexts.sample_many(30, &mut fy_invopt::rng::from_seed(seed));
        prop_assert!(metrics::regret(&fp, &Parameter::vector(t), &th, &us).unwrap() >= -1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn fits_are_deterministic_and_reduce_risk(kind in kind(), seed in any::<u64>()) {
        let spec = ExampleSpec::with_dim(kind, 3);
        let (fp, _) = build_example(&spec).unwrap();
        let ds = synth::generate(&spec, 40, NoiseModel::NoisyDecision { sigma: 1.0 }, seed).unwrap();
        let cfg = SgdConfig { max_iters: 300, seed, ..SgdConfig::default() };
        let a = train::fy_sgd_fit(&ds, &fp, &cfg).unwrap();
        let b = train::fy_sgd_fit(&ds, &fp, &cfg).unwrap();
        prop_assert_eq!(&a.theta, &b.theta);
        prop_assert_eq!(&a.trace, &b.trace);
        let zero = Parameter::zeros(3, 1);
        prop_assert!(empirical_fy_risk(&fp, &a.theta, &ds, 0.1) <= empirical_fy_risk(&fp, &zero, &ds, 0.1) + 1e-12);
        // θ = 0 already minimizes the hinged subopt risk, so start elsewhere.
        let start = Parameter::vector(vec![1.0, -1.0, 0.5]);
        let s = train::subopt_fit(
            &ds,
            &fp,
            &SgdConfig { max_iters: 300, seed, init: Some(start.as_slice().to_vec()), ..SgdConfig::subgradient() },
        )
        .unwrap();
        let sub_risk = |th: &Parameter| -> f64 {
            ds.points().iter().map(|p| losses::subopt_loss(&fp, th, &p.u, &p.y).unwrap().max(0.0)).sum::<f64>()
        };
        prop_assert!(sub_risk(&s.theta) <= sub_risk(&start) + 1e-9);
    }

    #[test]
    fn full_batch_trace_is_monotone(kind in kind(), seed in any::<u64>()) {
        let spec = ExampleSpec::with_dim(kind, 3);
        let (fp, _) = build_example(&spec).unwrap();
        let ds = synth::generate(&spec, 30, NoiseModel::NoisyDecision { sigma: 1.0 }, seed).unwrap();
        let cfg = SgdConfig {
            learning_rate: 0.01,
            batch_size: Some(usize::MAX),
            max_iters: 200,
            seed,
            ..SgdConfig::default()
        };
        let fit = train::fy_sgd_fit(&ds, &fp, &cfg).unwrap();
        for w in fit.trace.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-12);
        }
    }

    #[test]
    fn flow_observations_and_fw_decisions_are_flows(seed in any::<u64>()) {
        let grid = GridSpec { rows: 3, cols: 4, edges: 20, context_dim: 3 };
        let sp = spath::synth_graph_instance(&grid, 20, 0.1, seed).unwrap();
        let g = sp.graph.clone();
        for y in &sp.observations {
            prop_assert!(g.flow_residual(y) == 0.0);
            prop_assert!(y.iter().all(|v| *v == 0.0 || *v == 1.0));
        }
        let mut r = common::rng(seed);
        let target: Vec<f64> = (0..g.num_edges()).map(|_| rand::Rng::random_range(&mut r, -1.0..2.0)).collect();
        let x = fw_project(&g, &target, &FwConfig::default()).unwrap();
        prop_assert!(g.flow_residual(&x) <= 1e-8);
        prop_assert!(x.iter().all(|v| *v >= -1e-8 && *v <= 1.0 + 1e-8));
        let (tr, te) = spath::split(50, 0.6, seed);
        prop_assert_eq!((tr.clone(), te.clone()), spath::split(50, 0.6, seed));
        prop_assert_eq!(tr.len() + te.len(), 50);
    }
}

#[test]
fn hadamard_degeneracy_witness() {
    let spec = ExampleSpec::new(ExampleKind::B);
    let (fp, _) = build_example(&spec).unwrap();
    let ds = synth::generate(&spec, 100, NoiseModel::Noiseless, 1).unwrap();
    let zero = Parameter::zeros(10, 1);
    let kka = losses::KkaState::zeros(&fp, zero.clone(), &ds).unwrap();
    assert_eq!(losses::kka_objective(&fp, &kka, &ds).unwrap(), 0.0);
    for p in ds.points() {
        assert_eq!(losses::subopt_loss(&fp, &zero, &p.u, &p.y).unwrap(), 0.0);
    }
    assert!(empirical_fy_risk(&fp, &zero, &ds, 0.1) > 0.0);
}

#[test]
fn lambda_jump_on_example_b() {
    let spec = ExampleSpec::new(ExampleKind::B);
    let (fp, th) = build_example(&spec).unwrap();
    let ds = synth::generate(&spec, 100, NoiseModel::NoisyDecision { sigma: 1.0 }, 4).unwrap();
    let test = spec.contexts.sample_many(500, &mut fy_invopt::rng::from_seed(40));
    let fy = train::fy_sgd_fit(&ds, &fp, &SgdConfig::default()).unwrap();
    let sub = train::subopt_fit(&ds, &fp, &SgdConfig::subgradient()).unwrap();
    assert!(sub.theta.norm() < 0.05);
    // Subopt collapses toward θ = 0, where every coordinate ties.
    let de_fy = metrics::decision_error(&fp, &fy.theta, &th, &test).unwrap();
    let de_collapsed = metrics::decision_error(&fp, &Parameter::zeros(10, 1), &th, &test).unwrap();
    assert!(de_fy < de_collapsed, "{de_fy} vs {de_collapsed}");
}

#[test]
fn noiseless_c_recovers_parameter() {
    let spec = ExampleSpec::new(ExampleKind::C);
    let (fp, th) = build_example(&spec).unwrap();
    let ds = synth::generate(&spec, 300, NoiseModel::Noiseless, 3).unwrap();
    let cfg = SgdConfig {
        lambda: 0.01,
        max_iters: 5000,
        ..SgdConfig::default()
    };
    let fit = train::fy_sgd_fit(&ds, &fp, &cfg).unwrap();
    let err = metrics::parameter_error(&fit.theta, &th).unwrap();
    assert!(err <= 0.15, "{err}");
}

#[test]
fn parameter_error_shrinks_with_n_on_noiseless_c() {
    let cfg = cli::RunConfig {
        experiment: "C".into(),
        noise: "noiseless".into(),
        sample_sizes: vec![50, 1000],
        replications: 20,
        ..cli::RunConfig::default()
    };
    let s = cli::run_synth(&cfg, None).unwrap();
    assert!(s.rows[1].parameter_error_mean.unwrap() < s.rows[0].parameter_error_mean.unwrap());
}

#[test]
fn ball_calibration_reg_term_matches_closed_form() {
    let spec = ExampleSpec::with_dim(ExampleKind::E, 3);
    let (fp, th) = build_example(&spec).unwrap();
    let us = spec.contexts.sample_many(50, &mut fy_invopt::rng::from_seed(8));
    let lambda = 2.0;
    let rep = metrics::calibration_check(&fp, &th, &th, lambda, &us, &[]).unwrap();
    let a = spec.scale;
    let expect: f64 = us
        .iter()
        .map(|u| {
            let h: Vec<f64> = th.as_slice().iter().zip(u).map(|(p, q)| p + q).collect();
            let n = norm(&h);
            let xl: Vec<f64> = if n <= lambda * a { h.iter().map(|v| v / lambda).collect() } else { h.iter().map(|v| a * v / n).collect() };
            let x: Vec<f64> = h.iter().map(|v| a * v / n).collect();
            dist(&xl, &x).powi(2)
        })
        .sum::<f64>()
        / us.len() as f64;
    assert!((rep.reg_error_term - expect).abs() <= 1e-12);
}

#[test]
fn flow_regularized_decision_on_synthetic_grid() {
    let grid = GridSpec::default();
    let sp = spath::synth_graph_instance(&grid, 5, 0.1, 2).unwrap();
    let fp = sp.forward_problem().unwrap();
    let th = sp.truth.clone().unwrap();
    for r in &sp.records {
        let x = solvers::solve_regularized(&fp, &th, &r.u, 0.1).unwrap();
        assert!(fp.region.contains(&x, 1e-8));
    }
}
