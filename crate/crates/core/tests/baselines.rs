use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;
use rand_chacha::ChaCha8Rng;
use tecu::baselines::{bcu_iterate, inv_d_update, ipalm_iterate, palm_iterate};
use tecu::operators::sphere_project;
use tecu::prelude::*;
use tecu::problem::{AppliedUpdate, Shape};
use tecu::tasks::{DlProblem, SeparableQuadratic};

fn desk(seed: u64) -> (DlProblem, Mat, Mat) {
    let data = synth_dl_data(&SynthSpec { seed, ..SynthSpec::default() }).unwrap();
    let p = build_dl_problem(DlInstance::new(data.y, 0.1, 32)).unwrap();
    let (w, d) = p.initial_point(&mut ChaCha8Rng::seed_from_u64(seed + 50));
    (p, w, d)
}

fn opts(max_outer: usize) -> RunOptions {
    RunOptions {
        max_outer,
        ..RunOptions::default()
    }
}

fn bits(m: &Mat) -> Vec<u64> {
    m.iter().map(|v| v.to_bits()).collect()
}

#[test]
fn zero_inertia_reproduces_palm() {
    let (p, w, d) = desk(1);
    let palm = run_baseline(&p, Baseline::palm(), &opts(40), w.clone(), d.clone()).unwrap();
    for b in [
        Baseline::Ipalm { beta: 0.0, safety: 1.1 },
        Baseline::Bcu { beta: 0.0, safety: 1.1 },
    ] {
        let other = run_baseline(&p, b, &opts(40), w.clone(), d.clone()).unwrap();
        assert_eq!(other.iterations(), palm.iterations());
        for (a, c) in palm.trace.iter().zip(&other.trace) {
            assert_eq!(a.objective.to_bits(), c.objective.to_bits());
            assert_eq!(a.step_norm_x.to_bits(), c.step_norm_x.to_bits());
        }
        assert_eq!(bits(&palm.final_x), bits(&other.final_x));
        assert_eq!(bits(&palm.final_y), bits(&other.final_y));
    }
}

#[test]
fn palm_equals_engine_two_five() {
    let (p, w, d) = desk(2);
    let palm = run_baseline(&p, Baseline::palm(), &opts(30), w.clone(), d.clone()).unwrap();
    let cfg = SolverConfig {
        run: opts(30),
        ..SolverConfig::new(UpdateRule::prox_linear(), UpdateRule::prox_linear())
    };
    let engine = solve(&p, &cfg, w, d).unwrap();
    assert_eq!(engine.combination_label, "PALM");
    assert_eq!(palm.combination_label, "PALM");
    assert_eq!(bits(&palm.final_x), bits(&engine.final_x));
    assert_eq!(bits(&palm.final_y), bits(&engine.final_y));
}

#[test]
fn palm_iterate_is_two_gradient_steps_on_separable_quadratic() {
    let p = SeparableQuadratic::new(Shape::new(2, 1), Shape::new(1, 1));
    let x0 = Mat::from_column_slice(2, 1, &[1.0, -2.0]);
    let y0 = Mat::from_element(1, 1, 3.0);
    let st = IterateState::new(x0.clone(), y0.clone());
    let (x1, y1) = palm_iterate(&p, &st).unwrap();
    // L = 1, γ = 1.1: u − u/1.1.
    let shrink = 1.0 - 1.0 / 1.1;
    assert!((x1 - x0 * shrink).norm() < 1e-15);
    assert!((y1 - y0 * shrink).norm() < 1e-15);
}

#[test]
fn palm_objective_is_monotone_on_desk_instance() {
    let (p, w, d) = desk(3);
    let res = run_baseline(&p, Baseline::palm(), &opts(200), w, d).unwrap();
    for pair in res.trace.windows(2) {
        assert!(pair[1].objective <= pair[0].objective + 1e-10 * (1.0 + pair[0].objective.abs()));
    }
    assert!(res.descent_violations.is_empty());
}

#[test]
fn ipalm_and_bcu_differ_with_inertia() {
    let (p, w0, d0) = desk(4);
    let mut st = IterateState::new(w0, d0);
    let first = palm_iterate(&p, &st).unwrap();
    st.advance(first.0, first.1);
    let inertial = InertialConfig::new(0.5).unwrap();
    let a = ipalm_iterate(&p, &st, inertial).unwrap();
    let b = bcu_iterate(&p, &st, inertial).unwrap();
    assert!((&a.0 - &b.0).norm() > 1e-8);
}

/// `H = ½‖Ax + By − c‖²`, `f = g = 0`: a convex quadratic with a
/// nonzero minimizer.
struct CoupledLeastSquares {
    a: Mat,
    b: Mat,
    c: Mat,
}

impl CoupledLeastSquares {
    fn residual(&self, x: &Mat, y: &Mat) -> Mat {
        &self.a * x + &self.b * y - &self.c
    }
}

impl BlockProblem for CoupledLeastSquares {
    fn x_shape(&self) -> Shape {
        Shape::new(self.a.ncols(), 1)
    }
    fn y_shape(&self) -> Shape {
        Shape::new(self.b.ncols(), 1)
    }
    fn f_value(&self, _x: &Mat) -> f64 {
        0.0
    }
    fn g_value(&self, _y: &Mat) -> f64 {
        0.0
    }
    fn h_value(&self, x: &Mat, y: &Mat) -> f64 {
        0.5 * self.residual(x, y).norm_squared()
    }
    fn h_grad_x(&self, x: &Mat, y: &Mat) -> Mat {
        self.a.transpose() * self.residual(x, y)
    }
    fn h_grad_y(&self, x: &Mat, y: &Mat) -> Mat {
        self.b.transpose() * self.residual(x, y)
    }
    fn prox_f(&self, v: &Mat, _tau: f64) -> Mat {
        v.clone()
    }
    fn prox_g(&self, v: &Mat, _tau: f64) -> Mat {
        v.clone()
    }
    fn lipschitz_x(&self, _y: &Mat) -> tecu::Result<f64> {
        tecu::update::gram_spectral_bound(&self.a)
    }
    fn lipschitz_y(&self, _x: &Mat) -> tecu::Result<f64> {
        tecu::update::gram_spectral_bound(&self.b)
    }
    fn random_point(&self, rng: &mut dyn rand::RngCore) -> (Mat, Mat) {
        let mut g = |n: usize| Mat::from_fn(n, 1, |_, _| rng.sample::<f64, _>(StandardNormal));
        (g(self.a.ncols()), g(self.b.ncols()))
    }
}

#[test]
fn inertia_helps_on_convex_quadratic() {
    let mut wins = 0;
    for seed in 0..5u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut g = |r: usize, c: usize| Mat::from_fn(r, c, |_, _| rng.sample::<f64, _>(StandardNormal));
        let p = CoupledLeastSquares {
            a: g(12, 4),
            b: g(12, 3),
            c: g(12, 1),
        };
        let (x0, y0) = p.random_point(&mut ChaCha8Rng::seed_from_u64(seed + 100));
        let plain = run_baseline(&p, Baseline::Ipalm { beta: 0.0, safety: 1.1 }, &opts(5000), x0.clone(), y0.clone()).unwrap();
        let fast = run_baseline(&p, Baseline::ipalm(), &opts(5000), x0, y0).unwrap();
        assert!(plain.converged() && fast.converged());
        if fast.iterations() < plain.iterations() {
            wins += 1;
        }
    }
    assert!(wins >= 3, "{wins}/5");
}

#[test]
fn inv_reports_its_residual_honestly() {
    let (p, w, d) = desk(5);
    let res = run_inv(&p, 1.0, 1.1, &opts(20), w, d).unwrap();
    assert_eq!(res.combination_label, "INV");
    assert!(res.trace.iter().all(|r| r.applied_y == AppliedUpdate::Heuristic));
    assert!(res.trace.iter().skip(1).any(|r| r.err_norm_y > 0.0));
    for col in res.final_y.column_iter() {
        assert!((col.norm() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn inv_update_solves_the_unconstrained_system_before_projecting() {
    let (p, w, d) = desk(6);
    let eta = 0.7;
    let out = inv_d_update(&d, &w, p.data(), eta).unwrap();
    let gram = w.transpose() * &w + Mat::identity(w.ncols(), w.ncols()) * eta;
    let rhs = p.data() * &w + &d * eta;
    let free = rhs * gram.try_inverse().unwrap();
    assert!((out - sphere_project(&free)).norm() < 1e-9);
}

#[test]
fn baselines_reject_bad_parameters() {
    assert!(InertialConfig::new(1.0).is_err());
    assert!(InertialConfig::new(-0.1).is_err());
    assert!(Baseline::Palm { safety: 1.0 }.validate().is_err());
}
