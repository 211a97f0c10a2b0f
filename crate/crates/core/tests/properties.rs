use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tecu::operators::{
    admm_d_step, box_project, default_rho, hard_threshold, illumination_propagate, sphere_project, AdmmContext,
};
use tecu::prelude::*;
use tecu::tasks::DlProblem;
use tecu::problem::{AppliedUpdate, Block, Subproblem};
use tecu::update::{apply_rule, error_estimate};

fn mat(rows: usize, cols: usize) -> impl Strategy<Value = Mat> {
    prop::collection::vec(-3.0..3.0f64, rows * cols).prop_map(move |v| Mat::from_vec(rows, cols, v))
}

fn small_dl(seed: u64) -> DlProblem {
    let spec = SynthSpec {
        n: 4,
        m: 6,
        p: 20,
        sparsity: 2,
        noise_sigma: 0.01,
        seed,
    };
    build_dl_problem(DlInstance::new(synth_dl_data(&spec).unwrap().y, 0.1, 6)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn hard_threshold_keeps_or_zeroes(v in mat(3, 4), lambda in 0.0..2.0f64, tau in 0.1..10.0f64) {
        let w = hard_threshold(&v, lambda, tau);
        let thresh = (2.0 * lambda / tau).sqrt();
        for (wi, vi) in w.iter().zip(v.iter()) {
            if vi.abs() > thresh {
                prop_assert_eq!(*wi, *vi);
            } else {
                prop_assert_eq!(*wi, 0.0);
            }
        }
    }

    #[test]
    fn sphere_projection_has_unit_columns(d in mat(5, 4)) {
        let p = sphere_project(&d);
        for col in p.column_iter() {
            prop_assert!((col.norm() - 1.0).abs() < 1e-12);
        }
        prop_assert!((sphere_project(&p) - &p).norm() < 1e-12);
    }

    #[test]
    fn box_projection_is_feasible_and_idempotent(v in mat(3, 3), lo in mat(3, 3), width in mat(3, 3)) {
        let hi = &lo + width.abs();
        let p = box_project(&v, &lo, &hi).unwrap();
        for i in 0..9 {
            prop_assert!(p[i] >= lo[i] && p[i] <= hi[i]);
        }
        prop_assert_eq!(box_project(&p, &lo, &hi).unwrap(), p);
    }

    #[test]
    fn illumination_output_stays_below_observed(
        o in prop::collection::vec(0.0..1.0f64, 36),
        i in prop::collection::vec(0.0..1.0f64, 36),
        radius in 0i64..4,
    ) {
        let o = Mat::from_vec(6, 6, o);
        let i = Mat::from_vec(6, 6, i);
        let out = illumination_propagate(&i, &o, radius).unwrap();
        for k in 0..36 {
            prop_assert!(out[k] >= 0.0 && out[k] <= o[k]);
        }
    }

    #[test]
    fn admm_iterates_stay_on_sphere(seed in 0u64..1000, eta in 0.1..5.0f64, passes in 1usize..15) {
        let p = small_dl(seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (w, d) = p.random_point(&mut rng);
        let rho = default_rho(&w);
        prop_assert!(rho > 0.0);
        let mut ctx = AdmmContext::new(&d, &w, p.data(), &d, eta, rho).unwrap();
        for _ in 0..passes {
            let z = admm_d_step(&mut ctx).unwrap();
            prop_assert_eq!(z.shape(), d.shape());
            prop_assert_eq!(ctx.u.shape(), d.shape());
            for col in z.column_iter() {
                prop_assert!((col.norm() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn eps_equals_stored_differences(steps in prop::collection::vec((-5.0..5.0f64, -5.0..5.0f64), 2..12)) {
        let mut st = IterateState::new(Mat::zeros(2, 1), Mat::zeros(1, 2));
        for (a, b) in steps {
            st.advance(Mat::from_element(2, 1, a), Mat::from_element(1, 2, b));
            if st.iteration >= 2 {
                prop_assert_eq!(st.eps_x, (&st.x_prev - &st.x_prev2).norm());
                prop_assert_eq!(st.eps_y, (&st.y_prev - &st.y_prev2).norm());
            } else {
                prop_assert!(st.eps_x.is_infinite());
            }
        }
    }

    #[test]
    fn embedded_rule_requires_two_c_below_eta(c in 0.001..3.0f64, eta in 0.001..3.0f64) {
        let op = ProxGradientOperator::new(1.1);
        let rule = EmbeddedRule::new(Box::new(op), c, eta);
        prop_assert_eq!(rule.validate().is_ok(), 2.0 * c < eta);
    }

    #[test]
    fn prox_linear_weight_exceeds_lipschitz(seed in 0u64..1000, safety in 1.0001..3.0f64) {
        let p = small_dl(seed);
        let (w, d) = p.random_point(&mut ChaCha8Rng::seed_from_u64(seed));
        let st = IterateState::new(w, d);
        let mut rule = UpdateRule::ProxLinear { safety };
        let out = apply_rule(&p, &st.x_subproblem(), &mut rule).unwrap();
        match out.applied {
            AppliedUpdate::ProxLinear { gamma, lipschitz } => {
                prop_assert!(gamma > lipschitz);
                prop_assert_eq!(gamma, safety * lipschitz);
            }
            other => prop_assert!(false, "unexpected {:?}", other),
        }
    }

    #[test]
    fn error_estimate_is_a_subgradient_residual(seed in 0u64..1000, eta in 0.2..3.0f64, noise in 0.0..0.5f64) {
        // e ∈ ∂g(ũ) + ∇H(ũ) + η(ũ − anchor) on the dictionary block.
        let p = small_dl(seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (w, d) = p.random_point(&mut rng);
        let cand = sphere_project(&(&d + Mat::from_fn(d.nrows(), d.ncols(), |i, j| noise * ((i * 7 + j) as f64).sin())));
        let sub = Subproblem { block: Block::Y, anchor: &d, frozen: &w, eps: f64::INFINITY };
        let est = error_estimate(&p, &sub, &cand, eta);
        let u = &est.tilde_u;
        let smooth = p.h_grad_y(&w, u) + (u - &d) * eta;
        let dist = p.g_subdiff_dist(u, &(&est.e - smooth)).unwrap();
        prop_assert!(dist < 1e-9 * (1.0 + est.e_norm), "dist {}", dist);
        prop_assert!((est.e.norm() - est.e_norm).abs() == 0.0);
    }

    #[test]
    fn labels_follow_embedding(x in 1u8..=3, y in 4u8..=6) {
        let c = Combination::parse(&format!("{x}-{y}")).unwrap();
        prop_assert_eq!(c.has_embedded(), x == 3 || y == 6);
        let code = format!("{x}-{y}");
        let expected = match (x, y) {
            (2, 5) => "PALM",
            (1, 4) => "PAM",
            _ => code.as_str(),
        };
        prop_assert_eq!(c.label(), expected);
    }

    #[test]
    fn indicator_violation_gives_infinite_objective(bump in 0.01..1.0f64, k in 0usize..16) {
        let o = synth_retinex(4, 1).observed;
        let lie = build_lie_problem(LieInstance::new(o.clone(), 0.01)).unwrap();
        let (i, r) = lie.initial_point();
        prop_assert!(evaluate_objective(&lie, &i, &r).unwrap().is_finite());
        let mut above = i.clone();
        above[k] = o[k] + bump;
        prop_assert_eq!(evaluate_objective(&lie, &above, &r).unwrap(), f64::INFINITY);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn accepted_embedded_updates_respect_the_criterion(seed in 0u64..100) {
        let p = small_dl(seed);
        let (w0, d0) = p.initial_point(&mut ChaCha8Rng::seed_from_u64(seed));
        let admm = AdmmDictionaryOperator::new(p.data_arc());
        let mut cfg = SolverConfig::new(
            UpdateRule::prox_linear(),
            UpdateRule::Embedded(EmbeddedRule::new(Box::new(admm), 0.4, 1.0)),
        );
        cfg.run.max_outer = 60;
        let res = solve(&p, &cfg, w0, d0).unwrap();
        for r in res.trace.iter().filter(|r| r.iteration >= 2) {
            if let AppliedUpdate::Embedded { c, .. } = r.applied_y {
                prop_assert!(r.err_norm_y <= c * r.eps_y);
            }
        }
        prop_assert!(res.descent_violations.is_empty());
    }
}
