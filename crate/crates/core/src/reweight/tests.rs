use super::*;
use crate::convex::SlackLp;
use crate::model::{synth_hyperplane, synth_line};
use crate::rng::seeded;
use proptest::prelude::*;
use rand::Rng as _;

fn line_system(offsets: &[f64]) -> ResidualSystem {
    ResidualSystem::from_rows(1, offsets.iter().map(|&b| (vec![1.0], b)).collect()).unwrap()
}

#[test]
fn surrogate_examples() {
    let v = surrogate_value(&[0.0; 5], 0.01).unwrap();
    assert!((v - 5.0 * 0.01f64.ln()).abs() < 1e-12);
    assert!((surrogate_value(&[1.0], 0.01).unwrap() - 1.01f64.ln()).abs() < 1e-15);
    let a = surrogate_value(&[0.3, 2.0, 0.0, 1.5], 0.1).unwrap();
    let b = surrogate_value(&[1.5, 0.0, 0.3, 2.0], 0.1).unwrap();
    assert!((a - b).abs() < 1e-12);
    assert!(surrogate_value(&[-0.1], 0.01).is_err());
    assert!(surrogate_value(&[0.1], 0.0).is_err());
}

#[test]
fn lp_weight_examples() {
    assert_eq!(update_weights_lp(&[0.0], 0.01).unwrap(), vec![100.0]);
    assert!((update_weights_lp(&[0.99], 0.01).unwrap()[0] - 1.0).abs() < 1e-15);
    let w = update_weights_lp(&[0.0, 0.1, 1.0, 10.0], 0.01).unwrap();
    assert!(w.windows(2).all(|p| p[0] > p[1]));
    assert!(update_weights_lp(&[-1.0], 0.01).is_err());
}

#[test]
fn qp_weight_examples() {
    assert_eq!(update_weights_qp(&[0.0], 0.01).unwrap(), vec![100.0]);
    assert!((update_weights_qp(&[3.0], 1.0).unwrap()[0] - 0.1).abs() < 1e-15);
    let w = update_weights_qp(&[0.5, 2.0], 0.3).unwrap();
    assert_eq!(w[0], 1.0 / (0.25 + 0.3));
    assert!(update_weights_qp(&[-0.5], 0.3).is_err());
}

#[test]
fn config_validation() {
    assert!(IRConfig::new(0.1).validate().is_ok());
    let mut c = IRConfig::new(0.1);
    c.gamma = 0.0;
    assert!(c.validate().is_err());
    let mut c = IRConfig::new(0.1);
    c.max_iters = 0;
    assert!(c.validate().is_err());
    let mut c = IRConfig::new(0.1);
    c.zeta = -1.0;
    assert!(c.validate().is_err());
    assert!(IRConfig::new(-0.1).validate().is_err());
}

#[test]
fn all_inliers_stop_after_one_iteration() {
    let inst = synth_hyperplane(40, 3, 0.1, 0.0, 10.0, 3).unwrap();
    // Wide threshold: the first solve already fits everything.
    let cfg = IRConfig::new(1.0);
    for fit in [irlp_fit, irqp_fit] {
        let r = fit(&inst.system, &cfg, None).unwrap();
        assert_eq!(r.iterations, 1);
        assert_eq!(r.count, 40);
        assert_eq!(r.terminated_by, Termination::Tolerance);
        assert!(r.trace.records[0].slacks.iter().all(|&s| s == 0.0));
    }
}

#[test]
fn one_dimensional_cluster_is_found() {
    // Five points near 0 and three scattered ones.
    let sys = line_system(&[0.0, 0.05, -0.05, 0.1, -0.1, 3.0, -4.0, 7.0]);
    let r = irlp_fit(&sys, &IRConfig::new(0.1), None).unwrap();
    assert_eq!(r.inliers, vec![0, 1, 2, 3, 4]);
}

/// Checks the properties every run must satisfy: surrogate descent, the
/// weighted objective never increasing, bounded iteration count and
/// consistency of the reported inliers with the final slacks.
fn check_run(sys: &ResidualSystem, cfg: &IRConfig, r: &ConsensusResult) {
    assert!(r.iterations >= 1 && r.iterations <= cfg.max_iters);
    assert_eq!(r.trace.records.len(), r.iterations);
    let g = r.trace.surrogates();
    for w in g.windows(2) {
        assert!(w[1] <= w[0] + 1e-10, "surrogate rose: {:?}", g);
    }
    // From the all-ones start the first comparison is not between two
    // feasible slack vectors.
    let skip = usize::from(r.trace.initial_surrogate.is_none());
    for rec in &r.trace.records[skip..] {
        assert!(rec.weighted_decrease() >= -1e-10);
    }
    assert_eq!(r.count, r.inliers.len());
    let last = r.trace.records.last().unwrap();
    let zero: Vec<usize> = (0..last.slacks.len())
        .filter(|&i| last.slacks[i] <= cfg.tolerances.feasibility_tol)
        .collect();
    assert_eq!(zero, r.inliers);
    assert_eq!(r.inliers, crate::consensus(sys, &r.theta, cfg.epsilon).unwrap().inliers);
}

#[test]
fn first_pass_from_ones_skips_the_stopping_test() {
    let inst = synth_line(30, 0.1, 0.3, 10.0, 8).unwrap();
    let mut cfg = IRConfig::new(inst.epsilon);
    // A huge tolerance would stop at the first test it is allowed to make.
    cfg.zeta = 1e9;
    let r = irlp_fit(&inst.system, &cfg, None).unwrap();
    assert!(r.trace.initial_surrogate.is_none());
    assert_eq!(r.iterations, 2);
    let theta = inst.ground_truth.unwrap().theta;
    let r = irlp_fit(&inst.system, &cfg, Some(&theta)).unwrap();
    assert!(r.trace.initial_surrogate.is_some());
    assert_eq!(r.iterations, 1);
}

#[test]
fn iteration_limit_is_reported() {
    let inst = synth_hyperplane(60, 3, 0.1, 0.5, 10.0, 21).unwrap();
    let mut cfg = IRConfig::new(inst.epsilon);
    cfg.max_iters = 1;
    cfg.zeta = 1e-300;
    let r = irlp_fit(&inst.system, &cfg, None).unwrap();
    assert_eq!(r.iterations, 1);
    assert_eq!(r.terminated_by, Termination::IterationLimit);
}

#[test]
fn initializations() {
    let inst = synth_hyperplane(80, 3, 0.1, 0.4, 10.0, 5).unwrap();
    let truth = inst.ground_truth.clone().unwrap();
    let base = IRConfig::new(inst.epsilon);
    for init in [
        InitMode::Ones,
        InitMode::Linf,
        InitMode::Ransac { seed: 4 },
        InitMode::Custom(truth.theta.clone()),
    ] {
        let cfg = base.clone().with_init(init.clone());
        let r = irlp_fit(&inst.system, &cfg, None).unwrap();
        check_run(&inst.system, &cfg, &r);
        assert!(r.count >= truth.planted_inliers() - 5, "{init:?}: {}", r.count);
        let q = irqp_fit(&inst.system, &cfg, None).unwrap();
        assert!(q.iterations <= cfg.max_iters);
    }
    let bad = base.with_init(InitMode::Custom(vec![0.0; 2]));
    assert!(irlp_fit(&inst.system, &bad, None).is_err());
}

#[test]
fn fits_are_deterministic() {
    let inst = synth_hyperplane(100, 4, 0.1, 0.5, 10.0, 12).unwrap();
    let cfg = IRConfig::new(inst.epsilon);
    let a = irlp_fit(&inst.system, &cfg, None).unwrap();
    let b = irlp_fit(&inst.system, &cfg, None).unwrap();
    assert_eq!(a.theta, b.theta);
    assert_eq!(a.trace, b.trace);
}

#[test]
fn repeated_slacks_give_identical_iterate() {
    let inst = synth_hyperplane(50, 3, 0.1, 0.4, 10.0, 30).unwrap();
    let mut lp = SlackLp::new(&inst.system, inst.epsilon, &SolverTolerances::default()).unwrap();
    let mut s = vec![1.0; 50];
    for _ in 0..25 {
        let sol = lp.solve(&update_weights_lp(&s, 0.01).unwrap()).unwrap();
        if sol.slacks == s {
            let again = lp.solve(&update_weights_lp(&s, 0.01).unwrap()).unwrap();
            assert_eq!(again.slacks, s);
            assert_eq!(again.iterations, 0);
            return;
        }
        s = sol.slacks;
    }
    panic!("no fixed point within 25 iterations");
}

#[test]
fn qp_scheme_descends_its_own_surrogate() {
    let inst = synth_hyperplane(60, 3, 0.1, 0.4, 10.0, 9).unwrap();
    let cfg = IRConfig::new(inst.epsilon).with_init(InitMode::Linf);
    let r = irqp_fit(&inst.system, &cfg, None).unwrap();
    let g = r.trace.surrogates();
    for w in g.windows(2) {
        assert!(w[1] <= w[0] + 1e-9, "{g:?}");
    }
    let s0 = r.trace.records[0].slacks.clone();
    let expect = surrogate_value_squared(&s0, cfg.gamma).unwrap();
    assert!((r.trace.records[0].surrogate - expect).abs() < 1e-12);
}

#[test]
fn kkt_gap_without_outliers_is_zero() {
    let sys = line_system(&[0.0, 0.1, -0.1]);
    assert_eq!(kkt_stationarity_gap(&sys, &[0.0], 0.5, 0.01).unwrap(), 0.0);
    assert_eq!(outlier_gradient_norm(&sys, &[0.0], 0.5, 0.01).unwrap(), 0.0);
}

#[test]
fn kkt_gap_symmetric_outliers_cancel() {
    let sys = line_system(&[-2.0, 2.0, 0.0]);
    assert_eq!(outlier_gradient_norm(&sys, &[0.0], 0.5, 0.01).unwrap(), 0.0);
    assert_eq!(kkt_stationarity_gap(&sys, &[0.0], 0.5, 0.01).unwrap(), 0.0);
    // Off-centre the gradient is the difference of the two terms.
    let g = outlier_gradient_norm(&sys, &[0.2], 0.25, 0.01).unwrap();
    let expect: f64 = 1.0 / (2.2 - 0.25 + 0.01) - 1.0 / (1.8 - 0.25 + 0.01);
    assert!((g - expect.abs()).abs() < 1e-12);
}

#[test]
fn kkt_gap_uses_threshold_points() {
    // Two outliers pull right; a point sitting on the threshold on the
    // other side can push back by up to 1/γ.
    let sys = line_system(&[0.2, 0.1, 5.0, 6.0]);
    let eps = 0.1;
    let theta = [0.2];
    let pull = |gamma: f64| 1.0 / (4.8 - eps + gamma) + 1.0 / (5.8 - eps + gamma);
    let g = outlier_gradient_norm(&sys, &theta, eps, 0.01).unwrap();
    assert!((g - pull(0.01)).abs() < 1e-12);
    assert!(kkt_stationarity_gap(&sys, &theta, eps, 0.01).unwrap() < 1e-12);
    // With a large γ the threshold multiplier is capped below the pull.
    let gap = kkt_stationarity_gap(&sys, &theta, eps, 10.0).unwrap();
    assert!((gap - (pull(10.0) - 0.1)).abs() < 1e-12, "{gap}");
}

#[test]
fn kkt_gap_small_at_convergence() {
    let mut rng = seeded(41);
    for t in 0..20 {
        let d = rng.gen_range(1..4);
        let inst = synth_hyperplane(40, d, 0.1, 0.4, 10.0, 100 + t).unwrap();
        let cfg = IRConfig::new(inst.epsilon);
        let r = irlp_fit(&inst.system, &cfg, None).unwrap();
        let gap = kkt_stationarity_gap(&inst.system, &r.theta, inst.epsilon, cfg.gamma).unwrap();
        assert!(gap <= 1e-6 * inst.system.max_row_norm(), "trial {t}: gap {gap}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn runs_descend_and_terminate(
        seed in any::<u64>(),
        n in 8usize..40,
        d in 1usize..4,
        frac in 0.0f64..0.7,
        gamma in 1e-3f64..0.5,
    ) {
        prop_assume!(n > d);
        let inst = synth_hyperplane(n, d, 0.1, frac, 10.0, seed).unwrap();
        let mut cfg = IRConfig::new(inst.epsilon);
        cfg.gamma = gamma;
        let r = irlp_fit(&inst.system, &cfg, None).unwrap();
        check_run(&inst.system, &cfg, &r);
    }
}
