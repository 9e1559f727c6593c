//! The 1D Dirichlet solver and the maximum-principle verifiers on worked examples.

use fracverify::estimates::Verdict;
use fracverify::fundamentals::{make_fundamental, SignVariant};
use fracverify::maxprinciple::{
    kslap_battery, kslap_domain, solve_dirichlet, verify_comparison, verify_hopf_ratio, verify_kslap, verify_measure_lemma, verify_qsmp,
    ExteriorData, GridProblem, QsmpVariant, Rhs,
};
use fracverify::{FracError, FracParams};
use statrs::function::gamma::gamma;

/// Exact solution of (-Δ)^s u = 1 on (−1, 1), u = 0 outside: c (1 − x²)^s.
fn torsion(s: f64, x: f64) -> f64 {
    let c = gamma(0.5) / (4f64.powf(s) * gamma(1.0 + s) * gamma(0.5 + s));
    if x.abs() < 1.0 {
        c * (1.0 - x * x).powf(s)
    } else {
        0.0
    }
}

fn torsion_error(s: f64, h: f64) -> f64 {
    let p = GridProblem::new(vec![(-1.0, 1.0)], h, Rhs::Constant { value: 1.0 }, ExteriorData::Zero, s).unwrap();
    let sol = solve_dirichlet(&p).unwrap();
    sol.x.iter().zip(&sol.values).map(|(x, v)| (v - torsion(s, *x)).abs()).fold(0.0, f64::max)
}

#[test]
fn torsion_function_matches_closed_form() {
    let err = torsion_error(0.5, 1.0 / 512.0);
    assert!(err <= 5e-3, "max error {err}");
}

#[test]
fn torsion_error_decreases_under_refinement() {
    for s in [0.25, 0.5, 0.75] {
        let coarse = torsion_error(s, 1.0 / 64.0);
        let fine = torsion_error(s, 1.0 / 128.0);
        let order = (coarse / fine).log2();
        assert!(order > 0.15, "s={s}: errors {coarse} → {fine}, order {order}");
    }
}

#[test]
fn linear_solve_residual_is_small() {
    let p = GridProblem::new(vec![(-1.0, 1.0)], 1.0 / 1024.0, Rhs::Constant { value: 1.0 }, ExteriorData::Zero, 0.75).unwrap();
    let sol = solve_dirichlet(&p).unwrap();
    let scale = sol.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    assert!(sol.residual <= 1e-10 * scale.max(1.0), "residual {}", sol.residual);
}

#[test]
fn fundamental_solution_data_reproduce_the_fundamental_solution() {
    let params = FracParams::new(1, 0.75).unwrap();
    let phi = make_fundamental(&params, SignVariant::PhiTilde);
    let p =
        GridProblem::new(vec![(1.0, 4.0)], 1.0 / 64.0, Rhs::Constant { value: 0.0 }, ExteriorData::Profile { profile: phi.clone() }, 0.75)
            .unwrap();
    let sol = solve_dirichlet(&p).unwrap();
    let worst = sol.x.iter().zip(&sol.values).map(|(x, v)| (v - phi.value(x.abs())).abs() / phi.value(x.abs())).fold(0.0, f64::max);
    assert!(worst <= 2e-2, "worst relative deviation {worst}");
}

#[test]
fn ordered_data_give_ordered_solutions() {
    let base = GridProblem::new(vec![(-3.0, -0.5), (0.5, 3.0)], 1.0 / 16.0, Rhs::Constant { value: 0.5 }, ExteriorData::Zero, 0.4).unwrap();
    let bigger = base.with_rhs(Rhs::Constant { value: 0.7 });
    let rep = verify_comparison(&base, &bigger).unwrap();
    assert_eq!(rep.violations, 0);
    assert_eq!(rep.verdict, Verdict::Pass);
    assert!(rep.max_excess < 0.0);
}

#[test]
fn comparison_needs_matching_grids() {
    let a = GridProblem::new(vec![(-1.0, 1.0)], 1.0 / 16.0, Rhs::Constant { value: 0.0 }, ExteriorData::Zero, 0.5).unwrap();
    let b = GridProblem::new(vec![(-1.0, 1.0)], 1.0 / 32.0, Rhs::Constant { value: 1.0 }, ExteriorData::Zero, 0.5).unwrap();
    assert!(matches!(verify_comparison(&a, &b), Err(FracError::Config(_))));
}

#[test]
fn boundary_ratio_on_two_intervals() {
    let p =
        GridProblem::new(vec![(-3.0, -1.0), (1.0, 3.0)], 1.0 / 32.0, Rhs::indicator(vec![(1.5, 2.5)]), ExteriorData::Zero, 0.3).unwrap();
    let rep = verify_hopf_ratio(&p).unwrap();
    assert!(rep.min_ratio > 0.0);
    assert_eq!(rep.verdict, Verdict::Pass, "{rep:?}");
}

#[test]
fn boundary_ratio_rejects_negative_rhs() {
    let p = GridProblem::new(vec![(-1.0, 1.0)], 1.0 / 16.0, Rhs::Constant { value: -1.0 }, ExteriorData::Zero, 0.5).unwrap();
    assert!(matches!(verify_hopf_ratio(&p), Err(FracError::Precondition(_))));
}

#[test]
fn kslap_constant_for_several_orders() {
    for s in [0.25, 0.75] {
        let rep = verify_kslap(&Rhs::Constant { value: 1.0 }, &kslap_battery(), 1.0 / 32.0, s).unwrap();
        assert!(rep.c_bar > 0.0, "s={s}");
        assert_eq!(rep.verdict, Verdict::Pass, "s={s}: {rep:?}");
    }
}

#[test]
fn qsmp_on_a_symmetric_domain() {
    let rep = verify_qsmp(&[(-2.0, 2.0)], &[(-1.0, 1.0)], &[(-0.5, 0.5)], &QsmpVariant::One, 1.0 / 32.0, 0.5).unwrap();
    assert!(rep.c0 > 0.0);
    assert_eq!(rep.verdict, Verdict::Pass);
}

#[test]
fn qsmp_rejects_sets_outside_the_domain() {
    let r = verify_qsmp(&[(-2.0, 2.0)], &[(-1.0, 2.5)], &[(-0.5, 0.5)], &QsmpVariant::One, 1.0 / 32.0, 0.5);
    assert!(matches!(r, Err(FracError::Config(_))));
}

#[test]
fn qsmp_second_variant_needs_positive_exterior_data() {
    let params = FracParams::new(1, 0.75).unwrap();
    let phi = make_fundamental(&params, SignVariant::Phi);
    let r = verify_qsmp(&[(1.0, 4.0)], &[(2.0, 3.0)], &[(1.5, 1.8)], &QsmpVariant::Two { phi_star: phi }, 1.0 / 32.0, 0.75);
    assert!(r.is_err());
}

#[test]
fn measure_constant_is_stable_under_refinement() {
    let index = |h: f64| {
        let p = GridProblem::new(kslap_domain(), h, Rhs::indicator(vec![(1.4, 1.6)]), ExteriorData::Zero, 0.5).unwrap();
        let sol = solve_dirichlet(&p).unwrap();
        verify_measure_lemma(&p, &sol.window_values, &[], 0.5).unwrap().lattice_index
    };
    let (a, b) = (index(1.0 / 32.0), index(1.0 / 128.0));
    assert!(a.abs_diff(b) <= 1, "{a} vs {b}");
}

#[test]
fn measure_lemma_rejects_negative_functions() {
    let p = GridProblem::new(kslap_domain(), 1.0 / 16.0, Rhs::Constant { value: 1.0 }, ExteriorData::Zero, 0.5).unwrap();
    let sol = solve_dirichlet(&p).unwrap();
    let neg: Vec<f64> = sol.window_values.iter().map(|v| -v - 1.0).collect();
    assert!(matches!(verify_measure_lemma(&p, &neg, &[], 0.5), Err(FracError::Precondition(_))));
}
