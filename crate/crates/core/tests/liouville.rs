//! Growth bounds, supersolution scans and the proof-quantity trace on worked examples.

use fracverify::estimates::Verdict;
use fracverify::fundamentals::{make_fundamental, SignVariant};
use fracverify::hypotheses::{HypothesisVerdict, NonlinearitySpec};
use fracverify::liouville::{
    default_r_grid, nonexistence_scan, proof_quantity_trace, supercritical_control, supersolution_residual, verify_growth_bounds,
    AnnulusSampler, CandidateFamily, GrowthCase, MemberVerdict, ResidualPolicy, ScanConfig, TraceConstants,
};
use fracverify::{FracError, FracParams, QuadSpec, RadialProfile, Term};
use statrs::function::gamma::gamma;

#[test]
fn control_multiplier_matches_the_closed_form() {
    let params = FracParams::new(3, 0.5).unwrap();
    let c = supercritical_control(&params, 3.0, &QuadSpec::default()).unwrap();
    let tau: f64 = 0.5;
    let expect = 2.0 * gamma((tau + 1.0) / 2.0) * gamma((3.0 - tau) / 2.0) / (gamma((2.0 - tau) / 2.0) * gamma(tau / 2.0));
    assert!((c.tau - tau).abs() < 1e-14);
    assert!((c.lambda - expect).abs() <= 1e-8, "{} vs {expect}", c.lambda);
    assert!((c.epsilon - (expect / 2.0).sqrt()).abs() <= 1e-8);
}

#[test]
fn control_is_a_supersolution_on_samples() {
    let params = FracParams::new(3, 0.5).unwrap();
    let quad = QuadSpec::default();
    let c = supercritical_control(&params, 3.0, &quad).unwrap();
    let rep =
        supersolution_residual(&c.profile, &NonlinearitySpec::power(3.0, 2.0), &params, (10.0, 1e4), &quad, &ResidualPolicy::default())
            .unwrap();
    assert_eq!(rep.verdict, MemberVerdict::SupersolutionOnSamples);
    assert!(rep.min_margin > 0.0);
}

#[test]
fn subcritical_scan_certifies_nothing() {
    let params = FracParams::new(3, 0.5).unwrap();
    let family = CandidateFamily::bracket((0.1, 10.0), 3, (0.1, 6.0), 4).unwrap();
    let rep =
        nonexistence_scan(&family, &NonlinearitySpec::power(1.4, 2.0), &params, &ScanConfig::default(), &QuadSpec::default()).unwrap();
    assert_eq!(rep.members.len(), 12);
    assert_eq!(rep.certified, 0);
    assert_eq!(rep.hypothesis_verdict, HypothesisVerdict::Holds);
    assert!(!rep.exploratory);
    assert!(rep.consistency_violations.is_empty());
}

#[test]
fn supercritical_scan_certifies_the_control() {
    let params = FracParams::new(3, 0.5).unwrap();
    let quad = QuadSpec::default();
    let c = supercritical_control(&params, 3.0, &quad).unwrap();
    let family = CandidateFamily::bracket((0.1, 10.0), 2, (0.1, 6.0), 2).unwrap().with_member("control", c.profile);
    let rep = nonexistence_scan(&family, &NonlinearitySpec::power(3.0, 2.0), &params, &ScanConfig::default(), &quad).unwrap();
    assert!(rep.exploratory);
    let control = rep.members.iter().find(|m| m.label == "control").unwrap();
    assert_eq!(control.verdict, MemberVerdict::SupersolutionOnSamples);
}

#[test]
fn control_needs_a_supercritical_power() {
    let params = FracParams::new(3, 0.5).unwrap();
    assert!(matches!(supercritical_control(&params, 1.4, &QuadSpec::default()), Err(FracError::Config(_))));
}

#[test]
fn growth_bounds_for_fundamental_profiles() {
    let sampler = AnnulusSampler::default();
    let p1 = FracParams::new(1, 0.75).unwrap();
    let tilde = make_fundamental(&p1, SignVariant::PhiTilde);
    let rep = verify_growth_bounds(&tilde, GrowthCase::SupGtHalf, &p1, &default_r_grid(2.0), &sampler).unwrap();
    assert_eq!(rep.verdict, Verdict::Pass, "{rep:?}");
    let p3 = FracParams::new(3, 0.5).unwrap();
    let one_plus = make_fundamental(&p3, SignVariant::Phi).add(&RadialProfile::single("one", vec![Term::constant(1.0)]));
    let rep = verify_growth_bounds(&one_plus, GrowthCase::Sub, &p3, &default_r_grid(2.0), &sampler).unwrap();
    assert_eq!(rep.verdict, Verdict::Pass, "{rep:?}");
}

#[test]
fn growth_bounds_need_two_decades() {
    let p3 = FracParams::new(3, 0.5).unwrap();
    let phi = make_fundamental(&p3, SignVariant::Phi);
    let r = verify_growth_bounds(&phi, GrowthCase::Sub, &p3, &[10.0, 20.0, 40.0, 80.0], &AnnulusSampler::default());
    assert!(matches!(r, Err(FracError::Config(_))));
}

#[test]
fn trace_flags_subcritical_data_and_never_zero() {
    let params = FracParams::new(3, 0.5).unwrap();
    let quad = QuadSpec::default();
    let k = TraceConstants::from_solver(0.5, 1.0 / 32.0).unwrap();
    assert!(k.c_bar > 0.0 && k.c_measure >= 1.0);
    let phi = make_fundamental(&params, SignVariant::Phi);
    let grid = default_r_grid(2.0);
    let sub = proof_quantity_trace(&phi, &NonlinearitySpec::power(1.4, 2.0), &params, &grid, &k, &quad).unwrap();
    assert!(sub.first_contradiction.is_some());
    assert!(sub.rows.iter().all(|r| r.rho.is_some() && r.eta_tilde.is_none()));
    let zero = NonlinearitySpec::general("zero", |_, _| 0.0, 2.0);
    let none = proof_quantity_trace(&phi, &zero, &params, &grid, &k, &quad).unwrap();
    assert!(none.first_contradiction.is_none());
}

#[test]
fn trace_reports_eta_on_the_positive_branch() {
    let params = FracParams::new(1, 0.75).unwrap();
    let k = TraceConstants { c_bar: 0.5, c_measure: 1.25, c_m: None };
    let tilde = make_fundamental(&params, SignVariant::PhiTilde);
    let rep =
        proof_quantity_trace(&tilde, &NonlinearitySpec::power(-2.0, 2.0), &params, &default_r_grid(2.0), &k, &QuadSpec::default()).unwrap();
    assert!(rep.rows.iter().all(|r| r.eta_tilde.is_some() && r.rho.is_none()));
    assert!(rep.eta_variation.is_some());
}
