//! Barrier estimate chains at their default parameters.

use fracverify::estimates::{fit_rate, rate_scan, sample_operator, verify_chain, ChainId, RateDescriptor, SamplePolicy, Verdict};
use fracverify::fundamentals::{choose_constants, gallery_csv, make_barrier, BarrierConstants, BarrierId};
use fracverify::{FracError, FracParams, QuadSpec};

#[test]
fn every_chain_passes_with_automatic_constants() {
    let quad = QuadSpec::default();
    let mut failed = Vec::new();
    for chain in ChainId::ALL {
        let params = chain.preset();
        let k = choose_constants(chain, &params, 2.0, None, &quad).unwrap();
        let rep = verify_chain(chain, &params, &k, &SamplePolicy { points: 60, region: None }, &quad).unwrap();
        if rep.verdict != Verdict::Pass {
            failed.push((chain.name(), rep.verdict, rep.notes));
        }
    }
    assert!(failed.is_empty(), "{failed:?}");
}

#[test]
fn chain_names_round_trip() {
    for chain in ChainId::ALL {
        assert_eq!(ChainId::parse(chain.name()), Some(chain));
    }
    assert_eq!(ChainId::parse("nope"), None);
}

#[test]
fn uncorrected_interior_barrier_is_not_negative() {
    let params = FracParams::new(1, 0.75).unwrap();
    let quad = QuadSpec::default();
    let mut k = BarrierConstants::with_radii(2.0, 20.0);
    k.c_tilde_g = 1e-6;
    let rep = verify_chain(ChainId::LVC, &params, &k, &SamplePolicy { points: 40, region: None }, &quad).unwrap();
    assert_eq!(rep.verdict, Verdict::Fail);
}

#[test]
fn psi_hat_operator_is_positive_outside_the_unit_ball() {
    let params = FracParams::new(3, 0.5).unwrap();
    let quad = QuadSpec::default();
    let p = make_barrier(BarrierId::PsiHat, &BarrierConstants::unit(2.0), &params).unwrap();
    let samples = sample_operator(&p, (2.0, 200.0), 30, &params, &quad).unwrap();
    assert!(samples.iter().all(|s| s.value - 2.0 * s.err > 0.0));
}

#[test]
fn rate_slopes_follow_their_laws() {
    let quad = QuadSpec::default();
    let radii = [10.0, 30.0, 100.0, 300.0, 1000.0];
    let d = rate_scan(ChainId::CA3D, &ChainId::CA3D.preset(), 2.0, &radii, 40, &quad).unwrap();
    assert!((d.fit.slope - d.fit.law_slope).abs() <= 0.15, "{:?}", d.fit);
    let q = rate_scan(ChainId::CA3Q, &ChainId::CA3Q.preset(), 2.0, &radii, 40, &quad).unwrap();
    assert!((q.fit.slope - q.fit.law_slope).abs() <= 0.15, "{:?}", q.fit);
}

#[test]
fn sign_chains_have_no_radius_law() {
    let r = rate_scan(ChainId::LVC, &ChainId::LVC.preset(), 2.0, &[10.0, 100.0, 1000.0, 1e4], 10, &QuadSpec::default());
    assert!(matches!(r, Err(FracError::Config(_))));
}

#[test]
fn fit_recovers_a_synthetic_power() {
    let params = FracParams::new(3, 0.5).unwrap();
    let values: Vec<(f64, f64)> = [1.0, 3.0, 10.0, 30.0, 100.0].iter().map(|&r: &f64| (r, 7.0 * r.powf(-1.3))).collect();
    let fit = fit_rate(&values, &RateDescriptor::Power { exponent: -1.3 }, &params).unwrap();
    assert!((fit.slope + 1.3).abs() < 1e-12);
    assert!((fit.constant - 7.0).abs() < 1e-10);
}

#[test]
fn gallery_lists_the_branch_barriers() {
    let csv = gallery_csv(&BarrierConstants::unit(2.0), &FracParams::new(1, 0.5).unwrap(), &[1.0, 10.0]).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("barrier,radius,value"));
    assert_eq!(lines.count(), 8);
}
