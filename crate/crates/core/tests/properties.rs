//! Invariants checked on randomized inputs.

use fracverify::frackernel::scaling_identity_check;
use fracverify::fundamentals::{branch_of, make_barrier, make_fundamental, BarrierConstants, BarrierId, Branch, SignVariant};
use fracverify::hypotheses::{check_f2, psi_k, GFunction, NonlinearitySpec, PsiVariant};
use fracverify::liouville::{annulus_inf, AnnulusSampler};
use fracverify::maxprinciple::{
    kslap_battery, random_ordered_pair, verify_comparison, verify_hopf_ratio, verify_kslap, ExteriorData, GridProblem, Rhs,
};
use fracverify::{eval_radial, FracError, FracParams, QuadSpec, RadialProfile, Term};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn bracket(p: f64, w: f64) -> RadialProfile {
    RadialProfile::single("bracket", vec![Term::Bracket { a: 1.0, p: -p, w }])
}

fn params() -> impl Strategy<Value = FracParams> {
    (1usize..=3, 0.2f64..0.8).prop_map(|(n, s)| FracParams::new(n, s).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn operator_is_linear(
        params in params(),
        a in -3.0f64..3.0,
        b in -3.0f64..3.0,
        p1 in 0.1f64..2.0,
        p2 in 0.1f64..2.0,
        w1 in 0.5f64..4.0,
        w2 in 0.5f64..4.0,
        r in 0.1f64..20.0,
    ) {
        let quad = QuadSpec::default();
        let (u, v) = (bracket(p1, w1), bracket(p2, w2));
        let lu = eval_radial(&u, r, &params, &quad).unwrap().value;
        let lv = eval_radial(&v, r, &params, &quad).unwrap().value;
        let lw = eval_radial(&u.scale(a).add(&v.scale(b)), r, &params, &quad).unwrap().value;
        let scale = (a * lu).abs() + (b * lv).abs() + 1e-12;
        prop_assert!((lw - a * lu - b * lv).abs() <= 1e-6 * scale, "{lw} vs {}", a * lu + b * lv);
    }

    #[test]
    fn dilation_commutes_with_the_operator(params in params(), p in 0.1f64..2.0, lambda in 0.2f64..5.0, r in 0.0f64..10.0) {
        let quad = QuadSpec::default();
        let u = bracket(p, 1.0);
        let x: Vec<f64> = std::iter::once(r).chain(std::iter::repeat(0.0)).take(params.n).collect();
        let dev = scaling_identity_check(&u, lambda, &x, &params, &quad).unwrap();
        prop_assert!(dev <= 1e-6, "deviation {dev}");
    }

    #[test]
    fn h_hat_is_the_sum_of_its_parts(r0 in 1.1f64..5.0, ratio in 1.5f64..20.0, c in 0.1f64..10.0, t in 0.01f64..3.0) {
        let params = FracParams::new(1, 0.75).unwrap();
        let mut k = BarrierConstants::with_radii(r0, r0 * ratio);
        k.c_tilde_g = c;
        let x = t * k.r;
        let h = make_barrier(BarrierId::HHat, &k, &params).unwrap().value(x);
        let v = make_barrier(BarrierId::VTilde, &k, &params).unwrap().value(x);
        let g = make_barrier(BarrierId::GTilde, &k, &params).unwrap().value(x);
        prop_assert!((h - v - g).abs() <= 1e-12 * (v.abs() + g.abs() + 1.0));
    }

    #[test]
    fn normalized_psi_g_never_exceeds_one(r0 in 1.1f64..5.0, ratio in 1.5f64..20.0, cg in 0.01f64..100.0, t in 0.0f64..3.0) {
        let params = FracParams::new(3, 0.5).unwrap();
        let mut k = BarrierConstants::with_radii(r0, r0 * ratio);
        k.c_g = cg;
        let v = make_barrier(BarrierId::PsiG, &k, &params).unwrap().value(t * k.r);
        prop_assert!(v <= 1.0 + 1e-12, "{v}");
    }

    #[test]
    fn barriers_build_on_their_branch(params in params(), r0 in 1.1f64..5.0, ratio in 1.5f64..20.0, t in 0.01f64..5.0) {
        let k = BarrierConstants::with_radii(r0, r0 * ratio);
        let mut built = 0;
        for id in BarrierId::ALL {
            match make_barrier(id, &k, &params) {
                Ok(b) => {
                    built += 1;
                    prop_assert!(b.value(t * k.r).is_finite(), "{} at {}", id.name(), t * k.r);
                    for j in b.jumps() {
                        prop_assert!(b.breakpoints().contains(&j.radius));
                    }
                }
                Err(e) => prop_assert!(matches!(e, FracError::Config(_))),
            }
        }
        let expect = match branch_of(&params) {
            Branch::PowerPos => 3,
            Branch::Log => 4,
            Branch::PowerNeg => 9,
        };
        prop_assert_eq!(built, expect);
    }

    #[test]
    fn separable_nonlinearities_factor(gamma in -1.0f64..0.9, a in 0.1f64..10.0, p in 0.5f64..4.0, t in 1e-3f64..10.0, r in 1.0f64..1e3) {
        let params = FracParams::new(3, 0.5).unwrap();
        let g = GFunction::Power { a, p };
        let spec = NonlinearitySpec::separable(gamma, g.clone(), 2.0);
        let expect = r.powf(-gamma) * g.eval(t, &params);
        prop_assert!((spec.eval(t, r, &params) - expect).abs() <= 1e-12 * expect);
    }

    #[test]
    fn wider_ranges_give_smaller_infima(p in 1.1f64..3.0, k in 0.5f64..50.0, r in 10.0f64..1e4, widen in 1.0f64..10.0) {
        let params = FracParams::new(3, 0.5).unwrap();
        let narrow = NonlinearitySpec::power(p, 2.0);
        let mut wide = narrow.clone();
        wide.mu_upper *= widen;
        let a = psi_k(r, k, &narrow, &params, PsiVariant::F4).unwrap();
        let b = psi_k(r, k, &wide, &params, PsiVariant::F4).unwrap();
        prop_assert!(b.value <= a.value * (1.0 + 1e-12), "{} vs {}", b.value, a.value);
    }

    #[test]
    fn random_ordered_data_give_ordered_solutions(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (p1, p2) = random_ordered_pair(&mut rng).unwrap();
        let rep = verify_comparison(&p1, &p2).unwrap();
        prop_assert_eq!(rep.violations, 0, "excess {}", rep.max_excess);
    }

    #[test]
    fn annulus_minimum_scales_with_the_fundamental_exponent(n in 2usize..=3, s in 0.2f64..0.9, r in 1.0f64..1e3) {
        let params = FracParams::new(n, s).unwrap();
        prop_assume!(params.sigma_star < 0.0);
        let phi = make_fundamental(&params, SignVariant::Phi);
        let sampler = AnnulusSampler::default();
        let ratio = annulus_inf(&phi, 2.0 * r, n, &sampler).unwrap() / annulus_inf(&phi, r, n, &sampler).unwrap();
        prop_assert!((ratio - 2f64.powf(params.sigma_star)).abs() <= 1e-10, "{ratio}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn boundary_ratio_ignores_rhs_scale(c in 1e-3f64..1e3, s in 0.2f64..0.9) {
        let p = GridProblem::new(vec![(-1.0, 1.0)], 1.0 / 32.0, Rhs::indicator(vec![(-0.1, 0.1)]), ExteriorData::Zero, s).unwrap();
        let base = verify_hopf_ratio(&p).unwrap();
        let scaled = verify_hopf_ratio(&p.with_rhs(p.rhs.scaled(c))).unwrap();
        prop_assert!((scaled.c_omega - base.c_omega).abs() <= 1e-8 * base.c_omega);
        prop_assert!((scaled.min_ratio - c * base.min_ratio).abs() <= 1e-8 * c * base.min_ratio);
    }

    #[test]
    fn kslap_constant_ignores_rhs_scale(c in 1e-3f64..1e3) {
        let battery = kslap_battery();
        let base = verify_kslap(&Rhs::Constant { value: 1.0 }, &battery, 1.0 / 16.0, 0.5).unwrap();
        let scaled = verify_kslap(&Rhs::Constant { value: c }, &battery, 1.0 / 16.0, 0.5).unwrap();
        prop_assert!((scaled.c_bar - base.c_bar).abs() <= 1e-8 * base.c_bar);
    }
}

#[test]
fn f2_plateau_recovers_the_leading_coefficient() {
    let params = FracParams::new(3, 0.5).unwrap();
    let e = 3.0 / (3.0 - 1.0);
    for c in [0.5, 2.5, 10.0] {
        let spec = NonlinearitySpec::separable(0.0, GFunction::Power { a: c, p: e }, 2.0);
        let rep = check_f2(&spec, &params).unwrap();
        let plateau = rep.plateau.expect("plateau");
        assert!((plateau - c).abs() <= 1e-9 * c, "{plateau} vs {c}");
    }
}
