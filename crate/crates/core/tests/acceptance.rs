//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on failure.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use fracverify::estimates::{rate_scan, verify_chain, ChainId, SamplePolicy, Verdict};
use fracverify::frackernel::{scaling_identity_check, Callable, TailBehavior};
use fracverify::fundamentals::{choose_constants, make_fundamental, SignVariant};
use fracverify::hypotheses::{
    alpha_tilde_star, check_f2, check_f3prime, check_f4prime, exponent_presets, fit_k_exponent, GFunction, HypothesisVerdict,
    NonlinearitySpec, PsiVariant,
};
use fracverify::liouville::{
    default_r_grid, nonexistence_scan, proof_quantity_trace, supercritical_control, CandidateFamily, ScanConfig, TraceConstants,
};
use fracverify::maxprinciple::{
    comparison_battery, kslap_battery, kslap_domain, solve_dirichlet, verify_hopf_ratio, verify_kslap, verify_measure_lemma, verify_qsmp,
    ExteriorData, GridProblem, QsmpVariant, Rhs,
};
use fracverify::{eval_pointwise, eval_radial, FracParams, QuadSpec, Result};

type Outcome = Result<(bool, String)>;

fn log_points(a: f64, b: f64, count: usize) -> Vec<f64> {
    (0..count).map(|i| a * (b / a).powf(i as f64 / (count - 1) as f64)).collect()
}

fn within(elapsed: Duration, limit: u64) -> (bool, String) {
    (elapsed.as_secs() < limit, format!("{:.1}s of {limit}s", elapsed.as_secs_f64()))
}

fn annihilation() -> Outcome {
    let start = Instant::now();
    let quad = QuadSpec::default();
    let mut worst: f64 = 0.0;
    for (n, s) in [(1, 0.5), (1, 0.75), (2, 0.4), (3, 0.5)] {
        let params = FracParams::new(n, s)?;
        let phi = make_fundamental(&params, SignVariant::Phi);
        for r in log_points(1.0, 100.0, 10) {
            let v = eval_radial(&phi, r, &params, &quad)?;
            worst = worst.max(v.value.abs() / phi.value(r).abs().max(1.0));
        }
    }
    let (fast, t) = within(start.elapsed(), 60);
    Ok((worst <= 1e-4 && fast, format!("worst scaled |(-Δ)^sΦ| = {worst:.2e}, {t}")))
}

fn cosine_symbols() -> Outcome {
    let quad = QuadSpec::default();
    let mut worst: f64 = 0.0;
    for s in [0.3, 0.5, 0.7] {
        let params = FracParams::new(1, s)?;
        let c1 = Callable::new(|x: &[f64]| x[0].cos(), TailBehavior::Bounded);
        let v1 = eval_pointwise(&c1, &[0.0], &params, &quad)?.value;
        worst = worst.max((v1 - 1.0).abs() / 1e-3);
        let c2 = Callable::new(|x: &[f64]| (2.0 * x[0]).cos(), TailBehavior::Bounded);
        let v2 = eval_pointwise(&c2, &[0.0], &params, &quad)?.value;
        let sym = 2f64.powf(2.0 * s);
        worst = worst.max((v2 - sym).abs() / (2e-3 * sym));
    }
    Ok((worst <= 1.0, format!("worst error / tolerance = {worst:.3}")))
}

fn scaling() -> Outcome {
    let quad = QuadSpec::default();
    let params = FracParams::new(1, 0.5)?;
    let bump = Callable::new(
        |x: &[f64]| {
            let t = x[0] * x[0];
            if t < 1.0 {
                (-1.0 / (1.0 - t)).exp()
            } else {
                0.0
            }
        },
        TailBehavior::Compact { radius: 1.0 },
    );
    let mut worst: f64 = 0.0;
    for lambda in [0.5, 2.0, 10.0] {
        for x in [0.0, 0.05, 0.3] {
            worst = worst.max(scaling_identity_check(&bump, lambda, &[x], &params, &quad)?);
        }
    }
    Ok((worst <= 1e-3, format!("worst relative deviation = {worst:.2e}")))
}

fn sign_chains() -> Outcome {
    let start = Instant::now();
    let quad = QuadSpec::default();
    let mut ok = true;
    let mut parts = Vec::new();
    for chain in [ChainId::LVC, ChainId::NBBN, ChainId::NITU, ChainId::VASK, ChainId::RI] {
        let params = chain.preset();
        let k = choose_constants(chain, &params, 2.0, None, &quad)?;
        let rep = verify_chain(chain, &params, &k, &SamplePolicy { points: 200, region: None }, &quad)?;
        ok &= rep.verdict == Verdict::Pass && rep.samples.len() >= 200;
        parts.push(format!("{} {}", chain.name(), rep.verdict.as_str()));
    }
    let (fast, t) = within(start.elapsed(), 300);
    Ok((ok && fast, format!("{}, {t}", parts.join(", "))))
}

fn rate_fits() -> Outcome {
    let quad = QuadSpec::default();
    let radii = log_points(10.0, 1e3, 7);
    let d = rate_scan(ChainId::CA3D, &ChainId::CA3D.preset(), 2.0, &radii, 60, &quad)?;
    let qp = ChainId::CA3Q.preset();
    let q = rate_scan(ChainId::CA3Q, &qp, 2.0, &radii, 60, &quad)?;
    let p = rate_scan(ChainId::CAR3PP, &ChainId::CAR3PP.preset(), 2.0, &radii, 60, &quad)?;
    let scaled: Vec<f64> = p.radii.iter().zip(&p.maxima).map(|(r, v)| v * r / (2.0 * r).ln()).collect();
    let hi = scaled.iter().cloned().fold(0.0, f64::max);
    let lo = scaled.iter().cloned().fold(f64::INFINITY, f64::min);
    let ok_d = (d.fit.slope + 1.0).abs() <= 0.15;
    let ok_q = (q.fit.slope + 2.0 * qp.s).abs() <= 0.15;
    let ok_p = lo > 0.0 && hi <= 2.0 * p.fit.constant && lo >= 0.5 * p.fit.constant;
    Ok((
        ok_d && ok_q && ok_p,
        format!(
            "CA3D slope {:.3}, CA3Q slope {:.3} (law {:.3}), CAR3PP value·r/log(2r) in [{lo:.3}, {hi:.3}]",
            d.fit.slope,
            q.fit.slope,
            -2.0 * qp.s
        ),
    ))
}

fn comparison() -> Outcome {
    let rep = comparison_battery(20240611, 100)?;
    Ok((rep.violations == 0 && rep.pairs == 100, format!("{} violations in {} pairs", rep.violations, rep.pairs)))
}

fn hopf() -> Outcome {
    let p = GridProblem::new(vec![(-1.0, 1.0)], 1.0 / 128.0, Rhs::indicator(vec![(-0.1, 0.1)]), ExteriorData::Zero, 0.5)?;
    let rep = verify_hopf_ratio(&p)?;
    let ok = rep.min_ratio > 0.0 && rep.relative_change <= 0.2 && rep.verdict == Verdict::Pass;
    Ok((ok, format!("min v/δ^s = {:.4}, C_Ω {:.4} → {:.4}", rep.min_ratio, rep.c_omega, rep.c_omega_refined)))
}

fn factor_two(a: f64, b: f64) -> bool {
    a > 0.0 && b > 0.0 && a <= 2.0 * b && b <= 2.0 * a
}

fn kslap_qsmp() -> Outcome {
    let k = verify_kslap(&Rhs::Constant { value: 1.0 }, &kslap_battery(), 1.0 / 32.0, 0.5)?;
    let params = FracParams::new(1, 0.75)?;
    let omega = [(1.0, 4.0)];
    let kk = [(2.0, 3.0)];
    let a = [(1.5, 1.8)];
    let q1 = verify_qsmp(&omega, &kk, &a, &QsmpVariant::One, 1.0 / 32.0, 0.75)?;
    let phi_star = make_fundamental(&params, SignVariant::PhiTilde);
    let q2 = verify_qsmp(&omega, &kk, &a, &QsmpVariant::Two { phi_star }, 1.0 / 32.0, 0.75)?;
    let ok = factor_two(k.c_bar, k.c_bar_refined) && factor_two(q1.c0, q1.c0_refined) && factor_two(q2.c0, q2.c0_refined);
    Ok((
        ok,
        format!(
            "c̄ {:.4} → {:.4}, c₀(I) {:.4} → {:.4}, c₀(II) {:.4} → {:.4}",
            k.c_bar, k.c_bar_refined, q1.c0, q1.c0_refined, q2.c0, q2.c0_refined
        ),
    ))
}

fn measure_lemma() -> Outcome {
    let mut indices = Vec::new();
    for h in [1.0 / 32.0, 1.0 / 64.0] {
        let p = GridProblem::new(kslap_domain(), h, Rhs::indicator(vec![(1.4, 1.6)]), ExteriorData::Zero, 0.5)?;
        let sol = solve_dirichlet(&p)?;
        let rep = verify_measure_lemma(&p, &sol.window_values, &[], 0.5)?;
        if !rep.c_bar.is_finite() {
            return Ok((false, format!("C̄ not finite at h = {h}")));
        }
        indices.push(rep.lattice_index);
    }
    let stable = indices[0].abs_diff(indices[1]) <= 1;
    Ok((stable, format!("ν = 1/2, lattice indices {indices:?} (C̄ = 1.25^k)")))
}

fn hypotheses() -> Outcome {
    let p3 = FracParams::new(3, 0.5)?;
    let sub = check_f2(&NonlinearitySpec::power(1.4, 2.0), &p3)?;
    let sq = check_f2(&NonlinearitySpec::power(2.0, 2.0), &p3)?;
    let cf = check_f2(&NonlinearitySpec::separable(0.0, GFunction::Cf1b, 2.0), &p3)?;
    let plateau_ok = matches!(cf.plateau, Some(v) if (v - 2.5).abs() <= 0.05);
    let mut worst: f64 = 0.0;
    for preset in exponent_presets()? {
        let params = FracParams::new(preset.n, preset.s)?;
        let rep = match preset.variant {
            PsiVariant::F3 => check_f3prime(&preset.spec, &params)?,
            PsiVariant::F4 => check_f4prime(&preset.spec, &params)?,
        };
        let expect = -1.0 + alpha_tilde_star(&params, preset.gamma)?;
        let dev = fit_k_exponent(&rep).map(|e| (e - expect).abs()).unwrap_or(f64::INFINITY);
        worst = worst.max(dev);
    }
    let ok = sub.verdict == HypothesisVerdict::Holds
        && sq.verdict == HypothesisVerdict::Fails
        && cf.verdict == HypothesisVerdict::Holds
        && plateau_ok
        && worst <= 0.2;
    Ok((
        ok,
        format!(
            "t^1.4 {}, t² {}, cf1b {} plateau {:?}, worst k-exponent deviation {worst:.3}",
            sub.verdict.as_str(),
            sq.verdict.as_str(),
            cf.verdict.as_str(),
            cf.plateau
        ),
    ))
}

fn scan() -> Outcome {
    let start = Instant::now();
    let quad = QuadSpec::default();
    let params = FracParams::new(3, 0.5)?;
    let family = CandidateFamily::default_bracket();
    let sub = nonexistence_scan(&family, &NonlinearitySpec::power(1.4, 2.0), &params, &ScanConfig::default(), &quad)?;
    let control = supercritical_control(&params, 3.0, &quad)?;
    let with_control = family.with_member("control", control.profile.clone());
    let sup = nonexistence_scan(&with_control, &NonlinearitySpec::power(3.0, 2.0), &params, &ScanConfig::default(), &quad)?;
    let control_certified = sup.members.iter().any(|m| m.label == "control" && m.verdict.label() == "SUPERSOLUTION_ON_SAMPLES");
    let (fast, t) = within(start.elapsed(), 600);
    let ok = sub.members.len() >= 400 && sub.certified == 0 && sup.certified >= 1 && control_certified && fast;
    Ok((
        ok,
        format!(
            "subcritical {} of {} certified, supercritical {} certified (control {}), {t}",
            sub.certified,
            sub.members.len(),
            sup.certified,
            if control_certified { "certified" } else { "not certified" }
        ),
    ))
}

fn trace() -> Outcome {
    let quad = QuadSpec::default();
    let params = FracParams::new(3, 0.5)?;
    let k = TraceConstants::from_solver(0.5, 1.0 / 32.0)?;
    let phi = make_fundamental(&params, SignVariant::Phi);
    let grid = default_r_grid(2.0);
    let sub = proof_quantity_trace(&phi, &NonlinearitySpec::power(1.4, 2.0), &params, &grid, &k, &quad)?;
    let zero = NonlinearitySpec::general("zero", |_, _| 0.0, 2.0);
    let none = proof_quantity_trace(&phi, &zero, &params, &grid, &k, &quad)?;
    let ok = sub.first_contradiction.is_some() && none.first_contradiction.is_none() && none.rows.iter().all(|r| !r.contradiction);
    Ok((ok, format!("subcritical first contradiction at r = {:?}, f ≡ 0 flags {:?}", sub.first_contradiction, none.first_contradiction)))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 12] = [
        ("fundamental solution annihilated", annihilation),
        ("cosine symbols", cosine_symbols),
        ("scaling identity", scaling),
        ("sign chains with automatic constants", sign_chains),
        ("rate fits", rate_fits),
        ("comparison battery", comparison),
        ("boundary ratio (Hopf)", hopf),
        ("kslap and qsmp constants", kslap_qsmp),
        ("measure lemma", measure_lemma),
        ("hypothesis checks", hypotheses),
        ("nonexistence scan", scan),
        ("proof-quantity trace", trace),
    ];
    let mut failures = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (pass, detail) = match run() {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failures += 1;
        }
        println!("{} {:>2} {name}: {detail} [{:.1}s]", if pass { "PASS" } else { "FAIL" }, i + 1, start.elapsed().as_secs_f64());
    }
    println!("{} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
