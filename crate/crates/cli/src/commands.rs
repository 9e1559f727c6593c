//! Subcommand implementations. Each returns the rendered output and a status.

use std::fmt::Write as _;

use anyhow::{anyhow, bail, Context, Result};
use fracverify::estimates::{verify_chain, ChainId, SamplePolicy, Verdict};
use fracverify::fundamentals::{
    branch_of, choose_constants, log_interior, make_barrier, make_fundamental, BarrierConstants, BarrierId, Branch, SignVariant,
};
use fracverify::hypotheses::{
    alpha_tilde_star, check_f2, check_f2prime, check_f3prime, check_f4prime, exponent_presets, fit_k_exponent, HypothesisReport,
    HypothesisVerdict, NonlinearitySpec, PsiVariant,
};
use fracverify::liouville::{
    default_r_grid, nonexistence_scan, proof_quantity_trace, supercritical_control, CandidateFamily, ScanConfig, TraceConstants,
};
use fracverify::maxprinciple::{
    comparison_battery, kslap_battery, kslap_domain, solve_dirichlet, verify_hopf_ratio, verify_kslap, verify_measure_lemma, verify_qsmp,
    ExteriorData, GridProblem, QsmpVariant, Rhs,
};
use fracverify::{eval_radial, FracParams, QuadSpec, RadialProfile, Term};
use serde::Serialize;

use crate::{Cli, Command, Condition, Dims, Global, MpCheck, NonlinearityArgs, OutFormat, Status};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    schema_version: u32,
    command: &'a str,
    status: &'a str,
    result: T,
}

fn status_str(s: Status) -> &'static str {
    match s {
        Status::Pass => "PASS",
        Status::Fail => "FAIL",
        Status::Inconclusive => "INCONCLUSIVE",
    }
}

fn from_verdict(v: Verdict) -> Status {
    match v {
        Verdict::Pass => Status::Pass,
        Verdict::Fail => Status::Fail,
        Verdict::Inconclusive => Status::Inconclusive,
    }
}

fn from_hypothesis(v: HypothesisVerdict) -> Status {
    match v {
        HypothesisVerdict::Holds => Status::Pass,
        HypothesisVerdict::Fails => Status::Fail,
        HypothesisVerdict::Inconclusive => Status::Inconclusive,
    }
}

fn worst(a: Status, b: Status) -> Status {
    match (a, b) {
        (Status::Fail, _) | (_, Status::Fail) => Status::Fail,
        (Status::Inconclusive, _) | (_, Status::Inconclusive) => Status::Inconclusive,
        _ => Status::Pass,
    }
}

/// Render as JSON, or as CSV with the given header and rows.
fn render<T: Serialize>(global: &Global, command: &str, status: Status, result: &T, header: &str, rows: Vec<String>) -> Result<String> {
    match global.out {
        OutFormat::Json => {
            let env = Envelope { schema_version: SCHEMA_VERSION, command, status: status_str(status), result };
            Ok(serde_json::to_string_pretty(&env)? + "\n")
        }
        OutFormat::Csv => {
            let mut out = String::new();
            writeln!(out, "{header}")?;
            for r in rows {
                writeln!(out, "{r}")?;
            }
            Ok(out)
        }
    }
}

fn quad(global: &Global) -> Result<QuadSpec> {
    let q = QuadSpec::with_tol(global.tol);
    q.validate()?;
    Ok(q)
}

fn params(dims: &Dims, default: Option<(usize, f64)>) -> Result<FracParams> {
    let (n, s) = match (dims.n, dims.s, default) {
        (Some(n), Some(s), _) => (n, s),
        (None, None, Some(d)) => d,
        (n, s, Some(d)) => (n.unwrap_or(d.0), s.unwrap_or(d.1)),
        _ => bail!("--n and --s are required"),
    };
    Ok(FracParams::new(n, s)?)
}

fn load_spec(f: &NonlinearityArgs) -> Result<NonlinearitySpec> {
    match (&f.spec, f.p) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
        }
        (None, Some(p)) => Ok(NonlinearitySpec::power(p, f.r0)),
        (None, None) => bail!("give a nonlinearity with --spec or --p"),
    }
}

fn num(s: &str) -> Result<f64> {
    s.parse::<f64>().map_err(|_| anyhow!("not a number: {s}"))
}

fn parse_profile(spec: &str, params: &FracParams, r0: f64, r: f64) -> Result<RadialProfile> {
    let parts: Vec<&str> = spec.split(':').collect();
    let p = match parts.as_slice() {
        ["phi"] => make_fundamental(params, SignVariant::Phi),
        ["phi_tilde"] => make_fundamental(params, SignVariant::PhiTilde),
        ["power", b] => RadialProfile::single("power", vec![Term::Power { a: 1.0, b: num(b)? }]),
        ["cap", p] => RadialProfile::new("cap", vec![1.0], vec![vec![Term::Cap { a: 1.0, p: num(p)?, w: 1.0 }], vec![]])?,
        ["bracket", p, w] => RadialProfile::single("bracket", vec![Term::Bracket { a: 1.0, p: num(p)?, w: num(w)? }]),
        [name] => {
            let id = BarrierId::parse(name).ok_or_else(|| anyhow!("unknown profile {name}"))?;
            make_barrier(id, &BarrierConstants::with_radii(r0, r), params)?
        }
        _ => bail!("unknown profile {spec}"),
    };
    Ok(p)
}

fn intervals(v: &[f64], flag: &str) -> Result<Vec<(f64, f64)>> {
    if v.is_empty() || v.len() % 2 != 0 {
        bail!("{flag} needs an even number of endpoints");
    }
    Ok(v.chunks(2).map(|c| (c[0], c[1])).collect())
}

#[derive(Serialize)]
struct EvalRow {
    radius: f64,
    u: f64,
    value: f64,
    err: f64,
    converged: bool,
}

fn eval_rows(profile: &RadialProfile, radii: &[f64], params: &FracParams, quad: &QuadSpec) -> Result<(Vec<EvalRow>, Status)> {
    let mut rows = Vec::with_capacity(radii.len());
    let mut status = Status::Pass;
    for &r in radii {
        let v = eval_radial(profile, r, params, quad)?;
        if !v.converged {
            status = Status::Inconclusive;
        }
        rows.push(EvalRow { radius: r, u: profile.value(r), value: v.value, err: v.error_estimate, converged: v.converged });
    }
    Ok((rows, status))
}

fn eval_csv(rows: &[EvalRow]) -> Vec<String> {
    rows.iter().map(|r| format!("{:e},{:e},{:e}", r.radius, r.value, r.err)).collect()
}

#[derive(Serialize)]
struct EvalOut<'a> {
    n: usize,
    s: f64,
    profile: &'a str,
    rows: Vec<EvalRow>,
}

#[derive(Serialize)]
struct BarrierOut<'a> {
    n: usize,
    s: f64,
    barrier: &'a str,
    constants: BarrierConstants,
    rows: Vec<EvalRow>,
}

#[derive(Serialize)]
struct SolveOut {
    s: f64,
    h: f64,
    domain: Vec<(f64, f64)>,
    residual: f64,
    x: Vec<f64>,
    values: Vec<f64>,
}

#[derive(Serialize)]
struct MeasureOut {
    h: f64,
    c_bar: f64,
    lattice_index: u32,
    c_bar_refined: f64,
    lattice_index_refined: u32,
    nu: f64,
}

#[derive(Serialize)]
struct CheckOut {
    n: usize,
    s: f64,
    report: HypothesisReport,
    k_exponent: Option<f64>,
}

#[derive(Serialize)]
struct ChainLine {
    chain: &'static str,
    n: usize,
    s: f64,
    verdict: &'static str,
    worst_margin: f64,
}

#[derive(Serialize)]
struct PresetLine {
    name: String,
    verdict: &'static str,
    k_exponent: Option<f64>,
    expected: f64,
}

#[derive(Serialize)]
struct ReportOut {
    chains: Vec<ChainLine>,
    exponent_presets: Vec<PresetLine>,
}

fn owning_chain(id: BarrierId) -> ChainId {
    ChainId::ALL.iter().copied().find(|c| c.barrier() == id).expect("every barrier has a chain").sign_chain()
}

pub fn run(cli: &Cli) -> Result<(String, Status)> {
    let g = &cli.global;
    match &cli.command {
        Command::Eval { dims, profile, at, r0, r } => {
            let params = params(dims, None)?;
            let q = quad(g)?;
            let u = parse_profile(profile, &params, *r0, r.unwrap_or(10.0 * r0))?;
            let (rows, status) = eval_rows(&u, at, &params, &q)?;
            let csv = eval_csv(&rows);
            let out = EvalOut { n: params.n, s: params.s, profile, rows };
            Ok((render(g, "eval", status, &out, "radius,value,err", csv)?, status))
        }
        Command::Barrier { dims, name, r0, r, auto, at, samples } => {
            let id = BarrierId::parse(name).ok_or_else(|| anyhow!("unknown barrier {name}"))?;
            let chain = owning_chain(id);
            let params = params(dims, Some((chain.preset().n, chain.preset().s)))?;
            let q = quad(g)?;
            let k = if *auto {
                choose_constants(chain, &params, *r0, *r, &q)?
            } else {
                BarrierConstants::with_radii(*r0, r.unwrap_or(10.0 * r0))
            };
            let u = make_barrier(id, &k, &params)?;
            let radii = if at.is_empty() { log_interior(k.r0, 2.0 * k.r, *samples) } else { at.clone() };
            let (rows, status) = eval_rows(&u, &radii, &params, &q)?;
            let csv = eval_csv(&rows);
            let out = BarrierOut { n: params.n, s: params.s, barrier: id.name(), constants: k, rows };
            Ok((render(g, "barrier", status, &out, "radius,value,err", csv)?, status))
        }
        Command::VerifyChain { chain, dims, r0, r, samples, unit_constants } => {
            let chain = ChainId::parse(chain).ok_or_else(|| anyhow!("unknown chain {chain}"))?;
            let params = params(dims, Some((chain.preset().n, chain.preset().s)))?;
            let q = quad(g)?;
            let k = if *unit_constants {
                BarrierConstants::with_radii(*r0, r.unwrap_or(10.0 * r0))
            } else {
                choose_constants(chain, &params, *r0, *r, &q)?
            };
            let rep = verify_chain(chain, &params, &k, &SamplePolicy { points: *samples, region: None }, &q)?;
            let status = from_verdict(rep.verdict);
            let csv = rep.samples.iter().map(|s| format!("{:e},{:e},{:e}", s.x, s.value, s.err)).collect();
            Ok((render(g, "verify-chain", status, &rep, "radius,value,err", csv)?, status))
        }
        Command::Solve { s, h, domain, rhs, indicator } => {
            let dom = intervals(domain, "--domain")?;
            let rhs = if indicator.is_empty() {
                Rhs::Constant { value: *rhs }
            } else {
                Rhs::Indicator { set: intervals(indicator, "--indicator")?, height: *rhs }
            };
            let p = GridProblem::new(dom.clone(), *h, rhs, ExteriorData::Zero, *s)?;
            let sol = solve_dirichlet(&p)?;
            let csv = sol.x.iter().zip(&sol.values).map(|(x, v)| format!("{x:e},{v:e}")).collect();
            let out = SolveOut { s: *s, h: *h, domain: dom, residual: sol.residual, x: sol.x, values: sol.values };
            Ok((render(g, "solve", Status::Pass, &out, "x,value", csv)?, Status::Pass))
        }
        Command::Maxprinciple { check, s, h, seed, samples } => maxprinciple(g, *check, *s, *h, *seed, *samples),
        Command::CheckF { condition, dims, f } => {
            let params = params(dims, None)?;
            let spec = load_spec(f)?;
            let report = match condition {
                Condition::F2 => check_f2(&spec, &params)?,
                Condition::F2prime => check_f2prime(&spec, &params)?,
                Condition::F3prime => check_f3prime(&spec, &params)?,
                Condition::F4prime => check_f4prime(&spec, &params)?,
            };
            let k_exponent = match condition {
                Condition::F3prime | Condition::F4prime => fit_k_exponent(&report),
                _ => None,
            };
            let status = from_hypothesis(report.verdict);
            let csv = report.samples.iter().map(|p| format!("{:e},{:e}", p.param, p.value)).collect();
            let out = CheckOut { n: params.n, s: params.s, report, k_exponent };
            Ok((render(g, "check-f", status, &out, "param,value", csv)?, status))
        }
        Command::Scan { dims, f, samples, control } => {
            let params = params(dims, None)?;
            let spec = load_spec(f)?;
            let q = quad(g)?;
            let mut family = CandidateFamily::bracket((0.1, 10.0), *samples, (0.1, 6.0), *samples)?;
            if let Some(p) = control {
                family = family.with_member("control", supercritical_control(&params, *p, &q)?.profile);
            }
            let rep = nonexistence_scan(&family, &spec, &params, &ScanConfig::default(), &q)?;
            let status = if rep.exploratory {
                Status::Inconclusive
            } else if rep.certified == 0 && rep.consistency_violations.is_empty() {
                Status::Pass
            } else {
                Status::Fail
            };
            let csv = rep.members.iter().map(|m| format!("{},{},{:e}", m.label, m.verdict.label(), m.min_margin)).collect();
            Ok((render(g, "scan", status, &rep, "label,verdict,min_margin", csv)?, status))
        }
        Command::Trace { dims, f, h } => {
            let params = params(dims, None)?;
            let spec = load_spec(f)?;
            let q = quad(g)?;
            let variant = if branch_of(&params) == Branch::PowerNeg { SignVariant::Phi } else { SignVariant::PhiTilde };
            let u = make_fundamental(&params, variant);
            let constants = TraceConstants::from_solver(params.s, *h)?;
            let rep = proof_quantity_trace(&u, &spec, &params, &default_r_grid(spec.r0), &constants, &q)?;
            let status = if rep.first_contradiction.is_some() { Status::Pass } else { Status::Inconclusive };
            let csv =
                rep.rows.iter().map(|r| format!("{:e},{:e},{:e},{:e},{}", r.r, r.m, r.lower_rhs, r.envelope, r.contradiction)).collect();
            Ok((render(g, "trace", status, &rep, "radius,m,lower_rhs,envelope,contradiction", csv)?, status))
        }
        Command::Report { samples } => report(g, *samples),
    }
}

fn maxprinciple(g: &Global, check: MpCheck, s: Option<f64>, h: Option<f64>, seed: u64, samples: usize) -> Result<(String, Status)> {
    let s = s.unwrap_or(if check == MpCheck::Qsmp2 { 0.75 } else { 0.5 });
    let h = h.unwrap_or(if check == MpCheck::Hopf { 1.0 / 128.0 } else { 1.0 / 32.0 });
    let qsmp_sets = ([(1.0, 4.0)], [(2.0, 3.0)], [(1.5, 1.8)]);
    match check {
        MpCheck::Comparison => {
            let rep = comparison_battery(seed, samples)?;
            let status = from_verdict(rep.verdict);
            let csv = vec![format!("violations,{}", rep.violations), format!("worst_excess,{:e}", rep.worst_excess)];
            Ok((render(g, "maxprinciple", status, &rep, "quantity,value", csv)?, status))
        }
        MpCheck::Hopf => {
            let p = GridProblem::new(vec![(-1.0, 1.0)], h, Rhs::indicator(vec![(-0.1, 0.1)]), ExteriorData::Zero, s)?;
            let rep = verify_hopf_ratio(&p)?;
            let status = from_verdict(rep.verdict);
            let csv = vec![
                format!("min_ratio,{:e}", rep.min_ratio),
                format!("c_omega,{:e}", rep.c_omega),
                format!("c_omega_refined,{:e}", rep.c_omega_refined),
            ];
            Ok((render(g, "maxprinciple", status, &rep, "quantity,value", csv)?, status))
        }
        MpCheck::Kslap => {
            let rep = verify_kslap(&Rhs::Constant { value: 1.0 }, &kslap_battery(), h, s)?;
            let status = from_verdict(rep.verdict);
            let csv = vec![format!("c_bar,{:e}", rep.c_bar), format!("c_bar_refined,{:e}", rep.c_bar_refined)];
            Ok((render(g, "maxprinciple", status, &rep, "quantity,value", csv)?, status))
        }
        MpCheck::Qsmp1 | MpCheck::Qsmp2 => {
            let variant = if check == MpCheck::Qsmp1 {
                QsmpVariant::One
            } else {
                let params = FracParams::new(1, s)?;
                let sign = if branch_of(&params) == Branch::PowerNeg { SignVariant::Phi } else { SignVariant::PhiTilde };
                QsmpVariant::Two { phi_star: make_fundamental(&params, sign) }
            };
            let rep = verify_qsmp(&qsmp_sets.0, &qsmp_sets.1, &qsmp_sets.2, &variant, h, s)?;
            let status = from_verdict(rep.verdict);
            let csv = vec![format!("c0,{:e}", rep.c0), format!("c0_refined,{:e}", rep.c0_refined)];
            Ok((render(g, "maxprinciple", status, &rep, "quantity,value", csv)?, status))
        }
        MpCheck::Measure => {
            let run = |h: f64| -> Result<_> {
                let p = GridProblem::new(kslap_domain(), h, Rhs::indicator(vec![(1.4, 1.6)]), ExteriorData::Zero, s)?;
                let sol = solve_dirichlet(&p)?;
                Ok(verify_measure_lemma(&p, &sol.window_values, &[], 0.5)?)
            };
            let (a, b) = (run(h)?, run(h / 2.0)?);
            let stable = a.c_bar.is_finite() && b.c_bar.is_finite() && a.lattice_index.abs_diff(b.lattice_index) <= 1;
            let status = if stable { Status::Pass } else { Status::Fail };
            let out = MeasureOut {
                h,
                c_bar: a.c_bar,
                lattice_index: a.lattice_index,
                c_bar_refined: b.c_bar,
                lattice_index_refined: b.lattice_index,
                nu: a.nu,
            };
            let csv = vec![format!("c_bar,{:e}", out.c_bar), format!("c_bar_refined,{:e}", out.c_bar_refined)];
            Ok((render(g, "maxprinciple", status, &out, "quantity,value", csv)?, status))
        }
    }
}

fn report(g: &Global, samples: usize) -> Result<(String, Status)> {
    let q = quad(g)?;
    let mut status = Status::Pass;
    let mut chains = Vec::new();
    for chain in ChainId::ALL {
        let params = chain.preset();
        let k = choose_constants(chain, &params, 2.0, None, &q)?;
        let rep = verify_chain(chain, &params, &k, &SamplePolicy { points: samples, region: None }, &q)?;
        status = worst(status, from_verdict(rep.verdict));
        chains.push(ChainLine {
            chain: chain.name(),
            n: params.n,
            s: params.s,
            verdict: rep.verdict.as_str(),
            worst_margin: rep.worst_margin,
        });
    }
    let mut presets = Vec::new();
    for p in exponent_presets()? {
        let params = FracParams::new(p.n, p.s)?;
        let rep = match p.variant {
            PsiVariant::F3 => check_f3prime(&p.spec, &params)?,
            PsiVariant::F4 => check_f4prime(&p.spec, &params)?,
        };
        let expected = -1.0 + alpha_tilde_star(&params, p.gamma)?;
        let k_exponent = fit_k_exponent(&rep);
        let close = k_exponent.is_some_and(|e| (e - expected).abs() <= 0.2);
        status = worst(status, from_hypothesis(rep.verdict));
        if !close {
            status = worst(status, Status::Fail);
        }
        presets.push(PresetLine { name: p.name, verdict: rep.verdict.as_str(), k_exponent, expected });
    }
    let mut csv: Vec<String> = chains.iter().map(|c| format!("{},{}", c.chain, c.verdict)).collect();
    csv.extend(presets.iter().map(|p| format!("{},{}", p.name, p.verdict)));
    let out = ReportOut { chains, exponent_presets: presets };
    Ok((render(g, "report", status, &out, "item,verdict", csv)?, status))
}
