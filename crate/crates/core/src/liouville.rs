//! Annulus infima, growth envelopes, supersolution residuals and the
//! candidate-family scan with its supercritical control.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{FracError, Result};
use crate::estimates::ChainId;
use crate::frackernel::{ball_volume, eval_radial, FracParams, QuadSpec};
use crate::fundamentals::{branch_of, choose_constants, make_barrier, BarrierConstants, BarrierId, Branch};
use crate::hypotheses::{check_f2, check_f3prime, HypothesisVerdict, NonlinearitySpec};
use crate::profile::{RadialProfile, Term};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SamplingMode {
    /// Radii only; exact for radial profiles.
    Radial,
    /// Points on a fixed set of directions, evaluated through `value_at`.
    Generic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnulusSampler {
    pub points: usize,
    pub mode: SamplingMode,
}

impl Default for AnnulusSampler {
    fn default() -> Self {
        AnnulusSampler { points: 400, mode: SamplingMode::Radial }
    }
}

fn directions(n: usize) -> Vec<Vec<f64>> {
    match n {
        1 => vec![vec![1.0], vec![-1.0]],
        2 => (0..8)
            .map(|i| {
                let a = i as f64 * std::f64::consts::PI / 4.0;
                vec![a.cos(), a.sin()]
            })
            .collect(),
        _ => {
            let mut d = Vec::new();
            for k in 0..3 {
                for sgn in [1.0, -1.0] {
                    let mut v = vec![0.0; 3];
                    v[k] = sgn;
                    d.push(v);
                }
            }
            let c = 1.0 / 3f64.sqrt();
            for sx in [1.0, -1.0] {
                for sy in [1.0, -1.0] {
                    for sz in [1.0, -1.0] {
                        d.push(vec![sx * c, sy * c, sz * c]);
                    }
                }
            }
            d
        }
    }
}

fn linear_points(a: f64, b: f64, count: usize) -> Vec<f64> {
    if count < 2 {
        return vec![a];
    }
    (0..count).map(|i| if i + 1 == count { b } else { a + (b - a) * i as f64 / (count - 1) as f64 }).collect()
}

/// m(r) = inf of u over B̄_{2r}∖B_r, sampled and refined once around the minimizer.
pub fn annulus_inf(u: &RadialProfile, r: f64, n: usize, sampler: &AnnulusSampler) -> Result<f64> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(FracError::Domain(format!("annulus radius {r} must be positive")));
    }
    let dirs = match sampler.mode {
        SamplingMode::Radial => vec![vec![1.0]],
        SamplingMode::Generic => directions(n),
    };
    let per_dir = (sampler.points / dirs.len()).max(8);
    let eval = |rho: f64| -> f64 {
        match sampler.mode {
            SamplingMode::Radial => u.value(rho),
            SamplingMode::Generic => dirs
                .iter()
                .map(|d| {
                    let x: Vec<f64> = d.iter().map(|c| c * rho).collect();
                    u.value_at(&x)
                })
                .fold(f64::INFINITY, f64::min),
        }
    };
    let grid = linear_points(r, 2.0 * r, per_dir);
    let mut best = (f64::INFINITY, 0usize);
    for (i, &rho) in grid.iter().enumerate() {
        let v = eval(rho);
        if v.is_nan() {
            return Err(FracError::Domain(format!("profile is not evaluable at radius {rho}")));
        }
        if v < best.0 {
            best = (v, i);
        }
    }
    let lo = grid[best.1.saturating_sub(1)];
    let hi = grid[(best.1 + 1).min(grid.len() - 1)];
    for rho in linear_points(lo, hi, per_dir) {
        best.0 = best.0.min(eval(rho));
    }
    Ok(best.0)
}

/// Which two-sided estimate of m(r) applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum GrowthCase {
    /// n = 1, s = 1/2: c ≤ m(r) ≤ C log r.
    SupHalf,
    /// n = 1, s > 1/2: c ≤ m(r) ≤ C r^{σ*}.
    SupGtHalf,
    /// 2s < n: c r^{σ*} ≤ m(r) ≤ C.
    Sub,
}

impl GrowthCase {
    pub fn for_params(params: &FracParams) -> GrowthCase {
        match branch_of(params) {
            Branch::Log => GrowthCase::SupHalf,
            Branch::PowerPos => GrowthCase::SupGtHalf,
            Branch::PowerNeg => GrowthCase::Sub,
        }
    }

    fn laws(&self, r: f64, sigma: f64) -> (f64, f64) {
        match self {
            GrowthCase::SupHalf => (1.0, r.ln()),
            GrowthCase::SupGtHalf => (1.0, r.powf(sigma)),
            GrowthCase::Sub => (r.powf(sigma), 1.0),
        }
    }
}

/// Tolerance on the log-slope of m/law over the upper half of the grid.
pub const SLOPE_TOL: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthReport {
    pub case: GrowthCase,
    pub radii: Vec<f64>,
    pub m: Vec<f64>,
    /// min over the grid of m / lower law.
    pub lower_constant: f64,
    /// max over the grid of m / upper law.
    pub upper_constant: f64,
    pub lower_tail_slope: f64,
    pub upper_tail_slope: f64,
    pub verdict: crate::estimates::Verdict,
    pub notes: Vec<String>,
}

fn ls_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// 8 log-spaced radii per decade over [10 r0, 10⁴ r0].
pub fn default_r_grid(r0: f64) -> Vec<f64> {
    (0..=24).map(|i| 10.0 * r0 * 10f64.powf(i as f64 / 8.0)).collect()
}

/// Check m(r) against the two-sided envelope of `case` over `r_grid`.
pub fn verify_growth_bounds(
    u: &RadialProfile,
    case: GrowthCase,
    params: &FracParams,
    r_grid: &[f64],
    sampler: &AnnulusSampler,
) -> Result<GrowthReport> {
    if GrowthCase::for_params(params) != case {
        return Err(FracError::Config(format!("{case:?} does not match n = {}, s = {}", params.n, params.s)));
    }
    if r_grid.len() < 4 || r_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(FracError::Config("r_grid must hold at least 4 increasing radii".into()));
    }
    if r_grid[r_grid.len() - 1] / r_grid[0] < 100.0 * (1.0 - 1e-12) {
        return Err(FracError::Config("r_grid must span at least two decades".into()));
    }
    if case == GrowthCase::SupHalf && r_grid[0] <= 1.0 {
        return Err(FracError::Config("the log envelope needs radii above 1".into()));
    }
    let mut m = Vec::with_capacity(r_grid.len());
    for &r in r_grid {
        let v = annulus_inf(u, r, params.n, sampler)?;
        if !(v > 0.0) {
            return Err(FracError::Precondition(format!("m({r}) = {v} is not positive")));
        }
        m.push(v);
    }
    let sigma = params.sigma_star;
    let (mut lower, mut upper) = (f64::INFINITY, 0.0f64);
    let (mut lo_ratio, mut up_ratio) = (Vec::new(), Vec::new());
    for (&r, &v) in r_grid.iter().zip(&m) {
        let (ll, ul) = case.laws(r, sigma);
        lower = lower.min(v / ll);
        upper = upper.max(v / ul);
        lo_ratio.push((v / ll).ln());
        up_ratio.push((v / ul).ln());
    }
    let half = r_grid.len() / 2;
    let lr: Vec<f64> = r_grid[half..].iter().map(|r| r.ln()).collect();
    let lower_slope = ls_slope(&lr, &lo_ratio[half..]);
    let upper_slope = ls_slope(&lr, &up_ratio[half..]);
    let mut notes = Vec::new();
    let mut ok = lower > 0.0 && upper.is_finite();
    if lower_slope < -SLOPE_TOL {
        notes.push(format!("m(r) falls below the lower envelope at log-slope {lower_slope:.3}"));
        ok = false;
    }
    if upper_slope > SLOPE_TOL {
        notes.push(format!("m(r) outgrows the upper envelope at log-slope {upper_slope:.3}"));
        ok = false;
    }
    let verdict = if ok { crate::estimates::Verdict::Pass } else { crate::estimates::Verdict::Fail };
    Ok(GrowthReport {
        case,
        radii: r_grid.to_vec(),
        m,
        lower_constant: lower,
        upper_constant: upper,
        lower_tail_slope: lower_slope,
        upper_tail_slope: upper_slope,
        verdict,
        notes,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualSample {
    pub r: f64,
    pub operator: f64,
    pub err: f64,
    pub converged: bool,
    pub f: f64,
    /// (-Δ)^s u − f(u, x).
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum MemberVerdict {
    SupersolutionOnSamples,
    FailsAt { r: f64, residual: f64, err: f64 },
    Inconclusive,
}

impl MemberVerdict {
    pub fn label(&self) -> &'static str {
        match self {
            MemberVerdict::SupersolutionOnSamples => "SUPERSOLUTION_ON_SAMPLES",
            MemberVerdict::FailsAt { .. } => "FAILS_AT",
            MemberVerdict::Inconclusive => "INCONCLUSIVE",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualPolicy {
    /// Log-spaced radii in the region, endpoints included.
    pub points: usize,
    /// Evaluate from the outer radius inward and stop at the first definite failure.
    pub stop_at_failure: bool,
}

impl Default for ResidualPolicy {
    fn default() -> Self {
        ResidualPolicy { points: 24, stop_at_failure: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub samples: Vec<ResidualSample>,
    /// min over samples of residual − 2·err.
    pub min_margin: f64,
    /// Sample with the smallest residual.
    pub witness: Option<ResidualSample>,
    pub verdict: MemberVerdict,
}

fn log_points(a: f64, b: f64, count: usize) -> Vec<f64> {
    if count < 2 {
        return vec![a];
    }
    (0..count).map(|i| if i + 1 == count { b } else { a * (b / a).powf(i as f64 / (count - 1) as f64) }).collect()
}

/// Residual (-Δ)^s u − f(u, x) on a radial region; certified iff min(R − 2 err) ≥ 0.
pub fn supersolution_residual(
    u: &RadialProfile,
    f: &NonlinearitySpec,
    params: &FracParams,
    region: (f64, f64),
    quad: &QuadSpec,
    policy: &ResidualPolicy,
) -> Result<ResidualReport> {
    let (a, b) = region;
    if !(a > 0.0 && b > a) || policy.points == 0 {
        return Err(FracError::Config(format!("empty residual region ({a}, {b})")));
    }
    let mut radii = log_points(a, b, policy.points);
    radii.reverse();
    let mut samples = Vec::with_capacity(radii.len());
    for r in radii {
        let ur = u.value(r);
        if !(ur > 0.0) {
            return Err(FracError::Precondition(format!("u({r}) = {ur} is not positive")));
        }
        let op = eval_radial(u, r, params, quad)?;
        let fv = f.eval(ur, r, params);
        let s = ResidualSample { r, operator: op.value, err: op.error_estimate, converged: op.converged, f: fv, residual: op.value - fv };
        samples.push(s);
        if policy.stop_at_failure && s.converged && s.residual + 2.0 * s.err < 0.0 {
            break;
        }
    }
    let min_margin = samples.iter().map(|s| s.residual - 2.0 * s.err).fold(f64::INFINITY, f64::min);
    let witness = samples.iter().copied().min_by(|x, y| x.residual.total_cmp(&y.residual));
    let unconverged = samples.iter().filter(|s| !s.converged).count();
    let definite = samples
        .iter()
        .filter(|s| s.converged && s.residual + 2.0 * s.err < 0.0)
        .min_by(|x, y| (x.residual + 2.0 * x.err).total_cmp(&(y.residual + 2.0 * y.err)));
    let verdict = if let Some(w) = definite {
        MemberVerdict::FailsAt { r: w.r, residual: w.residual, err: w.err }
    } else if unconverged as f64 > 0.05 * samples.len() as f64 {
        MemberVerdict::Inconclusive
    } else if min_margin >= 0.0 {
        MemberVerdict::SupersolutionOnSamples
    } else {
        MemberVerdict::Inconclusive
    };
    Ok(ResidualReport { samples, min_margin, witness, verdict })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub label: String,
    /// (c, β) for members of the bracket family.
    pub c: Option<f64>,
    pub beta: Option<f64>,
    pub profile: RadialProfile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateFamily {
    pub members: Vec<Candidate>,
}

impl CandidateFamily {
    /// u_{c,β} = c (1 + r²)^{−β/2}, c log-spaced and β linearly spaced.
    pub fn bracket(c_range: (f64, f64), nc: usize, beta_range: (f64, f64), nb: usize) -> Result<Self> {
        if nc == 0 || nb == 0 || !(c_range.0 > 0.0 && c_range.1 >= c_range.0) || !(beta_range.0 > 0.0 && beta_range.1 >= beta_range.0) {
            return Err(FracError::Config("the family grids must be nonempty with positive c and β".into()));
        }
        let cs = log_points(c_range.0, c_range.1, nc);
        let betas = linear_points(beta_range.0, beta_range.1, nb);
        let mut members = Vec::with_capacity(nc * nb);
        for &c in &cs {
            for &beta in &betas {
                let profile =
                    RadialProfile::single(format!("bracket_c{c:.4}_b{beta:.4}"), vec![Term::Bracket { a: c, p: -beta / 2.0, w: 1.0 }]);
                members.push(Candidate { label: profile.name.clone(), c: Some(c), beta: Some(beta), profile });
            }
        }
        Ok(CandidateFamily { members })
    }

    /// The default 20 × 20 family: c ∈ [0.1, 10], β ∈ [0.1, 6].
    pub fn default_bracket() -> Self {
        Self::bracket((0.1, 10.0), 20, (0.1, 6.0), 20).expect("default family grids are valid")
    }

    pub fn with_member(mut self, label: &str, profile: RadialProfile) -> Self {
        self.members.push(Candidate { label: label.to_string(), c: None, beta: None, profile });
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemberReport {
    pub label: String,
    pub c: Option<f64>,
    pub beta: Option<f64>,
    pub verdict: MemberVerdict,
    pub min_margin: f64,
    pub worst_residual: Option<ResidualSample>,
    pub samples_evaluated: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub params: FracParams,
    pub region: (f64, f64),
    pub members: Vec<MemberReport>,
    pub certified: usize,
    pub failed: usize,
    pub inconclusive: usize,
    /// The hypothesis check that gates the scan and its verdict.
    pub hypothesis: String,
    pub hypothesis_verdict: HypothesisVerdict,
    /// True when f does not pass its hypothesis check.
    pub exploratory: bool,
    /// Certified members whose growth bounds FAIL while f satisfies (f2).
    pub consistency_violations: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanConfig {
    pub region: (f64, f64),
    pub residual: ResidualPolicy,
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig { region: (10.0, 1e4), residual: ResidualPolicy { points: 24, stop_at_failure: true } }
    }
}

fn gate(f: &NonlinearitySpec, params: &FracParams) -> Result<(String, HypothesisVerdict)> {
    if (params.n as f64) > 2.0 * params.s {
        Ok(("f2".into(), check_f2(f, params)?.verdict))
    } else {
        Ok(("f3prime".into(), check_f3prime(f, params)?.verdict))
    }
}

/// Scan every family member for the supersolution property on the region.
pub fn nonexistence_scan(
    family: &CandidateFamily,
    f: &NonlinearitySpec,
    params: &FracParams,
    config: &ScanConfig,
    quad: &QuadSpec,
) -> Result<ScanReport> {
    if family.members.is_empty() {
        return Err(FracError::Config("empty candidate family".into()));
    }
    f.validate(params)?;
    let (hypothesis, hv) = gate(f, params)?;
    let members = family
        .members
        .par_iter()
        .map(|m| {
            let rep = supersolution_residual(&m.profile, f, params, config.region, quad, &config.residual)?;
            Ok(MemberReport {
                label: m.label.clone(),
                c: m.c,
                beta: m.beta,
                verdict: rep.verdict,
                min_margin: rep.min_margin,
                worst_residual: rep.witness,
                samples_evaluated: rep.samples.len(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let certified = members.iter().filter(|m| m.verdict == MemberVerdict::SupersolutionOnSamples).count();
    let failed = members.iter().filter(|m| matches!(m.verdict, MemberVerdict::FailsAt { .. })).count();
    let inconclusive = members.len() - certified - failed;
    let mut consistency_violations = Vec::new();
    if hypothesis == "f2" && hv == HypothesisVerdict::Holds {
        let case = GrowthCase::for_params(params);
        let (a, b) = config.region;
        let grid = log_points(a, b.max(100.0 * a), 17);
        for (m, cand) in members.iter().zip(&family.members) {
            if m.verdict != MemberVerdict::SupersolutionOnSamples {
                continue;
            }
            let g = verify_growth_bounds(&cand.profile, case, params, &grid, &AnnulusSampler::default())?;
            if g.verdict == crate::estimates::Verdict::Fail {
                consistency_violations.push(format!("{} is certified but fails its growth bounds", m.label));
            }
        }
    }
    Ok(ScanReport {
        params: *params,
        region: config.region,
        members,
        certified,
        failed,
        inconclusive,
        hypothesis,
        exploratory: hv != HypothesisVerdict::Holds,
        hypothesis_verdict: hv,
        consistency_violations,
    })
}

/// The positive control ε|x|^{−τ} for f(t) = t^p.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupercriticalControl {
    pub p: f64,
    pub tau: f64,
    /// (-Δ)^s |x|^{−τ} at |x| = 1 by quadrature.
    pub lambda: f64,
    pub lambda_err: f64,
    /// (λ/2)^{1/(p−1)}, so that ε^{p−1} = λ/2 < λ.
    pub epsilon: f64,
    pub profile: RadialProfile,
}

/// τ = 2s/(p−1) must lie in (0, n − 2s) so that λ(τ) > 0.
pub fn supercritical_control(params: &FracParams, p: f64, quad: &QuadSpec) -> Result<SupercriticalControl> {
    if !(p > 1.0) {
        return Err(FracError::Config("the control needs p > 1".into()));
    }
    let tau = 2.0 * params.s / (p - 1.0);
    if !(tau < params.n as f64 - 2.0 * params.s) {
        return Err(FracError::Config(format!("τ = {tau} must be below n − 2s; p = {p} is not supercritical")));
    }
    let unit = RadialProfile::single("power", vec![Term::Power { a: 1.0, b: -tau }]);
    let op = eval_radial(&unit, 1.0, params, quad)?;
    if !(op.value > 2.0 * op.error_estimate) {
        return Err(FracError::Degenerate(format!("λ(τ) = {} is not resolved as positive", op.value)));
    }
    let epsilon = (op.value / 2.0).powf(1.0 / (p - 1.0));
    let profile = RadialProfile::single("supercritical_control", vec![Term::Power { a: epsilon, b: -tau }]);
    Ok(SupercriticalControl { p, tau, lambda: op.value, lambda_err: op.error_estimate, epsilon, profile })
}

/// Constants feeding the traced inequalities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceConstants {
    /// c̄ of the quantitative lower bound over B₂∖B₁.
    pub c_bar: f64,
    /// C̄ of the sublevel measure bound with ν = 1/2.
    pub c_measure: f64,
    /// C_M of the upper growth bound; the sup of m over the grid when None.
    pub c_m: Option<f64>,
}

impl TraceConstants {
    /// c̄ and C̄ from the 1D solver: the kslap battery with rhs ≡ 1 and the
    /// measure bound for the solution with rhs χ_{(1.4, 1.6)}.
    pub fn from_solver(s: f64, h: f64) -> Result<Self> {
        use crate::maxprinciple::{
            kslap_battery, kslap_domain, solve_dirichlet, verify_kslap, verify_measure_lemma, ExteriorData, GridProblem, Rhs,
        };
        let k = verify_kslap(&Rhs::Constant { value: 1.0 }, &kslap_battery(), h, s)?;
        let p = GridProblem::new(kslap_domain(), h, Rhs::indicator(vec![(1.4, 1.6)]), ExteriorData::Zero, s)?;
        let sol = solve_dirichlet(&p)?;
        let m = verify_measure_lemma(&p, &sol.window_values, &[], 0.5)?;
        Ok(TraceConstants { c_bar: k.c_bar, c_measure: m.c_bar, c_m: None })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub r: f64,
    pub m: f64,
    /// ½ c̄ r^{2s} |B₂∖B₁| min{f(t, x) : m ≤ t ≤ C̄m, r ≤ |x| ≤ 2r}, a lower bound for m(r).
    pub lower_rhs: f64,
    /// (2/c̄) C_M r^{σ*}, the upper envelope for m(r).
    pub envelope: f64,
    /// inf over B_{2r}∖B_r of u / w_γ (σ* < 0).
    pub rho: Option<f64>,
    /// inf over |x| > r of u / (Φ̃ − 1) (σ* > 0).
    pub eta_tilde: Option<f64>,
    pub contradiction: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceReport {
    pub constants: TraceConstants,
    pub c_m: f64,
    pub mu: Option<f64>,
    pub rows: Vec<TraceRow>,
    /// First radius where the lower bound exceeds the upper envelope.
    pub first_contradiction: Option<f64>,
    /// max/min of η̃ over the grid.
    pub eta_variation: Option<f64>,
}

fn min_f_on_box(f: &NonlinearitySpec, params: &FracParams, t: (f64, f64), r: (f64, f64)) -> f64 {
    let ts = log_points(t.0, t.1.max(t.0), 64);
    let rs = log_points(r.0, r.1, 16);
    let mut best = f64::INFINITY;
    for &x in &rs {
        for &tt in &ts {
            best = best.min(f.eval(tt, x, params));
        }
    }
    best
}

/// Trace the quantities of the nonexistence argument along `r_grid`.
pub fn proof_quantity_trace(
    u: &RadialProfile,
    f: &NonlinearitySpec,
    params: &FracParams,
    r_grid: &[f64],
    constants: &TraceConstants,
    quad: &QuadSpec,
) -> Result<TraceReport> {
    if r_grid.is_empty() || r_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(FracError::Config("r_grid must be nonempty and increasing".into()));
    }
    if !(constants.c_bar > 0.0) || !(constants.c_measure >= 1.0) {
        return Err(FracError::Config("c̄ must be positive and C̄ at least 1".into()));
    }
    let sampler = AnnulusSampler::default();
    let n = params.n;
    let s = params.s;
    let sigma = params.sigma_star;
    let shell = ball_volume(n) * (2f64.powi(n as i32) - 1.0);
    let m: Vec<f64> = r_grid.iter().map(|&r| annulus_inf(u, r, n, &sampler)).collect::<Result<_>>()?;
    if m.iter().any(|&v| !(v > 0.0)) {
        return Err(FracError::Precondition("u must be positive on the traced annuli".into()));
    }
    let c_m = constants.c_m.unwrap_or_else(|| m.iter().copied().fold(0.0, f64::max));
    let branch = branch_of(params);
    let r0 = f.r0;
    if branch != Branch::Log && !(r0 > 1.0 && r_grid[0] > r0) {
        return Err(FracError::Config("the traced barriers need r0 > 1 and radii beyond r0".into()));
    }
    let mu = if branch == Branch::PowerNeg { Some(choose_constants(ChainId::RI, params, r0, None, quad)?.mu) } else { None };
    let mut rows = Vec::with_capacity(r_grid.len());
    let mut first = None;
    for (&r, &mr) in r_grid.iter().zip(&m) {
        let fmin = min_f_on_box(f, params, (mr, constants.c_measure * mr), (r, 2.0 * r));
        let lower_rhs = 0.5 * constants.c_bar * r.powf(2.0 * s) * shell * fmin;
        let envelope = 2.0 / constants.c_bar * c_m * r.powf(sigma);
        let rho = match mu {
            Some(mu) => {
                let mut k = BarrierConstants::with_radii(r0, r);
                k.mu = mu;
                let w = make_barrier(BarrierId::WGamma, &k, params)?;
                let pts = linear_points(r, 2.0 * r, 401);
                Some(pts.iter().filter(|&&x| x > r).map(|&x| u.value(x) / w.value(x)).fold(f64::INFINITY, f64::min))
            }
            None => None,
        };
        let eta_tilde = if branch == Branch::PowerPos {
            let pts: Vec<f64> = (1..=48).map(|i| r * 10f64.powf(i as f64 / 8.0)).collect();
            Some(pts.iter().map(|&x| u.value(x) / ((x / r0).powf(sigma) - 1.0)).fold(f64::INFINITY, f64::min))
        } else {
            None
        };
        let contradiction = lower_rhs > envelope;
        if contradiction && first.is_none() {
            first = Some(r);
        }
        rows.push(TraceRow { r, m: mr, lower_rhs, envelope, rho, eta_tilde, contradiction });
    }
    let eta: Vec<f64> = rows.iter().filter_map(|r| r.eta_tilde).collect();
    let eta_variation = if eta.is_empty() {
        None
    } else {
        let (lo, hi) = eta.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
        Some(hi / lo)
    };
    Ok(TraceReport { constants: *constants, c_m, mu, rows, first_contradiction: first, eta_variation })
}
