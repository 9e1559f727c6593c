//! Sampled checks of the nonlinearity hypotheses.
//!
//! Limits are never computed symbolically. Each liminf is estimated from a
//! geometric sample sequence whose last five entries are classified by
//! [`classify`]; a verdict other than INCONCLUSIVE needs a monotone trend.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{FracError, Result};
use crate::frackernel::FracParams;
use crate::fundamentals::{branch_of, Branch};

/// Built-in profiles g(t) of a separable nonlinearity |x|^{-γ} g(t).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GFunction {
    /// a·t^p.
    Power { a: f64, p: f64 },
    /// c·exp(−b t^q).
    Exponential { c: f64, b: f64, q: f64 },
    /// 5/2·t^{n/(n−2s)} for t ≤ 1 and cos 2πt + 1 + 1/t for t > 1.
    Cf1b,
    /// a_i t^{p_i} on (b_{i−1}, b_i] with b_0 = 0 and a last piece on (b_last, ∞).
    PiecewisePower { breaks: Vec<f64>, pieces: Vec<(f64, f64)> },
}

impl GFunction {
    pub fn validate(&self, params: &FracParams) -> Result<()> {
        match self {
            GFunction::Power { a, .. } if !(*a > 0.0) => Err(FracError::Config("power coefficient must be positive".into())),
            GFunction::Exponential { c, .. } if !(*c > 0.0) => Err(FracError::Config("exponential coefficient must be positive".into())),
            GFunction::Cf1b if !(params.n as f64 > 2.0 * params.s) => Err(FracError::Config("the cf1b example needs n > 2s".into())),
            GFunction::PiecewisePower { breaks, pieces } => {
                if pieces.len() != breaks.len() + 1 {
                    return Err(FracError::Config("piecewise power needs one more piece than breaks".into()));
                }
                if breaks.iter().any(|&b| !(b > 0.0)) || breaks.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(FracError::Config("breaks must be positive and increasing".into()));
                }
                if pieces.iter().any(|&(a, _)| !(a > 0.0)) {
                    return Err(FracError::Config("piece coefficients must be positive".into()));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn eval(&self, t: f64, params: &FracParams) -> f64 {
        match self {
            GFunction::Power { a, p } => a * t.powf(*p),
            GFunction::Exponential { c, b, q } => c * (-b * t.powf(*q)).exp(),
            GFunction::Cf1b => {
                if t <= 1.0 {
                    let e = params.n as f64 / (params.n as f64 - 2.0 * params.s);
                    2.5 * t.powf(e)
                } else {
                    (2.0 * PI * t).cos() + 1.0 + 1.0 / t
                }
            }
            GFunction::PiecewisePower { breaks, pieces } => {
                let i = breaks.iter().take_while(|&&b| t > b).count();
                let (a, p) = pieces[i];
                a * t.powf(p)
            }
        }
    }

    /// Jump discontinuities as (t, left value, right limit).
    pub fn jumps(&self, params: &FracParams) -> Vec<(f64, f64, f64)> {
        let at = |b: f64| {
            let left = self.eval(b, params);
            let right = self.eval(b * (1.0 + 1e-12), params);
            (b, left, right)
        };
        let candidates: Vec<f64> = match self {
            GFunction::Cf1b => vec![1.0],
            GFunction::PiecewisePower { breaks, .. } => breaks.clone(),
            _ => Vec::new(),
        };
        candidates.into_iter().map(at).filter(|&(_, l, r)| (l - r).abs() > 1e-9 * l.abs().max(1.0)).collect()
    }
}

/// f(t, |x|) supplied as a closure.
#[derive(Clone)]
pub struct GeneralF {
    pub name: String,
    pub f: Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>,
}

impl fmt::Debug for GeneralF {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GeneralF({})", self.name)
    }
}

impl PartialEq for GeneralF {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && Arc::ptr_eq(&self.f, &other.f)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum Form {
    /// f(t, x) = |x|^{-γ} g(t) with γ < 2s.
    Separable { gamma: f64, g: GFunction },
    #[serde(skip)]
    General(GeneralF),
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonlinearitySpec {
    pub form: Form,
    /// μ̲ of the (f3′) range [μ̲, kΦ̃(x)].
    #[serde(default = "one")]
    pub mu_lower: f64,
    /// μ̄ of the (f4′) range [kΦ(x), μ̄].
    #[serde(default = "one")]
    pub mu_upper: f64,
    pub r0: f64,
}

impl NonlinearitySpec {
    pub fn separable(gamma: f64, g: GFunction, r0: f64) -> Self {
        NonlinearitySpec { form: Form::Separable { gamma, g }, mu_lower: 1.0, mu_upper: 1.0, r0 }
    }

    pub fn general(name: &str, f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static, r0: f64) -> Self {
        NonlinearitySpec { form: Form::General(GeneralF { name: name.to_string(), f: Arc::new(f) }), mu_lower: 1.0, mu_upper: 1.0, r0 }
    }

    /// Pure power t^p with γ = 0.
    pub fn power(p: f64, r0: f64) -> Self {
        Self::separable(0.0, GFunction::Power { a: 1.0, p }, r0)
    }

    pub fn validate(&self, params: &FracParams) -> Result<()> {
        if !(self.r0 > 0.0) || !(self.mu_lower > 0.0) || !(self.mu_upper > 0.0) {
            return Err(FracError::Config("r0, μ̲ and μ̄ must be positive".into()));
        }
        if let Form::Separable { gamma, g } = &self.form {
            if !(*gamma < 2.0 * params.s) {
                return Err(FracError::Config(format!("γ = {gamma} must be below 2s = {}", 2.0 * params.s)));
            }
            g.validate(params)?;
        }
        Ok(())
    }

    /// f(t, x) at |x| = r.
    pub fn eval(&self, t: f64, r: f64, params: &FracParams) -> f64 {
        match &self.form {
            Form::Separable { gamma, g } => r.powf(-gamma) * g.eval(t, params),
            Form::General(gf) => (gf.f)(t, r),
        }
    }

    fn jump_notes(&self, params: &FracParams) -> Vec<String> {
        match &self.form {
            Form::Separable { g, .. } => {
                g.jumps(params).into_iter().map(|(t, l, r)| format!("g jumps at t = {t}: {l} from the left, {r} from the right")).collect()
            }
            Form::General(_) => Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Trend {
    Increasing,
    Decreasing,
    Plateau,
    Irregular,
}

/// What the classified tail says about the limit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "limit", content = "value", rename_all = "snake_case")]
pub enum Limit {
    Infinite,
    Zero,
    Finite(f64),
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrendSummary {
    pub trend: Trend,
    pub limit: Limit,
}

const PLATEAU_REL: f64 = 1e-6;
const TAIL: usize = 5;

/// Classify the last five entries of a sequence ordered toward the limit.
///
/// Log increments that stay within a factor 2 of the first one read as
/// unbounded growth or decay to zero; decelerating monotone tails read as a
/// positive limit only when an Aitken extrapolation stays within 10% of the
/// last value.
pub fn classify(values: &[f64]) -> TrendSummary {
    let irregular = TrendSummary { trend: Trend::Irregular, limit: Limit::Unknown };
    if values.len() < TAIL || values.iter().any(|v| v.is_nan()) {
        return irregular;
    }
    let w = &values[values.len() - TAIL..];
    if let Some(first_inf) = w.iter().position(|v| v.is_infinite()) {
        let tail_inf = w[first_inf..].iter().all(|&v| v == f64::INFINITY);
        let rising = w[..first_inf].windows(2).all(|p| p[1] >= p[0]);
        return if tail_inf && rising { TrendSummary { trend: Trend::Increasing, limit: Limit::Infinite } } else { irregular };
    }
    if w.iter().all(|&v| v == 0.0) {
        return TrendSummary { trend: Trend::Plateau, limit: Limit::Zero };
    }
    if w.windows(2).all(|p| (p[1] - p[0]).abs() <= PLATEAU_REL * p[0].abs().max(p[1].abs())) {
        let last = w[TAIL - 1];
        let limit = if last > 0.0 { Limit::Finite(last) } else { Limit::Unknown };
        return TrendSummary { trend: Trend::Plateau, limit };
    }
    if w[0] > 0.0 && w[TAIL - 1] == 0.0 && w.windows(2).all(|p| p[1] <= p[0]) {
        return TrendSummary { trend: Trend::Decreasing, limit: Limit::Zero };
    }
    if w.iter().any(|&v| v <= 0.0) {
        return irregular;
    }
    let d: Vec<f64> = w.windows(2).map(|p| (p[1] / p[0]).ln()).collect();
    let (d0, dl) = (d[0], d[d.len() - 1]);
    let aitken = || {
        let (a, b, c) = (w[TAIL - 3], w[TAIL - 2], w[TAIL - 1]);
        let den = (c - b) - (b - a);
        if den == 0.0 {
            c
        } else {
            c - (c - b) * (c - b) / den
        }
    };
    if d.iter().all(|&x| x > 0.0) {
        let limit = if dl >= 0.5 * d0 && dl >= 1e-3 { Limit::Infinite } else { Limit::Unknown };
        return TrendSummary { trend: Trend::Increasing, limit };
    }
    if d.iter().all(|&x| x < 0.0) {
        let limit = if dl <= 0.5 * d0 && dl <= -1e-3 {
            Limit::Zero
        } else {
            let l = aitken();
            if l > 0.0 && l >= 0.9 * w[TAIL - 1] {
                Limit::Finite(l)
            } else {
                Limit::Unknown
            }
        };
        return TrendSummary { trend: Trend::Decreasing, limit };
    }
    irregular
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum HypothesisVerdict {
    Holds,
    Fails,
    Inconclusive,
}

impl HypothesisVerdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            HypothesisVerdict::Holds => "HOLDS",
            HypothesisVerdict::Fails => "FAILS",
            HypothesisVerdict::Inconclusive => "INCONCLUSIVE",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub param: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisReport {
    pub condition: String,
    /// Name of the sampled parameter ("t", "k", "|x|").
    pub parameter: String,
    pub samples: Vec<Sample>,
    pub trend: Trend,
    pub limit: Limit,
    pub plateau: Option<f64>,
    pub verdict: HypothesisVerdict,
    /// Per-k liminf estimates for (f3′) and (f4′).
    pub details: Vec<HkEstimate>,
    pub notes: Vec<String>,
}

/// α̃* = 1 + (2s − γ)/(−σ*).
pub fn alpha_tilde_star(params: &FracParams, gamma: f64) -> Result<f64> {
    if params.sigma_star.abs() < 1e-14 {
        return Err(FracError::Domain("α̃* is undefined when σ* = 0".into()));
    }
    Ok(1.0 + (2.0 * params.s - gamma) / (-params.sigma_star))
}

/// (f2): t^{−n/(n−2s)} f(t) on t = 2^{−k}, k = 1..40.
pub fn check_f2(spec: &NonlinearitySpec, params: &FracParams) -> Result<HypothesisReport> {
    let (n, s) = (params.n as f64, params.s);
    if !(n > 2.0 * s) {
        return Err(FracError::Config("(f2) needs n > 2s".into()));
    }
    spec.validate(params)?;
    let e = n / (n - 2.0 * s);
    let mut samples = Vec::with_capacity(40);
    for k in 1..=40 {
        let t = 0.5f64.powi(k);
        let f = spec.eval(t, spec.r0, params);
        if !f.is_finite() || !(f > 0.0) {
            return Err(FracError::Precondition(format!("f({t:e}) = {f} is not positive and finite")));
        }
        samples.push(Sample { param: t, value: t.powf(-e) * f });
    }
    let values: Vec<f64> = samples.iter().map(|p| p.value).collect();
    let ts = classify(&values);
    let verdict = match (ts.trend, ts.limit) {
        (Trend::Plateau, Limit::Finite(_)) | (Trend::Increasing, Limit::Infinite) => HypothesisVerdict::Holds,
        (_, Limit::Zero) => HypothesisVerdict::Fails,
        _ => HypothesisVerdict::Inconclusive,
    };
    let plateau = match (ts.trend, ts.limit) {
        (Trend::Plateau, Limit::Finite(c)) => Some(c),
        _ => None,
    };
    Ok(HypothesisReport {
        condition: "f2".into(),
        parameter: "t".into(),
        samples,
        trend: ts.trend,
        limit: ts.limit,
        plateau,
        verdict,
        details: Vec::new(),
        notes: spec.jump_notes(params),
    })
}

/// Which infimum: (f3′) over [μ̲, kΦ̃(x)] or (f4′) over [kΦ(x), μ̄].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PsiVariant {
    F3,
    F4,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsiValue {
    pub value: f64,
    /// The t-range was empty; `value` is +∞ by convention.
    pub empty: bool,
}

/// Φ(r) as in the fundamental solution table.
fn phi(params: &FracParams, r: f64) -> f64 {
    match branch_of(params) {
        Branch::PowerNeg => r.powf(params.sigma_star),
        Branch::Log => -r.ln(),
        Branch::PowerPos => -r.powf(params.sigma_star),
    }
}

fn check_variant(params: &FracParams, variant: PsiVariant) -> Result<()> {
    match variant {
        PsiVariant::F3 if params.sigma_star < -1e-14 => Err(FracError::Config("(f3′) needs σ* ≥ 0".into())),
        PsiVariant::F4 if params.sigma_star >= 0.0 => Err(FracError::Config("(f4′) needs σ* < 0".into())),
        _ => Ok(()),
    }
}

fn t_range(r: f64, k: f64, spec: &NonlinearitySpec, params: &FracParams, variant: PsiVariant) -> (f64, f64) {
    match variant {
        PsiVariant::F3 => (spec.mu_lower, -k * phi(params, r)),
        PsiVariant::F4 => (k * phi(params, r), spec.mu_upper),
    }
}

fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if hi <= lo {
        return vec![lo];
    }
    let ratio = hi / lo;
    (0..count).map(|i| if i + 1 == count { hi } else { lo * ratio.powf(i as f64 / (count - 1) as f64) }).collect()
}

/// |x|^{2s} inf_t f(t, x)/t over the variant's range, on a 400-point log grid
/// refined once around the grid minimizer.
pub fn psi_k(r: f64, k: f64, spec: &NonlinearitySpec, params: &FracParams, variant: PsiVariant) -> Result<PsiValue> {
    check_variant(params, variant)?;
    if !(k > 0.0) || !(r > 0.0) {
        return Err(FracError::Config("k and |x| must be positive".into()));
    }
    let (lo, hi) = t_range(r, k, spec, params, variant);
    if !(lo > 0.0) || !(hi >= lo) || !hi.is_finite() {
        return Ok(PsiValue { value: f64::INFINITY, empty: true });
    }
    let ratio = |t: f64| -> Result<f64> {
        let f = spec.eval(t, r, params);
        if !(f > 0.0) || !f.is_finite() {
            return Err(FracError::Precondition(format!("f({t:e}, |x| = {r:e}) = {f} is not positive")));
        }
        Ok(f / t)
    };
    let grid = log_grid(lo, hi, 400);
    let mut best = (f64::INFINITY, 0usize);
    for (i, &t) in grid.iter().enumerate() {
        let v = ratio(t)?;
        if v < best.0 {
            best = (v, i);
        }
    }
    if grid.len() > 1 {
        let a = grid[best.1.saturating_sub(1)];
        let b = grid[(best.1 + 1).min(grid.len() - 1)];
        for t in log_grid(a, b, 400) {
            best.0 = best.0.min(ratio(t)?);
        }
    }
    Ok(PsiValue { value: r.powf(2.0 * params.s) * best.0, empty: false })
}

/// Radius past which the t-range of the variant is nonempty (never below r0).
fn first_nonempty_radius(k: f64, spec: &NonlinearitySpec, params: &FracParams, variant: PsiVariant) -> f64 {
    let sigma = params.sigma_star;
    let r = match (variant, branch_of(params)) {
        (PsiVariant::F3, Branch::Log) => (spec.mu_lower / k).exp(),
        (PsiVariant::F3, _) => (spec.mu_lower / k).powf(1.0 / sigma),
        (PsiVariant::F4, _) => (spec.mu_upper / k).powf(1.0 / sigma),
    };
    r.max(spec.r0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HkEstimate {
    pub k: f64,
    /// (|x|, Ψ_k(x)) samples.
    pub samples: Vec<Sample>,
    pub trend: Trend,
    pub limit: Limit,
    /// Point estimate of the liminf: +∞, 0, the plateau, or the sample minimum when unknown.
    pub value: f64,
    /// Every sampled range was empty.
    pub all_empty: bool,
}

/// liminf_{|x|→∞} Ψ_k(x) from |x| = 10^j R, j = 1..6, where R is the larger of
/// r0 and the radius at which the t-range becomes nonempty.
pub fn h_of_k(k: f64, spec: &NonlinearitySpec, params: &FracParams, variant: PsiVariant) -> Result<HkEstimate> {
    check_variant(params, variant)?;
    spec.validate(params)?;
    let base = first_nonempty_radius(k, spec, params, variant);
    let radii: Vec<f64> = (1..=6).map(|j| base * 10f64.powi(j)).collect();
    let mut samples = Vec::with_capacity(radii.len());
    let mut all_empty = true;
    for &r in &radii {
        let p = if r.is_finite() { psi_k(r, k, spec, params, variant)? } else { PsiValue { value: f64::INFINITY, empty: true } };
        all_empty &= p.empty;
        samples.push(Sample { param: r, value: p.value });
    }
    if all_empty {
        return Ok(HkEstimate { k, samples, trend: Trend::Plateau, limit: Limit::Infinite, value: f64::INFINITY, all_empty });
    }
    let values: Vec<f64> = samples.iter().map(|p| p.value).collect();
    let ts = classify(&values);
    let value = match ts.limit {
        Limit::Infinite => f64::INFINITY,
        Limit::Zero => 0.0,
        Limit::Finite(v) => v,
        Limit::Unknown => values.iter().copied().fold(f64::INFINITY, f64::min),
    };
    Ok(HkEstimate { k, samples, trend: ts.trend, limit: ts.limit, value, all_empty })
}

fn divergence_check(
    condition: &str,
    ks: &[f64],
    spec: &NonlinearitySpec,
    params: &FracParams,
    variant: PsiVariant,
) -> Result<HypothesisReport> {
    let details = ks.par_iter().map(|&k| h_of_k(k, spec, params, variant)).collect::<Result<Vec<_>>>()?;
    let mut notes = spec.jump_notes(params);
    for d in &details {
        if d.all_empty {
            notes.push(format!("k = {:e}: every sampled range is empty, h = +∞ by convention", d.k));
        }
    }
    let samples: Vec<Sample> = details.iter().map(|d| Sample { param: d.k, value: d.value }).collect();
    let values: Vec<f64> = samples.iter().map(|p| p.value).collect();
    let ts = classify(&values);
    let nonpositive: Vec<f64> = details.iter().filter(|d| d.limit == Limit::Zero || d.value <= 0.0).map(|d| d.k).collect();
    let unknown: Vec<f64> = details.iter().filter(|d| d.limit == Limit::Unknown).map(|d| d.k).collect();
    let verdict = if !nonpositive.is_empty() {
        notes.push(format!("liminf is zero for k in {nonpositive:?}"));
        HypothesisVerdict::Fails
    } else if !unknown.is_empty() {
        notes.push(format!("liminf not resolved for k in {unknown:?}"));
        HypothesisVerdict::Inconclusive
    } else {
        match (ts.trend, ts.limit) {
            (Trend::Increasing, Limit::Infinite) => HypothesisVerdict::Holds,
            (Trend::Plateau, _) | (Trend::Decreasing, _) => HypothesisVerdict::Fails,
            _ => HypothesisVerdict::Inconclusive,
        }
    };
    let plateau = match (ts.trend, ts.limit) {
        (Trend::Plateau, Limit::Finite(c)) => Some(c),
        _ => None,
    };
    Ok(HypothesisReport {
        condition: condition.into(),
        parameter: "k".into(),
        samples,
        trend: ts.trend,
        limit: ts.limit,
        plateau,
        verdict,
        details,
        notes,
    })
}

fn with_sensitivity(
    report: Result<HypothesisReport>,
    spec: &NonlinearitySpec,
    rerun: impl Fn(&NonlinearitySpec) -> Result<HypothesisReport>,
    set_mu: impl Fn(&mut NonlinearitySpec, f64),
) -> Result<HypothesisReport> {
    let mut report = report?;
    for factor in [0.5, 2.0] {
        let mut alt = spec.clone();
        set_mu(&mut alt, factor);
        let v = rerun(&alt)?.verdict;
        report.notes.push(format!("μ scaled by {factor}: {}", v.as_str()));
    }
    Ok(report)
}

/// (f3′): h̃(k) for k = 2^{−j}, j = 0..12, must be positive and blow up as k → 0.
pub fn check_f3prime(spec: &NonlinearitySpec, params: &FracParams) -> Result<HypothesisReport> {
    check_variant(params, PsiVariant::F3)?;
    let ks: Vec<f64> = (0..=12).map(|j| 0.5f64.powi(j)).collect();
    let run = |sp: &NonlinearitySpec| divergence_check("f3prime", &ks, sp, params, PsiVariant::F3);
    with_sensitivity(run(spec), spec, run, |sp, f| sp.mu_lower *= f)
}

/// (f4′): h(k) for k = 2^j, j = 0..12, must be positive and blow up as k → ∞.
pub fn check_f4prime(spec: &NonlinearitySpec, params: &FracParams) -> Result<HypothesisReport> {
    check_variant(params, PsiVariant::F4)?;
    let ks: Vec<f64> = (0..=12).map(|j| 2f64.powi(j)).collect();
    let run = |sp: &NonlinearitySpec| divergence_check("f4prime", &ks, sp, params, PsiVariant::F4);
    with_sensitivity(run(spec), spec, run, |sp, f| sp.mu_upper *= f)
}

/// Default compact t-boxes for (f2′).
pub fn f2prime_boxes() -> Vec<(f64, f64)> {
    vec![(1e-3, 1e-2), (0.1, 1.0), (0.5, 2.0), (10.0, 100.0)]
}

/// (f2′): |x|^{2s} min_{t∈[a,b]} f(t, x) must grow without bound for every box.
pub fn check_f2prime(spec: &NonlinearitySpec, params: &FracParams) -> Result<HypothesisReport> {
    spec.validate(params)?;
    let radii: Vec<f64> = (1..=6).map(|j| spec.r0 * 10f64.powi(j)).collect();
    let mut notes = Vec::new();
    let mut verdict = HypothesisVerdict::Holds;
    let mut all_samples = Vec::new();
    let mut last = TrendSummary { trend: Trend::Irregular, limit: Limit::Unknown };
    for (a, b) in f2prime_boxes() {
        let grid = log_grid(a, b, 400);
        let samples: Vec<Sample> = radii
            .iter()
            .map(|&r| {
                let m = grid.iter().map(|&t| spec.eval(t, r, params)).fold(f64::INFINITY, f64::min);
                Sample { param: r, value: r.powf(2.0 * params.s) * m }
            })
            .collect();
        let values: Vec<f64> = samples.iter().map(|p| p.value).collect();
        let ts = classify(&values);
        let v = match (ts.trend, ts.limit) {
            (Trend::Increasing, Limit::Infinite) => HypothesisVerdict::Holds,
            (_, Limit::Zero) | (Trend::Plateau, _) => HypothesisVerdict::Fails,
            _ => HypothesisVerdict::Inconclusive,
        };
        if v != HypothesisVerdict::Holds {
            notes.push(format!("box [{a}, {b}]: {:?}, {}", ts.trend, v.as_str()));
        }
        verdict = match (verdict, v) {
            (HypothesisVerdict::Fails, _) | (_, HypothesisVerdict::Fails) => HypothesisVerdict::Fails,
            (HypothesisVerdict::Inconclusive, _) | (_, HypothesisVerdict::Inconclusive) => HypothesisVerdict::Inconclusive,
            _ => HypothesisVerdict::Holds,
        };
        last = ts;
        all_samples.extend(samples);
    }
    Ok(HypothesisReport {
        condition: "f2prime".into(),
        parameter: "|x|".into(),
        samples: all_samples,
        trend: last.trend,
        limit: last.limit,
        plateau: None,
        verdict,
        details: Vec::new(),
        notes,
    })
}

/// Least-squares slope of log h against log k over finite positive samples.
pub fn fit_k_exponent(report: &HypothesisReport) -> Option<f64> {
    let pts: Vec<(f64, f64)> = report
        .samples
        .iter()
        .filter(|p| p.value.is_finite() && p.value > 0.0 && p.param > 0.0)
        .map(|p| (p.param.ln(), p.value.ln()))
        .collect();
    if pts.len() < 3 {
        return None;
    }
    let m = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), p| (a + p.0, b + p.1));
    let (mx, my) = (sx / m, sy / m);
    let (sxy, sxx) = pts.iter().fold((0.0, 0.0), |(a, b), p| (a + (p.0 - mx) * (p.1 - my), b + (p.0 - mx) * (p.0 - mx)));
    if sxx == 0.0 {
        return None;
    }
    Some(sxy / sxx)
}

/// A separable nonlinearity whose k-exponent is −1 + α̃*.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentPreset {
    pub name: String,
    pub n: usize,
    pub s: f64,
    pub gamma: f64,
    pub variant: PsiVariant,
    pub spec: NonlinearitySpec,
}

/// g(t) = t^{α̃*} in the (f3′) and (f4′) regimes.
pub fn exponent_presets() -> Result<Vec<ExponentPreset>> {
    let mut out = Vec::new();
    for (n, s, gamma, variant) in
        [(1, 0.75, 0.0, PsiVariant::F3), (1, 0.75, 1.0, PsiVariant::F3), (3, 0.5, 0.0, PsiVariant::F4), (2, 0.4, 0.5, PsiVariant::F4)]
    {
        let params = FracParams::new(n, s)?;
        let a = alpha_tilde_star(&params, gamma)?;
        let spec = NonlinearitySpec::separable(gamma, GFunction::Power { a: 1.0, p: a }, 2.0);
        out.push(ExponentPreset { name: format!("n{n}_s{s}_gamma{gamma}"), n, s, gamma, variant, spec });
    }
    Ok(out)
}
