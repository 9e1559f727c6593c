//! Sampled certification of the barrier estimate chains.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{FracError, Result};
use crate::frackernel::{eval_radial, FracParams, QuadSpec};
use crate::fundamentals::{log_interior, make_barrier, BarrierConstants, BarrierId};
use crate::profile::RadialProfile;

/// Every estimate chain that can be verified.
#[allow(non_camel_case_types)]
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ChainId {
    CA3D,
    CA3PR,
    LVC,
    CA1_00,
    CAR3PP,
    CAR3PR,
    NBBN,
    CA1F,
    CA1AA,
    VASK,
    CA3Q,
    CA3P,
    NITU,
    CA10,
    CA10L,
    RI,
}

/// Radial law a chain's values are compared against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum RateDescriptor {
    /// r^exponent.
    Power { exponent: f64 },
    /// 1/r.
    InvR,
    /// log(2r)/r.
    LogTwoROverR,
    /// r^{-2s}.
    InvR2s,
    /// (|x| − 1)^{-(n+2s)}.
    PoleAtUnit,
    /// (1 + |x|)^{-(n+2s)}.
    ShiftedUnit,
    /// r^{2s} (|x| − r)^{-(n+2s)}.
    PoleAtR,
    /// r^{2s} (|x| + 2r)^{-(n+2s)}.
    ShiftedTwoR,
}

impl RateDescriptor {
    /// Value of the law at field point |x| for outer radius r.
    pub fn eval(&self, x: f64, r: f64, params: &FracParams) -> f64 {
        let (n, s) = (params.n as f64, params.s);
        match *self {
            RateDescriptor::Power { exponent } => r.powf(exponent),
            RateDescriptor::InvR => 1.0 / r,
            RateDescriptor::LogTwoROverR => (2.0 * r).ln() / r,
            RateDescriptor::InvR2s => r.powf(-2.0 * s),
            RateDescriptor::PoleAtUnit => (x - 1.0).powf(-n - 2.0 * s),
            RateDescriptor::ShiftedUnit => (1.0 + x).powf(-n - 2.0 * s),
            RateDescriptor::PoleAtR => r.powf(2.0 * s) * (x - r).powf(-n - 2.0 * s),
            RateDescriptor::ShiftedTwoR => r.powf(2.0 * s) * (x + 2.0 * r).powf(-n - 2.0 * s),
        }
    }

    /// True when the law depends on r only.
    pub fn is_radius_law(&self) -> bool {
        matches!(self, RateDescriptor::Power { .. } | RateDescriptor::InvR | RateDescriptor::LogTwoROverR | RateDescriptor::InvR2s)
    }
}

/// Sign of the bound constant: value ≤ C·rate or value ≤ −C·rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundSign {
    Positive,
    Negative,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "relation", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Expected {
    SignNegative,
    UpperBound { rate: RateDescriptor, sign: BoundSign },
}

impl ChainId {
    pub const ALL: [ChainId; 16] = [
        ChainId::CA3D,
        ChainId::CA3PR,
        ChainId::LVC,
        ChainId::CA1_00,
        ChainId::CAR3PP,
        ChainId::CAR3PR,
        ChainId::NBBN,
        ChainId::CA1F,
        ChainId::CA1AA,
        ChainId::VASK,
        ChainId::CA3Q,
        ChainId::CA3P,
        ChainId::NITU,
        ChainId::CA10,
        ChainId::CA10L,
        ChainId::RI,
    ];

    pub fn name(&self) -> &'static str {
        use ChainId::*;
        match self {
            CA3D => "CA3D",
            CA3PR => "CA3PR",
            LVC => "LVC",
            CA1_00 => "CA1_00",
            CAR3PP => "CAR3PP",
            CAR3PR => "CAR3PR",
            NBBN => "NBBN",
            CA1F => "CA1F",
            CA1AA => "CA1AA",
            VASK => "VASK",
            CA3Q => "CA3Q",
            CA3P => "CA3P",
            NITU => "NITU",
            CA10 => "CA10",
            CA10L => "CA10L",
            RI => "RI",
        }
    }

    pub fn parse(s: &str) -> Option<ChainId> {
        let key = s.to_ascii_uppercase().replace('-', "_");
        ChainId::ALL.iter().copied().find(|c| c.name() == key)
    }

    /// Barrier whose operator the chain bounds.
    pub fn barrier(&self) -> BarrierId {
        use ChainId::*;
        match self {
            CA3D => BarrierId::VTilde,
            CA3PR => BarrierId::GTilde,
            LVC => BarrierId::HHat,
            CA1_00 => BarrierId::WCheck,
            CAR3PP => BarrierId::VCheck,
            CAR3PR => BarrierId::GCheck,
            NBBN => BarrierId::HCheck,
            CA1F => BarrierId::PsiHat,
            CA1AA => BarrierId::GammaTilde,
            VASK => BarrierId::PsiHatGamma,
            CA3Q => BarrierId::Psi,
            CA3P => BarrierId::G,
            NITU => BarrierId::PsiG,
            CA10 => BarrierId::WHat,
            CA10L => BarrierId::GammaHat,
            RI => BarrierId::WGamma,
        }
    }

    pub fn expected(&self) -> Expected {
        use ChainId::*;
        let ub = |rate, sign| Expected::UpperBound { rate, sign };
        match self {
            LVC | CA1_00 | NBBN | VASK | NITU | RI => Expected::SignNegative,
            CA3D => ub(RateDescriptor::InvR, BoundSign::Positive),
            CA3PR => ub(RateDescriptor::InvR, BoundSign::Negative),
            CAR3PP => ub(RateDescriptor::LogTwoROverR, BoundSign::Positive),
            CAR3PR => ub(RateDescriptor::LogTwoROverR, BoundSign::Negative),
            CA1F => ub(RateDescriptor::PoleAtUnit, BoundSign::Positive),
            CA1AA => ub(RateDescriptor::ShiftedUnit, BoundSign::Negative),
            CA3Q => ub(RateDescriptor::InvR2s, BoundSign::Positive),
            CA3P => ub(RateDescriptor::InvR2s, BoundSign::Negative),
            CA10 => ub(RateDescriptor::PoleAtR, BoundSign::Positive),
            CA10L => ub(RateDescriptor::ShiftedTwoR, BoundSign::Negative),
        }
    }

    /// Sign chain whose free constant this chain's barriers use.
    pub fn sign_chain(&self) -> ChainId {
        use ChainId::*;
        match self {
            CA3D | CA3PR | LVC => LVC,
            CA1_00 => CA1_00,
            CAR3PP | CAR3PR | NBBN => NBBN,
            CA1F | CA1AA | VASK => VASK,
            CA3Q | CA3P | NITU => NITU,
            CA10 | CA10L | RI => RI,
        }
    }

    /// Default (n, s) for the chain's branch.
    pub fn preset(&self) -> FracParams {
        use ChainId::*;
        let (n, s) = match self.sign_chain() {
            LVC => (1, 0.75),
            CA1_00 | NBBN => (1, 0.5),
            _ => (3, 0.5),
        };
        FracParams::new(n, s).expect("preset parameters are valid")
    }

    /// Open radial region (a, b) on which the chain's claim is sampled.
    pub fn region(&self, k: &BarrierConstants) -> (f64, f64) {
        use ChainId::*;
        match self {
            CA3D | CA3PR | LVC | CAR3PP | CAR3PR | NBBN | CA3Q | CA3P | NITU => (k.r0, k.r),
            CA1_00 => (k.r, 100.0 * k.r),
            CA1F | CA1AA | VASK => (k.big_r0, 100.0 * k.big_r0),
            CA10 | CA10L => (2.0 * k.r, 200.0 * k.r),
            RI => {
                let a = k.big_r0.max(2.0 * k.r);
                (a, 100.0 * a)
            }
        }
    }
}

/// Sampling policy for chain verification.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplePolicy {
    /// Number of log-spaced radii inside the region.
    pub points: usize,
    /// Optional override of the chain's region.
    pub region: Option<(f64, f64)>,
}

impl Default for SamplePolicy {
    fn default() -> Self {
        SamplePolicy { points: 200, region: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub x: f64,
    pub value: f64,
    pub err: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl Verdict {
    /// Worst of two verdicts: FAIL beats INCONCLUSIVE beats PASS.
    pub fn combine(self, other: Verdict) -> Verdict {
        use Verdict::*;
        match (self, other) {
            (Fail, _) | (_, Fail) => Fail,
            (Inconclusive, _) | (_, Inconclusive) => Inconclusive,
            _ => Pass,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Inconclusive => "INCONCLUSIVE",
        }
    }
}

/// Two-radius constant stability for upper-bound chains.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundFit {
    /// Fitted constant on the primary region.
    pub constant: f64,
    /// Fitted constant with r (and the exterior radius) doubled.
    pub constant_doubled: f64,
    /// constant / constant_doubled.
    pub ratio: f64,
    /// Log-log slope of max |value| between r and 2r.
    pub exponent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub chain: ChainId,
    pub params: FracParams,
    pub constants: BarrierConstants,
    pub region: (f64, f64),
    pub samples: Vec<Sample>,
    /// Smallest slack of the expected relation after subtracting 2× the error.
    pub worst_margin: f64,
    pub fit: Option<BoundFit>,
    pub verdict: Verdict,
    pub notes: Vec<String>,
}

/// Apply (-Δ)^s to a profile at log-spaced radii of (a, b), in parallel.
pub fn sample_operator(
    profile: &RadialProfile,
    region: (f64, f64),
    points: usize,
    params: &FracParams,
    quad: &QuadSpec,
) -> Result<Vec<Sample>> {
    let (a, b) = region;
    if points == 0 || !(a > 0.0 && b > a) {
        return Err(FracError::Config(format!("empty sampling region ({a}, {b})")));
    }
    log_interior(a, b, points)
        .par_iter()
        .map(|&x| {
            let v = eval_radial(profile, x, params, quad)?;
            Ok(Sample { x, value: v.value, err: v.error_estimate, converged: v.converged })
        })
        .collect()
}

fn unconverged_fraction(samples: &[Sample]) -> f64 {
    samples.iter().filter(|s| !s.converged).count() as f64 / samples.len() as f64
}

/// Sign verdict: every value certifiably below zero.
fn sign_verdict(samples: &[Sample]) -> (Verdict, f64) {
    let mut verdict = Verdict::Pass;
    let mut worst = f64::INFINITY;
    for s in samples {
        let margin = -s.value - 2.0 * s.err;
        worst = worst.min(margin);
        let v = if margin > 0.0 && s.converged {
            Verdict::Pass
        } else if s.value - 2.0 * s.err > 0.0 {
            Verdict::Fail
        } else {
            Verdict::Inconclusive
        };
        verdict = verdict.combine(v);
    }
    (verdict, worst)
}

/// Extremal ratio of value to the rate law over the samples.
fn bound_constant(samples: &[Sample], rate: &RateDescriptor, r: f64, sign: BoundSign, params: &FracParams) -> f64 {
    let ratios = samples.iter().map(|s| s.value / rate.eval(s.x, r, params));
    match sign {
        BoundSign::Positive => ratios.fold(f64::NEG_INFINITY, f64::max),
        BoundSign::Negative => ratios.map(|q| -q).fold(f64::INFINITY, f64::min),
    }
}

/// Verify one chain on its sampled region.
pub fn verify_chain(
    chain: ChainId,
    params: &FracParams,
    constants: &BarrierConstants,
    sample: &SamplePolicy,
    quad: &QuadSpec,
) -> Result<VerificationReport> {
    quad.validate()?;
    let profile = make_barrier(chain.barrier(), constants, params)?;
    let region = sample.region.unwrap_or_else(|| chain.region(constants));
    let samples = sample_operator(&profile, region, sample.points, params, quad)?;
    let mut notes = Vec::new();
    let frac_bad = unconverged_fraction(&samples);
    if frac_bad > 0.0 {
        notes.push(format!("{:.1}% of points did not meet the quadrature tolerance", 100.0 * frac_bad));
    }
    let (mut verdict, worst_margin, fit) = match chain.expected() {
        Expected::SignNegative => {
            let (v, m) = sign_verdict(&samples);
            (v, m, None)
        }
        Expected::UpperBound { rate, sign } => {
            let mut k2 = *constants;
            k2.r *= 2.0;
            k2.big_r0 *= 2.0;
            let region2 = match sample.region {
                Some((a, b)) => (2.0 * a, 2.0 * b),
                None => chain.region(&k2),
            };
            let profile2 = make_barrier(chain.barrier(), &k2, params)?;
            let samples2 = sample_operator(&profile2, region2, sample.points, params, quad)?;
            let c1 = bound_constant(&samples, &rate, constants.r, sign, params);
            let c2 = bound_constant(&samples2, &rate, k2.r, sign, params);
            let max_abs = |ss: &[Sample]| ss.iter().map(|s| s.value.abs()).fold(0.0, f64::max);
            let exponent = (max_abs(&samples2) / max_abs(&samples)).ln() / 2f64.ln();
            let ratio = c1 / c2;
            let fit = BoundFit { constant: c1, constant_doubled: c2, ratio, exponent };
            let stable = (ratio - 1.0).abs() <= 0.3;
            match sign {
                BoundSign::Positive => {
                    let c_ref = 1.3 * c1.max(c2).max(0.0);
                    let margin = samples
                        .iter()
                        .map(|s| c_ref * rate.eval(s.x, constants.r, params) - s.value - 2.0 * s.err)
                        .fold(f64::INFINITY, f64::min);
                    let v = if c1 <= 0.0 && c2 <= 0.0 {
                        notes.push("values nonpositive, bound holds with zero constant".into());
                        Verdict::Pass
                    } else if c1 > 0.0 && c2 > 0.0 && stable {
                        Verdict::Pass
                    } else {
                        Verdict::Fail
                    };
                    (v, margin, Some(fit))
                }
                BoundSign::Negative => {
                    let (sv, margin) = sign_verdict(&samples);
                    let (sv2, _) = sign_verdict(&samples2);
                    let v = if c1 > 0.0 && c2 > 0.0 && stable { sv.combine(sv2) } else { Verdict::Fail.combine(sv) };
                    (v, margin, Some(fit))
                }
            }
        }
    };
    if frac_bad > 0.05 && verdict == Verdict::Pass {
        verdict = Verdict::Inconclusive;
    }
    Ok(VerificationReport { chain, params: *params, constants: *constants, region, samples, worst_margin, fit, verdict, notes })
}

/// Result of a log-log regression.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    /// Geometric mean of |value| / law(r).
    pub constant: f64,
    /// Least-squares slope of log|value| against log r.
    pub slope: f64,
    /// RMS residual of that regression.
    pub residual: f64,
    /// Least-squares slope of log law(r) over the same radii.
    pub law_slope: f64,
}

fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    let icpt = my - slope * mx;
    let rss: f64 = xs.iter().zip(ys).map(|(x, y)| (y - icpt - slope * x).powi(2)).sum();
    (slope, icpt, (rss / m).sqrt())
}

/// Fit per-radius values against a radius law in log coordinates.
pub fn fit_rate(values: &[(f64, f64)], rate: &RateDescriptor, params: &FracParams) -> Result<RateFit> {
    if values.len() < 4 {
        return Err(FracError::Config("rate fits need at least 4 radii".into()));
    }
    let rmin = values.iter().map(|v| v.0).fold(f64::INFINITY, f64::min);
    let rmax = values.iter().map(|v| v.0).fold(0.0, f64::max);
    if !(rmin > 0.0 && rmax >= 10.0 * rmin) {
        return Err(FracError::Config("rate fits need radii spanning a decade".into()));
    }
    if !rate.is_radius_law() {
        return Err(FracError::Config("rate fits need a law depending on r only".into()));
    }
    let lx: Vec<f64> = values.iter().map(|v| v.0.ln()).collect();
    let ly: Vec<f64> = values.iter().map(|v| v.1.abs().ln()).collect();
    if ly.iter().any(|y| !y.is_finite()) {
        return Err(FracError::Degenerate("zero value in rate fit".into()));
    }
    let law: Vec<f64> = values.iter().map(|v| rate.eval(v.0, v.0, params).ln()).collect();
    let (slope, _, residual) = least_squares(&lx, &ly);
    let (law_slope, _, _) = least_squares(&lx, &law);
    let constant = (ly.iter().zip(&law).map(|(y, l)| y - l).sum::<f64>() / ly.len() as f64).exp();
    Ok(RateFit { constant, slope, residual, law_slope })
}

/// Max |(-Δ)^s barrier| over the chain region for each outer radius.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateScan {
    pub chain: ChainId,
    pub radii: Vec<f64>,
    pub maxima: Vec<f64>,
    pub errors: Vec<f64>,
    pub fit: RateFit,
}

/// Scan a rate chain over outer radii with fixed r₀ and fit the law.
pub fn rate_scan(chain: ChainId, params: &FracParams, r0: f64, radii: &[f64], points: usize, quad: &QuadSpec) -> Result<RateScan> {
    let rate = match chain.expected() {
        Expected::UpperBound { rate, .. } if rate.is_radius_law() => rate,
        _ => return Err(FracError::Config(format!("chain {} has no radius law", chain.name()))),
    };
    let mut maxima = Vec::with_capacity(radii.len());
    let mut errors = Vec::with_capacity(radii.len());
    for &r in radii {
        let k = crate::fundamentals::choose_constants(chain, params, r0, Some(r), quad)?;
        let profile = make_barrier(chain.barrier(), &k, params)?;
        let samples = sample_operator(&profile, chain.region(&k), points, params, quad)?;
        let best = samples.iter().max_by(|a, b| a.value.abs().total_cmp(&b.value.abs())).expect("nonempty samples");
        maxima.push(best.value.abs());
        errors.push(best.err);
    }
    let pairs: Vec<(f64, f64)> = radii.iter().copied().zip(maxima.iter().copied()).collect();
    let fit = fit_rate(&pairs, &rate, params)?;
    Ok(RateScan { chain, radii: radii.to_vec(), maxima, errors, fit })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_chain_has_one_barrier_and_parses() {
        for c in ChainId::ALL {
            assert_eq!(ChainId::parse(c.name()), Some(c));
            let k = BarrierConstants::with_radii(2.0, 20.0);
            assert!(make_barrier(c.barrier(), &k, &c.preset()).is_ok(), "{c:?}");
        }
    }

    #[test]
    fn fit_exact_inverse_law() {
        let p = FracParams::new(1, 0.5).unwrap();
        let v: Vec<(f64, f64)> = [10.0, 30.0, 100.0, 300.0, 1000.0].iter().map(|&r| (r, 3.0 / r)).collect();
        let f = fit_rate(&v, &RateDescriptor::InvR, &p).unwrap();
        assert!((f.constant - 3.0).abs() < 1e-12);
        assert!((f.slope + 1.0).abs() < 1e-12);
        assert!(f.residual < 1e-12);
    }

    #[test]
    fn fit_log_law_slope() {
        let p = FracParams::new(1, 0.5).unwrap();
        let radii: Vec<f64> = (0..9).map(|i| 10f64 * 10f64.powf(i as f64 / 4.0)).collect();
        let v: Vec<(f64, f64)> = radii.iter().map(|&r| (r, (2.0 * r).ln() / r)).collect();
        let f = fit_rate(&v, &RateDescriptor::LogTwoROverR, &p).unwrap();
        let mid = 100.0f64;
        let dlog = -1.0 + 1.0 / (2.0 * mid).ln();
        assert!((f.slope - dlog).abs() < 0.05, "{} vs {}", f.slope, dlog);
        assert!((f.constant - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fit_rejects_short_input() {
        let p = FracParams::new(1, 0.5).unwrap();
        let v = vec![(1.0, 1.0), (2.0, 0.5), (3.0, 0.3)];
        assert!(fit_rate(&v, &RateDescriptor::InvR, &p).is_err());
    }

    #[test]
    fn constant_profile_gives_zero() {
        let p = FracParams::new(1, 0.75).unwrap();
        let c = RadialProfile::single("one", vec![crate::profile::Term::constant(4.0)]);
        let s = sample_operator(&c, (2.0, 20.0), 16, &p, &QuadSpec::default()).unwrap();
        for x in s {
            assert!(x.value.abs() < 1e-10, "{x:?}");
        }
    }

    #[test]
    fn empty_region_is_config_error() {
        let p = FracParams::new(1, 0.75).unwrap();
        let k = BarrierConstants::with_radii(2.0, 20.0);
        let pol = SamplePolicy { points: 10, region: Some((5.0, 5.0)) };
        assert!(matches!(verify_chain(ChainId::LVC, &p, &k, &pol, &QuadSpec::default()), Err(FracError::Config(_))));
    }

    #[test]
    fn verdict_combination() {
        use Verdict::*;
        assert_eq!(Pass.combine(Inconclusive), Inconclusive);
        assert_eq!(Inconclusive.combine(Fail), Fail);
        assert_eq!(Pass.combine(Pass), Pass);
    }
}
