//! Fundamental solutions and the cut barrier catalog.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{FracError, Result};
use crate::estimates::ChainId;
use crate::frackernel::{eval_radial, FracParams, QuadSpec};
pub use crate::profile::{Jump, RadialProfile, Term};

/// Which fundamental solution: Φ itself or Φ̃ = −Φ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SignVariant {
    Phi,
    PhiTilde,
}

/// Branch of Φ selected by the sign of σ* = −n + 2s.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    /// σ* < 0: Φ = r^{σ*}.
    PowerNeg,
    /// σ* = 0: Φ = −log r.
    Log,
    /// σ* > 0: Φ = −r^{σ*}.
    PowerPos,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FundamentalSolution {
    pub params: FracParams,
    pub branch: Branch,
    pub sign_variant: SignVariant,
}

impl FundamentalSolution {
    pub fn new(params: FracParams, sign_variant: SignVariant) -> Self {
        FundamentalSolution { params, branch: branch_of(&params), sign_variant }
    }

    pub fn value(&self, r: f64) -> f64 {
        self.profile().value(r)
    }

    pub fn profile(&self) -> RadialProfile {
        make_fundamental(&self.params, self.sign_variant)
    }
}

pub fn branch_of(params: &FracParams) -> Branch {
    if params.sigma_star.abs() < 1e-14 {
        Branch::Log
    } else if params.sigma_star < 0.0 {
        Branch::PowerNeg
    } else {
        Branch::PowerPos
    }
}

/// Φ or Φ̃ as a single-piece profile.
pub fn make_fundamental(params: &FracParams, sign_variant: SignVariant) -> RadialProfile {
    let sign = match sign_variant {
        SignVariant::Phi => 1.0,
        SignVariant::PhiTilde => -1.0,
    };
    let sigma = params.sigma_star;
    let (name, term) = match branch_of(params) {
        Branch::PowerNeg => ("phi", Term::Power { a: sign, b: sigma }),
        Branch::Log => ("phi", Term::Log { a: -sign }),
        Branch::PowerPos => ("phi", Term::Power { a: -sign, b: sigma }),
    };
    let name = if sign_variant == SignVariant::PhiTilde { "phi_tilde" } else { name };
    RadialProfile::single(name, vec![term])
}

/// Identifiers for every barrier in the catalog.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum BarrierId {
    /// ṽ = r₀^{−σ*}|x|^{σ*} − 1 on |x| < 2r, 0 beyond (σ* > 0).
    VTilde,
    /// g̃ = C̃|x|^{σ*} on 3r/2 < |x| < 2r.
    GTilde,
    /// ĥ = ṽ + g̃.
    HHat,
    /// w̌ = −log|x| on |x| > r (σ* = 0).
    WCheck,
    /// v̌ = log|x| on |x| < 2r.
    VCheck,
    /// ǧ = Č log|x| on 3r/2 < |x| < 2r.
    GCheck,
    /// ȟ = v̌ + ǧ.
    HCheck,
    /// Ψ̂ = 1 on |x| ≤ 1, |x|^{σ*} beyond (σ* < 0).
    PsiHat,
    /// γ̃ = indicator of the unit ball.
    GammaTilde,
    /// Ψ̂_γ = Ψ̂ + κ γ̃ with κ the γ̃ weight.
    PsiHatGamma,
    /// Ψ = 1 − r₀^{−σ*}|x|^{σ*} on |x| < 2r.
    Psi,
    /// g = C_g on 3r/2 < |x| < 2r.
    G,
    /// Ψ_g = (Ψ + g)/(1 + C_g).
    PsiG,
    /// ŵ = |x|^{σ*} on |x| ≥ r.
    WHat,
    /// γ̂ = μ|x|^{σ*} on r ≤ |x| ≤ 3r/2.
    GammaHat,
    /// w_γ = ŵ + γ̂.
    WGamma,
}

impl BarrierId {
    pub const ALL: [BarrierId; 16] = [
        BarrierId::VTilde,
        BarrierId::GTilde,
        BarrierId::HHat,
        BarrierId::WCheck,
        BarrierId::VCheck,
        BarrierId::GCheck,
        BarrierId::HCheck,
        BarrierId::PsiHat,
        BarrierId::GammaTilde,
        BarrierId::PsiHatGamma,
        BarrierId::Psi,
        BarrierId::G,
        BarrierId::PsiG,
        BarrierId::WHat,
        BarrierId::GammaHat,
        BarrierId::WGamma,
    ];

    fn required_branch(&self) -> Branch {
        use BarrierId::*;
        match self {
            VTilde | GTilde | HHat => Branch::PowerPos,
            WCheck | VCheck | GCheck | HCheck => Branch::Log,
            _ => Branch::PowerNeg,
        }
    }

    pub fn name(&self) -> &'static str {
        use BarrierId::*;
        match self {
            VTilde => "v_tilde",
            GTilde => "g_tilde",
            HHat => "h_hat",
            WCheck => "w_check",
            VCheck => "v_check",
            GCheck => "g_check",
            HCheck => "h_check",
            PsiHat => "psi_hat",
            GammaTilde => "gamma_tilde",
            PsiHatGamma => "psi_hat_gamma",
            Psi => "psi",
            G => "g",
            PsiG => "psi_g",
            WHat => "w_hat",
            GammaHat => "gamma_hat",
            WGamma => "w_gamma",
        }
    }

    pub fn parse(s: &str) -> Option<BarrierId> {
        let key = s.to_ascii_lowercase().replace('-', "_");
        BarrierId::ALL.iter().copied().find(|b| b.name() == key)
    }
}

/// Free constants of the barrier constructions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BarrierConstants {
    /// C̃ multiplying g̃.
    pub c_tilde_g: f64,
    /// Č multiplying ǧ.
    pub c_check_g: f64,
    /// Plateau height C_g of g.
    pub c_g: f64,
    /// μ multiplying γ̂.
    pub mu: f64,
    /// Weight κ of γ̃ in Ψ̂_γ.
    pub gamma_weight: f64,
    pub r0: f64,
    pub r: f64,
    /// Radius beyond which exterior sign claims are asserted.
    pub big_r0: f64,
}

impl BarrierConstants {
    /// Unit constants with the default outer radius r = 10 r₀.
    pub fn unit(r0: f64) -> Self {
        BarrierConstants::with_radii(r0, 10.0 * r0)
    }

    pub fn with_radii(r0: f64, r: f64) -> Self {
        BarrierConstants { c_tilde_g: 1.0, c_check_g: 1.0, c_g: 1.0, mu: 1.0, gamma_weight: 1.0, r0, r, big_r0: 10.0 * r0 }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.c_tilde_g, self.c_check_g, self.c_g, self.mu, self.gamma_weight, self.big_r0];
        if all.iter().any(|c| !(c.is_finite() && *c > 0.0)) {
            return Err(FracError::Config("barrier constants must be positive".into()));
        }
        if !(self.r0 > 1.0) {
            return Err(FracError::Config(format!("base radius r0 = {} must exceed 1", self.r0)));
        }
        if !(self.r > self.r0) {
            return Err(FracError::Config(format!("outer radius r = {} must exceed r0 = {}", self.r, self.r0)));
        }
        Ok(())
    }
}

/// Build the requested barrier for the given constants.
pub fn make_barrier(id: BarrierId, k: &BarrierConstants, params: &FracParams) -> Result<RadialProfile> {
    k.validate()?;
    let branch = branch_of(params);
    if branch != id.required_branch() {
        return Err(FracError::Config(format!(
            "barrier {} needs the {:?} branch, (n, s) = ({}, {}) gives {:?}",
            id.name(),
            id.required_branch(),
            params.n,
            params.s,
            branch
        )));
    }
    let sig = params.sigma_star;
    let (r0, r) = (k.r0, k.r);
    let pow = |a: f64| Term::Power { a, b: sig };
    let cst = Term::constant;
    use BarrierId::*;
    let p = match id {
        VTilde => RadialProfile::new(id.name(), vec![2.0 * r], vec![vec![pow(r0.powf(-sig)), cst(-1.0)], vec![]])?,
        GTilde => RadialProfile::new(id.name(), vec![1.5 * r, 2.0 * r], vec![vec![], vec![pow(k.c_tilde_g)], vec![]])?,
        HHat => named(make_barrier(VTilde, k, params)?.add(&make_barrier(GTilde, k, params)?), id),
        WCheck => RadialProfile::new(id.name(), vec![r], vec![vec![], vec![Term::Log { a: -1.0 }]])?,
        VCheck => RadialProfile::new(id.name(), vec![2.0 * r], vec![vec![Term::Log { a: 1.0 }], vec![]])?,
        GCheck => RadialProfile::new(id.name(), vec![1.5 * r, 2.0 * r], vec![vec![], vec![Term::Log { a: k.c_check_g }], vec![]])?,
        HCheck => named(make_barrier(VCheck, k, params)?.add(&make_barrier(GCheck, k, params)?), id),
        PsiHat => RadialProfile::new(id.name(), vec![1.0], vec![vec![cst(1.0)], vec![pow(1.0)]])?,
        GammaTilde => RadialProfile::new(id.name(), vec![1.0], vec![vec![cst(1.0)], vec![]])?,
        PsiHatGamma => named(make_barrier(PsiHat, k, params)?.add(&make_barrier(GammaTilde, k, params)?.scale(k.gamma_weight)), id),
        Psi => RadialProfile::new(id.name(), vec![2.0 * r], vec![vec![cst(1.0), pow(-r0.powf(-sig))], vec![]])?,
        G => RadialProfile::new(id.name(), vec![1.5 * r, 2.0 * r], vec![vec![], vec![cst(k.c_g)], vec![]])?,
        PsiG => named(make_barrier(Psi, k, params)?.add(&make_barrier(G, k, params)?).scale(1.0 / (1.0 + k.c_g)), id),
        WHat => RadialProfile::new(id.name(), vec![r], vec![vec![], vec![pow(1.0)]])?,
        GammaHat => RadialProfile::new(id.name(), vec![r, 1.5 * r], vec![vec![], vec![pow(k.mu)], vec![]])?,
        WGamma => named(make_barrier(WHat, k, params)?.add(&make_barrier(GammaHat, k, params)?), id),
    };
    Ok(p)
}

fn named(mut p: RadialProfile, id: BarrierId) -> RadialProfile {
    p.name = id.name().to_string();
    p
}

/// CSV table `barrier,radius,value` of every barrier defined on the branch of `params`.
pub fn gallery_csv(k: &BarrierConstants, params: &FracParams, radii: &[f64]) -> Result<String> {
    k.validate()?;
    let branch = branch_of(params);
    let mut out = String::from("barrier,radius,value\n");
    for id in BarrierId::ALL.iter().filter(|id| id.required_branch() == branch) {
        let p = make_barrier(*id, k, params)?;
        for &r in radii {
            out.push_str(&format!("{},{:e},{:e}\n", id.name(), r, p.value(r)));
        }
    }
    Ok(out)
}

/// Log-spaced radii strictly inside (a, b).
pub fn log_interior(a: f64, b: f64, count: usize) -> Vec<f64> {
    let ratio = b / a;
    (0..count).map(|i| a * ratio.powf((i as f64 + 0.5) / count as f64)).collect()
}

/// Choose the free constant of a sign chain.
///
/// The chain's barrier splits as A + c·B with B the correction at unit
/// weight. On a calibration grid over the chain's region the supremum of
/// A/(−B) is estimated by quadrature and c is set to twice that value.
/// Returns the constants with `big_r0` set to the start of the region on
/// which the sign claim is asserted.
pub fn choose_constants(chain: ChainId, params: &FracParams, r0: f64, r: Option<f64>, quad: &QuadSpec) -> Result<BarrierConstants> {
    let r = r.unwrap_or(10.0 * r0);
    let mut k = BarrierConstants::with_radii(r0, r);
    k.validate()?;
    let sign_chain = chain.sign_chain();
    let (main, corr, (a, b)) = match sign_chain {
        ChainId::LVC => (BarrierId::VTilde, BarrierId::GTilde, (r0, r)),
        ChainId::NBBN => (BarrierId::VCheck, BarrierId::GCheck, (r0, r)),
        ChainId::NITU => (BarrierId::Psi, BarrierId::G, (r0, r)),
        ChainId::VASK => (BarrierId::PsiHat, BarrierId::GammaTilde, (r0, 100.0 * r0)),
        ChainId::RI => (BarrierId::WHat, BarrierId::GammaHat, (2.0 * r, 200.0 * r)),
        ChainId::CA1_00 => {
            k.big_r0 = r;
            return Ok(k);
        }
        other => return Err(FracError::Config(format!("chain {other:?} has no free constant"))),
    };
    let pa = make_barrier(main, &k, params)?;
    let pb = make_barrier(corr, &k, params)?;
    let radii = log_interior(a, b, 24);
    let ratios: Vec<Result<f64>> = radii
        .par_iter()
        .map(|&x| {
            let va = eval_radial(&pa, x, params, quad)?;
            let vb = eval_radial(&pb, x, params, quad)?;
            if !(vb.value + 2.0 * vb.error_estimate < 0.0) {
                return Err(FracError::Degenerate(format!("correction {} is not certifiably negative at |x| = {x}", corr.name())));
            }
            Ok(va.value / -vb.value)
        })
        .collect();
    let mut sup = f64::NEG_INFINITY;
    for q in ratios {
        sup = sup.max(q?);
    }
    let c = if sup > 0.0 { 2.0 * sup } else { 1e-3 };
    match sign_chain {
        ChainId::LVC => k.c_tilde_g = c,
        ChainId::NBBN => k.c_check_g = c,
        ChainId::NITU => k.c_g = c,
        ChainId::VASK => k.gamma_weight = c,
        ChainId::RI => k.mu = c,
        _ => unreachable!(),
    }
    k.big_r0 = a;
    Ok(k)
}
