//! Shared fixtures for the benchmarks.

use fracverify::{FracParams, QuadSpec, RadialProfile, Term};

/// Φ for n = 3, s = 1/2.
pub fn fundamental_3d() -> (RadialProfile, FracParams) {
    let p = FracParams::new(3, 0.5).expect("valid parameters");
    (RadialProfile::single("phi", vec![Term::Power { a: 1.0, b: p.sigma_star }]), p)
}

/// Default quadrature settings.
pub fn quad() -> QuadSpec {
    QuadSpec::default()
}
