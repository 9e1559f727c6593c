//! Piecewise closed-form radial functions.

use serde::{Deserialize, Serialize};

use crate::error::{FracError, Result};

/// One closed-form summand of a profile piece, as a function of the radius r.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Term {
    /// a·r^b (b = 0 is a constant).
    Power { a: f64, b: f64 },
    /// a·log r.
    Log { a: f64 },
    /// a·(1 − (r/w)²)^p, only meaningful for r ≤ w.
    Cap { a: f64, p: f64, w: f64 },
    /// a·(1 + (r/w)²)^p.
    Bracket { a: f64, p: f64, w: f64 },
}

impl Term {
    pub fn constant(a: f64) -> Self {
        Term::Power { a, b: 0.0 }
    }

    #[inline]
    pub fn eval(&self, r: f64) -> f64 {
        match *self {
            Term::Power { a, b } => {
                if b == 0.0 {
                    a
                } else {
                    a * r.powf(b)
                }
            }
            Term::Log { a } => a * r.ln(),
            Term::Cap { a, p, w } => {
                let q = r / w;
                let base = 1.0 - q * q;
                if base <= 0.0 {
                    0.0
                } else {
                    a * base.powf(p)
                }
            }
            Term::Bracket { a, p, w } => {
                let q = r / w;
                a * (1.0 + q * q).powf(p)
            }
        }
    }

    /// True when the term, as a function on ℝⁿ, is C^∞ at the origin.
    fn smooth_at_origin(&self) -> bool {
        match *self {
            Term::Power { a, b } => a == 0.0 || (b >= 0.0 && b.fract() == 0.0 && (b as i64) % 2 == 0),
            Term::Log { a } => a == 0.0,
            Term::Cap { .. } | Term::Bracket { .. } => true,
        }
    }

    fn rescaled(&self, lambda: f64) -> Vec<Term> {
        match *self {
            Term::Power { a, b } => vec![Term::Power { a: a * lambda.powf(b), b }],
            Term::Log { a } => vec![Term::constant(a * lambda.ln()), Term::Log { a }],
            Term::Cap { a, p, w } => vec![Term::Cap { a, p, w: w / lambda }],
            Term::Bracket { a, p, w } => vec![Term::Bracket { a, p, w: w / lambda }],
        }
    }
}

/// Pure power or logarithm, used by closed-form tail integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AsymTerm {
    Power { a: f64, b: f64 },
    Log { a: f64 },
}

/// A jump discontinuity recorded at a breakpoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Jump {
    pub radius: f64,
    pub left: f64,
    pub right: f64,
}

/// Radial function given by closed-form pieces between sorted breakpoints.
///
/// Piece `i` covers `(breakpoints[i-1], breakpoints[i]]`; the last piece
/// covers everything beyond the final breakpoint. A breakpoint therefore
/// takes the value of the piece to its left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialProfile {
    pub name: String,
    breakpoints: Vec<f64>,
    pieces: Vec<Vec<Term>>,
}

impl RadialProfile {
    pub fn new(name: impl Into<String>, breakpoints: Vec<f64>, pieces: Vec<Vec<Term>>) -> Result<Self> {
        if pieces.len() != breakpoints.len() + 1 {
            return Err(FracError::Config(format!(
                "{} breakpoints need {} pieces, got {}",
                breakpoints.len(),
                breakpoints.len() + 1,
                pieces.len()
            )));
        }
        if breakpoints.iter().any(|b| !(b.is_finite() && *b > 0.0)) {
            return Err(FracError::Config("breakpoints must be finite and positive".into()));
        }
        if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(FracError::Config("breakpoints must be strictly increasing".into()));
        }
        Ok(RadialProfile { name: name.into(), breakpoints, pieces })
    }

    /// Single-piece profile.
    pub fn single(name: impl Into<String>, terms: Vec<Term>) -> Self {
        RadialProfile { name: name.into(), breakpoints: vec![], pieces: vec![terms] }
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn pieces(&self) -> &[Vec<Term>] {
        &self.pieces
    }

    #[inline]
    pub fn piece_index(&self, r: f64) -> usize {
        self.breakpoints.partition_point(|&b| b < r)
    }

    #[inline]
    pub fn value(&self, r: f64) -> f64 {
        let r = r.abs();
        self.pieces[self.piece_index(r)].iter().map(|t| t.eval(r)).sum()
    }

    /// Value at a point of ℝⁿ.
    pub fn value_at(&self, x: &[f64]) -> f64 {
        self.value(x.iter().map(|v| v * v).sum::<f64>().sqrt())
    }

    fn piece_value(&self, i: usize, r: f64) -> f64 {
        self.pieces[i].iter().map(|t| t.eval(r)).sum()
    }

    /// Jumps at breakpoints (left value differs from right limit).
    pub fn jumps(&self) -> Vec<Jump> {
        self.breakpoints
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| {
                let left = self.piece_value(i, b);
                let right = self.piece_value(i + 1, b);
                let scale = left.abs().max(right.abs()).max(1.0);
                ((left - right).abs() > 1e-12 * scale).then_some(Jump { radius: b, left, right })
            })
            .collect()
    }

    /// Whether the radial extension fails to be smooth at the origin.
    pub fn kinked_at_origin(&self) -> bool {
        self.pieces[0].iter().any(|t| !t.smooth_at_origin())
    }

    /// Radii where the extension is not smooth, including 0 when applicable.
    pub fn kink_radii(&self) -> Vec<f64> {
        let mut k = Vec::with_capacity(self.breakpoints.len() + 1);
        if self.kinked_at_origin() {
            k.push(0.0);
        }
        k.extend_from_slice(&self.breakpoints);
        k
    }

    pub fn last_breakpoint(&self) -> f64 {
        self.breakpoints.last().copied().unwrap_or(0.0)
    }

    /// Pointwise sum.
    pub fn add(&self, other: &RadialProfile) -> RadialProfile {
        let mut bps: Vec<f64> = self.breakpoints.iter().chain(other.breakpoints.iter()).copied().collect();
        bps.sort_by(f64::total_cmp);
        bps.dedup();
        let mut pieces = Vec::with_capacity(bps.len() + 1);
        for i in 0..=bps.len() {
            // A representative radius strictly inside the merged interval.
            let probe = match (i.checked_sub(1).map(|j| bps[j]), bps.get(i)) {
                (None, Some(&b)) => 0.5 * b,
                (Some(a), Some(&b)) => 0.5 * (a + b),
                (Some(a), None) => a + 1.0,
                (None, None) => 1.0,
            };
            let mut terms = self.pieces[self.piece_index(probe)].clone();
            terms.extend_from_slice(&other.pieces[other.piece_index(probe)]);
            terms.retain(|t| !matches!(t, Term::Power { a, .. } if *a == 0.0));
            pieces.push(terms);
        }
        RadialProfile { name: format!("{}+{}", self.name, other.name), breakpoints: bps, pieces }
    }

    pub fn scale(&self, c: f64) -> RadialProfile {
        let pieces = self
            .pieces
            .iter()
            .map(|p| {
                p.iter()
                    .map(|t| match *t {
                        Term::Power { a, b } => Term::Power { a: c * a, b },
                        Term::Log { a } => Term::Log { a: c * a },
                        Term::Cap { a, p, w } => Term::Cap { a: c * a, p, w },
                        Term::Bracket { a, p, w } => Term::Bracket { a: c * a, p, w },
                    })
                    .collect()
            })
            .collect();
        RadialProfile { name: self.name.clone(), breakpoints: self.breakpoints.clone(), pieces }
    }

    /// The profile r ↦ u(λ r).
    pub fn rescale(&self, lambda: f64) -> RadialProfile {
        let pieces = self.pieces.iter().map(|p| p.iter().flat_map(|t| t.rescaled(lambda)).collect()).collect();
        RadialProfile {
            name: format!("{}(λ={lambda})", self.name),
            breakpoints: self.breakpoints.iter().map(|b| b / lambda).collect(),
            pieces,
        }
    }

    /// Largest power exponent of the outermost piece (−∞ if it vanishes,
    /// 0 for logarithmic growth).
    pub fn growth_exponent(&self) -> f64 {
        let mut g = f64::NEG_INFINITY;
        for t in self.pieces.last().unwrap() {
            let e = match *t {
                Term::Power { a, b } if a != 0.0 => b,
                Term::Log { a } if a != 0.0 => 0.0,
                Term::Bracket { a, p, .. } if a != 0.0 => 2.0 * p,
                Term::Cap { a, .. } if a != 0.0 => 0.0,
                _ => continue,
            };
            g = g.max(e);
        }
        g
    }

    /// Expansion of the outermost piece into powers and logarithms, accurate
    /// for radii at least `rho_min`.
    pub fn tail_expansion(&self, rho_min: f64) -> Result<Vec<AsymTerm>> {
        let mut out = Vec::new();
        for t in self.pieces.last().unwrap() {
            match *t {
                Term::Power { a, b } => {
                    if a != 0.0 {
                        out.push(AsymTerm::Power { a, b })
                    }
                }
                Term::Log { a } => {
                    if a != 0.0 {
                        out.push(AsymTerm::Log { a })
                    }
                }
                Term::Cap { a, .. } => {
                    if a != 0.0 {
                        return Err(FracError::Config("a cap term cannot extend to infinity".into()));
                    }
                }
                Term::Bracket { a, p, w } => {
                    if a == 0.0 {
                        continue;
                    }
                    let q = (w / rho_min).powi(2);
                    if q >= 0.25 {
                        return Err(FracError::Config("tail radius too small for bracket expansion".into()));
                    }
                    // a (r/w)^{2p} Σ_j binom(p, j) (w/r)^{2j}
                    let mut binom = 1.0;
                    let mut j = 0usize;
                    loop {
                        let coef = a * binom * w.powf(2.0 * (j as f64) - 2.0 * p);
                        out.push(AsymTerm::Power { a: coef, b: 2.0 * p - 2.0 * j as f64 });
                        let next = binom * (p - j as f64) / (j as f64 + 1.0);
                        j += 1;
                        if next == 0.0 || (next.abs() * q.powi(j as i32)) < 1e-18 * binom.abs().max(1e-300) || j > 200 {
                            break;
                        }
                        binom = next;
                    }
                }
            }
        }
        Ok(out)
    }

    /// Sample the profile for export.
    pub fn samples(&self, radii: &[f64]) -> Vec<(f64, f64)> {
        radii.iter().map(|&r| (r, self.value(r))).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn step() -> RadialProfile {
        RadialProfile::new("step", vec![1.0, 2.0], vec![vec![Term::constant(1.0)], vec![Term::Power { a: 1.0, b: -1.0 }], vec![]]).unwrap()
    }

    #[test]
    fn left_piece_at_breakpoints() {
        let p = step();
        assert_eq!(p.value(1.0), 1.0);
        assert_eq!(p.value(2.0), 0.5);
        assert_eq!(p.value(2.5), 0.0);
        let j = p.jumps();
        assert_eq!(j.len(), 1);
        assert_eq!(j[0].radius, 2.0);
    }

    #[test]
    fn sum_merges_breakpoints() {
        let p = step();
        let q = RadialProfile::new("q", vec![1.5], vec![vec![], vec![Term::constant(3.0)]]).unwrap();
        let s = p.add(&q);
        assert_eq!(s.breakpoints(), &[1.0, 1.5, 2.0]);
        for &r in &[0.3, 1.0, 1.2, 1.5, 1.7, 2.0, 5.0] {
            assert!((s.value(r) - p.value(r) - q.value(r)).abs() < 1e-15);
        }
    }

    #[test]
    fn rescale_composes() {
        let p = RadialProfile::new(
            "p",
            vec![1.0],
            vec![vec![Term::Cap { a: 2.0, p: 0.5, w: 1.0 }], vec![Term::Log { a: 1.0 }, Term::Bracket { a: 1.0, p: -0.7, w: 1.0 }]],
        )
        .unwrap();
        let q = p.rescale(3.0);
        for &r in &[0.1, 0.3, 0.5, 2.0] {
            assert!((q.value(r) - p.value(3.0 * r)).abs() < 1e-13);
        }
    }

    #[test]
    fn bracket_tail_expansion() {
        let p = RadialProfile::single("b", vec![Term::Bracket { a: 2.0, p: -0.75, w: 1.0 }]);
        let terms = p.tail_expansion(10.0).unwrap();
        for &r in &[10.0, 40.0, 300.0] {
            let v: f64 = terms
                .iter()
                .map(|t| match *t {
                    AsymTerm::Power { a, b } => a * f64::powf(r, b),
                    AsymTerm::Log { a } => a * f64::ln(r),
                })
                .sum();
            assert!((v - p.value(r)).abs() < 1e-15 * p.value(r).abs().max(1e-300) * 10.0);
        }
    }

    #[test]
    fn origin_smoothness() {
        assert!(RadialProfile::single("log", vec![Term::Log { a: 1.0 }]).kinked_at_origin());
        assert!(!RadialProfile::single("quad", vec![Term::Power { a: 1.0, b: 2.0 }]).kinked_at_origin());
        assert!(RadialProfile::single("abs", vec![Term::Power { a: 1.0, b: 1.0 }]).kinked_at_origin());
    }
}
