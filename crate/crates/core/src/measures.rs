//! Finite measures `Λ` on `(0,1]` with dust and finite total merger rate.
//!
//! Three closed families are supported: a point mass `δ_p`, a scaled Beta
//! density and a finite list of atoms. Every admissible measure has
//! `μ₋₂ = ∫ x⁻² Λ(dx) < ∞`, which is what lets the engine realize the
//! coalescent as a Poisson stream of mergers with total rate `μ₋₂`.

use std::fmt;

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::Rng;
use rand_distr::{Beta, Distribution};
use serde::Serialize;
use thiserror::Error;

use crate::weight::{parse_rational, rational_to_f64, LiteralError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeasureError {
    #[error("dirac requires 0 < p <= 1, got {0}")]
    DiracOutOfRange(String),
    #[error("beta requires a > 2: measure is not simple (got a = {0})")]
    BetaNotSimple(f64),
    #[error("beta requires b > 0 (got b = {0})")]
    BetaShape(f64),
    #[error("beta requires mass > 0 (got mass = {0})")]
    BetaMass(f64),
    #[error("atoms: list is empty")]
    NoAtoms,
    #[error("atoms: location must lie in (0,1], got {0}")]
    AtomLocation(f64),
    #[error("atoms: weight must be > 0, got {0}")]
    AtomWeight(f64),
    #[error("unknown measure family `{0}` (expected dirac, beta or atoms)")]
    UnknownFamily(String),
    #[error("malformed measure `{spec}`: {reason}")]
    Syntax { spec: String, reason: String },
    #[error(transparent)]
    Literal(#[from] LiteralError),
}

/// The atom location of a Dirac measure.
#[derive(Clone, Debug, PartialEq)]
pub enum DiracPoint {
    Exact(BigRational),
    Real(f64),
}

impl DiracPoint {
    pub fn to_f64(&self) -> f64 {
        match self {
            DiracPoint::Exact(p) => rational_to_f64(p),
            DiracPoint::Real(p) => *p,
        }
    }
}

/// Parametric family behind a [`MeasureSpec`].
#[derive(Clone, Debug, PartialEq)]
pub enum Family {
    /// `Λ = δ_p`.
    Dirac(DiracPoint),
    /// `Λ(dx) = mass · Beta(a, b)(dx)`, simple iff `a > 2`.
    Beta { a: f64, b: f64, mass: f64 },
    /// `Λ = Σ wᵢ δ_{pᵢ}` with strictly increasing `pᵢ`.
    Atoms(Vec<(f64, f64)>),
}

/// An admissible (simple, dust-carrying) measure, validated at construction.
#[derive(Clone, Debug)]
pub struct MeasureSpec {
    family: Family,
    sampler: Sampler,
}

#[derive(Clone, Debug)]
enum Sampler {
    Point(f64),
    Beta { paintbox: Beta<f64>, size_biased: Beta<f64> },
    Atoms { locations: Vec<f64>, paintbox_cdf: Vec<f64>, size_biased_cdf: Vec<f64> },
}

impl PartialEq for MeasureSpec {
    fn eq(&self, other: &Self) -> bool {
        self.family == other.family
    }
}

impl MeasureSpec {
    pub fn dirac(p: BigRational) -> Result<Self, MeasureError> {
        if !p.is_positive() || p > BigRational::one() {
            return Err(MeasureError::DiracOutOfRange(crate::weight::format_rational(&p)));
        }
        let point = rational_to_f64(&p);
        Ok(Self { family: Family::Dirac(DiracPoint::Exact(p)), sampler: Sampler::Point(point) })
    }

    /// A Dirac measure at a real location; runs in float mode.
    pub fn dirac_real(p: f64) -> Result<Self, MeasureError> {
        if !(p > 0.0 && p <= 1.0) {
            return Err(MeasureError::DiracOutOfRange(p.to_string()));
        }
        Ok(Self { family: Family::Dirac(DiracPoint::Real(p)), sampler: Sampler::Point(p) })
    }

    pub fn beta(a: f64, b: f64, mass: f64) -> Result<Self, MeasureError> {
        if !(a > 2.0) || !a.is_finite() {
            return Err(MeasureError::BetaNotSimple(a));
        }
        if !(b > 0.0) || !b.is_finite() {
            return Err(MeasureError::BetaShape(b));
        }
        if !(mass > 0.0) || !mass.is_finite() {
            return Err(MeasureError::BetaMass(mass));
        }
        let paintbox = Beta::new(a - 2.0, b).map_err(|_| MeasureError::BetaNotSimple(a))?;
        let size_biased = Beta::new(a - 1.0, b).map_err(|_| MeasureError::BetaNotSimple(a))?;
        Ok(Self { family: Family::Beta { a, b, mass }, sampler: Sampler::Beta { paintbox, size_biased } })
    }

    /// Builds a finite-atom measure, sorting by location and merging
    /// duplicate locations.
    pub fn atoms(atoms: impl IntoIterator<Item = (f64, f64)>) -> Result<Self, MeasureError> {
        let mut list: Vec<(f64, f64)> = Vec::new();
        for (p, w) in atoms {
            if !(p > 0.0 && p <= 1.0) {
                return Err(MeasureError::AtomLocation(p));
            }
            if !(w > 0.0) || !w.is_finite() {
                return Err(MeasureError::AtomWeight(w));
            }
            list.push((p, w));
        }
        if list.is_empty() {
            return Err(MeasureError::NoAtoms);
        }
        list.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut canonical: Vec<(f64, f64)> = Vec::with_capacity(list.len());
        for (p, w) in list {
            match canonical.last_mut() {
                Some(last) if last.0 == p => last.1 += w,
                _ => canonical.push((p, w)),
            }
        }
        let cumulative = |f: &dyn Fn(f64, f64) -> f64| {
            let mut acc = 0.0;
            let mut cdf: Vec<f64> = canonical
                .iter()
                .map(|&(p, w)| {
                    acc += f(p, w);
                    acc
                })
                .collect();
            let total = acc;
            cdf.iter_mut().for_each(|c| *c /= total);
            *cdf.last_mut().unwrap() = 1.0;
            cdf
        };
        let paintbox_cdf = cumulative(&|p, w| w / (p * p));
        let size_biased_cdf = cumulative(&|p, w| w / p);
        let locations = canonical.iter().map(|a| a.0).collect();
        Ok(Self {
            family: Family::Atoms(canonical),
            sampler: Sampler::Atoms { locations, paintbox_cdf, size_biased_cdf },
        })
    }

    /// Parses `dirac:<p>`, `beta:<a>:<b>[:<mass>]` or
    /// `atoms:<p1>,<w1>[;<p2>,<w2>...]`.
    pub fn parse(text: &str) -> Result<Self, MeasureError> {
        let text = text.trim();
        let syntax = |reason: &str| MeasureError::Syntax { spec: text.to_string(), reason: reason.to_string() };
        let (family, rest) = text.split_once(':').ok_or_else(|| syntax("expected `<family>:<parameters>`"))?;
        let real = |s: &str| parse_rational(s).map(|r| rational_to_f64(&r));
        match family.trim().to_ascii_lowercase().as_str() {
            "dirac" => Self::dirac(parse_rational(rest)?),
            "beta" => {
                let parts: Vec<&str> = rest.split(':').collect();
                match parts.as_slice() {
                    [a, b] => Self::beta(real(a)?, real(b)?, 1.0),
                    [a, b, mass] => Self::beta(real(a)?, real(b)?, real(mass)?),
                    _ => Err(syntax("beta takes `<a>:<b>` or `<a>:<b>:<mass>`")),
                }
            }
            "atoms" => {
                let mut atoms = Vec::new();
                for pair in rest.split(';').filter(|s| !s.trim().is_empty()) {
                    let (p, w) = pair.split_once(',').ok_or_else(|| syntax("each atom is `<p>,<w>`"))?;
                    atoms.push((real(p)?, real(w)?));
                }
                Self::atoms(atoms)
            }
            other => Err(MeasureError::UnknownFamily(other.to_string())),
        }
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    /// The rational atom of a Dirac measure, when the engine can run exactly.
    pub fn exact_dirac(&self) -> Option<&BigRational> {
        match &self.family {
            Family::Dirac(DiracPoint::Exact(p)) => Some(p),
            _ => None,
        }
    }

    /// Total mass `Λ({1})` at the star-shaped endpoint.
    pub fn mass_at_one(&self) -> f64 {
        match &self.family {
            Family::Dirac(p) if p.to_f64() == 1.0 => 1.0,
            Family::Dirac(_) | Family::Beta { .. } => 0.0,
            Family::Atoms(atoms) => atoms.iter().filter(|a| a.0 == 1.0).map(|a| a.1).sum(),
        }
    }

    pub fn moments(&self) -> MeasureMoments {
        moments(self)
    }

    pub fn sample_paintbox<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        sample_paintbox(self, rng)
    }

    #[allow(non_snake_case)]
    pub fn sample_Q<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        sample_size_biased(self, rng)
    }
}

impl fmt::Display for MeasureSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.family {
            Family::Dirac(DiracPoint::Exact(p)) => write!(f, "dirac:{}", crate::weight::format_rational(p)),
            Family::Dirac(DiracPoint::Real(p)) => write!(f, "dirac:{p}"),
            Family::Beta { a, b, mass } => write!(f, "beta:{a}:{b}:{mass}"),
            Family::Atoms(atoms) => {
                let parts: Vec<String> = atoms.iter().map(|(p, w)| format!("{p},{w}")).collect();
                write!(f, "atoms:{}", parts.join(";"))
            }
        }
    }
}

/// Exact moments, available for Dirac measures with a rational atom.
#[derive(Clone, Debug, PartialEq)]
pub struct ExactMoments {
    pub mu1: BigRational,
    pub mu2: BigRational,
    pub gamma: BigRational,
    pub alpha: BigRational,
    pub total_mass: BigRational,
    pub rho: BigRational,
}

/// Dust and simple-coalescent moments of a measure.
///
/// `tau` and `rho` are the rates of the Poisson points at which the block
/// of 1 does and does not take part.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MeasureMoments {
    pub mu1: f64,
    pub mu2: f64,
    pub gamma: f64,
    pub alpha: f64,
    pub total_mass: f64,
    pub tau: f64,
    pub rho: f64,
    #[serde(skip)]
    pub exact: Option<ExactMoments>,
}

pub fn moments(spec: &MeasureSpec) -> MeasureMoments {
    let (total_mass, mu1, mu2, exact) = match &spec.family {
        Family::Dirac(DiracPoint::Exact(p)) => {
            let mu1 = p.recip();
            let mu2 = &mu1 * &mu1;
            let exact = ExactMoments {
                gamma: p.clone(),
                alpha: p.clone(),
                total_mass: BigRational::one(),
                rho: &mu2 - &mu1,
                mu1,
                mu2,
            };
            (1.0, rational_to_f64(&exact.mu1), rational_to_f64(&exact.mu2), Some(exact))
        }
        Family::Dirac(DiracPoint::Real(p)) => (1.0, 1.0 / p, 1.0 / (p * p), None),
        Family::Beta { a, b, mass } => {
            // B(a-1,b)/B(a,b) = (a+b-1)/(a-1), B(a-2,b)/B(a,b) = (a+b-1)(a+b-2)/((a-1)(a-2)).
            let r1 = (a + b - 1.0) / (a - 1.0);
            let r2 = r1 * (a + b - 2.0) / (a - 2.0);
            (*mass, mass * r1, mass * r2, None)
        }
        Family::Atoms(atoms) => {
            let total: f64 = atoms.iter().map(|a| a.1).sum();
            let mu1: f64 = atoms.iter().map(|&(p, w)| w / p).sum();
            let mu2: f64 = atoms.iter().map(|&(p, w)| w / (p * p)).sum();
            (total, mu1, mu2, None)
        }
    };
    let rho = match &exact {
        Some(e) => rational_to_f64(&e.rho),
        None => (mu2 - mu1).max(0.0),
    };
    MeasureMoments {
        mu1,
        mu2,
        gamma: total_mass / mu1,
        alpha: mu1 / mu2,
        total_mass,
        tau: mu1,
        rho,
        exact,
    }
}

/// One draw of a paintbox value `P` from `μ₋₂⁻¹ x⁻² Λ(dx)`.
///
/// Dirac draws consume no randomness; Beta draws never return 0.
pub fn sample_paintbox<R: Rng + ?Sized>(spec: &MeasureSpec, rng: &mut R) -> f64 {
    match &spec.sampler {
        Sampler::Point(p) => *p,
        Sampler::Beta { paintbox, .. } => positive_draw(paintbox, rng),
        Sampler::Atoms { locations, paintbox_cdf, .. } => pick_atom(locations, paintbox_cdf, rng),
    }
}

/// One draw from the size-biased law `Q = μ₋₁⁻¹ x⁻¹ Λ(dx)`.
pub fn sample_size_biased<R: Rng + ?Sized>(spec: &MeasureSpec, rng: &mut R) -> f64 {
    match &spec.sampler {
        Sampler::Point(p) => *p,
        Sampler::Beta { size_biased, .. } => positive_draw(size_biased, rng),
        Sampler::Atoms { locations, size_biased_cdf, .. } => pick_atom(locations, size_biased_cdf, rng),
    }
}

fn positive_draw<R: Rng + ?Sized>(dist: &Beta<f64>, rng: &mut R) -> f64 {
    loop {
        let x = dist.sample(rng);
        if x > 0.0 {
            return x;
        }
    }
}

fn pick_atom<R: Rng + ?Sized>(locations: &[f64], cdf: &[f64], rng: &mut R) -> f64 {
    if locations.len() == 1 {
        return locations[0];
    }
    let u: f64 = rng.random();
    let idx = cdf.partition_point(|&c| c <= u).min(locations.len() - 1);
    locations[idx]
}

impl ExactMoments {
    /// `gamma · mu1 = total_mass` and `alpha · mu2 = mu1`, checked exactly.
    pub fn identities_hold(&self) -> bool {
        &self.gamma * &self.mu1 == self.total_mass && &self.alpha * &self.mu2 == self.mu1 && !self.rho.is_negative()
    }
}

impl MeasureMoments {
    pub fn is_star_shaped(&self) -> bool {
        match &self.exact {
            Some(e) => e.rho.is_zero(),
            None => self.rho == 0.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn dirac_half_moments_are_exact() {
        let m = MeasureSpec::parse("dirac:1/2").unwrap().moments();
        assert_eq!((m.mu1, m.mu2, m.gamma, m.alpha, m.tau, m.rho), (2.0, 4.0, 0.5, 0.5, 2.0, 2.0));
        let e = m.exact.unwrap();
        assert_eq!(e.mu1, q(2, 1));
        assert_eq!(e.mu2, q(4, 1));
        assert_eq!(e.gamma, q(1, 2));
        assert_eq!(e.alpha, q(1, 2));
        assert_eq!(e.rho, q(2, 1));
        assert!(e.identities_hold());
    }

    #[test]
    fn finite_atoms_moments() {
        let m = MeasureSpec::parse("atoms:1/2,1/2;1,1/2").unwrap().moments();
        assert!((m.mu1 - 1.5).abs() < 1e-15);
        assert!((m.mu2 - 2.5).abs() < 1e-15);
        assert!((m.gamma - 2.0 / 3.0).abs() < 1e-15);
        assert!((m.alpha - 0.6).abs() < 1e-15);
    }

    #[test]
    fn atoms_are_canonicalized() {
        let a = MeasureSpec::atoms([(1.0, 0.25), (0.5, 0.5), (1.0, 0.25)]).unwrap();
        let b = MeasureSpec::parse("atoms:0.5,0.5;1,0.5").unwrap();
        assert_eq!(a, b);
        assert_eq!(a.family(), &Family::Atoms(vec![(0.5, 0.5), (1.0, 0.5)]));
        assert_eq!(a.mass_at_one(), 0.5);
    }

    #[test]
    fn decimal_and_rational_dirac_agree() {
        assert_eq!(MeasureSpec::parse("dirac:0.5").unwrap(), MeasureSpec::parse("dirac:1/2").unwrap());
    }

    #[test]
    fn rejects_non_simple_and_invalid_measures() {
        let err = MeasureSpec::parse("beta:1.5:1").unwrap_err();
        assert_eq!(err, MeasureError::BetaNotSimple(1.5));
        assert!(err.to_string().contains("not simple"));
        assert!(MeasureSpec::parse("beta:2:1").is_err());
        assert!(MeasureSpec::parse("beta:3:0").is_err());
        assert!(MeasureSpec::parse("beta:3:1:-1").is_err());
        assert!(MeasureSpec::parse("dirac:0").is_err());
        assert!(MeasureSpec::parse("dirac:3/2").is_err());
        assert!(MeasureSpec::parse("atoms:").is_err());
        assert!(MeasureSpec::parse("atoms:0,1").is_err());
        assert!(MeasureSpec::parse("atoms:0.5,0").is_err());
        assert!(matches!(MeasureSpec::parse("kingman:1"), Err(MeasureError::UnknownFamily(_))));
        assert!(matches!(MeasureSpec::parse("dirac"), Err(MeasureError::Syntax { .. })));
    }

    #[test]
    fn star_shaped_is_flagged() {
        let m = MeasureSpec::parse("dirac:1").unwrap().moments();
        assert!(m.is_star_shaped());
        assert_eq!(m.rho, 0.0);
        assert!(!MeasureSpec::parse("dirac:1/2").unwrap().moments().is_star_shaped());
    }

    #[test]
    fn display_round_trips() {
        for text in ["dirac:1/2", "beta:3:1:1", "atoms:0.5,0.5;1,0.5"] {
            let spec = MeasureSpec::parse(text).unwrap();
            assert_eq!(MeasureSpec::parse(&spec.to_string()).unwrap(), spec);
        }
    }

    #[test]
    fn dirac_samplers_are_constant() {
        let spec = MeasureSpec::parse("dirac:1/2").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10 {
            assert_eq!(spec.sample_paintbox(&mut rng), 0.5);
            assert_eq!(spec.sample_Q(&mut rng), 0.5);
        }
    }

    #[test]
    fn atom_samplers_hit_expected_frequencies() {
        let spec = MeasureSpec::parse("atoms:1/2,1/2;1,1/2").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 200_000;
        let paintbox_half = (0..n).filter(|_| spec.sample_paintbox(&mut rng) == 0.5).count() as f64 / n as f64;
        let q_half = (0..n).filter(|_| spec.sample_Q(&mut rng) == 0.5).count() as f64 / n as f64;
        // 4/5 and 2/3, with 4-sigma slack.
        assert!((paintbox_half - 0.8).abs() < 4.0 * (0.8f64 * 0.2 / n as f64).sqrt());
        assert!((q_half - 2.0 / 3.0).abs() < 4.0 * ((2.0 / 9.0) / n as f64).sqrt());
    }
}
