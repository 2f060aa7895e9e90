//! The Dirac coalescent's `f1` is not Markov: the probability of
//! `f1(t2) = p + pq²` given `f1(t1) = p` depends on how long `f1` was at 0.
//!
//! Two closed forms are provided for `P(f1(t0)=0, f1(t1)=p)` (`joint2`) and
//! `P(f1(t0)=0, f1(t1)=p, f1(t2)=p+pq²)` (`joint3`):
//!
//! * [`ClosedForm::Displayed`] is the closed form as originally displayed,
//!   kept for comparison; simulation rejects it.
//! * [`ClosedForm::Derived`] integrates the event directly. Writing
//!   `τ = μ₋₁` and `ρ = μ₋₂ − μ₋₁` for the rates of Poisson points at which
//!   the block of 1 does and does not take part, the event needs the first
//!   point at `s1 ∈ (t0, t1]` to take 1, exactly one further point before the
//!   next jump at `s3 ∈ (t1, t2]`, block 2 to stay out at `s3` (factor `q`),
//!   and no jump in `(s3, t2]`:
//!
//! ```text
//! joint3 = q τ² ρ e^{-τ t2} ∫_{t0}^{t1} ∫_{t1}^{t2} (s3 − s1) e^{-ρ s3} ds3 ds1
//!        = q τ² e^{-τ t2} [ e^{-ρ t1}(d²/2 + d/ρ) − e^{-ρ t2}(d(t2 − m) + d/ρ) ],
//! d = t1 − t0,  m = (t0 + t1)/2.
//! ```
//!
//! Both forms share `joint2 = (τ/ρ) e^{-τ t1}(e^{-ρ t0} − e^{-ρ t1})`.

use num_rational::BigRational;
use num_traits::One;
use serde::Serialize;

use super::report::{proportion, CheckReport};
use super::AnalysisError;
use crate::engine::{CoalescentRun, EngineError, EngineOptions};
use crate::measures::MeasureSpec;
use crate::replicate;
use crate::stream::{derive_stream, subseed};
use crate::weight::rational_to_f64;

/// Smallest accepted gap between consecutive times.
pub const MIN_GAP: f64 = 1e-6;

/// Smallest accepted number of conditioning hits.
pub const MIN_HITS: u64 = 100;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ClosedForm {
    Displayed,
    Derived,
}

impl ClosedForm {
    pub fn label(self) -> &'static str {
        match self {
            ClosedForm::Displayed => "displayed",
            ClosedForm::Derived => "derived",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NonMarkovValues {
    pub joint2: f64,
    pub joint3: f64,
    pub conditional: f64,
}

/// Observation times `t0 < t1 < t2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Times {
    pub t0: f64,
    pub t1: f64,
    pub t2: f64,
}

impl Times {
    pub fn new(t0: f64, t1: f64, t2: f64) -> Result<Self, AnalysisError> {
        if !(t0.is_finite() && t1.is_finite() && t2.is_finite()) || t0 < 0.0 {
            return Err(AnalysisError::InvalidArgument(format!("times must be finite with t0 >= 0, got ({t0}, {t1}, {t2})")));
        }
        if !(t0 < t1 && t1 < t2) {
            return Err(AnalysisError::InvalidArgument(format!("times must satisfy t0 < t1 < t2, got ({t0}, {t1}, {t2})")));
        }
        if t1 - t0 < MIN_GAP || t2 - t1 < MIN_GAP {
            return Err(AnalysisError::InvalidArgument(format!("consecutive times must be at least {MIN_GAP} apart")));
        }
        Ok(Self { t0, t1, t2 })
    }
}

/// `joint2`, `joint3` and their ratio under the chosen closed form.
pub fn closed_form(form: ClosedForm, tau: f64, rho: f64, p: f64, times: Times) -> Result<NonMarkovValues, AnalysisError> {
    if rho <= 0.0 {
        return Err(AnalysisError::Degenerate("rho = 0: the block of 1 takes part in every merger".into()));
    }
    if !(tau > 0.0) || !(p > 0.0 && p <= 1.0) {
        return Err(AnalysisError::InvalidArgument(format!("need tau > 0 and p in (0, 1], got tau = {tau}, p = {p}")));
    }
    let Times { t0, t1, t2 } = times;
    let d = t1 - t0;
    // e^{-ρ t0} − e^{-ρ t1} and e^{-ρ t1} − e^{-ρ t2}, free of cancellation.
    let early = -(-rho * t0).exp() * (-rho * d).exp_m1();
    let late = -(-rho * t1).exp() * (-rho * (t2 - t1)).exp_m1();
    let joint2 = tau / rho * (-tau * t1).exp() * early;
    let joint3 = match form {
        ClosedForm::Displayed => {
            let squared = -(-2.0 * rho * t1).exp() * (-2.0 * rho * (t2 - t1)).exp_m1();
            tau * tau / rho * (-tau * t2).exp() * (late * early / rho - 0.5 * squared * d)
        }
        ClosedForm::Derived => {
            let q = 1.0 - p;
            let mid = 0.5 * (t0 + t1);
            let bracket = (-rho * t1).exp() * (d * d / 2.0 + d / rho) - (-rho * t2).exp() * (d * (t2 - mid) + d / rho);
            q * tau * tau * (-tau * t2).exp() * bracket
        }
    };
    Ok(NonMarkovValues { joint2, joint3, conditional: joint3 / joint2 })
}

/// The originally displayed expression (see the module docs).
pub fn nonmarkov_closed_form(tau: f64, rho: f64, p: f64, t0: f64, t1: f64, t2: f64) -> Result<NonMarkovValues, AnalysisError> {
    closed_form(ClosedForm::Displayed, tau, rho, p, Times::new(t0, t1, t2)?)
}

/// The directly integrated expression (see the module docs).
pub fn nonmarkov_closed_form_derived(tau: f64, rho: f64, p: f64, t0: f64, t1: f64, t2: f64) -> Result<NonMarkovValues, AnalysisError> {
    closed_form(ClosedForm::Derived, tau, rho, p, Times::new(t0, t1, t2)?)
}

/// Event counts from simulated Dirac paths.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NonMarkovCounts {
    pub times: Times,
    pub reps: u64,
    pub seed: u64,
    /// Replicates with `f1(t0) = 0` and `f1(t1) = p`.
    pub hits2: u64,
    /// Of those, replicates with `f1(t2) = p + pq²`.
    pub hits3: u64,
}

impl NonMarkovCounts {
    pub fn joint2(&self) -> (f64, f64) {
        proportion(self.hits2, self.reps)
    }

    pub fn joint3(&self) -> (f64, f64) {
        proportion(self.hits3, self.reps)
    }

    /// Ratio of frequencies with its delta-method standard error, which
    /// reduces to the binomial error over the conditioning hits.
    pub fn conditional(&self) -> Result<(f64, f64), AnalysisError> {
        if self.hits2 < MIN_HITS {
            return Err(AnalysisError::InsufficientHits { what: format!("f1({})=0, f1({})=p", self.times.t0, self.times.t1), hits: self.hits2 });
        }
        Ok(proportion(self.hits3, self.hits2))
    }

    /// Joint and conditional frequencies against `target`.
    pub fn reports(&self, target: &NonMarkovValues, label: &str, z_max: f64) -> Result<Vec<CheckReport>, AnalysisError> {
        let suffix = format!("t0={}_{label}", self.times.t0);
        let (j2, s2) = self.joint2();
        let (j3, s3) = self.joint3();
        let (c, sc) = self.conditional()?;
        Ok(vec![
            CheckReport::within(format!("nonmarkov_joint2_{suffix}"), target.joint2, j2, s2, z_max, self.reps, self.seed),
            CheckReport::within(format!("nonmarkov_joint3_{suffix}"), target.joint3, j3, s3, z_max, self.reps, self.seed),
            CheckReport::within(format!("nonmarkov_conditional_{suffix}"), target.conditional, c, sc, z_max, self.reps, self.seed),
        ])
    }
}

/// Dependence on `t0`: the difference of two conditional estimates, both
/// against 0 (must be resolved) and against the closed-form difference.
pub fn t0_dependence_reports(
    a: &NonMarkovCounts,
    b: &NonMarkovCounts,
    target_diff: f64,
    label: &str,
    z_max: f64,
) -> Result<Vec<CheckReport>, AnalysisError> {
    let (ca, sa) = a.conditional()?;
    let (cb, sb) = b.conditional()?;
    let diff = ca - cb;
    let se = (sa * sa + sb * sb).sqrt();
    let reps = a.reps + b.reps;
    Ok(vec![
        CheckReport::exceeds("nonmarkov_t0_dependence_resolved", 0.0, diff.abs(), se, z_max, reps, a.seed),
        CheckReport::within(format!("nonmarkov_t0_difference_{label}"), target_diff, diff, se, z_max, reps, a.seed),
    ])
}

/// The atom `p` of a Dirac measure usable for exact event matching.
pub fn nonmarkov_atom(spec: &MeasureSpec) -> Result<BigRational, AnalysisError> {
    let p = spec
        .exact_dirac()
        .ok_or_else(|| AnalysisError::InvalidArgument(format!("the non-Markov check needs dirac:<rational p>, got {spec}")))?;
    let half = BigRational::new(1.into(), 2.into());
    if *p < half || p.is_one() {
        return Err(AnalysisError::InvalidArgument(format!("the non-Markov check needs p in [1/2, 1), got {spec}")));
    }
    Ok(p.clone())
}

/// Simulates `reps` Dirac paths and counts the exact events. A replicate
/// stops as soon as its outcome is decided.
pub fn nonmarkov_mc(spec: &MeasureSpec, times: Times, reps: u64, seed: u64) -> Result<NonMarkovCounts, AnalysisError> {
    let p = nonmarkov_atom(spec)?;
    let q = BigRational::one() - &p;
    let second = &p + &p * &q * &q;
    let stream_seed = subseed(seed, &format!("nonmarkov:{}:{}:{}", times.t0, times.t1, times.t2));
    let options = EngineOptions::checked();
    let (hits2, hits3) = replicate::fold(
        reps,
        || (0u64, 0u64),
        |acc, r| {
            let mut rng = derive_stream(stream_seed, r);
            let (h2, h3) = path_events(spec, &p, &second, times, &options, &mut rng)?;
            acc.0 += h2 as u64;
            acc.1 += h3 as u64;
            Ok::<_, EngineError>(())
        },
        |a, b| (a.0 + b.0, a.1 + b.1),
    )?;
    Ok(NonMarkovCounts { times, reps, seed, hits2, hits3 })
}

fn path_events<R: rand::Rng + ?Sized>(
    spec: &MeasureSpec,
    p: &BigRational,
    second: &BigRational,
    times: Times,
    options: &EngineOptions,
    rng: &mut R,
) -> Result<(bool, bool), EngineError> {
    let mut run = CoalescentRun::<BigRational>::new(spec)?.with_cap(options.cap);
    let ts = [times.t0, times.t1, times.t2];
    let mut pending = 0;
    let mut f1: Option<BigRational> = None;
    loop {
        let rec = run.step_merger(rng)?;
        if options.check_invariants {
            run.check_invariants()?;
        }
        while pending < 3 && rec.time > ts[pending] {
            // f1 at ts[pending] is the value before this merger.
            let ok = match pending {
                0 => f1.is_none(),
                1 => f1.as_ref() == Some(p),
                _ => f1.as_ref() == Some(second),
            };
            if !ok {
                return Ok((pending == 2, false));
            }
            pending += 1;
        }
        if pending == 3 {
            return Ok((true, true));
        }
        if rec.one_joined {
            let value = &run.block_of_one().expect("1 joined a block").freq;
            // Once f1 passes the target at the next observation it cannot return.
            let bound = if pending <= 1 { p } else { second };
            if value > bound {
                return Ok((pending == 2, false));
            }
            f1 = Some(value.clone());
        }
    }
}

/// `(τ, ρ, p)` as floats for a Dirac atom.
pub fn dirac_rates(p: &BigRational) -> (f64, f64, f64) {
    let tau = p.recip();
    let rho = &tau * &tau - &tau;
    (rational_to_f64(&tau), rational_to_f64(&rho), rational_to_f64(p))
}
