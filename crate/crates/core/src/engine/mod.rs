//! Poisson construction of simple Λ-coalescents.
//!
//! Mergers arrive at rate `μ₋₂`. At the `k`-th merger a paintbox value `P_k`
//! is drawn, every live block (and the still-unmerged individual 1) flips a
//! Bernoulli(`P_k`) coin, and the heads blocks merge with the singleton set
//! `S_k`: the individuals of the dust that experience their first merger at
//! event `k`, of asymptotic frequency `P_k ∏_{j<k}(1 - P_j)`.
//!
//! Blocks are identified by the merger index at which they were formed, so
//! block `i` is the block containing `S_i` until it next merges at `I(i)`.

mod path;
mod restriction;
mod run;

use num_rational::BigRational;
use thiserror::Error;

use crate::measures::{Family, MeasureSpec};
use crate::weight::Weight;

pub use path::{
    f1_at, minimal_clade_sample, minimal_clade_sample_with, simulate_f1, simulate_f1_until, simulate_f1_with, F1Path, Horizon, MinimalClade,
};
pub use restriction::{simulate_n_mcs, simulate_n_mcs_with, McsSample};
pub use run::{Block, CoalescentRun, CoinTarget, MergerRecord};

/// Default guard on the number of mergers in one replicate.
pub const MERGER_CAP: usize = 1_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error("run terminated: a paintbox value of 1 already merged all mass")]
    Terminated,
    #[error("merger cap of {0} exceeded")]
    CapExceeded(usize),
    #[error("t = {t} is beyond the simulated horizon {horizon}")]
    HorizonExceeded { t: f64, horizon: f64 },
    #[error("exact arithmetic needs a Dirac measure with a rational atom, got {0}")]
    ExactModeUnsupported(String),
    #[error("invariant violated after merger {merger}: {what}")]
    Invariant { merger: usize, what: String },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// How a run obtains its paintbox values.
#[derive(Clone, Debug)]
pub enum PaintboxSource<W> {
    /// Dirac measures: every `P_k` equals the atom; consumes no randomness.
    Constant(W),
    /// Draw from the measure's paintbox law.
    Sampled,
}

/// Arithmetic the engine can run on.
pub trait EngineWeight: Weight {
    fn paintbox_source(spec: &MeasureSpec) -> Result<PaintboxSource<Self>, EngineError>;
    fn from_sample(x: f64) -> Self;
}

impl EngineWeight for f64 {
    fn paintbox_source(spec: &MeasureSpec) -> Result<PaintboxSource<Self>, EngineError> {
        Ok(match spec.family() {
            Family::Dirac(p) => PaintboxSource::Constant(p.to_f64()),
            _ => PaintboxSource::Sampled,
        })
    }

    fn from_sample(x: f64) -> Self {
        x
    }
}

impl EngineWeight for BigRational {
    fn paintbox_source(spec: &MeasureSpec) -> Result<PaintboxSource<Self>, EngineError> {
        spec.exact_dirac()
            .map(|p| PaintboxSource::Constant(p.clone()))
            .ok_or_else(|| EngineError::ExactModeUnsupported(spec.to_string()))
    }

    fn from_sample(_: f64) -> Self {
        unreachable!("exact runs never sample paintbox values")
    }
}

/// Runtime knobs shared by the simulation drivers.
#[derive(Clone, Copy, Debug)]
pub struct EngineOptions {
    pub cap: usize,
    /// Re-verify the run's invariants after every merger.
    pub check_invariants: bool,
}

impl Default for EngineOptions {
    fn default() -> Self {
        Self { cap: MERGER_CAP, check_invariants: false }
    }
}

impl EngineOptions {
    pub fn checked() -> Self {
        Self { check_invariants: true, ..Self::default() }
    }
}

/// Evaluates `$body` with `$w` bound to the arithmetic the measure runs on:
/// exact rationals for rational Dirac atoms, `f64` otherwise.
#[macro_export]
macro_rules! with_weight {
    ($spec:expr, $w:ident => $body:expr) => {{
        if $spec.exact_dirac().is_some() {
            type $w = $crate::BigRational;
            $body
        } else {
            type $w = f64;
            $body
        }
    }};
}
