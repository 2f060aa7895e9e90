use rand::Rng;

use super::{CoalescentRun, EngineError, EngineOptions, EngineWeight};
use crate::measures::MeasureSpec;

/// Minimal clade size in `[n]` together with the asymptotic value it
/// estimates, both read off one realization.
#[derive(Clone, Debug, PartialEq)]
pub struct McsSample<W> {
    pub n: u64,
    /// Size of the block of 1 at its first merger inside `[n]`.
    pub m_n: u64,
    /// `f1[1]` of the full coalescent driving the restriction.
    pub f1_first: W,
    /// Merger index of the first jump of `f1` (`C`).
    pub c: usize,
    /// Merger index at which 1 first merged inside `[n]` (`>= C`).
    pub restricted_merger: usize,
}

impl<W: crate::weight::Weight> McsSample<W> {
    pub fn ratio(&self) -> f64 {
        self.m_n as f64 / self.n as f64
    }

    pub fn gap(&self) -> f64 {
        (self.ratio() - self.f1_first.to_f64()).abs()
    }
}

/// Runs the Poisson construction and its restriction to `[n]` on one stream.
///
/// Individuals `2..=n` start in the dust. At merger `k`, after the engine's
/// own draws, each individual still in the dust (in increasing order) joins
/// `S_k` with probability `P_k`. Blocks of `[n]` merge through the shared
/// block coins, so `M_n / n` and `f1[1]` come from the same realization.
pub fn simulate_n_mcs<W: EngineWeight, R: Rng + ?Sized>(
    spec: &MeasureSpec,
    n: u64,
    rng: &mut R,
) -> Result<McsSample<W>, EngineError> {
    simulate_n_mcs_with(spec, n, &EngineOptions::default(), rng)
}

pub fn simulate_n_mcs_with<W: EngineWeight, R: Rng + ?Sized>(
    spec: &MeasureSpec,
    n: u64,
    options: &EngineOptions,
    rng: &mut R,
) -> Result<McsSample<W>, EngineError> {
    if n < 2 {
        return Err(EngineError::InvalidArgument(format!("n must be at least 2, got {n}")));
    }
    let mut run = CoalescentRun::<W>::new(spec)?.with_cap(options.cap);
    let mut in_dust = n - 1;
    // Members of [n] other than 1 in the block formed at each merger.
    let mut restricted: Vec<u64> = Vec::new();
    let mut first: Option<(W, usize)> = None;
    loop {
        let rec = run.step_merger(rng)?;
        if options.check_invariants {
            run.check_invariants()?;
        }
        let prob = rec.paintbox.to_f64();
        let mut joined = 0;
        for _ in 0..in_dust {
            if rng.random_bool(prob) {
                joined += 1;
            }
        }
        in_dust -= joined;
        let size = joined + rec.coins.iter().filter(|c| c.1).map(|&(id, _)| restricted[id - 1]).sum::<u64>();
        restricted.push(size);

        if rec.one_joined {
            if first.is_none() {
                let f1 = run.block_of_one().expect("1 joined a block").freq.clone();
                first = Some((f1, rec.index));
            }
            if size > 0 {
                let (f1_first, c) = first.expect("set above");
                return Ok(McsSample { n, m_n: size + 1, f1_first, c, restricted_merger: rec.index });
            }
        }
    }
}
