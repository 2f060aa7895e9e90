//! Chi-square goodness of fit for Geometric laws on `{1, 2, …}`.

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use super::report::CheckReport;
use super::AnalysisError;
use crate::engine::{minimal_clade_sample_with, CoalescentRun, EngineError, EngineOptions, MinimalClade};
use crate::measures::MeasureSpec;
use crate::replicate;
use crate::stream::{derive_stream, subseed};

/// Smallest expected count per bin.
pub const MIN_EXPECTED: f64 = 5.0;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GofReport {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
    /// One-sided normal equivalent of `p_value`, floored at 0.
    pub z: f64,
    /// Upper edges of the bins `{1}, {2}, …, {m}`; the last bin `{> m}` pools the tail.
    pub bins: usize,
    pub n: u64,
}

impl GofReport {
    /// Summarizes the fit as a report with the statistic against its null
    /// mean `df`; `pass` follows the one-sided `z`.
    pub fn to_check(&self, name: impl Into<String>, z_max: f64, reps: u64, seed: u64) -> CheckReport {
        let stderr = (2.0 * self.df as f64).sqrt();
        let mut report = CheckReport::within(name, self.df as f64, self.statistic, stderr, z_max, reps, seed);
        report.z = self.z;
        report.pass = self.z <= z_max;
        report
    }
}

/// Tests `samples` against `P(k) = α(1-α)^{k-1}`. Bins are the points
/// `1..m` with `m` the largest value keeping every expected count (the
/// pooled tail `{> m}` included) at least [`MIN_EXPECTED`].
pub fn geometric_fit(samples: &[u64], alpha: f64) -> Result<GofReport, AnalysisError> {
    if samples.is_empty() {
        return Err(AnalysisError::EmptySamples);
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(AnalysisError::InvalidArgument(format!("alpha must lie in (0, 1], got {alpha}")));
    }
    if samples.contains(&0) {
        return Err(AnalysisError::InvalidArgument("geometric samples must be positive".into()));
    }
    let n = samples.len() as u64;
    let nf = n as f64;
    let q = 1.0 - alpha;
    let expected_at = |k: u64| nf * alpha * q.powi(k as i32 - 1);
    let tail_after = |m: u64| nf * q.powi(m as i32);

    let mut m = 0u64;
    while expected_at(m + 1) >= MIN_EXPECTED && tail_after(m + 1) >= MIN_EXPECTED {
        m += 1;
    }
    // All mass in too few points: a single bin {≥ 1} carries every sample.
    let mut observed = vec![0u64; m as usize + 1];
    for &s in samples {
        let bin = if s <= m { s as usize - 1 } else { m as usize };
        observed[bin] += 1;
    }
    let mut statistic = 0.0;
    for (b, &o) in observed.iter().enumerate() {
        let e = if (b as u64) < m { expected_at(b as u64 + 1) } else { tail_after(m) };
        if e > 0.0 {
            statistic += (o as f64 - e).powi(2) / e;
        } else if o > 0 {
            statistic = f64::INFINITY;
        }
    }
    if alpha == 1.0 && observed.len() == 1 && samples.iter().any(|&s| s > 1) {
        // Every mass point sits at 1; pooling would hide impossible values.
        statistic = f64::INFINITY;
    }
    let df = m as usize;
    let p_value = if df == 0 {
        if statistic == 0.0 { 1.0 } else { 0.0 }
    } else {
        ChiSquared::new(df as f64).expect("df > 0").sf(statistic)
    };
    let z = if p_value <= 0.0 {
        f64::INFINITY
    } else {
        (-Normal::standard().inverse_cdf(p_value)).max(0.0)
    };
    Ok(GofReport { statistic, df, p_value, z, bins: m as usize + 1, n })
}

/// `C`, the merger index of the first jump of `f1`, from every replicate.
pub fn sample_c(spec: &MeasureSpec, reps: u64, seed: u64) -> Result<Vec<u64>, AnalysisError> {
    let stream_seed = subseed(seed, "first-jump-index");
    let options = EngineOptions::checked();
    Ok(crate::with_weight!(spec, W => {
        replicate::collect(reps, |r| {
            let clade: MinimalClade<W> = minimal_clade_sample_with(spec, &options, &mut derive_stream(stream_seed, r))?;
            Ok::<_, EngineError>(clade.c as u64)
        })?
    }))
}

/// `I(i) - i`, the number of mergers until block `i` next merges.
pub fn sample_next_merge_gap(spec: &MeasureSpec, i: usize, reps: u64, seed: u64) -> Result<Vec<u64>, AnalysisError> {
    if i == 0 {
        return Err(AnalysisError::InvalidArgument("blocks are numbered from 1".into()));
    }
    let stream_seed = subseed(seed, &format!("next-merge:{i}"));
    let options = EngineOptions::checked();
    Ok(crate::with_weight!(spec, W => {
        replicate::collect(reps, |r| {
            let mut rng = derive_stream(stream_seed, r);
            let mut run = CoalescentRun::<W>::new(spec)?.with_cap(options.cap);
            loop {
                if run.is_terminated() {
                    // A total merger absorbs block i at its own formation or
                    // at the next event; both are covered by `first_merge`.
                    return Err(EngineError::Terminated);
                }
                run.step_merger(&mut rng)?;
                if options.check_invariants {
                    run.check_invariants()?;
                }
                if let Some(next) = run.first_merge(i) {
                    return Ok((next - i) as u64);
                }
            }
        })?
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_alpha_one_is_a_perfect_fit() {
        let fit = geometric_fit(&vec![1; 10_000], 1.0).unwrap();
        assert_eq!((fit.statistic, fit.df, fit.z), (0.0, 0, 0.0));
        assert_eq!(fit.p_value, 1.0);
        let bad = geometric_fit(&[1, 1, 2], 1.0).unwrap();
        assert_eq!(bad.statistic, f64::INFINITY);
        assert!(bad.z.is_infinite());
    }

    #[test]
    fn rejects_empty_and_invalid_input() {
        assert_eq!(geometric_fit(&[], 0.5), Err(AnalysisError::EmptySamples));
        assert!(geometric_fit(&[1, 2], 0.0).is_err());
        assert!(geometric_fit(&[0, 2], 0.5).is_err());
    }

    #[test]
    fn bins_keep_expected_counts_large() {
        // With n = 1000 and alpha = 1/2 the point masses 500, 250, …, 7.8 and
        // tails 500, 250, …, 7.8 are >= 5 up to m = 7.
        let samples: Vec<u64> = (0..1000).map(|i| (i % 3) + 1).collect();
        let fit = geometric_fit(&samples, 0.5).unwrap();
        assert_eq!(fit.df, 7);
        assert_eq!(fit.bins, 8);
    }

    #[test]
    fn exact_geometric_counts_fit() {
        // Observed equal to expected: statistic 0.
        let mut samples = Vec::new();
        for (k, count) in [(1u64, 512), (2, 256), (3, 128), (4, 64), (5, 32), (6, 16), (7, 8), (8, 4), (9, 2), (10, 2)] {
            samples.extend(std::iter::repeat_n(k, count));
        }
        let fit = geometric_fit(&samples, 0.5).unwrap();
        assert!(fit.statistic < 1e-9, "{}", fit.statistic);
        assert_eq!(fit.z, 0.0);
    }

    #[test]
    fn sampled_indices_are_positive() {
        let spec = MeasureSpec::parse("dirac:1/2").unwrap();
        let gaps = sample_next_merge_gap(&spec, 1, 200, 5).unwrap();
        assert!(gaps.iter().all(|&g| g >= 1));
        let cs = sample_c(&spec, 200, 5).unwrap();
        assert!(cs.iter().all(|&c| c >= 1));
    }
}
