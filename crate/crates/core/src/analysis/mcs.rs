//! Convergence of the minimal clade size `M_n / n` to `f1[1]`.

use serde::Serialize;

use super::report::{CheckReport, SampleStats};
use super::AnalysisError;
use crate::engine::{simulate_n_mcs_with, EngineError, EngineOptions, McsSample};
use crate::measures::MeasureSpec;
use crate::replicate;
use crate::stream::{derive_stream, subseed};
use crate::weight::Weight;

/// One replicate of the coupled restriction.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct McsRecord {
    pub replicate: u64,
    pub n: u64,
    #[serde(rename = "M_n")]
    pub m_n: u64,
    #[serde(rename = "M_n_over_n")]
    pub ratio: f64,
    pub f1_first: f64,
    /// `num/den` in exact runs, the decimal otherwise.
    pub f1_first_exact: String,
}

/// `reps` coupled samples of `(M_n, f1[1])`.
pub fn mcs_records(spec: &MeasureSpec, n: u64, reps: u64, seed: u64) -> Result<Vec<McsRecord>, AnalysisError> {
    let stream_seed = subseed(seed, &format!("mcs:{n}"));
    let options = EngineOptions::checked();
    Ok(crate::with_weight!(spec, W => {
        replicate::collect(reps, |r| {
            let s: McsSample<W> = simulate_n_mcs_with(spec, n, &options, &mut derive_stream(stream_seed, r))?;
            Ok::<_, EngineError>(McsRecord {
                replicate: r,
                n,
                m_n: s.m_n,
                ratio: s.ratio(),
                f1_first: s.f1_first.to_f64(),
                f1_first_exact: s.f1_first.render(),
            })
        })?
    }))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct McsRow {
    pub n: u64,
    pub reps: u64,
    pub mean_gap: f64,
    pub gap_stderr: f64,
    pub mean_ratio: f64,
    pub ratio_stderr: f64,
}

/// Mean coupled gap `|M_n/n − f1[1]|` and mean `M_n/n` per `n`.
pub fn mcs_convergence(spec: &MeasureSpec, n_list: &[u64], reps: u64, seed: u64) -> Result<Vec<McsRow>, AnalysisError> {
    if n_list.is_empty() || n_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(AnalysisError::InvalidArgument("n values must be strictly increasing".into()));
    }
    n_list
        .iter()
        .map(|&n| {
            let records = mcs_records(spec, n, reps, seed)?;
            let gaps = SampleStats::from_slice(&records.iter().map(|r| (r.ratio - r.f1_first).abs()).collect::<Vec<_>>());
            let ratios = SampleStats::from_slice(&records.iter().map(|r| r.ratio).collect::<Vec<_>>());
            Ok(McsRow {
                n,
                reps,
                mean_gap: gaps.mean(),
                gap_stderr: gaps.stderr(),
                mean_ratio: ratios.mean(),
                ratio_stderr: ratios.stderr(),
            })
        })
        .collect()
}

/// Strict decrease of the mean gap, and the mean of `M_n/n` at the largest
/// `n` against `γ`.
pub fn mcs_reports(rows: &[McsRow], gamma: f64, z_max: f64, seed: u64) -> Vec<CheckReport> {
    let mut out = Vec::new();
    let violations = rows.windows(2).filter(|w| w[1].mean_gap >= w[0].mean_gap).count();
    let reps = rows.first().map_or(0, |r| r.reps);
    out.push(CheckReport::exact("mcs_gap_strictly_decreasing", 0.0, violations as f64, violations == 0, reps, seed));
    if let Some(last) = rows.last() {
        out.push(CheckReport::within(format!("mcs_ratio_mean_n{}", last.n), gamma, last.mean_ratio, last.ratio_stderr, z_max, last.reps, seed));
    }
    out
}
