//! Checks on the jump chain of `f1`: means of `f1[k]`, the sticks `X_k`,
//! and the exponential inter-jump times.

use num_rational::BigRational;

use super::report::{CheckReport, SampleStats};
use super::AnalysisError;
use crate::engine::{simulate_f1_with, EngineOptions, F1Path, Horizon};
use crate::measures::MeasureSpec;
use crate::replicate;
use crate::stream::{derive_stream, subseed};
use crate::weight::Weight;

/// The first `k_max` jumps of `f1` from every replicate, as floats, plus
/// exact-event tallies.
#[derive(Clone, Debug, PartialEq)]
pub struct JumpChainSample {
    pub k_max: usize,
    pub reps: u64,
    pub seed: u64,
    /// `values[r][k-1] = f1[k]`; `1` after termination.
    pub values: Vec<Vec<f64>>,
    /// `sticks[r][k-1] = X_k`; NaN after termination.
    pub sticks: Vec<Vec<f64>>,
    /// Inter-jump times; NaN after termination.
    pub intervals: Vec<Vec<f64>>,
    /// Replicates with a stick `≤ 0`, compared exactly in rational mode.
    pub nonpositive_sticks: u64,
    /// For exact Dirac(1/2) runs: replicates with `X_1 = 1/6` and `X_2 = 1/6`.
    pub sixth_hits: Option<(u64, u64)>,
}

struct Row {
    values: Vec<f64>,
    sticks: Vec<f64>,
    intervals: Vec<f64>,
    nonpositive: bool,
    sixth: (bool, bool),
}

impl JumpChainSample {
    pub fn simulate(spec: &MeasureSpec, k_max: usize, reps: u64, seed: u64) -> Result<Self, AnalysisError> {
        if k_max == 0 {
            return Err(AnalysisError::InvalidArgument("k_max must be at least 1".into()));
        }
        let stream_seed = subseed(seed, "jump-chain");
        let options = EngineOptions::checked();
        let track_sixth = spec.exact_dirac() == Some(&BigRational::new(1.into(), 2.into()));
        let rows: Vec<Row> = crate::with_weight!(spec, W => {
            replicate::collect(reps, |r| {
                let mut rng = derive_stream(stream_seed, r);
                let path: F1Path<W> = simulate_f1_with(spec, Horizon::Jumps(k_max), &options, &mut rng)?;
                let sixth = (W::EXACT && track_sixth).then(|| W::from_ratio(1, 6));
                Ok::<_, AnalysisError>(row_of(&path, k_max, sixth.as_ref()))
            })?
        });
        let nonpositive_sticks = rows.iter().filter(|r| r.nonpositive).count() as u64;
        let sixth_hits = track_sixth.then(|| {
            (rows.iter().filter(|r| r.sixth.0).count() as u64, rows.iter().filter(|r| r.sixth.1).count() as u64)
        });
        let mut sample = Self {
            k_max,
            reps,
            seed,
            values: Vec::with_capacity(rows.len()),
            sticks: Vec::with_capacity(rows.len()),
            intervals: Vec::with_capacity(rows.len()),
            nonpositive_sticks,
            sixth_hits,
        };
        for row in rows {
            sample.values.push(row.values);
            sample.sticks.push(row.sticks);
            sample.intervals.push(row.intervals);
        }
        Ok(sample)
    }

    fn column(rows: &[Vec<f64>], k: usize) -> Vec<f64> {
        rows.iter().map(|r| r[k]).filter(|x| !x.is_nan()).collect()
    }

    /// `E f1[k] = 1 - (1-γ)^k` for `k = 1..k_max`.
    pub fn moment_reports(&self, gamma: f64, z_max: f64) -> Vec<CheckReport> {
        (0..self.k_max)
            .map(|k| {
                let stats = SampleStats::from_slice(&Self::column(&self.values, k));
                let target = 1.0 - (1.0 - gamma).powi(k as i32 + 1);
                CheckReport::within(format!("f1_mean_k{}", k + 1), target, stats.mean(), stats.stderr(), z_max, self.reps, self.seed)
            })
            .collect()
    }

    /// Stick means against `γ`, pairwise correlations against 0, strict
    /// positivity, and (for Dirac(1/2)) the law difference of `X_1`, `X_2`
    /// at the value 1/6.
    pub fn stick_reports(&self, gamma: f64, z_max: f64) -> Vec<CheckReport> {
        let mut out = Vec::new();
        let columns: Vec<Vec<f64>> = (0..self.k_max).map(|k| Self::column(&self.sticks, k)).collect();
        for (k, col) in columns.iter().enumerate() {
            if col.len() < 2 {
                continue;
            }
            let stats = SampleStats::from_slice(col);
            out.push(CheckReport::within(format!("stick_mean_k{}", k + 1), gamma, stats.mean(), stats.stderr(), z_max, self.reps, self.seed));
        }
        for j in 0..self.k_max {
            for k in j + 1..self.k_max {
                let pairs: Vec<(f64, f64)> = self
                    .sticks
                    .iter()
                    .map(|r| (r[j], r[k]))
                    .filter(|(a, b)| !a.is_nan() && !b.is_nan())
                    .collect();
                if let Some((corr, se)) = correlation(&pairs) {
                    out.push(CheckReport::within(format!("stick_corr_{}_{}", j + 1, k + 1), 0.0, corr, se, z_max, self.reps, self.seed));
                }
            }
        }
        out.push(CheckReport::exact(
            "sticks_positive",
            0.0,
            self.nonpositive_sticks as f64,
            self.nonpositive_sticks == 0,
            self.reps,
            self.seed,
        ));
        if let Some((x1, x2)) = self.sixth_hits {
            let n = self.reps as f64;
            out.push(CheckReport::exact("stick_x1_eq_1/6_count", 0.0, x1 as f64, x1 == 0, self.reps, self.seed));
            if self.k_max >= 2 {
                let (p1, p2) = (x1 as f64 / n, x2 as f64 / n);
                let se = (p1 * (1.0 - p1) / n + p2 * (1.0 - p2) / n).sqrt();
                out.push(CheckReport::exceeds("stick_law_x2_vs_x1_at_1/6", 0.0, p2 - p1, se, z_max, self.reps, self.seed));
            }
        }
        out
    }

    /// Mean of the `k`-th inter-jump time against `1/μ₋₁`.
    pub fn jump_time_reports(&self, mu1: f64, z_max: f64) -> Vec<CheckReport> {
        (0..self.k_max)
            .filter_map(|k| {
                let col = Self::column(&self.intervals, k);
                (col.len() >= 2).then(|| {
                    let stats = SampleStats::from_slice(&col);
                    CheckReport::within(format!("jump_interval_mean_k{}", k + 1), 1.0 / mu1, stats.mean(), stats.stderr(), z_max, self.reps, self.seed)
                })
            })
            .collect()
    }
}

fn row_of<W: Weight>(path: &F1Path<W>, k_max: usize, sixth: Option<&W>) -> Row {
    let mut values = vec![1.0; k_max];
    let mut sticks = vec![f64::NAN; k_max];
    let mut intervals = vec![f64::NAN; k_max];
    let mut prev_time = 0.0;
    for k in 0..path.len().min(k_max) {
        values[k] = path.values[k].to_f64();
        sticks[k] = path.sticks[k].to_f64();
        intervals[k] = path.jump_times[k] - prev_time;
        prev_time = path.jump_times[k];
    }
    let nonpositive = path.sticks.iter().any(|x| *x <= W::zero());
    let hit = |k: usize| match (sixth, path.sticks.get(k)) {
        (Some(s), Some(x)) => x == s,
        _ => false,
    };
    Row { values, sticks, intervals, nonpositive, sixth: (hit(0), hit(1)) }
}

/// Sample correlation with the standard error of the sample covariance of
/// standardized variables, `sd(Z_a Z_b) / √n`. This does not assume
/// independence, only zero correlation.
pub fn correlation(pairs: &[(f64, f64)]) -> Option<(f64, f64)> {
    let n = pairs.len();
    if n < 3 {
        return None;
    }
    let nf = n as f64;
    let (ma, mb) = pairs.iter().fold((0.0, 0.0), |(a, b), &(x, y)| (a + x, b + y));
    let (ma, mb) = (ma / nf, mb / nf);
    let (va, vb) = pairs
        .iter()
        .fold((0.0, 0.0), |(a, b), &(x, y)| (a + (x - ma).powi(2), b + (y - mb).powi(2)));
    let (sa, sb) = ((va / nf).sqrt(), (vb / nf).sqrt());
    if sa == 0.0 || sb == 0.0 {
        return None;
    }
    let products = SampleStats::from_slice(&pairs.iter().map(|&(x, y)| (x - ma) / sa * (y - mb) / sb).collect::<Vec<_>>());
    Some((products.mean(), products.stderr()))
}

/// `E f1[k] = 1 - (1-γ)^k` for `k = 1..k_max`.
pub fn moment_check(spec: &MeasureSpec, k_max: usize, reps: u64, seed: u64, z_max: f64) -> Result<Vec<CheckReport>, AnalysisError> {
    let sample = JumpChainSample::simulate(spec, k_max, reps, seed)?;
    Ok(sample.moment_reports(spec.moments().gamma, z_max))
}

pub fn stick_correlation_check(spec: &MeasureSpec, k_max: usize, reps: u64, seed: u64, z_max: f64) -> Result<Vec<CheckReport>, AnalysisError> {
    let sample = JumpChainSample::simulate(spec, k_max, reps, seed)?;
    Ok(sample.stick_reports(spec.moments().gamma, z_max))
}

pub fn jump_time_check(spec: &MeasureSpec, k_max: usize, reps: u64, seed: u64, z_max: f64) -> Result<Vec<CheckReport>, AnalysisError> {
    let sample = JumpChainSample::simulate(spec, k_max, reps, seed)?;
    Ok(sample.jump_time_reports(spec.moments().mu1, z_max))
}

/// `E f1(t) = 1 - e^{-t}`, valid when `Λ([0,1]) = 1`.
pub fn fixed_time_check(spec: &MeasureSpec, t: f64, reps: u64, seed: u64, z_max: f64) -> Result<CheckReport, AnalysisError> {
    if (spec.moments().total_mass - 1.0).abs() > 1e-12 {
        return Err(AnalysisError::InvalidArgument(format!("E f1(t) = 1 - e^-t needs total mass 1, got {}", spec.moments().total_mass)));
    }
    let stream_seed = subseed(seed, &format!("fixed-t:{t}"));
    let options = EngineOptions::checked();
    let stats = crate::with_weight!(spec, W => {
        replicate::fold(
            reps,
            SampleStats::default,
            |acc, r| {
                let mut rng = derive_stream(stream_seed, r);
                let path: F1Path<W> = simulate_f1_with(spec, Horizon::Time(t), &options, &mut rng)?;
                acc.push(path.at(t)?.to_f64());
                Ok::<_, AnalysisError>(())
            },
            SampleStats::merge,
        )?
    });
    Ok(CheckReport::within(format!("f1_fixed_t_{t}"), 1.0 - (-t).exp(), stats.mean(), stats.stderr(), z_max, reps, seed))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dirac_half_first_jump_is_half_or_less() {
        let spec = MeasureSpec::parse("dirac:1/2").unwrap();
        let sample = JumpChainSample::simulate(&spec, 2, 500, 3).unwrap();
        assert_eq!(sample.values.len(), 500);
        assert!(sample.values.iter().all(|v| v[0] < 1.0 && v[1] > v[0]));
        assert_eq!(sample.nonpositive_sticks, 0);
        assert_eq!(sample.sixth_hits.unwrap().0, 0);
    }

    #[test]
    fn reports_are_named_and_sized() {
        let spec = MeasureSpec::parse("beta:3:1").unwrap();
        let sample = JumpChainSample::simulate(&spec, 3, 2000, 1).unwrap();
        let gamma = spec.moments().gamma;
        assert_eq!(sample.moment_reports(gamma, 4.0).len(), 3);
        let sticks = sample.stick_reports(gamma, 4.0);
        // 3 means, 3 pairs, positivity.
        assert_eq!(sticks.len(), 7);
        assert!(sample.sixth_hits.is_none());
        assert_eq!(sample.jump_time_reports(spec.moments().mu1, 4.0).len(), 3);
    }

    #[test]
    fn star_shaped_sample_pads_after_termination() {
        let spec = MeasureSpec::parse("dirac:1").unwrap();
        let sample = JumpChainSample::simulate(&spec, 3, 10, 0).unwrap();
        assert!(sample.values.iter().all(|v| v == &vec![1.0, 1.0, 1.0]));
        assert!(sample.sticks.iter().all(|s| s[0] == 1.0 && s[1].is_nan()));
        let reports = sample.moment_reports(1.0, 4.0);
        assert!(reports.iter().all(|r| r.pass));
    }

    #[test]
    fn correlation_of_independent_columns_is_small() {
        let pairs: Vec<(f64, f64)> = (0..1000).map(|i| ((i % 7) as f64, (i % 11) as f64)).collect();
        let (c, se) = correlation(&pairs).unwrap();
        assert!(c.abs() < 4.0 * se + 0.01);
        assert!(correlation(&[(1.0, 1.0), (1.0, 2.0), (1.0, 3.0)]).is_none());
    }
}
