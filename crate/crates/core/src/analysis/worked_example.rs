//! The worked Dirac(1/2) example: after `f1[1] = 5/8` the next stick can be
//! 1/6, after `f1[1] = 1/2` it cannot.

use num_rational::BigRational;
use serde::Serialize;

use super::nonmarkov::MIN_HITS;
use super::report::{proportion, CheckReport};
use super::AnalysisError;
use crate::engine::{simulate_f1_with, EngineError, EngineOptions, F1Path, Horizon};
use crate::measures::MeasureSpec;
use crate::replicate;
use crate::stream::{derive_stream, subseed};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct WorkedExampleCounts {
    pub reps: u64,
    pub seed: u64,
    /// `f1[1] = 1/2`.
    pub first_half: u64,
    /// `f1[1] = 1/2` and `X_2 = 1/6`.
    pub half_then_sixth: u64,
    /// `f1[1] = 5/8`.
    pub first_five_eighths: u64,
    /// `f1[1] = 5/8` and `f1[2] = 11/16`.
    pub five_eighths_then_eleven: u64,
}

impl WorkedExampleCounts {
    fn merge(self, o: Self) -> Self {
        Self {
            reps: self.reps,
            seed: self.seed,
            first_half: self.first_half + o.first_half,
            half_then_sixth: self.half_then_sixth + o.half_then_sixth,
            first_five_eighths: self.first_five_eighths + o.first_five_eighths,
            five_eighths_then_eleven: self.five_eighths_then_eleven + o.five_eighths_then_eleven,
        }
    }

    pub fn reports(&self, z_max: f64) -> Vec<CheckReport> {
        let (reps, seed) = (self.reps, self.seed);
        let mut out = Vec::new();
        let (p, se) = proportion(self.first_five_eighths, reps);
        out.push(CheckReport::within("worked_example_p_f1_first_eq_5/8", 1.0 / 64.0, p, se, z_max, reps, seed));
        let (p, se) = proportion(self.first_half, reps);
        out.push(CheckReport::within("worked_example_p_f1_first_eq_1/2", 0.5, p, se, z_max, reps, seed));
        let name = "worked_example_cond_f1_second_eq_11/16_given_5/8";
        if self.first_five_eighths >= MIN_HITS {
            let (c, se) = proportion(self.five_eighths_then_eleven, self.first_five_eighths);
            out.push(CheckReport::within(name, 0.25, c, se, z_max, self.first_five_eighths, seed));
        } else {
            out.push(CheckReport::unavailable(name, 0.25, self.first_five_eighths, seed));
        }
        let name = "worked_example_count_x2_eq_1/6_given_1/2";
        if self.first_half >= MIN_HITS {
            out.push(CheckReport::exact(name, 0.0, self.half_then_sixth as f64, self.half_then_sixth == 0, self.first_half, seed));
        } else {
            out.push(CheckReport::unavailable(name, 0.0, self.first_half, seed));
        }
        out
    }
}

/// Runs `reps` exact Dirac(1/2) paths to their second jump.
pub fn worked_example_counts(reps: u64, seed: u64) -> Result<WorkedExampleCounts, AnalysisError> {
    let spec = MeasureSpec::dirac(q(1, 2)).expect("1/2 is a valid atom");
    let stream_seed = subseed(seed, "worked-example");
    let options = EngineOptions::checked();
    let (half, sixth, five_eighths, eleven) = (q(1, 2), q(1, 6), q(5, 8), q(11, 16));
    let zero = WorkedExampleCounts { reps, seed, ..Default::default() };
    let counts = replicate::fold(
        reps,
        || zero,
        |acc, r| {
            let path: F1Path<BigRational> =
                simulate_f1_with(&spec, Horizon::Jumps(2), &options, &mut derive_stream(stream_seed, r))?;
            if path.values[0] == half {
                acc.first_half += 1;
                acc.half_then_sixth += (path.sticks[1] == sixth) as u64;
            } else if path.values[0] == five_eighths {
                acc.first_five_eighths += 1;
                acc.five_eighths_then_eleven += (path.values[1] == eleven) as u64;
            }
            Ok::<_, EngineError>(())
        },
        WorkedExampleCounts::merge,
    )?;
    Ok(counts)
}

/// Counts and reports for the worked example.
pub fn worked_example_check(reps: u64, seed: u64, z_max: f64) -> Result<Vec<CheckReport>, AnalysisError> {
    Ok(worked_example_counts(reps, seed)?.reports(z_max))
}

fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}
