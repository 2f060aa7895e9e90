//! Checks of the exact Dirac law of `f1[1]`, including its agreement with
//! simulated minimal clades.

use std::collections::HashMap;

use num_rational::BigRational;
use num_traits::{One, Zero};

use super::report::CheckReport;
use super::AnalysisError;
use crate::dirac_exact::{DiracLaw, ExactLaw, IndexSet};
use crate::engine::{minimal_clade_sample_with, EngineError, EngineOptions, MinimalClade};
use crate::measures::MeasureSpec;
use crate::replicate;
use crate::stream::{derive_stream, subseed};
use crate::weight::{format_rational, rational_to_f64};

/// Bound on the total-variation distance between the exact law and the
/// empirical law of simulated minimal clades.
pub const TV_BOUND: f64 = 0.005;

/// Sizes used by [`exact_law_reports`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExactLawConfig {
    pub depth: usize,
    pub marginal_depth: usize,
    pub marginal_i_max: usize,
    pub tv_draws: u64,
}

impl Default for ExactLawConfig {
    fn default() -> Self {
        Self { depth: 12, marginal_depth: 20, marginal_i_max: 5, tv_draws: 1_000_000 }
    }
}

/// Total-variation distance between `law` and the empirical law of `draws`
/// simulated values of `f1[1]`, both restricted to `C ≤ law.depth`.
pub fn tv_distance(spec: &MeasureSpec, law: &ExactLaw, draws: u64, seed: u64) -> Result<f64, AnalysisError> {
    let stream_seed = subseed(seed, "exact-law-draws");
    let options = EngineOptions::checked();
    let depth = law.depth;
    let counts: HashMap<BigRational, u64> = replicate::fold(
        draws,
        HashMap::new,
        |acc: &mut HashMap<BigRational, u64>, r| {
            let clade: MinimalClade<BigRational> = minimal_clade_sample_with(spec, &options, &mut derive_stream(stream_seed, r))?;
            if clade.c <= depth {
                *acc.entry(clade.f1_first).or_insert(0) += 1;
            }
            Ok::<_, EngineError>(())
        },
        |mut a, b| {
            for (k, v) in b {
                *a.entry(k).or_insert(0) += v;
            }
            a
        },
    )?;
    let n = draws as f64;
    let mut matched = 0u64;
    let mut sum = 0.0;
    for atom in &law.atoms {
        let c = counts.get(&atom.value).copied().unwrap_or(0);
        matched += c;
        sum += (rational_to_f64(&atom.prob) - c as f64 / n).abs();
    }
    let unmatched: u64 = counts.values().sum::<u64>() - matched;
    Ok(0.5 * (sum + unmatched as f64 / n))
}

/// Exact identities of the Dirac law and its distance to simulation.
pub fn exact_law_reports(spec: &MeasureSpec, config: ExactLawConfig, seed: u64) -> Result<Vec<CheckReport>, AnalysisError> {
    let p = spec
        .exact_dirac()
        .ok_or_else(|| AnalysisError::InvalidArgument(format!("exact law checks need dirac:<rational p>, got {spec}")))?
        .clone();
    if p.is_one() {
        return Err(AnalysisError::InvalidArgument("the star-shaped coalescent has f1[1] = 1 surely".into()));
    }
    let dirac = DiracLaw::new(&p)?;
    let law = dirac.enumerate(config.depth)?;
    let q = BigRational::one() - &p;
    let depth = config.depth;
    let mut out = Vec::new();
    let exact = |name: String, target: &BigRational, got: &BigRational| {
        CheckReport::exact(name, rational_to_f64(target), rational_to_f64(got), target == got, 0, seed)
    };

    let single: IndexSet = [1].into_iter().collect();
    out.push(exact(format!("exact_p_f1_first_eq_{}", format_rational(&p)), &p, &law.prob_of(&dirac.value(single))));
    if p == BigRational::new(1.into(), 2.into()) {
        out.push(exact("exact_p_f1_first_eq_5/8".into(), &rat(1, 64), &law.prob_of(&rat(5, 8))));
        out.push(exact("exact_p_f1_first_eq_3/4".into(), &rat(1, 8), &law.prob_of(&rat(3, 4))));
    }
    let bad_strata = (1..=depth)
        .filter(|&j| law.stratum_mass(j) != &p * num_traits::pow(q.clone(), j - 1))
        .count();
    out.push(CheckReport::exact("exact_stratum_masses", 0.0, bad_strata as f64, bad_strata == 0, 0, seed));
    out.push(exact("exact_total_mass".into(), &(BigRational::one() - num_traits::pow(q.clone(), depth)), &law.total_mass));
    let positive = law.atoms.iter().all(|a| a.prob > BigRational::zero());
    out.push(CheckReport::exact("exact_probabilities_positive", 1.0, positive as u8 as f64, positive, 0, seed));
    let mean = law.truncated_mean();
    let mean_ok = mean <= p && mean >= &p - num_traits::pow(q.clone(), depth);
    out.push(CheckReport::exact("exact_truncated_mean_in_range", rational_to_f64(&p), rational_to_f64(&mean), mean_ok, 0, seed));

    if p >= BigRational::new(1.into(), 2.into()) {
        let unique = dirac.check_unique_representation(depth)?;
        out.push(CheckReport::exact("exact_unique_representation", 1.0, unique.unique as u8 as f64, unique.unique, 0, seed));
    }

    let marginals = dirac.marginals_B(config.marginal_i_max, config.marginal_depth)?;
    let slack = num_traits::pow(q.clone(), config.marginal_depth);
    for (k, m) in marginals.iter().enumerate() {
        let limit = dirac.marginal_limit(k + 1);
        let ok = m <= &limit && &limit - m <= slack;
        out.push(CheckReport::exact(format!("exact_marginal_B_i{}", k + 1), rational_to_f64(&limit), rational_to_f64(m), ok, 0, seed));
    }

    let tv = tv_distance(spec, &law, config.tv_draws, seed)?;
    out.push(CheckReport::below("exact_tv_vs_simulation", TV_BOUND, tv, config.tv_draws, seed));
    Ok(out)
}

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identities_hold_and_small_tv_run_is_reported() {
        let spec = MeasureSpec::parse("dirac:1/2").unwrap();
        let config = ExactLawConfig { depth: 6, marginal_depth: 10, marginal_i_max: 3, tv_draws: 2000 };
        let reports = exact_law_reports(&spec, config, 3).unwrap();
        for r in reports.iter().filter(|r| r.name != "exact_tv_vs_simulation") {
            assert!(r.pass, "{r:?}");
        }
        let tv = reports.last().unwrap();
        assert!(tv.estimate > 0.0 && tv.estimate < 0.2);
    }

    #[test]
    fn tv_of_a_law_with_itself_is_small() {
        let spec = MeasureSpec::parse("dirac:2/3").unwrap();
        let law = DiracLaw::new(spec.exact_dirac().unwrap()).unwrap().enumerate(4).unwrap();
        let tv = tv_distance(&spec, &law, 20_000, 1).unwrap();
        assert!(tv < 0.03, "{tv}");
    }

    #[test]
    fn rejects_non_dirac() {
        let spec = MeasureSpec::parse("beta:3:1").unwrap();
        assert!(exact_law_reports(&spec, ExactLawConfig::default(), 0).is_err());
    }
}
