//! Property tests for the measure identities, the engine invariants and the
//! replicate executor.

use dustcoal::analysis::geometric_fit;
use dustcoal::engine::{simulate_f1_with, simulate_n_mcs_with, EngineOptions, F1Path, Horizon};
use dustcoal::replicate::{fold, fold_sequential};
use dustcoal::stream::derive_stream;
use dustcoal::{parse_rational, BigRational, MeasureSpec, Weight};
use proptest::prelude::*;
use rand::Rng;
use rand_distr::{Distribution, Geometric};

fn beta_spec() -> impl Strategy<Value = MeasureSpec> {
    (2.05f64..8.0, 0.3f64..6.0, 0.1f64..3.0).prop_map(|(a, b, m)| MeasureSpec::beta(a, b, m).unwrap())
}

fn atoms_spec() -> impl Strategy<Value = MeasureSpec> {
    prop::collection::vec((0.02f64..0.98, 0.05f64..2.0), 1..4).prop_map(|atoms| MeasureSpec::atoms(atoms).unwrap())
}

fn dirac_spec() -> impl Strategy<Value = MeasureSpec> {
    (1i64..12, 2i64..13)
        .prop_filter("0 < p < 1", |(n, d)| n < d)
        .prop_map(|(n, d)| MeasureSpec::dirac(BigRational::new(n.into(), d.into())).unwrap())
}

fn any_spec() -> impl Strategy<Value = MeasureSpec> {
    prop_oneof![beta_spec(), atoms_spec(), dirac_spec()]
}

fn checked_path<W: dustcoal::engine::EngineWeight>(spec: &MeasureSpec, jumps: usize, seed: u64) -> F1Path<W> {
    simulate_f1_with(spec, Horizon::Jumps(jumps), &EngineOptions::checked(), &mut derive_stream(seed, 0)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn moment_identities(spec in any_spec()) {
        let m = spec.moments();
        prop_assert!(m.mu1 > 0.0 && m.mu2 >= m.mu1 - 1e-12 * m.mu2);
        prop_assert!((m.gamma * m.mu1 - m.total_mass).abs() <= 1e-12 * m.total_mass);
        prop_assert!((m.alpha * m.mu2 - m.mu1).abs() <= 1e-12 * m.mu1);
        prop_assert!(m.gamma > 0.0 && m.gamma <= 1.0 + 1e-12);
        prop_assert!(m.alpha > 0.0 && m.alpha <= 1.0 + 1e-12);
        prop_assert_eq!(m.tau, m.mu1);
        if let Some(exact) = &m.exact {
            prop_assert!(exact.identities_hold());
        }
    }

    #[test]
    fn measure_text_round_trips(spec in any_spec()) {
        let reparsed = MeasureSpec::parse(&spec.to_string()).unwrap();
        prop_assert_eq!(reparsed.moments().mu1, spec.moments().mu1);
        prop_assert_eq!(reparsed.moments().mu2, spec.moments().mu2);
    }

    #[test]
    fn exact_paths_satisfy_invariants(spec in dirac_spec(), seed in any::<u64>(), jumps in 1usize..8) {
        let path: F1Path<BigRational> = checked_path(&spec, jumps, seed);
        path.check_invariants(spec.mass_at_one()).unwrap();
        prop_assert!(path.values.iter().all(|v| v.to_f64() < 1.0));
        prop_assert_eq!(path.stick_breaking_values(), path.values.clone());
    }

    #[test]
    fn float_paths_satisfy_invariants(spec in prop_oneof![beta_spec(), atoms_spec()], seed in any::<u64>(), jumps in 1usize..8) {
        let path: F1Path<f64> = checked_path(&spec, jumps, seed);
        path.check_invariants(spec.mass_at_one()).unwrap();
        prop_assert!(path.values.iter().all(|&v| v > 0.0 && v < 1.0));
        for (rebuilt, v) in path.stick_breaking_values().iter().zip(&path.values) {
            prop_assert!((rebuilt - v).abs() <= 1e-12);
        }
    }

    #[test]
    fn restriction_is_consistent(spec in dirac_spec(), seed in any::<u64>(), n in 2u64..400) {
        let sample = simulate_n_mcs_with::<BigRational, _>(&spec, n, &EngineOptions::checked(), &mut derive_stream(seed, 0)).unwrap();
        prop_assert!(sample.m_n >= 2 && sample.m_n <= n);
        prop_assert!(sample.restricted_merger >= sample.c);
    }

    #[test]
    fn decimal_and_fraction_literals_agree(n in 1i64..1000) {
        let decimal = parse_rational(&format!("{}.{:03}", n / 1000, n % 1000)).unwrap();
        prop_assert_eq!(decimal, BigRational::new(n.into(), 1000.into()));
    }
}

#[test]
fn sequential_and_default_folds_agree_bitwise() {
    let step = |acc: &mut (f64, u64), r: u64| -> Result<(), ()> {
        let x: f64 = derive_stream(5, r).random();
        acc.0 += x.ln();
        acc.1 += (x < 0.3) as u64;
        Ok(())
    };
    let merge = |a: (f64, u64), b: (f64, u64)| (a.0 + b.0, a.1 + b.1);
    for reps in [1, 1023, 1024, 1025, 20_000] {
        let seq = fold_sequential(reps, || (0.0, 0), step, merge).unwrap();
        let par = fold(reps, || (0.0, 0), step, merge).unwrap();
        assert_eq!((seq.0.to_bits(), seq.1), (par.0.to_bits(), par.1), "reps = {reps}");
    }
}

#[test]
fn geometric_fit_accepts_geometric_samples() {
    let alpha = 0.3;
    let law = Geometric::new(alpha).unwrap();
    let passes = (0..100u64)
        .filter(|&seed| {
            let mut rng = derive_stream(seed, 0);
            let samples: Vec<u64> = (0..5000).map(|_| law.sample(&mut rng) + 1).collect();
            geometric_fit(&samples, alpha).unwrap().to_check("c", 4.0, 5000, seed).pass
        })
        .count();
    assert!(passes >= 95, "{passes} of 100 seeds passed");
}

#[test]
fn geometric_fit_rejects_a_wrong_parameter() {
    let law = Geometric::new(0.3).unwrap();
    let mut rng = derive_stream(1, 0);
    let samples: Vec<u64> = (0..20_000).map(|_| law.sample(&mut rng) + 1).collect();
    assert!(!geometric_fit(&samples, 0.33).unwrap().to_check("c", 4.0, 20_000, 1).pass);
}
