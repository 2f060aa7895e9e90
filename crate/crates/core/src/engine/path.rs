use rand::Rng;

use super::{CoalescentRun, EngineError, EngineOptions, EngineWeight};
use crate::measures::MeasureSpec;
use crate::weight::Weight;

/// The jump chain of `f1`, the frequency of the block containing 1.
#[derive(Clone, Debug, PartialEq)]
pub struct F1Path<W> {
    /// Absolute times of the jumps of `f1`.
    pub jump_times: Vec<f64>,
    /// `f1[k]`, the value after the `k`-th jump.
    pub values: Vec<W>,
    /// `X_k = (f1[k] - f1[k-1]) / (1 - f1[k-1])`.
    pub sticks: Vec<W>,
    /// Merger index of each jump; the first entry is `C`.
    pub jump_mergers: Vec<usize>,
    /// Time of the last simulated Poisson point (`+∞` once terminated).
    pub horizon: f64,
    /// A paintbox value of 1 merged everything before the requested horizon.
    pub terminated: bool,
    /// Number of mergers simulated.
    pub mergers: usize,
}

impl<W: Weight> F1Path<W> {
    pub fn c(&self) -> Option<usize> {
        self.jump_mergers.first().copied()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `Σ_{i≤k} X_i ∏_{j<i}(1 - X_j)` for every `k`.
    pub fn stick_breaking_values(&self) -> Vec<W> {
        let mut out = Vec::with_capacity(self.sticks.len());
        let mut remaining = W::one();
        let mut acc = W::zero();
        for x in &self.sticks {
            acc = acc.add(&x.mul(&remaining));
            remaining = remaining.mul(&x.complement());
            out.push(acc.clone());
        }
        out
    }

    /// Checks monotonicity of values and jump times, positivity of the
    /// sticks, `f1 < 1` when `Λ({1}) = 0`, and the stick-breaking
    /// reconstruction of every value.
    pub fn check_invariants(&self, mass_at_one: f64) -> Result<(), EngineError> {
        let fail = |what: String| Err(EngineError::Invariant { merger: self.mergers, what });
        for w in self.values.windows(2) {
            if w[1] <= w[0] {
                return fail(format!("f1 not strictly increasing: {:?} then {:?}", w[0], w[1]));
            }
        }
        if self.jump_times.windows(2).any(|w| w[1] <= w[0]) {
            return fail("jump times not strictly increasing".into());
        }
        if self.sticks.iter().any(|x| *x <= W::zero()) {
            return fail("non-positive stick".into());
        }
        if mass_at_one == 0.0 && self.values.iter().any(|v| v.is_one()) {
            return fail("f1 reached 1 although Λ({1}) = 0".into());
        }
        for (k, (rebuilt, v)) in self.stick_breaking_values().iter().zip(&self.values).enumerate() {
            if !rebuilt.matches(v) {
                return fail(format!("stick-breaking gives {rebuilt:?} for f1[{}] = {v:?}", k + 1));
            }
        }
        Ok(())
    }
}

/// When a simulation stops.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Horizon {
    /// After the `k`-th jump of `f1`.
    Jumps(usize),
    /// At the first Poisson point later than this time.
    Time(f64),
}

/// Simulates `f1` until its `k_jumps`-th jump (or termination).
pub fn simulate_f1<W: EngineWeight, R: Rng + ?Sized>(
    spec: &MeasureSpec,
    k_jumps: usize,
    rng: &mut R,
) -> Result<F1Path<W>, EngineError> {
    simulate_f1_with(spec, Horizon::Jumps(k_jumps), &EngineOptions::default(), rng)
}

/// Simulates `f1` on `[0, t_end]`.
pub fn simulate_f1_until<W: EngineWeight, R: Rng + ?Sized>(
    spec: &MeasureSpec,
    t_end: f64,
    rng: &mut R,
) -> Result<F1Path<W>, EngineError> {
    simulate_f1_with(spec, Horizon::Time(t_end), &EngineOptions::default(), rng)
}

pub fn simulate_f1_with<W: EngineWeight, R: Rng + ?Sized>(
    spec: &MeasureSpec,
    horizon: Horizon,
    options: &EngineOptions,
    rng: &mut R,
) -> Result<F1Path<W>, EngineError> {
    match horizon {
        Horizon::Jumps(0) => return Err(EngineError::InvalidArgument("k_jumps must be at least 1".into())),
        Horizon::Time(t) if !(t >= 0.0) || !t.is_finite() => {
            return Err(EngineError::InvalidArgument(format!("time horizon must be finite and >= 0, got {t}")))
        }
        _ => {}
    }
    let mut run = CoalescentRun::<W>::new(spec)?.with_cap(options.cap);
    let mut path = F1Path {
        jump_times: Vec::new(),
        values: Vec::new(),
        sticks: Vec::new(),
        jump_mergers: Vec::new(),
        horizon: 0.0,
        terminated: false,
        mergers: 0,
    };
    loop {
        let done = match horizon {
            Horizon::Jumps(k) => path.values.len() >= k,
            Horizon::Time(t) => run.time() > t,
        };
        if done {
            break;
        }
        if run.is_terminated() {
            path.terminated = true;
            break;
        }
        let rec = run.step_merger(rng)?;
        if options.check_invariants {
            run.check_invariants()?;
        }
        if rec.one_joined {
            let value = run.block_of_one().expect("1 joined a block").freq.clone();
            let stick = match path.values.last() {
                None => value.clone(),
                Some(prev) => value.sub(prev).div(&prev.complement()),
            };
            path.jump_times.push(rec.time);
            path.values.push(value);
            path.sticks.push(stick);
            path.jump_mergers.push(rec.index);
        }
    }
    path.mergers = run.mergers();
    path.horizon = if run.is_terminated() { f64::INFINITY } else { run.time() };
    if options.check_invariants {
        path.check_invariants(spec.mass_at_one())?;
    }
    Ok(path)
}

/// Càdlàg evaluation of `f1(t)`.
pub fn f1_at<W: Weight>(path: &F1Path<W>, t: f64) -> Result<W, EngineError> {
    if !(t >= 0.0) {
        return Err(EngineError::InvalidArgument(format!("t must be >= 0, got {t}")));
    }
    if t > path.horizon {
        return Err(EngineError::HorizonExceeded { t, horizon: path.horizon });
    }
    let jumped = path.jump_times.partition_point(|&s| s <= t);
    Ok(match jumped {
        0 => W::zero(),
        k => path.values[k - 1].clone(),
    })
}

impl<W: Weight> F1Path<W> {
    pub fn at(&self, t: f64) -> Result<W, EngineError> {
        f1_at(self, t)
    }
}

/// The block of 1 at its first merger.
#[derive(Clone, Debug, PartialEq)]
pub struct MinimalClade<W> {
    pub f1_first: W,
    /// Merger index of the first jump.
    pub c: usize,
    /// Singleton sets making up the block.
    pub members: Vec<u32>,
    pub time: f64,
}

pub fn minimal_clade_sample<W: EngineWeight, R: Rng + ?Sized>(
    spec: &MeasureSpec,
    rng: &mut R,
) -> Result<MinimalClade<W>, EngineError> {
    minimal_clade_sample_with(spec, &EngineOptions::default(), rng)
}

pub fn minimal_clade_sample_with<W: EngineWeight, R: Rng + ?Sized>(
    spec: &MeasureSpec,
    options: &EngineOptions,
    rng: &mut R,
) -> Result<MinimalClade<W>, EngineError> {
    let mut run = CoalescentRun::<W>::new(spec)?.with_cap(options.cap);
    loop {
        let rec = run.step_merger(rng)?;
        if options.check_invariants {
            run.check_invariants()?;
        }
        if rec.one_joined {
            let block = run.block_of_one().expect("1 joined a block");
            return Ok(MinimalClade { f1_first: block.freq.clone(), c: rec.index, members: block.members.clone(), time: rec.time });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stream::derive_stream;
    use num_rational::BigRational;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn stick_breaking_reproduces_values() {
        for text in ["dirac:1/2", "dirac:2/3", "beta:3:1", "atoms:0.3,1;0.8,2"] {
            let spec = MeasureSpec::parse(text).unwrap();
            for r in 0..50 {
                let mut rng = derive_stream(17, r);
                crate::with_weight!(spec, W => {
                    let path: F1Path<W> =
                        simulate_f1_with(&spec, Horizon::Jumps(4), &EngineOptions::checked(), &mut rng).unwrap();
                    assert_eq!(path.len(), 4);
                    let rebuilt = path.stick_breaking_values();
                    assert!(rebuilt[1].matches(&path.sticks[0].add(&path.sticks[0].complement().mul(&path.sticks[1]))));
                    assert!(rebuilt.iter().zip(&path.values).all(|(a, b)| a.matches(b)));
                });
            }
        }
    }

    #[test]
    fn f1_at_is_cadlag() {
        let spec = MeasureSpec::parse("dirac:1/2").unwrap();
        let mut rng = derive_stream(2, 0);
        let path: F1Path<BigRational> = simulate_f1(&spec, 3, &mut rng).unwrap();
        let t1 = path.jump_times[0];
        assert_eq!(path.at(0.0).unwrap(), q(0, 1));
        assert_eq!(path.at(t1).unwrap(), path.values[0]);
        assert_eq!(path.at(t1 * (1.0 - 1e-12)).unwrap(), q(0, 1));
        assert_eq!(path.at(path.jump_times[2]).unwrap(), path.values[2]);
        assert!(matches!(path.at(path.horizon + 1.0), Err(EngineError::HorizonExceeded { .. })));
        assert!(path.at(-1.0).is_err());
    }

    #[test]
    fn time_horizon_covers_requested_window() {
        let spec = MeasureSpec::parse("beta:3:1").unwrap();
        for r in 0..100 {
            let mut rng = derive_stream(4, r);
            let path: F1Path<f64> = simulate_f1_until(&spec, 1.0, &mut rng).unwrap();
            assert!(path.horizon > 1.0);
            assert!(path.at(1.0).is_ok());
        }
    }

    #[test]
    fn star_shaped_path_terminates_at_one() {
        let spec = MeasureSpec::parse("dirac:1").unwrap();
        let mut rng = derive_stream(0, 0);
        let path: F1Path<BigRational> = simulate_f1(&spec, 3, &mut rng).unwrap();
        assert!(path.terminated);
        assert_eq!(path.values, vec![q(1, 1)]);
        assert_eq!(path.horizon, f64::INFINITY);
        assert_eq!(path.at(1e9).unwrap(), q(1, 1));

        let clade: MinimalClade<BigRational> = minimal_clade_sample(&spec, &mut rng).unwrap();
        assert_eq!((clade.f1_first, clade.c, clade.members), (q(1, 1), 1, vec![1]));
    }

    #[test]
    fn zero_jumps_rejected() {
        let spec = MeasureSpec::parse("dirac:1/2").unwrap();
        let mut rng = derive_stream(0, 0);
        assert!(simulate_f1::<f64, _>(&spec, 0, &mut rng).is_err());
    }

    #[test]
    fn minimal_clade_matches_path_start() {
        let spec = MeasureSpec::parse("dirac:1/2").unwrap();
        for r in 0..100 {
            let clade: MinimalClade<BigRational> = minimal_clade_sample(&spec, &mut derive_stream(8, r)).unwrap();
            let path: F1Path<BigRational> = simulate_f1(&spec, 1, &mut derive_stream(8, r)).unwrap();
            assert_eq!(clade.f1_first, path.values[0]);
            assert_eq!(Some(clade.c), path.c());
            assert_eq!(*clade.members.last().unwrap() as usize, clade.c);
            let value = clade
                .members
                .iter()
                .fold(q(0, 1), |acc, &i| acc + q(1, 2) * num_traits::pow(q(1, 2), i as usize - 1));
            assert_eq!(value, clade.f1_first);
        }
    }
}
