//! Exact law of `f1[1]` for Dirac coalescents `Λ = δ_p`.
//!
//! With every paintbox value equal to `p`, singleton set `S_i` has
//! frequency `p q^{i-1}` (`q = 1 - p`) and `f1[1]` is a finite sum of these.
//! An index set `J` with `j = max J` describes the event that 1 first merges
//! at merger `j` and its block collects exactly the singleton sets in `J`,
//! which happens with probability
//!
//! ```text
//! p q^{j-1} ∏_{i ∈ J∖{j}} P(Y+i ∈ J) ∏_{i ∈ [j-1]∖J} P(Y+i ∉ J),   Y ~ Geo(p) on {1,2,…}
//! ```
//!
//! All arithmetic here is exact.

use std::collections::HashMap;
use std::fmt;

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::weight::{format_rational, rational_to_f64};

/// Largest enumeration depth accepted.
pub const MAX_DEPTH: usize = 30;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExactError {
    #[error("p must lie strictly between 0 and 1, got {0}")]
    InvalidP(String),
    #[error("depth {0} exceeds the enumeration guard of {MAX_DEPTH}")]
    DepthTooLarge(usize),
    #[error("depth must be at least 1")]
    DepthZero,
    #[error("index set must be nonempty")]
    EmptySet,
    #[error("index {index} must be below the depth {depth}")]
    IndexOutOfRange { index: usize, depth: usize },
}

/// A finite set of positive indices `≤ 64`, stored as a bit mask
/// (bit `i - 1` for index `i`).
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct IndexSet(u64);

impl IndexSet {
    pub const EMPTY: IndexSet = IndexSet(0);

    pub fn from_bits(bits: u64) -> Self {
        IndexSet(bits)
    }

    pub fn bits(self) -> u64 {
        self.0
    }

    pub fn contains(self, i: usize) -> bool {
        (1..=64).contains(&i) && self.0 & (1 << (i - 1)) != 0
    }

    pub fn insert(&mut self, i: usize) {
        assert!((1..=64).contains(&i), "index {i} outside 1..=64");
        self.0 |= 1 << (i - 1);
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn max(self) -> Option<usize> {
        (self.0 != 0).then(|| 64 - self.0.leading_zeros() as usize)
    }

    pub fn iter(self) -> impl Iterator<Item = usize> {
        (1..=64).filter(move |&i| self.contains(i))
    }
}

impl FromIterator<usize> for IndexSet {
    fn from_iter<T: IntoIterator<Item = usize>>(iter: T) -> Self {
        let mut set = IndexSet::EMPTY;
        for i in iter {
            set.insert(i);
        }
        set
    }
}

impl fmt::Display for IndexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.iter().map(|i| i.to_string()).collect();
        f.write_str(&parts.join(","))
    }
}

impl fmt::Debug for IndexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{self}}}")
    }
}

/// A point of `M_p` with the probability of one representation.
#[derive(Clone, Debug, PartialEq)]
pub struct MpAtom {
    pub set: IndexSet,
    pub value: BigRational,
    pub prob: BigRational,
}

impl MpAtom {
    /// `j = max J`.
    pub fn j(&self) -> usize {
        self.set.max().expect("atoms are nonempty")
    }
}

/// All representations sharing one exact value, with their summed mass.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupedAtom {
    pub value: BigRational,
    pub prob: BigRational,
    pub representations: Vec<MpAtom>,
}

/// Precomputed powers for a fixed `p ∈ (0,1)`.
#[derive(Clone, Debug)]
pub struct DiracLaw {
    p: BigRational,
    q: BigRational,
    q_pow: Vec<BigRational>,
    q_inv_pow: Vec<BigRational>,
}

impl DiracLaw {
    pub fn new(p: &BigRational) -> Result<Self, ExactError> {
        if !p.is_positive() || *p >= BigRational::one() {
            return Err(ExactError::InvalidP(format_rational(p)));
        }
        let q = BigRational::one() - p;
        let mut law = Self { p: p.clone(), q, q_pow: vec![BigRational::one()], q_inv_pow: vec![BigRational::one()] };
        law.ensure_powers(MAX_DEPTH + 2);
        Ok(law)
    }

    fn ensure_powers(&mut self, n: usize) {
        let q_inv = self.q.recip();
        while self.q_pow.len() <= n {
            let next = self.q_pow.last().unwrap() * &self.q;
            self.q_pow.push(next);
            let next = self.q_inv_pow.last().unwrap() * &q_inv;
            self.q_inv_pow.push(next);
        }
    }

    fn q_pow(&self, k: usize) -> BigRational {
        self.q_pow.get(k).cloned().unwrap_or_else(|| num_traits::pow(self.q.clone(), k))
    }

    pub fn p(&self) -> &BigRational {
        &self.p
    }

    /// `P(Y + i ∈ J) = Σ_{m ∈ J, m > i} p q^{m-i-1}`.
    pub fn shifted_geom_hit(&self, i: usize, set: IndexSet) -> BigRational {
        set.iter().filter(|&m| m > i).fold(BigRational::zero(), |acc, m| acc + &self.p * self.q_pow(m - i - 1))
    }

    /// `Σ_{i ∈ J} p q^{i-1}`.
    pub fn value(&self, set: IndexSet) -> BigRational {
        set.iter().fold(BigRational::zero(), |acc, i| acc + &self.p * self.q_pow(i - 1))
    }

    /// Probability of the representation `J`.
    pub fn atom_prob(&self, set: IndexSet) -> Result<BigRational, ExactError> {
        let j = set.max().ok_or(ExactError::EmptySet)?;
        let mut prob = &self.p * self.q_pow(j - 1);
        for i in 1..j {
            let hit = self.shifted_geom_hit(i, set);
            prob *= if set.contains(i) { hit } else { BigRational::one() - hit };
        }
        Ok(prob)
    }

    /// Visits every nonempty `J ⊆ [depth]` with its value and probability,
    /// ordered by `max J` and then by `J` read as a binary counter on
    /// `[max J - 1]` (index 1 is the low bit).
    pub fn for_each_atom(&self, depth: usize, mut visit: impl FnMut(IndexSet, &BigRational, &BigRational)) -> Result<(), ExactError> {
        check_depth(depth)?;
        for j in 1..=depth {
            self.visit_stratum(j, &mut visit);
        }
        Ok(())
    }

    /// All representations with `max J = j`, in binary-counter order.
    pub fn stratum(&self, j: usize) -> Vec<MpAtom> {
        let mut out = Vec::with_capacity(1 << (j - 1));
        self.visit_stratum(j, &mut |set, value, prob| out.push(MpAtom { set, value: value.clone(), prob: prob.clone() }));
        out
    }

    fn visit_stratum(&self, j: usize, visit: &mut impl FnMut(IndexSet, &BigRational, &BigRational)) {
        let mut set = IndexSet::EMPTY;
        set.insert(j);
        let base = &self.p * &self.q_pow[j - 1];
        // `tail` is Σ_{m ∈ J, m > i} q^{m-1}; then P(Y+i ∈ J) = p q^{-i} tail.
        let tail = self.q_pow[j - 1].clone();
        self.descend(j - 1, set, tail, base, visit);
    }

    fn descend(
        &self,
        i: usize,
        set: IndexSet,
        tail: BigRational,
        prob: BigRational,
        visit: &mut impl FnMut(IndexSet, &BigRational, &BigRational),
    ) {
        if i == 0 {
            let value = &self.p * &tail;
            visit(set, &value, &prob);
            return;
        }
        let hit = &self.p * &tail * &self.q_inv_pow[i];
        let miss = BigRational::one() - &hit;
        self.descend(i - 1, set, tail.clone(), prob.clone() * miss, visit);
        let mut with_i = set;
        with_i.insert(i);
        self.descend(i - 1, with_i, tail + &self.q_pow[i - 1], prob * hit, visit);
    }

    pub fn enumerate(&self, depth: usize) -> Result<ExactLaw, ExactError> {
        check_depth(depth)?;
        let strata = strata_in_order(depth, |j| self.stratum(j));
        let mut atoms: Vec<GroupedAtom> = Vec::new();
        let mut index: HashMap<BigRational, usize> = HashMap::new();
        for atom in strata.into_iter().flatten() {
            match index.get(&atom.value) {
                Some(&k) => {
                    let group = &mut atoms[k];
                    group.prob += &atom.prob;
                    group.representations.push(atom);
                }
                None => {
                    index.insert(atom.value.clone(), atoms.len());
                    atoms.push(GroupedAtom { value: atom.value.clone(), prob: atom.prob.clone(), representations: vec![atom] });
                }
            }
        }
        if self.p >= BigRational::new(1.into(), 2.into()) {
            assert!(
                atoms.iter().all(|a| a.representations.len() == 1),
                "representations in M_p are unique for p >= 1/2"
            );
        }
        let total_mass = atoms.iter().fold(BigRational::zero(), |acc, a| acc + &a.prob);
        Ok(ExactLaw { p: self.p.clone(), depth, atoms, total_mass })
    }

    pub fn check_unique_representation(&self, depth: usize) -> Result<Uniqueness, ExactError> {
        check_depth(depth)?;
        let mut seen: HashMap<BigRational, IndexSet> = HashMap::new();
        for j in 1..=depth {
            for low in 0..(1u64 << (j - 1)) {
                let set = IndexSet::from_bits(low | (1 << (j - 1)));
                let value = self.value(set);
                if let Some(&first) = seen.get(&value) {
                    return Ok(Uniqueness { unique: false, collision: Some((first, set, value)) });
                }
                seen.insert(value, set);
            }
        }
        Ok(Uniqueness { unique: true, collision: None })
    }

    /// `P(i ∈ J)` summed over representations with `max J ≤ depth`.
    #[allow(non_snake_case)]
    pub fn marginal_B(&self, i: usize, depth: usize) -> Result<BigRational, ExactError> {
        check_depth(depth)?;
        if i == 0 || i >= depth {
            return Err(ExactError::IndexOutOfRange { index: i, depth });
        }
        let strata = strata_in_order(depth, |j| {
            let mut acc = BigRational::zero();
            if j >= i {
                self.visit_stratum(j, &mut |set, _, prob| {
                    if set.contains(i) {
                        acc += prob;
                    }
                });
            }
            acc
        });
        Ok(strata.into_iter().fold(BigRational::zero(), |acc, x| acc + x))
    }

    /// [`marginal_B`](Self::marginal_B) for every `i = 1..=i_max` in one
    /// traversal.
    #[allow(non_snake_case)]
    pub fn marginals_B(&self, i_max: usize, depth: usize) -> Result<Vec<BigRational>, ExactError> {
        check_depth(depth)?;
        if i_max == 0 || i_max >= depth {
            return Err(ExactError::IndexOutOfRange { index: i_max, depth });
        }
        let strata = strata_in_order(depth, |j| {
            let mut acc = vec![BigRational::zero(); i_max];
            self.visit_stratum(j, &mut |set, _, prob| {
                for (i, slot) in acc.iter_mut().enumerate() {
                    if set.contains(i + 1) {
                        *slot += prob;
                    }
                }
            });
            acc
        });
        Ok(strata.into_iter().fold(vec![BigRational::zero(); i_max], |mut total, part| {
            total.iter_mut().zip(part).for_each(|(t, x)| *t += x);
            total
        }))
    }

    /// Limit of [`marginal_B`](Self::marginal_B) as the depth grows:
    /// `p q^{i-1} (1 + q)`.
    pub fn marginal_limit(&self, i: usize) -> BigRational {
        &self.p * self.q_pow(i - 1) * (BigRational::one() + &self.q)
    }
}

fn check_depth(depth: usize) -> Result<(), ExactError> {
    match depth {
        0 => Err(ExactError::DepthZero),
        d if d > MAX_DEPTH => Err(ExactError::DepthTooLarge(d)),
        _ => Ok(()),
    }
}

/// Maps strata `1..=depth` in parallel when available, keeping stratum order.
fn strata_in_order<T: Send>(depth: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (1..=depth).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (1..=depth).map(f).collect()
    }
}

/// Outcome of the exhaustive uniqueness check.
#[derive(Clone, Debug, PartialEq)]
pub struct Uniqueness {
    pub unique: bool,
    /// First pair of index sets found with equal values.
    pub collision: Option<(IndexSet, IndexSet, BigRational)>,
}

/// The law of `f1[1]` truncated to `C ≤ depth`, grouped by exact value.
#[derive(Clone, Debug, PartialEq)]
pub struct ExactLaw {
    pub p: BigRational,
    pub depth: usize,
    pub atoms: Vec<GroupedAtom>,
    pub total_mass: BigRational,
}

impl ExactLaw {
    /// Mass of representations with `max J = j`.
    pub fn stratum_mass(&self, j: usize) -> BigRational {
        self.representations().filter(|a| a.j() == j).fold(BigRational::zero(), |acc, a| acc + &a.prob)
    }

    pub fn representations(&self) -> impl Iterator<Item = &MpAtom> {
        self.atoms.iter().flat_map(|a| a.representations.iter())
    }

    pub fn prob_of(&self, value: &BigRational) -> BigRational {
        self.atoms.iter().find(|a| &a.value == value).map(|a| a.prob.clone()).unwrap_or_else(BigRational::zero)
    }

    /// `Σ value · prob` over the truncated law.
    pub fn truncated_mean(&self) -> BigRational {
        self.atoms.iter().fold(BigRational::zero(), |acc, a| acc + &a.value * &a.prob)
    }

    pub fn rows(&self) -> Vec<AtomRow> {
        self.atoms
            .iter()
            .map(|a| AtomRow {
                j: a.representations.iter().map(|r| r.set.to_string()).collect::<Vec<_>>().join("|"),
                value: format_rational(&a.value),
                value_decimal: rational_to_f64(&a.value),
                prob: format_rational(&a.prob),
                prob_decimal: rational_to_f64(&a.prob),
            })
            .collect()
    }

    /// CSV with columns `J,value,value_decimal,prob,prob_decimal`; several
    /// representations of one value are joined with `|`.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in self.rows() {
            w.serialize(row).expect("writing to memory");
        }
        String::from_utf8(w.into_inner().expect("writing to memory")).expect("csv is utf-8")
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "p": format_rational(&self.p),
            "depth": self.depth,
            "total_mass": format_rational(&self.total_mass),
            "total_mass_decimal": rational_to_f64(&self.total_mass),
            "atoms": self.rows(),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AtomRow {
    #[serde(rename = "J")]
    pub j: String,
    pub value: String,
    pub value_decimal: f64,
    pub prob: String,
    pub prob_decimal: f64,
}

pub fn shifted_geom_hit(p: &BigRational, i: usize, set: IndexSet) -> Result<BigRational, ExactError> {
    Ok(DiracLaw::new(p)?.shifted_geom_hit(i, set))
}

pub fn atom_prob(p: &BigRational, set: IndexSet) -> Result<BigRational, ExactError> {
    DiracLaw::new(p)?.atom_prob(set)
}

pub fn enumerate_distribution(p: &BigRational, depth: usize) -> Result<ExactLaw, ExactError> {
    DiracLaw::new(p)?.enumerate(depth)
}

pub fn check_unique_representation(p: &BigRational, depth: usize) -> Result<Uniqueness, ExactError> {
    DiracLaw::new(p)?.check_unique_representation(depth)
}

#[allow(non_snake_case)]
pub fn marginal_B(p: &BigRational, i: usize, depth: usize) -> Result<BigRational, ExactError> {
    DiracLaw::new(p)?.marginal_B(i, depth)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn set(items: &[usize]) -> IndexSet {
        items.iter().copied().collect()
    }

    #[test]
    fn index_set_basics() {
        let s = set(&[1, 3]);
        assert!(s.contains(1) && !s.contains(2) && s.contains(3));
        assert_eq!(s.max(), Some(3));
        assert_eq!(s.len(), 2);
        assert_eq!(s.to_string(), "1,3");
        assert_eq!(IndexSet::EMPTY.max(), None);
        assert!(!s.contains(0) && !s.contains(65));
    }

    #[test]
    fn shifted_geometric_hits() {
        let half = q(1, 2);
        assert_eq!(shifted_geom_hit(&half, 1, set(&[1, 3])).unwrap(), q(1, 4));
        assert_eq!(shifted_geom_hit(&half, 2, set(&[1, 3])).unwrap(), q(1, 2));
        assert_eq!(shifted_geom_hit(&half, 3, set(&[1, 3])).unwrap(), q(0, 1));
        assert_eq!(shifted_geom_hit(&q(2, 3), 5, set(&[2, 4])).unwrap(), q(0, 1));
    }

    #[test]
    fn atom_probabilities() {
        let half = q(1, 2);
        assert_eq!(atom_prob(&half, set(&[1])).unwrap(), q(1, 2));
        assert_eq!(atom_prob(&half, set(&[1, 3])).unwrap(), q(1, 64));
        assert_eq!(atom_prob(&half, set(&[1, 2])).unwrap(), q(1, 8));
        assert_eq!(atom_prob(&half, IndexSet::EMPTY), Err(ExactError::EmptySet));
    }

    #[test]
    fn depth_three_half() {
        let law = enumerate_distribution(&q(1, 2), 3).unwrap();
        let values: Vec<BigRational> = law.atoms.iter().map(|a| a.value.clone()).collect();
        assert_eq!(values, vec![q(1, 2), q(1, 4), q(3, 4), q(1, 8), q(5, 8), q(3, 8), q(7, 8)]);
        assert_eq!(law.total_mass, q(7, 8));
    }

    #[test]
    fn depth_two_two_thirds() {
        let law = enumerate_distribution(&q(2, 3), 2).unwrap();
        let got: Vec<(BigRational, BigRational)> = law.atoms.iter().map(|a| (a.value.clone(), a.prob.clone())).collect();
        assert_eq!(
            got,
            vec![(q(2, 3), q(2, 3)), (q(2, 9), q(2, 9) * q(1, 3)), (q(8, 9), q(2, 9) * q(2, 3))]
        );
        assert_eq!(law.total_mass, q(8, 9));
    }

    #[test]
    fn depth_one_is_a_single_atom() {
        let law = enumerate_distribution(&q(1, 2), 1).unwrap();
        assert_eq!(law.atoms.len(), 1);
        assert_eq!((law.atoms[0].value.clone(), law.atoms[0].prob.clone()), (q(1, 2), q(1, 2)));
    }

    #[test]
    fn dfs_agrees_with_direct_formula() {
        for p in [q(1, 2), q(2, 3), q(1, 3), q(3, 4), q(2, 5)] {
            let law = DiracLaw::new(&p).unwrap();
            law.for_each_atom(8, |s, value, prob| {
                assert_eq!(value, &law.value(s));
                assert_eq!(prob, &law.atom_prob(s).unwrap());
            })
            .unwrap();
        }
    }

    #[test]
    fn strata_carry_geometric_mass() {
        for p in [q(1, 2), q(2, 3), q(1, 3)] {
            let law = enumerate_distribution(&p, 9).unwrap();
            let qq = BigRational::one() - &p;
            for j in 1..=9 {
                assert_eq!(law.stratum_mass(j), &p * num_traits::pow(qq.clone(), j - 1));
            }
            assert_eq!(law.total_mass, BigRational::one() - num_traits::pow(qq, 9));
            assert!(law.atoms.iter().all(|a| a.prob.is_positive()));
        }
    }

    #[test]
    fn enumeration_guards() {
        assert_eq!(enumerate_distribution(&q(1, 2), 31).unwrap_err(), ExactError::DepthTooLarge(31));
        assert_eq!(enumerate_distribution(&q(1, 2), 0).unwrap_err(), ExactError::DepthZero);
        assert!(matches!(enumerate_distribution(&q(1, 1), 3), Err(ExactError::InvalidP(_))));
        assert!(matches!(enumerate_distribution(&q(0, 1), 3), Err(ExactError::InvalidP(_))));
        assert!(marginal_B(&q(1, 2), 5, 5).is_err());
    }

    #[test]
    fn uniqueness_and_grouping() {
        assert!(check_unique_representation(&q(1, 2), 10).unwrap().unique);
        assert!(check_unique_representation(&q(2, 3), 10).unwrap().unique);
        // With p = 1/3: p = 1/3 and p q + p q^2 = 2/9 + 4/27 = 10/27 differ, but
        // the exhaustive search decides. Grouping must conserve total mass.
        let report = check_unique_representation(&q(1, 3), 6).unwrap();
        let law = enumerate_distribution(&q(1, 3), 6).unwrap();
        let reps = law.representations().count();
        assert_eq!(reps, 63);
        assert_eq!(report.unique, law.atoms.len() == 63);
        if let Some((a, b, v)) = report.collision {
            assert_ne!(a, b);
            assert_eq!(DiracLaw::new(&q(1, 3)).unwrap().value(a), v);
        }
        assert_eq!(law.total_mass, BigRational::one() - num_traits::pow(q(2, 3), 6));
    }

    #[test]
    fn marginals_approach_limit() {
        let law = DiracLaw::new(&q(2, 3)).unwrap();
        let m = law.marginal_B(1, 15).unwrap();
        let limit = law.marginal_limit(1);
        assert_eq!(limit, q(8, 9));
        assert!(m <= limit);
        assert!(&limit - &m <= num_traits::pow(q(1, 3), 15));
        let all = law.marginals_B(4, 10).unwrap();
        for (i, m) in all.iter().enumerate() {
            assert_eq!(m, &law.marginal_B(i + 1, 10).unwrap());
        }
    }

    #[test]
    fn csv_has_fixed_header_and_exact_columns() {
        let csv = enumerate_distribution(&q(1, 2), 3).unwrap().to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("J,value,value_decimal,prob,prob_decimal"));
        assert_eq!(lines.next(), Some("1,1/2,0.5,1/2,0.5"));
        assert!(csv.contains("\"1,3\",5/8,0.625,1/64,0.015625"));
        assert_eq!(csv.lines().count(), 8);
    }
}
