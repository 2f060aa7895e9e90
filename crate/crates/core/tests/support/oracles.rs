//! Independent oracles: neither calls into the library's exact or moment code.

use std::collections::HashMap;

use num_rational::BigRational;
use num_traits::{One, Zero};

/// Law of `f1[1]` for `Λ = δ_p`, restricted to `C ≤ depth`, obtained by
/// enumerating every coin outcome of the first `depth` mergers of the
/// Poisson construction with its exact probability.
///
/// Live blocks are lists of singleton-set indices. At merger `k` every live
/// block and the unmerged individual 1 flip a `p`-coin; the heads blocks and
/// `S_k` form a new block, which holds 1 if 1 flipped heads.
pub fn brute_force_first_jump_law(p: &BigRational, depth: usize) -> HashMap<BigRational, BigRational> {
    let q = BigRational::one() - p;
    let singleton = |i: usize| p * num_traits::pow(q.clone(), i - 1);
    let mut law = HashMap::new();
    explore(1, depth, &[], BigRational::one(), p, &q, &singleton, &mut law);
    law
}

#[allow(clippy::too_many_arguments)]
fn explore(
    k: usize,
    depth: usize,
    blocks: &[Vec<usize>],
    prob: BigRational,
    p: &BigRational,
    q: &BigRational,
    singleton: &dyn Fn(usize) -> BigRational,
    law: &mut HashMap<BigRational, BigRational>,
) {
    if k > depth {
        return;
    }
    let n = blocks.len();
    for mask in 0u32..(1 << n) {
        let mut weight = prob.clone();
        let mut merged = vec![k];
        let mut rest = Vec::new();
        for (b, block) in blocks.iter().enumerate() {
            if mask & (1 << b) != 0 {
                weight *= p;
                merged.extend(block);
            } else {
                weight *= q;
                rest.push(block.clone());
            }
        }
        // 1 flips heads: its first merger is k.
        let value = merged.iter().fold(BigRational::zero(), |acc, &i| acc + singleton(i));
        *law.entry(value).or_insert_with(BigRational::zero) += &weight * p;
        // 1 flips tails: continue with the new block among the live ones.
        rest.push(merged);
        explore(k + 1, depth, &rest, weight * q, p, q, singleton, law);
    }
}

/// Adaptive Simpson quadrature of `f` on `[a, b]`.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson(f, a, b, fa, fm, fb, whole, tol, 50)
}

#[allow(clippy::too_many_arguments)]
fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + simpson(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}

/// `(μ₋₁, μ₋₂)` of `mass · Beta(a, b)` by quadrature, normalizing the
/// density by quadrature too. Needs `a ≥ 3` and `b ≥ 1` for smooth
/// integrands.
pub fn beta_moments_by_quadrature(a: f64, b: f64, mass: f64) -> (f64, f64) {
    let tol = 1e-13;
    let kernel = |x: f64, shift: f64| x.powf(a - 1.0 - shift) * (1.0 - x).powf(b - 1.0);
    let norm = integrate(&|x| kernel(x, 0.0), 0.0, 1.0, tol);
    let mu1 = integrate(&|x| kernel(x, 1.0), 0.0, 1.0, tol);
    let mu2 = integrate(&|x| kernel(x, 2.0), 0.0, 1.0, tol);
    (mass * mu1 / norm, mass * mu2 / norm)
}
