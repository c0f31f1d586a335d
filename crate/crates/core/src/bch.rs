//! Compiled evaluation plan for the Baker–Campbell–Hausdorff product.
//!
//! The Dynkin series is truncated at the step of the algebra, where it is
//! exact. Each bracket word is expanded through the structure constants
//! into monomials in the coordinates of the two factors; monomials that
//! differ only by factor order are merged with exact rational coefficients
//! so that cancellations (e.g. `[Y,Y] = 0`) happen before evaluation.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::algebra::LieAlgebra;
use crate::scalar::{Exact, Ratio, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Letter {
    X,
    Y,
}

#[derive(Clone, Debug)]
struct Term {
    coeff: f64,
    out: usize,
    start: usize,
    len: usize,
}

/// Monomials of `𝒬(p, q)`. A factor code `c < n` reads `p[c]`, otherwise `q[c - n]`.
#[derive(Clone, Debug)]
pub(crate) struct BchPlan {
    n: usize,
    terms: Vec<Term>,
    exact: Vec<Exact>,
    factors: Vec<usize>,
}

fn factorial(k: usize) -> i128 {
    (1..=k as i128).product()
}

/// Coefficients of the right-nested bracket words of total degree in `2..=max`.
fn dynkin_words(max: usize) -> BTreeMap<Vec<Letter>, Ratio> {
    let mut words = BTreeMap::new();
    for degree in 2..=max {
        for k in 1..=degree {
            let mut blocks = Vec::new();
            collect_blocks(degree, k, &mut blocks, &mut |blocks: &[(usize, usize)]| {
                let mut denom = degree as i128 * k as i128;
                let mut word = Vec::with_capacity(degree);
                for &(r, s) in blocks {
                    denom *= factorial(r) * factorial(s);
                    word.extend(core::iter::repeat(Letter::X).take(r));
                    word.extend(core::iter::repeat(Letter::Y).take(s));
                }
                let sign = if k % 2 == 1 { 1 } else { -1 };
                let entry = words.entry(word).or_insert(Ratio::ZERO);
                *entry = entry.add(Ratio::new(sign, denom));
            });
        }
    }
    words.retain(|_, c| !c.is_zero());
    words
}

/// Enumerates `k` pairs `(r_i, s_i)` with `r_i + s_i ≥ 1` summing to `remaining`.
fn collect_blocks(
    remaining: usize,
    k: usize,
    blocks: &mut Vec<(usize, usize)>,
    emit: &mut dyn FnMut(&[(usize, usize)]),
) {
    if k == 0 {
        if remaining == 0 {
            emit(blocks);
        }
        return;
    }
    if remaining < k {
        return;
    }
    for size in 1..=remaining - (k - 1) {
        for r in 0..=size {
            blocks.push((r, size - r));
            collect_blocks(remaining - size, k - 1, blocks, emit);
            blocks.pop();
        }
    }
}

impl BchPlan {
    pub fn compile(algebra: &LieAlgebra) -> Self {
        let n = algebra.dim();
        let step = algebra.step();
        let mut monomials: BTreeMap<(usize, Vec<usize>), Exact> = BTreeMap::new();

        for (word, coeff) in dynkin_words(step) {
            let code = |l: Letter, i: usize| if l == Letter::X { i } else { n + i };
            let last = *word.last().unwrap();
            // (structure constant product, factors, output index)
            let mut partial: Vec<(Exact, Vec<usize>, usize)> =
                (0..n).map(|i| (Exact::one(), vec![code(last, i)], i)).collect();
            let depth = word.len();
            for (pos, &letter) in word[..depth - 1].iter().enumerate().rev() {
                let mut next = Vec::new();
                for (c, factors, k) in &partial {
                    for a in 0..n {
                        // Letters still to be applied each raise the weight by one.
                        if algebra.stratum_of(*k) + algebra.stratum_of(a) + pos > step {
                            continue;
                        }
                        for &(kk, sc) in algebra.nonzero(a, *k) {
                            let mut f = Vec::with_capacity(factors.len() + 1);
                            f.push(code(letter, a));
                            f.extend_from_slice(factors);
                            next.push((c.clone() * Exact::from_f64(sc), f, kk));
                        }
                    }
                }
                partial = next;
            }
            let q = coeff.to_exact();
            for (c, mut factors, k) in partial {
                factors.sort_unstable();
                let e = monomials.entry((k, factors)).or_insert_with(Exact::zero);
                *e = e.clone() + q.clone() * c;
            }
        }

        let mut plan = BchPlan { n, terms: Vec::new(), exact: Vec::new(), factors: Vec::new() };
        // Evaluate lower outputs first; BTreeMap order already sorts by output index.
        for ((out, factors), c) in monomials {
            if Scalar::is_zero(&c) {
                continue;
            }
            plan.terms.push(Term {
                coeff: c.to_f64(),
                out,
                start: plan.factors.len(),
                len: factors.len(),
            });
            plan.factors.extend(factors);
            plan.exact.push(c);
        }
        plan
    }

    #[cfg(test)]
    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    /// Adds `𝒬(p, q)` into `out`.
    #[inline]
    pub fn accumulate(&self, p: &[f64], q: &[f64], out: &mut [f64]) {
        let n = self.n;
        for t in &self.terms {
            let mut m = t.coeff;
            for &c in &self.factors[t.start..t.start + t.len] {
                m *= if c < n { p[c] } else { q[c - n] };
            }
            out[t.out] += m;
        }
    }

    pub fn accumulate_generic<S: Scalar>(&self, p: &[S], q: &[S], out: &mut [S]) {
        let n = self.n;
        for (t, c) in self.terms.iter().zip(&self.exact) {
            let mut m = S::from_exact(c);
            for &f in &self.factors[t.start..t.start + t.len] {
                m = m * if f < n { p[f].clone() } else { q[f - n].clone() };
            }
            out[t.out] = out[t.out].clone() + m;
        }
    }

    /// Adds an upper bound of `|𝒬(p, q)|` componentwise, given bounds on `|p|`, `|q|`.
    pub fn accumulate_abs(&self, p: &[f64], q: &[f64], out: &mut [f64]) {
        let n = self.n;
        for t in &self.terms {
            let mut m = t.coeff.abs();
            for &c in &self.factors[t.start..t.start + t.len] {
                m *= if c < n { p[c] } else { q[c - n] };
            }
            out[t.out] += m;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;

    #[test]
    fn low_order_dynkin_coefficients() {
        let w = dynkin_words(3);
        use Letter::*;
        // log(e^X e^Y) = X + Y + 1/2[X,Y] + 1/12[X,[X,Y]] - 1/12[Y,[X,Y]] + ...
        let get = |word: &[Letter]| w.get(word).copied().unwrap_or(Ratio::ZERO);
        // Word coefficients are not unique; compare through the bracket basis.
        assert_eq!(get(&[X, Y]).add(Ratio::new(-1, 1).mul(get(&[Y, X]))), Ratio::new(1, 2));
        let xxy = w.get(&vec![X, X, Y]).copied().unwrap_or(Ratio::ZERO);
        let yxy = w.get(&vec![Y, X, Y]).copied().unwrap_or(Ratio::ZERO);
        let xyx = w.get(&vec![X, Y, X]).copied().unwrap_or(Ratio::ZERO);
        assert_eq!(xxy.add(Ratio::new(-1, 1).mul(xyx)), Ratio::new(1, 12));
        let yyx = w.get(&vec![Y, Y, X]).copied().unwrap_or(Ratio::ZERO);
        assert_eq!(yxy.add(Ratio::new(-1, 1).mul(yyx)), Ratio::new(-1, 12));
    }

    #[test]
    fn heisenberg_plan_is_half_commutator() {
        let alg = LieAlgebra::new(catalog::heisenberg(1)).unwrap();
        let plan = BchPlan::compile(&alg);
        assert_eq!(plan.term_count(), 2);
        let mut out = [0.0; 3];
        plan.accumulate(&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &mut out);
        assert_eq!(out, [0.0, 0.0, 0.5]);
    }
}
