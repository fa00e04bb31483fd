//! Polynomials on the group, graded by homogeneous degree.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::CarnotGroup;
use crate::jet::Scalar;

/// Exponent vector `α ∈ ℕ₀ⁿ`.
pub type MultiIndex = Vec<u32>;

/// `|α|_G = Σ σ_i α_i`.
pub fn homogeneous_degree(group: &CarnotGroup, alpha: &[u32]) -> u32 {
    alpha.iter().enumerate().map(|(i, &a)| group.sigma(i) as u32 * a).sum()
}

/// All `α` with `|α|_G < k`, graded by homogeneous degree and then
/// lexicographically descending within a degree.
pub fn monomial_basis(group: &CarnotGroup, k: u32) -> Vec<MultiIndex> {
    let n = group.ambient_dim();
    let weights: Vec<u32> = (0..n).map(|i| group.sigma(i) as u32).collect();
    let mut out = Vec::new();
    for degree in 0..k {
        let mut cur = vec![0u32; n];
        exact_degree(&weights, 0, degree, &mut cur, &mut out);
    }
    out
}

fn exact_degree(weights: &[u32], pos: usize, remaining: u32, cur: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
    if pos == weights.len() {
        if remaining == 0 {
            out.push(cur.clone());
        }
        return;
    }
    let w = weights[pos];
    let mut a = remaining / w;
    loop {
        cur[pos] = a;
        exact_degree(weights, pos + 1, remaining - a * w, cur, out);
        if a == 0 {
            break;
        }
        a -= 1;
    }
    cur[pos] = 0;
}

/// `P(x) = Σ c_α x^α`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GradedPolynomial {
    pub dim: usize,
    #[serde(with = "term_list")]
    pub terms: BTreeMap<MultiIndex, f64>,
}

/// Terms as a list of `(α, c_α)` pairs, since multi-indices are not string keys.
mod term_list {
    use std::collections::BTreeMap;

    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use super::MultiIndex;

    #[derive(Serialize, Deserialize)]
    #[serde(deny_unknown_fields)]
    struct Term {
        alpha: MultiIndex,
        coef: f64,
    }

    pub fn serialize<S: Serializer>(terms: &BTreeMap<MultiIndex, f64>, s: S) -> Result<S::Ok, S::Error> {
        let list: Vec<Term> = terms.iter().map(|(a, c)| Term { alpha: a.clone(), coef: *c }).collect();
        list.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<MultiIndex, f64>, D::Error> {
        let list = Vec::<Term>::deserialize(d)?;
        let mut out = BTreeMap::new();
        for t in list {
            *out.entry(t.alpha).or_insert(0.0) += t.coef;
        }
        Ok(out)
    }
}

impl GradedPolynomial {
    pub fn zero(dim: usize) -> Self {
        GradedPolynomial { dim, terms: BTreeMap::new() }
    }

    pub fn constant(dim: usize, c: f64) -> Self {
        let mut p = Self::zero(dim);
        p.add_term(vec![0; dim], c);
        p
    }

    /// The coordinate function `x_i`.
    pub fn coordinate(dim: usize, i: usize) -> Self {
        let mut alpha = vec![0; dim];
        alpha[i] = 1;
        Self::monomial(alpha, 1.0)
    }

    pub fn monomial(alpha: MultiIndex, c: f64) -> Self {
        let dim = alpha.len();
        let mut p = Self::zero(dim);
        p.add_term(alpha, c);
        p
    }

    pub fn from_terms(dim: usize, terms: impl IntoIterator<Item = (MultiIndex, f64)>) -> Self {
        let mut p = Self::zero(dim);
        for (a, c) in terms {
            p.add_term(a, c);
        }
        p
    }

    pub fn add_term(&mut self, alpha: MultiIndex, c: f64) {
        assert_eq!(alpha.len(), self.dim);
        if c == 0.0 {
            return;
        }
        let e = self.terms.entry(alpha).or_insert(0.0);
        *e += c;
    }

    pub fn coefficient(&self, alpha: &[u32]) -> f64 {
        self.terms.get(alpha).copied().unwrap_or(0.0)
    }

    /// `deg_G(P) = max{|α|_G : c_α ≠ 0}`, `None` for the zero polynomial.
    pub fn degree(&self, group: &CarnotGroup) -> Option<u32> {
        self.terms.iter().filter(|(_, &c)| c != 0.0).map(|(a, _)| homogeneous_degree(group, a)).max()
    }

    /// Drops coefficients with magnitude at most `tol`.
    pub fn pruned(mut self, tol: f64) -> Self {
        self.terms.retain(|_, c| c.abs() > tol);
        self
    }

    pub fn eval<T: Scalar>(&self, x: &[T]) -> T {
        let mut acc = T::zero();
        for (alpha, &c) in &self.terms {
            let mut m = T::constant(c);
            for (i, &a) in alpha.iter().enumerate() {
                if a > 0 {
                    m = m * x[i].powi(a as i32);
                }
            }
            acc = acc + m;
        }
        acc
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut p = self.clone();
        for c in p.terms.values_mut() {
            *c *= s;
        }
        p
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut p = self.clone();
        for (a, &c) in &other.terms {
            p.add_term(a.clone(), c);
        }
        p
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut p = Self::zero(self.dim);
        for (a, &c) in &self.terms {
            for (b, &d) in &other.terms {
                let ab: MultiIndex = a.iter().zip(b).map(|(x, y)| x + y).collect();
                p.add_term(ab, c * d);
            }
        }
        p
    }

    pub fn powi(&self, e: u32) -> Self {
        let mut out = Self::constant(self.dim, 1.0);
        for _ in 0..e {
            out = out.mul(self);
        }
        out
    }

    /// `P(s_1(y), …, s_n(y))`: substitutes a polynomial for every coordinate.
    pub fn substitute(&self, subs: &[GradedPolynomial]) -> Self {
        assert_eq!(subs.len(), self.dim);
        let dim = subs.first().map_or(self.dim, |s| s.dim);
        let mut out = Self::zero(dim);
        for (alpha, &c) in &self.terms {
            let mut m = Self::constant(dim, c);
            for (i, &a) in alpha.iter().enumerate() {
                if a > 0 {
                    m = m.mul(&subs[i].powi(a));
                }
            }
            out = out.add(&m);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basis_examples() {
        let h = CarnotGroup::heisenberg(1).unwrap();
        assert_eq!(monomial_basis(&h, 2), vec![vec![0, 0, 0], vec![1, 0, 0], vec![0, 1, 0]]);
        let e2 = CarnotGroup::euclidean(2).unwrap();
        assert_eq!(monomial_basis(&h, 1), vec![vec![0, 0, 0]]);
        assert_eq!(
            monomial_basis(&e2, 3),
            vec![vec![0, 0], vec![1, 0], vec![0, 1], vec![2, 0], vec![1, 1], vec![0, 2]]
        );
        // t enters at degree 2 alongside the quadratic horizontal monomials
        let b3 = monomial_basis(&h, 3);
        assert_eq!(b3.len(), 7);
        assert!(b3.contains(&vec![0, 0, 1]));
    }

    #[test]
    fn degree_is_homogeneous() {
        let h = CarnotGroup::heisenberg(1).unwrap();
        let p = GradedPolynomial::from_terms(3, [(vec![1, 0, 0], 2.0), (vec![0, 0, 1], -1.0)]);
        assert_eq!(p.degree(&h), Some(2));
        assert_eq!(GradedPolynomial::zero(3).degree(&h), None);
    }

    #[test]
    fn substitution_expands() {
        // (x + 1)^2 with x -> x + 1
        let p = GradedPolynomial::monomial(vec![2], 1.0);
        let s = GradedPolynomial::coordinate(1, 0).add(&GradedPolynomial::constant(1, 1.0));
        let q = p.substitute(&[s]);
        assert_eq!(q.coefficient(&[2]), 1.0);
        assert_eq!(q.coefficient(&[1]), 2.0);
        assert_eq!(q.coefficient(&[0]), 1.0);
        assert_eq!(q.eval(&[3.0]), 16.0);
    }
}
