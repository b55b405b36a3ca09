//! Homogeneous polynomials: representation, calculus, random draws and the
//! JSON file format.
//!
//! A [`HomogeneousPolynomial`] stores its terms sorted in graded
//! lexicographic order (`x₁^d` first). Since every monomial has the same
//! total degree, this is plain lexicographic order on exponent vectors,
//! descending. The same order fixes the layout of [`CoefficientVector`] and
//! of the terms written to files.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::{json, seed, Error, Result};

/// Exponent vector of a single monomial.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Monomial(Vec<u32>);

impl Monomial {
    pub fn new(exponents: Vec<u32>) -> Self {
        Monomial(exponents)
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| other.0.cmp(&self.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// All monomials of degree `d` in `n` variables, graded-lex order.
pub fn monomials(n: usize, d: u32) -> Vec<Monomial> {
    fn fill(prefix: &mut Vec<u32>, remaining: u32, slots: usize, out: &mut Vec<Monomial>) {
        if slots == 1 {
            prefix.push(remaining);
            out.push(Monomial(prefix.clone()));
            prefix.pop();
            return;
        }
        for e in (0..=remaining).rev() {
            prefix.push(e);
            fill(prefix, remaining - e, slots - 1, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if n > 0 {
        fill(&mut Vec::with_capacity(n), d, n, &mut out);
    }
    out
}

/// `binomial(n + d − 1, d)`, the dimension of the space of degree-`d` forms.
pub fn monomial_count(n: usize, d: u32) -> usize {
    let (top, k) = (n as u64 + d as u64 - 1, d as u64);
    let k = k.min(top - k);
    (0..k).fold(1u64, |acc, i| acc * (top - i) / (i + 1)) as usize
}

/// A homogeneous polynomial of degree `d` in `n` real variables.
///
/// Immutable once built; terms are unique and sorted in graded-lex order.
#[derive(Clone, Debug, PartialEq)]
pub struct HomogeneousPolynomial {
    n: usize,
    d: u32,
    terms: Vec<(Monomial, f64)>,
}

impl HomogeneousPolynomial {
    /// Builds a polynomial from `(exponents, coefficient)` pairs.
    ///
    /// Rejects exponent vectors of the wrong length, exponent sums other
    /// than `d`, duplicate monomials and non-finite coefficients. The error
    /// names the offending term by its position in the input.
    pub fn new<I>(n: usize, d: u32, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<u32>, f64)>,
    {
        if n == 0 {
            return Err(Error::Parse("variable count n must be at least 1".into()));
        }
        if d == 0 {
            return Err(Error::Parse("degree d must be at least 1".into()));
        }
        let mut map = BTreeMap::new();
        for (idx, (exp, coef)) in terms.into_iter().enumerate() {
            if exp.len() != n {
                return Err(Error::Parse(format!(
                    "term {idx} (exp {exp:?}): {} exponents for n = {n}",
                    exp.len()
                )));
            }
            let sum: u32 = exp.iter().sum();
            if sum != d {
                return Err(Error::Parse(format!(
                    "term {idx} (exp {exp:?}): exponent sum {sum} ≠ degree {d}"
                )));
            }
            if !coef.is_finite() {
                return Err(Error::Parse(format!(
                    "term {idx} (exp {exp:?}): coefficient is not finite"
                )));
            }
            let key = Monomial(exp);
            if map.contains_key(&key) {
                return Err(Error::Parse(format!(
                    "term {idx} (exp {:?}): duplicate monomial",
                    key.0
                )));
            }
            map.insert(key, coef);
        }
        Ok(HomogeneousPolynomial {
            n,
            d,
            terms: map.into_iter().collect(),
        })
    }

    pub fn zero(n: usize, d: u32) -> Self {
        HomogeneousPolynomial {
            n,
            d,
            terms: Vec::new(),
        }
    }

    /// Dense coefficients in graded-lex order; length `binomial(n+d−1, d)`.
    pub fn from_coefficients(n: usize, d: u32, coefficients: &[f64]) -> Result<Self> {
        let basis = monomials(n, d);
        if basis.len() != coefficients.len() {
            return Err(Error::DimensionMismatch {
                expected: basis.len(),
                got: coefficients.len(),
            });
        }
        Self::new(
            n,
            d,
            basis.into_iter().map(|m| m.0).zip(coefficients.iter().copied()),
        )
    }

    /// `cᵀx`.
    pub fn linear(c: &[f64]) -> Result<Self> {
        let n = c.len();
        Self::new(
            n,
            1,
            (0..n).map(|i| {
                let mut e = vec![0; n];
                e[i] = 1;
                (e, c[i])
            }),
        )
    }

    /// `½ xᵀAx` for symmetric `A` (only the upper triangle is read).
    pub fn quadratic_form(a: &DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: a.ncols(),
            });
        }
        let mut terms = Vec::new();
        for i in 0..n {
            for j in i..n {
                let mut e = vec![0; n];
                e[i] += 1;
                e[j] += 1;
                let c = if i == j { 0.5 * a[(i, i)] } else { a[(i, j)] };
                terms.push((e, c));
            }
        }
        Self::new(n, 2, terms)
    }

    /// `Σ w_k x_k^d`.
    pub fn diagonal_power(weights: &[f64], d: u32) -> Result<Self> {
        let n = weights.len();
        Self::new(
            n,
            d,
            weights.iter().enumerate().map(|(k, &w)| {
                let mut e = vec![0; n];
                e[k] = d;
                (e, w)
            }),
        )
    }

    /// Standard normal coefficient on every monomial, deterministic in `seed`.
    pub fn random(n: usize, d: u32, seed: u64) -> Result<Self> {
        if n == 0 || d == 0 {
            return Err(Error::InvalidConfig(format!(
                "random polynomial needs n ≥ 1 and d ≥ 1 (got n = {n}, d = {d})"
            )));
        }
        let mut rng = seed::rng(seed);
        let coefficients: Vec<f64> = (0..monomial_count(n, d))
            .map(|_| StandardNormal.sample(&mut rng))
            .collect();
        Self::from_coefficients(n, d, &coefficients)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn degree(&self) -> u32 {
        self.d
    }

    pub fn terms(&self) -> &[(Monomial, f64)] {
        &self.terms
    }

    pub fn coefficient(&self, exponents: &[u32]) -> f64 {
        self.terms
            .iter()
            .find(|(m, _)| m.0 == exponents)
            .map_or(0.0, |(_, c)| *c)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.iter().all(|(_, c)| *c == 0.0)
    }

    /// Euclidean norm of the coefficient vector.
    pub fn coefficient_norm(&self) -> f64 {
        self.terms.iter().map(|(_, c)| c * c).sum::<f64>().sqrt()
    }

    pub fn coefficients(&self) -> CoefficientVector {
        let dense = monomials(self.n, self.d)
            .iter()
            .map(|m| {
                self.terms
                    .binary_search_by(|(k, _)| k.cmp(m))
                    .map_or(0.0, |i| self.terms[i].1)
            })
            .collect();
        CoefficientVector {
            n: self.n,
            d: self.d,
            values: dense,
        }
    }

    /// Errors with [`Error::ZeroPolynomial`] if every coefficient vanishes.
    pub fn ensure_nonzero(&self) -> Result<()> {
        if self.is_zero() {
            Err(Error::ZeroPolynomial)
        } else {
            Ok(())
        }
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: x.len(),
            });
        }
        Ok(())
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        Ok(self.value_at(x))
    }

    pub fn gradient(&self, x: &[f64]) -> Result<DVector<f64>> {
        self.check_dim(x)?;
        Ok(self.gradient_at(x))
    }

    pub fn hessian(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        self.check_dim(x)?;
        Ok(self.hessian_at(x))
    }

    fn powers(&self, x: &[f64]) -> Vec<f64> {
        let stride = self.d as usize + 1;
        let mut pows = vec![1.0; self.n * stride];
        for (i, &xi) in x.iter().enumerate() {
            for k in 1..stride {
                pows[i * stride + k] = pows[i * stride + k - 1] * xi;
            }
        }
        pows
    }

    pub(crate) fn value_at(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.n);
        let stride = self.d as usize + 1;
        let pows = self.powers(x);
        self.terms
            .iter()
            .map(|(m, c)| {
                m.0.iter()
                    .enumerate()
                    .fold(*c, |acc, (i, &e)| acc * pows[i * stride + e as usize])
            })
            .sum()
    }

    pub(crate) fn gradient_at(&self, x: &[f64]) -> DVector<f64> {
        debug_assert_eq!(x.len(), self.n);
        let stride = self.d as usize + 1;
        let pows = self.powers(x);
        let p = |i: usize, e: u32| pows[i * stride + e as usize];
        let mut g = DVector::zeros(self.n);
        for (m, c) in &self.terms {
            let e = &m.0;
            for i in 0..self.n {
                if e[i] == 0 {
                    continue;
                }
                let mut v = c * e[i] as f64 * p(i, e[i] - 1);
                for (k, &ek) in e.iter().enumerate() {
                    if k != i {
                        v *= p(k, ek);
                    }
                }
                g[i] += v;
            }
        }
        g
    }

    pub(crate) fn hessian_at(&self, x: &[f64]) -> DMatrix<f64> {
        debug_assert_eq!(x.len(), self.n);
        let stride = self.d as usize + 1;
        let pows = self.powers(x);
        let p = |i: usize, e: u32| pows[i * stride + e as usize];
        let n = self.n;
        let mut h = DMatrix::zeros(n, n);
        for (m, c) in &self.terms {
            let e = &m.0;
            for i in 0..n {
                if e[i] == 0 {
                    continue;
                }
                if e[i] >= 2 {
                    let mut v = c * (e[i] * (e[i] - 1)) as f64 * p(i, e[i] - 2);
                    for (k, &ek) in e.iter().enumerate() {
                        if k != i {
                            v *= p(k, ek);
                        }
                    }
                    h[(i, i)] += v;
                }
                for j in (i + 1)..n {
                    if e[j] == 0 {
                        continue;
                    }
                    let mut v = c * (e[i] * e[j]) as f64 * p(i, e[i] - 1) * p(j, e[j] - 1);
                    for (k, &ek) in e.iter().enumerate() {
                        if k != i && k != j {
                            v *= p(k, ek);
                        }
                    }
                    h[(i, j)] += v;
                    h[(j, i)] += v;
                }
            }
        }
        h
    }

    /// Serializes to the polynomial file format.
    pub fn to_json(&self) -> String {
        json::to_string(&PolynomialFile::from(self))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: PolynomialFile =
            serde_json::from_str(text).map_err(|e| Error::Parse(format!("malformed JSON: {e}")))?;
        file.try_into()
    }
}

impl fmt::Display for HomogeneousPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (m, c) in &self.terms {
            if *c == 0.0 {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "{c}")?;
            for (i, &e) in m.0.iter().enumerate() {
                match e {
                    0 => {}
                    1 => write!(f, "·x{}", i + 1)?,
                    _ => write!(f, "·x{}^{e}", i + 1)?,
                }
            }
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

/// Dense coefficients in graded-lex order.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientVector {
    pub n: usize,
    pub d: u32,
    pub values: Vec<f64>,
}

impl CoefficientVector {
    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn to_polynomial(&self) -> Result<HomogeneousPolynomial> {
        HomogeneousPolynomial::from_coefficients(self.n, self.d, &self.values)
    }
}

/// On-disk layout: `{"n": .., "d": .., "terms": [{"exp": [..], "coef": ..}]}`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct PolynomialFile {
    pub n: usize,
    pub d: u32,
    pub terms: Vec<TermRecord>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct TermRecord {
    pub exp: Vec<u32>,
    pub coef: f64,
}

impl From<&HomogeneousPolynomial> for PolynomialFile {
    fn from(p: &HomogeneousPolynomial) -> Self {
        PolynomialFile {
            n: p.n,
            d: p.d,
            terms: p
                .terms
                .iter()
                .map(|(m, c)| TermRecord {
                    exp: m.0.clone(),
                    coef: *c,
                })
                .collect(),
        }
    }
}

impl TryFrom<PolynomialFile> for HomogeneousPolynomial {
    type Error = Error;

    fn try_from(file: PolynomialFile) -> Result<Self> {
        HomogeneousPolynomial::new(
            file.n,
            file.d,
            file.terms.into_iter().map(|t| (t.exp, t.coef)),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poly(n: usize, d: u32, terms: &[(&[u32], f64)]) -> HomogeneousPolynomial {
        HomogeneousPolynomial::new(n, d, terms.iter().map(|(e, c)| (e.to_vec(), *c))).unwrap()
    }

    #[test]
    fn graded_lex_order() {
        let m = monomials(3, 2);
        let exps: Vec<&[u32]> = m.iter().map(|m| m.exponents()).collect();
        assert_eq!(
            exps,
            vec![
                &[2, 0, 0][..],
                &[1, 1, 0],
                &[1, 0, 1],
                &[0, 2, 0],
                &[0, 1, 1],
                &[0, 0, 2]
            ]
        );
        assert_eq!(monomial_count(3, 4), 15);
        assert_eq!(monomials(3, 4).len(), 15);
        assert_eq!(monomials(5, 6).len(), monomial_count(5, 6));
    }

    #[test]
    fn evaluate_examples() {
        let f = poly(2, 2, &[(&[2, 0], 1.0), (&[0, 2], 1.0)]);
        assert_eq!(f.evaluate(&[3.0, 4.0]).unwrap(), 25.0);
        let p = HomogeneousPolynomial::diagonal_power(&[0.5, 1.0, 1.5], 2).unwrap();
        assert_eq!(p.evaluate(&[0.0, 1.0, 0.0]).unwrap(), 1.0);
        assert_eq!(p.evaluate(&[0.0, 0.0, 0.0]).unwrap(), 0.0);
        assert!(matches!(
            p.evaluate(&[1.0, 0.0]),
            Err(Error::DimensionMismatch { expected: 3, got: 2 })
        ));
    }

    #[test]
    fn gradient_examples() {
        let f = poly(2, 3, &[(&[3, 0], 1.0)]);
        assert_eq!(f.gradient(&[1.0, 0.0]).unwrap().as_slice(), &[3.0, 0.0]);
        // alpha = 2^(d-2) = 2 for d = 3
        let p = HomogeneousPolynomial::diagonal_power(&[2.0, 4.0], 3).unwrap();
        assert_eq!(p.gradient(&[1.0, 1.0]).unwrap().as_slice(), &[6.0, 12.0]);
    }

    #[test]
    fn hessian_examples() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0, 3.0]));
        let f = HomogeneousPolynomial::quadratic_form(&a).unwrap();
        for x in [[0.3, -0.2, 0.9], [1.0, 0.0, 0.0]] {
            assert_eq!(f.hessian(&x).unwrap(), a);
        }
        let g = poly(3, 4, &[(&[4, 0, 0], 1.0)]);
        assert_eq!(g.hessian(&[0.0, 1.0, 0.0]).unwrap(), DMatrix::zeros(3, 3));
    }

    #[test]
    fn random_is_deterministic_and_sized() {
        let a = HomogeneousPolynomial::random(2, 3, 11).unwrap();
        let b = HomogeneousPolynomial::random(2, 3, 11).unwrap();
        assert_eq!(a.coefficients(), b.coefficients());
        assert_ne!(a, HomogeneousPolynomial::random(2, 3, 12).unwrap());
        assert_eq!(HomogeneousPolynomial::random(3, 4, 5).unwrap().coefficients().values.len(), 15);
    }

    #[test]
    fn random_coefficients_have_zero_mean() {
        // 10^4 draws of a single-coefficient law: mean within 3σ/√N.
        let n_draws = 10_000;
        let mean: f64 = (0..n_draws)
            .map(|s| HomogeneousPolynomial::random(1, 1, s).unwrap().coefficients().values[0])
            .sum::<f64>()
            / n_draws as f64;
        assert!(mean.abs() < 3.0 / (n_draws as f64).sqrt(), "mean {mean}");
    }

    #[test]
    fn parse_example_and_errors() {
        let f = HomogeneousPolynomial::from_json(
            r#"{"n":2,"d":2,"terms":[{"exp":[2,0],"coef":1.0},{"exp":[0,2],"coef":1.0}]}"#,
        )
        .unwrap();
        assert_eq!(f, poly(2, 2, &[(&[2, 0], 1.0), (&[0, 2], 1.0)]));

        let err = HomogeneousPolynomial::from_json(
            r#"{"n":2,"d":2,"terms":[{"exp":[1,0],"coef":1.0}]}"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("exponent sum 1 ≠ degree 2"), "{err}");

        let err = HomogeneousPolynomial::from_json(
            r#"{"n":2,"d":2,"terms":[{"exp":[1,1],"coef":1.0},{"exp":[1,1],"coef":2.0}]}"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("duplicate"), "{err}");
        assert!(err.to_string().contains("term 1"), "{err}");

        assert!(HomogeneousPolynomial::from_json("{\"n\":2,").is_err());
        assert!(HomogeneousPolynomial::from_json(r#"{"n":2,"d":2,"terms":[{"exp":[2],"coef":1.0}]}"#).is_err());
    }

    #[test]
    fn file_output_is_graded_lex_with_17_digits() {
        let f = poly(2, 2, &[(&[0, 2], 0.1), (&[2, 0], 1.0)]);
        let text = f.to_json();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["terms"][0]["exp"], serde_json::json!([2, 0]));
        assert_eq!(v["terms"][1]["exp"], serde_json::json!([0, 2]));
        assert!(text.contains("1.0000000000000001e-1"));
        assert_eq!(HomogeneousPolynomial::from_json(&text).unwrap(), f);
    }

    #[test]
    fn zero_polynomial_is_representable() {
        let z = HomogeneousPolynomial::zero(3, 2);
        assert!(z.is_zero());
        assert!(matches!(z.ensure_nonzero(), Err(Error::ZeroPolynomial)));
        assert_eq!(z.evaluate(&[1.0, 2.0, 3.0]).unwrap(), 0.0);
    }

    #[test]
    fn linear_gradient_is_constant() {
        let f = HomogeneousPolynomial::linear(&[1.0, -2.0]).unwrap();
        assert_eq!(f.gradient(&[5.0, 7.0]).unwrap().as_slice(), &[1.0, -2.0]);
        assert_eq!(f.evaluate(&[5.0, 7.0]).unwrap(), -9.0);
    }
}
