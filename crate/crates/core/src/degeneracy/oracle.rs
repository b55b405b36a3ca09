//! Exact membership test for the complex degeneracy locus of binary forms.
//!
//! For `n = 2` every `y` with `yᵀx = 0` is a multiple of `(x₂, −x₁)`, also
//! over ℂ. Substituting it turns the rank condition on the `4 × 3` witness
//! matrix into the simultaneous vanishing of its four `3 × 3` minors, each a
//! binary form of degree `d + 1` in `(x₁, x₂)`. They have a common nonzero
//! complex root iff they share the root `(1 : 0)` or their dehomogenizations
//! at `x₂ = 1` have a nonconstant GCD.
//!
//! Every finite `f64` is a dyadic rational, so the whole computation runs in
//! exact rational arithmetic.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::polyhom::HomogeneousPolynomial;
use crate::{Error, Result};

type Q = BigRational;

/// Binary form; `coeffs[i]` multiplies `x₁^i x₂^(degree − i)`.
/// The zero form has no coefficients and no meaningful degree.
#[derive(Clone, Debug, PartialEq)]
struct BinaryForm {
    degree: usize,
    coeffs: Vec<Q>,
}

impl BinaryForm {
    fn zero() -> Self {
        BinaryForm {
            degree: 0,
            coeffs: Vec::new(),
        }
    }

    /// From `(index, coefficient)` contributions; `None` degree means the
    /// form is known to vanish (e.g. second derivatives of a linear form).
    fn from_terms(degree: Option<usize>, terms: impl IntoIterator<Item = (usize, Q)>) -> Self {
        let Some(degree) = degree else {
            return Self::zero();
        };
        let mut coeffs = vec![Q::zero(); degree + 1];
        for (i, c) in terms {
            coeffs[i] += c;
        }
        let form = BinaryForm { degree, coeffs };
        if form.is_zero() {
            Self::zero()
        } else {
            form
        }
    }

    fn x1() -> Self {
        BinaryForm {
            degree: 1,
            coeffs: vec![Q::zero(), Q::one()],
        }
    }

    fn x2() -> Self {
        BinaryForm {
            degree: 1,
            coeffs: vec![Q::one(), Q::zero()],
        }
    }

    fn is_zero(&self) -> bool {
        self.coeffs.iter().all(Zero::is_zero)
    }

    fn neg(&self) -> Self {
        BinaryForm {
            degree: self.degree,
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
        }
    }

    fn add(&self, other: &Self) -> Self {
        if self.is_zero() {
            return other.clone();
        }
        if other.is_zero() {
            return self.clone();
        }
        assert_eq!(self.degree, other.degree, "adding forms of different degree");
        let sum = BinaryForm {
            degree: self.degree,
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect(),
        };
        if sum.is_zero() {
            Self::zero()
        } else {
            sum
        }
    }

    fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        let degree = self.degree + other.degree;
        let mut coeffs = vec![Q::zero(); degree + 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        BinaryForm { degree, coeffs }
    }

    /// Value at `(1, 0)`: the `x₁^degree` coefficient.
    fn at_infinity(&self) -> Q {
        if self.is_zero() {
            Q::zero()
        } else {
            self.coeffs[self.degree].clone()
        }
    }

    /// `t ↦ form(t, 1)`, index = power of `t`.
    fn dehomogenize(&self) -> Vec<Q> {
        trim(self.coeffs.clone())
    }
}

fn trim(mut p: Vec<Q>) -> Vec<Q> {
    while p.last().is_some_and(Zero::is_zero) {
        p.pop();
    }
    p
}

fn make_monic(p: Vec<Q>) -> Vec<Q> {
    match p.last().cloned() {
        Some(lead) => p.into_iter().map(|c| c / &lead).collect(),
        None => p,
    }
}

fn rem(a: &[Q], b: &[Q]) -> Vec<Q> {
    let mut r = a.to_vec();
    let db = b.len() - 1;
    let lead = &b[db];
    while r.len() > db && !r.is_empty() {
        let shift = r.len() - 1 - db;
        let factor = r[r.len() - 1].clone() / lead;
        for (i, c) in b.iter().enumerate() {
            r[shift + i] -= &factor * c;
        }
        r.pop();
        r = trim(r);
    }
    r
}

/// Monic GCD of two nonzero univariate polynomials over ℚ.
fn gcd(a: Vec<Q>, b: Vec<Q>) -> Vec<Q> {
    let (mut a, mut b) = (make_monic(trim(a)), make_monic(trim(b)));
    while !b.is_empty() {
        let r = make_monic(rem(&a, &b));
        a = b;
        b = r;
    }
    a
}

fn exact(v: f64) -> Q {
    Q::from_float(v).expect("polynomial coefficients are finite")
}

fn det3(m: &[[&BinaryForm; 3]; 3]) -> BinaryForm {
    let cof = |a: &BinaryForm, b: &BinaryForm, c: &BinaryForm, e: &BinaryForm| a.mul(b).sub(&c.mul(e));
    let t0 = m[0][0].mul(&cof(m[1][1], m[2][2], m[1][2], m[2][1]));
    let t1 = m[0][1].mul(&cof(m[1][0], m[2][2], m[1][2], m[2][0]));
    let t2 = m[0][2].mul(&cof(m[1][0], m[2][1], m[1][1], m[2][0]));
    t0.sub(&t1).add(&t2)
}

/// The four maximal minors of the witness matrix with `y = (x₂, −x₁)`, as
/// exact coefficient lists (`[i]` multiplies `x₁^i x₂^(d+1−i)`). Vanishing
/// minors come back empty.
pub fn witness_minors_n2(f: &HomogeneousPolynomial) -> Result<Vec<Vec<BigRational>>> {
    Ok(minors(f)?.into_iter().map(|m| m.coeffs).collect())
}

fn minors(f: &HomogeneousPolynomial) -> Result<Vec<BinaryForm>> {
    if f.n() != 2 {
        return Err(Error::Unsupported(format!(
            "the exact oracle handles binary forms only (n = 2), got n = {}",
            f.n()
        )));
    }
    let d = f.degree() as usize;
    let terms: Vec<(usize, usize, Q)> = f
        .terms()
        .iter()
        .map(|(m, c)| (m.exponents()[0] as usize, m.exponents()[1] as usize, exact(*c)))
        .collect();
    let int = |k: usize| Q::from_integer(BigInt::from(k));
    let deriv = |degree: Option<usize>, pick: &dyn Fn(usize, usize) -> Option<(usize, usize)>| {
        BinaryForm::from_terms(
            degree,
            terms
                .iter()
                .filter_map(|(a, b, c)| pick(*a, *b).map(|(idx, k)| (idx, c * int(k)))),
        )
    };
    let d1 = d.checked_sub(1);
    let d2 = d.checked_sub(2);
    let f1 = deriv(d1, &|a, _| (a >= 1).then(|| (a - 1, a)));
    let f2 = deriv(d1, &|a, b| (b >= 1).then_some((a, b)));
    let f11 = deriv(d2, &|a, _| (a >= 2).then(|| (a - 2, a * (a - 1))));
    let f12 = deriv(d2, &|a, b| (a >= 1 && b >= 1).then(|| (a - 1, a * b)));
    let f22 = deriv(d2, &|a, b| (b >= 2).then(|| (a, b * (b - 1))));

    let x1 = BinaryForm::x1();
    let x2 = BinaryForm::x2();
    let y1 = x2.clone();
    let y2 = x1.neg();
    let hy1 = f11.mul(&y1).add(&f12.mul(&y2));
    let hy2 = f12.mul(&y1).add(&f22.mul(&y2));
    let zero = BinaryForm::zero();

    let rows: [[&BinaryForm; 3]; 4] = [
        [&f1, &x1, &zero],
        [&f2, &x2, &zero],
        [&hy1, &y1, &x1],
        [&hy2, &y2, &x2],
    ];
    Ok((0..4)
        .map(|skip| {
            let mut sub = rows.iter().enumerate().filter(|(i, _)| *i != skip).map(|(_, r)| *r);
            let m = [sub.next().unwrap(), sub.next().unwrap(), sub.next().unwrap()];
            det3(&m)
        })
        .collect())
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct OracleResult {
    /// The witness system has a solution `x ≠ 0, y ≠ 0` over ℂ.
    pub on_locus: bool,
    pub certificate: String,
    /// Degree of the GCD of the dehomogenized nonzero minors.
    pub gcd_degree: Option<usize>,
    pub common_root_at_infinity: bool,
    pub minors_vanish_identically: bool,
}

/// Decides exactly whether the witness system of a binary form has a
/// nonzero complex solution.
pub fn exact_oracle_n2(f: &HomogeneousPolynomial) -> Result<OracleResult> {
    let minors = minors(f)?;
    let nonzero: Vec<&BinaryForm> = minors.iter().filter(|m| !m.is_zero()).collect();
    if nonzero.is_empty() {
        return Ok(OracleResult {
            on_locus: true,
            certificate: "all 3x3 minors vanish identically: every x is a solution".into(),
            gcd_degree: None,
            common_root_at_infinity: true,
            minors_vanish_identically: true,
        });
    }
    let at_infinity = nonzero.iter().all(|m| m.at_infinity().is_zero());
    let g = nonzero
        .iter()
        .map(|m| m.dehomogenize())
        .reduce(gcd)
        .expect("at least one nonzero minor");
    let gcd_degree = g.len() - 1;
    let on_locus = at_infinity || gcd_degree >= 1;
    let certificate = if at_infinity {
        "all minors vanish at x = (1, 0)".to_string()
    } else if gcd_degree >= 1 {
        let coeffs: Vec<String> = g.iter().map(|c| c.to_string()).collect();
        format!(
            "minors share a common factor of degree {gcd_degree} in t = x1/x2 (monic gcd coefficients, ascending: [{}])",
            coeffs.join(", ")
        )
    } else {
        format!(
            "gcd of the {} nonzero minors is constant and they do not all vanish at x = (1, 0)",
            nonzero.len()
        )
    };
    Ok(OracleResult {
        on_locus,
        certificate,
        gcd_degree: Some(gcd_degree),
        common_root_at_infinity: at_infinity,
        minors_vanish_identically: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(v: i64) -> Q {
        Q::from_integer(BigInt::from(v))
    }

    #[test]
    fn gcd_of_products() {
        // (t - 1)(t + 2) and (t - 1)(t - 3)
        let a = vec![q(-2), q(1), q(1)];
        let b = vec![q(3), q(-4), q(1)];
        assert_eq!(gcd(a, b), vec![q(-1), q(1)]);
        assert_eq!(gcd(vec![q(1), q(1)], vec![q(2)]), vec![q(1)]);
    }

    #[test]
    fn cube_is_on_locus() {
        let f = HomogeneousPolynomial::new(2, 3, [(vec![3, 0], 1.0)]).unwrap();
        let r = exact_oracle_n2(&f).unwrap();
        assert!(r.on_locus, "{r:?}");
        // root x = (0, 1) is t = 0: finite, so it shows up in the gcd
        assert!(r.gcd_degree.unwrap() >= 1);
    }

    #[test]
    fn witness_polynomial_is_off_locus() {
        let p = HomogeneousPolynomial::diagonal_power(&[2.0, 4.0], 3).unwrap();
        let r = exact_oracle_n2(&p).unwrap();
        assert!(!r.on_locus, "{r:?}");
    }

    #[test]
    fn round_quadratic_is_on_locus() {
        let f = HomogeneousPolynomial::diagonal_power(&[0.5, 0.5], 2).unwrap();
        let r = exact_oracle_n2(&f).unwrap();
        assert!(r.on_locus && r.minors_vanish_identically);
    }

    #[test]
    fn distinct_eigenvalues_quadratic_is_off_locus() {
        let f = HomogeneousPolynomial::diagonal_power(&[0.5, 1.0], 2).unwrap();
        assert!(!exact_oracle_n2(&f).unwrap().on_locus);
    }

    #[test]
    fn minors_have_degree_d_plus_one() {
        let f = HomogeneousPolynomial::random(2, 4, 3).unwrap();
        for m in minors(&f).unwrap() {
            assert!(m.is_zero() || m.degree == 5);
        }
    }

    #[test]
    fn rejects_other_dimensions() {
        let f = HomogeneousPolynomial::random(3, 3, 1).unwrap();
        assert!(matches!(exact_oracle_n2(&f), Err(Error::Unsupported(_))));
    }

    #[test]
    fn linear_forms_are_handled() {
        let f = HomogeneousPolynomial::linear(&[0.5, 0.25]).unwrap();
        assert!(!exact_oracle_n2(&f).unwrap().on_locus);
    }
}
