//! FONC / SONC / SOSC classification of points on the sphere.
//!
//! At a critical point the second-order conditions only involve the Hessian
//! on the tangent space `x^⊥`: with `B` an orthonormal basis of `x^⊥`, the
//! SOSC margin is `λ_min(Bᵀ∇²f(x)B) − λ`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::critsolve::{find_critical_pairs, CriticalPair, SolverConfig};
use crate::polyhom::HomogeneousPolynomial;
use crate::tol::{Tolerances, UNIT_NORM_TOL};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    NotCritical,
    FoncOnly,
    SoncDegenerate,
    Sosc,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::NotCritical => "NOT_CRITICAL",
            Verdict::FoncOnly => "FONC_ONLY",
            Verdict::SoncDegenerate => "SONC_DEGENERATE",
            Verdict::Sosc => "SOSC",
        }
    }

    /// Verdict for a point whose FONC residual and SOSC margin are known.
    /// The margin bands partition the real line.
    pub fn from_measurements(residual: f64, tol_crit: f64, margin: f64, tol_class: f64) -> Self {
        if residual.is_nan() || residual > tol_crit {
            Verdict::NotCritical
        } else if margin > tol_class {
            Verdict::Sosc
        } else if margin < -tol_class {
            Verdict::FoncOnly
        } else {
            Verdict::SoncDegenerate
        }
    }
}

/// Hessian spectrum restricted to `x^⊥`.
#[derive(Debug, Clone)]
pub struct TangentSpectrum {
    /// `n × (n−1)`, orthonormal columns spanning `x^⊥`.
    pub basis: DMatrix<f64>,
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Unit eigenvectors in ambient coordinates, column `i` for eigenvalue `i`.
    pub eigenvectors: DMatrix<f64>,
}

impl TangentSpectrum {
    pub fn min_eigenvalue(&self) -> Option<f64> {
        self.eigenvalues.first().copied()
    }

    pub fn eigenvector(&self, i: usize) -> DVector<f64> {
        self.eigenvectors.column(i).into_owned()
    }
}

pub(crate) fn check_unit(x: &[f64]) -> Result<()> {
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > UNIT_NORM_TOL {
        return Err(Error::NotUnit { norm });
    }
    Ok(())
}

/// Orthonormal basis of `x^⊥` from the Householder reflector that maps
/// `x` to a multiple of `e₁`; its last `n − 1` columns are the basis.
pub fn tangent_basis(x: &[f64]) -> DMatrix<f64> {
    let n = x.len();
    let xv = DVector::from_column_slice(x);
    let sign = if x[0] >= 0.0 { 1.0 } else { -1.0 };
    let mut w = xv.clone();
    w[0] += sign * xv.norm();
    let ww = w.norm_squared();
    let mut reflector = DMatrix::identity(n, n);
    if ww > 0.0 {
        reflector -= (&w * w.transpose()) * (2.0 / ww);
    }
    reflector.columns(1, n - 1).into_owned()
}

/// Sorted spectrum of `Bᵀ H B` with eigenvectors mapped back through `B`.
pub fn restricted_spectrum(hessian: &DMatrix<f64>, basis: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    if basis.ncols() == 0 {
        return (Vec::new(), DMatrix::zeros(basis.nrows(), 0));
    }
    let reduced = basis.transpose() * hessian * basis;
    let reduced = (&reduced + reduced.transpose()) * 0.5;
    let eig = SymmetricEigen::new(reduced);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(basis.nrows(), order.len());
    for (col, &i) in order.iter().enumerate() {
        let v = basis * eig.eigenvectors.column(i);
        vectors.set_column(col, &v);
    }
    (values, vectors)
}

/// Tangent Hessian spectrum at a unit `x`. Empty when `n = 1`.
pub fn tangent_spectrum(f: &HomogeneousPolynomial, x: &[f64]) -> Result<TangentSpectrum> {
    if x.len() != f.n() {
        return Err(Error::DimensionMismatch {
            expected: f.n(),
            got: x.len(),
        });
    }
    check_unit(x)?;
    let basis = tangent_basis(x);
    let hessian = f.hessian_at(x);
    let (eigenvalues, eigenvectors) = restricted_spectrum(&hessian, &basis);
    Ok(TangentSpectrum {
        basis,
        eigenvalues,
        eigenvectors,
    })
}

#[derive(Debug, Clone)]
pub struct ClassifiedPoint {
    pub pair: CriticalPair,
    pub spectrum: TangentSpectrum,
    /// `λ_min(tangent Hessian) − λ`; `+∞` when `n = 1` (no tangent directions).
    pub sosc_margin: f64,
    pub verdict: Verdict,
}

/// JSON shape of a classified point.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ClassifiedPointRecord {
    pub x: Vec<f64>,
    pub lambda: f64,
    pub residual: f64,
    pub tangent_eigenvalues: Vec<f64>,
    /// `null` when infinite (`n = 1`).
    pub margin: Option<f64>,
    pub verdict: Verdict,
}

impl From<&ClassifiedPoint> for ClassifiedPointRecord {
    fn from(p: &ClassifiedPoint) -> Self {
        ClassifiedPointRecord {
            x: p.pair.x.clone(),
            lambda: p.pair.lambda,
            residual: p.pair.residual,
            tangent_eigenvalues: p.spectrum.eigenvalues.clone(),
            margin: p.sosc_margin.is_finite().then_some(p.sosc_margin),
            verdict: p.verdict,
        }
    }
}

pub fn classify_point(f: &HomogeneousPolynomial, x: &[f64]) -> Result<ClassifiedPoint> {
    classify_point_with(f, x, &Tolerances::default())
}

/// Classifies a unit point with `λ = d·f(x)`.
pub fn classify_point_with(f: &HomogeneousPolynomial, x: &[f64], tol: &Tolerances) -> Result<ClassifiedPoint> {
    let spectrum = tangent_spectrum(f, x)?;
    let pair = CriticalPair::at(f, x);
    let sosc_margin = spectrum
        .min_eigenvalue()
        .map_or(f64::INFINITY, |m| m - pair.lambda);
    let verdict = Verdict::from_measurements(pair.residual, tol.crit(f), sosc_margin, tol.class(f));
    Ok(ClassifiedPoint {
        pair,
        spectrum,
        sosc_margin,
        verdict,
    })
}

/// Finds every critical pair with [`find_critical_pairs`] and classifies it.
pub fn classify_all(f: &HomogeneousPolynomial, config: &SolverConfig) -> Result<Vec<ClassifiedPoint>> {
    let set = find_critical_pairs(f, config)?;
    set.pairs
        .iter()
        .map(|p| classify_point_with(f, &p.x, &config.tolerances))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag123() -> HomogeneousPolynomial {
        HomogeneousPolynomial::diagonal_power(&[0.5, 1.0, 1.5], 2).unwrap()
    }

    #[test]
    fn tangent_spectrum_examples() {
        let s = tangent_spectrum(&diag123(), &[1.0, 0.0, 0.0]).unwrap();
        assert!((s.eigenvalues[0] - 2.0).abs() < 1e-14 && (s.eigenvalues[1] - 3.0).abs() < 1e-14);

        let f = HomogeneousPolynomial::diagonal_power(&[1.0, 0.0], 5).unwrap();
        let s = tangent_spectrum(&f, &[0.0, 1.0]).unwrap();
        assert_eq!(s.eigenvalues, vec![0.0]);
    }

    #[test]
    fn basis_is_orthonormal_and_tangent() {
        for x in [[1.0, 0.0, 0.0], [-0.6, 0.0, 0.8], [0.0, 0.0, 1.0]] {
            let b = tangent_basis(&x);
            let gram = b.transpose() * &b;
            assert!((gram - DMatrix::identity(2, 2)).norm() < 1e-12);
            let xv = DVector::from_column_slice(&x);
            assert!((b.transpose() * xv).norm() < 1e-12);
        }
    }

    #[test]
    fn classify_examples() {
        let p = diag123();
        let c = classify_point(&p, &[1.0, 0.0, 0.0]).unwrap();
        assert_eq!(c.verdict, Verdict::Sosc);
        assert!((c.pair.lambda - 1.0).abs() < 1e-15 && (c.sosc_margin - 1.0).abs() < 1e-14);

        let c = classify_point(&p, &[0.0, 1.0, 0.0]).unwrap();
        assert_eq!(c.verdict, Verdict::FoncOnly);
        assert!((c.pair.lambda - 2.0).abs() < 1e-15 && (c.sosc_margin + 1.0).abs() < 1e-14);

        let cube = HomogeneousPolynomial::diagonal_power(&[1.0, 0.0, 0.0], 3).unwrap();
        let c = classify_point(&cube, &[0.0, 1.0, 0.0]).unwrap();
        assert_eq!(c.verdict, Verdict::SoncDegenerate);
        assert_eq!((c.pair.lambda, c.sosc_margin), (0.0, 0.0));
    }

    #[test]
    fn non_unit_and_non_critical() {
        assert!(matches!(
            classify_point(&diag123(), &[1.0, 1.0, 0.0]),
            Err(Error::NotUnit { .. })
        ));
        let s = 0.5_f64.sqrt();
        let c = classify_point(&diag123(), &[s, s, 0.0]).unwrap();
        assert_eq!(c.verdict, Verdict::NotCritical);
    }

    #[test]
    fn bands_partition_margins() {
        let tol = 1e-7;
        for m in [-1.0, -1.0000001e-7, -1e-7, 0.0, 1e-7, 1.0000001e-7, 3.0] {
            let v = Verdict::from_measurements(0.0, 1e-9, m, tol);
            let expected = if m > tol {
                Verdict::Sosc
            } else if m < -tol {
                Verdict::FoncOnly
            } else {
                Verdict::SoncDegenerate
            };
            assert_eq!(v, expected, "margin {m}");
        }
        assert_eq!(Verdict::from_measurements(1e-3, 1e-9, 5.0, tol), Verdict::NotCritical);
    }

    #[test]
    fn classify_all_diag123() {
        let pts = classify_all(&diag123(), &SolverConfig::with_seed(1)).unwrap();
        assert_eq!(pts.len(), 6);
        for p in &pts {
            let on_e1 = p.pair.x[0].abs() > 0.5;
            let want = if on_e1 { Verdict::Sosc } else { Verdict::FoncOnly };
            assert_eq!(p.verdict, want, "{:?}", p.pair.x);
        }
    }

    #[test]
    fn classify_all_sum_of_cubes() {
        let f = HomogeneousPolynomial::diagonal_power(&[1.0, 1.0], 3).unwrap();
        let pts = classify_all(&f, &SolverConfig::with_seed(1)).unwrap();
        // -e1, -e2 (global minima) and (1,1)/√2, a strict local minimum on the circle
        let sosc: Vec<_> = pts.iter().filter(|p| p.verdict == Verdict::Sosc).collect();
        assert_eq!(sosc.len(), 3);
        let global = sosc.iter().filter(|p| (f.value_at(&p.pair.x) + 1.0).abs() < 1e-12).count();
        assert_eq!(global, 2);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!(sosc.iter().any(|p| (p.pair.x[0] - h).abs() < 1e-9 && (p.pair.x[1] - h).abs() < 1e-9));
    }

    #[test]
    fn n1_points_are_vacuously_sosc() {
        let f = HomogeneousPolynomial::new(1, 2, [(vec![2], -1.0)]).unwrap();
        for x in [[1.0], [-1.0]] {
            let c = classify_point(&f, &x).unwrap();
            assert_eq!(c.verdict, Verdict::Sosc);
            assert!(c.spectrum.eigenvalues.is_empty());
            assert!(ClassifiedPointRecord::from(&c).margin.is_none());
        }
    }

    #[test]
    fn record_serializes_verdict_name() {
        let c = classify_point(&diag123(), &[1.0, 0.0, 0.0]).unwrap();
        let text = serde_json::to_string(&ClassifiedPointRecord::from(&c)).unwrap();
        assert!(text.contains("\"verdict\":\"SOSC\""), "{text}");
    }
}
