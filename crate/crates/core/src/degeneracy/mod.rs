//! Detection of SONC points where the SOSC fails.
//!
//! Three characterizations are implemented side by side:
//!
//! * the rank witness: a nonzero `y ⊥ x` such that the `2n × 3` matrix
//!   `[[∇f(x), x, 0], [∇²f(x)y, y, x]]` has rank at most two;
//! * the bordered Hessian `H(x, λ) = [[∇²f(x) − λI, x], [xᵀ, 0]]`, whose
//!   determinant vanishes at every degenerate point (necessary only);
//! * for quadratics `½xᵀAx`, a repeated smallest eigenvalue of `A`.
//!
//! [`exact_oracle_n2`] decides the complex version of the rank condition
//! exactly for binary forms.

mod oracle;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::classify::{check_unit, tangent_spectrum};
use crate::critsolve::CriticalPair;
use crate::polyhom::HomogeneousPolynomial;
use crate::tol::{det_scale, Tolerances};
use crate::{Error, Result};

pub use oracle::{exact_oracle_n2, witness_minors_n2, OracleResult};

/// The `2n × 3` matrix `[[∇f(x), x, 0], [∇²f(x)y, y, x]]` and its SVD data.
#[derive(Debug, Clone)]
pub struct WitnessMatrix {
    pub matrix: DMatrix<f64>,
    /// Descending.
    pub singular_values: [f64; 3],
    /// Right singular vector of the smallest singular value.
    pub null_vector: [f64; 3],
}

impl WitnessMatrix {
    pub fn third_singular_value(&self) -> f64 {
        self.singular_values[2]
    }

    pub fn has_rank_at_most_two(&self, tol: &Tolerances) -> bool {
        self.singular_values[2] <= tol.rank(self.singular_values[0])
    }
}

pub fn build_witness_matrix(f: &HomogeneousPolynomial, x: &[f64], y: &[f64]) -> Result<WitnessMatrix> {
    let n = f.n();
    for v in [x, y] {
        if v.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: v.len(),
            });
        }
    }
    if x.iter().all(|v| *v == 0.0) {
        return Err(Error::InvalidConfig("witness matrix needs a nonzero x".into()));
    }
    let grad = f.gradient_at(x);
    let hy = f.hessian_at(x) * DVector::from_column_slice(y);
    let mut m = DMatrix::zeros(2 * n, 3);
    for i in 0..n {
        m[(i, 0)] = grad[i];
        m[(n + i, 0)] = hy[i];
        m[(i, 1)] = x[i];
        m[(n + i, 1)] = y[i];
        m[(n + i, 2)] = x[i];
    }
    let svd = m.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested right singular vectors");
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let singular_values = order.map(|i| svd.singular_values[i]);
    let last = order[2];
    let null_vector = [v_t[(last, 0)], v_t[(last, 1)], v_t[(last, 2)]];
    Ok(WitnessMatrix {
        matrix: m,
        singular_values,
        null_vector,
    })
}

/// FONC residual and curvature gap recovered from a witness `(x, y)` alone.
///
/// A null vector `β` of the witness matrix with `β₁ ≠ 0` gives the
/// multiplier `λ = −β₂/β₁`; then `‖∇f(x) − λx‖` is the FONC residual and
/// `yᵀ∇²f(x)y/‖y‖² − λ` bounds the SOSC margin from above.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct WitnessReconstruction {
    pub lambda: f64,
    pub fonc_residual: f64,
    pub curvature_gap: f64,
}

pub fn reconstruct_from_witness(f: &HomogeneousPolynomial, x: &[f64], y: &[f64]) -> Result<Option<WitnessReconstruction>> {
    let w = build_witness_matrix(f, x, y)?;
    let [b1, b2, _] = w.null_vector;
    if b1.abs() <= 1e-12 {
        return Ok(None);
    }
    let lambda = -b2 / b1;
    let grad = f.gradient_at(x);
    let fonc_residual = grad
        .iter()
        .zip(x)
        .map(|(g, xi)| (g - lambda * xi).powi(2))
        .sum::<f64>()
        .sqrt();
    let yv = DVector::from_column_slice(y);
    let curvature = (yv.transpose() * f.hessian_at(x) * &yv)[0] / yv.norm_squared();
    Ok(Some(WitnessReconstruction {
        lambda,
        fonc_residual,
        curvature_gap: curvature - lambda,
    }))
}

/// `[[∇²f(x) − λI, x], [xᵀ, 0]]` and its determinant.
#[derive(Debug, Clone)]
pub struct BorderedMatrix {
    pub matrix: DMatrix<f64>,
    pub det: f64,
}

pub fn bordered_matrix(f: &HomogeneousPolynomial, x: &[f64], lambda: f64) -> Result<BorderedMatrix> {
    let n = f.n();
    if x.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: x.len(),
        });
    }
    let h = f.hessian_at(x);
    let mut m = DMatrix::zeros(n + 1, n + 1);
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] = h[(i, j)];
        }
        m[(i, i)] -= lambda;
        m[(i, n)] = x[i];
        m[(n, i)] = x[i];
    }
    let det = m.clone().lu().determinant();
    Ok(BorderedMatrix { matrix: m, det })
}

/// `det H(x, λ)`. Vanishing is necessary for degeneracy, not sufficient.
pub fn bordered_determinant(f: &HomogeneousPolynomial, x: &[f64], lambda: f64) -> Result<f64> {
    bordered_matrix(f, x, lambda).map(|b| b.det)
}

/// [`det_scale`] evaluated at `(x, λ)`.
pub fn bordered_scale(f: &HomogeneousPolynomial, x: &[f64], lambda: f64) -> f64 {
    det_scale(f.hessian_at(x).norm(), lambda, f.n())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DegeneracyWitness {
    pub x: Vec<f64>,
    /// Unit tangent direction of zero SOSC margin.
    pub y: Vec<f64>,
    /// `xᵀ(∇²f(x)y − λy)`.
    pub mu: f64,
    pub lambda: f64,
    pub sosc_margin: f64,
    pub third_singular_value: f64,
    pub rank_tol: f64,
    /// `third_singular_value ≤ rank_tol`.
    pub rank_verified: bool,
    pub bordered_det: f64,
    /// `tol_det · scale`.
    pub det_tol: f64,
    /// `‖(∇²f(x) − λI)y − μx‖`, the bordered system `H(x, λ)(y, −μ) = 0`
    /// evaluated at the witness (its last row `xᵀy` is zero by construction).
    pub bordered_residual: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum DetectOutcome {
    /// SONC holds and SOSC fails within tolerance.
    Witness(DegeneracyWitness),
    /// SOSC holds with the given margin (`None` for `n = 1`).
    Sosc { margin: Option<f64> },
    /// SONC fails: the point is a saddle or maximizer on the sphere.
    NotSonc { margin: f64 },
}

impl DetectOutcome {
    pub fn witness(&self) -> Option<&DegeneracyWitness> {
        match self {
            DetectOutcome::Witness(w) => Some(w),
            _ => None,
        }
    }
}

pub fn detect_sosc_failure(f: &HomogeneousPolynomial, x: &[f64]) -> Result<DetectOutcome> {
    detect_sosc_failure_with(f, x, &Tolerances::default())
}

/// Looks for a rank witness at a critical point `x`.
///
/// Errors with [`Error::NotCritical`] when the FONC residual exceeds the
/// critical tolerance. Otherwise the tangent eigenvector of the smallest
/// eigenvalue is the witness candidate; it is returned when the SOSC margin
/// lies in the degenerate band.
pub fn detect_sosc_failure_with(f: &HomogeneousPolynomial, x: &[f64], tol: &Tolerances) -> Result<DetectOutcome> {
    f.ensure_nonzero()?;
    if x.len() != f.n() {
        return Err(Error::DimensionMismatch {
            expected: f.n(),
            got: x.len(),
        });
    }
    check_unit(x)?;
    let pair = CriticalPair::at(f, x);
    let tol_crit = tol.crit(f);
    if pair.residual > tol_crit {
        return Err(Error::NotCritical {
            residual: pair.residual,
            tol: tol_crit,
        });
    }
    let lambda = pair.lambda;
    let spectrum = tangent_spectrum(f, x)?;
    let Some(min_eig) = spectrum.min_eigenvalue() else {
        return Ok(DetectOutcome::Sosc { margin: None });
    };
    let margin = min_eig - lambda;
    let tol_class = tol.class(f);
    if margin > tol_class {
        return Ok(DetectOutcome::Sosc { margin: Some(margin) });
    }
    if margin < -tol_class {
        return Ok(DetectOutcome::NotSonc { margin });
    }

    let xv = DVector::from_column_slice(x);
    let mut y = spectrum.eigenvector(0);
    y -= &xv * xv.dot(&y);
    y /= y.norm();
    let hessian = f.hessian_at(x);
    let shifted = &hessian * &y - &y * lambda;
    let mu = xv.dot(&shifted);
    let bordered_residual = (&shifted - &xv * mu).norm();

    let w = build_witness_matrix(f, x, y.as_slice())?;
    let rank_tol = tol.rank(w.singular_values[0]);
    let det = bordered_determinant(f, x, lambda)?;
    let det_tol = tol.det(det_scale(hessian.norm(), lambda, f.n()));
    Ok(DetectOutcome::Witness(DegeneracyWitness {
        x: x.to_vec(),
        y: y.as_slice().to_vec(),
        mu,
        lambda,
        sosc_margin: margin,
        third_singular_value: w.third_singular_value(),
        rank_tol,
        rank_verified: w.third_singular_value() <= rank_tol,
        bordered_det: det,
        det_tol,
        bordered_residual,
    }))
}

/// Third singular value of the witness matrix for every tangent eigenvector
/// `y` at `x`, paired with the rank tolerance for that matrix.
pub fn tangent_witness_scan(f: &HomogeneousPolynomial, x: &[f64], tol: &Tolerances) -> Result<Vec<(f64, f64)>> {
    let spectrum = tangent_spectrum(f, x)?;
    (0..spectrum.eigenvalues.len())
        .map(|i| {
            let y = spectrum.eigenvector(i);
            let w = build_witness_matrix(f, x, y.as_slice())?;
            Ok((w.third_singular_value(), tol.rank(w.singular_values[0])))
        })
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct QuadraticDegeneracy {
    pub degenerate: bool,
    pub lambda1_multiplicity: usize,
    pub eigenvalues: Vec<f64>,
    pub tol_eig: f64,
}

pub fn quadratic_degeneracy(a: &DMatrix<f64>) -> Result<QuadraticDegeneracy> {
    quadratic_degeneracy_with(a, &Tolerances::default())
}

/// `½xᵀAx` has an SONC point failing the SOSC iff the smallest eigenvalue of
/// `A` is repeated; eigenvalues within `tol_eig = eig_factor·‖A‖_F` of the
/// smallest one count toward its multiplicity.
pub fn quadratic_degeneracy_with(a: &DMatrix<f64>, tol: &Tolerances) -> Result<QuadraticDegeneracy> {
    if a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            got: a.ncols(),
        });
    }
    let sym = (a + a.transpose()) * 0.5;
    let tol_eig = tol.eig_factor * sym.norm();
    let mut eigenvalues: Vec<f64> = SymmetricEigen::new(sym).eigenvalues.iter().copied().collect();
    eigenvalues.sort_by(|p, q| p.total_cmp(q));
    let lambda1 = eigenvalues[0];
    let lambda1_multiplicity = eigenvalues.iter().filter(|&&v| v - lambda1 <= tol_eig).count();
    Ok(QuadraticDegeneracy {
        degenerate: lambda1_multiplicity >= 2,
        lambda1_multiplicity,
        eigenvalues,
        tol_eig,
    })
}
