//! Numerical tolerances shared by the solver, classifier and detectors.
//!
//! Every threshold is relative: the `*_factor` fields are multiplied by a
//! scale taken from the problem (coefficient norm, largest singular value,
//! matrix norm) at the point of use.

use serde::{Deserialize, Serialize};

use crate::polyhom::HomogeneousPolynomial;

/// Required distance of a point from the unit sphere before it is accepted
/// as an input to the pointwise analyses.
pub const UNIT_NORM_TOL: f64 = 1e-10;

/// Sphere residual `|‖x‖² − 1|` every returned critical pair satisfies.
pub const SPHERE_RESIDUAL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// FONC residual, times `max(1, ‖f‖)`.
    pub crit_factor: f64,
    /// SOSC margin band, times `max(1, ‖f‖)`.
    pub class_factor: f64,
    /// Third singular value of the witness matrix, times its largest one.
    pub rank_factor: f64,
    /// Bordered determinant, times [`det_scale`].
    pub det_factor: f64,
    /// Eigenvalue coincidence, times `‖A‖_F`.
    pub eig_factor: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            crit_factor: 1e-9,
            class_factor: 1e-7,
            rank_factor: 1e-6,
            det_factor: 1e-8,
            eig_factor: 1e-8,
        }
    }
}

impl Tolerances {
    pub fn crit(&self, f: &HomogeneousPolynomial) -> f64 {
        self.crit_factor * f.coefficient_norm().max(1.0)
    }

    pub fn class(&self, f: &HomogeneousPolynomial) -> f64 {
        self.class_factor * f.coefficient_norm().max(1.0)
    }

    pub fn rank(&self, largest_singular_value: f64) -> f64 {
        self.rank_factor * largest_singular_value
    }

    pub fn det(&self, scale: f64) -> f64 {
        self.det_factor * scale
    }
}

/// Magnitude reference for `det H(x, λ)`.
///
/// The bordered determinant is homogeneous of degree `n − 1` in the
/// Hessian block (the border contributes the unit vector `x` twice), so
/// the natural size is `(1 + ‖∇²f(x)‖_F + |λ|)^(n−1)`.
pub fn det_scale(hessian_frobenius: f64, lambda: f64, n: usize) -> f64 {
    (1.0 + hessian_frobenius + lambda.abs()).powi(n as i32 - 1)
}
