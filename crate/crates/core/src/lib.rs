//! Critical points of homogeneous polynomials on the unit sphere, their
//! first/second-order classification, and detection of points where the
//! second-order necessary condition holds but the sufficient one fails.
//!
//! The modules build on each other bottom-up:
//!
//! * [`polyhom`]: homogeneous polynomials, calculus, random draws, file format.
//! * [`critsolve`]: real solutions of `∇f(x) = λx`, `‖x‖ = 1`.
//! * [`classify`]: FONC / SONC / SOSC verdicts from the tangent Hessian spectrum.
//! * [`degeneracy`]: rank witnesses, bordered Hessian, quadratic criterion and
//!   the exact elimination oracle for binary forms.
//! * [`genlab`]: witness suites and randomized genericity experiments.

pub mod classify;
pub mod critsolve;
pub mod degeneracy;
mod error;
pub mod genlab;
pub mod json;
pub mod polyhom;
pub mod roots;
pub mod seed;
pub mod tol;

pub use classify::{classify_all, classify_point, tangent_spectrum, ClassifiedPoint, TangentSpectrum, Verdict};
pub use critsolve::{find_critical_pairs, CriticalPair, CriticalSet, SolverConfig};
pub use degeneracy::{
    bordered_determinant, build_witness_matrix, detect_sosc_failure, exact_oracle_n2,
    quadratic_degeneracy, DegeneracyWitness, DetectOutcome, OracleResult, WitnessMatrix,
};
pub use error::{Error, Result};
pub use polyhom::{HomogeneousPolynomial, Monomial};
pub use tol::Tolerances;
