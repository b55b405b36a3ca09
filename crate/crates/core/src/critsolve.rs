//! Real critical pairs `(x, λ)` with `∇f(x) = λx`, `‖x‖ = 1`.
//!
//! [`find_critical_pairs`] runs damped Newton on the Lagrange system
//! `F(x, λ) = (∇f(x) − λx, ½(xᵀx − 1))` from many random starts on the
//! sphere. For `n = 2` the critical directions are exactly the real
//! projective roots of the binary form `g = x₂·∂₁f − x₁·∂₂f`, which
//! [`enumerate_critical_pairs_n2`] finds directly; [`certify_against_oracle`]
//! compares the two.

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::polyhom::HomogeneousPolynomial;
use crate::tol::{Tolerances, SPHERE_RESIDUAL_TOL};
use crate::{roots, seed, Error, Result};

pub const DEFAULT_DEDUP_RADIUS: f64 = 1e-6;
pub const MAX_DEFAULT_STARTS: usize = 20_000;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Number of random starts; `None` means `50·d·n`, capped at 20000.
    pub starts: Option<usize>,
    pub seed: u64,
    pub tolerances: Tolerances,
    pub dedup_radius: f64,
    pub max_iterations: usize,
    pub max_halvings: u32,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            starts: None,
            seed: 0,
            tolerances: Tolerances::default(),
            dedup_radius: DEFAULT_DEDUP_RADIUS,
            max_iterations: 100,
            max_halvings: 30,
        }
    }
}

impl SolverConfig {
    pub fn with_seed(seed: u64) -> Self {
        SolverConfig {
            seed,
            ..Self::default()
        }
    }

    pub fn starts_for(&self, n: usize, d: u32) -> usize {
        self.starts
            .unwrap_or_else(|| (50 * d as usize * n).min(MAX_DEFAULT_STARTS))
    }

    pub fn validate(&self) -> Result<()> {
        if self.starts == Some(0) {
            return Err(Error::InvalidConfig("starts must be positive".into()));
        }
        for (name, v) in [
            ("tol-crit", self.tolerances.crit_factor),
            ("dedup-radius", self.dedup_radius),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidConfig(format!("{name} must be a positive number, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalPair {
    pub x: Vec<f64>,
    pub lambda: f64,
    /// `‖∇f(x) − λx‖`.
    pub residual: f64,
    /// `|‖x‖² − 1|`.
    pub sphere_residual: f64,
}

impl CriticalPair {
    /// Normalizes `x`, sets `λ = d·f(x)` and measures both residuals.
    pub fn at(f: &HomogeneousPolynomial, x: &[f64]) -> Self {
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let x: Vec<f64> = x.iter().map(|v| v / norm).collect();
        let lambda = f.degree() as f64 * f.value_at(&x);
        let g = f.gradient_at(&x);
        let residual = g
            .iter()
            .zip(&x)
            .map(|(gi, xi)| (gi - lambda * xi).powi(2))
            .sum::<f64>()
            .sqrt();
        let sphere_residual = (x.iter().map(|v| v * v).sum::<f64>() - 1.0).abs();
        CriticalPair {
            x,
            lambda,
            residual,
            sphere_residual,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CriticalSet {
    pub pairs: Vec<CriticalPair>,
    pub dedup_radius: f64,
    pub starts_used: usize,
    pub converged_fraction: f64,
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v).powi(2)).sum::<f64>().sqrt()
}

fn antipode_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u + v).powi(2)).sum::<f64>().sqrt()
}

/// Greedy merge: candidates sorted by residual, each kept only if no kept
/// point lies within `radius`.
fn dedup(mut candidates: Vec<CriticalPair>, radius: f64) -> Vec<CriticalPair> {
    candidates.sort_by(|a, b| a.residual.total_cmp(&b.residual));
    let mut kept: Vec<CriticalPair> = Vec::new();
    for c in candidates {
        if kept.iter().all(|k| distance(&k.x, &c.x) > radius) {
            kept.push(c);
        }
    }
    kept
}

/// Adds `−x` for every kept `x` that has no antipode in the set yet.
/// `∇f(−x) = (−1)^(d−1)∇f(x)`, so the antipode of a critical point is critical.
fn close_under_antipodes(f: &HomogeneousPolynomial, pairs: &mut Vec<CriticalPair>, radius: f64) {
    let missing: Vec<CriticalPair> = pairs
        .iter()
        .filter(|p| pairs.iter().all(|q| antipode_distance(&p.x, &q.x) > radius))
        .map(|p| {
            let neg: Vec<f64> = p.x.iter().map(|v| -v).collect();
            CriticalPair::at(f, &neg)
        })
        .collect();
    pairs.extend(missing);
}

/// Lexicographic order on `x` so results do not depend on discovery order.
fn sort_pairs(pairs: &mut [CriticalPair]) {
    pairs.sort_by(|a, b| {
        a.x.iter()
            .zip(&b.x)
            .map(|(u, v)| u.total_cmp(v))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
}

fn lagrange_residual(f: &HomogeneousPolynomial, x: &DVector<f64>, lambda: f64) -> DVector<f64> {
    let n = x.len();
    let g = f.gradient_at(x.as_slice());
    let mut r = DVector::zeros(n + 1);
    for i in 0..n {
        r[i] = g[i] - lambda * x[i];
    }
    r[n] = 0.5 * (x.norm_squared() - 1.0);
    r
}

fn finite(v: &DVector<f64>) -> bool {
    v.iter().all(|c| c.is_finite())
}

/// Minimum-norm least-squares step with singular values below
/// `rel_cutoff·σ_max` dropped.
fn truncated_step(jac: DMatrix<f64>, rhs: &DVector<f64>, rel_cutoff: f64) -> Option<DVector<f64>> {
    let svd = jac.svd(true, true);
    let cutoff = rel_cutoff * svd.singular_values.max();
    svd.solve(rhs, cutoff).ok().filter(finite)
}

/// Accepted point of a line search.
struct Trial {
    x: DVector<f64>,
    lambda: f64,
    r: DVector<f64>,
    r_norm: f64,
    full_step: bool,
}

/// Norm of the `∇f − λx` block. Iterates are kept on the sphere, so the
/// constraint row only carries rounding noise and is left out.
fn fonc_norm(r: &DVector<f64>) -> f64 {
    r.rows(0, r.len() - 1).norm()
}

/// Damped Newton from one start. `None` when the iterate escapes or the
/// limit fails the FONC tolerance.
fn newton_from(
    f: &HomogeneousPolynomial,
    start: DVector<f64>,
    config: &SolverConfig,
    tol_crit: f64,
) -> Option<CriticalPair> {
    let n = f.n();
    let d = f.degree() as f64;
    let mut x = start.normalize();
    let mut lambda = d * f.value_at(x.as_slice());
    let mut r = lagrange_residual(f, &x, lambda);
    let mut r_norm = fonc_norm(&r);
    let stop = 1e-4 * tol_crit;

    for _ in 0..config.max_iterations {
        // Past the stopping threshold, keep taking full steps only while they
        // at least halve the residual. Regular roots stop after one or two
        // extra steps; singular roots converge linearly and need the polish
        // to land inside the degenerate band.
        let polishing = r_norm <= stop;
        if r_norm == 0.0 {
            break;
        }
        let mut jac = f.hessian_at(x.as_slice());
        let mut jac_full = DMatrix::zeros(n + 1, n + 1);
        for i in 0..n {
            jac[(i, i)] -= lambda;
        }
        jac_full.view_mut((0, 0), (n, n)).copy_from(&jac);
        for i in 0..n {
            jac_full[(i, n)] = -x[i];
            jac_full[(n, i)] = x[i];
        }
        // Trial points are retracted onto the sphere: near singular roots the
        // step is much longer than the residual, and the curvature error
        // ½‖dx‖² of the unretracted step would swamp the decrease.
        // Plain Newton first. Where the Jacobian is singular or nearly so
        // (continua of critical points, singular isolated roots such as e₂
        // for x₁⁴) the damped Newton step crawls, so whenever the full step
        // is rejected a truncated-SVD step that drops the near-null
        // directions competes with it.
        let rhs = -&r;
        let halvings = if polishing { 0 } else { config.max_halvings };
        let target = if polishing { 0.5 * r_norm } else { r_norm };
        let search = |step: &DVector<f64>| -> Option<Trial> {
            let dx = step.rows(0, n).into_owned();
            let mut t = 1.0;
            for k in 0..=halvings {
                let x_try = (&x + &dx * t).normalize();
                let l_try = lambda + step[n] * t;
                let r_try = lagrange_residual(f, &x_try, l_try);
                let n_try = fonc_norm(&r_try);
                if n_try < target {
                    return Some(Trial {
                        x: x_try,
                        lambda: l_try,
                        r: r_try,
                        r_norm: n_try,
                        full_step: k == 0,
                    });
                }
                t *= 0.5;
            }
            None
        };
        let mut best = jac_full.clone().lu().solve(&rhs).filter(finite).and_then(|s| search(&s));
        if !best.as_ref().is_some_and(|b| b.full_step) {
            let alt = truncated_step(jac_full, &rhs, 1e-8).and_then(|s| search(&s));
            if let Some(a) = alt {
                if best.as_ref().is_none_or(|b| a.r_norm < b.r_norm) {
                    best = Some(a);
                }
            }
        }
        let accepted = best.is_some();
        if let Some(b) = best {
            x = b.x;
            lambda = b.lambda;
            r = b.r;
            r_norm = b.r_norm;
        }
        if !accepted {
            break;
        }
        if x.norm() > 1e6 {
            return None;
        }
    }

    if !x.iter().all(|v| v.is_finite()) || x.norm() == 0.0 {
        return None;
    }
    let pair = CriticalPair::at(f, x.as_slice());
    (pair.residual <= tol_crit && pair.sphere_residual <= SPHERE_RESIDUAL_TOL).then_some(pair)
}

fn random_unit(n: usize, seed: u64) -> DVector<f64> {
    let mut rng = seed::rng(seed);
    loop {
        let v: DVector<f64> = DVector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
        let norm = v.norm();
        if norm > 1e-12 {
            return v / norm;
        }
    }
}

/// Multistart Newton for all real critical pairs.
///
/// Start `i` draws a uniform point on the sphere from
/// `seed::derive(config.seed, i)`, so the result is the same however rayon
/// schedules the starts. The returned set is deduplicated, closed under
/// `x ↦ −x` and sorted lexicographically in `x`.
pub fn find_critical_pairs(f: &HomogeneousPolynomial, config: &SolverConfig) -> Result<CriticalSet> {
    f.ensure_nonzero()?;
    config.validate()?;
    let n = f.n();
    let starts = config.starts_for(n, f.degree());
    let tol_crit = config.tolerances.crit(f);

    let converged: Vec<CriticalPair> = (0..starts as u64)
        .into_par_iter()
        .filter_map(|i| {
            let x0 = random_unit(n, seed::derive(config.seed, i));
            newton_from(f, x0, config, tol_crit)
        })
        .collect();
    let converged_fraction = converged.len() as f64 / starts as f64;
    let mut pairs = dedup(converged, config.dedup_radius);
    close_under_antipodes(f, &mut pairs, config.dedup_radius);
    sort_pairs(&mut pairs);
    Ok(CriticalSet {
        pairs,
        dedup_radius: config.dedup_radius,
        starts_used: starts,
        converged_fraction,
    })
}

/// Outcome of the exact `n = 2` enumeration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum N2Enumeration {
    Finite(CriticalSet),
    /// `g ≡ 0`: `f = c·(x₁² + x₂²)^(d/2)`, every point of the circle is
    /// critical with the same multiplier.
    AllCritical { lambda: f64 },
}

/// Coefficients of `g = x₂·∂₁f − x₁·∂₂f`; entry `i` multiplies `x₁^i x₂^(d−i)`.
pub fn rotation_form(f: &HomogeneousPolynomial) -> Vec<f64> {
    let d = f.degree() as usize;
    let mut g = vec![0.0; d + 1];
    for (m, c) in f.terms() {
        let (a, b) = (m.exponents()[0] as usize, m.exponents()[1] as usize);
        if a > 0 {
            g[a - 1] += c * a as f64;
        }
        if b > 0 {
            g[a + 1] -= c * b as f64;
        }
    }
    g
}

fn form_on_circle(g: &[f64], theta: f64) -> (f64, f64) {
    let d = g.len() - 1;
    let (s, c) = theta.sin_cos();
    let mut value = 0.0;
    let mut slope = 0.0;
    for (i, gi) in g.iter().enumerate() {
        let j = d - i;
        value += gi * c.powi(i as i32) * s.powi(j as i32);
        if i > 0 {
            slope -= gi * i as f64 * c.powi(i as i32 - 1) * s.powi(j as i32 + 1);
        }
        if j > 0 {
            slope += gi * j as f64 * c.powi(i as i32 + 1) * s.powi(j as i32 - 1);
        }
    }
    (value, slope)
}

/// Newton on the angle `θ` of `(cos θ, sin θ)`, accepting only decreasing steps.
fn polish_angle(g: &[f64], mut theta: f64) -> f64 {
    let (mut best, _) = form_on_circle(g, theta);
    best = best.abs();
    for _ in 0..8 {
        let (v, dv) = form_on_circle(g, theta);
        if dv == 0.0 {
            break;
        }
        let cand = theta - v / dv;
        let cv = form_on_circle(g, cand).0.abs();
        if cv.is_nan() || cv >= best {
            break;
        }
        best = cv;
        theta = cand;
    }
    theta
}

/// Exact critical set for `n = 2` from the real roots of the binary form `g`.
///
/// Finite roots come from the companion matrix of `g(t, 1)`; a vanishing
/// `x₁^d` coefficient adds the direction `e₁` (the root at `x₂ = 0`).
pub fn enumerate_critical_pairs_n2(f: &HomogeneousPolynomial) -> Result<N2Enumeration> {
    if f.n() != 2 {
        return Err(Error::Unsupported(format!(
            "exact enumeration needs n = 2, got n = {}",
            f.n()
        )));
    }
    f.ensure_nonzero()?;
    let g = rotation_form(f);
    let scale = f.coefficient_norm().max(1.0);
    let g_max = g.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if g_max <= 1e-12 * scale {
        let lambda = f.degree() as f64 * f.value_at(&[1.0, 0.0]);
        return Ok(N2Enumeration::AllCritical { lambda });
    }

    const LEAD_TOL: f64 = 1e-14;
    let mut angles: Vec<f64> = roots::real_roots(&g, LEAD_TOL)
        .into_iter()
        .map(|t| 1.0_f64.atan2(t))
        .collect();
    if roots::vanishing_leading_terms(&g, LEAD_TOL) > 0 {
        angles.push(0.0);
    }
    let candidates: Vec<CriticalPair> = angles
        .into_iter()
        .flat_map(|theta| {
            let theta = polish_angle(&g, theta);
            let (s, c) = theta.sin_cos();
            [CriticalPair::at(f, &[c, s]), CriticalPair::at(f, &[-c, -s])]
        })
        .collect();
    let mut pairs = dedup(candidates, DEFAULT_DEDUP_RADIUS);
    sort_pairs(&mut pairs);
    Ok(N2Enumeration::Finite(CriticalSet {
        pairs,
        dedup_radius: DEFAULT_DEDUP_RADIUS,
        starts_used: 0,
        converged_fraction: 1.0,
    }))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Certification {
    pub multistart_count: usize,
    pub oracle_count: usize,
    pub only_multistart: Vec<CriticalPair>,
    pub only_oracle: Vec<CriticalPair>,
    /// Set when `g ≡ 0`; the oracle has no finite set to compare against.
    pub all_points_critical: bool,
    pub certified: bool,
}

/// Runs both finders on an `n = 2` polynomial and lists the pairs found by
/// only one of them. Two pairs match when their points are within the
/// dedup radius.
pub fn certify_against_oracle(f: &HomogeneousPolynomial, config: &SolverConfig) -> Result<Certification> {
    let multistart = find_critical_pairs(f, config)?;
    let exact = enumerate_critical_pairs_n2(f)?;
    let radius = config.dedup_radius;
    let oracle = match exact {
        N2Enumeration::AllCritical { .. } => {
            return Ok(Certification {
                multistart_count: multistart.pairs.len(),
                oracle_count: 0,
                only_multistart: Vec::new(),
                only_oracle: Vec::new(),
                all_points_critical: true,
                certified: false,
            })
        }
        N2Enumeration::Finite(set) => set,
    };
    let unmatched = |from: &[CriticalPair], against: &[CriticalPair]| -> Vec<CriticalPair> {
        from.iter()
            .filter(|p| against.iter().all(|q| distance(&p.x, &q.x) > radius))
            .cloned()
            .collect()
    };
    let only_multistart = unmatched(&multistart.pairs, &oracle.pairs);
    let only_oracle = unmatched(&oracle.pairs, &multistart.pairs);
    let certified = only_multistart.is_empty() && only_oracle.is_empty();
    Ok(Certification {
        multistart_count: multistart.pairs.len(),
        oracle_count: oracle.pairs.len(),
        only_multistart,
        only_oracle,
        all_points_critical: false,
        certified,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn contains(set: &CriticalSet, x: &[f64], lambda: f64) -> bool {
        set.pairs
            .iter()
            .any(|p| distance(&p.x, x) < 1e-8 && (p.lambda - lambda).abs() < 1e-8)
    }

    fn x1_cubed_plus_x2_cubed() -> HomogeneousPolynomial {
        HomogeneousPolynomial::diagonal_power(&[1.0, 1.0], 3).unwrap()
    }

    #[test]
    fn linear_case() {
        let f = HomogeneousPolynomial::linear(&[1.0, 0.0]).unwrap();
        let set = find_critical_pairs(&f, &SolverConfig::with_seed(1)).unwrap();
        assert_eq!(set.pairs.len(), 2);
        assert!(contains(&set, &[1.0, 0.0], 1.0));
        assert!(contains(&set, &[-1.0, 0.0], -1.0));
    }

    #[test]
    fn diagonal_quadratic_eigenpairs() {
        let p = HomogeneousPolynomial::diagonal_power(&[0.5, 1.0, 1.5], 2).unwrap();
        let set = find_critical_pairs(&p, &SolverConfig::with_seed(2)).unwrap();
        assert_eq!(set.pairs.len(), 6);
        for k in 0..3 {
            let mut e = vec![0.0; 3];
            e[k] = 1.0;
            assert!(contains(&set, &e, (k + 1) as f64));
            e[k] = -1.0;
            assert!(contains(&set, &e, (k + 1) as f64));
        }
    }

    #[test]
    fn sum_of_cubes_six_pairs() {
        let f = x1_cubed_plus_x2_cubed();
        let set = find_critical_pairs(&f, &SolverConfig::with_seed(3)).unwrap();
        assert_eq!(set.pairs.len(), 6);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        for (x, l) in [
            ([1.0, 0.0], 3.0),
            ([-1.0, 0.0], -3.0),
            ([0.0, 1.0], 3.0),
            ([0.0, -1.0], -3.0),
            ([h, h], 3.0 * h),
            ([-h, -h], -3.0 * h),
        ] {
            assert!(contains(&set, &x, l), "missing {x:?}");
        }
        for p in &set.pairs {
            assert!((p.lambda - 3.0 * f.value_at(&p.x)).abs() <= 1e-9);
        }
    }

    #[test]
    fn rotation_form_of_sum_of_cubes() {
        // g = 3x1^2 x2 - 3 x1 x2^2 = 3 x1 x2 (x1 - x2)
        assert_eq!(rotation_form(&x1_cubed_plus_x2_cubed()), vec![0.0, -3.0, 3.0, 0.0]);
    }

    #[test]
    fn oracle_examples() {
        let N2Enumeration::Finite(set) = enumerate_critical_pairs_n2(&x1_cubed_plus_x2_cubed()).unwrap() else {
            panic!("finite set expected");
        };
        assert_eq!(set.pairs.len(), 6);

        let q = HomogeneousPolynomial::diagonal_power(&[0.5, 1.0], 2).unwrap();
        let N2Enumeration::Finite(set) = enumerate_critical_pairs_n2(&q).unwrap() else {
            panic!("finite set expected");
        };
        assert_eq!(set.pairs.len(), 4);
        assert!(contains(&set, &[1.0, 0.0], 1.0));
        assert!(contains(&set, &[0.0, -1.0], 2.0));

        // (x1^2 + x2^2)^2
        let radial = HomogeneousPolynomial::new(
            2,
            4,
            [(vec![4, 0], 1.0), (vec![2, 2], 2.0), (vec![0, 4], 1.0)],
        )
        .unwrap();
        match enumerate_critical_pairs_n2(&radial).unwrap() {
            N2Enumeration::AllCritical { lambda } => assert!((lambda - 4.0).abs() < 1e-15),
            other => panic!("expected AllCritical, got {other:?}"),
        }
    }

    #[test]
    fn certification() {
        let cfg = SolverConfig::with_seed(4);
        let c = certify_against_oracle(&x1_cubed_plus_x2_cubed(), &cfg).unwrap();
        assert!(c.certified, "{c:?}");
        let radial = HomogeneousPolynomial::new(2, 2, [(vec![2, 0], 1.0), (vec![0, 2], 1.0)]).unwrap();
        let c = certify_against_oracle(&radial, &cfg).unwrap();
        assert!(c.all_points_critical && !c.certified);
    }

    #[test]
    fn zero_polynomial_rejected() {
        let z = HomogeneousPolynomial::zero(2, 3);
        assert!(matches!(
            find_critical_pairs(&z, &SolverConfig::default()),
            Err(Error::ZeroPolynomial)
        ));
        assert!(matches!(enumerate_critical_pairs_n2(&z), Err(Error::ZeroPolynomial)));
    }

    #[test]
    fn n1_has_two_points() {
        let f = HomogeneousPolynomial::new(1, 3, [(vec![3], 2.0)]).unwrap();
        let set = find_critical_pairs(&f, &SolverConfig::default()).unwrap();
        assert_eq!(set.pairs.len(), 2);
        assert!(contains(&set, &[1.0], 6.0));
        assert!(contains(&set, &[-1.0], -6.0));
    }

    #[test]
    fn deterministic_given_seed() {
        let f = HomogeneousPolynomial::random(3, 3, 9).unwrap();
        let a = find_critical_pairs(&f, &SolverConfig::with_seed(5)).unwrap();
        let b = find_critical_pairs(&f, &SolverConfig::with_seed(5)).unwrap();
        assert_eq!(a.pairs, b.pairs);
    }
}
