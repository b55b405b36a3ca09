//! Real roots of univariate real polynomials through companion-matrix
//! eigenvalues.

use nalgebra::DMatrix;

/// Imaginary parts below this (relative to `max(1, |z|)`) count as real.
pub const REAL_IMAG_TOL: f64 = 1e-8;

/// `Σ coeffs[i] t^i` by Horner.
pub fn eval(coeffs: &[f64], t: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * t + c)
}

fn eval_derivative(coeffs: &[f64], t: f64) -> f64 {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .rev()
        .fold(0.0, |acc, (i, &c)| acc * t + i as f64 * c)
}

/// Number of leading (highest-degree) coefficients that are negligible
/// relative to the largest one.
pub fn vanishing_leading_terms(coeffs: &[f64], rel_tol: f64) -> usize {
    let scale = coeffs.iter().fold(0.0_f64, |m, c| m.max(c.abs()));
    coeffs
        .iter()
        .rev()
        .take_while(|c| c.abs() <= rel_tol * scale)
        .count()
}

/// Real roots of `Σ coeffs[i] t^i`, sorted ascending, each polished by a few
/// Newton steps. Leading coefficients with `|c| ≤ rel_tol · max|c|` are
/// dropped before the companion matrix is formed.
///
/// Multiple real roots may come back as clusters of nearby values; callers
/// deduplicate in whatever geometry they care about.
pub fn real_roots(coeffs: &[f64], rel_tol: f64) -> Vec<f64> {
    let drop = vanishing_leading_terms(coeffs, rel_tol);
    let p = &coeffs[..coeffs.len() - drop];
    if p.len() <= 1 {
        return Vec::new();
    }
    let deg = p.len() - 1;
    let lead = p[deg];
    let mut companion = DMatrix::<f64>::zeros(deg, deg);
    for i in 1..deg {
        companion[(i, i - 1)] = 1.0;
    }
    for i in 0..deg {
        companion[(i, deg - 1)] = -p[i] / lead;
    }
    let eigs = companion.complex_eigenvalues();
    let mut roots: Vec<f64> = eigs
        .iter()
        .filter(|z| z.im.abs() <= REAL_IMAG_TOL * z.re.abs().max(1.0))
        .map(|z| polish(p, z.re))
        .collect();
    roots.sort_by(|a, b| a.total_cmp(b));
    roots
}

fn polish(p: &[f64], mut t: f64) -> f64 {
    let mut best = eval(p, t).abs();
    for _ in 0..8 {
        let dp = eval_derivative(p, t);
        if dp == 0.0 {
            break;
        }
        let cand = t - eval(p, t) / dp;
        let val = eval(p, cand).abs();
        if val.is_nan() || val >= best {
            break;
        }
        best = val;
        t = cand;
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubic_with_three_real_roots() {
        // (t - 1)(t + 2)(t - 3) = t^3 - 2t^2 - 5t + 6
        let r = real_roots(&[6.0, -5.0, -2.0, 1.0], 1e-14);
        assert_eq!(r.len(), 3);
        for (got, want) in r.iter().zip([-2.0, 1.0, 3.0]) {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
    }

    #[test]
    fn complex_pair_is_dropped() {
        // (t^2 + 1)(t - 0.5)
        let r = real_roots(&[-0.5, 1.0, -0.5, 1.0], 1e-14);
        assert_eq!(r.len(), 1);
        assert!((r[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn negligible_leading_terms_are_dropped() {
        assert_eq!(vanishing_leading_terms(&[1.0, 2.0, 0.0, 0.0], 1e-14), 2);
        let r = real_roots(&[-1.0, 1.0, 0.0], 1e-14);
        assert_eq!(r, vec![1.0]);
        assert!(real_roots(&[3.0, 0.0], 1e-14).is_empty());
    }
}
