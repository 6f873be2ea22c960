//! Shared test oracles, independent of the library's solution paths.

use dfbgn::{Matrix, Vector};
use nalgebra::SymmetricEigen;

/// Dense trust-region reference solver on small problems: eigendecompose H
/// and solve the secular equation by bisection (with a hard-case fallback).
/// Returns the globally optimal model decrease.
pub fn dense_trs_decrease(g: &Vector<f64>, h: &Matrix<f64>, delta: f64) -> f64 {
    let p = g.len();
    let eig = SymmetricEigen::new(h.clone());
    let lam = &eig.eigenvalues;
    let v = &eig.eigenvectors;
    let gt = v.transpose() * g;
    let lam_min = lam.iter().cloned().fold(f64::INFINITY, f64::min);

    let decrease = |s: &Vector<f64>| -(g.dot(s) + 0.5 * s.dot(&(h * s)));

    // Interior minimizer if H is positive definite and the Newton point fits.
    if lam_min > 1e-14 * lam.iter().cloned().fold(0.0f64, |a, b| a.max(b.abs())).max(1.0) {
        let s_newton = -v * Vector::from_fn(p, |i, _| gt[i] / lam[i]);
        if s_newton.norm() <= delta {
            return decrease(&s_newton);
        }
    }

    // Boundary: ||s(mu)|| is decreasing in mu on (max(0, -lam_min), inf).
    let norm_at = |mu: f64| -> f64 {
        (0..p)
            .map(|i| (gt[i] / (lam[i] + mu)).powi(2))
            .sum::<f64>()
            .sqrt()
    };
    let mu_floor = (-lam_min).max(0.0);
    let mut lo = mu_floor + 1e-14 * (1.0 + mu_floor);
    if norm_at(lo) < delta {
        // Hard case: move along the eigenvector of lam_min to the boundary.
        let s_base = -v * Vector::from_fn(p, |i, _| {
            if (lam[i] - lam_min).abs() < 1e-12 * (1.0 + lam_min.abs()) {
                0.0
            } else {
                gt[i] / (lam[i] + mu_floor)
            }
        });
        let idx = (0..p)
            .min_by(|&a, &b| lam[a].partial_cmp(&lam[b]).unwrap())
            .unwrap();
        let dir: Vector<f64> = v.column(idx).into_owned();
        // tau solving ||s_base + tau dir|| = delta
        let sd = s_base.dot(&dir);
        let disc = (sd * sd + delta * delta - s_base.norm_squared()).max(0.0);
        let tau = -sd + disc.sqrt();
        let s = s_base + dir * tau;
        return decrease(&s);
    }
    let mut hi = lo.max(1.0);
    while norm_at(hi) > delta {
        hi *= 2.0;
        if hi > 1e300 {
            break;
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if norm_at(mid) > delta {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mu = 0.5 * (lo + hi);
    let s = -v * Vector::from_fn(p, |i, _| gt[i] / (lam[i] + mu));
    // Project exactly onto the boundary to clean up bisection residue.
    let s = if s.norm() > 0.0 { &s * (delta / s.norm()) } else { s };
    decrease(&s)
}

/// Spectral norm from the eigendecomposition (exact 2-norm for symmetric H).
pub fn sym_two_norm(h: &Matrix<f64>) -> f64 {
    SymmetricEigen::new(h.clone())
        .eigenvalues
        .iter()
        .fold(0.0f64, |a, v| a.max(v.abs()))
}
