//! Truncated conjugate-gradient solver for the low-dimensional trust-region
//! subproblem `min g^T s + 0.5 s^T H s  s.t.  ||s|| <= delta`.

use crate::error::{Error, Result};
use crate::{Matrix, Scalar, Vector};

/// Step returned by [`solve_trs`].
#[derive(Debug, Clone)]
pub struct TrsSolution<T: Scalar> {
    pub s_hat: Vector<T>,
    /// `m(0) - m(s)`, guaranteed nonnegative.
    pub model_decrease: T,
    /// Whether the step ended on the trust-region boundary.
    pub on_boundary: bool,
    pub cg_iters: usize,
}

const RESIDUAL_TOL: f64 = 1e-8;
const BOUNDARY_TOL: f64 = 1e-8;

/// Steihaug-Toint truncated CG. Terminates on a small residual, on hitting
/// the boundary, on a negative-curvature direction (followed to the
/// boundary), or after `p` iterations. The returned step satisfies the
/// Cauchy-decrease condition with `c1 = 1/2`.
pub fn solve_trs<T: Scalar>(g: &Vector<T>, h: &Matrix<T>, delta: T) -> Result<TrsSolution<T>> {
    let p = g.len();
    if h.nrows() != p || h.ncols() != p {
        return Err(Error::Dimension {
            expected: p,
            got: h.nrows(),
        });
    }
    if !(delta > T::zero()) {
        return Err(Error::Parameter("trust-region radius must be positive".into()));
    }
    if !g.iter().all(|v| v.is_finite_scalar()) || !h.iter().all(|v| v.is_finite_scalar()) {
        return Err(Error::NonFinite {
            context: "trust-region subproblem",
        });
    }

    let gnorm = g.norm();
    if gnorm == T::zero() {
        return Ok(TrsSolution {
            s_hat: Vector::zeros(p),
            model_decrease: T::zero(),
            on_boundary: false,
            cg_iters: 0,
        });
    }

    let quad = |s: &Vector<T>| g.dot(s) + T::cst(0.5) * s.dot(&(h * s));
    let tol = T::cst(RESIDUAL_TOL) * gnorm;

    let mut s: Vector<T> = Vector::zeros(p);
    let mut r = g.clone(); // gradient of the model at s
    let mut d = -r.clone();
    let mut r_sq = r.norm_squared();
    let mut on_boundary = false;
    let mut iters = 0;

    for _ in 0..p {
        iters += 1;
        let hd = h * &d;
        let curvature = d.dot(&hd);
        if curvature <= T::zero() {
            // Follow the negative-curvature direction to the boundary.
            let tau = boundary_step(&s, &d, delta);
            s += &d * tau;
            on_boundary = true;
            break;
        }
        let alpha = r_sq / curvature;
        let s_next = &s + &d * alpha;
        if s_next.norm() >= delta {
            let tau = boundary_step(&s, &d, delta);
            s += &d * tau;
            on_boundary = true;
            break;
        }
        s = s_next;
        r += hd * alpha;
        let r_sq_next = r.norm_squared();
        if r_sq_next.sqrt() <= tol {
            break;
        }
        let beta = r_sq_next / r_sq;
        r_sq = r_sq_next;
        d = -&r + &d * beta;
    }

    if !on_boundary && s.norm() >= (T::one() - T::cst(BOUNDARY_TOL)) * delta {
        on_boundary = true;
    }
    let model_decrease = -quad(&s);
    Ok(TrsSolution {
        s_hat: s,
        model_decrease,
        on_boundary,
        cg_iters: iters,
    })
}

/// Positive root of `||s + tau d|| = delta`.
fn boundary_step<T: Scalar>(s: &Vector<T>, d: &Vector<T>, delta: T) -> T {
    let dd = d.norm_squared();
    let sd = s.dot(d);
    let ss = s.norm_squared();
    let disc = (sd * sd + dd * (delta * delta - ss)).max(T::zero());
    (-sd + disc.sqrt()) / dd
}
