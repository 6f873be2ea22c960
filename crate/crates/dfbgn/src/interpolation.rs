//! Interpolation set maintenance: the QR factorization that defines the
//! search subspace, the linear-interpolation model solve, Lagrange
//! polynomials, Λ-poisedness, and the geometry-aware point-removal criterion.

use nalgebra::linalg::QR;

use crate::error::{Error, Result};
use crate::{Matrix, Scalar, Vector};

/// Cached factors of `W^T = Q R`, where the rows of `W` are the directions
/// `y_t - base`.
#[derive(Debug, Clone)]
pub struct QrFactors<T: Scalar> {
    /// `n x p`, orthonormal columns.
    pub q: Matrix<T>,
    /// `p x p`, upper triangular; column `t` is the reduced coordinate of
    /// point `t`.
    pub r: Matrix<T>,
    /// Columns whose diagonal entry fell below the rank tolerance.
    pub degenerate_cols: Vec<usize>,
}

impl<T: Scalar> QrFactors<T> {
    pub fn is_degenerate(&self) -> bool {
        !self.degenerate_cols.is_empty()
    }
}

/// Base point plus `p` interpolation points with cached residual vectors.
#[derive(Debug, Clone)]
pub struct InterpolationSet<T: Scalar> {
    base: Vector<T>,
    r_base: Vector<T>,
    points: Vec<Vector<T>>,
    residuals: Vec<Vector<T>>,
    qr: Option<QrFactors<T>>,
}

/// Reduced Gauss-Newton model of the objective on the subspace.
#[derive(Debug, Clone)]
pub struct SubspaceModel<T: Scalar> {
    /// `m x p` reduced Jacobian.
    pub jac_hat: Matrix<T>,
    /// `J^T r(x_k)`.
    pub g_hat: Vector<T>,
    /// `J^T J`, symmetric positive semidefinite.
    pub h_hat: Matrix<T>,
    /// `f(x_k)`.
    pub f0: T,
    r_base: Vector<T>,
}

impl<T: Scalar> SubspaceModel<T> {
    /// Quadratic model value `f0 + g^T s + 0.5 s^T H s`.
    pub fn value(&self, s: &Vector<T>) -> T {
        self.f0 + self.g_hat.dot(s) + T::cst(0.5) * s.dot(&(&self.h_hat * s))
    }

    /// Linear residual model `r(x_k) + J s`.
    pub fn vec_value(&self, s: &Vector<T>) -> Vector<T> {
        &self.r_base + &self.jac_hat * s
    }

    /// `m(0) - m(s)`.
    pub fn decrease(&self, s: &Vector<T>) -> T {
        -(self.g_hat.dot(s) + T::cst(0.5) * s.dot(&(&self.h_hat * s)))
    }
}

/// Affine Lagrange polynomials `l_t(s) = c_t + g_t^T s`, `t = 0..p`, with
/// index 0 belonging to the base point (`s_0 = 0`).
#[derive(Debug, Clone)]
pub struct LagrangeSet<T: Scalar> {
    pub c: Vec<T>,
    pub g: Vec<Vector<T>>,
}

impl<T: Scalar> LagrangeSet<T> {
    pub fn eval(&self, t: usize, s: &Vector<T>) -> T {
        self.c[t] + self.g[t].dot(s)
    }

    /// Closed-form maximum of `|l_t|` over the ball of radius `delta`.
    pub fn ball_max(&self, t: usize, delta: T) -> T {
        self.c[t].abs() + delta * self.g[t].norm()
    }
}

const RANK_TOL: f64 = 1e-12;

impl<T: Scalar> InterpolationSet<T> {
    pub fn new(base: Vector<T>, r_base: Vector<T>) -> Self {
        Self {
            base,
            r_base,
            points: Vec::new(),
            residuals: Vec::new(),
            qr: None,
        }
    }

    pub fn base(&self) -> &Vector<T> {
        &self.base
    }

    pub fn r_base(&self) -> &Vector<T> {
        &self.r_base
    }

    /// Number of interpolation points excluding the base.
    pub fn p(&self) -> usize {
        self.points.len()
    }

    pub fn dim(&self) -> usize {
        self.base.len()
    }

    pub fn points(&self) -> &[Vector<T>] {
        &self.points
    }

    pub fn qr(&self) -> Option<&QrFactors<T>> {
        self.qr.as_ref()
    }

    /// Adds a point with an already-computed residual.
    pub fn add_point(&mut self, y: Vector<T>, r: Vector<T>) {
        self.points.push(y);
        self.residuals.push(r);
        self.qr = None;
    }

    /// Makes `(new_base, new_r)` the base point and keeps the old base as an
    /// ordinary interpolation point.
    pub fn swap_base_keep_old(&mut self, new_base: Vector<T>, new_r: Vector<T>) {
        let old_base = std::mem::replace(&mut self.base, new_base);
        let old_r = std::mem::replace(&mut self.r_base, new_r);
        self.points.push(old_base);
        self.residuals.push(old_r);
        self.qr = None;
    }

    /// Refreshes the base residual (used when the base moves in place).
    pub fn set_base(&mut self, base: Vector<T>, r_base: Vector<T>) {
        self.base = base;
        self.r_base = r_base;
        self.qr = None;
    }

    fn direction_matrix(&self) -> Matrix<T> {
        let n = self.dim();
        let p = self.p();
        let mut w_t = Matrix::zeros(n, p);
        for (t, y) in self.points.iter().enumerate() {
            w_t.set_column(t, &(y - &self.base));
        }
        w_t
    }

    /// Computes the QR factors of the direction matrix from scratch. Columns
    /// with a diagonal entry below `1e-12 ||W||_F` are flagged degenerate.
    pub fn factorize(&mut self) -> Result<()> {
        let p = self.p();
        let w_t = self.direction_matrix();
        if p > self.dim() {
            return Err(Error::Degenerate(format!(
                "{p} directions cannot be independent in dimension {}",
                self.dim()
            )));
        }
        let w_norm = w_t.norm();
        let (q, r) = QR::new(w_t).unpack();
        let tol = T::cst(RANK_TOL) * w_norm.max(T::one());
        let degenerate_cols = (0..p).filter(|&t| r[(t, t)].abs() <= tol).collect();
        self.qr = Some(QrFactors {
            q,
            r,
            degenerate_cols,
        });
        Ok(())
    }

    fn valid_qr(&self) -> Result<&QrFactors<T>> {
        let qr = self
            .qr
            .as_ref()
            .ok_or_else(|| Error::Degenerate("factorization not computed".into()))?;
        if qr.is_degenerate() {
            return Err(Error::Degenerate(format!(
                "rank-deficient columns {:?}",
                qr.degenerate_cols
            )));
        }
        Ok(qr)
    }

    /// Solves the interpolation system `R^T J^T = [r(y_t) - r(x_k)]^T` by
    /// forward substitution and assembles the Gauss-Newton model.
    pub fn build_model(&self) -> Result<SubspaceModel<T>> {
        let qr = self.valid_qr()?;
        let p = self.p();
        let m = self.r_base.len();
        let mut rhs = Matrix::zeros(p, m);
        for t in 0..p {
            rhs.set_row(t, &(&self.residuals[t] - &self.r_base).transpose());
        }
        let jac_t = qr
            .r
            .transpose()
            .solve_lower_triangular(&rhs)
            .ok_or_else(|| Error::Degenerate("forward substitution failed".into()))?;
        let jac_hat = jac_t.transpose();
        let g_hat = jac_hat.transpose() * &self.r_base;
        let h_hat = jac_hat.transpose() * &jac_hat;
        let f0 = T::cst(0.5) * self.r_base.norm_squared();
        Ok(SubspaceModel {
            jac_hat,
            g_hat,
            h_hat,
            f0,
            r_base: self.r_base.clone(),
        })
    }

    /// Lagrange polynomials of the set in reduced coordinates. `l_t` for
    /// `t >= 1` vanishes at the origin; `l_0 = 1 - sum_t l_t`.
    pub fn lagrange_polynomials(&self) -> Result<LagrangeSet<T>> {
        let qr = self.valid_qr()?;
        let p = self.p();
        let eye = Matrix::identity(p, p);
        let coeffs = qr
            .r
            .transpose()
            .solve_lower_triangular(&eye)
            .ok_or_else(|| Error::Degenerate("forward substitution failed".into()))?;
        let mut c = vec![T::zero(); p + 1];
        let mut g = vec![Vector::zeros(p); p + 1];
        c[0] = T::one();
        let mut g0 = Vector::zeros(p);
        for t in 0..p {
            let gt: Vector<T> = coeffs.column(t).into_owned();
            g0 -= &gt;
            g[t + 1] = gt;
        }
        g[0] = g0;
        Ok(LagrangeSet { c, g })
    }

    /// Λ-poisedness over the radius-`delta` ball, from the closed-form ball
    /// maxima of the affine Lagrange polynomials.
    pub fn poisedness(&self, delta: T) -> Result<T> {
        let lag = self.lagrange_polynomials()?;
        let mut lambda = T::zero();
        for t in 0..=self.p() {
            lambda = lambda.max(lag.ball_max(t, delta));
        }
        Ok(lambda)
    }

    /// Removal scores `theta_t = max_ball |l_t| * max(dist_t^4/delta^4, 1)`
    /// for the non-base points, larger meaning better to remove.
    pub fn removal_scores(&self, delta: T) -> Result<Vec<T>> {
        let lag = self.lagrange_polynomials()?;
        let mut scores = Vec::with_capacity(self.p());
        for t in 0..self.p() {
            let dist = (&self.points[t] - &self.base).norm();
            let ratio = dist / delta;
            let ratio4 = ratio * ratio * ratio * ratio;
            scores.push(lag.ball_max(t + 1, delta) * ratio4.max(T::one()));
        }
        Ok(scores)
    }

    /// Index of the point with the largest removal score.
    pub fn worst_point(&self, delta: T) -> Result<usize> {
        Ok(self.removal_order(delta)?[0])
    }

    /// Point indices ordered by removal priority: score descending, ties by
    /// distance from base descending, then by lower index.
    pub(crate) fn removal_order(&self, delta: T) -> Result<Vec<usize>> {
        let scores = self.removal_scores(delta)?;
        let dists: Vec<T> = self
            .points
            .iter()
            .map(|y| (y - &self.base).norm())
            .collect();
        let mut order: Vec<usize> = (0..self.p()).collect();
        order.sort_by(|&a, &b| {
            scores[b]
                .partial_cmp(&scores[a])
                .unwrap()
                .then(dists[b].partial_cmp(&dists[a]).unwrap())
                .then(a.cmp(&b))
        });
        Ok(order)
    }

    /// Removes the `p_drop` points with the largest removal scores. The base
    /// point is never a candidate.
    pub fn remove_points(&mut self, delta: T, p_drop: usize) -> Result<()> {
        if p_drop == 0 || p_drop > self.p() {
            return Err(Error::Parameter(format!(
                "p_drop={p_drop} out of range 1..={}",
                self.p()
            )));
        }
        let mut drop: Vec<usize> = self.removal_order(delta)?[..p_drop].to_vec();
        drop.sort_unstable();
        for &idx in drop.iter().rev() {
            self.points.remove(idx);
            self.residuals.remove(idx);
        }
        self.qr = None;
        Ok(())
    }

    /// Removes exactly the given point index.
    pub fn remove_index(&mut self, idx: usize) {
        self.points.remove(idx);
        self.residuals.remove(idx);
        self.qr = None;
    }

    /// Removes and returns the point at `idx` together with its residual.
    pub fn take_point(&mut self, idx: usize) -> (Vector<T>, Vector<T>) {
        let y = self.points.remove(idx);
        let r = self.residuals.remove(idx);
        self.qr = None;
        (y, r)
    }

    /// Appends the points `base + delta * d_j` for each column of `d`,
    /// evaluating their residuals. A failed evaluation discards that point
    /// and propagates the error; earlier columns stay appended.
    pub fn append_directions(
        &mut self,
        d: &Matrix<T>,
        delta: T,
        mut evaluate: impl FnMut(&Vector<T>) -> Result<Vector<T>>,
    ) -> Result<()> {
        if d.ncols() == 0 {
            return Ok(());
        }
        if d.nrows() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                got: d.nrows(),
            });
        }
        for j in 0..d.ncols() {
            let y = &self.base + d.column(j) * delta;
            let r = evaluate(&y)?;
            self.points.push(y);
            self.residuals.push(r);
        }
        self.qr = None;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn max_abs(m: &Matrix<f64>) -> f64 {
        m.iter().fold(0.0f64, |a, v| a.max(v.abs()))
    }

    fn coordinate_set(n: usize, p: usize, delta: f64) -> InterpolationSet<f64> {
        let base = Vector::zeros(n);
        let mut set = InterpolationSet::new(base.clone(), Vector::zeros(1));
        for t in 0..p {
            let mut y = base.clone();
            y[t] += delta;
            set.add_point(y, Vector::zeros(1));
        }
        set
    }

    fn random_set(
        n: usize,
        p: usize,
        delta: f64,
        rng: &mut ChaCha8Rng,
        residual: impl Fn(&Vector<f64>) -> Vector<f64>,
    ) -> InterpolationSet<f64> {
        let base = Vector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
        let mut set = InterpolationSet::new(base.clone(), residual(&base));
        for _ in 0..p {
            let dir = Vector::from_fn(n, |_, _| f64::std_normal(rng)).normalize();
            let y = &base + dir * delta * rng.gen_range(0.3..1.0);
            let r = residual(&y);
            set.add_point(y, r);
        }
        set
    }

    #[test]
    fn factorize_coordinate_set() {
        let mut set = coordinate_set(5, 3, 0.25);
        set.factorize().unwrap();
        let qr = set.qr().unwrap();
        assert!(!qr.is_degenerate());
        for t in 0..3 {
            assert!((qr.r[(t, t)].abs() - 0.25).abs() < 1e-14);
            // Q columns are +-e_t.
            let col = qr.q.column(t);
            let mut nz = 0;
            for i in 0..5 {
                if col[i].abs() > 1e-12 {
                    nz += 1;
                    assert!((col[i].abs() - 1.0).abs() < 1e-12);
                }
            }
            assert_eq!(nz, 1);
        }
    }

    #[test]
    fn factorize_single_point_norm() {
        let base: Vector<f64> = Vector::zeros(3);
        let mut set = InterpolationSet::new(base.clone(), Vector::zeros(1));
        set.add_point(Vector::from_vec(vec![3.0, 4.0, 0.0]), Vector::zeros(1));
        set.factorize().unwrap();
        let qr = set.qr().unwrap();
        assert!((qr.r[(0, 0)].abs() - 5.0).abs() < 1e-14);
        let q0 = qr.q.column(0);
        assert!((q0[0].abs() - 0.6).abs() < 1e-14);
        assert!((q0[1].abs() - 0.8).abs() < 1e-14);
        assert!(q0[2].abs() < 1e-14);
    }

    #[test]
    fn factorize_matches_gram_schmidt_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let mut set = random_set(20, 6, 1.0, &mut rng, |_| Vector::zeros(1));
        set.factorize().unwrap();
        let qr = set.qr().unwrap();

        // Reconstruction.
        let mut w_t = Matrix::zeros(20, 6);
        for (t, y) in set.points().iter().enumerate() {
            w_t.set_column(t, &(y - set.base()));
        }
        assert!(max_abs(&(&w_t - &qr.q * &qr.r)) <= 1e-10 * w_t.norm().max(1.0));

        // Independent modified Gram-Schmidt oracle spans the same space with
        // upper-triangular coefficients.
        let mut q = w_t.clone();
        let mut r = Matrix::<f64>::zeros(6, 6);
        for j in 0..6 {
            for k in 0..j {
                let proj = q.column(k).dot(&q.column(j));
                r[(k, j)] = proj;
                let col = q.column(k).into_owned();
                q.column_mut(j).axpy(-proj, &col, 1.0);
            }
            r[(j, j)] = q.column(j).norm();
            let norm = r[(j, j)];
            q.column_mut(j).scale_mut(1.0 / norm);
        }
        assert!(max_abs(&(&w_t - &q * &r)) <= 1e-10 * w_t.norm().max(1.0));
        // Column spaces agree.
        let diff = &qr.q * qr.q.transpose() - &q * q.transpose();
        assert!(max_abs(&diff) <= 1e-8);
    }

    #[test]
    fn degenerate_set_flagged() {
        let base = Vector::zeros(4);
        let mut set = InterpolationSet::new(base.clone(), Vector::zeros(1));
        let y = Vector::from_vec(vec![1.0, 1.0, 0.0, 0.0]);
        set.add_point(y.clone(), Vector::zeros(1));
        set.add_point(y * 2.0, Vector::zeros(1));
        set.factorize().unwrap();
        assert!(set.qr().unwrap().is_degenerate());
        assert!(set.build_model().is_err());
    }

    #[test]
    fn model_exact_on_linear_residuals() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = 7;
        let n = 10;
        let a = Matrix::from_fn(m, n, |_, _| f64::std_normal(&mut rng));
        let b = Vector::from_fn(m, |_, _| f64::std_normal(&mut rng));
        let residual = |x: &Vector<f64>| &a * x + &b;
        let mut set = random_set(n, 4, 0.5, &mut rng, residual);
        set.factorize().unwrap();
        let model = set.build_model().unwrap();
        let aq = &a * &set.qr().unwrap().q;
        assert!(max_abs(&(&model.jac_hat - &aq)) <= 1e-8);

        // Interpolation conditions hold at the reduced coordinates.
        let qr = set.qr().unwrap();
        for t in 0..set.p() {
            let s_t: Vector<f64> = qr.r.column(t).into_owned();
            let pred = model.vec_value(&s_t);
            let actual = residual(&set.points()[t]);
            assert!((pred - &actual).norm() <= 1e-8 * (1.0 + actual.norm()));
        }
        // Model value at s = 0 is f0.
        assert_eq!(model.value(&Vector::zeros(set.p())), model.f0);
    }

    #[test]
    fn model_univariate_secant() {
        let base = Vector::from_vec(vec![1.0]);
        let residual = |x: &Vector<f64>| Vector::from_vec(vec![x[0] * x[0]]);
        let mut set = InterpolationSet::new(base.clone(), residual(&base));
        let delta = 0.5;
        let y = Vector::from_vec(vec![1.0 + delta]);
        set.add_point(y.clone(), residual(&y));
        set.factorize().unwrap();
        let model = set.build_model().unwrap();
        let expected = (residual(&y)[0] - residual(&base)[0]) / delta;
        assert!((model.jac_hat[(0, 0)] - expected).abs() < 1e-12);
    }

    #[test]
    fn model_close_to_finite_difference_jacobian() {
        // Extended Rosenbrock residuals, n = m = 4.
        let residual = |x: &Vector<f64>| {
            Vector::from_vec(vec![
                10.0 * (x[1] - x[0] * x[0]),
                1.0 - x[0],
                10.0 * (x[3] - x[2] * x[2]),
                1.0 - x[2],
            ])
        };
        let base = Vector::from_vec(vec![-1.2, 1.0, -1.2, 1.0]);
        let delta = 1e-3;
        let mut set = InterpolationSet::new(base.clone(), residual(&base));
        for t in 0..4 {
            let mut y = base.clone();
            y[t] += delta;
            let r = residual(&y);
            set.add_point(y, r);
        }
        set.factorize().unwrap();
        let model = set.build_model().unwrap();

        // Central-difference Jacobian oracle with step 1e-6.
        let h = 1e-6;
        let mut jac = Matrix::zeros(4, 4);
        for j in 0..4 {
            let mut xp = base.clone();
            let mut xm = base.clone();
            xp[j] += h;
            xm[j] -= h;
            jac.set_column(j, &((residual(&xp) - residual(&xm)) / (2.0 * h)));
        }
        let jq = jac * &set.qr().unwrap().q;
        assert!(max_abs(&(&model.jac_hat - &jq)) <= 1e-2);
    }

    #[test]
    fn lagrange_orthonormal_closed_form() {
        let delta = 2.0;
        let mut set = coordinate_set(3, 1, delta);
        set.factorize().unwrap();
        let lag = set.lagrange_polynomials().unwrap();
        // l_1(s) = s/2, l_0(s) = 1 - s/2 (up to the sign convention of R).
        assert_eq!(lag.c[0], 1.0);
        assert_eq!(lag.c[1], 0.0);
        assert!((lag.g[1].norm() - 0.5).abs() < 1e-14);
        assert!((&lag.g[0] + &lag.g[1]).norm() < 1e-14);

        // Kronecker property on the reduced coordinates.
        let qr = set.qr().unwrap();
        let s1: Vector<f64> = qr.r.column(0).into_owned();
        assert!((lag.eval(1, &s1) - 1.0).abs() < 1e-12);
        assert!(lag.eval(0, &s1).abs() < 1e-12);
    }

    #[test]
    fn lagrange_kronecker_matches_dense_lu_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mut set = random_set(5, 5, 1.0, &mut rng, |_| Vector::zeros(1));
        set.factorize().unwrap();
        let lag = set.lagrange_polynomials().unwrap();
        let qr = set.qr().unwrap();
        let p = 5;

        // Kronecker matrix equals identity.
        let mut shat = vec![Vector::zeros(p)];
        for t in 0..p {
            shat.push(qr.r.column(t).into_owned());
        }
        for t in 0..=p {
            for (tp, s) in shat.iter().enumerate() {
                let expect = if t == tp { 1.0 } else { 0.0 };
                assert!(
                    (lag.eval(t, s) - expect).abs() <= 1e-8,
                    "l_{t}(s_{tp}) = {}",
                    lag.eval(t, s)
                );
            }
        }

        // Independent oracle: solve the full (p+1)x(p+1) affine system with a
        // dense LU factorization.
        let mut vander = Matrix::zeros(p + 1, p + 1);
        for (row, s) in shat.iter().enumerate() {
            vander[(row, 0)] = 1.0;
            for j in 0..p {
                vander[(row, j + 1)] = s[j];
            }
        }
        let lu = vander.lu();
        for t in 0..=p {
            let mut rhs = Vector::zeros(p + 1);
            rhs[t] = 1.0;
            let coef = lu.solve(&rhs).unwrap();
            assert!((coef[0] - lag.c[t]).abs() <= 1e-8);
            for j in 0..p {
                assert!((coef[j + 1] - lag.g[t][j]).abs() <= 1e-8);
            }
        }
    }

    #[test]
    fn poisedness_fresh_set() {
        for &p in &[1usize, 2, 5, 20] {
            let delta = 0.37;
            let mut set = coordinate_set(p.max(3), p, delta);
            set.factorize().unwrap();
            let lambda = set.poisedness(delta).unwrap();
            let expect = 1.0 + (p as f64).sqrt();
            assert!(
                (lambda - expect).abs() <= 1e-8,
                "p={p}: {lambda} vs {expect}"
            );
        }
    }

    #[test]
    fn poisedness_degrades_with_far_point() {
        let delta = 0.1;
        let mut fresh = coordinate_set(4, 3, delta);
        fresh.factorize().unwrap();
        let fresh_lambda = fresh.poisedness(delta).unwrap();

        // Replace one point by a far point nearly collinear with another
        // direction: the set degenerates inside the ball and Λ blows up.
        let mut far = coordinate_set(4, 3, delta);
        let phi: f64 = (1.0 / 300.0f64).asin();
        let mut y = Vector::zeros(4);
        y[0] = 10.0 * delta * phi.cos();
        y[1] = 10.0 * delta * phi.sin();
        far.points[1] = y;
        far.factorize().unwrap();
        let far_lambda = far.poisedness(delta).unwrap();
        assert!(
            far_lambda >= 10.0 * fresh_lambda,
            "Λ {far_lambda} vs fresh {fresh_lambda}"
        );
    }

    #[test]
    fn removal_scores_symmetric_configuration() {
        let delta = 0.8;
        let mut set = coordinate_set(6, 4, delta);
        set.factorize().unwrap();
        let scores = set.removal_scores(delta).unwrap();
        for s in &scores {
            assert!((s - 1.0).abs() <= 1e-12, "score {s}");
        }
    }

    #[test]
    fn removal_scores_far_point_dominates() {
        let delta = 0.5;
        let mut set = coordinate_set(6, 4, delta);
        let mut y = Vector::zeros(6);
        y[1] = 10.0 * delta;
        set.points[1] = y;
        set.factorize().unwrap();
        let scores = set.removal_scores(delta).unwrap();
        // The fourth-power distance factor alone contributes 10^4.
        let dist = (&set.points()[1] - set.base()).norm();
        assert!(((dist / delta).powi(4) - 1e4).abs() < 1e-8);
        for (t, s) in scores.iter().enumerate() {
            if t != 1 {
                assert!(*s * 100.0 <= scores[1], "far point must dominate: {scores:?}");
            }
            let _ = s;
        }
        assert_eq!(set.worst_point(delta).unwrap(), 1);
    }

    #[test]
    fn removal_argmax_matches_monte_carlo_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let delta = 0.6;
        let mut set = random_set(3, 3, delta, &mut rng, |_| Vector::zeros(1));
        set.factorize().unwrap();
        let scores = set.removal_scores(delta).unwrap();
        let lag = set.lagrange_polynomials().unwrap();

        // Monte-Carlo maximization of |l_t| over the ball.
        let mut mc = vec![0.0f64; 3];
        for _ in 0..100_000 {
            let dir = Vector::from_fn(3, |_, _| f64::std_normal(&mut rng)).normalize();
            let radius = delta * rng.gen::<f64>().powf(1.0 / 3.0);
            let s = dir * radius;
            for t in 0..3 {
                mc[t] = mc[t].max(lag.eval(t + 1, &s).abs());
            }
        }
        for t in 0..3 {
            let dist = (&set.points()[t] - set.base()).norm();
            mc[t] *= ((dist / delta).powi(4)).max(1.0);
        }
        let argmax_closed = (0..3).max_by(|&a, &b| scores[a].partial_cmp(&scores[b]).unwrap());
        let argmax_mc = (0..3).max_by(|&a, &b| mc[a].partial_cmp(&mc[b]).unwrap());
        assert_eq!(argmax_closed, argmax_mc);
    }

    #[test]
    fn remove_points_cases() {
        let delta = 0.4;
        // Remove everything: base retained.
        let mut set = coordinate_set(6, 5, delta);
        set.factorize().unwrap();
        set.remove_points(delta, 5).unwrap();
        assert_eq!(set.p(), 0);

        // Far outlier removed first.
        let mut set = coordinate_set(6, 4, delta);
        let mut y = Vector::zeros(6);
        y[2] = 25.0 * delta;
        set.points[2] = y.clone();
        set.factorize().unwrap();
        set.remove_points(delta, 1).unwrap();
        assert_eq!(set.p(), 3);
        assert!(!set.points().iter().any(|p| (p - &y).norm() < 1e-12));

        // p_drop out of range.
        assert!(set.factorize().is_ok());
        assert!(set.remove_points(delta, 0).is_err());
        assert!(set.remove_points(delta, 4).is_err());
    }

    #[test]
    fn remove_points_matches_sort_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let delta = 0.7;
        let mut set = random_set(8, 6, delta, &mut rng, |_| Vector::zeros(1));
        set.factorize().unwrap();
        let scores = set.removal_scores(delta).unwrap();
        let kept_expected: Vec<Vector<f64>> = {
            let mut idx: Vec<usize> = (0..6).collect();
            idx.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap());
            let drop: Vec<usize> = idx[..2].to_vec();
            set.points()
                .iter()
                .enumerate()
                .filter(|(i, _)| !drop.contains(i))
                .map(|(_, y)| y.clone())
                .collect()
        };
        set.remove_points(delta, 2).unwrap();
        assert_eq!(set.p(), 4);
        for (a, b) in set.points().iter().zip(kept_expected.iter()) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn append_directions_restores_size() {
        let delta = 0.3;
        let mut set = coordinate_set(10, 10, delta);
        set.factorize().unwrap();
        set.remove_points(delta, 2).unwrap();
        assert_eq!(set.p(), 8);
        set.factorize().unwrap();
        let existing = set.qr().unwrap().q.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let d = crate::subspace::orthonormal_complement(&existing, 2, &mut rng).unwrap();
        set.append_directions(&d, delta, |y| Ok(Vector::from_vec(vec![y.norm()])))
            .unwrap();
        assert_eq!(set.p(), 10);
        set.factorize().unwrap();
        assert!(!set.qr().unwrap().is_degenerate());

        // q = 0 leaves the set unchanged.
        let before = set.points().len();
        set.append_directions(&Matrix::zeros(10, 0), delta, |_| unreachable!())
            .unwrap();
        assert_eq!(set.p(), before);
    }
}
