//! Least-squares test problem abstraction and the analytic problem corpus.
//!
//! Every problem is a deterministic residual map `r: R^n -> R^m` with a
//! starting point and (when known) the minimal objective value. The objective
//! convention is `f(x) = 0.5 ||r(x)||^2`; reported values use `2f = ||r||^2`.

use crate::error::{Error, Result};
use crate::{Scalar, Vector};

/// Objective value in both conventions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveValue<T> {
    /// `0.5 * ||r||^2`
    pub f: T,
    /// `||r||^2`, the reporting convention.
    pub two_f: T,
}

/// `f = 0.5 sum r_i^2` for a finite residual vector.
pub fn objective<T: Scalar>(r: &Vector<T>) -> Result<ObjectiveValue<T>> {
    if !r.iter().all(|v| v.is_finite_scalar()) {
        return Err(Error::NonFinite {
            context: "objective",
        });
    }
    let two_f = r.norm_squared();
    let f = two_f * T::cst(0.5);
    Ok(ObjectiveValue { f, two_f })
}

/// A nonlinear least-squares problem `min 0.5 ||r(x)||^2`.
#[derive(Clone)]
pub struct LeastSquaresProblem<T: Scalar> {
    name: String,
    n: usize,
    m: usize,
    x0: Vector<T>,
    f_star: Option<T>,
    residual: ResidualKind<T>,
}

#[derive(Clone)]
enum ResidualKind<T: Scalar> {
    Builtin(Family),
    Custom(std::sync::Arc<dyn Fn(&Vector<T>, &mut Vector<T>) + Send + Sync>),
}

impl<T: Scalar> std::fmt::Debug for LeastSquaresProblem<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LeastSquaresProblem")
            .field("name", &self.name)
            .field("n", &self.n)
            .field("m", &self.m)
            .finish_non_exhaustive()
    }
}

impl<T: Scalar> LeastSquaresProblem<T> {
    /// Builds a problem from an arbitrary residual closure.
    pub fn from_residual_fn(
        name: impl Into<String>,
        x0: Vector<T>,
        m: usize,
        f_star: Option<T>,
        residual: impl Fn(&Vector<T>, &mut Vector<T>) + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            n: x0.len(),
            m,
            x0,
            f_star,
            residual: ResidualKind::Custom(std::sync::Arc::new(residual)),
        }
    }

    /// Same problem started from a different point.
    pub fn with_x0(mut self, x0: Vector<T>) -> Result<Self> {
        if x0.len() != self.n {
            return Err(Error::Dimension {
                expected: self.n,
                got: x0.len(),
            });
        }
        self.x0 = x0;
        Ok(self)
    }
    pub fn name(&self) -> &str {
        &self.name
    }

    /// Ambient dimension (free variables).
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of residuals.
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn x0(&self) -> &Vector<T> {
        &self.x0
    }

    /// Known minimal objective (f convention), if any.
    pub fn f_star(&self) -> Option<T> {
        self.f_star
    }

    /// Evaluates the residual map. Pure; counting evaluations is the caller's
    /// job. Non-finite components surface as an evaluation error.
    pub fn evaluate(&self, x: &Vector<T>) -> Result<Vector<T>> {
        if x.len() != self.n {
            return Err(Error::Dimension {
                expected: self.n,
                got: x.len(),
            });
        }
        let mut r = Vector::zeros(self.m);
        match &self.residual {
            ResidualKind::Builtin(family) => family.eval(self.n, x, &mut r),
            ResidualKind::Custom(f) => f(x, &mut r),
        }
        if !r.iter().all(|v| v.is_finite_scalar()) {
            return Err(Error::NonFinite {
                context: "residual",
            });
        }
        Ok(r)
    }

    /// `objective(evaluate(x))`.
    pub fn objective_at(&self, x: &Vector<T>) -> Result<ObjectiveValue<T>> {
        objective(&self.evaluate(x)?)
    }
}

/// Residual family dispatch for the built-in corpus.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Family {
    Broydn3d,
    Argtrig,
    Vardimne,
    Arwhdne,
    Chandheq,
    Morebvne,
    Integreq,
    Powellse,
    Rosenbrock,
}

impl Family {
    fn eval<T: Scalar>(self, n: usize, x: &Vector<T>, r: &mut Vector<T>) {
        match self {
            // Broyden tridiagonal: r_i = (3-2x_i)x_i - x_{i-1} - 2x_{i+1} + 1,
            // x_0 = x_{n+1} = 0.
            Family::Broydn3d => {
                let three = T::cst(3.0);
                let two = T::cst(2.0);
                for i in 0..n {
                    let xm = if i > 0 { x[i - 1] } else { T::zero() };
                    let xp = if i + 1 < n { x[i + 1] } else { T::zero() };
                    r[i] = (three - two * x[i]) * x[i] - xm - two * xp + T::one();
                }
            }
            // Trigonometric system (CUTEst variant of the MGH trigonometric
            // function): r_i = i(sin x_i + cos x_i) + sum_j cos x_j
            //                  - 2 cos x_i - (n + i - 2). Root at x = 0.
            Family::Argtrig => {
                let mut cos_sum = T::zero();
                for i in 0..n {
                    cos_sum += x[i].cos();
                }
                let two = T::cst(2.0);
                for i in 0..n {
                    let wi = T::from_usize(i + 1).unwrap();
                    let target = T::from_usize(n + i + 1).unwrap() - two;
                    r[i] = wi * (x[i].sin() + x[i].cos()) + cos_sum - two * x[i].cos() - target;
                }
            }
            // Variably dimensioned: r_i = x_i - 1 for i <= n,
            // r_{n+1} = sum j (x_j - 1), r_{n+2} = r_{n+1}^2.
            Family::Vardimne => {
                let mut t = T::zero();
                for i in 0..n {
                    let d = x[i] - T::one();
                    r[i] = d;
                    t += T::from_usize(i + 1).unwrap() * d;
                }
                r[n] = t;
                r[n + 1] = t * t;
            }
            // ARWHEAD equations: pairs x_i^2 + x_n^2 and -4x_i + 3, i < n.
            Family::Arwhdne => {
                let last = x[n - 1];
                let four = T::cst(4.0);
                let three = T::cst(3.0);
                for i in 0..n - 1 {
                    r[i] = x[i] * x[i] + last * last;
                    r[n - 1 + i] = -four * x[i] + three;
                }
            }
            // Chandrasekhar H-equation with c = 1, mu_i = i/n:
            // r_i = H_i (1 - (c/2n) sum_j mu_i H_j / (mu_i + mu_j)) - 1.
            Family::Chandheq => {
                let nf = T::from_usize(n).unwrap();
                let half = T::cst(0.5);
                for i in 0..n {
                    let mu_i = T::from_usize(i + 1).unwrap() / nf;
                    let mut s = T::zero();
                    for j in 0..n {
                        let mu_j = T::from_usize(j + 1).unwrap() / nf;
                        s += mu_i * x[j] / (mu_i + mu_j);
                    }
                    r[i] = x[i] * (T::one() - half * s / nf) - T::one();
                }
            }
            // Discrete boundary value (MGH 28):
            // r_i = 2x_i - x_{i-1} - x_{i+1} + (h^2/2)(x_i + t_i + 1)^3.
            Family::Morebvne => {
                let h = T::one() / T::from_usize(n + 1).unwrap();
                let h2 = h * h * T::cst(0.5);
                let two = T::cst(2.0);
                for i in 0..n {
                    let xm = if i > 0 { x[i - 1] } else { T::zero() };
                    let xp = if i + 1 < n { x[i + 1] } else { T::zero() };
                    let t = T::from_usize(i + 1).unwrap() * h;
                    let c = x[i] + t + T::one();
                    r[i] = two * x[i] - xm - xp + h2 * c * c * c;
                }
            }
            // Discrete integral equation (MGH 29), computed with prefix sums:
            // r_i = x_i + h[(1-t_i) sum_{j<=i} t_j c_j + t_i sum_{j>i} (1-t_j) c_j]/2,
            // c_j = (x_j + t_j + 1)^3.
            Family::Integreq => {
                let h = T::one() / T::from_usize(n + 1).unwrap();
                let half = T::cst(0.5);
                let mut cubes = vec![T::zero(); n];
                let mut ts = vec![T::zero(); n];
                for j in 0..n {
                    let t = T::from_usize(j + 1).unwrap() * h;
                    let c = x[j] + t + T::one();
                    ts[j] = t;
                    cubes[j] = c * c * c;
                }
                let mut upper = T::zero();
                for j in 0..n {
                    upper += (T::one() - ts[j]) * cubes[j];
                }
                let mut lower = T::zero();
                for i in 0..n {
                    lower += ts[i] * cubes[i];
                    upper -= (T::one() - ts[i]) * cubes[i];
                    r[i] = x[i] + h * half * ((T::one() - ts[i]) * lower + ts[i] * upper);
                }
            }
            // Extended Powell singular, equations form (no square roots on the
            // weights): per 4-block (x1+10x2, 5(x3-x4), (x2-2x3)^2, 10(x1-x4)^2).
            Family::Powellse => {
                let ten = T::cst(10.0);
                let five = T::cst(5.0);
                let two = T::cst(2.0);
                for b in 0..n / 4 {
                    let (x1, x2, x3, x4) = (x[4 * b], x[4 * b + 1], x[4 * b + 2], x[4 * b + 3]);
                    r[4 * b] = x1 + ten * x2;
                    r[4 * b + 1] = five * (x3 - x4);
                    let d = x2 - two * x3;
                    r[4 * b + 2] = d * d;
                    let e = x1 - x4;
                    r[4 * b + 3] = ten * e * e;
                }
            }
            // Extended Rosenbrock (MGH 21): per 2-block
            // (10(x_{2i} - x_{2i-1}^2), 1 - x_{2i-1}).
            Family::Rosenbrock => {
                let ten = T::cst(10.0);
                for b in 0..n / 2 {
                    let (xo, xe) = (x[2 * b], x[2 * b + 1]);
                    r[2 * b] = ten * (xe - xo * xo);
                    r[2 * b + 1] = T::one() - xo;
                }
            }
        }
    }
}

struct FamilySpec {
    name: &'static str,
    family: Family,
    /// (divisor, minimum) constraint on n.
    dim_rule: (usize, usize),
}

const FAMILIES: &[FamilySpec] = &[
    FamilySpec {
        name: "broydn3d",
        family: Family::Broydn3d,
        dim_rule: (1, 2),
    },
    FamilySpec {
        name: "argtrig",
        family: Family::Argtrig,
        dim_rule: (1, 1),
    },
    FamilySpec {
        name: "vardimne",
        family: Family::Vardimne,
        dim_rule: (1, 1),
    },
    FamilySpec {
        name: "arwhdne",
        family: Family::Arwhdne,
        dim_rule: (1, 2),
    },
    FamilySpec {
        name: "chandheq",
        family: Family::Chandheq,
        dim_rule: (1, 1),
    },
    FamilySpec {
        name: "morebvne",
        family: Family::Morebvne,
        dim_rule: (1, 1),
    },
    FamilySpec {
        name: "integreq",
        family: Family::Integreq,
        dim_rule: (1, 1),
    },
    FamilySpec {
        name: "powellse",
        family: Family::Powellse,
        dim_rule: (4, 4),
    },
    FamilySpec {
        name: "rosenbrock",
        family: Family::Rosenbrock,
        dim_rule: (2, 2),
    },
];

/// Names of all registered problem families.
pub fn family_names() -> Vec<&'static str> {
    FAMILIES.iter().map(|f| f.name).collect()
}

/// Whether `n` is a valid dimension for the named family.
pub fn dimension_valid(name: &str, n: usize) -> bool {
    let lname = name.to_ascii_lowercase();
    FAMILIES
        .iter()
        .find(|f| f.name == lname)
        .map(|f| n >= f.dim_rule.1 && n % f.dim_rule.0 == 0)
        .unwrap_or(false)
}

/// Instantiates a registered problem at dimension `n`.
pub fn registry_lookup<T: Scalar>(name: &str, n: usize) -> Result<LeastSquaresProblem<T>> {
    let lname = name.to_ascii_lowercase();
    let spec = FAMILIES
        .iter()
        .find(|f| f.name == lname)
        .ok_or_else(|| Error::UnknownProblem {
            name: name.to_string(),
            valid: family_names().join(", "),
        })?;
    let (div, min) = spec.dim_rule;
    if n < min || n % div != 0 {
        let reason = if div > 1 {
            format!("need n >= {min} and n divisible by {div}")
        } else {
            format!("need n >= {min}")
        };
        return Err(Error::InvalidDimension {
            name: spec.name.to_string(),
            n,
            reason,
        });
    }

    let m = match spec.family {
        Family::Vardimne => n + 2,
        Family::Arwhdne => 2 * (n - 1),
        _ => n,
    };
    let x0 = starting_point::<T>(spec.family, n);
    // All corpus families have zero-residual solutions except ARWHDNE, whose
    // minimal value is only tabulated at n = 5000.
    let f_star = match spec.family {
        Family::Arwhdne => {
            if n == 5000 {
                Some(T::cst(1396.793 / 2.0))
            } else {
                None
            }
        }
        _ => Some(T::zero()),
    };

    Ok(LeastSquaresProblem {
        name: spec.name.to_string(),
        n,
        m,
        x0,
        f_star,
        residual: ResidualKind::Builtin(spec.family),
    })
}

fn starting_point<T: Scalar>(family: Family, n: usize) -> Vector<T> {
    match family {
        Family::Broydn3d => Vector::from_element(n, -T::one()),
        Family::Argtrig => Vector::from_element(n, T::one() / T::from_usize(n).unwrap()),
        Family::Vardimne => {
            let nf = T::from_usize(n).unwrap();
            Vector::from_fn(n, |i, _| T::one() - T::from_usize(i + 1).unwrap() / nf)
        }
        Family::Arwhdne | Family::Chandheq => Vector::from_element(n, T::one()),
        Family::Morebvne | Family::Integreq => {
            let h = T::one() / T::from_usize(n + 1).unwrap();
            Vector::from_fn(n, |i, _| {
                let t = T::from_usize(i + 1).unwrap() * h;
                t * (t - T::one())
            })
        }
        Family::Powellse => Vector::from_fn(n, |i, _| match i % 4 {
            0 => T::cst(3.0),
            1 => -T::one(),
            2 => T::zero(),
            _ => T::one(),
        }),
        Family::Rosenbrock => Vector::from_fn(n, |i, _| {
            if i % 2 == 0 {
                T::cst(-1.2)
            } else {
                T::one()
            }
        }),
    }
}

/// One row of the corpus manifest emitted by `list-problems`.
pub struct ManifestRow {
    pub name: &'static str,
    pub n: usize,
    pub m: usize,
    pub two_f0: f64,
    pub two_f_star: Option<f64>,
}

/// Corpus manifest at the given dimensions (families whose dimension rule
/// rejects a requested `n` are skipped at that `n`).
pub fn corpus_manifest(dims: &[usize]) -> Vec<ManifestRow> {
    let mut rows = Vec::new();
    for spec in FAMILIES {
        for &n in dims {
            if !dimension_valid(spec.name, n) {
                continue;
            }
            let p: LeastSquaresProblem<f64> = registry_lookup(spec.name, n).unwrap();
            let v = p.objective_at(p.x0()).unwrap();
            rows.push(ManifestRow {
                name: spec.name,
                n,
                m: p.m(),
                two_f0: v.two_f,
                two_f_star: p.f_star().map(|f| 2.0 * f),
            });
        }
    }
    rows
}
