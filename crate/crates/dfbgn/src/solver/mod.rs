//! Trust-region solver drivers: the practical block Gauss-Newton method
//! ([`dfbgn_solve`]) and the reference randomized-subspace driver with
//! criticality and safety steps ([`rsdfo_gn_solve`]).

mod dfbgn;
mod rsdfo_gn;

pub use dfbgn::dfbgn_solve;
pub use rsdfo_gn::rsdfo_gn_solve;

use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::problems::LeastSquaresProblem;
use crate::subspace::SketchKind;
use crate::{Scalar, Vector};

/// Why a solve stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    /// Trust-region radius fell to `delta_end`.
    SmallDelta,
    /// Evaluation budget exhausted.
    BudgetExhausted,
    /// Wall-clock cap exhausted.
    RuntimeExhausted,
    /// Model gradient vanished exactly (typically a zero-residual point).
    ModelStationary,
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Status::SmallDelta => "small_delta",
            Status::BudgetExhausted => "budget_exhausted",
            Status::RuntimeExhausted => "runtime_exhausted",
            Status::ModelStationary => "model_stationary",
        };
        f.write_str(s)
    }
}

/// How many interpolation points to drop per iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PDropPolicy {
    /// 1 on successful iterations, `ceil(p/10)` on unsuccessful ones.
    Mixed,
    /// Fixed count, clamped to `[1, p]`.
    Constant(usize),
}

/// Points to drop for this iteration under the given policy.
pub fn p_drop_select(policy: PDropPolicy, last_iteration_successful: bool, p: usize) -> usize {
    match policy {
        PDropPolicy::Mixed => {
            if last_iteration_successful {
                1
            } else {
                p.div_ceil(10)
            }
        }
        PDropPolicy::Constant(k) => k.clamp(1, p),
    }
}

/// Trust-region parameters and budgets shared by both solvers.
#[derive(Debug, Clone)]
pub struct SolverConfig<T: Scalar> {
    /// Subspace dimension.
    pub p: usize,
    /// Initial radius; `None` resolves to `0.1 max(||x0||_inf, 1)`.
    pub delta0: Option<T>,
    pub delta_max: T,
    pub delta_end: T,
    pub gamma_dec: T,
    pub gamma_inc: T,
    pub gamma_inc_max: T,
    pub eta1: T,
    pub eta2: T,
    /// Criticality entry threshold.
    pub eps_c: T,
    /// Criticality radius comparison constant.
    pub mu: T,
    pub gamma_c: T,
    pub gamma_f: T,
    /// Safety step threshold on `||s|| / delta`.
    pub beta_f: T,
    /// Poisedness certification bound; `None` resolves to `2(1 + sqrt(p))`.
    pub lambda_target: Option<T>,
    pub max_evals: usize,
    pub max_runtime: Option<Duration>,
    pub seed: u64,
    pub p_drop: PDropPolicy,
    /// Subspace sampler used by the randomized-subspace driver.
    pub subspace: SketchKind,
}

impl<T: Scalar> SolverConfig<T> {
    pub fn new(p: usize) -> Self {
        Self {
            p,
            delta0: None,
            delta_max: T::cst(1e10),
            delta_end: T::cst(1e-8),
            gamma_dec: T::cst(0.5),
            gamma_inc: T::cst(2.0),
            gamma_inc_max: T::cst(4.0),
            eta1: T::cst(0.1),
            eta2: T::cst(0.7),
            eps_c: T::cst(1e-2),
            mu: T::one(),
            gamma_c: T::cst(0.5),
            gamma_f: T::cst(0.5),
            beta_f: T::cst(std::f64::consts::SQRT_2 - 1.0),
            lambda_target: None,
            max_evals: usize::MAX,
            max_runtime: None,
            seed: 0,
            p_drop: PDropPolicy::Mixed,
            subspace: SketchKind::Orthonormal,
        }
    }

    /// Preset satisfying the convergence theory's trust-region parameter
    /// constraint (larger radius increase factors).
    pub fn theory_strict(mut self) -> Self {
        self.gamma_inc = T::cst(8.0);
        self.gamma_inc_max = T::cst(8.0);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_budget(mut self, max_evals: usize) -> Self {
        self.max_evals = max_evals;
        self
    }

    /// Resolved initial radius for a starting point.
    pub fn resolve_delta0(&self, x0: &Vector<T>) -> T {
        self.delta0.unwrap_or_else(|| {
            let inf = x0.iter().fold(T::zero(), |a, v| a.max(v.abs()));
            T::cst(0.1) * inf.max(T::one())
        })
    }

    pub fn resolve_lambda_target(&self) -> T {
        self.lambda_target
            .unwrap_or_else(|| T::cst(2.0) * (T::one() + T::from_usize(self.p).unwrap().sqrt()))
    }

    /// Checks the structural parameter invariants; returns non-fatal
    /// theory-compliance warnings.
    pub fn validate(&self, n: usize) -> Result<Vec<String>> {
        let ok = T::zero() < self.gamma_dec
            && self.gamma_dec < T::one()
            && T::one() < self.gamma_inc
            && self.gamma_inc <= self.gamma_inc_max
            && T::zero() < self.eta1
            && self.eta1 <= self.eta2
            && self.eta2 < T::one();
        if !ok {
            return Err(Error::Config(
                "need 0 < gamma_dec < 1 < gamma_inc <= gamma_inc_max and 0 < eta1 <= eta2 < 1"
                    .into(),
            ));
        }
        if !(self.delta_end < self.delta_max && self.delta_end > T::zero()) {
            return Err(Error::Config("need 0 < delta_end < delta_max".into()));
        }
        if let Some(d0) = self.delta0 {
            if !(self.delta_end < d0 && d0 <= self.delta_max) {
                return Err(Error::Config("need delta_end < delta0 <= delta_max".into()));
            }
        }
        if self.p == 0 || self.p > n {
            return Err(Error::Config(format!(
                "subspace dimension p={} must satisfy 1 <= p <= n={n}",
                self.p
            )));
        }
        if !(self.eps_c > T::zero()
            && self.mu > T::zero()
            && T::zero() < self.gamma_c
            && self.gamma_c < T::one()
            && T::zero() < self.gamma_f
            && self.gamma_f < T::one()
            && self.beta_f > T::zero())
        {
            return Err(Error::Config(
                "criticality/safety constants out of range".into(),
            ));
        }
        let mut warnings = Vec::new();
        let floor = self
            .gamma_c
            .min(self.gamma_f)
            .min(self.gamma_dec)
            .min(self.beta_f);
        if self.gamma_inc <= T::one() / (floor * floor) {
            warnings.push(format!(
                "theory: gamma_inc = {:?} does not exceed min(gamma_c, gamma_f, gamma_dec, beta_f)^-2; \
                 use the theory-strict preset for the analyzed regime",
                self.gamma_inc
            ));
        }
        Ok(warnings)
    }
}

/// Trust-region acceptance and radius update. `rho = None` means the ratio
/// was undefined (failed evaluation or degenerate predicted decrease) and is
/// treated as `-inf`.
pub fn trust_region_update<T: Scalar>(
    rho: Option<T>,
    delta: T,
    step_norm: T,
    config: &SolverConfig<T>,
) -> (T, bool) {
    match rho {
        Some(r) if r >= config.eta2 => (
            (config.gamma_inc * delta)
                .max(config.gamma_inc_max * step_norm)
                .min(config.delta_max),
            true,
        ),
        Some(r) if r >= config.eta1 => ((config.gamma_dec * delta).max(step_norm), true),
        _ => ((config.gamma_dec * delta).min(step_norm), false),
    }
}

/// What an iteration did.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IterKind {
    Step,
    Criticality,
    Safety,
}

/// Per-iteration diagnostics.
#[derive(Debug, Clone)]
pub struct IterRecord<T: Scalar> {
    pub iter: usize,
    pub kind: IterKind,
    pub delta: T,
    pub delta_next: T,
    pub rho: Option<T>,
    pub successful: bool,
    /// Policy output for this iteration (mixed: 1 or ceil(p/10)).
    pub p_drop: Option<usize>,
    pub step_norm: Option<T>,
    /// Frobenius norm of the model Hessian.
    pub h_norm_f: Option<T>,
    /// Objective at the iterate after this iteration.
    pub f_iterate: T,
    /// Evaluations spent building/repairing the model set this iteration.
    pub build_evals: usize,
    /// Evaluations spent on the trial step this iteration (0 or 1).
    pub step_evals: usize,
}

/// One residual-map evaluation.
#[derive(Debug, Clone)]
pub struct EvalRecord<T: Scalar> {
    /// 1-based evaluation index.
    pub index: usize,
    /// Iteration during which the evaluation happened (0 = initialization).
    pub iter: usize,
    /// Objective at this point; `None` when the evaluation failed.
    pub f: Option<T>,
    /// Best objective seen so far.
    pub f_best: T,
    pub wall_ms: f64,
}

/// Solve outcome with full history.
#[derive(Debug, Clone)]
pub struct SolveResult<T: Scalar> {
    pub x_best: Vector<T>,
    pub f_best: T,
    pub two_f_best: T,
    pub status: Status,
    pub evals: usize,
    pub iterations: usize,
    pub eval_history: Vec<EvalRecord<T>>,
    pub iter_history: Vec<IterRecord<T>>,
    pub config_warnings: Vec<String>,
}

/// Outcome of asking the evaluator for a residual.
pub(crate) enum EvalOutcome<T: Scalar> {
    Value(Vector<T>, T),
    NonFinite,
    Exhausted(Status),
}

/// Budget- and runtime-aware evaluation counter with history recording.
pub(crate) struct Evaluator<'a, T: Scalar> {
    problem: &'a LeastSquaresProblem<T>,
    max_evals: usize,
    max_runtime: Option<Duration>,
    start: Instant,
    pub count: usize,
    pub history: Vec<EvalRecord<T>>,
    pub best_f: T,
    pub best_x: Vector<T>,
    pub cur_iter: usize,
}

impl<'a, T: Scalar> Evaluator<'a, T> {
    pub fn new(problem: &'a LeastSquaresProblem<T>, config: &SolverConfig<T>) -> Self {
        Self {
            problem,
            max_evals: config.max_evals,
            max_runtime: config.max_runtime,
            start: Instant::now(),
            count: 0,
            history: Vec::new(),
            best_f: T::cst(f64::MAX),
            best_x: problem.x0().clone(),
            cur_iter: 0,
        }
    }

    pub fn exhausted(&self) -> Option<Status> {
        if self.count >= self.max_evals {
            return Some(Status::BudgetExhausted);
        }
        if let Some(cap) = self.max_runtime {
            if self.start.elapsed() >= cap {
                return Some(Status::RuntimeExhausted);
            }
        }
        None
    }

    pub fn eval(&mut self, x: &Vector<T>) -> Result<EvalOutcome<T>> {
        if let Some(status) = self.exhausted() {
            return Ok(EvalOutcome::Exhausted(status));
        }
        let wall_ms = self.start.elapsed().as_secs_f64() * 1e3;
        self.count += 1;
        match self.problem.evaluate(x) {
            Ok(r) => {
                let f = T::cst(0.5) * r.norm_squared();
                if f < self.best_f {
                    self.best_f = f;
                    self.best_x = x.clone();
                }
                self.history.push(EvalRecord {
                    index: self.count,
                    iter: self.cur_iter,
                    f: Some(f),
                    f_best: self.best_f,
                    wall_ms,
                });
                Ok(EvalOutcome::Value(r, f))
            }
            Err(Error::NonFinite { .. }) => {
                self.history.push(EvalRecord {
                    index: self.count,
                    iter: self.cur_iter,
                    f: None,
                    f_best: self.best_f,
                    wall_ms,
                });
                Ok(EvalOutcome::NonFinite)
            }
            Err(e) => Err(e),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn p_drop_policy_values() {
        assert_eq!(p_drop_select(PDropPolicy::Mixed, true, 100), 1);
        assert_eq!(p_drop_select(PDropPolicy::Mixed, false, 100), 10);
        assert_eq!(p_drop_select(PDropPolicy::Mixed, false, 7), 1);
        assert_eq!(p_drop_select(PDropPolicy::Mixed, false, 11), 2);
        assert_eq!(p_drop_select(PDropPolicy::Constant(5), true, 3), 3);
        assert_eq!(p_drop_select(PDropPolicy::Constant(0), false, 3), 1);
    }

    #[test]
    fn radius_update_cases() {
        let cfg: SolverConfig<f64> = SolverConfig::new(4);
        // Very successful: min(max(2*1, 4*1), delta_max) = 4.
        let (d, acc) = trust_region_update(Some(0.9), 1.0, 1.0, &cfg);
        assert_eq!(d, 4.0);
        assert!(acc);
        // Unsuccessful: min(0.5, 0.2) = 0.2, rejected.
        let (d, acc) = trust_region_update(Some(0.05), 1.0, 0.2, &cfg);
        assert_eq!(d, 0.2);
        assert!(!acc);
        // Moderately successful: max(0.5, 0.1) = 0.5, accepted.
        let (d, acc) = trust_region_update(Some(0.3), 1.0, 0.1, &cfg);
        assert_eq!(d, 0.5);
        assert!(acc);
        // Undefined ratio falls in the rejection branch.
        let (d, acc) = trust_region_update(None, 1.0, 0.3, &cfg);
        assert_eq!(d, 0.3);
        assert!(!acc);
    }

    #[test]
    fn config_validation() {
        let mut cfg: SolverConfig<f64> = SolverConfig::new(4);
        assert!(cfg.validate(10).is_ok());
        // Default parameters violate the theory constraint -> warning, not error.
        assert!(!cfg.validate(10).unwrap().is_empty());
        assert!(cfg.clone().theory_strict().validate(10).unwrap().is_empty());
        cfg.eta2 = 1.5;
        assert!(cfg.validate(10).is_err());
        let cfg: SolverConfig<f64> = SolverConfig::new(40);
        assert!(cfg.validate(10).is_err());
    }

    #[test]
    fn delta0_default_rule() {
        let cfg: SolverConfig<f64> = SolverConfig::new(2);
        let x0 = Vector::from_vec(vec![-3.0, 0.5]);
        assert!((cfg.resolve_delta0(&x0) - 0.3).abs() < 1e-15);
        let x0 = Vector::from_vec(vec![0.2, 0.1]);
        assert!((cfg.resolve_delta0(&x0) - 0.1).abs() < 1e-15);
    }
}
