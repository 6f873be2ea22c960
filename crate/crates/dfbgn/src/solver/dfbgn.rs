//! The practical block Gauss-Newton driver: the subspace is spanned by the
//! interpolation directions themselves, and each iteration removes
//! badly-placed points and appends fresh orthogonal directions so the
//! subspace rotates while evaluations are reused.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::interpolation::InterpolationSet;
use crate::problems::LeastSquaresProblem;
use crate::subspace::orthonormal_complement;
use crate::trust_region::solve_trs;
use crate::{Matrix, Scalar, Vector};

use super::{
    p_drop_select, trust_region_update, EvalOutcome, Evaluator, IterKind, IterRecord, SolveResult,
    SolverConfig, Status,
};

const REPAIR_ATTEMPTS: usize = 3;

enum Flow {
    Ready,
    Exhausted(Status),
}

/// Appends up to `q` fresh orthonormal directions (orthogonal to the current
/// ones) at radius `delta`, evaluating each new point. Non-finite
/// evaluations discard the point; budget exhaustion stops early.
fn append_fresh<T: Scalar>(
    set: &mut InterpolationSet<T>,
    q: usize,
    delta: T,
    rng: &mut ChaCha8Rng,
    evaluator: &mut Evaluator<'_, T>,
) -> Result<Flow> {
    if q == 0 {
        return Ok(Flow::Ready);
    }
    let n = set.dim();
    let existing = if set.p() > 0 {
        set.factorize()?;
        set.qr().unwrap().q.clone()
    } else {
        Matrix::zeros(n, 0)
    };
    let dirs = orthonormal_complement(&existing, q, rng)?;
    for j in 0..q {
        if let Some(status) = evaluator.exhausted() {
            return Ok(Flow::Exhausted(status));
        }
        let col: Matrix<T> = Matrix::from_columns(&[dirs.column(j)]);
        let appended = set.append_directions(&col, delta, |y| match evaluator.eval(y) {
            Ok(EvalOutcome::Value(r, _)) => Ok(r),
            Ok(EvalOutcome::NonFinite) => Err(Error::NonFinite {
                context: "residual",
            }),
            Ok(EvalOutcome::Exhausted(_)) => unreachable!("budget checked before append"),
            Err(e) => Err(e),
        });
        match appended {
            Ok(()) => {}
            Err(Error::NonFinite { .. }) => {} // point discarded, try the rest
            Err(e) => return Err(e),
        }
    }
    Ok(Flow::Ready)
}

/// Brings the set to exactly `p_target` nondegenerate directions, replacing
/// rank-deficient columns by fresh orthogonal ones.
fn ensure_geometry<T: Scalar>(
    set: &mut InterpolationSet<T>,
    p_target: usize,
    delta: T,
    rng: &mut ChaCha8Rng,
    evaluator: &mut Evaluator<'_, T>,
) -> Result<Flow> {
    for _ in 0..=REPAIR_ATTEMPTS {
        let missing = p_target.saturating_sub(set.p());
        if missing > 0 {
            match append_fresh(set, missing, delta, rng, evaluator)? {
                Flow::Ready => {}
                exhausted => return Ok(exhausted),
            }
        }
        set.factorize()?;
        let degenerate = set.qr().unwrap().degenerate_cols.clone();
        if degenerate.is_empty() && set.p() == p_target {
            return Ok(Flow::Ready);
        }
        for &idx in degenerate.iter().rev() {
            set.remove_index(idx);
        }
    }
    Err(Error::GeometryBeyondRepair {
        attempts: REPAIR_ATTEMPTS,
    })
}

/// Removes `count` points by the geometry-aware criterion, clearing
/// rank-deficient columns first when present.
fn remove_by_geometry<T: Scalar>(
    set: &mut InterpolationSet<T>,
    delta: T,
    mut count: usize,
) -> Result<()> {
    while count > 0 && set.p() > 0 {
        set.factorize()?;
        let degenerate = set.qr().unwrap().degenerate_cols.clone();
        if degenerate.is_empty() {
            let k = count.min(set.p());
            set.remove_points(delta, k)?;
            return Ok(());
        }
        for &idx in degenerate.iter().rev() {
            set.remove_index(idx);
            count = count.saturating_sub(1);
        }
    }
    Ok(())
}


/// Runs DFBGN on `problem`. See the module docs for the iteration structure.
pub fn dfbgn_solve<T: Scalar>(
    problem: &LeastSquaresProblem<T>,
    config: &SolverConfig<T>,
) -> Result<SolveResult<T>> {
    let n = problem.n();
    let config_warnings = config.validate(n)?;
    if config.max_evals == 0 {
        return Err(Error::Config("evaluation budget must be positive".into()));
    }
    let p_target = config.p;
    let mut delta = config.resolve_delta0(problem.x0());
    if delta <= config.delta_end {
        return Err(Error::Config("delta0 must exceed delta_end".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut evaluator = Evaluator::new(problem, config);

    let r0 = match evaluator.eval(problem.x0())? {
        EvalOutcome::Value(r, _) => r,
        EvalOutcome::NonFinite => {
            return Err(Error::NonFinite {
                context: "starting point",
            })
        }
        EvalOutcome::Exhausted(_) => {
            return Err(Error::Config("budget exhausted before the first evaluation".into()))
        }
    };
    let mut f_k = T::cst(0.5) * r0.norm_squared();
    let mut x_k = problem.x0().clone();
    let mut set = InterpolationSet::new(x_k.clone(), r0);

    let mut iters: Vec<IterRecord<T>> = Vec::new();
    let mut iter = 0usize;
    let status;

    'main: loop {
        iter += 1;
        evaluator.cur_iter = iter;
        if let Some(st) = evaluator.exhausted() {
            status = st;
            break 'main;
        }

        let build_start = evaluator.count;
        match ensure_geometry(&mut set, p_target, delta, &mut rng, &mut evaluator)? {
            Flow::Ready => {}
            Flow::Exhausted(st) => {
                status = st;
                break 'main;
            }
        }
        let build_evals = evaluator.count - build_start;

        let model = set.build_model()?;
        let h_norm_f = model.h_hat.norm();
        if model.g_hat.norm() == T::zero() {
            iters.push(IterRecord {
                iter,
                kind: IterKind::Step,
                delta,
                delta_next: delta,
                rho: None,
                successful: false,
                p_drop: None,
                step_norm: Some(T::zero()),
                h_norm_f: Some(h_norm_f),
                f_iterate: f_k,
                build_evals,
                step_evals: 0,
            });
            status = Status::ModelStationary;
            break 'main;
        }

        let trs = solve_trs(&model.g_hat, &model.h_hat, delta)?;
        let step_norm = trs.s_hat.norm();
        let q_basis = set.qr().unwrap().q.clone();
        let x_trial = &x_k + &q_basis * &trs.s_hat;
        let degenerate_decrease =
            trs.model_decrease <= T::cst(1e-15) * f_k.abs().max(T::one());

        let mut trial: Option<(Vector<T>, T)> = None;
        match evaluator.eval(&x_trial)? {
            EvalOutcome::Value(r, f) => trial = Some((r, f)),
            EvalOutcome::NonFinite => {}
            EvalOutcome::Exhausted(st) => {
                status = st;
                break 'main;
            }
        }
        let rho = match (&trial, degenerate_decrease) {
            (Some((_, f_t)), false) => Some((f_k - *f_t) / trs.model_decrease),
            _ => None,
        };

        let (delta_next, accept) = trust_region_update(rho, delta, step_norm, config);
        let policy_p_drop = p_drop_select(config.p_drop, accept, p_target);

        // Center update; on rejection the trial still joins the set. Either
        // way the newcomer sits at the last index.
        if accept {
            let (r_t, f_t) = trial.take().expect("accepted step must have been evaluated");
            set.swap_base_keep_old(x_trial.clone(), r_t);
            x_k = x_trial;
            f_k = f_t;
        } else if let Some((r_t, _)) = trial.take() {
            set.add_point(x_trial.clone(), r_t);
        }

        iters.push(IterRecord {
            iter,
            kind: IterKind::Step,
            delta,
            delta_next,
            rho,
            successful: accept,
            p_drop: Some(policy_p_drop),
            step_norm: Some(step_norm),
            h_norm_f: Some(h_norm_f),
            f_iterate: f_k,
            build_evals,
            step_evals: 1,
        });

        if delta_next <= config.delta_end {
            status = Status::SmallDelta;
            break 'main;
        }

        // Interpolation set management around the (possibly moved) base.
        if p_target < n {
            let drop = policy_p_drop.max(2).min(p_target).min(set.p());
            remove_by_geometry(&mut set, delta_next, drop)?;
        } else {
            // p = n: the set cannot grow past n directions, so the newcomer
            // (trial on rejection, old base on acceptance) replaces the
            // worst-scored old point, then p_drop more are removed.
            if set.p() > p_target {
                let newcomer = set.take_point(set.p() - 1);
                remove_by_geometry(&mut set, delta_next, 1)?;
                set.add_point(newcomer.0, newcomer.1);
            }
            let drop = policy_p_drop.max(1).min(p_target).min(set.p());
            if drop > 0 && set.p() > 0 {
                remove_by_geometry(&mut set, delta_next, drop)?;
            }
        }

        delta = delta_next;
    }

    Ok(SolveResult {
        x_best: evaluator.best_x.clone(),
        f_best: evaluator.best_f,
        two_f_best: evaluator.best_f * T::cst(2.0),
        status,
        evals: evaluator.count,
        iterations: iter,
        eval_history: evaluator.history,
        iter_history: iters,
        config_warnings,
    })
}
