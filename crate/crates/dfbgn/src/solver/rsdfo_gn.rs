//! Reference randomized-subspace Gauss-Newton driver with criticality and
//! safety steps. Each iteration either resamples the subspace
//! (`CHECK_MODEL = FALSE`) or keeps the previous one and certifies the
//! interpolation geometry (`CHECK_MODEL = TRUE`); certification means all
//! points lie in the trust region and the set is Λ-poised below the target.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::interpolation::InterpolationSet;
use crate::problems::LeastSquaresProblem;
use crate::subspace::{gaussian_sketch, hashing_sketch, orthonormal_sketch, SketchKind};
use crate::trust_region::solve_trs;
use crate::{Matrix, Scalar, Vector};

use super::{
    trust_region_update, EvalOutcome, Evaluator, IterKind, IterRecord, SolveResult, SolverConfig,
    Status,
};

const REBUILD_ATTEMPTS: usize = 3;

fn sample_subspace<T: Scalar>(
    kind: SketchKind,
    n: usize,
    p: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Matrix<T>> {
    let basis = match kind {
        SketchKind::Orthonormal => orthonormal_sketch(n, p, rng)?,
        SketchKind::Gaussian => gaussian_sketch(n, p, rng)?,
        SketchKind::Hashing { s } => hashing_sketch(n, p, s, rng)?,
    };
    Ok(basis.q)
}

enum Flow {
    Ready,
    Exhausted(Status),
}

/// Fresh reduced interpolation set: points `s_t = delta e_t`, evaluated at
/// `x + Q s_t`. Lives in `R^p` with base 0, so Λ = 1 + sqrt(p).
fn rebuild_reduced_set<T: Scalar>(
    q: &Matrix<T>,
    x: &Vector<T>,
    r_x: &Vector<T>,
    delta: T,
    p: usize,
    evaluator: &mut Evaluator<'_, T>,
) -> Result<(InterpolationSet<T>, Flow)> {
    let mut set = InterpolationSet::new(Vector::zeros(p), r_x.clone());
    for t in 0..p {
        if let Some(status) = evaluator.exhausted() {
            return Ok((set, Flow::Exhausted(status)));
        }
        let y = x + q.column(t) * delta;
        match evaluator.eval(&y)? {
            EvalOutcome::Value(r, _) => {
                let mut s_t = Vector::zeros(p);
                s_t[t] = delta;
                set.add_point(s_t, r);
            }
            EvalOutcome::NonFinite => {} // skipped; certification will fail
            EvalOutcome::Exhausted(status) => return Ok((set, Flow::Exhausted(status))),
        }
    }
    Ok((set, Flow::Ready))
}

/// Certification used in place of checking full linearity analytically:
/// complete set, all points within the trust region, Λ below the target.
fn certified<T: Scalar>(
    set: &mut InterpolationSet<T>,
    p: usize,
    delta: T,
    lambda_target: T,
) -> Result<bool> {
    if set.p() != p {
        return Ok(false);
    }
    let slack = T::one() + T::cst(1e-12);
    if !set.points().iter().all(|s| s.norm() <= delta * slack) {
        return Ok(false);
    }
    set.factorize()?;
    if set.qr().unwrap().is_degenerate() {
        return Ok(false);
    }
    Ok(set.poisedness(delta)? <= lambda_target)
}

/// Runs the randomized-subspace Gauss-Newton driver with the given subspace
/// sampler.
pub fn rsdfo_gn_solve<T: Scalar>(
    problem: &LeastSquaresProblem<T>,
    config: &SolverConfig<T>,
    sampler: SketchKind,
) -> Result<SolveResult<T>> {
    let n = problem.n();
    let config_warnings = config.validate(n)?;
    if config.max_evals == 0 {
        return Err(Error::Config("evaluation budget must be positive".into()));
    }
    let p = config.p;
    let lambda_target = config.resolve_lambda_target();
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
    let mut r_k = r0;

    let mut check_model = false;
    let mut q_mat: Option<Matrix<T>> = None;
    let mut rset: Option<InterpolationSet<T>> = None;

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

        // Subspace and interpolation set for this iteration.
        if !(check_model && q_mat.is_some()) {
            q_mat = Some(sample_subspace(sampler, n, p, &mut rng)?);
            rset = None;
        }
        let q = q_mat.as_ref().unwrap();

        let mut cert = match rset.as_mut() {
            Some(set) => certified(set, p, delta, lambda_target)?,
            None => false,
        };
        if check_model && !cert {
            // Restore geometry: regenerate all p directions at radius delta.
            let mut restored = None;
            for _ in 0..REBUILD_ATTEMPTS {
                let (set, flow) = rebuild_reduced_set(q, &x_k, &r_k, delta, p, &mut evaluator)?;
                if let Flow::Exhausted(st) = flow {
                    status = st;
                    break 'main;
                }
                let mut set = set;
                if certified(&mut set, p, delta, lambda_target)? {
                    restored = Some(set);
                    break;
                }
            }
            match restored {
                Some(set) => {
                    rset = Some(set);
                    cert = true;
                }
                None => {
                    return Err(Error::GeometryBeyondRepair {
                        attempts: REBUILD_ATTEMPTS,
                    })
                }
            }
        } else if rset.is_none() {
            let (set, flow) = rebuild_reduced_set(q, &x_k, &r_k, delta, p, &mut evaluator)?;
            if let Flow::Exhausted(st) = flow {
                status = st;
                break 'main;
            }
            let mut set = set;
            cert = certified(&mut set, p, delta, lambda_target)?;
            if set.p() == 0 {
                return Err(Error::GeometryBeyondRepair {
                    attempts: REBUILD_ATTEMPTS,
                });
            }
            set.factorize()?;
            rset = Some(set);
        }
        let build_evals = evaluator.count - build_start;

        let set = rset.as_mut().expect("set built above");
        if set.qr().is_none() {
            set.factorize()?;
        }
        let model = set.build_model()?;
        let h_norm_f = model.h_hat.norm();
        let g_norm = model.g_hat.norm();

        if g_norm == T::zero() {
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

        // Criticality step: suspected stationarity with an uncertain model or
        // an oversized radius. No objective evaluation happens here.
        if g_norm < config.eps_c && (g_norm < delta / config.mu || !cert) {
            let delta_next = config.gamma_c * delta;
            check_model = true;
            iters.push(IterRecord {
                iter,
                kind: IterKind::Criticality,
                delta,
                delta_next,
                rho: None,
                successful: false,
                p_drop: None,
                step_norm: None,
                h_norm_f: Some(h_norm_f),
                f_iterate: f_k,
                build_evals,
                step_evals: 0,
            });
            delta = delta_next;
            if delta <= config.delta_end {
                status = Status::SmallDelta;
                break 'main;
            }
            continue 'main;
        }

        let trs = solve_trs(&model.g_hat, &model.h_hat, delta)?;
        let step_norm = trs.s_hat.norm();

        // Safety step: the step is much shorter than the radius; shrink
        // without evaluating the objective.
        if step_norm < config.beta_f * delta {
            let delta_next = config.gamma_f * delta;
            check_model = !cert;
            iters.push(IterRecord {
                iter,
                kind: IterKind::Safety,
                delta,
                delta_next,
                rho: None,
                successful: false,
                p_drop: None,
                step_norm: Some(step_norm),
                h_norm_f: Some(h_norm_f),
                f_iterate: f_k,
                build_evals,
                step_evals: 0,
            });
            delta = delta_next;
            if delta <= config.delta_end {
                status = Status::SmallDelta;
                break 'main;
            }
            continue 'main;
        }

        // The model lives in the rotated coordinates of the reduced QR; map
        // the step back to the ambient space.
        let reduced_step = &set.qr().unwrap().q * &trs.s_hat;
        let x_trial = &x_k + q * &reduced_step;
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

        if accept {
            let (r_t, f_t) = trial.take().expect("accepted step was evaluated");
            x_k = x_trial;
            r_k = r_t;
            f_k = f_t;
            rset = None; // the reduced set is tied to (x, Q)
        }
        check_model = !(rho.map_or(false, |r| r >= config.eta2) || cert);

        iters.push(IterRecord {
            iter,
            kind: IterKind::Step,
            delta,
            delta_next,
            rho,
            successful: accept,
            p_drop: None,
            step_norm: Some(step_norm),
            h_norm_f: Some(h_norm_f),
            f_iterate: f_k,
            build_evals,
            step_evals: 1,
        });

        delta = delta_next;
        if delta <= config.delta_end {
            status = Status::SmallDelta;
            break 'main;
        }
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
