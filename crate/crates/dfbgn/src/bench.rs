//! Benchmarking harness: accuracy measure, data and performance profiles,
//! and a seeded campaign runner that executes a solver/problem/seed grid and
//! emits CSV outputs.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;
use std::time::Duration;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::problems::registry_lookup;
use crate::solver::{
    dfbgn_solve, rsdfo_gn_solve, PDropPolicy, SolveResult, SolverConfig, Status,
};
use crate::subspace::SketchKind;
use crate::Scalar;

/// Best-objective-so-far at one evaluation.
#[derive(Debug, Clone, Copy)]
pub struct TracePoint<T> {
    pub eval_index: usize,
    pub f_best: T,
    pub wall_ms: f64,
}

/// Outcome of one (solver, problem instance, seed) run.
#[derive(Debug, Clone)]
pub struct RunRecord<T: Scalar> {
    pub solver_id: String,
    pub problem_id: String,
    pub n: usize,
    pub m: usize,
    pub seed: u64,
    /// Objective at the starting point.
    pub f0: Option<T>,
    /// Known optimum (f convention).
    pub f_star: Option<T>,
    pub trace: Vec<TracePoint<T>>,
    /// `None` means the run crashed.
    pub status: Option<Status>,
    pub evals: usize,
    pub f_best: Option<T>,
}

impl<T: Scalar> RunRecord<T> {
    /// Problem-instance key: each (problem, seed) pair is a distinct instance
    /// in profile denominators.
    fn instance(&self) -> (String, u64) {
        (self.problem_id.clone(), self.seed)
    }
}

/// Which trace coordinate profiles are computed against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceKey {
    Evaluations,
    WallMs,
}

/// Smallest evaluation index reaching `f <= f_star + tau (f0 - f_star)`;
/// `None` if the run never does.
pub fn evals_to_accuracy<T: Scalar>(
    trace: &[TracePoint<T>],
    f0: T,
    f_star: T,
    tau: T,
) -> Result<Option<usize>> {
    if !(tau > T::zero() && tau < T::one()) {
        return Err(Error::Parameter("accuracy level tau must be in (0,1)".into()));
    }
    if !(f0 > f_star) {
        return Err(Error::Parameter(
            "problem data error: need f0 > f_star for the accuracy measure".into(),
        ));
    }
    let threshold = f_star + tau * (f0 - f_star);
    Ok(trace
        .iter()
        .find(|pt| pt.f_best <= threshold)
        .map(|pt| pt.eval_index))
}

/// Same measure in the chosen trace coordinate (evaluations or wall time).
fn measure<T: Scalar>(record: &RunRecord<T>, tau: T, key: TraceKey) -> Result<Option<f64>> {
    let (f0, f_star) = match (record.f0, record.f_star) {
        (Some(a), Some(b)) => (a, b),
        _ => return Ok(None), // crashed before the first evaluation
    };
    if !(tau > T::zero() && tau < T::one()) {
        return Err(Error::Parameter("accuracy level tau must be in (0,1)".into()));
    }
    if !(f0 > f_star) {
        return Err(Error::Parameter(
            "problem data error: need f0 > f_star for the accuracy measure".into(),
        ));
    }
    let threshold = f_star + tau * (f0 - f_star);
    Ok(record.trace.iter().find(|pt| pt.f_best <= threshold).map(|pt| match key {
        TraceKey::Evaluations => pt.eval_index as f64,
        TraceKey::WallMs => pt.wall_ms,
    }))
}

/// `(f - f_star) / (f0 - f_star)`, clamped below at zero.
pub fn normalized_objective<T: Scalar>(f: T, f0: T, f_star: T) -> Result<T> {
    if !(f0 > f_star) {
        return Err(Error::Parameter(
            "problem data error: need f0 > f_star to normalize".into(),
        ));
    }
    Ok(((f - f_star) / (f0 - f_star)).max(T::zero()))
}

/// One profile sample.
#[derive(Debug, Clone, Copy)]
pub struct ProfilePoint {
    pub alpha: f64,
    pub fraction: f64,
}

/// Data profiles: fraction of problem instances solved within
/// `alpha * (n_P + 1)` evaluations (or the same formula on wall time).
pub fn data_profile<T: Scalar>(
    records: &[RunRecord<T>],
    tau: T,
    alphas: &[f64],
    key: TraceKey,
) -> Result<BTreeMap<String, Vec<ProfilePoint>>> {
    if records.is_empty() {
        return Err(Error::Bench("empty problem collection".into()));
    }
    let mut by_solver: BTreeMap<String, Vec<(f64, usize)>> = BTreeMap::new();
    for rec in records {
        let msr = measure(rec, tau, key)?;
        let entry = by_solver.entry(rec.solver_id.clone()).or_default();
        entry.push((msr.unwrap_or(f64::INFINITY), rec.n));
    }
    let mut out = BTreeMap::new();
    for (solver, runs) in by_solver {
        let total = runs.len() as f64;
        let pts = alphas
            .iter()
            .map(|&alpha| {
                let solved = runs
                    .iter()
                    .filter(|(msr, n)| *msr <= alpha * (*n as f64 + 1.0))
                    .count();
                ProfilePoint {
                    alpha,
                    fraction: solved as f64 / total,
                }
            })
            .collect();
        out.insert(solver, pts);
    }
    Ok(out)
}

/// Performance profiles: fraction of instances with
/// `N(S,P) <= alpha * min_S N(S,P)`. Instances no solver reaches stay in the
/// denominator but count for no solver.
pub fn performance_profile<T: Scalar>(
    records: &[RunRecord<T>],
    tau: T,
    alphas: &[f64],
    key: TraceKey,
) -> Result<BTreeMap<String, Vec<ProfilePoint>>> {
    if records.is_empty() {
        return Err(Error::Bench("empty problem collection".into()));
    }
    let mut n_min: BTreeMap<(String, u64), f64> = BTreeMap::new();
    let mut per_solver: BTreeMap<String, Vec<((String, u64), f64)>> = BTreeMap::new();
    for rec in records {
        let msr = measure(rec, tau, key)?.unwrap_or(f64::INFINITY);
        let inst = rec.instance();
        let best = n_min.entry(inst.clone()).or_insert(f64::INFINITY);
        if msr < *best {
            *best = msr;
        }
        per_solver
            .entry(rec.solver_id.clone())
            .or_default()
            .push((inst, msr));
    }
    let mut out = BTreeMap::new();
    for (solver, runs) in per_solver {
        let total = runs.len() as f64;
        let pts = alphas
            .iter()
            .map(|&alpha| {
                let solved = runs
                    .iter()
                    .filter(|(inst, msr)| {
                        let best = n_min[inst];
                        best.is_finite() && *msr <= alpha * best
                    })
                    .count();
                ProfilePoint {
                    alpha,
                    fraction: solved as f64 / total,
                }
            })
            .collect();
        out.insert(solver, pts);
    }
    Ok(out)
}

/// Data-profile budget grid: gradients 0..100 in steps of 0.5.
pub fn default_data_alphas() -> Vec<f64> {
    (0..=200).map(|k| k as f64 * 0.5).collect()
}

/// Performance-ratio grid: `2^(k/4)` for `alpha` in `[1, 64]`.
pub fn default_perf_alphas() -> Vec<f64> {
    (0..=24).map(|k| 2f64.powf(k as f64 / 4.0)).collect()
}

/// Which solver a campaign entry runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    Dfbgn,
    RsdfoGn,
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dfbgn" => Ok(Algorithm::Dfbgn),
            "rsdfo-gn" | "rsdfo_gn" | "rsdfogn" => Ok(Algorithm::RsdfoGn),
            other => Err(Error::Parameter(format!(
                "unknown algorithm `{other}` (expected dfbgn or rsdfo-gn)"
            ))),
        }
    }
}

/// One solver configuration in a campaign.
#[derive(Debug, Clone)]
pub struct SolverSpec {
    pub id: String,
    pub algorithm: Algorithm,
    /// Subspace dimension as a fraction of n, rounded and clamped to `[1, n]`.
    pub p_fraction: f64,
    pub subspace: SketchKind,
    pub theory_strict: bool,
    pub p_drop: PDropPolicy,
}

impl SolverSpec {
    pub fn p_for(&self, n: usize) -> usize {
        ((self.p_fraction * n as f64).round() as usize).clamp(1, n)
    }

    /// Parses one spec line: `algorithm,p_fraction,subspace,extra_flags`,
    /// extra flags separated by `;` (supported: `theory-strict`,
    /// `pdrop-const=<k>`, `hash-s=<s>`).
    pub fn parse(line: &str) -> Result<Self> {
        let fields: Vec<&str> = line.trim().split(',').collect();
        if fields.len() < 3 {
            return Err(Error::Parameter(format!(
                "solver spec `{line}` needs algorithm,p_fraction,subspace[,extra_flags]"
            )));
        }
        let algorithm: Algorithm = fields[0].parse()?;
        let p_fraction: f64 = fields[1]
            .trim()
            .parse()
            .map_err(|_| Error::Parameter(format!("bad p_fraction `{}`", fields[1])))?;
        if !(p_fraction > 0.0 && p_fraction <= 1.0) {
            return Err(Error::Parameter("p_fraction must be in (0, 1]".into()));
        }
        let mut hash_s = 3usize;
        let mut theory_strict = false;
        let mut p_drop = PDropPolicy::Mixed;
        if fields.len() > 3 && !fields[3].trim().is_empty() {
            for flag in fields[3].split(';') {
                let flag = flag.trim();
                if flag.is_empty() {
                    continue;
                }
                if flag == "theory-strict" {
                    theory_strict = true;
                } else if let Some(v) = flag.strip_prefix("pdrop-const=") {
                    let k: usize = v
                        .parse()
                        .map_err(|_| Error::Parameter(format!("bad flag `{flag}`")))?;
                    p_drop = PDropPolicy::Constant(k);
                } else if let Some(v) = flag.strip_prefix("hash-s=") {
                    hash_s = v
                        .parse()
                        .map_err(|_| Error::Parameter(format!("bad flag `{flag}`")))?;
                } else {
                    return Err(Error::Parameter(format!("unknown solver flag `{flag}`")));
                }
            }
        }
        let subspace = match fields[2].trim().to_ascii_lowercase().as_str() {
            "orthonormal" => SketchKind::Orthonormal,
            "gaussian" => SketchKind::Gaussian,
            "hashing" => SketchKind::Hashing { s: hash_s },
            other => {
                return Err(Error::Parameter(format!(
                    "unknown subspace kind `{other}`"
                )))
            }
        };
        let id = format!(
            "{}_p{}{}",
            fields[0].trim(),
            fields[1].trim(),
            if theory_strict { "_strict" } else { "" }
        );
        Ok(SolverSpec {
            id,
            algorithm,
            p_fraction,
            subspace,
            theory_strict,
            p_drop,
        })
    }
}

/// Built-in problem collections (name, dimension).
pub fn collection(name: &str) -> Result<Vec<(String, usize)>> {
    let probs: Vec<(&str, usize)> = match name {
        "cr-small" => vec![
            ("broydn3d", 10),
            ("argtrig", 10),
            ("chandheq", 10),
            ("integreq", 10),
            ("powellse", 12),
            ("rosenbrock", 10),
        ],
        "cr-desk" => vec![
            ("broydn3d", 100),
            ("argtrig", 100),
            ("chandheq", 100),
            ("integreq", 100),
            ("powellse", 100),
            ("rosenbrock", 100),
        ],
        other => {
            return Err(Error::Bench(format!(
                "unknown collection `{other}` (expected cr-small or cr-desk)"
            )))
        }
    };
    Ok(probs.into_iter().map(|(s, n)| (s.to_string(), n)).collect())
}

/// Campaign-level settings.
#[derive(Debug, Clone)]
pub struct CampaignConfig {
    pub seeds: Vec<u64>,
    pub budget_gradients: f64,
    pub runtime_cap: Option<Duration>,
    pub taus: Vec<f64>,
    pub jobs: usize,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        Self {
            seeds: (0..10).collect(),
            budget_gradients: 100.0,
            runtime_cap: None,
            taus: vec![0.5, 1e-1, 1e-3, 1e-5],
            jobs: 1,
        }
    }
}

fn run_one(
    spec: &SolverSpec,
    problem_name: &str,
    n: usize,
    seed: u64,
    campaign: &CampaignConfig,
) -> RunRecord<f64> {
    let problem_id = format!("{problem_name}_n{n}");
    let crashed = || RunRecord {
        solver_id: spec.id.clone(),
        problem_id: problem_id.clone(),
        n,
        m: 0,
        seed,
        f0: None,
        f_star: None,
        trace: Vec::new(),
        status: None,
        evals: 0,
        f_best: None,
    };

    let problem = match registry_lookup::<f64>(problem_name, n) {
        Ok(p) => p,
        Err(_) => return crashed(),
    };
    let p = spec.p_for(n);
    let budget = (campaign.budget_gradients * (n as f64 + 1.0)).round() as usize;
    let mut config: SolverConfig<f64> = SolverConfig::new(p)
        .with_seed(seed)
        .with_budget(budget.max(1));
    config.max_runtime = campaign.runtime_cap;
    config.p_drop = spec.p_drop;
    config.subspace = spec.subspace;
    if spec.theory_strict {
        config = config.theory_strict();
    }

    let outcome: crate::error::Result<SolveResult<f64>> = match spec.algorithm {
        Algorithm::Dfbgn => dfbgn_solve(&problem, &config),
        Algorithm::RsdfoGn => rsdfo_gn_solve(&problem, &config, spec.subspace),
    };
    match outcome {
        Ok(res) => RunRecord {
            solver_id: spec.id.clone(),
            problem_id,
            n,
            m: problem.m(),
            seed,
            f0: res.eval_history.first().and_then(|e| e.f),
            f_star: problem.f_star(),
            trace: res
                .eval_history
                .iter()
                .map(|e| TracePoint {
                    eval_index: e.index,
                    f_best: e.f_best,
                    wall_ms: e.wall_ms,
                })
                .collect(),
            status: Some(res.status),
            evals: res.evals,
            f_best: Some(res.f_best),
        },
        Err(_) => crashed(),
    }
}

/// Executes the full (problem x solver x seed) grid, optionally in parallel,
/// and returns the records in deterministic order.
pub fn run_campaign(
    problems: &[(String, usize)],
    solvers: &[SolverSpec],
    campaign: &CampaignConfig,
) -> Result<Vec<RunRecord<f64>>> {
    if problems.is_empty() {
        return Err(Error::Bench("empty problem collection".into()));
    }
    if solvers.is_empty() {
        return Err(Error::Bench("no solver specs given".into()));
    }
    let mut grid = Vec::new();
    for spec in solvers {
        for (name, n) in problems {
            for &seed in &campaign.seeds {
                grid.push((spec.clone(), name.clone(), *n, seed));
            }
        }
    }
    let jobs = campaign.jobs.max(1);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Bench(format!("thread pool: {e}")))?;
    let records: Vec<RunRecord<f64>> = pool.install(|| {
        grid.par_iter()
            .map(|(spec, name, n, seed)| run_one(spec, name, *n, *seed, campaign))
            .collect()
    });
    Ok(records)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.17e}")).unwrap_or_default()
}

/// `runs.csv`: one deterministic row per run (no wall-clock fields).
pub fn write_runs_csv(records: &[RunRecord<f64>], path: &Path) -> Result<()> {
    let mut out = String::from("solver,problem,n,m,seed,status,evals,two_f0,two_f_best\n");
    for r in records {
        let status = r
            .status
            .map(|s| s.to_string())
            .unwrap_or_else(|| "crashed".into());
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.solver_id,
            r.problem_id,
            r.n,
            r.m,
            r.seed,
            status,
            r.evals,
            fmt_opt(r.f0.map(|f| 2.0 * f)),
            fmt_opt(r.f_best.map(|f| 2.0 * f)),
        ));
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Writes `solver,tau,alpha,fraction` rows for every tau level, plus a
/// gnuplot-friendly `.dat` twin (space-separated, `#` header).
pub fn write_profile_csv(
    records: &[RunRecord<f64>],
    taus: &[f64],
    alphas: &[f64],
    key: TraceKey,
    kind: ProfileKind,
    path: &Path,
) -> Result<()> {
    let mut csv = String::from("solver,tau,alpha,fraction\n");
    let mut dat = String::from("# solver tau alpha fraction\n");
    for &tau in taus {
        let prof = match kind {
            ProfileKind::Data => data_profile(records, tau, alphas, key)?,
            ProfileKind::Performance => performance_profile(records, tau, alphas, key)?,
        };
        for (solver, pts) in prof {
            for pt in pts {
                csv.push_str(&format!("{solver},{tau},{},{}\n", pt.alpha, pt.fraction));
                dat.push_str(&format!("{solver} {tau} {} {}\n", pt.alpha, pt.fraction));
            }
        }
    }
    std::fs::write(path, csv)?;
    let mut dat_path = path.to_path_buf();
    dat_path.set_extension("dat");
    let mut f = std::fs::File::create(dat_path)?;
    f.write_all(dat.as_bytes())?;
    Ok(())
}

/// Which profile family to emit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProfileKind {
    Data,
    Performance,
}
