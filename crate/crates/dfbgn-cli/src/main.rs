//! Command-line front end: problem corpus listing, single solver runs with
//! history export, and benchmark campaigns with profile CSVs.

use std::path::PathBuf;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};

use dfbgn::bench::{
    self, collection, run_campaign, write_profile_csv, write_runs_csv, CampaignConfig,
    ProfileKind, SolverSpec, TraceKey,
};
use dfbgn::problems::{corpus_manifest, registry_lookup};
use dfbgn::solver::{dfbgn_solve, rsdfo_gn_solve, IterRecord, PDropPolicy, SolverConfig};
use dfbgn::subspace::SketchKind;

#[derive(Parser)]
#[command(name = "dfbgn", about = "Subspace Gauss-Newton least-squares solvers and benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the problem corpus manifest as CSV.
    ListProblems {
        /// Emit rows only at this dimension (default: 10, 100, 1000).
        #[arg(long)]
        dim: Option<usize>,
    },
    /// Run one solver on one problem.
    Solve(SolveArgs),
    /// Run a benchmark campaign and emit profile CSVs.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgorithmArg {
    Dfbgn,
    #[value(name = "rsdfo-gn")]
    RsdfoGn,
}

#[derive(Clone, Copy, ValueEnum)]
enum SubspaceArg {
    Orthonormal,
    Gaussian,
    Hashing,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    problem: String,
    #[arg(long)]
    dim: usize,
    /// Subspace dimension.
    #[arg(long)]
    p: usize,
    /// Budget in multiples of (n+1) evaluations.
    #[arg(long, default_value_t = 100.0)]
    budget_gradients: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = AlgorithmArg::Dfbgn)]
    algorithm: AlgorithmArg,
    /// Subspace sampler (used by rsdfo-gn).
    #[arg(long, value_enum, default_value_t = SubspaceArg::Orthonormal)]
    subspace: SubspaceArg,
    /// Nonzeros per ambient coordinate for hashing sketches.
    #[arg(long, default_value_t = 3)]
    hash_s: usize,
    /// Trust-region parameters satisfying the convergence theory.
    #[arg(long)]
    theory_strict: bool,
    #[arg(long)]
    runtime_cap_sec: Option<u64>,
    /// Write the per-evaluation history CSV here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// cr-small, cr-desk, or a path to a custom CSV (name,dim rows).
    #[arg(long)]
    collection: String,
    /// Solver spec file: one `algorithm,p_fraction,subspace,extra_flags` per line.
    #[arg(long)]
    solvers: PathBuf,
    /// Number of seeds (0..seeds-1), one problem instance each.
    #[arg(long, default_value_t = 10)]
    seeds: u64,
    #[arg(long, default_value_t = 100.0)]
    budget_gradients: f64,
    #[arg(long)]
    runtime_cap_sec: Option<u64>,
    /// Comma-separated accuracy levels.
    #[arg(long, default_value = "0.5,1e-1,1e-3,1e-5")]
    tau: String,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(long, default_value = "bench-out")]
    out_dir: PathBuf,
    /// Also emit wall-clock-based profiles.
    #[arg(long)]
    runtime_profiles: bool,
}

fn main() {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::ListProblems { dim } => list_problems(dim),
        Command::Solve(args) => solve(args),
        Command::Bench(args) => bench(args),
    };
    std::process::exit(code);
}

fn list_problems(dim: Option<usize>) -> i32 {
    let dims: Vec<usize> = dim.map(|d| vec![d]).unwrap_or_else(|| vec![10, 100, 1000]);
    println!("name,n,m,two_f0,two_fstar");
    for row in corpus_manifest(&dims) {
        let fstar = row
            .two_f_star
            .map(|v| format!("{v}"))
            .unwrap_or_default();
        println!("{},{},{},{},{}", row.name, row.n, row.m, row.two_f0, fstar);
    }
    0
}

fn sketch_kind(arg: SubspaceArg, hash_s: usize) -> SketchKind {
    match arg {
        SubspaceArg::Orthonormal => SketchKind::Orthonormal,
        SubspaceArg::Gaussian => SketchKind::Gaussian,
        SubspaceArg::Hashing => SketchKind::Hashing { s: hash_s },
    }
}

fn solve(args: SolveArgs) -> i32 {
    let problem = match registry_lookup::<f64>(&args.problem, args.dim) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    let budget = ((args.dim as f64 + 1.0) * args.budget_gradients).round() as usize;
    let mut config: SolverConfig<f64> = SolverConfig::new(args.p)
        .with_seed(args.seed)
        .with_budget(budget.max(1));
    config.p_drop = PDropPolicy::Mixed;
    config.subspace = sketch_kind(args.subspace, args.hash_s);
    config.max_runtime = args.runtime_cap_sec.map(Duration::from_secs);
    if args.theory_strict {
        config = config.theory_strict();
    }

    let result = match args.algorithm {
        AlgorithmArg::Dfbgn => dfbgn_solve(&problem, &config),
        AlgorithmArg::RsdfoGn => rsdfo_gn_solve(&problem, &config, config.subspace),
    };
    let result = match result {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    for w in &result.config_warnings {
        eprintln!("warning: {w}");
    }
    println!(
        "problem={} n={} m={} algorithm={} p={} seed={}",
        problem.name(),
        problem.n(),
        problem.m(),
        match args.algorithm {
            AlgorithmArg::Dfbgn => "dfbgn",
            AlgorithmArg::RsdfoGn => "rsdfo-gn",
        },
        args.p,
        args.seed
    );
    println!(
        "status={} evals={} iterations={} f_best={:.12e} two_f_best={:.12e}",
        result.status, result.evals, result.iterations, result.f_best, result.two_f_best
    );

    if let Some(path) = args.out {
        let delta0 = config.resolve_delta0(problem.x0());
        if let Err(e) = write_history(&path, &result, delta0) {
            eprintln!("error writing {}: {e}", path.display());
            return 1;
        }
        println!("history written to {}", path.display());
    }
    0
}

fn write_history(
    path: &PathBuf,
    result: &dfbgn::SolveResult64,
    delta0: f64,
) -> std::io::Result<()> {
    use std::collections::HashMap;
    let iters: HashMap<usize, &IterRecord<f64>> =
        result.iter_history.iter().map(|it| (it.iter, it)).collect();
    let mut out = String::from("eval_index,iter,f_best,two_f_best,delta,rho,p_drop,wall_ms\n");
    for e in &result.eval_history {
        let (delta, rho, p_drop) = match iters.get(&e.iter) {
            Some(it) => (
                format!("{:.17e}", it.delta),
                it.rho.map(|r| format!("{r:.17e}")).unwrap_or_default(),
                it.p_drop.map(|p| p.to_string()).unwrap_or_default(),
            ),
            None => (format!("{delta0:.17e}"), String::new(), String::new()),
        };
        out.push_str(&format!(
            "{},{},{:.17e},{:.17e},{},{},{},{:.3}\n",
            e.index,
            e.iter,
            e.f_best,
            2.0 * e.f_best,
            delta,
            rho,
            p_drop,
            e.wall_ms
        ));
    }
    std::fs::write(path, out)
}

fn bench(args: BenchArgs) -> i32 {
    let problems = if args.collection == "cr-small" || args.collection == "cr-desk" {
        match collection(&args.collection) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("error: {e}");
                return 2;
            }
        }
    } else {
        match read_custom_collection(&PathBuf::from(&args.collection)) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("error reading collection {}: {e}", args.collection);
                return 2;
            }
        }
    };

    let spec_text = match std::fs::read_to_string(&args.solvers) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error reading {}: {e}", args.solvers.display());
            return 2;
        }
    };
    let mut solvers = Vec::new();
    for line in spec_text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        match SolverSpec::parse(line) {
            Ok(s) => solvers.push(s),
            Err(e) => {
                eprintln!("error in solver spec `{line}`: {e}");
                return 2;
            }
        }
    }

    let taus: Vec<f64> = match args
        .tau
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<Result<Vec<_>, _>>()
    {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error parsing --tau: {e}");
            return 2;
        }
    };

    let campaign = CampaignConfig {
        seeds: (0..args.seeds).collect(),
        budget_gradients: args.budget_gradients,
        runtime_cap: args.runtime_cap_sec.map(Duration::from_secs),
        taus: taus.clone(),
        jobs: args.jobs,
    };

    let records = match run_campaign(&problems, &solvers, &campaign) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };

    if let Err(e) = std::fs::create_dir_all(&args.out_dir) {
        eprintln!("error creating {}: {e}", args.out_dir.display());
        return 1;
    }
    let runs_path = args.out_dir.join("runs.csv");
    let data_path = args.out_dir.join("data_profile.csv");
    let perf_path = args.out_dir.join("perf_profile.csv");
    let result = write_runs_csv(&records, &runs_path)
        .and_then(|_| {
            write_profile_csv(
                &records,
                &taus,
                &bench::default_data_alphas(),
                TraceKey::Evaluations,
                ProfileKind::Data,
                &data_path,
            )
        })
        .and_then(|_| {
            write_profile_csv(
                &records,
                &taus,
                &bench::default_perf_alphas(),
                TraceKey::Evaluations,
                ProfileKind::Performance,
                &perf_path,
            )
        })
        .and_then(|_| {
            if args.runtime_profiles {
                write_profile_csv(
                    &records,
                    &taus,
                    &bench::default_data_alphas(),
                    TraceKey::WallMs,
                    ProfileKind::Data,
                    &args.out_dir.join("data_profile_runtime.csv"),
                )?;
                write_profile_csv(
                    &records,
                    &taus,
                    &bench::default_perf_alphas(),
                    TraceKey::WallMs,
                    ProfileKind::Performance,
                    &args.out_dir.join("perf_profile_runtime.csv"),
                )?;
            }
            Ok(())
        });
    if let Err(e) = result {
        eprintln!("error writing outputs: {e}");
        return 1;
    }

    let solved = records.iter().filter(|r| r.status.is_some()).count();
    println!(
        "{} runs ({} completed, {} crashed); outputs in {}",
        records.len(),
        solved,
        records.len() - solved,
        args.out_dir.display()
    );
    0
}

fn read_custom_collection(path: &PathBuf) -> std::io::Result<Vec<(String, usize)>> {
    let text = std::fs::read_to_string(path)?;
    let mut out = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with("name") {
            continue;
        }
        let mut parts = line.split(',');
        let name = parts.next().unwrap_or_default().trim().to_string();
        let dim: usize = parts
            .next()
            .unwrap_or_default()
            .trim()
            .parse()
            .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, format!("{e}")))?;
        out.push((name, dim));
    }
    Ok(out)
}
