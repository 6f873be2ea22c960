use dfbgn::problems::registry_lookup;
use dfbgn::solver::{dfbgn_solve, rsdfo_gn_solve, SolverConfig};
use dfbgn::subspace::SketchKind;

fn main() {
    // Criterion 6 shape: rosenbrock n=10, p=n, budget 100(n+1), 10 seeds.
    let problem = registry_lookup::<f64>("rosenbrock", 10).unwrap();
    let f0 = problem.objective_at(problem.x0()).unwrap().f;
    for seed in 0..10u64 {
        let cfg: SolverConfig<f64> = SolverConfig::new(10).with_seed(seed).with_budget(100 * 11);
        let res = dfbgn_solve(&problem, &cfg).unwrap();
        let norm = res.f_best / f0;
        println!(
            "dfbgn rosen n=10 seed={seed}: status={} evals={} iters={} f_best={:.3e} normalized={:.3e}",
            res.status, res.evals, res.iterations, res.f_best, norm
        );
    }
    // p = n/2 check on broydn3d n=100
    let problem = registry_lookup::<f64>("broydn3d", 100).unwrap();
    let f0 = problem.objective_at(problem.x0()).unwrap().f;
    for seed in 0..3u64 {
        let cfg: SolverConfig<f64> = SolverConfig::new(20).with_seed(seed).with_budget(100 * 101);
        let res = dfbgn_solve(&problem, &cfg).unwrap();
        println!(
            "dfbgn broydn3d n=100 p=20 seed={seed}: status={} evals={} normalized={:.3e}",
            res.status, res.evals, res.f_best / f0
        );
    }
    // rsdfo-gn on broydn3d n=100 p=20
    for seed in 0..5u64 {
        let cfg: SolverConfig<f64> = SolverConfig::new(20).with_seed(seed).with_budget(100 * 101);
        let res = rsdfo_gn_solve(&problem, &cfg, SketchKind::Orthonormal).unwrap();
        println!(
            "rsdfo broydn3d n=100 p=20 seed={seed}: status={} evals={} iters={} normalized={:.3e}",
            res.status, res.evals, res.iterations, res.f_best / f0
        );
    }
    // rsdfo-gn exactness on a linear problem p=n
    let problem = registry_lookup::<f64>("vardimne", 8).unwrap();
    let cfg: SolverConfig<f64> = SolverConfig::new(8).with_seed(1).with_budget(2000);
    let res = rsdfo_gn_solve(&problem, &cfg, SketchKind::Orthonormal).unwrap();
    println!("rsdfo vardimne n=8 p=8: status={} evals={} f_best={:.3e}", res.status, res.evals, res.f_best);
    // stationary start: vardimne at the optimum
    let x_opt = dfbgn::Vector::<f64>::from_element(8, 1.0);
    println!("vardimne f(ones) = {:?}", problem.objective_at(&x_opt).unwrap().f);
}
