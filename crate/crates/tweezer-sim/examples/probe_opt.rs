use std::time::Instant;
use tweezer_sim::search::{optimize_transport, SimplexOptions};
use tweezer_sim::transport::TransportProblem;
use tweezer_sim::units::UnitSystem;

fn main() {
    let units = UnitSystem::rb87_1064();
    let problem = TransportProblem::with_resolution(50.0, 500.0, 0.0, 1.0, 0.5, 128, 1.0).unwrap();
    let duration = units.time_from_si(25e-6);

    for (k, budget, restarts) in [
        (2usize, 80usize, 1usize),
        (2, 200, 2),
        (3, 250, 2),
        (5, 400, 3),
        (5, 800, 3),
    ] {
        let options = SimplexOptions {
            max_evaluations: budget,
            restarts,
            ..SimplexOptions::default()
        };
        let start = Instant::now();
        let opt = optimize_transport(&problem, duration, k, &options, false).unwrap();
        println!(
            "K={k} budget={budget} restarts={restarts}: baseline {:.3e} -> {:.3e} ({} evals, converged {}, {:.2?})",
            opt.baseline,
            opt.result.objective,
            opt.result.evaluations,
            opt.result.converged,
            start.elapsed()
        );
        println!("  best = {:?}", opt.result.best);
    }
}
