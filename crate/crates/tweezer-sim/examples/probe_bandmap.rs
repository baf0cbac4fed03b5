use tweezer_sim::bandmap::BandMapProblem;
use tweezer_sim::controls::{BandMapSpec, ErrorInjection};
use tweezer_sim::units::UnitSystem;

fn main() {
    let units = UnitSystem::rb87_1064();
    let duration = units.time_from_si(75e-6);
    let spec = BandMapSpec::reference(duration);
    let t0 = std::time::Instant::now();
    let problem = BandMapProblem::new(&spec, 50.0, ErrorInjection::none()).unwrap();
    println!("setup: {:?}  dt={:.6e}  steps~{}", t0.elapsed(), problem.time_step(), (duration/problem.time_step()).ceil());
    println!("grid: [{}, {}] x {}", problem.grid().x_min(), problem.grid().x_max(), problem.grid().n_points());
    let t1 = std::time::Instant::now();
    let out = problem.run(&[], &[], 0).unwrap();
    println!("one run: {:?}", t1.elapsed());
    println!("F_trans={:.6}  F_stat={:.6}  F={:.6}  1-F={:.3e}",
        out.fidelity_transported, out.fidelity_stationary, out.fidelity, 1.0-out.fidelity);
    println!("node count final: {}", out.final_node_count(1.0));
}
