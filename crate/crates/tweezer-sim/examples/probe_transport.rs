use tweezer_sim::harmonic;
use tweezer_sim::transport::{RampUpProblem, TransportProblem};
const SEED_DEPTH: f64 = 0.5;
use tweezer_sim::units::{UnitSystem, INTERNAL_MASS};

fn main() {
    let units = UnitSystem::rb87_1064();
    let problem = TransportProblem::with_resolution(50.0, 500.0, 0.0, 1.0, 0.5, 128, 1.0).unwrap();

    println!("== lattice transport P_e(T), 50 Er + 500 Er ==");
    for us in [8.0, 11.0, 12.8, 16.0, 19.2, 23.0, 25.0, 25.6, 28.0, 115.0, 120.0, 122.0, 125.0, 128.0] {
        let t = units.time_from_si(us * 1e-6);
        let p = problem.run(t, &[]).unwrap();
        println!("T = {us:7.1} us  P_e = {p:.4e}");
    }

    println!("== repeated hops at 25 us ==");
    let t = units.time_from_si(25e-6);
    match problem.repeated_hops(t, &[], 6) {
        Ok(errors) => {
            for (i, e) in errors.iter().enumerate() {
                println!("hop {}  P_e = {e:.4e}", i + 1);
            }
        }
        Err(e) => println!("ERROR: {e}"),
    }

    println!("== lattice-free envelope check ==");
    let free = TransportProblem::with_resolution(0.0, 500.0, 0.0, 1.0, 0.5, 128, 1.0).unwrap();
    let omega = free.trap_frequency();
    let sigma = 1.0 / (INTERNAL_MASS * omega).sqrt();
    // Pick T so xi = d/(sqrt(2) sigma omega T) ~ 0.05, then scan one period.
    let t0 = 1.0 / (0.05 * std::f64::consts::SQRT_2 * sigma * omega);
    println!("omega = {omega:.4}  sigma = {sigma:.4}  T0 = {t0:.4} ({:.1} us)", units.time_to_si(t0) * 1e6);
    let period = 2.0 * std::f64::consts::PI / omega;
    let mut max_p: f64 = 0.0;
    for k in 0..8 {
        let t = t0 + period * (k as f64) / 8.0;
        let p = free.run(t, &[]).unwrap();
        let xi = 1.0 / (std::f64::consts::SQRT_2 * sigma * omega * t);
        let analytic = free.harmonic_excitation(t);
        println!(
            "T = {t:.4}  xi = {xi:.4}  numeric = {p:.4e}  analytic(t) = {analytic:.4e}  env = {:.4e}",
            harmonic::envelope_excitation(xi)
        );
        max_p = max_p.max(p);
    }
    let xi0 = 1.0 / (std::f64::consts::SQRT_2 * sigma * omega * (t0 + period / 2.0));
    println!(
        "max numeric = {max_p:.4e}  envelope(mid) = {:.4e}  ratio = {:.3}",
        harmonic::envelope_excitation(xi0),
        max_p / harmonic::envelope_excitation(xi0)
    );

    println!("== seed variance ==");
    let ramp = RampUpProblem::with_resolution(50.0, 500.0, 0.5, 128, 1.0).unwrap();
    let var = ramp.initial().position_variance();
    let omega_seed = (harmonic::lattice_frequency(50.0).powi(2)
        + harmonic::tweezer_frequency_sq(SEED_DEPTH, 0.5))
    .sqrt();
    let sigma_sq = 1.0 / (INTERNAL_MASS * omega_seed);
    println!("measured var = {var:.6e}  harmonic = {sigma_sq:.6e}  ratio = {:.4}", var / sigma_sq);
}
