//! Re-run the 100-hop chain at doubled spatial resolution and halved time
//! step to check that the multi-hop interference pattern is converged.

use tweezer_sim::dynamics::{propagate, stationary_states, PropagationOptions};
use tweezer_sim::potentials::{LatticeSpec, PotentialField, PotentialTerm, TweezerSpec};
use tweezer_sim::search::{find_block, read_blocks};
use tweezer_sim::transport::TransportProblem;
use tweezer_sim::units::UnitSystem;

const TAU: f64 = std::f64::consts::TAU;

fn main() -> tweezer_sim::Result<()> {
    let units = UnitSystem::rb87_1064();
    let blocks = read_blocks(std::path::Path::new("/tmp/smoke-ot/transport-optimum.txt"))?;
    let block = find_block(&blocks, "transport-optimum").expect("persisted optimum");
    let coeffs = block.f64s("coefficients")?;
    let duration = units.time_from_si(block.f64("duration_s")?);

    for (pps, step) in [(256usize, 1.0f64), (512, 0.5), (1024, 0.25)] {
        let problem = TransportProblem::with_resolution(50.0, 500.0, 0.0, 1.0, 0.5, pps, step)?;
        let start = std::time::Instant::now();
        let errors = problem.repeated_hops(duration, &coeffs, 100)?;
        let single = errors[0];
        let (worst_n, worst) = errors
            .iter()
            .enumerate()
            .map(|(i, &p)| (i + 1, p))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        println!(
            "pps {pps} step {step}: single {:.4e}, worst {:.4e} at n={} ({:.2}x), {:.1} s",
            single,
            worst,
            worst_n,
            worst / single,
            start.elapsed().as_secs_f64()
        );
        let peaks: Vec<usize> = (1..99)
            .filter(|&i| errors[i] > errors[i - 1] && errors[i] > errors[i + 1])
            .map(|i| i + 1)
            .collect();
        println!("  local maxima at n = {:?}", peaks);

        // The per-cycle Floquet phase of the lowest excited modes at this
        // resolution, straight from the one-cycle propagator.
        let grid = problem.grid().clone();
        let static_field = PotentialField::new(vec![
            PotentialTerm::Lattice(LatticeSpec::new(50.0, 0.0)?),
            PotentialTerm::Tweezer(TweezerSpec::new(500.0, 0.0, 0.5)?),
        ]);
        let modes = stationary_states(&static_field, &grid, 4)?;
        let ramp = tweezer_sim::controls::transport_ramp(duration, 0.0, 1.0, 500.0, &coeffs)?;
        let driven = PotentialField::new(vec![
            PotentialTerm::Lattice(LatticeSpec::new(50.0, 0.0)?),
            PotentialTerm::DrivenTweezer {
                template: TweezerSpec::new(500.0, 0.0, 0.5)?,
                ramp,
            },
        ]);
        let dt = step * tweezer_sim::dynamics::default_time_step(&driven).unwrap();
        let options = PropagationOptions { dt: Some(dt), frames: 0 };
        let mut theta = Vec::new();
        for i in 0..4 {
            let prop = propagate(&modes.state(i).wave, &driven, duration, options)?;
            let mut out = prop.final_state;
            out.roll_sites(-1)?;
            theta.push(modes.state(i).wave.inner(&out)?.arg());
        }
        for i in 1..4 {
            let mut phi = (theta[0] - theta[i]) % TAU;
            if phi < 0.0 {
                phi += TAU;
            }
            let eff = phi.min(TAU - phi);
            println!(
                "  mode {i}: Floquet phase {phi:.4} rad (distance to resonance {eff:.4}), gain {:.0}",
                1.0 / (0.5 * phi).sin().powi(2)
            );
        }
    }
    Ok(())
}
