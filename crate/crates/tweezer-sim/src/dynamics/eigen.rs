//! Stationary states of a static potential on a grid: finite-difference
//! Hamiltonian (second-order central stencil, hard-wall boundaries)
//! diagonalized by the shared tridiagonal machinery.

use super::grid::Grid;
use super::tridiagonal::SymTridiagonal;
use super::wavefunction::WaveFunction;
use crate::error::{Error, Result};
use crate::potentials::PotentialField;
use crate::units::UnitSystem;
use num_complex::Complex64;

/// One stationary state: energy in recoils and its wavefunction.
#[derive(Debug, Clone)]
pub struct EigenState {
    pub energy: f64,
    pub wave: WaveFunction,
}

/// The `n` lowest stationary states of a static potential, ascending in
/// energy, mutually orthogonal.
#[derive(Debug, Clone)]
pub struct EigenSet {
    states: Vec<EigenState>,
}

impl EigenSet {
    fn new(states: Vec<EigenState>) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::Numeric("eigen set cannot be empty".into()));
        }
        if !states.windows(2).all(|w| w[0].energy < w[1].energy) {
            return Err(Error::Numeric(
                "eigen energies are not strictly increasing; the requested states \
                 are degenerate beyond double precision"
                    .into(),
            ));
        }
        Ok(EigenSet { states })
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn state(&self, i: usize) -> &EigenState {
        &self.states[i]
    }

    pub fn states(&self) -> &[EigenState] {
        &self.states
    }

    pub fn ground(&self) -> &EigenState {
        &self.states[0]
    }

    pub fn energies(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.energy).collect()
    }

    /// P_e = 1 − |⟨φ_g|ψ⟩|²: population outside the ground state.
    pub fn excitation_probability(&self, psi: &WaveFunction) -> Result<f64> {
        Ok((1.0 - psi.overlap_fidelity(&self.ground().wave)?).max(0.0))
    }

    /// Index of the state with the largest |⟨φ_i|ψ⟩|², with that overlap.
    pub fn dominant_state(&self, psi: &WaveFunction) -> Result<(usize, f64)> {
        let mut best = (0usize, f64::NEG_INFINITY);
        for (i, s) in self.states.iter().enumerate() {
            let p = psi.overlap_fidelity(&s.wave)?;
            if p > best.1 {
                best = (i, p);
            }
        }
        Ok(best)
    }
}

/// P_e = 1 − |⟨φ_g|ψ⟩|² against the ground state of `reference`.
pub fn excitation_probability(psi: &WaveFunction, reference: &EigenSet) -> Result<f64> {
    reference.excitation_probability(psi)
}

/// The `n` lowest eigenpairs of −(1/π²)∂²/∂x² + V on `grid`, from
/// potential samples `v` (one per grid point).
pub fn stationary_states_from_samples(v: &[f64], grid: &Grid, n: usize) -> Result<EigenSet> {
    let npts = grid.n_points();
    if v.len() != npts {
        return Err(Error::GridMismatch(format!(
            "{} potential samples for a {npts}-point grid",
            v.len()
        )));
    }
    if n == 0 || n >= npts / 4 {
        return Err(Error::Domain(format!(
            "requested {n} states on a {npts}-point grid; need 1 ≤ n ≪ n_points"
        )));
    }
    let c = UnitSystem::rb87_1064().kinetic_coefficient();
    let dx = grid.dx();
    let hop = c / (dx * dx);
    let diag: Vec<f64> = v.iter().map(|vi| 2.0 * hop + vi).collect();
    let off = vec![-hop; npts - 1];
    let t = SymTridiagonal::new(diag, off)?;

    let mut vectors: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut states = Vec::with_capacity(n);
    for k in 0..n {
        let energy = t.eigenvalue(k)?;
        let vector = t.eigenvector(energy, &vectors)?;
        // Unit 2-norm vector → unit L² norm wavefunction via 1/√dx.
        let scale = 1.0 / dx.sqrt();
        let data = vector
            .iter()
            .map(|&x| Complex64::new(x * scale, 0.0))
            .collect();
        vectors.push(vector);
        states.push(EigenState {
            energy,
            wave: WaveFunction::new(*grid, data)?,
        });
    }
    EigenSet::new(states)
}

/// The `n` lowest stationary states of a static `field` on `grid`.
pub fn stationary_states(field: &PotentialField, grid: &Grid, n: usize) -> Result<EigenSet> {
    if field.is_time_dependent() {
        return Err(Error::Domain(
            "stationary states need a static potential; freeze the field at a time first"
                .into(),
        ));
    }
    let mut v = vec![0.0; grid.n_points()];
    field.sample_uniform(grid.x_min(), grid.dx(), 0.0, &mut v);
    stationary_states_from_samples(&v, grid, n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harmonic;
    use crate::potentials::{LatticeSpec, PotentialTerm, TweezerSpec};
    use crate::units::UnitSystem;
    use approx::assert_relative_eq;

    fn harmonic_samples(grid: &Grid, omega: f64) -> Vec<f64> {
        let m = UnitSystem::rb87_1064().internal_mass();
        (0..grid.n_points())
            .map(|i| {
                let x = grid.point(i);
                0.5 * m * omega * omega * x * x
            })
            .collect()
    }

    #[test]
    fn harmonic_spectrum_matches_analytic_after_richardson() {
        // Second-order stencil: E(dx) = E + a·dx²; Richardson across a
        // resolution doubling removes the leading error.
        let omega = 40.0;
        let coarse_grid = Grid::new(-8.0, 8.0, 4096).unwrap();
        let fine_grid = Grid::new(-8.0, 8.0, 8192).unwrap();
        let coarse =
            stationary_states_from_samples(&harmonic_samples(&coarse_grid, omega), &coarse_grid, 6)
                .unwrap();
        let fine =
            stationary_states_from_samples(&harmonic_samples(&fine_grid, omega), &fine_grid, 6)
                .unwrap();
        for n in 0..6 {
            let e = (4.0 * fine.state(n).energy - coarse.state(n).energy) / 3.0;
            let exact = (n as f64 + 0.5) * omega;
            assert_relative_eq!(e, exact, max_relative = 1e-6);
        }
    }

    #[test]
    fn lattice_site_gap_is_twice_the_trap_quantum_softened_by_anharmonicity() {
        // 50 E_r site: ground → second-excited gap ≈ 2ħω with ω = 2√V.  Two
        // independent routes agree on the size of the anharmonic softening:
        // hard walls at the barrier tops of a single site, and the band
        // centers of the infinite lattice.  Both give ~12% below 2ħω (the
        // leading sin⁴ perturbative estimate is 10.6%, so the softening
        // slightly exceeds a first-order guess).
        let grid = Grid::new(-0.5, 0.5, 512).unwrap();
        let field = PotentialField::new(vec![PotentialTerm::Lattice(
            LatticeSpec::new(50.0, 0.0).unwrap(),
        )]);
        let set = stationary_states(&field, &grid, 3).unwrap();
        let gap = set.state(2).energy - set.state(0).energy;

        let lattice = LatticeSpec::new(50.0, 0.0).unwrap();
        let bands = crate::dynamics::bloch::bloch_bands(&lattice, 64, 3).unwrap();
        let center = |b: usize| -> f64 {
            let v = &bands.bands[b];
            v.iter().sum::<f64>() / v.len() as f64
        };
        let band_gap = center(2) - center(0);
        assert_relative_eq!(gap, band_gap, max_relative = 5e-3);

        let harmonic_gap = 2.0 * harmonic::lattice_frequency(50.0);
        let softening = (harmonic_gap - gap) / harmonic_gap;
        assert!(
            (0.08..0.15).contains(&softening),
            "softening {softening:.4} (gap {gap:.3} vs harmonic {harmonic_gap:.3})"
        );
    }

    #[test]
    fn symmetric_double_well_has_a_split_doublet() {
        let grid = Grid::new(-8.0, 8.0, 4096).unwrap();
        let field = PotentialField::new(vec![
            PotentialTerm::Tweezer(TweezerSpec::new(40.0, -0.45, 0.5).unwrap()),
            PotentialTerm::Tweezer(TweezerSpec::new(40.0, 0.45, 0.5).unwrap()),
        ]);
        let set = stationary_states(&field, &grid, 2).unwrap();
        let splitting = set.state(1).energy - set.state(0).energy;
        assert!(splitting > 0.0);
        // Near-degenerate: far smaller than the on-site level spacing.
        let omega = harmonic::tweezer_frequency_sq(40.0, 0.5).sqrt();
        assert!(splitting < 0.2 * omega, "splitting {splitting:.3e} vs ω {omega:.3}");
    }

    #[test]
    fn eigenstates_are_orthonormal() {
        let grid = Grid::new(-8.0, 8.0, 2048).unwrap();
        let field = PotentialField::new(vec![PotentialTerm::Tweezer(
            TweezerSpec::new(500.0, 0.0, 0.5).unwrap(),
        )]);
        let set = stationary_states(&field, &grid, 5).unwrap();
        for i in 0..set.len() {
            for j in 0..set.len() {
                let ov = set
                    .state(i)
                    .wave
                    .inner(&set.state(j).wave)
                    .unwrap()
                    .norm();
                if i == j {
                    assert_relative_eq!(ov, 1.0, max_relative = 1e-10);
                } else {
                    assert!(ov < 1e-8, "⟨{i}|{j}⟩ = {ov:.3e}");
                }
            }
        }
        let e = set.energies();
        assert!(e.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn excitation_probability_brackets() {
        let grid = Grid::new(-8.0, 8.0, 2048).unwrap();
        let field = PotentialField::new(vec![PotentialTerm::Tweezer(
            TweezerSpec::new(500.0, 0.0, 0.5).unwrap(),
        )]);
        let set = stationary_states(&field, &grid, 3).unwrap();
        let pg = excitation_probability(&set.ground().wave, &set).unwrap();
        assert!(pg < 1e-12);
        let pe = excitation_probability(&set.state(1).wave, &set).unwrap();
        assert_relative_eq!(pe, 1.0, max_relative = 1e-8);
        let (idx, weight) = set.dominant_state(&set.state(1).wave).unwrap();
        assert_eq!(idx, 1);
        assert!(weight > 1.0 - 1e-8);
    }

    #[test]
    fn time_dependent_fields_are_rejected() {
        let grid = Grid::for_trajectory(0.0, 1.0).unwrap();
        let ramp = crate::controls::transport_ramp(1.0, 0.0, 1.0, 300.0, &[]).unwrap();
        let field = PotentialField::new(vec![PotentialTerm::DrivenTweezer {
            template: TweezerSpec::new(0.0, 0.0, 0.5).unwrap(),
            ramp,
        }]);
        assert!(stationary_states(&field, &grid, 2).is_err());
        let frozen = field.frozen_at(0.0);
        assert!(stationary_states(&frozen, &grid, 2).is_ok());
    }

    #[test]
    fn invalid_state_counts_are_rejected() {
        let grid = Grid::new(-8.0, 8.0, 2048).unwrap();
        let v = vec![0.0; grid.n_points()];
        assert!(stationary_states_from_samples(&v, &grid, 0).is_err());
        assert!(stationary_states_from_samples(&v, &grid, 1000).is_err());
        assert!(stationary_states_from_samples(&v[..100], &grid, 2).is_err());
    }
}
