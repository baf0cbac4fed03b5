//! Physical constants, species data and the lattice-recoil unit system.
//!
//! All simulation code works in lattice-recoil units: lengths in lattice
//! sites `a = λ/2`, energies in recoils `E_r = h²/(2mλ²)` and times in
//! `ħ/E_r`, where `λ` is the lattice wavelength and `m` the atomic mass.
//! In these units `ħ = 1` and the kinetic-energy prefactor `ħ²/2m` becomes
//! `1/π²` (equivalently the effective mass is `π²/2`), which is all the
//! propagator and eigensolvers need.  [`UnitSystem`] performs the SI
//! round trips at the boundaries.

use crate::error::{Error, Result};
use std::f64::consts::PI;

/// Planck constant, J·s (exact, 2019 SI).
pub const PLANCK: f64 = 6.626_070_15e-34;
/// Reduced Planck constant h/2π, J·s (exact given PLANCK, so the
/// h- and ħ-based routes through any formula agree bit-for-bit).
pub const HBAR: f64 = PLANCK / (2.0 * PI);
/// Speed of light, m/s (exact).
pub const SPEED_OF_LIGHT: f64 = 2.997_924_58e8;
/// Bohr magneton, J/T (CODATA 2018).
pub const BOHR_MAGNETON: f64 = 9.274_010_078_3e-24;
/// Unified atomic mass unit, kg (CODATA 2018).
pub const ATOMIC_MASS_UNIT: f64 = 1.660_539_066_60e-27;
/// Bohr radius, m (CODATA 2018).
pub const BOHR_RADIUS: f64 = 5.291_772_109_03e-11;
/// One gauss in tesla.
pub const GAUSS: f64 = 1e-4;

/// Particle mass in internal units (recoil energies, lattice-site lengths,
/// ħ = 1): m̃ = π²/2, the companion of the kinetic coefficient 1/π².
pub const INTERNAL_MASS: f64 = PI * PI / 2.0;

/// An atomic transition used by the two-line light-shift model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Line {
    /// Transition wavelength, m.
    pub wavelength: f64,
    /// Partial decay rate of the excited state back to the ground state
    /// along this transition, 1/s.
    pub linewidth: f64,
}

impl Line {
    /// Angular transition frequency ω = 2πc/λ, rad/s.
    pub fn angular_frequency(&self) -> f64 {
        2.0 * PI * SPEED_OF_LIGHT / self.wavelength
    }
}

/// Static atomic data for the simulated species (⁸⁷Rb).
#[derive(Debug, Clone, PartialEq)]
pub struct SpeciesData {
    /// Atomic mass, kg.
    pub mass: f64,
    /// Ground-state hyperfine splitting, Hz.
    pub hyperfine_splitting: f64,
    /// 5S₁/₂ → 6P₁/₂ line (tweezer wavelengths live between this pair).
    pub blue_line_j12: Line,
    /// 5S₁/₂ → 6P₃/₂ line.
    pub blue_line_j32: Line,
    /// D1 line (5S₁/₂ → 5P₁/₂), relevant for lattice-photon scattering.
    pub d1_line: Line,
    /// D2 line (5S₁/₂ → 5P₃/₂).
    pub d2_line: Line,
    /// Interspecies (↑↓) s-wave scattering length, m.
    pub scattering_length_cross: f64,
    /// U_↑↑/U_↑↓ = U_↓↓/U_↑↓ at the working magnetic field.
    pub interaction_ratio: f64,
    /// Working magnetic field for the merge gate, G.
    pub working_field_gauss: f64,
    /// Magic field where the clock pair is field-insensitive to second
    /// order, G.
    pub magic_field_gauss: f64,
}

impl SpeciesData {
    /// ⁸⁷Rb data set.
    ///
    /// Masses and D-line data follow Steck's ⁸⁷Rb compilation.  The
    /// 5S → 6P partial decay rates are derived from the reduced dipole
    /// matrix element ⟨5s‖d‖6p₃/₂⟩ = 0.541 ea₀ (Safronova et al.), which
    /// gives the J = 3/2 partial width 2.00 × 10⁶ s⁻¹; the J = 1/2 width
    /// is the common-radial-element (LS-coupling) companion
    /// Γ₁/₂ = Γ₃/₂ (ω₁/₂/ω₃/₂)³, so the standard two-line light-shift
    /// formula reproduces the measured spin-selective null at 420.86 nm
    /// between the lines.  The blue-line wavelengths are the vacuum
    /// values for the 421.6/420.2 nm doublet.  Scattering lengths:
    /// near-degenerate ⁸⁷Rb values with the intrastate/interstate ratio
    /// ≈ 0.9 that holds at the 9.12 G working field.
    pub fn rb87() -> Self {
        SpeciesData {
            mass: 86.909_180_526 * ATOMIC_MASS_UNIT,
            hyperfine_splitting: 6.834_682_610_904e9,
            blue_line_j12: Line {
                wavelength: 421.555e-9,
                linewidth: 2.00e6 * (420.1733f64 / 421.555).powi(3),
            },
            blue_line_j32: Line {
                wavelength: 420.1733e-9,
                linewidth: 2.00e6,
            },
            d1_line: Line {
                wavelength: 794.978_851e-9,
                linewidth: 3.6131e7,
            },
            d2_line: Line {
                wavelength: 780.241_21e-9,
                linewidth: 3.8117e7,
            },
            scattering_length_cross: 98.98 * BOHR_RADIUS,
            interaction_ratio: 0.9,
            working_field_gauss: 9.12,
            magic_field_gauss: 3.229,
        }
    }

    /// Intrastate scattering length a_↑↑ = a_↓↓ at the working field, m.
    pub fn scattering_length_same(&self) -> f64 {
        self.interaction_ratio * self.scattering_length_cross
    }
}

/// One hyperfine ground state |F, m_F⟩ of the 5S₁/₂ manifold.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HyperfineState {
    pub f: u8,
    pub m: i8,
}

impl HyperfineState {
    pub fn new(f: u8, m: i8) -> Result<Self> {
        if !(1..=2).contains(&f) || m.unsigned_abs() > f {
            return Err(Error::UnsupportedStates(format!(
                "|F={f}, m={m}⟩ is not a 5S₁/₂ hyperfine ground state"
            )));
        }
        Ok(HyperfineState { f, m })
    }

    /// Landé g-factor of the hyperfine level (g_F = ∓1/2 for F = 1, 2).
    pub fn g_f(&self) -> f64 {
        match self.f {
            1 => -0.5,
            _ => 0.5,
        }
    }

    /// Linear Zeeman energy slope g_F·m_F·μ_B, J/T.
    pub fn zeeman_slope(&self) -> f64 {
        self.g_f() * f64::from(self.m) * BOHR_MAGNETON
    }
}

impl std::fmt::Display for HyperfineState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "|F={}, m={:+}⟩", self.f, self.m)
    }
}

/// The qubit encodings used by the different gate primitives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QubitPair {
    /// ↑ = |2,−2⟩, ↓ = |1,−1⟩ — maximally field-sensitive, used for
    /// spin-dependent transport.
    FieldSensitive,
    /// ↑ = |1,+1⟩, ↓ = |2,−1⟩ — first-order insensitive pair used for the
    /// interaction-tuned merge gate.
    Merge,
    /// ↑ = |1,−1⟩, ↓ = |2,+1⟩ — clock pair with a magic field.
    Clock,
}

impl QubitPair {
    /// The two encoded states (↑, ↓).
    pub fn states(&self) -> (HyperfineState, HyperfineState) {
        match self {
            QubitPair::FieldSensitive => (
                HyperfineState { f: 2, m: -2 },
                HyperfineState { f: 1, m: -1 },
            ),
            QubitPair::Merge => (
                HyperfineState { f: 1, m: 1 },
                HyperfineState { f: 2, m: -1 },
            ),
            QubitPair::Clock => (
                HyperfineState { f: 1, m: -1 },
                HyperfineState { f: 2, m: 1 },
            ),
        }
    }

    /// Identify a pair from its two states, in either order.
    pub fn from_states(a: HyperfineState, b: HyperfineState) -> Result<Self> {
        for pair in [
            QubitPair::FieldSensitive,
            QubitPair::Merge,
            QubitPair::Clock,
        ] {
            let (up, down) = pair.states();
            if (a, b) == (up, down) || (a, b) == (down, up) {
                return Ok(pair);
            }
        }
        Err(Error::UnsupportedStates(format!(
            "no qubit encoding uses the pair {a}, {b}"
        )))
    }
}

/// Differential magnetic response of a qubit pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZeemanResponse {
    /// |d(ΔE)/dB|, J/T.
    pub energy_per_tesla: f64,
    /// Magic field (G) at which the pair is insensitive to second order;
    /// only present for pairs whose first-order response vanishes.
    pub magic_field_gauss: Option<f64>,
}

/// Differential Zeeman splitting rate d(ΔE)/dB of a qubit pair.
///
/// The field-sensitive transport pair responds with (3/2)μ_B; the merge and
/// clock pairs have equal g_F·m_F and no first-order response, and the clock
/// pair additionally carries the magic-field flag.
pub fn zeeman_splitting_rate(species: &SpeciesData, pair: QubitPair) -> ZeemanResponse {
    let (up, down) = pair.states();
    let slope = (up.zeeman_slope() - down.zeeman_slope()).abs();
    ZeemanResponse {
        energy_per_tesla: slope,
        magic_field_gauss: match pair {
            QubitPair::Clock => Some(species.magic_field_gauss),
            _ => None,
        },
    }
}

/// Photon recoil energy E_r = h²/(2mλ²) for wavelength `λ` (m) and mass
/// `m` (kg), in joules.
pub fn recoil_energy(wavelength: f64, mass: f64) -> Result<f64> {
    if !(wavelength > 0.0) || !(mass > 0.0) {
        return Err(Error::Domain(format!(
            "recoil energy needs positive wavelength and mass, got λ = {wavelength}, m = {mass}"
        )));
    }
    Ok(PLANCK * PLANCK / (2.0 * mass * wavelength * wavelength))
}

/// Lattice-recoil unit system for one species in one lattice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitSystem {
    /// Lattice wavelength, m.
    pub lattice_wavelength: f64,
    /// Atomic mass, kg.
    pub mass: f64,
    /// Length unit: one lattice site a = λ/2, m.
    pub length_unit: f64,
    /// Energy unit: one recoil E_r, J.
    pub energy_unit: f64,
    /// Time unit ħ/E_r, s.
    pub time_unit: f64,
}

impl UnitSystem {
    pub fn new(lattice_wavelength: f64, mass: f64) -> Result<Self> {
        let energy_unit = recoil_energy(lattice_wavelength, mass)?;
        Ok(UnitSystem {
            lattice_wavelength,
            mass,
            length_unit: 0.5 * lattice_wavelength,
            energy_unit,
            time_unit: HBAR / energy_unit,
        })
    }

    /// The default system: ⁸⁷Rb in a 1064 nm lattice (532 nm sites).
    pub fn rb87_1064() -> Self {
        UnitSystem::new(1064e-9, SpeciesData::rb87().mass)
            .expect("reference unit system is well-formed")
    }

    /// Kinetic-energy prefactor ħ²/2m in internal units: 1/π² exactly.
    ///
    /// Follows from E_r = π²ħ²/(2ma²) with a = λ/2.
    pub fn kinetic_coefficient(&self) -> f64 {
        1.0 / (PI * PI)
    }

    /// Effective mass in internal units, π²/2.
    pub fn internal_mass(&self) -> f64 {
        PI * PI / 2.0
    }

    // --- SI round trips -------------------------------------------------

    /// Meters → lattice sites.
    pub fn length_from_si(&self, meters: f64) -> f64 {
        meters / self.length_unit
    }

    /// Lattice sites → meters.
    pub fn length_to_si(&self, sites: f64) -> f64 {
        sites * self.length_unit
    }

    /// Joules → recoils.
    pub fn energy_from_si(&self, joules: f64) -> f64 {
        joules / self.energy_unit
    }

    /// Recoils → joules.
    pub fn energy_to_si(&self, recoils: f64) -> f64 {
        recoils * self.energy_unit
    }

    /// Recoils → ordinary frequency E/h, Hz.
    pub fn energy_to_hz(&self, recoils: f64) -> f64 {
        self.energy_to_si(recoils) / PLANCK
    }

    /// Seconds → internal time.
    pub fn time_from_si(&self, seconds: f64) -> f64 {
        seconds / self.time_unit
    }

    /// Internal time → seconds.
    pub fn time_to_si(&self, internal: f64) -> f64 {
        internal * self.time_unit
    }

    /// Angular frequency in rad/s → internal (E_r/ħ) units.
    pub fn angular_frequency_from_si(&self, rad_per_s: f64) -> f64 {
        rad_per_s * self.time_unit
    }

    /// Internal angular frequency → rad/s.
    pub fn angular_frequency_to_si(&self, internal: f64) -> f64 {
        internal / self.time_unit
    }

    /// Internal angular frequency → ordinary frequency ω/2π in Hz.
    pub fn angular_frequency_to_hz(&self, internal: f64) -> f64 {
        self.angular_frequency_to_si(internal) / (2.0 * PI)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn recoil_energy_of_rb87_in_1064nm_lattice() {
        let e_r = recoil_energy(1064e-9, SpeciesData::rb87().mass).unwrap();
        // Independent route: E_r = ħ²k² / 2m with k = 2π/λ.
        let k = 2.0 * PI / 1064e-9;
        let via_wavenumber = HBAR * HBAR * k * k / (2.0 * SpeciesData::rb87().mass);
        assert_relative_eq!(e_r, via_wavenumber, max_relative = 1e-12);
        // Known magnitude for this species/wavelength.
        assert_relative_eq!(e_r / PLANCK, 2027.8, max_relative = 1e-4);
        assert_relative_eq!(e_r / PLANCK, 2.03e3, max_relative = 5e-3);
    }

    #[test]
    fn recoil_energy_scales_as_inverse_square_wavelength_and_inverse_mass() {
        let m = SpeciesData::rb87().mass;
        let base = recoil_energy(1064e-9, m).unwrap();
        assert_relative_eq!(
            recoil_energy(2.0 * 1064e-9, m).unwrap(),
            base / 4.0,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            recoil_energy(1064e-9, 2.0 * m).unwrap(),
            base / 2.0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn recoil_energy_rejects_nonpositive_inputs() {
        assert!(recoil_energy(0.0, 1.0).is_err());
        assert!(recoil_energy(1e-6, -1.0).is_err());
        assert!(recoil_energy(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn time_unit_is_hbar_over_recoil() {
        let u = UnitSystem::rb87_1064();
        assert_relative_eq!(u.time_unit, 7.8486e-5, max_relative = 1e-4);
        // 11 μs, a typical ramp duration, is a fraction of the time unit.
        assert_relative_eq!(u.time_from_si(11e-6), 0.14015, max_relative = 1e-3);
    }

    #[test]
    fn kinetic_coefficient_matches_recoil_definition() {
        // E_r = π²ħ²/(2ma²) ⇒ ħ²/(2ma²) = E_r/π².
        let u = UnitSystem::rb87_1064();
        let a = u.length_unit;
        let si = HBAR * HBAR / (2.0 * u.mass * a * a);
        assert_relative_eq!(si / u.energy_unit, u.kinetic_coefficient(), max_relative = 1e-12);
        assert_relative_eq!(u.internal_mass() * u.kinetic_coefficient(), 0.5, max_relative = 1e-15);
    }

    #[test]
    fn zeeman_rate_of_field_sensitive_pair_is_three_halves_bohr_magneton() {
        let species = SpeciesData::rb87();
        let resp = zeeman_splitting_rate(&species, QubitPair::FieldSensitive);
        assert_relative_eq!(resp.energy_per_tesla, 1.5 * BOHR_MAGNETON, max_relative = 1e-12);
        assert!(resp.magic_field_gauss.is_none());
        // ΔE/h at 1 mG ≈ 2.1 kHz, at 1 G ≈ 2.1 MHz.
        let hz_per_mg = resp.energy_per_tesla * 1e-3 * GAUSS / PLANCK;
        assert_relative_eq!(hz_per_mg, 2.1e3, max_relative = 5e-3);
        let hz_per_g = resp.energy_per_tesla * GAUSS / PLANCK;
        assert_relative_eq!(hz_per_g, 2.1e6, max_relative = 5e-3);
    }

    #[test]
    fn clock_and_merge_pairs_have_no_first_order_response() {
        let species = SpeciesData::rb87();
        let clock = zeeman_splitting_rate(&species, QubitPair::Clock);
        assert_eq!(clock.energy_per_tesla, 0.0);
        assert_eq!(clock.magic_field_gauss, Some(3.229));
        let merge = zeeman_splitting_rate(&species, QubitPair::Merge);
        assert_eq!(merge.energy_per_tesla, 0.0);
        assert!(merge.magic_field_gauss.is_none());
    }

    #[test]
    fn qubit_pairs_round_trip_through_their_states() {
        for pair in [
            QubitPair::FieldSensitive,
            QubitPair::Merge,
            QubitPair::Clock,
        ] {
            let (up, down) = pair.states();
            assert_eq!(QubitPair::from_states(up, down).unwrap(), pair);
            assert_eq!(QubitPair::from_states(down, up).unwrap(), pair);
        }
    }

    #[test]
    fn unknown_state_pairs_are_rejected() {
        let a = HyperfineState::new(2, 2).unwrap();
        let b = HyperfineState::new(1, 0).unwrap();
        assert!(matches!(
            QubitPair::from_states(a, b),
            Err(Error::UnsupportedStates(_))
        ));
        assert!(HyperfineState::new(3, 0).is_err());
        assert!(HyperfineState::new(1, 2).is_err());
    }

    #[test]
    fn interaction_ratio_lies_between_zero_and_one() {
        let s = SpeciesData::rb87();
        assert!(s.interaction_ratio > 0.0 && s.interaction_ratio < 1.0);
        assert!(s.scattering_length_same() < s.scattering_length_cross);
    }

    #[test]
    fn blue_doublet_ordering_and_linewidth_magnitudes() {
        let s = SpeciesData::rb87();
        assert!(s.blue_line_j32.wavelength < s.blue_line_j12.wavelength);
        // Weak secondary lines: partial widths around 2π × 0.24–0.32 MHz.
        assert!(s.blue_line_j12.linewidth > 1e6 && s.blue_line_j12.linewidth < 3e6);
        assert!(s.blue_line_j32.linewidth > 1e6 && s.blue_line_j32.linewidth < 3e6);
        // D lines are ~20× stronger.
        assert!(s.d2_line.linewidth > 3e7);
    }

    proptest! {
        #[test]
        fn si_round_trips_are_exact_to_1e12(
            x in -1e6f64..1e6,
            scale in prop::sample::select(vec![1e-9, 1e-6, 1e-3, 1.0, 1e3])
        ) {
            let u = UnitSystem::rb87_1064();
            let v = x * scale;
            let len = u.length_to_si(u.length_from_si(v));
            let en = u.energy_to_si(u.energy_from_si(v));
            let ti = u.time_to_si(u.time_from_si(v));
            prop_assert!((len - v).abs() <= 1e-12 * v.abs().max(1e-300));
            prop_assert!((en - v).abs() <= 1e-12 * v.abs().max(1e-300));
            prop_assert!((ti - v).abs() <= 1e-12 * v.abs().max(1e-300));
        }
    }
}
