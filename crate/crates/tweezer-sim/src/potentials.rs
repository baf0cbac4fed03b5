//! Optical potentials: the standing-wave lattice, Gaussian tweezers, and
//! the hyperfine-state-resolved light shift behind spin-dependent traps.
//!
//! Internally a potential is a sum of [`PotentialTerm`]s evaluated on the
//! 1D lattice axis in lattice-recoil units (positions in sites, depths in
//! E_r).  The light-shift routines work in SI and answer two questions:
//! what potential a given tweezer beam exerts on a given hyperfine state,
//! and at which wavelength a state's shift vanishes (the spin-selective
//! "null" used to address one qubit state only).

use crate::controls::ControlRamp;
use crate::error::{Error, Result};
use crate::units::{HyperfineState, Line, SpeciesData, SPEED_OF_LIGHT};
use std::f64::consts::PI;

/// Detuning magnitudes below `RESONANCE_GUARD × Γ` are rejected: the
/// rotating-wave dispersive formula is meaningless that close to a line.
pub const RESONANCE_GUARD: f64 = 1e4;

/// Standing-wave lattice `V sin²(π(x − origin))` with `x` in sites.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeSpec {
    /// Lattice depth, E_r.
    pub depth: f64,
    /// Position of a potential minimum, sites.
    pub origin: f64,
}

impl LatticeSpec {
    pub fn new(depth: f64, origin: f64) -> Result<Self> {
        if !(depth >= 0.0) {
            return Err(Error::Domain(format!(
                "lattice depth must be non-negative, got {depth}"
            )));
        }
        Ok(LatticeSpec { depth, origin })
    }

    pub fn value(&self, x: f64) -> f64 {
        let s = (PI * (x - self.origin)).sin();
        self.depth * s * s
    }
}

/// Tweezer-beam polarization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Polarization {
    Linear,
    SigmaPlus,
    SigmaMinus,
}

impl Polarization {
    /// Circular-polarization weight P: 0 for linear, ±1 for σ±.
    pub fn weight(self) -> f64 {
        match self {
            Polarization::Linear => 0.0,
            Polarization::SigmaPlus => 1.0,
            Polarization::SigmaMinus => -1.0,
        }
    }
}

/// Gaussian tweezer `−V exp(−2(x − center)²/w²)` with `x`, `center`, and
/// waist `w` in sites and depth in E_r.
#[derive(Debug, Clone, PartialEq)]
pub struct TweezerSpec {
    /// Trap depth (positive = attractive), E_r.
    pub depth: f64,
    /// Beam center, sites.
    pub center: f64,
    /// 1/e² intensity waist, sites.
    pub waist: f64,
    /// Beam wavelength, m (used by the light-shift and scattering budgets).
    pub wavelength: f64,
    pub polarization: Polarization,
}

impl TweezerSpec {
    pub fn new(depth: f64, center: f64, waist: f64) -> Result<Self> {
        Self::with_beam(depth, center, waist, 851e-9, Polarization::Linear)
    }

    pub fn with_beam(
        depth: f64,
        center: f64,
        waist: f64,
        wavelength: f64,
        polarization: Polarization,
    ) -> Result<Self> {
        if !(waist > 0.0) {
            return Err(Error::Domain(format!(
                "tweezer waist must be positive, got {waist}"
            )));
        }
        if !(wavelength > 0.0) {
            return Err(Error::Domain(format!(
                "tweezer wavelength must be positive, got {wavelength}"
            )));
        }
        if !depth.is_finite() {
            return Err(Error::Domain(format!(
                "tweezer depth must be finite, got {depth}"
            )));
        }
        Ok(TweezerSpec {
            depth,
            center,
            waist,
            wavelength,
            polarization,
        })
    }

    pub fn value(&self, x: f64) -> f64 {
        let u = (x - self.center) / self.waist;
        -self.depth * (-2.0 * u * u).exp()
    }
}

/// One additive term of the total potential.
#[derive(Debug, Clone, PartialEq)]
pub enum PotentialTerm {
    Lattice(LatticeSpec),
    /// A static tweezer.
    Tweezer(TweezerSpec),
    /// A tweezer whose depth and center follow a control ramp; `template`
    /// supplies waist, wavelength and polarization.
    DrivenTweezer {
        template: TweezerSpec,
        ramp: ControlRamp,
    },
}

/// Beyond this many waists from a Gaussian's center the term is below
/// e^{−2·4.8²} ≈ 10⁻²⁰ of its depth and is treated as exactly zero when
/// sampling on uniform grids.
const GAUSSIAN_SUPPORT_WAISTS: f64 = 4.8;

fn gaussian_support(center: f64, waist: f64, x0: f64, dx: f64, n: usize) -> (usize, usize) {
    let reach = GAUSSIAN_SUPPORT_WAISTS * waist;
    let lo = ((center - reach - x0) / dx).floor().max(0.0) as usize;
    let hi = (((center + reach - x0) / dx).ceil().max(0.0) as usize + 1).min(n);
    (lo.min(n), hi)
}

fn add_gaussian(depth: f64, center: f64, waist: f64, x0: f64, dx: f64, out: &mut [f64]) {
    let (lo, hi) = gaussian_support(center, waist, x0, dx, out.len());
    for (i, o) in out[lo..hi].iter_mut().enumerate() {
        let u = (x0 + (lo + i) as f64 * dx - center) / waist;
        *o -= depth * (-2.0 * u * u).exp();
    }
}

impl PotentialTerm {
    pub fn value(&self, x: f64, t: f64) -> f64 {
        match self {
            PotentialTerm::Lattice(l) => l.value(x),
            PotentialTerm::Tweezer(tw) => tw.value(x),
            PotentialTerm::DrivenTweezer { template, ramp } => {
                let u = (x - ramp.position(t)) / template.waist;
                -ramp.depth(t) * (-2.0 * u * u).exp()
            }
        }
    }

    /// Add this term's values at `x_i = x0 + i·dx` onto `out`, skipping
    /// the negligible tails of Gaussian terms.
    pub fn add_to_uniform(&self, x0: f64, dx: f64, t: f64, out: &mut [f64]) {
        match self {
            PotentialTerm::Lattice(l) => {
                for (i, o) in out.iter_mut().enumerate() {
                    *o += l.value(x0 + i as f64 * dx);
                }
            }
            PotentialTerm::Tweezer(tw) => {
                add_gaussian(tw.depth, tw.center, tw.waist, x0, dx, out);
            }
            PotentialTerm::DrivenTweezer { template, ramp } => {
                add_gaussian(ramp.depth(t), ramp.position(t), template.waist, x0, dx, out);
            }
        }
    }

    /// Index range of `out` this term can touch at time `t` (entire grid
    /// for non-local terms).
    pub fn uniform_support(&self, x0: f64, dx: f64, n: usize, t: f64) -> (usize, usize) {
        match self {
            PotentialTerm::Lattice(_) => (0, n),
            PotentialTerm::Tweezer(tw) => gaussian_support(tw.center, tw.waist, x0, dx, n),
            PotentialTerm::DrivenTweezer { template, ramp } => {
                gaussian_support(ramp.position(t), template.waist, x0, dx, n)
            }
        }
    }

    pub fn is_time_dependent(&self) -> bool {
        matches!(self, PotentialTerm::DrivenTweezer { .. })
    }
}

/// A sum of potential terms, evaluated along the lattice axis.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PotentialField {
    pub terms: Vec<PotentialTerm>,
}

impl PotentialField {
    pub fn new(terms: Vec<PotentialTerm>) -> Self {
        PotentialField { terms }
    }

    pub fn value(&self, x: f64, t: f64) -> f64 {
        self.terms.iter().map(|term| term.value(x, t)).sum()
    }

    /// Evaluate the potential at time `t` on `xs` into `out`.
    pub fn sample_into(&self, xs: &[f64], t: f64, out: &mut [f64]) -> Result<()> {
        if xs.len() != out.len() {
            return Err(Error::GridMismatch(format!(
                "sample buffers disagree: {} positions vs {} outputs",
                xs.len(),
                out.len()
            )));
        }
        for (o, &x) in out.iter_mut().zip(xs) {
            *o = self.value(x, t);
        }
        Ok(())
    }

    /// Evaluate the potential at time `t` on the uniform grid
    /// `x_i = x0 + i·dx`, overwriting `out`.
    pub fn sample_uniform(&self, x0: f64, dx: f64, t: f64, out: &mut [f64]) {
        out.fill(0.0);
        for term in &self.terms {
            term.add_to_uniform(x0, dx, t, out);
        }
    }

    pub fn is_time_dependent(&self) -> bool {
        self.terms.iter().any(PotentialTerm::is_time_dependent)
    }

    /// Split into the static terms and the driven (time-dependent) terms.
    pub fn split_static(&self) -> (PotentialField, PotentialField) {
        let (driven, fixed) = self
            .terms
            .iter()
            .cloned()
            .partition(PotentialTerm::is_time_dependent);
        (PotentialField::new(fixed), PotentialField::new(driven))
    }

    /// The potential frozen at time `t`: driven tweezers become static.
    pub fn frozen_at(&self, t: f64) -> PotentialField {
        let terms = self
            .terms
            .iter()
            .map(|term| match term {
                PotentialTerm::DrivenTweezer { template, ramp } => {
                    let mut tw = template.clone();
                    tw.depth = ramp.depth(t);
                    tw.center = ramp.position(t);
                    PotentialTerm::Tweezer(tw)
                }
                other => other.clone(),
            })
            .collect();
        PotentialField::new(terms)
    }
}

/// Harmonic trap frequency ω = √(V″/m̃) (internal units, m̃ = π²/2) at a
/// presumed potential minimum `x0` of the field frozen at time `t`.
///
/// The curvature comes from a five-point central stencil with spacing
/// 1e-3 sites.  Fails if the point is not a genuine minimum: non-positive
/// curvature, or a residual slope beyond 10⁻³ of the curvature scale.
pub fn trap_frequency(field: &PotentialField, x0: f64, t: f64) -> Result<f64> {
    const H: f64 = 1e-3;
    let f = |x: f64| field.value(x, t);
    let (fm2, fm1, f0, fp1, fp2) = (
        f(x0 - 2.0 * H),
        f(x0 - H),
        f(x0),
        f(x0 + H),
        f(x0 + 2.0 * H),
    );
    let second = (-fm2 + 16.0 * fm1 - 30.0 * f0 + 16.0 * fp1 - fp2) / (12.0 * H * H);
    let first = (fm2 - 8.0 * fm1 + 8.0 * fp1 - fp2) / (12.0 * H);
    if !(second > 0.0) {
        return Err(Error::Geometry(format!(
            "no confining curvature at x = {x0}: V'' = {second:.6e}"
        )));
    }
    if first.abs() > 1e-3 * second.abs() * H.max(1.0) {
        // Slope scaled against curvature×length keeps the check unit-consistent.
        if first.abs() > 1e-3 * second.abs() {
            return Err(Error::Geometry(format!(
                "x = {x0} is not a stationary point: |V'| = {:.3e} vs V'' = {:.3e}",
                first.abs(),
                second
            )));
        }
    }
    let effective_mass = PI * PI / 2.0;
    Ok((second / effective_mass).sqrt())
}

/// One dipole-coupled transition as seen from a specific hyperfine state:
/// transition angular frequency (hyperfine-corrected), linewidth, and the
/// polarization-dependent relative strength.
#[derive(Debug, Clone, Copy)]
pub struct CoupledLine {
    pub omega: f64,
    pub linewidth: f64,
    /// Relative line strength; the two fine-structure lines carry
    /// (2 + P g_F m_F) and (1 − P g_F m_F) out of a total of 3.
    pub strength: f64,
}

/// The two blue fine-structure lines coupled to `state` by a beam of
/// polarization `pol`, with the hyperfine offset applied: F = 2 ground
/// states sit above F = 1 by the ground-state splitting, so their optical
/// transition frequencies are smaller by ω_hfs (line positions are
/// referenced to the F = 1 manifold).
pub fn coupled_lines(
    species: &SpeciesData,
    state: HyperfineState,
    pol: Polarization,
) -> Result<[CoupledLine; 2]> {
    Ok(coupled_pair(
        species,
        state,
        pol,
        &species.blue_line_j32,
        &species.blue_line_j12,
    ))
}

/// Same fine-structure coupling pattern for the D lines (the pair a
/// 1064 nm lattice photon scatters off).
pub fn coupled_d_lines(
    species: &SpeciesData,
    state: HyperfineState,
    pol: Polarization,
) -> Result<[CoupledLine; 2]> {
    Ok(coupled_pair(
        species,
        state,
        pol,
        &species.d2_line,
        &species.d1_line,
    ))
}

/// J = 3/2 / J = 1/2 doublet with strengths (2 + P g_F m_F, 1 − P g_F m_F)
/// and the ground-state hyperfine offset applied.
fn coupled_pair(
    species: &SpeciesData,
    state: HyperfineState,
    pol: Polarization,
    j32: &Line,
    j12: &Line,
) -> [CoupledLine; 2] {
    let p = pol.weight();
    let gfmf = state.g_f() * state.m as f64;
    let hfs_shift = if state.f == 2 {
        2.0 * PI * species.hyperfine_splitting
    } else {
        0.0
    };
    let make = |line: &Line, strength: f64| CoupledLine {
        omega: line.angular_frequency() - hfs_shift,
        linewidth: line.linewidth,
        strength,
    };
    [make(j32, 2.0 + p * gfmf), make(j12, 1.0 - p * gfmf)]
}

/// Ground-state light shift of `state` in a beam of wavelength
/// `wavelength` (m), polarization `pol`, and intensity `intensity`
/// (W/m²).  Returns the shift in joules (negative = attractive).
///
/// Dispersive two-line formula:
///   U = (π c²/2) Σᵢ (Γᵢ/ωᵢ³) sᵢ/Δᵢ · I,
/// with line strengths s₁ = 2 + P g_F m_F (J = 3/2) and
/// s₂ = 1 − P g_F m_F (J = 1/2), detunings Δᵢ = ω_beam − ωᵢ.
pub fn light_shift(
    species: &SpeciesData,
    wavelength: f64,
    pol: Polarization,
    state: HyperfineState,
    intensity: f64,
) -> Result<f64> {
    if !(wavelength > 0.0) {
        return Err(Error::Domain(format!(
            "beam wavelength must be positive, got {wavelength}"
        )));
    }
    let omega_beam = 2.0 * PI * SPEED_OF_LIGHT / wavelength;
    let lines = coupled_lines(species, state, pol)?;
    let mut shift = 0.0;
    for line in &lines {
        let detuning = omega_beam - line.omega;
        if detuning.abs() < RESONANCE_GUARD * line.linewidth {
            return Err(Error::Resonance(format!(
                "beam at {:.4} nm is within {RESONANCE_GUARD}×Γ of a transition \
                 (|Δ| = {:.3e} rad/s, Γ = {:.3e} rad/s)",
                wavelength * 1e9,
                detuning.abs(),
                line.linewidth
            )));
        }
        shift += PI * SPEED_OF_LIGHT * SPEED_OF_LIGHT / 2.0 * line.linewidth
            / line.omega.powi(3)
            * line.strength
            / detuning
            * intensity;
    }
    Ok(shift)
}

/// Differential and total light shifts of a qubit pair in the same beam.
#[derive(Debug, Clone, Copy)]
pub struct DifferentialShift {
    pub shift_up: f64,
    pub shift_down: f64,
}

impl DifferentialShift {
    pub fn differential(&self) -> f64 {
        self.shift_up - self.shift_down
    }

    pub fn mean_magnitude(&self) -> f64 {
        0.5 * (self.shift_up.abs() + self.shift_down.abs())
    }
}

/// Light shifts of both states of a pair in one beam.
pub fn pair_light_shift(
    species: &SpeciesData,
    wavelength: f64,
    pol: Polarization,
    up: HyperfineState,
    down: HyperfineState,
    intensity: f64,
) -> Result<DifferentialShift> {
    Ok(DifferentialShift {
        shift_up: light_shift(species, wavelength, pol, up, intensity)?,
        shift_down: light_shift(species, wavelength, pol, down, intensity)?,
    })
}

/// Wavelength (m) at which `state`'s light shift crosses zero between the
/// two blue lines, for a circularly polarized beam.
///
/// Only circular polarization can null one state: for linear light both
/// line strengths are positive, so the shift between the lines never
/// vanishes — that (and a state the beam simply pushes one way, like
/// (2,−2) under σ⁻ which decouples from the J = 1/2 line) reports
/// [`Error::NoNull`].
pub fn null_wavelength(
    species: &SpeciesData,
    pol: Polarization,
    state: HyperfineState,
) -> Result<f64> {
    if pol == Polarization::Linear {
        return Err(Error::NoNull(format!(
            "linear light shifts {state} the same way on both lines; no zero crossing exists"
        )));
    }
    let lines = coupled_lines(species, state, pol)?;
    // A sign change requires both lines to couple with opposite-sign
    // contributions between them: strengths must both be positive.
    if lines.iter().any(|l| l.strength <= 0.0) {
        return Err(Error::NoNull(format!(
            "state {state} decouples from one line under this polarization; \
             its shift has no zero between the lines"
        )));
    }
    // Bisect the shift between the two lines.  Stay RESONANCE_GUARD×Γ away
    // from each pole; the shift diverges with opposite signs at the two
    // ends, so a root is bracketed.
    let shift_at = |omega: f64| -> f64 {
        lines
            .iter()
            .map(|l| l.linewidth / l.omega.powi(3) * l.strength / (omega - l.omega))
            .sum()
    };
    let (omega_hi, omega_lo) = (lines[0].omega.max(lines[1].omega), {
        lines[0].omega.min(lines[1].omega)
    });
    let margin = 1e6 * RESONANCE_GUARD.max(1.0); // rad/s, far outside both guards
    let (mut a, mut b) = (omega_lo + margin, omega_hi - margin);
    let (mut fa, fb) = (shift_at(a), shift_at(b));
    if fa == 0.0 {
        return Ok(2.0 * PI * SPEED_OF_LIGHT / a);
    }
    if fa * fb > 0.0 {
        return Err(Error::NoNull(format!(
            "no sign change of the light shift of {state} between the two lines"
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        let fm = shift_at(mid);
        if fm == 0.0 || (b - a) < 1e-3 {
            return Ok(2.0 * PI * SPEED_OF_LIGHT / mid);
        }
        if fa * fm < 0.0 {
            b = mid;
        } else {
            a = mid;
            fa = fm;
        }
    }
    Ok(2.0 * PI * SPEED_OF_LIGHT / (0.5 * (a + b)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::controls;
    use crate::harmonic;
    use crate::units::{QubitPair, UnitSystem, PLANCK};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn rb() -> SpeciesData {
        SpeciesData::rb87()
    }

    #[test]
    fn lattice_minima_and_maxima() {
        let l = LatticeSpec::new(50.0, 0.0).unwrap();
        assert_eq!(l.value(0.0), 0.0);
        assert_relative_eq!(l.value(0.5), 50.0, max_relative = 1e-12);
        assert_relative_eq!(l.value(1.0), 0.0, epsilon = 1e-12);
        let shifted = LatticeSpec::new(50.0, 0.25).unwrap();
        assert_relative_eq!(shifted.value(0.25), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn tweezer_depth_and_decay() {
        let tw = TweezerSpec::new(500.0, 1.0, 0.5).unwrap();
        assert_relative_eq!(tw.value(1.0), -500.0, max_relative = 1e-12);
        assert_relative_eq!(tw.value(1.5), -500.0 * (-2.0f64).exp(), max_relative = 1e-12);
        assert!(tw.value(4.0).abs() < 500.0 * 1e-15);
    }

    #[test]
    fn invalid_specs_are_rejected() {
        assert!(LatticeSpec::new(-1.0, 0.0).is_err());
        assert!(TweezerSpec::new(500.0, 0.0, 0.0).is_err());
        assert!(TweezerSpec::new(f64::NAN, 0.0, 0.5).is_err());
        assert!(TweezerSpec::with_beam(1.0, 0.0, 0.5, -1e-9, Polarization::Linear).is_err());
    }

    #[test]
    fn field_sums_terms_and_freezes_ramps() {
        let lattice = LatticeSpec::new(50.0, 0.0).unwrap();
        let ramp = controls::transport_ramp(1.0, 0.0, 1.0, 300.0, &[]).unwrap();
        let template = TweezerSpec::new(0.0, 0.0, 0.5).unwrap();
        let field = PotentialField::new(vec![
            PotentialTerm::Lattice(lattice),
            PotentialTerm::DrivenTweezer {
                template: template.clone(),
                ramp,
            },
        ]);
        assert!(field.is_time_dependent());
        assert_relative_eq!(field.value(0.0, 0.0), -300.0, max_relative = 1e-12);
        // At t = 0.5 the tweezer sits at x = 0.5 where the lattice is 50.
        assert_relative_eq!(field.value(0.5, 0.5), 50.0 - 300.0, max_relative = 1e-9);
        let frozen = field.frozen_at(0.5);
        assert!(!frozen.is_time_dependent());
        for x in [-0.3, 0.0, 0.45, 1.2] {
            assert_relative_eq!(frozen.value(x, 0.0), field.value(x, 0.5), epsilon = 1e-12);
        }
    }

    #[test]
    fn uniform_sampling_matches_pointwise_evaluation() {
        let ramp = controls::transport_ramp(1.0, 0.0, 1.0, 300.0, &[0.1]).unwrap();
        let field = PotentialField::new(vec![
            PotentialTerm::Lattice(LatticeSpec::new(50.0, 0.0).unwrap()),
            PotentialTerm::Tweezer(TweezerSpec::new(200.0, 2.0, 0.5).unwrap()),
            PotentialTerm::DrivenTweezer {
                template: TweezerSpec::new(0.0, 0.0, 0.5).unwrap(),
                ramp,
            },
        ]);
        let (x0, dx, n) = (-8.0, 1.0 / 256.0, 16 * 256);
        let mut fast = vec![0.0; n];
        for &t in &[0.0, 0.37, 1.0] {
            field.sample_uniform(x0, dx, t, &mut fast);
            for (i, &v) in fast.iter().enumerate() {
                let exact = field.value(x0 + i as f64 * dx, t);
                assert!(
                    (v - exact).abs() < 1e-9,
                    "mismatch at i={i}, t={t}: {v} vs {exact}"
                );
            }
        }
        let (fixed, driven) = field.split_static();
        assert_eq!(fixed.terms.len(), 2);
        assert_eq!(driven.terms.len(), 1);
        assert!(!fixed.is_time_dependent());
        assert!(driven.is_time_dependent());
    }

    #[test]
    fn sample_into_checks_lengths() {
        let field = PotentialField::new(vec![PotentialTerm::Lattice(
            LatticeSpec::new(1.0, 0.0).unwrap(),
        )]);
        let xs = [0.0, 0.25, 0.5];
        let mut out = vec![0.0; 2];
        assert!(field.sample_into(&xs, 0.0, &mut out).is_err());
        let mut out = vec![0.0; 3];
        field.sample_into(&xs, 0.0, &mut out).unwrap();
        assert_relative_eq!(out[2], 1.0, max_relative = 1e-12);
    }

    #[test]
    fn lattice_trap_frequency_matches_closed_form() {
        // ω = 2√V for V sin²(πx) with m̃ = π²/2.
        let field = PotentialField::new(vec![PotentialTerm::Lattice(
            LatticeSpec::new(50.0, 0.0).unwrap(),
        )]);
        let omega = trap_frequency(&field, 0.0, 0.0).unwrap();
        assert_relative_eq!(omega, harmonic::lattice_frequency(50.0), max_relative = 1e-8);
        // 50 E_r ⇒ ≈ 2π × 30 kHz.
        let units = UnitSystem::rb87_1064();
        let f_hz = units.angular_frequency_to_hz(omega);
        assert_relative_eq!(f_hz, 30e3, max_relative = 0.05);
    }

    #[test]
    fn tweezer_trap_frequency_matches_closed_form() {
        // ω² = 8V/(π²w²) for the Gaussian, m̃ = π²/2.
        let field = PotentialField::new(vec![PotentialTerm::Tweezer(
            TweezerSpec::new(500.0, 0.0, 0.5).unwrap(),
        )]);
        let omega = trap_frequency(&field, 0.0, 0.0).unwrap();
        assert_relative_eq!(
            omega,
            harmonic::tweezer_frequency_sq(500.0, 0.5).sqrt(),
            max_relative = 1e-7
        );
        // ≈ 82 kHz: within 10% of the 90 kHz design figure.
        let units = UnitSystem::rb87_1064();
        let f_hz = units.angular_frequency_to_hz(omega);
        assert!((f_hz - 90e3).abs() / 90e3 < 0.10, "f = {f_hz}");
    }

    #[test]
    fn combined_trap_adds_curvatures() {
        let field = PotentialField::new(vec![
            PotentialTerm::Lattice(LatticeSpec::new(50.0, 0.0).unwrap()),
            PotentialTerm::Tweezer(TweezerSpec::new(500.0, 0.0, 0.5).unwrap()),
        ]);
        let omega = trap_frequency(&field, 0.0, 0.0).unwrap();
        let expected = (harmonic::lattice_frequency(50.0).powi(2)
            + harmonic::tweezer_frequency_sq(500.0, 0.5))
        .sqrt();
        assert_relative_eq!(omega, expected, max_relative = 1e-7);
    }

    #[test]
    fn ground_width_of_the_deep_tweezer() {
        // σ = √(ħ/mω̃) internal = (1/π)√(2/ω̃); 500 E_r, w = 266 nm ⇒ ≈ 36 nm.
        let omega = harmonic::tweezer_frequency_sq(500.0, 0.5).sqrt();
        let sigma_sites = (1.0 / (PI * PI / 2.0) / omega).sqrt();
        let units = UnitSystem::rb87_1064();
        let sigma_nm = units.length_to_si(sigma_sites) * 1e9;
        assert!(
            (sigma_nm - 36.0).abs() / 36.0 < 0.10,
            "ground-state width {sigma_nm:.2} nm"
        );
    }

    #[test]
    fn trap_frequency_rejects_maxima_and_slopes() {
        let field = PotentialField::new(vec![PotentialTerm::Lattice(
            LatticeSpec::new(50.0, 0.0).unwrap(),
        )]);
        // Lattice maximum: negative curvature.
        assert!(matches!(
            trap_frequency(&field, 0.5, 0.0),
            Err(Error::Geometry(_))
        ));
        // Slope point.
        assert!(matches!(
            trap_frequency(&field, 0.2, 0.0),
            Err(Error::Geometry(_))
        ));
    }

    // --- light shifts ---

    #[test]
    fn down_state_null_sits_at_the_strength_weighted_point() {
        // For (1,−1) under σ⁻: g_F m_F = (−1/2)(−1) = 1/2 and P = −1, so
        // s₃₂ = 2 − 1/2 = 1.5 and s₁₂ = 1 + 1/2 = 1.5.  Equal strengths
        // with the common per-line weight Γᵢ/ωᵢ³ put the null at the
        // frequency midpoint of the doublet, ≈ 420.86 nm.
        let (up, down) = QubitPair::FieldSensitive.states();
        assert_eq!((down.f, down.m), (1, -1));
        let _ = up;
        let lam = null_wavelength(&rb(), Polarization::SigmaMinus, down).unwrap();
        assert_relative_eq!(lam * 1e9, 420.86, epsilon = 0.05);
        // The shift really is zero there…
        let s = light_shift(&rb(), lam, Polarization::SigmaMinus, down, 1e7).unwrap();
        // …compared against the scale of the shift a few nm away.
        let s_ref = light_shift(&rb(), lam + 4e-9, Polarization::SigmaMinus, down, 1e7)
            .unwrap()
            .abs();
        assert!(s.abs() < 1e-6 * s_ref, "residual {s:.3e} vs scale {s_ref:.3e}");
    }

    #[test]
    fn up_state_keeps_full_coupling_at_the_null() {
        // (2,−2) under σ⁻: g_F m_F = (1/2)(−2) = −1, P = −1 ⇒
        // s₃₂ = 2 + 1 = 3, s₁₂ = 1 − 1 = 0: couples only to the J = 3/2
        // line, so it stays trapped at the other state's null.
        let (up, down) = QubitPair::FieldSensitive.states();
        let lam = null_wavelength(&rb(), Polarization::SigmaMinus, down).unwrap();
        let s_up = light_shift(&rb(), lam, Polarization::SigmaMinus, up, 1e7).unwrap();
        let s_down = light_shift(&rb(), lam, Polarization::SigmaMinus, down, 1e7).unwrap();
        assert!(s_up.abs() > 1e4 * s_down.abs().max(f64::MIN_POSITIVE));
        // Attractive for a red-side beam? The null is blueward of the
        // J = 3/2 line (421.555 nm < 420.86 nm is false — the null is at
        // 420.86 nm, *between* 420.17 and 421.56), and (2,−2) couples to
        // the 420.17 nm line only, so the beam at 420.86 is red of it:
        // the shift must be negative (trapping).
        assert!(s_up < 0.0, "upper state shift {s_up:.3e} should trap");
    }

    #[test]
    fn up_state_has_no_null_under_sigma_minus() {
        let (up, _) = QubitPair::FieldSensitive.states();
        assert!(matches!(
            null_wavelength(&rb(), Polarization::SigmaMinus, up),
            Err(Error::NoNull(_))
        ));
    }

    #[test]
    fn linear_polarization_has_no_null() {
        let (_, down) = QubitPair::FieldSensitive.states();
        assert!(matches!(
            null_wavelength(&rb(), Polarization::Linear, down),
            Err(Error::NoNull(_))
        ));
    }

    #[test]
    fn near_resonant_beams_are_rejected() {
        let (_, down) = QubitPair::FieldSensitive.states();
        let rb = rb();
        let lam = rb.blue_line_j32.wavelength + 1e-15;
        assert!(matches!(
            light_shift(&rb, lam, Polarization::SigmaMinus, down, 1e7),
            Err(Error::Resonance(_))
        ));
    }

    #[test]
    fn red_detuned_beam_traps_both_states_almost_equally() {
        // 4 nm red of both blue lines, linear light: the differential
        // shift between the qubit states comes only from the hyperfine
        // splitting entering the detunings, at the 1e-3 level.
        let rb = rb();
        let (up, down) = QubitPair::FieldSensitive.states();
        let lam = rb.blue_line_j12.wavelength + 4e-9;
        let pair =
            pair_light_shift(&rb, lam, Polarization::Linear, up, down, 1e7).unwrap();
        assert!(pair.shift_up < 0.0 && pair.shift_down < 0.0);
        let rel = pair.differential().abs() / pair.mean_magnitude();
        assert!(rel < 1e-3, "relative differential {rel:.3e}");
        assert!(rel > 1e-5, "hyperfine correction unexpectedly tiny: {rel:.3e}");
    }

    #[test]
    fn hyperfine_offset_moves_f2_detunings() {
        let rb = rb();
        let f1 = coupled_lines(&rb, HyperfineState::new(1, -1).unwrap(), Polarization::Linear)
            .unwrap();
        let f2 = coupled_lines(&rb, HyperfineState::new(2, -2).unwrap(), Polarization::Linear)
            .unwrap();
        // The difference of two ~4.5e15 rad/s frequencies keeps ~5 ulp of
        // cancellation noise, so compare at 1e-9 rather than machine tight.
        let dw = f1[0].omega - f2[0].omega;
        assert_relative_eq!(
            dw,
            2.0 * PI * rb.hyperfine_splitting,
            max_relative = 1e-9
        );
    }

    #[test]
    fn light_shift_scale_is_physical() {
        // A σ⁻ beam at the null wavelength holding the (2,−2) state at
        // 500 E_r: check that a plausible intensity (within a sensible
        // single-beam range) produces a shift of the right order.
        let rb = rb();
        let units = UnitSystem::rb87_1064();
        let (up, down) = QubitPair::FieldSensitive.states();
        let lam = null_wavelength(&rb, Polarization::SigmaMinus, down).unwrap();
        let target = 500.0 * units.energy_unit;
        let unit_shift = light_shift(&rb, lam, Polarization::SigmaMinus, up, 1.0).unwrap();
        let intensity = -target / unit_shift;
        assert!(intensity > 0.0);
        // 500 E_r ≈ h × 1 MHz; the required intensity should land between
        // 1e6 and 1e12 W/m² for a near-resonant-but-guarded beam.
        assert!((1e6..1e12).contains(&intensity), "I = {intensity:.3e} W/m²");
        let shift = light_shift(&rb, lam, Polarization::SigmaMinus, up, intensity).unwrap();
        assert_relative_eq!(shift / PLANCK, -500.0 * units.energy_unit / PLANCK, max_relative = 1e-9);
    }

    proptest! {
        #[test]
        fn light_shift_is_linear_in_intensity(
            scale in 0.1f64..10.0,
            offset_nm in 2.0f64..20.0,
        ) {
            let rb = rb();
            let (_, down) = QubitPair::FieldSensitive.states();
            let lam = rb.blue_line_j12.wavelength + offset_nm * 1e-9;
            let s1 = light_shift(&rb, lam, Polarization::Linear, down, 1e6).unwrap();
            let s2 = light_shift(&rb, lam, Polarization::Linear, down, scale * 1e6).unwrap();
            prop_assert!((s2 - scale * s1).abs() <= 1e-12 * s1.abs().max(s2.abs()));
        }

        #[test]
        fn lattice_is_periodic(x in -5.0f64..5.0, depth in 0.0f64..100.0) {
            let l = LatticeSpec::new(depth, 0.0).unwrap();
            prop_assert!((l.value(x) - l.value(x + 1.0)).abs() < 1e-9 * depth.max(1.0));
        }
    }
}
