//! Collisional two-qubit gates: s-wave interaction energies, exchange
//! (√swap) algebra in the singlet/triplet basis, merge- and phase-gate
//! timings, and per-gate time budgets.
//!
//! Everything here works in internal units (energies in recoils, times in
//! ħ/E_r, lengths in lattice sites) with ħ = 1, so a phase is simply
//! energy × time.  Callers convert to SI at the reporting boundary via
//! [`crate::units::UnitSystem`].

use num_complex::Complex64;

use crate::dynamics::{Frame, WaveFunction};
use crate::error::{Error, Result};
use crate::units::SpeciesData;

/// U_eg/U_gg for one atom in the ground and one in the first excited band
/// of the same (approximately harmonic) well: the ratio of the
/// density-overlap integrals ∫φ₀²φ₁² / ∫φ₀⁴ evaluated for harmonic
/// oscillator orbitals, including the transverse factors.
pub const EXCITED_GROUND_RATIO: f64 = 0.35;

/// Normalization guard for quantum states.
const NORM_TOLERANCE: f64 = 1e-9;

/// One qubit stored in a single atom: α|↑⟩ + β|↓⟩ over the clock pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitState {
    /// Amplitude on |↑⟩.
    pub up: Complex64,
    /// Amplitude on |↓⟩.
    pub down: Complex64,
}

impl QubitState {
    /// A normalized qubit; rejects inputs whose norm is off by more than
    /// 1e-9 (use [`QubitState::normalized`] to renormalize explicitly).
    pub fn new(up: Complex64, down: Complex64) -> Result<Self> {
        let state = QubitState { up, down };
        if !state.norm_sq().is_finite() {
            return Err(Error::Domain("qubit amplitudes must be finite".into()));
        }
        if (state.norm_sq() - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::Domain(format!(
                "qubit state must be normalized (norm² = {})",
                state.norm_sq()
            )));
        }
        Ok(state)
    }

    /// |↑⟩.
    pub fn up() -> Self {
        QubitState {
            up: Complex64::new(1.0, 0.0),
            down: Complex64::new(0.0, 0.0),
        }
    }

    /// |↓⟩.
    pub fn down() -> Self {
        QubitState {
            up: Complex64::new(0.0, 0.0),
            down: Complex64::new(1.0, 0.0),
        }
    }

    pub fn norm_sq(&self) -> f64 {
        self.up.norm_sqr() + self.down.norm_sqr()
    }

    /// The same ray rescaled to unit norm.
    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm_sq().sqrt();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::Domain(
                "cannot normalize a zero or non-finite qubit state".into(),
            ));
        }
        Ok(QubitState {
            up: self.up / n,
            down: self.down / n,
        })
    }
}

/// Two distinguishable-by-orbital atoms (one in the ground band `g`, one in
/// the excited band `e` of the shared well) in the product spin basis
/// {|↑↑⟩, |↑↓⟩, |↓↑⟩, |↓↓⟩}, first label = g-orbital atom.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoQubitState {
    pub uu: Complex64,
    pub ud: Complex64,
    pub du: Complex64,
    pub dd: Complex64,
}

/// The same state expressed over {|s⟩, |t₀⟩, |t₊⟩, |t₋⟩}:
/// |s⟩ = (|↑↓⟩−|↓↑⟩)/√2, |t₀⟩ = (|↑↓⟩+|↓↑⟩)/√2, |t₊⟩ = |↑↑⟩, |t₋⟩ = |↓↓⟩.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingletTripletState {
    pub singlet: Complex64,
    pub triplet0: Complex64,
    pub triplet_plus: Complex64,
    pub triplet_minus: Complex64,
}

impl TwoQubitState {
    /// A normalized two-qubit state.
    pub fn new(uu: Complex64, ud: Complex64, du: Complex64, dd: Complex64) -> Result<Self> {
        let state = TwoQubitState { uu, ud, du, dd };
        if !state.norm_sq().is_finite() {
            return Err(Error::Domain("two-qubit amplitudes must be finite".into()));
        }
        if (state.norm_sq() - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::Domain(format!(
                "two-qubit state must be normalized (norm² = {})",
                state.norm_sq()
            )));
        }
        Ok(state)
    }

    /// Product state |a⟩_g ⊗ |b⟩_e.
    pub fn product(a: QubitState, b: QubitState) -> Self {
        TwoQubitState {
            uu: a.up * b.up,
            ud: a.up * b.down,
            du: a.down * b.up,
            dd: a.down * b.down,
        }
    }

    pub fn norm_sq(&self) -> f64 {
        self.uu.norm_sqr() + self.ud.norm_sqr() + self.du.norm_sqr() + self.dd.norm_sqr()
    }

    /// Rotate into the singlet/triplet basis (unitary).
    pub fn to_singlet_triplet(&self) -> SingletTripletState {
        let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
        SingletTripletState {
            singlet: (self.ud - self.du) * inv_sqrt2,
            triplet0: (self.ud + self.du) * inv_sqrt2,
            triplet_plus: self.uu,
            triplet_minus: self.dd,
        }
    }
}

impl SingletTripletState {
    /// Rotate back into the product basis (inverse of
    /// [`TwoQubitState::to_singlet_triplet`]).
    pub fn to_product(&self) -> TwoQubitState {
        let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
        TwoQubitState {
            uu: self.triplet_plus,
            ud: (self.triplet0 + self.singlet) * inv_sqrt2,
            du: (self.triplet0 - self.singlet) * inv_sqrt2,
            dd: self.triplet_minus,
        }
    }

    pub fn norm_sq(&self) -> f64 {
        self.singlet.norm_sqr()
            + self.triplet0.norm_sqr()
            + self.triplet_plus.norm_sqr()
            + self.triplet_minus.norm_sqr()
    }
}

/// The set of on-site interaction energies a gate sequence needs, all in
/// one consistent energy unit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InteractionParams {
    /// Both atoms in the ground orbital, opposite spins (the qubit pair).
    pub u_cross: f64,
    /// Both atoms in |↑⟩ (equals u_down by the intrastate symmetry).
    pub u_up: f64,
    /// Both atoms in |↓⟩.
    pub u_down: f64,
    /// Ground-ground energy used by the exchange gate (usually = u_cross).
    pub u_gg: f64,
    /// Ground-excited energy, fixed at [`EXCITED_GROUND_RATIO`] × u_gg.
    pub u_eg: f64,
    /// Working magnetic field, G (sets the intrastate/interstate ratio).
    pub field_gauss: f64,
}

impl InteractionParams {
    /// Derive the full set from the cross-spin ground-orbital energy,
    /// using the species' intrastate/interstate scattering-length ratio at
    /// its working field.
    pub fn from_cross_energy(u_cross: f64, species: &SpeciesData) -> Result<Self> {
        if !(u_cross >= 0.0) || !u_cross.is_finite() {
            return Err(Error::Domain(format!(
                "interaction energy must be finite and ≥ 0, got {u_cross}"
            )));
        }
        let same = species.interaction_ratio * u_cross;
        Ok(InteractionParams {
            u_cross,
            u_up: same,
            u_down: same,
            u_gg: u_cross,
            u_eg: EXCITED_GROUND_RATIO * u_cross,
            field_gauss: species.working_field_gauss,
        })
    }
}

/// Geometric mean of the two transverse trap frequencies.
///
/// The transverse directions enter the contact-interaction energy through
/// one factor √(m̃ω/2π) each, so two unequal directions are equivalent to
/// an isotropic pair at their geometric mean.
pub fn transverse_mean_frequency(omega_a: f64, omega_b: f64) -> Result<f64> {
    if !(omega_a > 0.0) || !(omega_b > 0.0) {
        return Err(Error::Domain(format!(
            "transverse frequencies must be positive, got {omega_a}, {omega_b}"
        )));
    }
    Ok((omega_a * omega_b).sqrt())
}

/// s-wave interaction energy of two atoms sharing the axial grid, with
/// both transverse directions frozen in the Gaussian ground state of an
/// isotropic transverse trap at `transverse_omega`.
///
/// U = g̃·(m̃ ω_⊥/2π)·∫|ψ_a|²|ψ_b|² dx with g̃ = 4π·a_s/m̃, which collapses
/// to U = 2·a_s·ω_⊥·∫|ψ_a|²|ψ_b|² dx (internal units, ħ = 1).  For two
/// unequal transverse frequencies pass their
/// [geometric mean](transverse_mean_frequency).
pub fn interaction_energy(
    psi_a: &WaveFunction,
    psi_b: &WaveFunction,
    scattering_length: f64,
    transverse_omega: f64,
) -> Result<f64> {
    if !psi_a.grid().same_as(psi_b.grid()) {
        return Err(Error::GridMismatch(
            "interaction energy needs both wavefunctions on the same grid".into(),
        ));
    }
    if !(scattering_length >= 0.0) || !scattering_length.is_finite() {
        return Err(Error::Domain(format!(
            "scattering length must be finite and ≥ 0, got {scattering_length}"
        )));
    }
    if !(transverse_omega > 0.0) || !transverse_omega.is_finite() {
        return Err(Error::Domain(format!(
            "transverse frequency must be positive, got {transverse_omega}"
        )));
    }
    let dx = psi_a.grid().dx();
    let overlap: f64 = psi_a
        .data()
        .iter()
        .zip(psi_b.data())
        .map(|(a, b)| a.norm_sqr() * b.norm_sqr())
        .sum::<f64>()
        * dx;
    Ok(2.0 * scattering_length * transverse_omega * overlap)
}

/// Hold time for a π differential phase between the |↑↓⟩ and |↑↑⟩/|↓↓⟩
/// channels of the merge gate: t_π = π/|u_cross − u_same| (ħ = 1).
pub fn merge_gate_phase_time(u_cross: f64, u_same: f64) -> Result<f64> {
    if !u_cross.is_finite() || !u_same.is_finite() {
        return Err(Error::Domain(
            "interaction energies must be finite".into(),
        ));
    }
    let delta = (u_cross - u_same).abs();
    let scale = u_cross.abs().max(u_same.abs());
    if delta <= scale * 1e-12 || delta == 0.0 {
        return Err(Error::NoGate(format!(
            "equal interaction energies ({u_cross} vs {u_same}) accumulate no differential \
             phase; the merge gate needs distinct channels"
        )));
    }
    Ok(std::f64::consts::PI / delta)
}

/// Hold time for a collisional phase `target_phase` at interaction energy
/// `u`: t = target_phase/u (ħ = 1).
pub fn phase_gate_time(u: f64, target_phase: f64) -> Result<f64> {
    if !(u > 0.0) || !u.is_finite() {
        return Err(Error::Domain(format!(
            "phase gate needs a positive interaction energy, got {u}"
        )));
    }
    if !(target_phase >= 0.0) || !target_phase.is_finite() {
        return Err(Error::Domain(format!(
            "target phase must be finite and ≥ 0, got {target_phase}"
        )));
    }
    Ok(target_phase / u)
}

/// Exchange-gate timings derived from the ground-ground interaction
/// energy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwapTimes {
    /// Ground-excited interaction energy, [`EXCITED_GROUND_RATIO`] × u_gg.
    pub u_eg: f64,
    /// Full population-swap time π/u_eg.
    pub t_swap: f64,
    /// Entangling (√swap) time, half of `t_swap`.
    pub t_half: f64,
}

/// √swap timing from the ground-ground interaction energy (ħ = 1).
pub fn swap_times(u_gg: f64) -> Result<SwapTimes> {
    if !(u_gg > 0.0) || !u_gg.is_finite() {
        return Err(Error::Domain(format!(
            "swap timing needs a positive ground-ground energy, got {u_gg}"
        )));
    }
    let u_eg = EXCITED_GROUND_RATIO * u_gg;
    let t_swap = std::f64::consts::PI / u_eg;
    Ok(SwapTimes {
        u_eg,
        t_swap,
        t_half: 0.5 * t_swap,
    })
}

/// Exchange evolution for hold time `t` at ground-excited energy `u_eg`
/// (ħ = 1): the antisymmetric-orbital singlet accumulates no collisional
/// phase, while every symmetric-orbital triplet component acquires
/// exp(i·u_eg·t).
///
/// Only the singlet/triplet differential is physical; the common triplet
/// phase is reported as-is and drops out of populations.
pub fn spin_exchange_evolve(state: &TwoQubitState, u_eg: f64, t: f64) -> TwoQubitState {
    let phase = Complex64::from_polar(1.0, u_eg * t);
    let mut st = state.to_singlet_triplet();
    st.triplet0 *= phase;
    st.triplet_plus *= phase;
    st.triplet_minus *= phase;
    st.to_product()
}

/// Accumulated interaction phase φ = ∫U(t)dt (ħ = 1) along two
/// single-particle trajectories sampled at common times, treating the
/// interaction perturbatively (no back-action on the orbitals).
///
/// Integration is by the trapezoid rule over the frame times.
pub fn interaction_phase(
    trajectory_a: &[Frame],
    trajectory_b: &[Frame],
    scattering_length: f64,
    transverse_omega: f64,
) -> Result<f64> {
    if trajectory_a.len() != trajectory_b.len() {
        return Err(Error::GridMismatch(format!(
            "trajectories must share their sampling ({} vs {} frames)",
            trajectory_a.len(),
            trajectory_b.len()
        )));
    }
    if trajectory_a.len() < 2 {
        return Err(Error::Domain(
            "interaction phase needs at least two common time samples".into(),
        ));
    }
    let mut samples = Vec::with_capacity(trajectory_a.len());
    for (fa, fb) in trajectory_a.iter().zip(trajectory_b) {
        if (fa.time - fb.time).abs() > 1e-9 * fa.time.abs().max(1.0) {
            return Err(Error::GridMismatch(format!(
                "trajectories must share their sampling (t = {} vs {})",
                fa.time, fb.time
            )));
        }
        let u = interaction_energy(&fa.state, &fb.state, scattering_length, transverse_omega)?;
        samples.push((fa.time, u));
    }
    let mut phase = 0.0;
    for pair in samples.windows(2) {
        let (t0, u0) = pair[0];
        let (t1, u1) = pair[1];
        phase += 0.5 * (u0 + u1) * (t1 - t0);
    }
    Ok(phase)
}

/// Unit durations of the budget steps, μs.
pub const RAMP_TIME_US: f64 = 11.0;
/// Per-site transport time, μs.
pub const TRANSPORT_TIME_US: f64 = 25.0;
/// Collisional hold of the spin-dependent transport gate, μs.
pub const TRANSPORT_PHASE_HOLD_US: f64 = 83.0;
/// √swap hold of the exchange gate, μs.
pub const EXCHANGE_HOLD_US: f64 = 125.0;
/// One merge (or split) ramp of the exchange gate, μs.
pub const MERGE_TIME_US: f64 = 75.0;

/// The two gate protocols with time budgets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GateKind {
    /// Spin-dependent transport gate: bring |↑⟩ to the partner site, hold,
    /// and retrace.
    TransportPhase,
    /// Exchange (√swap) gate: merge both atoms into one well via band
    /// mapping, hold, and split.
    Exchange,
}

impl GateKind {
    pub fn label(self) -> &'static str {
        match self {
            GateKind::TransportPhase => "transport-phase",
            GateKind::Exchange => "exchange",
        }
    }
}

/// One line of a gate time budget.
#[derive(Debug, Clone, PartialEq)]
pub struct BudgetStep {
    pub name: &'static str,
    pub count: usize,
    /// Duration of a single occurrence, μs.
    pub unit_us: f64,
}

impl BudgetStep {
    pub fn subtotal_us(&self) -> f64 {
        self.count as f64 * self.unit_us
    }
}

/// Time budget of one gate over a transport distance of `sites` lattice
/// sites.
#[derive(Debug, Clone, PartialEq)]
pub struct GateBudget {
    pub gate: GateKind,
    pub sites: usize,
    pub steps: Vec<BudgetStep>,
}

impl GateBudget {
    /// Σ count·duration over the steps, μs.
    pub fn total_us(&self) -> f64 {
        self.steps.iter().map(BudgetStep::subtotal_us).sum()
    }
}

/// Closed-form gate time, μs: 199 + 50n (transport-phase) or 297 + 50n
/// (exchange).
pub fn gate_time_us(gate: GateKind, sites: usize) -> f64 {
    match gate {
        GateKind::TransportPhase => 199.0 + 50.0 * sites as f64,
        GateKind::Exchange => 297.0 + 50.0 * sites as f64,
    }
}

/// Itemized time budget for `gate` at transport distance `sites`.
pub fn gate_budget(gate: GateKind, sites: usize) -> GateBudget {
    let steps = match gate {
        GateKind::TransportPhase => vec![
            BudgetStep {
                name: "depth/polarization ramp",
                count: 6,
                unit_us: RAMP_TIME_US,
            },
            BudgetStep {
                name: "transport (per site)",
                count: 2 * (sites + 1),
                unit_us: TRANSPORT_TIME_US,
            },
            BudgetStep {
                name: "collisional phase hold",
                count: 1,
                unit_us: TRANSPORT_PHASE_HOLD_US,
            },
        ],
        GateKind::Exchange => vec![
            BudgetStep {
                name: "depth ramp",
                count: 2,
                unit_us: RAMP_TIME_US,
            },
            BudgetStep {
                name: "transport (per site)",
                count: 2 * sites,
                unit_us: TRANSPORT_TIME_US,
            },
            BudgetStep {
                name: "√swap hold",
                count: 1,
                unit_us: EXCHANGE_HOLD_US,
            },
            BudgetStep {
                name: "merge/split band map",
                count: 2,
                unit_us: MERGE_TIME_US,
            },
        ],
    };
    GateBudget { gate, sites, steps }
}

/// Which spin components an operation acts on or moves.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpinSelector {
    Up,
    Down,
    Both,
    None,
}

/// One step of the spin-dependent transport gate sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct GateStep {
    pub name: &'static str,
    /// What the step does to the potentials seen by each spin state.
    pub potentials: &'static str,
    pub duration_us: f64,
    /// Which spin components move during the step.
    pub moving: SpinSelector,
    /// True for the spin-echo π-pulse marker at the sequence midpoint.
    pub echo: bool,
}

/// The spin-dependent transport gate over `sites` lattice sites, step by
/// step: ramp the tweezer onto the atom, rotate its polarization to σ⁻ so
/// only |↑⟩ feels it, carry |↑⟩ to the partner site (`sites`+1 hops),
/// restore the |↓⟩ confinement, hold for the collisional phase with a spin
/// echo at the midpoint, and retrace.  Total duration equals
/// [`gate_time_us`]`(TransportPhase, sites)`.
pub fn spin_dependent_gate_sequence(sites: usize) -> Vec<GateStep> {
    let mut steps = Vec::new();
    let forward: Vec<GateStep> = {
        let mut f = Vec::new();
        f.push(GateStep {
            name: "tweezer ramp-up",
            potentials: "linear-polarized tweezer rises on both spins",
            duration_us: RAMP_TIME_US,
            moving: SpinSelector::None,
            echo: false,
        });
        f.push(GateStep {
            name: "polarization rotation to σ⁻",
            potentials: "tweezer leaves |↓⟩; lattice holds |↓⟩, tweezer holds |↑⟩",
            duration_us: RAMP_TIME_US,
            moving: SpinSelector::None,
            echo: false,
        });
        for _ in 0..=sites {
            f.push(GateStep {
                name: "spin-selective transport",
                potentials: "σ⁻ tweezer carries |↑⟩ one site; |↓⟩ stays in the lattice",
                duration_us: TRANSPORT_TIME_US,
                moving: SpinSelector::Up,
                echo: false,
            });
        }
        f.push(GateStep {
            name: "polarization rotation to linear",
            potentials: "|↓⟩ potential ramps back up at the interaction site",
            duration_us: RAMP_TIME_US,
            moving: SpinSelector::None,
            echo: false,
        });
        f
    };
    steps.extend(forward.iter().cloned());
    steps.push(GateStep {
        name: "collisional hold",
        potentials: "|↑⟩ overlaps the partner atom; phase accumulates on |↑↑⟩-type channels",
        duration_us: 0.5 * TRANSPORT_PHASE_HOLD_US,
        moving: SpinSelector::None,
        echo: false,
    });
    steps.push(GateStep {
        name: "spin-echo π-pulse",
        potentials: "global π rotation; cancels quasi-static differential shifts",
        duration_us: 0.0,
        moving: SpinSelector::Both,
        echo: true,
    });
    steps.push(GateStep {
        name: "collisional hold",
        potentials: "|↑⟩ overlaps the partner atom; phase accumulates on |↑↑⟩-type channels",
        duration_us: 0.5 * TRANSPORT_PHASE_HOLD_US,
        moving: SpinSelector::None,
        echo: false,
    });
    steps.extend(forward.into_iter().rev());
    steps
}
