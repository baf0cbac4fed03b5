//! Decoherence and drift budgets for the trap light and bias field.
//!
//! Three families of estimate:
//!
//! * **Spontaneous scattering** of trap photons, as a two-level rate per
//!   dipole line: Γ_sc = Σ (Γ_line/ħ|Δ_line|)·|V_line|, where V_line is the
//!   line's share of the trap depth.  Deep-trap light in the Lamb–Dicke
//!   regime scatters mostly elastically, so the lattice report separates
//!   the raw photon-scattering probability from the motional-decoherence
//!   probability, which is suppressed by η² = E_recoil/ħω.
//! * **Dephasing** from magnetic-field noise (through the pair's
//!   differential Zeeman slope) and from trap-intensity noise (through the
//!   differential light shift a depth fluctuation imprints).
//! * **Sensitivity maps**: the merge infidelity surface over pointing
//!   offset × intensity scale, evaluated cell-by-cell in parallel, with
//!   iso-infidelity contour extraction.

use rayon::prelude::*;

use crate::bandmap::BandMapProblem;
use crate::controls::{BandMapSpec, ErrorInjection};
use crate::error::{Error, Result};
use crate::harmonic;
use crate::potentials::{coupled_d_lines, coupled_lines, CoupledLine, Polarization};
use crate::units::{
    zeeman_splitting_rate, HyperfineState, QubitPair, SpeciesData, UnitSystem, GAUSS, HBAR, PLANCK,
    SPEED_OF_LIGHT,
};

/// Offset of the far-detuned transport tweezer from the nearer blue line.
const FAR_DETUNED_OFFSET: f64 = 10e-9;

/// Exposure defaults: one full gate for static traps, one hop for the
/// spin-dependent transport tweezer.
const GATE_EXPOSURE: f64 = 300e-6;
const TRANSPORT_EXPOSURE: f64 = 25e-6;

/// Which beam a scattering estimate describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScatteringContext {
    /// The standing-wave lattice light (D-line scattering).
    Lattice,
    /// A transport tweezer parked well red of the blue doublet.
    FarDetunedTweezer,
    /// A spin-dependent tweezer between the blue lines.
    SpinDependentTweezer,
}

impl ScatteringContext {
    pub fn label(self) -> &'static str {
        match self {
            ScatteringContext::Lattice => "lattice",
            ScatteringContext::FarDetunedTweezer => "far-detuned tweezer",
            ScatteringContext::SpinDependentTweezer => "spin-dependent tweezer",
        }
    }
}

/// One dipole line as the scattering estimate sees it.
#[derive(Debug, Clone, Copy)]
pub struct ScenarioLine {
    /// Beam detuning from the line, rad/s (sign preserved).
    pub detuning: f64,
    /// Natural linewidth, s⁻¹.
    pub linewidth: f64,
    /// Relative line strength (polarization- and state-dependent).
    pub strength: f64,
    /// Transition angular frequency, rad/s.
    pub omega: f64,
}

impl ScenarioLine {
    fn from_coupled(line: &CoupledLine, omega_beam: f64) -> Self {
        ScenarioLine {
            detuning: omega_beam - line.omega,
            linewidth: line.linewidth,
            strength: line.strength,
            omega: line.omega,
        }
    }

    /// Dispersive light-shift weight (πc²I/2 factored out); the sign is
    /// the sign of this line's energy shift.
    fn shift_weight(&self) -> f64 {
        self.strength * self.linewidth / (self.omega.powi(3) * self.detuning)
    }
}

/// A trap beam whose photon-scattering rate is wanted.
#[derive(Debug, Clone)]
pub struct ScatteringScenario {
    pub context: ScatteringContext,
    /// Trap depth the beam produces, in recoil energies.
    pub depth: f64,
    /// The dipole lines the beam couples to.
    pub lines: Vec<ScenarioLine>,
    /// Exposure time for the probability report, seconds.
    pub exposure: f64,
}

impl ScatteringScenario {
    /// Transport tweezer red-detuned [`10 nm`](FAR_DETUNED_OFFSET) from the
    /// blue doublet, linearly polarized (line strengths 2:1 independent of
    /// the hyperfine state).
    pub fn far_detuned_tweezer(species: &SpeciesData, depth: f64) -> Result<Self> {
        let wavelength = species.blue_line_j12.wavelength + FAR_DETUNED_OFFSET;
        let state = HyperfineState::new(1, -1)?;
        Self::from_beam(
            ScatteringContext::FarDetunedTweezer,
            depth,
            GATE_EXPOSURE,
            coupled_lines(species, state, Polarization::Linear)?,
            wavelength,
        )
    }

    /// Spin-dependent transport tweezer: σ⁻ light at the wavelength that
    /// nulls the untrapped |1,−1⟩ state, scattering off the trapped
    /// |2,−2⟩ state riding the full depth.
    pub fn spin_dependent_tweezer(species: &SpeciesData, depth: f64) -> Result<Self> {
        let (trapped, nulled) = QubitPair::FieldSensitive.states();
        let wavelength =
            crate::potentials::null_wavelength(species, Polarization::SigmaMinus, nulled)?;
        Self::from_beam(
            ScatteringContext::SpinDependentTweezer,
            depth,
            TRANSPORT_EXPOSURE,
            coupled_lines(species, trapped, Polarization::SigmaMinus)?,
            wavelength,
        )
    }

    /// The lattice light itself, scattering off the D lines.
    pub fn lattice(species: &SpeciesData, lattice_wavelength: f64, depth: f64) -> Result<Self> {
        let state = HyperfineState::new(1, -1)?;
        Self::from_beam(
            ScatteringContext::Lattice,
            depth,
            GATE_EXPOSURE,
            coupled_d_lines(species, state, Polarization::Linear)?,
            lattice_wavelength,
        )
    }

    fn from_beam(
        context: ScatteringContext,
        depth: f64,
        exposure: f64,
        coupled: [CoupledLine; 2],
        wavelength: f64,
    ) -> Result<Self> {
        if !(wavelength > 0.0) {
            return Err(Error::Domain(format!(
                "beam wavelength must be positive, got {wavelength}"
            )));
        }
        let omega_beam = 2.0 * std::f64::consts::PI * SPEED_OF_LIGHT / wavelength;
        let scenario = ScatteringScenario {
            context,
            depth,
            lines: coupled
                .iter()
                .map(|line| ScenarioLine::from_coupled(line, omega_beam))
                .collect(),
            exposure,
        };
        scenario.validate()?;
        Ok(scenario)
    }

    fn validate(&self) -> Result<()> {
        if !(self.depth > 0.0) {
            return Err(Error::Domain(format!(
                "trap depth must be positive, got {} E_r",
                self.depth
            )));
        }
        if !(self.exposure >= 0.0) {
            return Err(Error::Domain(format!(
                "exposure must be ≥ 0, got {} s",
                self.exposure
            )));
        }
        for line in &self.lines {
            if line.detuning.abs() <= line.linewidth {
                return Err(Error::Resonance(format!(
                    "beam sits on a line: |Δ| = {:.3e} rad/s is within the \
                     linewidth {:.3e} s⁻¹",
                    line.detuning.abs(),
                    line.linewidth
                )));
            }
        }
        Ok(())
    }
}

/// Photon-scattering rate of the scenario's beam, in events per second.
///
/// Each line contributes Γ_line·(|V_line|/ħ)/|Δ_line|, with the line's
/// share V_line of the trap depth set by the dispersive light-shift
/// weights — the overall intensity drops out once the total shift is
/// pinned to the requested depth.
pub fn scattering_rate(units: &UnitSystem, scenario: &ScatteringScenario) -> Result<f64> {
    scenario.validate()?;
    let weights: Vec<f64> = scenario.lines.iter().map(ScenarioLine::shift_weight).collect();
    let total: f64 = weights.iter().sum();
    let largest = weights.iter().fold(0.0f64, |m, w| m.max(w.abs()));
    if total.abs() <= 1e-9 * largest {
        return Err(Error::Domain(
            "the line shifts cancel; this beam cannot produce the requested depth".into(),
        ));
    }
    let depth_joule = units.energy_to_si(scenario.depth);
    let rate = scenario
        .lines
        .iter()
        .zip(&weights)
        .map(|(line, w)| {
            let share = (w / total).abs() * depth_joule;
            line.linewidth * (share / HBAR) / line.detuning.abs()
        })
        .sum();
    Ok(rate)
}

/// P = 1 − exp(−rate·exposure), the probability of at least one scattering
/// event.  Both arguments non-negative.
pub fn scattering_probability(rate: f64, exposure: f64) -> f64 {
    -(-rate * exposure).exp_m1()
}

/// Scattering budget of the lattice light on a trapped atom.
#[derive(Debug, Clone, Copy)]
pub struct LatticeCoherenceReport {
    /// Photon-scattering rate, Hz.
    pub rate: f64,
    /// Lamb–Dicke parameter squared, η² = E_recoil/ħω at this depth.
    pub lamb_dicke_sq: f64,
    /// Exposure used, seconds.
    pub exposure: f64,
    /// Probability of scattering any photon during the exposure.
    pub scatter_probability: f64,
    /// Probability of a *decohering* event: elastic scattering at the trap
    /// wavelength only disturbs the motional state with probability ~η².
    pub decoherence_probability: f64,
}

/// Lattice-light scattering budget over one gate at the given depth.
pub fn lattice_coherence_report(
    units: &UnitSystem,
    species: &SpeciesData,
    depth: f64,
    exposure: f64,
) -> Result<LatticeCoherenceReport> {
    let mut scenario = ScatteringScenario::lattice(species, units.lattice_wavelength, depth)?;
    scenario.exposure = exposure;
    let rate = scattering_rate(units, &scenario)?;
    let lamb_dicke_sq = 1.0 / harmonic::lattice_frequency(depth);
    let scatter_probability = scattering_probability(rate, exposure);
    Ok(LatticeCoherenceReport {
        rate,
        lamb_dicke_sq,
        exposure,
        scatter_probability,
        decoherence_probability: lamb_dicke_sq * scatter_probability,
    })
}

/// Magnetic-noise dephasing inputs.
#[derive(Debug, Clone, Copy)]
pub struct DephasingScenario {
    /// RMS magnetic-field noise, Gauss.
    pub field_noise_gauss: f64,
    /// Hold (gate) time the phase error accumulates over, seconds.
    pub hold: f64,
}

/// Magnetic dephasing budget of one qubit pair.
#[derive(Debug, Clone)]
pub struct DephasingBudget {
    /// T_c = h/ΔE; `None` when no first-order dephasing exists (zero noise
    /// or a first-order-insensitive pair).
    pub coherence_time: Option<f64>,
    /// Phase error over the hold, hold/T_c (zero when unbounded).
    pub phase_error: f64,
    /// Present for pairs whose first-order sensitivity vanishes; the clock
    /// pair's note names its magic field.
    pub insensitivity_note: Option<String>,
}

/// Coherence time and phase error of `pair` under the scenario's field
/// noise: ΔE = |d(ΔE)/dB|·δB and T_c = h/ΔE.
pub fn dephasing_budget(
    species: &SpeciesData,
    scenario: &DephasingScenario,
    pair: QubitPair,
) -> Result<DephasingBudget> {
    if !(scenario.field_noise_gauss >= 0.0) || !(scenario.hold >= 0.0) {
        return Err(Error::Domain(format!(
            "dephasing inputs must be non-negative, got δB = {} G, hold = {} s",
            scenario.field_noise_gauss, scenario.hold
        )));
    }
    let response = zeeman_splitting_rate(species, pair);
    if response.energy_per_tesla == 0.0 {
        let note = match response.magic_field_gauss {
            Some(b) => format!(
                "first-order field-insensitive pair; the magic field at {b} G \
                 also zeroes the second-order sensitivity"
            ),
            None => "first-order field-insensitive pair".to_owned(),
        };
        return Ok(DephasingBudget {
            coherence_time: None,
            phase_error: 0.0,
            insensitivity_note: Some(note),
        });
    }
    if scenario.field_noise_gauss == 0.0 {
        return Ok(DephasingBudget {
            coherence_time: None,
            phase_error: 0.0,
            insensitivity_note: None,
        });
    }
    let delta_e = response.energy_per_tesla * scenario.field_noise_gauss * GAUSS;
    let coherence_time = PLANCK / delta_e;
    Ok(DephasingBudget {
        coherence_time: Some(coherence_time),
        phase_error: scenario.hold / coherence_time,
        insensitivity_note: None,
    })
}

/// Phase error a relative trap-intensity error imprints over a hold:
/// δφ = (δI/I)·(depth/ħ)·hold, in radians.
pub fn intensity_dephasing(
    units: &UnitSystem,
    depth: f64,
    relative_noise: f64,
    hold: f64,
) -> f64 {
    relative_noise * (units.energy_to_si(depth) / HBAR) * hold
}

/// One failed cell of a sensitivity map.
#[derive(Debug, Clone)]
pub struct MapCellFailure {
    pub offset_index: usize,
    pub scale_index: usize,
    pub message: String,
}

/// Merge infidelity over pointing offset × intensity scale.
#[derive(Debug, Clone)]
pub struct SensitivityMap {
    /// Pointing offsets, sites.
    pub offsets: Vec<f64>,
    /// Intensity scales (1.0 = calibrated).
    pub scales: Vec<f64>,
    /// infidelity[i][j] = 1 − F at (offsets[i], scales[j]); NaN marks a
    /// failed cell.
    pub infidelity: Vec<Vec<f64>>,
    /// Cells whose simulation failed, with their error messages.
    pub failures: Vec<MapCellFailure>,
}

impl SensitivityMap {
    /// Indices of the smallest finite infidelity, if any cell succeeded.
    pub fn minimum_cell(&self) -> Option<(usize, usize)> {
        let mut best: Option<((usize, usize), f64)> = None;
        for (i, row) in self.infidelity.iter().enumerate() {
            for (j, &value) in row.iter().enumerate() {
                if value.is_finite() && best.map_or(true, |(_, b)| value < b) {
                    best = Some(((i, j), value));
                }
            }
        }
        best.map(|(cell, _)| cell)
    }

    /// Largest finite infidelity on the map.
    pub fn maximum(&self) -> Option<f64> {
        self.infidelity
            .iter()
            .flatten()
            .copied()
            .filter(|v| v.is_finite())
            .fold(None, |acc, v| Some(acc.map_or(v, |a: f64| a.max(v))))
    }
}

/// Default pointing-offset axis: 21 points over ±10 nm, in sites.
pub fn default_offsets(units: &UnitSystem) -> Vec<f64> {
    let limit = units.length_from_si(10e-9);
    axis(-limit, limit, 21)
}

/// Default intensity-scale axis: 21 points over 0.99..1.01.
pub fn default_scales() -> Vec<f64> {
    axis(0.99, 1.01, 21)
}

/// `n` evenly spaced values from `lo` to `hi` inclusive.
pub fn axis(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2, "an axis needs at least two points");
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

/// Evaluate the merge infidelity with fixed, already-optimized ramp
/// coefficients at every (pointing offset, intensity scale) cell.  Cells
/// run in parallel; a failing cell is recorded and left NaN rather than
/// aborting the map.
pub fn sensitivity_map(
    spec: &BandMapSpec,
    lattice_depth: f64,
    depth_coeffs: &[f64],
    position_coeffs: &[f64],
    offsets: &[f64],
    scales: &[f64],
    points_per_site: usize,
    step_scale: f64,
) -> Result<SensitivityMap> {
    if offsets.is_empty() || scales.is_empty() {
        return Err(Error::Domain("sensitivity map axes must be non-empty".into()));
    }
    let cells: Vec<(usize, usize)> = (0..offsets.len())
        .flat_map(|i| (0..scales.len()).map(move |j| (i, j)))
        .collect();
    let outcomes: Vec<((usize, usize), std::result::Result<f64, String>)> = cells
        .into_par_iter()
        .map(|(i, j)| {
            let value = ErrorInjection::new(offsets[i], scales[j])
                .and_then(|errors| {
                    BandMapProblem::with_resolution(
                        spec,
                        lattice_depth,
                        errors,
                        points_per_site,
                        step_scale,
                    )
                })
                .and_then(|problem| problem.run(depth_coeffs, position_coeffs, 0))
                .map(|outcome| 1.0 - outcome.fidelity)
                .map_err(|e| e.to_string());
            ((i, j), value)
        })
        .collect();

    let mut infidelity = vec![vec![f64::NAN; scales.len()]; offsets.len()];
    let mut failures = Vec::new();
    for ((i, j), outcome) in outcomes {
        match outcome {
            Ok(value) => infidelity[i][j] = value,
            Err(message) => failures.push(MapCellFailure {
                offset_index: i,
                scale_index: j,
                message,
            }),
        }
    }
    Ok(SensitivityMap {
        offsets: offsets.to_vec(),
        scales: scales.to_vec(),
        infidelity,
        failures,
    })
}

/// Iso-level polylines of `values[i][j]` sampled at (xs[i], ys[j]), by
/// marching squares with linear interpolation.  Chains share endpoints
/// exactly; closed loops repeat their first vertex at the end.
pub fn contour_polylines(
    xs: &[f64],
    ys: &[f64],
    values: &[Vec<f64>],
    level: f64,
) -> Vec<Vec<(f64, f64)>> {
    let mut segments: Vec<[(f64, f64); 2]> = Vec::new();
    for i in 0..xs.len().saturating_sub(1) {
        for j in 0..ys.len().saturating_sub(1) {
            let corners = [
                (xs[i], ys[j], values[i][j]),
                (xs[i + 1], ys[j], values[i + 1][j]),
                (xs[i + 1], ys[j + 1], values[i + 1][j + 1]),
                (xs[i], ys[j + 1], values[i][j + 1]),
            ];
            if corners.iter().any(|&(_, _, v)| !v.is_finite()) {
                continue;
            }
            marching_square(&corners, level, &mut segments);
        }
    }
    chain_segments(segments)
}

/// Interpolated crossing point on the edge a→b.
fn edge_point(a: (f64, f64, f64), b: (f64, f64, f64), level: f64) -> (f64, f64) {
    let t = ((level - a.2) / (b.2 - a.2)).clamp(0.0, 1.0);
    (a.0 + t * (b.0 - a.0), a.1 + t * (b.1 - a.1))
}

/// Emit this cell's contour segments (0, 1, or 2 of them).
fn marching_square(corners: &[(f64, f64, f64); 4], level: f64, out: &mut Vec<[(f64, f64); 2]>) {
    let mut case = 0usize;
    for (bit, corner) in corners.iter().enumerate() {
        if corner.2 > level {
            case |= 1 << bit;
        }
    }
    // Edges 0..3 connect corners (0,1), (1,2), (2,3), (3,0).
    let edge = |e: usize| edge_point(corners[e], corners[(e + 1) % 4], level);
    let mut emit = |a: usize, b: usize| out.push([edge(a), edge(b)]);
    match case {
        0 | 15 => {}
        1 | 14 => emit(3, 0),
        2 | 13 => emit(0, 1),
        3 | 12 => emit(3, 1),
        4 | 11 => emit(1, 2),
        6 | 9 => emit(0, 2),
        7 | 8 => emit(2, 3),
        5 | 10 => {
            // Saddle: disambiguate with the cell-center average.
            let center = corners.iter().map(|c| c.2).sum::<f64>() / 4.0;
            let diag = (case == 5) == (center > level);
            if diag {
                emit(0, 1);
                emit(2, 3);
            } else {
                emit(3, 0);
                emit(1, 2);
            }
        }
        _ => unreachable!("4-bit case"),
    }
}

/// Greedily join segments sharing endpoints into polylines.
fn chain_segments(mut segments: Vec<[(f64, f64); 2]>) -> Vec<Vec<(f64, f64)>> {
    let close = |a: (f64, f64), b: (f64, f64)| {
        let scale = a.0.abs().max(a.1.abs()).max(b.0.abs()).max(b.1.abs()).max(1e-300);
        (a.0 - b.0).abs() + (a.1 - b.1).abs() <= 1e-9 * scale
    };
    // Crossings that land exactly on a grid corner produce zero-length
    // segments; they carry no geometry and would stall the chaining.
    segments.retain(|[a, b]| !close(*a, *b));
    let mut polylines = Vec::new();
    while let Some(seed) = segments.pop() {
        let mut line: std::collections::VecDeque<(f64, f64)> = seed.into_iter().collect();
        loop {
            let mut extended = false;
            let mut k = 0;
            while k < segments.len() {
                let [a, b] = segments[k];
                let head = *line.front().expect("line never empty");
                let tail = *line.back().expect("line never empty");
                if close(tail, a) {
                    line.push_back(b);
                } else if close(tail, b) {
                    line.push_back(a);
                } else if close(head, a) {
                    line.push_front(b);
                } else if close(head, b) {
                    line.push_front(a);
                } else {
                    k += 1;
                    continue;
                }
                segments.swap_remove(k);
                extended = true;
            }
            if !extended {
                break;
            }
        }
        polylines.push(line.into_iter().collect());
    }
    polylines
}
