//! Time-dependent tweezer controls: depth and position ramps.
//!
//! A [`ControlRamp`] is a closed-form pair of profiles `depth(t)` and
//! `position(t)` over a fixed duration.  Each profile is a smooth base
//! (constant, linear, or the constant-adiabaticity depth law) plus an
//! endpoint-pinned harmonic series `Σ_k c_k sin(kπ t/T)` — the search
//! space of the pulse optimizer.  Static pointing and intensity errors can
//! be injected for sensitivity studies.
//!
//! All quantities are in lattice-recoil units (depths in E_r, positions in
//! sites, times in ħ/E_r).

use crate::error::{Error, Result};
use crate::harmonic;
use std::f64::consts::PI;

/// Maximum number of harmonics per profile accepted by the builders.
pub const MAX_HARMONICS: usize = 32;

/// Linear interpolation with bit-exact endpoints.
fn lerp(from: f64, to: f64, tau: f64) -> f64 {
    if tau <= 0.0 {
        from
    } else if tau >= 1.0 {
        to
    } else {
        from + (to - from) * tau
    }
}

/// Endpoint-pinned harmonic series `Σ_k c_k sin(kπ τ)` on τ ∈ [0, 1].
///
/// Returns exactly 0 at τ ≤ 0 and τ ≥ 1, so ramps built on top of it hold
/// their endpoint values bit-exactly.
pub fn harmonic_series(tau: f64, coeffs: &[f64]) -> f64 {
    if tau <= 0.0 || tau >= 1.0 {
        return 0.0;
    }
    coeffs
        .iter()
        .enumerate()
        .map(|(i, c)| c * ((i + 1) as f64 * PI * tau).sin())
        .sum()
}

/// Smooth base of a depth profile.
#[derive(Debug, Clone, PartialEq)]
pub enum DepthProfile {
    /// Fixed depth.
    Constant(f64),
    /// Linear interpolation from `from` to `to`.
    Linear { from: f64, to: f64 },
    /// Constant-adiabaticity ramp-up: the depth that keeps the combined
    /// site+tweezer frequency on ω(t) = ω_o/(1 − 4√2 ξ ω_o t), obtained by
    /// inverting ω² = ω_o² + 8 V/(π² w²).
    ConstantAdiabaticity {
        xi: f64,
        omega_start: f64,
        waist: f64,
    },
}

/// Smooth base of a position profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PositionProfile {
    Constant(f64),
    Linear { from: f64, to: f64 },
}

/// Static control-error injection: tweezer pointing offset and relative
/// intensity (depth) scale.  Applied to the transport tweezer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorInjection {
    /// Pointing offset added to every position sample, in sites.
    pub position_offset: f64,
    /// Multiplicative depth scale (1.0 = calibrated).
    pub intensity_scale: f64,
}

impl ErrorInjection {
    pub fn new(position_offset: f64, intensity_scale: f64) -> Result<Self> {
        if !(intensity_scale > 0.0) {
            return Err(Error::Domain(format!(
                "intensity scale must be positive, got {intensity_scale}"
            )));
        }
        if !position_offset.is_finite() {
            return Err(Error::Domain(format!(
                "pointing offset must be finite, got {position_offset}"
            )));
        }
        Ok(ErrorInjection {
            position_offset,
            intensity_scale,
        })
    }

    pub fn none() -> Self {
        ErrorInjection {
            position_offset: 0.0,
            intensity_scale: 1.0,
        }
    }
}

/// One tweezer's control ramp over a fixed duration.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlRamp {
    /// Ramp duration, internal time units.
    pub duration: f64,
    pub depth_base: DepthProfile,
    /// Depth harmonic coefficients, E_r.
    pub depth_harmonics: Vec<f64>,
    pub position_base: PositionProfile,
    /// Position harmonic coefficients, sites.
    pub position_harmonics: Vec<f64>,
    /// Injected pointing offset, sites.
    pub position_offset: f64,
    /// Injected intensity scale.
    pub intensity_scale: f64,
}

impl ControlRamp {
    fn check(self) -> Result<Self> {
        if !(self.duration > 0.0) {
            return Err(Error::Domain(format!(
                "ramp duration must be positive, got {}",
                self.duration
            )));
        }
        if self.depth_harmonics.len() > MAX_HARMONICS
            || self.position_harmonics.len() > MAX_HARMONICS
        {
            return Err(Error::Domain(format!(
                "at most {MAX_HARMONICS} harmonics are supported"
            )));
        }
        Ok(self)
    }

    fn tau(&self, t: f64) -> f64 {
        (t / self.duration).clamp(0.0, 1.0)
    }

    fn base_depth(&self, tau: f64) -> f64 {
        match &self.depth_base {
            DepthProfile::Constant(v) => *v,
            DepthProfile::Linear { from, to } => lerp(*from, *to, tau),
            DepthProfile::ConstantAdiabaticity {
                xi,
                omega_start,
                waist,
            } => {
                let t = tau * self.duration;
                // omega stays finite on [0, T] because the builder puts the
                // profile pole beyond the ramp end.
                let omega = omega_start / (1.0 - 4.0 * std::f64::consts::SQRT_2 * xi * omega_start * t);
                (omega * omega - omega_start * omega_start) * PI * PI * waist * waist / 8.0
            }
        }
    }

    /// Depth before the non-negativity clamp (intensity scale applied).
    pub fn depth_unclamped(&self, t: f64) -> f64 {
        let tau = self.tau(t);
        self.intensity_scale * (self.base_depth(tau) + harmonic_series(tau, &self.depth_harmonics))
    }

    /// Tweezer depth at time `t`, clamped to ≥ 0, in E_r.
    pub fn depth(&self, t: f64) -> f64 {
        self.depth_unclamped(t).max(0.0)
    }

    /// Tweezer center position at time `t`, in sites.
    pub fn position(&self, t: f64) -> f64 {
        let tau = self.tau(t);
        let base = match self.position_base {
            PositionProfile::Constant(x) => x,
            PositionProfile::Linear { from, to } => lerp(from, to, tau),
        };
        base + harmonic_series(tau, &self.position_harmonics) + self.position_offset
    }

    /// Largest negative-depth excursion over `samples` uniformly spaced
    /// times, if any.  Candidates that clamp are penalized by the
    /// optimizer rather than rejected outright.
    pub fn negative_depth_excursion(&self, samples: usize) -> Option<f64> {
        let mut worst = 0.0f64;
        for i in 0..=samples {
            let t = self.duration * i as f64 / samples as f64;
            let d = self.depth_unclamped(t);
            if d < worst {
                worst = d;
            }
        }
        (worst < 0.0).then_some(-worst)
    }

    /// Largest depth over `samples` uniformly spaced times.
    pub fn max_depth(&self, samples: usize) -> f64 {
        (0..=samples)
            .map(|i| self.depth(self.duration * i as f64 / samples as f64))
            .fold(0.0f64, f64::max)
    }

    /// The ramp run backwards: profiles evaluated at T − t.
    ///
    /// Reversing maps sin(kπτ) onto −(−1)^k sin(kπτ), so the harmonic
    /// representation is closed under reversal.  The constant-adiabaticity
    /// base has no reversed closed form and is rejected.
    pub fn time_reversed(&self) -> Result<Self> {
        let depth_base = match &self.depth_base {
            DepthProfile::Constant(v) => DepthProfile::Constant(*v),
            DepthProfile::Linear { from, to } => DepthProfile::Linear {
                from: *to,
                to: *from,
            },
            DepthProfile::ConstantAdiabaticity { .. } => {
                return Err(Error::Domain(
                    "constant-adiabaticity ramps have no closed-form reversal".into(),
                ))
            }
        };
        let position_base = match self.position_base {
            PositionProfile::Constant(x) => PositionProfile::Constant(x),
            PositionProfile::Linear { from, to } => PositionProfile::Linear { from: to, to: from },
        };
        // sin(kπ(1−τ)) = −(−1)^k sin(kπτ): odd harmonics are already
        // symmetric about the midpoint, even ones flip sign.
        let flip = |coeffs: &[f64]| -> Vec<f64> {
            coeffs
                .iter()
                .enumerate()
                .map(|(i, c)| if (i + 1) % 2 == 0 { -*c } else { *c })
                .collect()
        };
        Ok(ControlRamp {
            duration: self.duration,
            depth_base,
            depth_harmonics: flip(&self.depth_harmonics),
            position_base,
            position_harmonics: flip(&self.position_harmonics),
            position_offset: self.position_offset,
            intensity_scale: self.intensity_scale,
        })
    }

    /// Spatial period on the trajectory corresponding to harmonic `k` of a
    /// position ramp covering `distance`: 2·distance/k.
    pub fn spatial_period(distance: f64, k: usize) -> f64 {
        2.0 * distance / k as f64
    }
}

/// Apply static control errors to a ramp (used for the transport tweezer).
pub fn inject_errors(ramp: &ControlRamp, errors: ErrorInjection) -> ControlRamp {
    let mut out = ramp.clone();
    out.position_offset += errors.position_offset;
    out.intensity_scale *= errors.intensity_scale;
    out
}

/// Constant-depth transport ramp: position moves linearly from `from` to
/// `to` over `duration` plus optional position harmonics.
pub fn transport_ramp(
    duration: f64,
    from: f64,
    to: f64,
    depth: f64,
    position_harmonics: &[f64],
) -> Result<ControlRamp> {
    ControlRamp {
        duration,
        depth_base: DepthProfile::Constant(depth),
        depth_harmonics: Vec::new(),
        position_base: PositionProfile::Linear { from, to },
        position_harmonics: position_harmonics.to_vec(),
        position_offset: 0.0,
        intensity_scale: 1.0,
    }
    .check()
}

/// Constant-adiabaticity ramp-up of a stationary tweezer from zero depth to
/// `target_depth` over `duration`, at fixed `position` inside a lattice of
/// depth `lattice_depth`.
///
/// The adiabaticity ξ follows from requiring the combined-trap frequency to
/// move from ω_o = 2√V_lat to ω_f = √(ω_o² + 8V_t/(π²w²)) in exactly
/// `duration`.
pub fn rampup_ramp(
    lattice_depth: f64,
    target_depth: f64,
    duration: f64,
    waist: f64,
    position: f64,
) -> Result<ControlRamp> {
    if !(lattice_depth > 0.0) || !(waist > 0.0) || !(duration > 0.0) || target_depth < 0.0 {
        return Err(Error::Domain(format!(
            "ramp-up needs positive lattice depth, waist and duration and a non-negative \
             target depth (got {lattice_depth}, {waist}, {duration}, {target_depth})"
        )));
    }
    if target_depth == 0.0 {
        // Degenerate request: hold zero depth.
        return ControlRamp {
            duration,
            depth_base: DepthProfile::Constant(0.0),
            depth_harmonics: Vec::new(),
            position_base: PositionProfile::Constant(position),
            position_harmonics: Vec::new(),
            position_offset: 0.0,
            intensity_scale: 1.0,
        }
        .check();
    }
    let omega_start = harmonic::lattice_frequency(lattice_depth);
    let omega_final =
        (omega_start * omega_start + harmonic::tweezer_frequency_sq(target_depth, waist)).sqrt();
    // Invert T_r = (1 − ω_o/ω_f)/(4√2 ξ ω_o) for ξ.
    let xi = (1.0 - omega_start / omega_final)
        / (4.0 * std::f64::consts::SQRT_2 * duration * omega_start);
    ControlRamp {
        duration,
        depth_base: DepthProfile::ConstantAdiabaticity {
            xi,
            omega_start,
            waist,
        },
        depth_harmonics: Vec::new(),
        position_base: PositionProfile::Constant(position),
        position_harmonics: Vec::new(),
        position_offset: 0.0,
        intensity_scale: 1.0,
    }
    .check()
}

/// Parameters of the band-mapping (merge) sequence: a transport tweezer
/// ramped from `start_depth` to zero while moving from `from` to `to`, next
/// to an auxiliary tweezer parked at `to` at constant `aux_depth`.
#[derive(Debug, Clone, PartialEq)]
pub struct BandMapSpec {
    /// Initial transport-tweezer depth, E_r.
    pub start_depth: f64,
    /// Constant auxiliary-tweezer depth, E_r.
    pub aux_depth: f64,
    /// Sequence duration, internal time units.
    pub duration: f64,
    /// Transport tweezer start position, sites.
    pub from: f64,
    /// Target site (auxiliary tweezer position), sites.
    pub to: f64,
    /// Tweezer waist, sites.
    pub waist: f64,
    /// Harmonics per profile made available to the optimizer.
    pub harmonics: usize,
}

impl BandMapSpec {
    /// The reference configuration: 400 E_r → 0 over 75 μs across one site
    /// against a 200 E_r auxiliary tweezer, 15 harmonics per profile.
    pub fn reference(duration: f64) -> Self {
        BandMapSpec {
            start_depth: 400.0,
            aux_depth: 200.0,
            duration,
            from: 0.0,
            to: 1.0,
            waist: 0.5,
            harmonics: 15,
        }
    }
}

/// Build the transport and auxiliary ramps of a band-mapping sequence.
///
/// `depth_harmonics` and `position_harmonics` modulate the transport
/// tweezer only; the auxiliary tweezer is strictly constant.
pub fn bandmap_ramp(
    spec: &BandMapSpec,
    depth_harmonics: &[f64],
    position_harmonics: &[f64],
) -> Result<(ControlRamp, ControlRamp)> {
    if spec.harmonics == 0 {
        return Err(Error::Domain(
            "band-map spec needs at least one harmonic per profile".into(),
        ));
    }
    if depth_harmonics.len() > spec.harmonics || position_harmonics.len() > spec.harmonics {
        return Err(Error::Domain(format!(
            "band map allows {} harmonics per profile, got {} depth / {} position",
            spec.harmonics,
            depth_harmonics.len(),
            position_harmonics.len()
        )));
    }
    let transport = ControlRamp {
        duration: spec.duration,
        depth_base: DepthProfile::Linear {
            from: spec.start_depth,
            to: 0.0,
        },
        depth_harmonics: depth_harmonics.to_vec(),
        position_base: PositionProfile::Linear {
            from: spec.from,
            to: spec.to,
        },
        position_harmonics: position_harmonics.to_vec(),
        position_offset: 0.0,
        intensity_scale: 1.0,
    }
    .check()?;
    let aux = ControlRamp {
        duration: spec.duration,
        depth_base: DepthProfile::Constant(spec.aux_depth),
        depth_harmonics: Vec::new(),
        position_base: PositionProfile::Constant(spec.to),
        position_harmonics: Vec::new(),
        position_offset: 0.0,
        intensity_scale: 1.0,
    }
    .check()?;
    Ok((transport, aux))
}
