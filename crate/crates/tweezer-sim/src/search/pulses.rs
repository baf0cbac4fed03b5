//! Optimization drivers that shape transport and merge ramps.
//!
//! Both drivers wrap a prepared simulation problem in a scalar objective
//! (excitation probability for transport, one minus the mapping fidelity
//! for the merge) and hand it to the downhill simplex.  Candidates that
//! break a hard constraint — a ramp clamped at zero depth, a wavepacket
//! driven off the grid, a depth excursion the fixed time step cannot
//! resolve — are penalized with a cost that dominates every genuine value
//! instead of aborting the search; real numerical faults still abort.
//!
//! Because the objectives are evaluated on one fixed grid and time step, an
//! optimizer can in principle burrow into discretization artifacts.  Each
//! driver therefore offers a verification re-run of its best candidate at
//! doubled grid resolution and halved time step, flagging results the
//! refined run does not reproduce.

use crate::bandmap::BandMapProblem;
use crate::error::{Error, Result};
use crate::transport::TransportProblem;

use super::simplex::{nelder_mead, Cost, OptimizationResult, SimplexOptions};

/// Initial simplex step for position-harmonic coefficients, in sites.
pub const POSITION_STEP: f64 = 0.02;

/// Initial simplex step for depth-harmonic coefficients, in recoil
/// energies.
pub const DEPTH_STEP: f64 = 10.0;

/// Cost floor for hard-constraint violations.  Genuine objectives here are
/// probability-scale (≤ 1), so any penalized candidate ranks behind every
/// genuine one even on raw value.
pub const PENALTY_BASE: f64 = 1e3;

/// Harmonics optimized in the cheap first stage of a large merge search.
const STAGE_ONE_HARMONICS: usize = 5;

/// Fraction of the evaluation budget spent on that first stage.
const STAGE_ONE_BUDGET_FRACTION: f64 = 0.4;

/// Best-candidate re-run at doubled grid resolution and halved time step.
#[derive(Debug, Clone, Copy)]
pub struct ResolutionCheck {
    /// Objective at the optimization's own resolution.
    pub coarse: f64,
    /// Objective of the same candidate at the refined resolution.
    pub fine: f64,
    /// The two agree within 50% (or both are negligible), so the optimum
    /// is not a discretization artifact.
    pub consistent: bool,
}

fn resolution_check(coarse: f64, fine: f64) -> ResolutionCheck {
    let scale = coarse.abs().max(fine.abs());
    let negligible = scale <= 1e-9;
    ResolutionCheck {
        coarse,
        fine,
        consistent: negligible || (fine - coarse).abs() <= 0.5 * scale,
    }
}

/// Outcome of a transport-ramp shape search.
#[derive(Debug, Clone)]
pub struct TransportOptimization {
    /// Excitation probability of the plain linear ramp.
    pub baseline: f64,
    /// The simplex search over position-harmonic coefficients.
    pub result: OptimizationResult,
    /// Refined-resolution re-run of the best candidate, when requested.
    pub verification: Option<ResolutionCheck>,
}

/// Shape `harmonics` position-harmonic coefficients of a single-site
/// transport ramp of the given `duration` to minimize the final excitation
/// probability.
///
/// An empty `options.initial_step` uses [`POSITION_STEP`] for every
/// coefficient.  `verify` re-runs the best candidate at doubled resolution.
/// Candidates that drive the atom off the grid are penalized; other
/// propagation failures abort the search.
pub fn optimize_transport(
    problem: &TransportProblem,
    duration: f64,
    harmonics: usize,
    options: &SimplexOptions,
    verify: bool,
) -> Result<TransportOptimization> {
    let baseline = problem.run(duration, &[])?;

    let mut opts = options.clone();
    if opts.initial_step.is_empty() && harmonics > 0 {
        opts.initial_step = vec![POSITION_STEP; harmonics];
    }

    let mut failure: Option<Error> = None;
    let mut objective = |coeffs: &[f64]| -> Cost {
        if failure.is_some() {
            return Cost::penalized(f64::INFINITY);
        }
        match problem.run(duration, coeffs) {
            Ok(p) => Cost::genuine(p),
            Err(Error::DomainOverflow(_) | Error::Domain(_)) => Cost::penalized(PENALTY_BASE),
            Err(e) => {
                failure = Some(e);
                Cost::penalized(f64::INFINITY)
            }
        }
    };
    let x0 = vec![0.0; harmonics];
    let result = nelder_mead(&mut objective, &x0, &opts)?;
    if let Some(e) = failure {
        return Err(e);
    }

    let verification = if verify {
        let fine = problem.refined()?.run(duration, &result.best)?;
        Some(resolution_check(result.objective, fine))
    } else {
        None
    };
    Ok(TransportOptimization {
        baseline,
        result,
        verification,
    })
}

/// Outcome of a merge-ramp shape search.
#[derive(Debug, Clone)]
pub struct MergeOptimization {
    /// Infidelity 1 − F of the plain linear ramps.
    pub baseline: f64,
    /// The simplex search over `[depth…, position…]` coefficients.
    pub result: OptimizationResult,
    /// Mapping fidelity of the transported atom at the best candidate.
    pub fidelity_transported: f64,
    /// Fidelity of the stationary atom at the best candidate.
    pub fidelity_stationary: f64,
    /// Refined-resolution re-run of the best candidate, when requested.
    pub verification: Option<ResolutionCheck>,
}

impl MergeOptimization {
    /// Depth-harmonic half of the best coefficient vector.
    pub fn best_depth(&self) -> &[f64] {
        &self.result.best[..self.result.best.len() / 2]
    }

    /// Position-harmonic half of the best coefficient vector.
    pub fn best_position(&self) -> &[f64] {
        &self.result.best[self.result.best.len() / 2..]
    }
}

/// Shape `harmonics` depth and `harmonics` position coefficients of a merge
/// ramp to minimize 1 − F, the product infidelity of the two single-atom
/// mappings.
///
/// Searches beyond [`STAGE_ONE_HARMONICS`] run in two stages: the lowest
/// five harmonics of each ramp first, then the full coefficient vector
/// warm-started from that partial optimum — low harmonics carry most of the
/// correction, so the cheap stage moves fastest.  An empty
/// `options.initial_step` uses [`DEPTH_STEP`] and [`POSITION_STEP`];
/// otherwise supply one value to broadcast or exactly `2·harmonics` values
/// ordered `[depth…, position…]`.
pub fn optimize_bandmap(
    problem: &BandMapProblem,
    harmonics: usize,
    options: &SimplexOptions,
    verify: bool,
) -> Result<MergeOptimization> {
    let baseline_outcome = problem.run(&[], &[], 0)?;
    let baseline = 1.0 - baseline_outcome.fidelity;

    let steps = resolved_merge_steps(options, harmonics)?;

    let mut failure: Option<Error> = None;
    let mut objective = |x: &[f64]| -> Cost {
        if failure.is_some() {
            return Cost::penalized(f64::INFINITY);
        }
        let (depth, position) = x.split_at(x.len() / 2);
        match problem.run(depth, position, 0) {
            Ok(outcome) => match outcome.clamped {
                None => Cost::genuine(1.0 - outcome.fidelity),
                Some(excursion) => Cost::penalized(PENALTY_BASE + excursion.abs()),
            },
            Err(Error::DomainOverflow(_) | Error::Domain(_)) => Cost::penalized(PENALTY_BASE),
            Err(e) => {
                failure = Some(e);
                Cost::penalized(f64::INFINITY)
            }
        }
    };

    let full_dim = 2 * harmonics;
    let mut warm = vec![0.0; full_dim];
    let mut spent = 0usize;
    let mut history = Vec::new();

    let stage_one_budget = (options.max_evaluations as f64 * STAGE_ONE_BUDGET_FRACTION) as usize;
    let staged = harmonics > STAGE_ONE_HARMONICS
        && stage_one_budget > 2 * STAGE_ONE_HARMONICS + 1
        && options.max_evaluations - stage_one_budget > full_dim + 1;
    if staged {
        let k = STAGE_ONE_HARMONICS;
        let mut stage_steps = Vec::with_capacity(2 * k);
        stage_steps.extend_from_slice(&steps[..k]);
        stage_steps.extend_from_slice(&steps[harmonics..harmonics + k]);
        let stage_opts = SimplexOptions {
            initial_step: stage_steps,
            max_evaluations: stage_one_budget,
            restarts: options.restarts.min(1),
            ..options.clone()
        };
        let mut stage_objective = |y: &[f64]| -> Cost {
            let mut full = vec![0.0; full_dim];
            full[..k].copy_from_slice(&y[..k]);
            full[harmonics..harmonics + k].copy_from_slice(&y[k..]);
            objective(&full)
        };
        let stage = nelder_mead(&mut stage_objective, &vec![0.0; 2 * k], &stage_opts)?;
        spent = stage.evaluations;
        warm[..k].copy_from_slice(&stage.best[..k]);
        warm[harmonics..harmonics + k].copy_from_slice(&stage.best[k..]);
        history = stage.history;
    }

    let final_opts = SimplexOptions {
        initial_step: steps,
        max_evaluations: options.max_evaluations - spent,
        ..options.clone()
    };
    let mut result = nelder_mead(&mut objective, &warm, &final_opts)?;
    if let Some(e) = failure {
        return Err(e);
    }
    result.evaluations += spent;
    if !history.is_empty() {
        history.extend(result.history);
        result.history = history;
    }

    let best_outcome = problem.run(
        &result.best[..harmonics],
        &result.best[harmonics..],
        0,
    )?;
    let verification = if verify {
        let fine = problem.refined()?.run(
            &result.best[..harmonics],
            &result.best[harmonics..],
            0,
        )?;
        Some(resolution_check(result.objective, 1.0 - fine.fidelity))
    } else {
        None
    };

    Ok(MergeOptimization {
        baseline,
        result,
        fidelity_transported: best_outcome.fidelity_transported,
        fidelity_stationary: best_outcome.fidelity_stationary,
        verification,
    })
}

/// Steps for the `[depth…, position…]` merge coefficient vector.
fn resolved_merge_steps(options: &SimplexOptions, harmonics: usize) -> Result<Vec<f64>> {
    match options.initial_step.len() {
        0 => {
            let mut steps = vec![DEPTH_STEP; harmonics];
            steps.extend(std::iter::repeat(POSITION_STEP).take(harmonics));
            Ok(steps)
        }
        1 => Ok(vec![options.initial_step[0]; 2 * harmonics]),
        n if n == 2 * harmonics => Ok(options.initial_step.clone()),
        n => Err(Error::Domain(format!(
            "merge search over {harmonics} harmonics needs {} steps (or one to broadcast), got {n}",
            2 * harmonics
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::controls::{BandMapSpec, ErrorInjection};
    use crate::units::UnitSystem;

    fn units() -> UnitSystem {
        UnitSystem::rb87_1064()
    }

    fn quick_transport() -> TransportProblem {
        TransportProblem::with_resolution(50.0, 500.0, 0.0, 1.0, 0.5, 128, 1.0).unwrap()
    }

    #[test]
    fn zero_harmonics_returns_the_linear_ramp_baseline() {
        let problem = quick_transport();
        let duration = units().time_from_si(25e-6);
        let opt =
            optimize_transport(&problem, duration, 0, &SimplexOptions::default(), false).unwrap();
        assert_eq!(opt.result.objective, opt.baseline);
        assert_eq!(opt.result.evaluations, 1);
        assert!(opt.result.best.is_empty());
    }

    #[test]
    fn two_harmonics_already_beat_the_linear_ramp() {
        // The two-harmonic subspace bottoms out near 0.46× the linear-ramp
        // error (the strong corrections live on higher harmonics); check
        // that the search finds that much.
        let problem = quick_transport();
        let duration = units().time_from_si(25e-6);
        let options = SimplexOptions {
            max_evaluations: 80,
            restarts: 1,
            ..SimplexOptions::default()
        };
        let opt = optimize_transport(&problem, duration, 2, &options, false).unwrap();
        assert!(
            opt.result.objective < 0.6 * opt.baseline,
            "optimized {:.3e} vs baseline {:.3e}",
            opt.result.objective,
            opt.baseline
        );
        assert!(!opt.result.best_penalized);
    }

    #[test]
    fn transport_optimization_reruns_bit_identically() {
        let problem = quick_transport();
        let duration = units().time_from_si(25e-6);
        let options = SimplexOptions {
            max_evaluations: 40,
            restarts: 0,
            ..SimplexOptions::default()
        };
        let a = optimize_transport(&problem, duration, 2, &options, false).unwrap();
        let b = optimize_transport(&problem, duration, 2, &options, false).unwrap();
        assert_eq!(a.result.best, b.result.best);
        assert_eq!(a.result.objective, b.result.objective);
        assert_eq!(a.result.history, b.result.history);
    }

    #[test]
    fn merge_search_improves_on_the_linear_ramps() {
        let spec = BandMapSpec::reference(units().time_from_si(75e-6));
        let problem =
            BandMapProblem::with_resolution(&spec, 50.0, ErrorInjection::none(), 64, 1.0).unwrap();
        let options = SimplexOptions {
            max_evaluations: 60,
            restarts: 0,
            ..SimplexOptions::default()
        };
        let opt = optimize_bandmap(&problem, 1, &options, false).unwrap();
        assert!(
            opt.result.objective < opt.baseline,
            "optimized {:.3e} vs baseline {:.3e}",
            opt.result.objective,
            opt.baseline
        );
        assert!(!opt.result.best_penalized);
        assert!(opt.fidelity_transported > 0.0 && opt.fidelity_transported <= 1.0);
        assert!(opt.fidelity_stationary > 0.0 && opt.fidelity_stationary <= 1.0);
        assert_eq!(opt.best_depth().len(), 1);
        assert_eq!(opt.best_position().len(), 1);
    }

    #[test]
    fn resolution_check_flags_disagreement() {
        assert!(resolution_check(1.0e-4, 1.2e-4).consistent);
        assert!(!resolution_check(1.0e-4, 2.1e-4).consistent);
        assert!(resolution_check(1e-12, 8e-11).consistent, "both negligible");
    }

    #[test]
    fn merge_step_resolution_validates_lengths() {
        let options = SimplexOptions {
            initial_step: vec![1.0, 2.0, 3.0],
            ..SimplexOptions::default()
        };
        assert!(resolved_merge_steps(&options, 2).is_err());
        let defaults = resolved_merge_steps(&SimplexOptions::default(), 2).unwrap();
        assert_eq!(defaults, vec![DEPTH_STEP, DEPTH_STEP, POSITION_STEP, POSITION_STEP]);
    }
}
