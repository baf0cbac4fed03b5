//! Derivative-free downhill-simplex search.
//!
//! Drives the pulse-shape optimizations in this crate: a handful of ramp
//! harmonic coefficients against a scalar infidelity.  The implementation
//! is the standard Nelder–Mead method (reflect / expand / contract /
//! shrink) with deterministic tie-breaking, an evaluation budget shared
//! across restarts, and explicit handling of *penalized* candidates —
//! parameter sets that violated a hard constraint and must never win
//! against a genuine one.

use std::cmp::Ordering;

use crate::error::{Error, Result};

/// One objective evaluation: a scalar cost plus a flag marking candidates
/// that violated a hard constraint (for example a ramp that had to be
/// clamped to stay physical).
///
/// Ordering is lexicographic: any genuine cost beats any penalized one, and
/// equal flags compare by value.  Objectives should still give penalized
/// candidates a value that dominates genuine ones (the built-in drivers use
/// 1000 plus the violation size against probability-scale objectives) so
/// that recorded cost histories are monotone in the same order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cost {
    /// Objective value; lower is better.
    pub value: f64,
    /// The candidate violated a hard constraint.
    pub penalized: bool,
}

impl Cost {
    /// A well-formed evaluation.
    pub fn genuine(value: f64) -> Self {
        Cost {
            value,
            penalized: false,
        }
    }

    /// A constraint-violating evaluation; `value` should dominate every
    /// genuine cost so histories stay ordered.
    pub fn penalized(value: f64) -> Self {
        Cost {
            value,
            penalized: true,
        }
    }
}

impl From<f64> for Cost {
    fn from(value: f64) -> Self {
        Cost::genuine(value)
    }
}

/// Total order on costs: genuine before penalized, then by value.
fn cost_order(a: &Cost, b: &Cost) -> Ordering {
    (a.penalized as u8)
        .cmp(&(b.penalized as u8))
        .then(a.value.total_cmp(&b.value))
}

/// Tuning knobs for [`nelder_mead`].
#[derive(Debug, Clone)]
pub struct SimplexOptions {
    /// Initial simplex step per coordinate.  One entry broadcasts to every
    /// coordinate; empty means the calling driver must fill in its own
    /// documented defaults.
    pub initial_step: Vec<f64>,
    /// Reflection coefficient (α > 0).
    pub reflection: f64,
    /// Expansion coefficient (γ > 1).
    pub expansion: f64,
    /// Contraction coefficient (β ∈ (0, 1)).
    pub contraction: f64,
    /// Shrink coefficient (δ ∈ (0, 1)).
    pub shrink: f64,
    /// Converged when the best-to-worst objective spread falls below this…
    pub objective_tolerance: f64,
    /// …and every vertex sits within this ∞-norm distance of the best.
    pub simplex_tolerance: f64,
    /// Total evaluation budget across all restarts.
    pub max_evaluations: usize,
    /// Extra runs re-seeded on the incumbent with halved steps.
    pub restarts: usize,
    /// Record every evaluated cost value in the result.
    pub keep_history: bool,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        SimplexOptions {
            initial_step: Vec::new(),
            reflection: 1.0,
            expansion: 2.0,
            contraction: 0.5,
            shrink: 0.5,
            objective_tolerance: 1e-12,
            simplex_tolerance: 1e-8,
            max_evaluations: 400,
            restarts: 3,
            keep_history: true,
        }
    }
}

impl SimplexOptions {
    fn validate(&self) -> Result<()> {
        let checks = [
            (self.reflection > 0.0, "reflection must be > 0"),
            (self.expansion > 1.0, "expansion must be > 1"),
            (
                self.contraction > 0.0 && self.contraction < 1.0,
                "contraction must lie in (0, 1)",
            ),
            (
                self.shrink > 0.0 && self.shrink < 1.0,
                "shrink must lie in (0, 1)",
            ),
            (
                self.objective_tolerance >= 0.0,
                "objective tolerance must be ≥ 0",
            ),
            (
                self.simplex_tolerance >= 0.0,
                "simplex tolerance must be ≥ 0",
            ),
        ];
        for (ok, message) in checks {
            if !ok {
                return Err(Error::Domain(format!("simplex options: {message}")));
            }
        }
        for value in [
            self.reflection,
            self.expansion,
            self.contraction,
            self.shrink,
            self.objective_tolerance,
            self.simplex_tolerance,
        ] {
            if !value.is_finite() {
                return Err(Error::Domain(
                    "simplex options contain a non-finite coefficient".into(),
                ));
            }
        }
        Ok(())
    }

    /// Expand `initial_step` for a `dim`-dimensional search.
    fn resolved_steps(&self, dim: usize) -> Result<Vec<f64>> {
        let steps = match self.initial_step.len() {
            n if n == dim => self.initial_step.clone(),
            1 => vec![self.initial_step[0]; dim],
            0 if dim == 0 => Vec::new(),
            n => {
                return Err(Error::Domain(format!(
                    "need {dim} initial steps (or a single one to broadcast), got {n}"
                )))
            }
        };
        if steps.iter().any(|s| !s.is_finite() || *s == 0.0) {
            return Err(Error::Domain(
                "initial simplex steps must be finite and non-zero".into(),
            ));
        }
        Ok(steps)
    }
}

/// Outcome of a simplex search.
#[derive(Debug, Clone)]
pub struct OptimizationResult {
    /// Lowest-cost coordinates ever evaluated.
    pub best: Vec<f64>,
    /// Cost at `best`.
    pub objective: f64,
    /// Number of objective evaluations spent.
    pub evaluations: usize,
    /// Some run met both tolerance criteria (as opposed to the whole search
    /// running out of budget unconverged).
    pub converged: bool,
    /// Every candidate violated its constraints, so even the returned best
    /// is a penalized one.
    pub best_penalized: bool,
    /// Cost value of every evaluation in order (empty unless requested).
    pub history: Vec<f64>,
}

/// Budget-guarded objective wrapper tracking the global incumbent.
struct Evaluator<'a> {
    objective: &'a mut dyn FnMut(&[f64]) -> Cost,
    evaluations: usize,
    budget: usize,
    history: Option<Vec<f64>>,
    best: (Vec<f64>, Cost),
}

impl Evaluator<'_> {
    /// `None` once the evaluation budget is spent.  Non-finite objective
    /// values are treated as infinitely bad penalized candidates.
    fn try_eval(&mut self, x: &[f64]) -> Option<Cost> {
        if self.evaluations >= self.budget {
            return None;
        }
        self.evaluations += 1;
        let mut cost = (self.objective)(x);
        if !cost.value.is_finite() {
            cost = Cost::penalized(f64::INFINITY);
        }
        if let Some(history) = self.history.as_mut() {
            history.push(cost.value);
        }
        if cost_order(&cost, &self.best.1) == Ordering::Less {
            self.best = (x.to_vec(), cost);
        }
        Some(cost)
    }
}

enum RunEnd {
    Converged,
    Budget,
}

/// `c + t·(x − c)`.
fn blend(c: &[f64], x: &[f64], t: f64) -> Vec<f64> {
    c.iter().zip(x).map(|(ci, xi)| ci + t * (xi - ci)).collect()
}

fn converged(simplex: &[(Vec<f64>, Cost)], options: &SimplexOptions) -> bool {
    let (best_x, best_cost) = &simplex[0];
    let (_, worst_cost) = simplex.last().expect("simplex is never empty");
    let spread_ok = best_cost.penalized == worst_cost.penalized
        && worst_cost.value.is_finite()
        && worst_cost.value - best_cost.value <= options.objective_tolerance;
    let size_ok = simplex[1..].iter().all(|(x, _)| {
        x.iter()
            .zip(best_x)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
            <= options.simplex_tolerance
    });
    spread_ok && size_ok
}

/// One full simplex run from `seed` (already evaluated) until convergence
/// or budget exhaustion.  The evaluator carries the incumbent across runs.
fn run_simplex(
    ev: &mut Evaluator<'_>,
    seed: (Vec<f64>, Cost),
    steps: &[f64],
    options: &SimplexOptions,
) -> RunEnd {
    let dim = seed.0.len();
    let mut simplex = Vec::with_capacity(dim + 1);
    simplex.push(seed);
    for i in 0..dim {
        let mut x = simplex[0].0.clone();
        x[i] += steps[i];
        let Some(cost) = ev.try_eval(&x) else {
            return RunEnd::Budget;
        };
        simplex.push((x, cost));
    }

    loop {
        // Stable sort keeps the earlier vertex first on exact ties, making
        // every decision below deterministic.
        simplex.sort_by(|a, b| cost_order(&a.1, &b.1));
        if converged(&simplex, options) {
            return RunEnd::Converged;
        }

        let centroid: Vec<f64> = (0..dim)
            .map(|j| simplex[..dim].iter().map(|(x, _)| x[j]).sum::<f64>() / dim as f64)
            .collect();
        let worst = simplex[dim].clone();
        let reflected = blend(&centroid, &worst.0, -options.reflection);
        let Some(reflected_cost) = ev.try_eval(&reflected) else {
            return RunEnd::Budget;
        };

        if cost_order(&reflected_cost, &simplex[0].1) == Ordering::Less {
            // Best so far: try stretching further along the same line.
            let expanded = blend(&centroid, &reflected, options.expansion);
            let Some(expanded_cost) = ev.try_eval(&expanded) else {
                simplex[dim] = (reflected, reflected_cost);
                return RunEnd::Budget;
            };
            simplex[dim] = if cost_order(&expanded_cost, &reflected_cost) == Ordering::Less {
                (expanded, expanded_cost)
            } else {
                (reflected, reflected_cost)
            };
        } else if cost_order(&reflected_cost, &simplex[dim - 1].1) == Ordering::Less {
            simplex[dim] = (reflected, reflected_cost);
        } else {
            // Reflection did not help; contract toward the better side.
            let (contracted, reference) =
                if cost_order(&reflected_cost, &worst.1) == Ordering::Less {
                    (blend(&centroid, &reflected, options.contraction), reflected_cost)
                } else {
                    (blend(&centroid, &worst.0, options.contraction), worst.1)
                };
            let Some(contracted_cost) = ev.try_eval(&contracted) else {
                return RunEnd::Budget;
            };
            if cost_order(&contracted_cost, &reference) != Ordering::Greater {
                simplex[dim] = (contracted, contracted_cost);
            } else {
                // Contraction failed too: shrink everything toward the best.
                for i in 1..=dim {
                    let x = blend(&simplex[0].0, &simplex[i].0, options.shrink);
                    let Some(cost) = ev.try_eval(&x) else {
                        return RunEnd::Budget;
                    };
                    simplex[i] = (x, cost);
                }
            }
        }
    }
}

/// Minimize `objective` from `x0` with the Nelder–Mead downhill simplex.
///
/// The search is fully deterministic (exact ties keep the lower-index
/// vertex) and spends at most `options.max_evaluations` objective calls in
/// total, shared across `options.restarts + 1` runs; each restart re-seeds
/// an axis-aligned simplex on the incumbent with halved steps.  The
/// returned best is the lowest-cost point *ever evaluated*, so it is never
/// above any recorded history entry, and a penalized candidate is returned
/// only when every evaluation was penalized (flagged via
/// [`OptimizationResult::best_penalized`]).
///
/// A non-finite objective at `x0` is an input error; anywhere later it is
/// treated as an infinitely bad penalized candidate.
pub fn nelder_mead(
    objective: &mut dyn FnMut(&[f64]) -> Cost,
    x0: &[f64],
    options: &SimplexOptions,
) -> Result<OptimizationResult> {
    options.validate()?;
    let dim = x0.len();
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain(
            "start point has non-finite coordinates".into(),
        ));
    }
    if options.max_evaluations < dim + 1 {
        return Err(Error::Domain(format!(
            "evaluation budget {} cannot build a {}-vertex initial simplex",
            options.max_evaluations,
            dim + 1
        )));
    }
    let steps = options.resolved_steps(dim)?;

    let first = objective(x0);
    if !first.value.is_finite() {
        return Err(Error::Domain(format!(
            "objective is not finite at the start point (value {})",
            first.value
        )));
    }
    let mut ev = Evaluator {
        objective,
        evaluations: 1,
        budget: options.max_evaluations,
        history: options.keep_history.then(|| vec![first.value]),
        best: (x0.to_vec(), first),
    };

    // A budget-truncated restart does not revoke convergence: restarts only
    // refine the incumbent, never regress it.
    let mut did_converge = dim == 0;
    if dim > 0 {
        let mut scale = 1.0;
        for _ in 0..=options.restarts {
            if ev.evaluations >= ev.budget {
                break;
            }
            let seed = ev.best.clone();
            let round_steps: Vec<f64> = steps.iter().map(|s| s * scale).collect();
            match run_simplex(&mut ev, seed, &round_steps, options) {
                RunEnd::Converged => did_converge = true,
                RunEnd::Budget => break,
            }
            scale *= 0.5;
        }
    }

    let (best, cost) = ev.best;
    let history = ev.history.take().unwrap_or_default();
    Ok(OptimizationResult {
        best,
        objective: cost.value,
        evaluations: ev.evaluations,
        converged: did_converge,
        best_penalized: cost.penalized,
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn opts(steps: &[f64], budget: usize) -> SimplexOptions {
        SimplexOptions {
            initial_step: steps.to_vec(),
            max_evaluations: budget,
            ..SimplexOptions::default()
        }
    }

    #[test]
    fn quadratic_bowl_converges_to_the_origin() {
        let mut calls = 0usize;
        let mut objective = |x: &[f64]| {
            calls += 1;
            Cost::genuine(x.iter().map(|v| v * v).sum())
        };
        let result = nelder_mead(&mut objective, &[1.0, 1.0, 1.0], &opts(&[0.5], 600)).unwrap();
        assert!(result.objective < 1e-10, "objective {:.3e}", result.objective);
        assert!(result.converged);
        assert!(!result.best_penalized);
        assert_eq!(result.evaluations, calls);
        assert!(result.best.iter().all(|v| v.abs() < 1e-5));
    }

    #[test]
    fn rosenbrock_reaches_the_banana_floor_within_budget() {
        let mut objective = |x: &[f64]| {
            let (a, b) = (x[0], x[1]);
            Cost::genuine((1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2))
        };
        let result = nelder_mead(&mut objective, &[-1.2, 1.0], &opts(&[0.1], 500)).unwrap();
        assert!(
            result.objective < 1e-6,
            "objective {:.3e} after {} evaluations",
            result.objective,
            result.evaluations
        );
        assert!(result.evaluations <= 500);
        assert!((result.best[0] - 1.0).abs() < 1e-2);
        assert!((result.best[1] - 1.0).abs() < 1e-2);
    }

    #[test]
    fn zero_dimensions_cost_one_evaluation() {
        let mut objective = |_: &[f64]| Cost::genuine(42.0);
        let result = nelder_mead(&mut objective, &[], &opts(&[], 10)).unwrap();
        assert_eq!(result.evaluations, 1);
        assert_eq!(result.objective, 42.0);
        assert!(result.converged);
        assert!(result.best.is_empty());
    }

    #[test]
    fn non_finite_start_is_an_input_error() {
        let mut objective = |_: &[f64]| Cost::genuine(f64::NAN);
        let err = nelder_mead(&mut objective, &[0.0], &opts(&[0.1], 50)).unwrap_err();
        assert!(matches!(err, Error::Domain(_)), "got {err:?}");

        let mut fine = |x: &[f64]| Cost::genuine(x[0] * x[0]);
        let err = nelder_mead(&mut fine, &[f64::INFINITY], &opts(&[0.1], 50)).unwrap_err();
        assert!(matches!(err, Error::Domain(_)), "got {err:?}");
    }

    #[test]
    fn non_finite_mid_run_is_penalized_not_fatal() {
        // Objective blows up on one side; the search must route around it.
        let mut objective = |x: &[f64]| {
            if x[0] < -2.0 {
                Cost::genuine(f64::NAN)
            } else {
                Cost::genuine((x[0] - 1.0).powi(2))
            }
        };
        let result = nelder_mead(&mut objective, &[-1.5], &opts(&[1.0], 200)).unwrap();
        assert!(result.objective < 1e-8);
        assert!(!result.best_penalized);
    }

    #[test]
    fn budget_is_respected_and_flagged() {
        let mut objective = |x: &[f64]| Cost::genuine(x.iter().map(|v| v * v).sum());
        let result = nelder_mead(&mut objective, &[5.0, 5.0], &opts(&[0.1], 10)).unwrap();
        assert_eq!(result.evaluations, 10);
        assert!(!result.converged);
    }

    #[test]
    fn best_never_exceeds_any_history_entry() {
        let mut objective = |x: &[f64]| {
            let v: f64 = x.iter().map(|v| (v - 0.3).powi(2)).sum();
            // Penalize a stripe to exercise the flag path with a dominating
            // value, as the pulse drivers do.
            if x[0] > 0.8 {
                Cost::penalized(1e3 + v)
            } else {
                Cost::genuine(v)
            }
        };
        let result = nelder_mead(&mut objective, &[0.9, -0.4], &opts(&[0.3], 300)).unwrap();
        assert!(!result.best_penalized);
        assert!(result.history.iter().all(|&h| result.objective <= h));
        assert!(result.objective < 1e-9);
    }

    #[test]
    fn all_penalized_candidates_flag_the_result() {
        let mut objective = |x: &[f64]| Cost::penalized(1e3 + x[0].abs());
        let result = nelder_mead(&mut objective, &[2.0], &opts(&[0.5], 60)).unwrap();
        assert!(result.best_penalized);
        assert!(result.objective >= 1e3);
    }

    #[test]
    fn incumbent_is_monotone_over_evaluations() {
        let mut objective = |x: &[f64]| {
            Cost::genuine((x[0] - 0.2).powi(2) + 0.5 * (x[1] + 0.7).powi(2) + x[0] * x[1] * 0.1)
        };
        let result = nelder_mead(&mut objective, &[3.0, -3.0], &opts(&[0.4], 250)).unwrap();
        let mut incumbent = f64::INFINITY;
        for &h in &result.history {
            incumbent = incumbent.min(h);
        }
        assert_eq!(incumbent, result.objective);
        // Running minimum of the history is non-increasing by construction;
        // the meaningful check is that the result equals it exactly.
    }

    proptest! {
        #[test]
        fn permuting_coordinates_of_a_symmetric_objective_changes_nothing(
            seed in proptest::collection::vec(-2.0f64..2.0, 3),
        ) {
            let run = |x0: &[f64]| {
                let mut objective = |x: &[f64]| {
                    let sum_sq: f64 = x.iter().map(|v| v * v).sum();
                    let product: f64 = x.iter().product();
                    Cost::genuine(sum_sq + 0.1 * product)
                };
                nelder_mead(&mut objective, x0, &opts(&[0.25], 400)).unwrap()
            };
            let forward = run(&seed);
            let mut reversed_seed = seed.clone();
            reversed_seed.reverse();
            let reversed = run(&reversed_seed);
            // The objective is symmetric under coordinate relabeling, so the
            // mirrored search reaches the same objective value.
            prop_assert!(
                (forward.objective - reversed.objective).abs()
                    <= 1e-9 + 1e-6 * forward.objective.abs(),
                "forward {:.3e} vs reversed {:.3e}",
                forward.objective,
                reversed.objective
            );
        }

        #[test]
        fn search_is_deterministic(
            seed in proptest::collection::vec(-1.5f64..1.5, 2),
        ) {
            let run = || {
                let mut objective = |x: &[f64]| {
                    Cost::genuine((x[0] - 0.5).powi(2) + (x[1] * x[0] - 0.25).powi(2))
                };
                nelder_mead(&mut objective, &seed, &opts(&[0.2], 300)).unwrap()
            };
            let a = run();
            let b = run();
            prop_assert_eq!(a.best, b.best);
            prop_assert_eq!(a.objective, b.objective);
            prop_assert_eq!(a.evaluations, b.evaluations);
            prop_assert_eq!(a.history, b.history);
        }
    }
}
