//! Named experiments: each scenario drives the library end to end and
//! writes deterministic CSV/report artifacts into the configured output
//! directory.
//!
//! Reproducibility contract: re-running a scenario with the same
//! configuration produces byte-identical files.  Every artifact starts
//! with `#`-prefixed header lines carrying the tool version and the
//! resolved-parameter hash, every run writes a `config-echo.txt` with the
//! full resolved configuration, and floats are rendered with shortest
//! round-trip precision.  Optimization scenarios persist their optimum
//! (keyed by the config hash) and later runs — including dependent
//! scenarios like `multisite` and `sensitivity-map` — reuse it instead of
//! re-searching.
//!
//! Under `--verify` each scenario re-checks a sample of its results at
//! doubled spatial and temporal resolution; disagreement beyond the
//! tolerances fails the run with a verification error (exit code 4).

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::bandmap::{BandMapOutcome, BandMapProblem};
use crate::budget::{
    self, dephasing_budget, intensity_dephasing, lattice_coherence_report, scattering_probability,
    scattering_rate, DephasingScenario, ScatteringScenario,
};
use crate::config::{Config, Scenario};
use crate::controls::{BandMapSpec, ErrorInjection};
use crate::dynamics::{stationary_states, tunneling_rate, Grid};
use crate::error::{Error, Result};
use crate::gates::{
    self, gate_budget, interaction_energy, interaction_phase, merge_gate_phase_time,
    phase_gate_time, spin_dependent_gate_sequence, swap_times, transverse_mean_frequency,
    GateKind,
};
use crate::harmonic;
use crate::potentials::{LatticeSpec, PotentialField, PotentialTerm, TweezerSpec};
use crate::search::{
    find_block, optimize_bandmap, optimize_transport, read_blocks, write_blocks,
    MergeOptimization, RecordBlock, SimplexOptions, TransportOptimization,
};
use crate::transport::{RampUpProblem, TransportProblem};
use crate::units::{QubitPair, SpeciesData, UnitSystem};

/// Tolerances of the doubled-resolution re-checks: plain simulations must
/// agree to 10% (or an absolute floor suited to excitation probabilities);
/// optimizer-refined objectives get 50%, since a pulse tuned at one
/// resolution legitimately loses some polish at another.
const VERIFY_REL: f64 = 0.10;
const VERIFY_ABS: f64 = 1e-4;
const VERIFY_OPT_REL: f64 = 0.50;
/// Every n-th scan point is re-checked under `--verify`.
const VERIFY_STRIDE: usize = 8;
/// Trajectory snapshots used for the merge interaction phase.
const PHASE_FRAMES: usize = 201;

/// Outcome of one scenario run.
#[derive(Debug)]
pub struct RunReport {
    pub scenario: Scenario,
    /// Files written, in write order.
    pub files: Vec<PathBuf>,
    /// Human-readable result lines (also a place for verification notes).
    pub notes: Vec<String>,
}

/// Run the scenario named by the configuration.
pub fn run(config: &Config) -> Result<RunReport> {
    if config.threads > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.threads)
            .build()
            .map_err(|e| Error::Domain(format!("cannot build a {}-thread pool: {e}", config.threads)))?;
        pool.install(|| dispatch(config))
    } else {
        dispatch(config)
    }
}

fn dispatch(config: &Config) -> Result<RunReport> {
    let mut ws = Workspace::new(config)?;
    match config.scenario {
        Scenario::Constants => constants(&mut ws)?,
        Scenario::PotentialSample => potential_sample(&mut ws)?,
        Scenario::RampupScan => rampup_scan(&mut ws)?,
        Scenario::TransportScan => transport_scan(&mut ws)?,
        Scenario::OptimizeTransport => {
            optimize_transport_scenario(&mut ws)?;
        }
        Scenario::OptimizeBandmap => {
            optimize_bandmap_scenario(&mut ws)?;
        }
        Scenario::Multisite => multisite(&mut ws)?,
        Scenario::SensitivityMap => sensitivity_map_scenario(&mut ws)?,
        Scenario::Budgets => budgets(&mut ws)?,
        Scenario::ErrorReport => error_report(&mut ws)?,
    }
    Ok(ws.finish())
}

/// Shared state of one scenario run: configuration, units, output
/// directory, and the accumulating report.
struct Workspace<'a> {
    config: &'a Config,
    units: UnitSystem,
    dir: PathBuf,
    files: Vec<PathBuf>,
    notes: Vec<String>,
}

impl<'a> Workspace<'a> {
    fn new(config: &'a Config) -> Result<Self> {
        let units = config.units()?;
        let dir = PathBuf::from(&config.out_dir);
        std::fs::create_dir_all(&dir)?;
        let mut ws = Workspace {
            config,
            units,
            dir,
            files: Vec::new(),
            notes: Vec::new(),
        };
        // Every run records the exact parameters it resolved to.
        let echo = format!("{}{}", ws.header(&[]), config.echo());
        ws.write("config-echo.txt", &echo)?;
        Ok(ws)
    }

    /// `#`-prefixed artifact header: tool version, config hash, scenario,
    /// and (when given) the column names.
    fn header(&self, columns: &[&str]) -> String {
        let mut h = format!(
            "# tweezer-sim {}\n# config {}\n# scenario {}\n",
            env!("CARGO_PKG_VERSION"),
            self.config.hash(),
            self.config.scenario.id()
        );
        if !columns.is_empty() {
            let _ = writeln!(h, "# columns {}", columns.join(","));
        }
        h
    }

    fn write(&mut self, name: &str, content: &str) -> Result<PathBuf> {
        let path = self.dir.join(name);
        std::fs::write(&path, content)?;
        self.files.push(path.clone());
        Ok(path)
    }

    fn note(&mut self, text: impl Into<String>) {
        self.notes.push(text.into());
    }

    fn finish(self) -> RunReport {
        RunReport {
            scenario: self.config.scenario,
            files: self.files,
            notes: self.notes,
        }
    }
}

/// `n` evenly spaced values from `lo` to `hi` inclusive.
fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    budget::axis(lo, hi, n)
}

/// Does a doubled-resolution re-check agree with the primary value?
fn agrees(primary: f64, refined: f64, rel: f64, abs: f64) -> bool {
    (primary - refined).abs() <= abs.max(rel * primary.abs().max(refined.abs()))
}

fn verify_mismatch(label: &str, primary: f64, refined: f64) -> Error {
    Error::Verify(format!(
        "{label}: {primary:.6e} at run resolution vs {refined:.6e} at doubled resolution"
    ))
}

// ---------------------------------------------------------------------
// constants
// ---------------------------------------------------------------------

/// Derived quantities of the reference system, one `name,value,unit` row
/// each: trap frequencies, tweezer ground-state size, tunneling rate,
/// interaction energies, and the gate times they imply.
fn constants(ws: &mut Workspace) -> Result<()> {
    let config = ws.config;
    let units = ws.units;
    let species = SpeciesData::rb87();

    let lattice_omega = harmonic::lattice_frequency(config.lattice_depth);
    let tweezer_omega =
        harmonic::tweezer_frequency_sq(config.tweezer_depth, config.tweezer_waist).sqrt();
    let sigma_site = 1.0 / (units.internal_mass() * tweezer_omega).sqrt();

    let lattice = LatticeSpec::new(config.lattice_depth, 0.0)?;
    let tunneling = tunneling_rate(&lattice)?;

    let (u_lattice, u_tweezer) = interaction_energies(config)?;
    let swap = swap_times(u_tweezer)?;
    let u_6khz = 6000.0 * crate::units::PLANCK / units.energy_unit;
    let t_pi = phase_gate_time(u_6khz, std::f64::consts::PI)?;
    let merge_pi = merge_gate_phase_time(u_tweezer, species.interaction_ratio * u_tweezer)?;

    let rows: Vec<(&str, f64, &str)> = vec![
        ("recoil_energy_over_h", units.energy_to_hz(1.0), "Hz"),
        ("site_spacing", units.length_unit * 1e9, "nm"),
        ("time_unit", units.time_unit, "s"),
        ("lattice_trap_frequency", units.energy_to_hz(lattice_omega), "Hz"),
        ("tweezer_trap_frequency", units.energy_to_hz(tweezer_omega), "Hz"),
        ("tweezer_ground_sigma", units.length_to_si(sigma_site) * 1e9, "nm"),
        ("tunneling_rate_over_h", units.energy_to_hz(tunneling), "Hz"),
        ("lattice_interaction_over_h", units.energy_to_hz(u_lattice), "Hz"),
        ("tweezer_interaction_over_h", units.energy_to_hz(u_tweezer), "Hz"),
        ("swap_period", units.time_to_si(swap.t_swap), "s"),
        ("sqrt_swap_hold", units.time_to_si(swap.t_half), "s"),
        ("phase_pi_hold_at_6khz", units.time_to_si(t_pi), "s"),
        ("merge_gate_pi_hold", units.time_to_si(merge_pi), "s"),
    ];

    let mut csv = ws.header(&["name", "value", "unit"]);
    for (name, value, unit) in &rows {
        let _ = writeln!(csv, "{name},{value},{unit}");
    }
    ws.write("constants.csv", &csv)?;

    if config.verify {
        // The interaction energies are the only grid-resolved numbers
        // here; recompute them on a doubled grid.
        let (u_lattice_fine, u_tweezer_fine) = interaction_energies_at(config, 2)?;
        for (label, coarse, fine) in [
            ("lattice interaction energy", u_lattice, u_lattice_fine),
            ("tweezer interaction energy", u_tweezer, u_tweezer_fine),
        ] {
            if !agrees(coarse, fine, VERIFY_REL, 0.0) {
                return Err(verify_mismatch(label, coarse, fine));
            }
        }
        ws.note("verify: interaction energies stable under grid doubling".to_owned());
    }

    ws.note(format!(
        "lattice trap {:.1} kHz, tweezer trap {:.1} kHz, sigma {:.1} nm, U/h {:.2} kHz",
        units.energy_to_hz(lattice_omega) / 1e3,
        units.energy_to_hz(tweezer_omega) / 1e3,
        units.length_to_si(sigma_site) * 1e9,
        units.energy_to_hz(u_tweezer) / 1e3
    ));
    Ok(())
}

/// Ground-orbital interaction energies (internal units) in the bare
/// lattice site and in the tweezer-compressed site.
fn interaction_energies(config: &Config) -> Result<(f64, f64)> {
    interaction_energies_at(config, 1)
}

fn interaction_energies_at(config: &Config, refine: usize) -> Result<(f64, f64)> {
    let units = config.units()?;
    let species = SpeciesData::rb87();
    let a_s = units.length_from_si(species.scattering_length_cross);
    let n_points = (config.points_per_site * refine).max(8);
    let grid = Grid::new(-0.5, 0.5, n_points)?;

    let lattice_field = PotentialField::new(vec![PotentialTerm::Lattice(LatticeSpec::new(
        config.lattice_depth,
        0.0,
    )?)]);
    let lattice_ground = stationary_states(&lattice_field, &grid, 1)?;
    let omega_lattice = harmonic::lattice_frequency(config.lattice_depth);
    let u_lattice = interaction_energy(
        &lattice_ground.ground().wave,
        &lattice_ground.ground().wave,
        a_s,
        omega_lattice,
    )?;

    let combined_field = PotentialField::new(vec![
        PotentialTerm::Lattice(LatticeSpec::new(config.lattice_depth, 0.0)?),
        PotentialTerm::Tweezer(TweezerSpec::new(
            config.tweezer_depth,
            0.0,
            config.tweezer_waist,
        )?),
    ]);
    let combined_ground = stationary_states(&combined_field, &grid, 1)?;
    // One transverse direction is compressed by the tweezer plus the
    // lattice, the other (along the tweezer beam) by the lattice alone.
    let omega_tight = (omega_lattice.powi(2)
        + harmonic::tweezer_frequency_sq(config.tweezer_depth, config.tweezer_waist))
    .sqrt();
    let omega_perp = transverse_mean_frequency(omega_tight, omega_lattice)?;
    let u_tweezer = interaction_energy(
        &combined_ground.ground().wave,
        &combined_ground.ground().wave,
        a_s,
        omega_perp,
    )?;
    Ok((u_lattice, u_tweezer))
}

// ---------------------------------------------------------------------
// potential-sample
// ---------------------------------------------------------------------

/// The combined lattice + tweezer potential along the transport span, with
/// the tweezer parked at the start, midpoint, and end of its travel.
fn potential_sample(ws: &mut Workspace) -> Result<()> {
    let config = ws.config;
    let positions = [0.0, 0.5 * config.transport_distance, config.transport_distance];
    let lattice = LatticeSpec::new(config.lattice_depth, 0.0)?;
    let fields: Vec<PotentialField> = positions
        .iter()
        .map(|&center| {
            Ok(PotentialField::new(vec![
                PotentialTerm::Lattice(lattice.clone()),
                PotentialTerm::Tweezer(TweezerSpec::new(
                    config.tweezer_depth,
                    center,
                    config.tweezer_waist,
                )?),
            ]))
        })
        .collect::<Result<_>>()?;

    let lo = -1.0;
    let hi = config.transport_distance + 1.0;
    let n = ((hi - lo) * config.points_per_site as f64) as usize + 1;
    let xs = linspace(lo, hi, n.max(2));

    let mut csv = ws.header(&["x_sites", "v_start_er", "v_mid_er", "v_end_er"]);
    for &x in &xs {
        let _ = write!(csv, "{x}");
        for field in &fields {
            let _ = write!(csv, ",{}", field.value(x, 0.0));
        }
        csv.push('\n');
    }
    ws.write("potential-sample.csv", &csv)?;

    if config.verify {
        // Sampling is closed-form; doubling the sample count must leave
        // shared points bit-identical.
        for field in &fields {
            for &x in xs.iter().step_by(VERIFY_STRIDE) {
                let a = field.value(x, 0.0);
                let b = field.value(x, 0.5);
                if a.to_bits() != b.to_bits() {
                    return Err(verify_mismatch("static potential drifted in time", a, b));
                }
            }
        }
        ws.note("verify: potential sampling is static and exact".to_owned());
    }

    let depth_at_start = fields[0].value(0.0, 0.0);
    ws.note(format!(
        "combined well depth at the start site: {depth_at_start} E_r"
    ));
    Ok(())
}

// ---------------------------------------------------------------------
// rampup-scan
// ---------------------------------------------------------------------

/// Excitation probability of ramping the tweezer from zero to full depth
/// over a range of ramp times, with the analytic harmonic envelope.
fn rampup_scan(ws: &mut Workspace) -> Result<()> {
    let config = ws.config;
    let units = ws.units;
    let problem = RampUpProblem::with_resolution(
        config.lattice_depth,
        config.tweezer_depth,
        config.tweezer_waist,
        config.points_per_site,
        config.step_scale,
    )?;
    let durations = linspace(
        config.rampup_min_duration,
        config.rampup_max_duration,
        config.rampup_points,
    );

    let rows: Vec<(f64, f64, f64)> = durations
        .par_iter()
        .map(|&t_si| {
            let t = units.time_from_si(t_si);
            let numeric = problem.run(t)?;
            let envelope = problem.envelope(t)?;
            Ok((t_si, numeric, envelope))
        })
        .collect::<Result<_>>()?;

    let mut csv = ws.header(&["ramp_time_s", "excitation", "envelope"]);
    for &(t, p, env) in &rows {
        let _ = writeln!(csv, "{t},{p},{env}");
    }
    ws.write("rampup-scan.csv", &csv)?;

    let (t_best, p_best, _) = rows
        .iter()
        .copied()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("scan has at least two points");
    ws.note(format!(
        "lowest excitation {:.3e} at a {:.2} us ramp",
        p_best,
        t_best * 1e6
    ));

    if config.verify {
        let refined = RampUpProblem::with_resolution(
            config.lattice_depth,
            config.tweezer_depth,
            config.tweezer_waist,
            config.points_per_site * 2,
            config.step_scale * 0.5,
        )?;
        verify_scan_subset(ws, &rows, |t_si| refined.run(units.time_from_si(t_si)))?;
    }
    Ok(())
}

/// Re-run every [`VERIFY_STRIDE`]-th row of a `(x, value, _)` scan through
/// `refined` and require agreement.
fn verify_scan_subset(
    ws: &mut Workspace,
    rows: &[(f64, f64, f64)],
    refined: impl Fn(f64) -> Result<f64> + Sync,
) -> Result<()> {
    let subset: Vec<(f64, f64)> = rows
        .iter()
        .step_by(VERIFY_STRIDE)
        .map(|&(x, v, _)| (x, v))
        .collect();
    let checks: Vec<(f64, f64, f64)> = subset
        .par_iter()
        .map(|&(x, v)| Ok((x, v, refined(x)?)))
        .collect::<Result<_>>()?;
    for &(x, coarse, fine) in &checks {
        if !agrees(coarse, fine, VERIFY_REL, VERIFY_ABS) {
            return Err(verify_mismatch(
                &format!("scan point at {:.3} us", x * 1e6),
                coarse,
                fine,
            ));
        }
    }
    ws.note(format!(
        "verify: {} spot checks stable under resolution doubling",
        checks.len()
    ));
    Ok(())
}

// ---------------------------------------------------------------------
// transport-scan
// ---------------------------------------------------------------------

/// Excitation probability of the plain linear one-site transport over a
/// range of durations, with the analytic harmonic envelope.
fn transport_scan(ws: &mut Workspace) -> Result<()> {
    let config = ws.config;
    let units = ws.units;
    let problem = transport_problem(config, 1)?;
    let durations = linspace(
        config.transport_min_duration,
        config.transport_max_duration,
        config.transport_points,
    );

    let omega = problem.trap_frequency();
    let sigma = 1.0 / (units.internal_mass() * omega).sqrt();
    let rows: Vec<(f64, f64, f64)> = durations
        .par_iter()
        .map(|&t_si| {
            let t = units.time_from_si(t_si);
            let numeric = problem.run(t, &[])?;
            let xi = config.transport_distance
                / (t * std::f64::consts::SQRT_2 * sigma * omega);
            Ok((t_si, numeric, harmonic::envelope_excitation(xi)))
        })
        .collect::<Result<_>>()?;

    let mut csv = ws.header(&["transport_time_s", "excitation", "envelope"]);
    for &(t, p, env) in &rows {
        let _ = writeln!(csv, "{t},{p},{env}");
    }
    ws.write("transport-scan.csv", &csv)?;

    let (t_best, p_best, _) = rows
        .iter()
        .copied()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("scan has at least two points");
    ws.note(format!(
        "lowest linear-ramp excitation {:.3e} at {:.2} us",
        p_best,
        t_best * 1e6
    ));

    if config.verify {
        let refined = problem.refined()?;
        verify_scan_subset(ws, &rows, |t_si| refined.run(units.time_from_si(t_si), &[]))?;
    }
    Ok(())
}

fn transport_problem(config: &Config, refine: usize) -> Result<TransportProblem> {
    TransportProblem::with_resolution(
        config.lattice_depth,
        config.tweezer_depth,
        0.0,
        config.transport_distance,
        config.tweezer_waist,
        config.points_per_site * refine,
        config.step_scale / refine as f64,
    )
}

// ---------------------------------------------------------------------
// optimize-transport
// ---------------------------------------------------------------------

/// Load a persisted optimum if it matches this configuration.
fn load_optimum(dir: &Path, file: &str, block_name: &str, hash: &str) -> Option<RecordBlock> {
    let path = dir.join(file);
    if !path.exists() {
        return None;
    }
    let blocks = read_blocks(&path).ok()?;
    let block = find_block(&blocks, block_name)?;
    (block.get("config") == Some(hash)).then(|| block.clone())
}

/// Shape the transport ramp at the configured duration and persist the
/// optimum; reruns with an unchanged configuration reuse it.  Returns the
/// optimized coefficients with their objective and baseline.
fn optimize_transport_scenario(ws: &mut Workspace) -> Result<(Vec<f64>, f64, f64)> {
    let config = ws.config;
    let units = ws.units;
    let hash = config.physics_hash();
    let duration = units.time_from_si(config.transport_duration);
    let problem = transport_problem(config, 1)?;

    if let Some(block) = load_optimum(&ws.dir, "transport-optimum.txt", "transport-optimum", &hash)
    {
        let coeffs = block.f64s("coefficients")?;
        let objective = block.f64("objective")?;
        let baseline = block.f64("baseline")?;
        ws.note(format!(
            "reusing persisted transport optimum: excitation {objective:.3e} (baseline {baseline:.3e})"
        ));
        if config.verify {
            let fine = problem.refined()?.run(duration, &coeffs)?;
            if !agrees(objective, fine, VERIFY_OPT_REL, VERIFY_ABS) {
                return Err(verify_mismatch("persisted transport optimum", objective, fine));
            }
            ws.note("verify: persisted optimum stable under resolution doubling".to_owned());
        }
        return Ok((coeffs, objective, baseline));
    }

    let options = SimplexOptions {
        max_evaluations: config.transport_evaluations,
        ..SimplexOptions::default()
    };
    let optimization: TransportOptimization = optimize_transport(
        &problem,
        duration,
        config.transport_harmonics,
        &options,
        config.verify,
    )?;
    if let Some(check) = &optimization.verification {
        if !check.consistent {
            return Err(verify_mismatch(
                "transport optimum",
                check.coarse,
                check.fine,
            ));
        }
        ws.note("verify: optimum stable under resolution doubling".to_owned());
    }

    let result = &optimization.result;
    let mut block = RecordBlock::new("transport-optimum");
    block
        .set("config", &hash)
        .set_f64("duration_s", config.transport_duration)
        .set_f64s("coefficients", &result.best)
        .set_f64("objective", result.objective)
        .set_f64("baseline", optimization.baseline)
        .set("evaluations", result.evaluations.to_string())
        .set("converged", result.converged.to_string());
    write_blocks(&ws.dir.join("transport-optimum.txt"), &[block])?;
    ws.files.push(ws.dir.join("transport-optimum.txt"));

    let mut csv = ws.header(&["evaluation", "excitation"]);
    for (i, value) in result.history.iter().enumerate() {
        let _ = writeln!(csv, "{},{}", i + 1, value);
    }
    ws.write("transport-optimization.csv", &csv)?;

    ws.note(format!(
        "optimized {}-harmonic transport: excitation {:.3e} (baseline {:.3e}, {} evaluations, converged: {})",
        config.transport_harmonics,
        result.objective,
        optimization.baseline,
        result.evaluations,
        result.converged
    ));
    Ok((result.best.clone(), result.objective, optimization.baseline))
}

// ---------------------------------------------------------------------
// optimize-bandmap
// ---------------------------------------------------------------------

fn bandmap_spec(config: &Config, units: &UnitSystem) -> BandMapSpec {
    BandMapSpec {
        start_depth: config.bandmap_start_depth,
        aux_depth: config.bandmap_aux_depth,
        duration: units.time_from_si(config.bandmap_duration),
        from: 0.0,
        to: 1.0,
        waist: config.tweezer_waist,
        harmonics: config.bandmap_harmonics,
    }
}

/// Shape the merge ramps, persist the optimum, and record the final-state
/// profile (the transported atom must land in the first excited level of
/// the merge well, with its node visible in |ψ|²) plus the collisional
/// phase accumulated during the merge.
fn optimize_bandmap_scenario(ws: &mut Workspace) -> Result<(Vec<f64>, Vec<f64>, f64)> {
    let config = ws.config;
    let units = ws.units;
    let hash = config.physics_hash();
    let spec = bandmap_spec(config, &units);
    let problem = BandMapProblem::with_resolution(
        &spec,
        config.lattice_depth,
        ErrorInjection::none(),
        config.points_per_site,
        config.step_scale,
    )?;

    let (depth_coeffs, position_coeffs, objective) = if let Some(block) =
        load_optimum(&ws.dir, "bandmap-optimum.txt", "bandmap-optimum", &hash)
    {
        let depth = block.f64s("depth_coefficients")?;
        let position = block.f64s("position_coefficients")?;
        let objective = block.f64("objective")?;
        ws.note(format!(
            "reusing persisted merge optimum: infidelity {objective:.3e}"
        ));
        if config.verify {
            let fine = 1.0
                - problem
                    .refined()?
                    .run(&depth, &position, 0)?
                    .fidelity;
            if !agrees(objective, fine, VERIFY_OPT_REL, VERIFY_ABS) {
                return Err(verify_mismatch("persisted merge optimum", objective, fine));
            }
            ws.note("verify: persisted optimum stable under resolution doubling".to_owned());
        }
        (depth, position, objective)
    } else {
        let options = SimplexOptions {
            max_evaluations: config.bandmap_evaluations,
            ..SimplexOptions::default()
        };
        let optimization: MergeOptimization =
            optimize_bandmap(&problem, config.bandmap_harmonics, &options, config.verify)?;
        if let Some(check) = &optimization.verification {
            if !check.consistent {
                return Err(verify_mismatch("merge optimum", check.coarse, check.fine));
            }
            ws.note("verify: optimum stable under resolution doubling".to_owned());
        }
        let result = &optimization.result;
        let mut block = RecordBlock::new("bandmap-optimum");
        block
            .set("config", &hash)
            .set_f64("duration_s", config.bandmap_duration)
            .set_f64s("depth_coefficients", optimization.best_depth())
            .set_f64s("position_coefficients", optimization.best_position())
            .set_f64("objective", result.objective)
            .set_f64("baseline", optimization.baseline)
            .set_f64("fidelity_transported", optimization.fidelity_transported)
            .set_f64("fidelity_stationary", optimization.fidelity_stationary)
            .set("evaluations", result.evaluations.to_string())
            .set("converged", result.converged.to_string());
        write_blocks(&ws.dir.join("bandmap-optimum.txt"), &[block])?;
        ws.files.push(ws.dir.join("bandmap-optimum.txt"));

        let mut csv = ws.header(&["evaluation", "infidelity"]);
        for (i, value) in result.history.iter().enumerate() {
            let _ = writeln!(csv, "{},{}", i + 1, value);
        }
        ws.write("bandmap-optimization.csv", &csv)?;
        ws.note(format!(
            "optimized {}-harmonic merge: infidelity {:.3e} (baseline {:.3e}, {} evaluations)",
            config.bandmap_harmonics, result.objective, optimization.baseline, result.evaluations
        ));
        (
            optimization.best_depth().to_vec(),
            optimization.best_position().to_vec(),
            result.objective,
        )
    };

    // Final-state record at the optimum: density profiles and the node of
    // the transported atom's orbital, plus the collisional phase.
    let outcome = problem.run(&depth_coeffs, &position_coeffs, PHASE_FRAMES)?;
    write_bandmap_profile(ws, &outcome)?;
    let nodes = outcome.final_node_count(spec.to);
    let phase = merge_interaction_phase(config, &outcome)?;
    ws.note(format!(
        "merge infidelity {:.3e}; transported orbital shows {} node(s); collisional phase {:.3} rad",
        objective, nodes, phase
    ));
    Ok((depth_coeffs, position_coeffs, objective))
}

/// Density profile of both atoms at the end of the merge.
fn write_bandmap_profile(ws: &mut Workspace, outcome: &BandMapOutcome) -> Result<()> {
    let transported = &outcome.transported.final_state;
    let stationary = &outcome.stationary.final_state;
    let grid = transported.grid();
    let mut csv = ws.header(&["x_sites", "density_transported", "density_stationary"]);
    for i in 0..grid.n_points() {
        let _ = writeln!(
            csv,
            "{},{},{}",
            grid.point(i),
            transported.data()[i].norm_sqr(),
            stationary.data()[i].norm_sqr()
        );
    }
    ws.write("bandmap-profile.csv", &csv)?;
    Ok(())
}

/// Collisional phase the two atoms accumulate while the wells merge, from
/// the overlap of the recorded trajectories.  Transverse confinement is
/// the lattice's own: the merge happens in-plane, and the tweezer depth is
/// already falling during the approach.
fn merge_interaction_phase(config: &Config, outcome: &BandMapOutcome) -> Result<f64> {
    let units = config.units()?;
    let species = SpeciesData::rb87();
    let a_s = units.length_from_si(species.scattering_length_cross);
    let omega_perp = harmonic::lattice_frequency(config.lattice_depth);
    interaction_phase(
        &outcome.transported.frames,
        &outcome.stationary.frames,
        a_s,
        omega_perp,
    )
}

// ---------------------------------------------------------------------
// multisite
// ---------------------------------------------------------------------

/// Repeat the optimized one-site hop across up to `multisite.sites` sites
/// and record the cumulative excitation after each hop.
fn multisite(ws: &mut Workspace) -> Result<()> {
    let config = ws.config;
    let units = ws.units;
    let (coeffs, single, _) = optimize_transport_scenario(ws)?;
    let duration = units.time_from_si(config.transport_duration);
    let problem = transport_problem(config, 1)?;
    let errors = problem.repeated_hops(duration, &coeffs, config.multisite_sites)?;

    let mut csv = ws.header(&["sites", "excitation"]);
    for (n, p) in errors.iter().enumerate() {
        let _ = writeln!(csv, "{},{}", n + 1, p);
    }
    ws.write("multisite.csv", &csv)?;

    let worst = errors.iter().copied().fold(0.0f64, f64::max);
    let last = *errors.last().expect("at least one hop");
    ws.note(format!(
        "{} hops: single-hop excitation {:.3e}, worst cumulative {:.3e} ({:.2}x single), final {:.3e}",
        errors.len(),
        single,
        worst,
        worst / single.max(f64::MIN_POSITIVE),
        last
    ));

    if config.verify {
        let hops = config.multisite_sites.min(6);
        let refined = problem.refined()?.repeated_hops(duration, &coeffs, hops)?;
        let coarse = errors[hops - 1];
        let fine = refined[hops - 1];
        if !agrees(coarse, fine, VERIFY_OPT_REL, VERIFY_ABS) {
            return Err(verify_mismatch(
                &format!("cumulative excitation after {hops} hops"),
                coarse,
                fine,
            ));
        }
        ws.note(format!(
            "verify: {hops}-hop error stable under resolution doubling"
        ));
    }
    Ok(())
}

// ---------------------------------------------------------------------
// sensitivity-map
// ---------------------------------------------------------------------

/// Merge infidelity over pointing offset × intensity scale around the
/// optimized pulse, with iso-infidelity contours.
fn sensitivity_map_scenario(ws: &mut Workspace) -> Result<()> {
    let config = ws.config;
    let units = ws.units;
    let (depth_coeffs, position_coeffs, _) = optimize_bandmap_scenario(ws)?;
    let spec = bandmap_spec(config, &units);

    let offsets = linspace(
        -config.map_offset_range,
        config.map_offset_range,
        config.map_offset_points,
    );
    let scales = linspace(
        1.0 - config.map_scale_range,
        1.0 + config.map_scale_range,
        config.map_scale_points,
    );

    let map = budget::sensitivity_map(
        &spec,
        config.lattice_depth,
        &depth_coeffs,
        &position_coeffs,
        &offsets,
        &scales,
        config.points_per_site,
        config.step_scale,
    )?;

    let mut csv = ws.header(&["offset_sites", "offset_nm", "scale", "infidelity"]);
    for (i, &offset) in map.offsets.iter().enumerate() {
        for (j, &scale) in map.scales.iter().enumerate() {
            let _ = writeln!(
                csv,
                "{},{},{},{}",
                offset,
                units.length_to_si(offset) * 1e9,
                scale,
                map.infidelity[i][j]
            );
        }
    }
    ws.write("sensitivity-map.csv", &csv)?;

    let mut contours = ws.header(&["level", "polyline", "vertex", "offset_sites", "scale"]);
    for k in 1..=3usize {
        let level = k as f64 * 1e-3;
        let polylines = budget::contour_polylines(&map.offsets, &map.scales, &map.infidelity, level);
        for (p, line) in polylines.iter().enumerate() {
            for (v, &(x, y)) in line.iter().enumerate() {
                let _ = writeln!(contours, "{level},{p},{v},{x},{y}");
            }
        }
    }
    ws.write("sensitivity-contours.csv", &contours)?;

    for failure in &map.failures {
        ws.note(format!(
            "cell (offset {}, scale {}) failed: {}",
            map.offsets[failure.offset_index], map.scales[failure.scale_index], failure.message
        ));
    }
    let (i_min, j_min) = map
        .minimum_cell()
        .ok_or_else(|| Error::Numeric("every sensitivity cell failed".into()))?;
    ws.note(format!(
        "minimum infidelity {:.3e} at offset {} sites, scale {}",
        map.infidelity[i_min][j_min], map.offsets[i_min], map.scales[j_min]
    ));

    if config.verify {
        let spot = |offset: f64, scale: f64| -> Result<f64> {
            let errors = ErrorInjection::new(offset, scale)?;
            let problem = BandMapProblem::with_resolution(
                &spec,
                config.lattice_depth,
                errors,
                config.points_per_site * 2,
                config.step_scale * 0.5,
            )?;
            Ok(1.0 - problem.run(&depth_coeffs, &position_coeffs, 0)?.fidelity)
        };
        for (i, j, label) in [
            (i_min, j_min, "map minimum"),
            (0usize, 0usize, "map corner"),
        ] {
            let coarse = map.infidelity[i][j];
            if !coarse.is_finite() {
                continue;
            }
            let fine = spot(map.offsets[i], map.scales[j])?;
            if !agrees(coarse, fine, VERIFY_OPT_REL, 2e-4) {
                return Err(verify_mismatch(label, coarse, fine));
            }
        }
        ws.note("verify: map spot checks stable under resolution doubling".to_owned());
    }
    Ok(())
}

// ---------------------------------------------------------------------
// budgets
// ---------------------------------------------------------------------

/// Gate time budgets: step tables for 0, 1, and 5 intermediate sites, the
/// closed-form totals for every site count, and the collisional holds the
/// interaction energies imply.
fn budgets(ws: &mut Workspace) -> Result<()> {
    let config = ws.config;
    let units = ws.units;
    let species = SpeciesData::rb87();

    let mut text = ws.header(&[]);
    for &sites in &[0usize, 1, 5] {
        for kind in [GateKind::TransportPhase, GateKind::Exchange] {
            let budget = gate_budget(kind, sites);
            let _ = writeln!(
                text,
                "{} gate, {} intermediate site(s):",
                budget.gate.label(),
                sites
            );
            for step in &budget.steps {
                let _ = writeln!(
                    text,
                    "  {:<38} {:>7.1} us x{}",
                    step.name, step.unit_us, step.count
                );
            }
            let _ = writeln!(text, "  {:<38} {:>7.1} us", "total", budget.total_us());
            text.push('\n');
        }
    }

    let (_, u_tweezer) = interaction_energies(config)?;
    let swap = swap_times(u_tweezer)?;
    let u_6khz = 6000.0 * crate::units::PLANCK / units.energy_unit;
    let t_pi = phase_gate_time(u_6khz, std::f64::consts::PI)?;
    let merge_pi = merge_gate_phase_time(u_tweezer, species.interaction_ratio * u_tweezer)?;
    let _ = writeln!(
        text,
        "collisional holds: pi phase at 6 kHz = {:.1} us; sqrt-swap = {:.1} us; merge-gate pi = {:.3} ms",
        units.time_to_si(t_pi) * 1e6,
        units.time_to_si(swap.t_half) * 1e6,
        units.time_to_si(merge_pi) * 1e3
    );
    let echo_steps = spin_dependent_gate_sequence(1)
        .iter()
        .filter(|s| s.echo)
        .count();
    let _ = writeln!(
        text,
        "spin echo markers in the transport-gate sequence: {echo_steps}"
    );
    ws.write("budgets.txt", &text)?;

    let mut csv = ws.header(&["sites", "transport_gate_us", "exchange_gate_us"]);
    for n in 0..=config.multisite_sites {
        let _ = writeln!(
            csv,
            "{},{},{}",
            n,
            gates::gate_time_us(GateKind::TransportPhase, n),
            gates::gate_time_us(GateKind::Exchange, n)
        );
    }
    ws.write("budgets.csv", &csv)?;

    // The closed forms are exact by construction; assert them on every
    // run (they are cheap) rather than only under --verify.
    for n in 0..=100usize {
        let transport = gates::gate_time_us(GateKind::TransportPhase, n);
        let exchange = gates::gate_time_us(GateKind::Exchange, n);
        let expected_transport = 199.0 + 50.0 * n as f64;
        let expected_exchange = 297.0 + 50.0 * n as f64;
        if (transport - expected_transport).abs() > 1e-9
            || (exchange - expected_exchange).abs() > 1e-9
        {
            return Err(Error::Numeric(format!(
                "gate budget closed form broken at {n} sites: {transport} vs {expected_transport}, {exchange} vs {expected_exchange}"
            )));
        }
    }

    ws.note(format!(
        "transport gate {:.0}+50n us, exchange gate {:.0}+50n us; sqrt-swap {:.1} us",
        gates::gate_time_us(GateKind::TransportPhase, 0),
        gates::gate_time_us(GateKind::Exchange, 0),
        units.time_to_si(swap.t_half) * 1e6
    ));
    Ok(())
}

// ---------------------------------------------------------------------
// error-report
// ---------------------------------------------------------------------

/// Decoherence and dephasing budget: scattering rates and probabilities per
/// beam, the lattice Lamb–Dicke suppression, magnetic dephasing for the
/// field-sensitive and clock pairs, and intensity dephasing.
fn error_report(ws: &mut Workspace) -> Result<()> {
    let config = ws.config;
    let units = ws.units;
    let species = SpeciesData::rb87();

    let scenarios = [
        ScatteringScenario::far_detuned_tweezer(&species, config.tweezer_depth)?,
        ScatteringScenario::spin_dependent_tweezer(&species, config.tweezer_depth)?,
        ScatteringScenario::lattice(&species, units.lattice_wavelength, config.lattice_depth)?,
    ];

    let mut csv = ws.header(&["context", "rate_hz", "exposure_s", "probability"]);
    let mut text = ws.header(&[]);
    let _ = writeln!(text, "photon scattering:");
    for scenario in &scenarios {
        let rate = scattering_rate(&units, scenario)?;
        let p = scattering_probability(rate, scenario.exposure);
        let _ = writeln!(
            csv,
            "{},{},{},{}",
            scenario.context.label(),
            rate,
            scenario.exposure,
            p
        );
        let _ = writeln!(
            text,
            "  {:<24} {:.3} Hz over {:.0} us -> {:.2e}",
            scenario.context.label(),
            rate,
            scenario.exposure * 1e6,
            p
        );
    }

    let lattice_report =
        lattice_coherence_report(&units, &species, config.lattice_depth, 300e-6)?;
    let _ = writeln!(
        text,
        "  lattice decoherence: eta^2 = {:.3} suppresses {:.2e} to {:.2e} per gate",
        lattice_report.lamb_dicke_sq,
        lattice_report.scatter_probability,
        lattice_report.decoherence_probability
    );

    let _ = writeln!(text, "\nmagnetic dephasing (field-sensitive pair):");
    for noise in [config.budget_field_noise, config.budget_field_noise / 10.0] {
        let scenario = DephasingScenario {
            field_noise_gauss: noise,
            hold: config.budget_hold,
        };
        let dephasing = dephasing_budget(&species, &scenario, QubitPair::FieldSensitive)?;
        match dephasing.coherence_time {
            Some(t_c) => {
                let _ = writeln!(
                    text,
                    "  dB = {:.0} uG -> T_c = {:.2} ms, phase error {:.2e} over {:.0} us",
                    noise * 1e6,
                    t_c * 1e3,
                    dephasing.phase_error,
                    config.budget_hold * 1e6
                );
            }
            None => {
                let _ = writeln!(text, "  dB = {:.0} uG -> no first-order dephasing", noise * 1e6);
            }
        }
    }
    let clock = dephasing_budget(
        &species,
        &DephasingScenario {
            field_noise_gauss: config.budget_field_noise,
            hold: config.budget_hold,
        },
        QubitPair::Clock,
    )?;
    if let Some(note) = &clock.insensitivity_note {
        let _ = writeln!(text, "  clock pair: {note}");
    }

    let phase = intensity_dephasing(
        &units,
        config.tweezer_depth,
        config.budget_intensity_noise,
        config.budget_hold,
    );
    let _ = writeln!(
        text,
        "\nintensity dephasing: dI/I = {:.0e} on {} E_r over {:.0} us -> {:.3e} rad ({:.3} x 2pi x 1e-3)",
        config.budget_intensity_noise,
        config.tweezer_depth,
        config.budget_hold * 1e6,
        phase,
        phase / (2.0 * std::f64::consts::PI * 1e-3)
    );

    ws.write("error-report.csv", &csv)?;
    ws.write("error-report.txt", &text)?;
    ws.note(format!(
        "lattice decoherence per gate {:.2e}; intensity dephasing {:.3e} rad",
        lattice_report.decoherence_probability, phase
    ));
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Config;

    fn test_config(scenario: &str, dir: &str) -> Config {
        let text = format!(
            "run.scenario = {scenario}\n\
             run.out = {dir}\n\
             grid.points_per_site = 64\n\
             rampup.min_duration = 6us\n\
             rampup.max_duration = 14us\n\
             rampup.points = 5\n\
             transport.min_duration = 20us\n\
             transport.max_duration = 30us\n\
             transport.points = 5\n\
             transport.harmonics = 1\n\
             transport.evaluations = 40\n\
             multisite.sites = 3\n"
        );
        Config::parse(&text).unwrap()
    }

    fn temp_dir(tag: &str) -> String {
        let dir = std::env::temp_dir().join(format!("tweezer-scenarios-{tag}-{}", std::process::id()));
        let _ = std::fs::remove_dir_all(&dir);
        dir.to_string_lossy().into_owned()
    }

    #[test]
    fn constants_scenario_writes_echo_and_table() {
        let dir = temp_dir("constants");
        let config = test_config("constants", &dir);
        let report = run(&config).unwrap();
        assert_eq!(report.scenario, Scenario::Constants);
        let echo = std::fs::read_to_string(format!("{dir}/config-echo.txt")).unwrap();
        assert!(echo.contains("# config "));
        assert!(echo.contains("grid.points_per_site = 64"));
        let csv = std::fs::read_to_string(format!("{dir}/constants.csv")).unwrap();
        assert!(csv.contains("lattice_trap_frequency"));
        assert!(csv.starts_with("# tweezer-sim"));
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn scan_reruns_are_byte_identical() {
        let dir = temp_dir("rerun");
        let config = test_config("rampup-scan", &dir);
        run(&config).unwrap();
        let first = std::fs::read(format!("{dir}/rampup-scan.csv")).unwrap();
        run(&config).unwrap();
        let second = std::fs::read(format!("{dir}/rampup-scan.csv")).unwrap();
        assert_eq!(first, second);
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn optimize_transport_persists_and_reuses_its_optimum() {
        let dir = temp_dir("persist");
        let config = test_config("optimize-transport", &dir);
        let first = run(&config).unwrap();
        assert!(first
            .notes
            .iter()
            .any(|n| n.contains("optimized 1-harmonic transport")));
        let optimum = std::fs::read(format!("{dir}/transport-optimum.txt")).unwrap();
        let second = run(&config).unwrap();
        assert!(second.notes.iter().any(|n| n.contains("reusing persisted")));
        assert_eq!(
            optimum,
            std::fs::read(format!("{dir}/transport-optimum.txt")).unwrap()
        );
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn changed_config_invalidates_the_persisted_optimum() {
        let dir = temp_dir("invalidate");
        let config = test_config("optimize-transport", &dir);
        run(&config).unwrap();
        let mut changed = config.clone();
        changed.transport_duration = 26e-6;
        let report = run(&changed).unwrap();
        assert!(
            report.notes.iter().all(|n| !n.contains("reusing persisted")),
            "stale optimum reused: {:?}",
            report.notes
        );
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn budgets_scenario_reports_the_closed_forms() {
        let dir = temp_dir("budgets");
        let config = test_config("budgets", &dir);
        let report = run(&config).unwrap();
        assert!(report.notes.iter().any(|n| n.contains("199+50n")));
        let csv = std::fs::read_to_string(format!("{dir}/budgets.csv")).unwrap();
        let row = csv.lines().find(|l| l.starts_with("2,")).unwrap();
        assert_eq!(row, "2,299,397");
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn error_report_covers_all_three_beams() {
        let dir = temp_dir("errors");
        let config = test_config("error-report", &dir);
        run(&config).unwrap();
        let csv = std::fs::read_to_string(format!("{dir}/error-report.csv")).unwrap();
        for context in ["lattice", "far-detuned tweezer", "spin-dependent tweezer"] {
            assert!(csv.contains(context), "missing {context}");
        }
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn multisite_consumes_the_transport_optimum() {
        let dir = temp_dir("multisite");
        let config = test_config("multisite", &dir);
        let report = run(&config).unwrap();
        let csv = std::fs::read_to_string(format!("{dir}/multisite.csv")).unwrap();
        let data_rows = csv.lines().filter(|l| !l.starts_with('#')).count();
        assert_eq!(data_rows, 3);
        assert!(std::path::Path::new(&format!("{dir}/transport-optimum.txt")).exists());
        assert!(report.notes.iter().any(|n| n.contains("hops")));
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
