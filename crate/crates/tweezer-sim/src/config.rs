//! Run configuration: a flat `section.key = value` text format with
//! explicit SI suffixes (`11us`, `500Er`, `36nm`), strict unknown-key
//! rejection, and a canonical echo whose hash stamps every output file.
//!
//! Values are stored in canonical units — seconds for durations, meters
//! for the lattice wavelength, lattice sites for tweezer geometry, recoil
//! energies for depths, gauss for magnetic fields — and a bare number in
//! the file means exactly that canonical unit, so `Config::echo` output
//! re-parses to an identical configuration.

use std::path::Path;

use crate::error::{Error, Result};
use crate::units::UnitSystem;

/// Named experiment the runner can dispatch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    RampupScan,
    TransportScan,
    OptimizeTransport,
    OptimizeBandmap,
    Multisite,
    SensitivityMap,
    Budgets,
    ErrorReport,
    Constants,
    PotentialSample,
}

impl Scenario {
    pub const ALL: [Scenario; 10] = [
        Scenario::RampupScan,
        Scenario::TransportScan,
        Scenario::OptimizeTransport,
        Scenario::OptimizeBandmap,
        Scenario::Multisite,
        Scenario::SensitivityMap,
        Scenario::Budgets,
        Scenario::ErrorReport,
        Scenario::Constants,
        Scenario::PotentialSample,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Scenario::RampupScan => "rampup-scan",
            Scenario::TransportScan => "transport-scan",
            Scenario::OptimizeTransport => "optimize-transport",
            Scenario::OptimizeBandmap => "optimize-bandmap",
            Scenario::Multisite => "multisite",
            Scenario::SensitivityMap => "sensitivity-map",
            Scenario::Budgets => "budgets",
            Scenario::ErrorReport => "error-report",
            Scenario::Constants => "constants",
            Scenario::PotentialSample => "potential-sample",
        }
    }

    pub fn from_id(id: &str) -> Option<Scenario> {
        Scenario::ALL.iter().copied().find(|s| s.id() == id)
    }
}

/// Resolved run configuration in canonical units.
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub scenario: Scenario,
    /// Output directory for CSV and report artifacts.
    pub out_dir: String,
    /// Worker threads for scan/map parallelism; 0 keeps the library default.
    pub threads: usize,
    /// Re-check results at doubled resolution.
    pub verify: bool,

    /// Lattice depth, recoil energies.
    pub lattice_depth: f64,
    /// Lattice light wavelength, meters (sets the site spacing).
    pub lattice_wavelength: f64,
    /// Transport-tweezer depth, recoil energies.
    pub tweezer_depth: f64,
    /// Tweezer waist, sites.
    pub tweezer_waist: f64,

    /// Spatial resolution, grid points per site.
    pub points_per_site: usize,
    /// Multiplier on the automatic time step (≤ 1 refines it).
    pub step_scale: f64,

    /// Ramp-up scan bounds (seconds) and sample count.
    pub rampup_min_duration: f64,
    pub rampup_max_duration: f64,
    pub rampup_points: usize,

    /// Transport distance, sites.
    pub transport_distance: f64,
    /// Transport scan bounds (seconds) and sample count.
    pub transport_min_duration: f64,
    pub transport_max_duration: f64,
    pub transport_points: usize,
    /// Transport duration the optimizer shapes, seconds.
    pub transport_duration: f64,
    /// Position harmonics available to the transport optimizer.
    pub transport_harmonics: usize,
    /// Evaluation budget of the transport optimizer.
    pub transport_evaluations: usize,

    /// Merge duration, seconds.
    pub bandmap_duration: f64,
    /// Harmonics per profile available to the merge optimizer.
    pub bandmap_harmonics: usize,
    /// Evaluation budget of the merge optimizer.
    pub bandmap_evaluations: usize,
    /// Transport-tweezer depth at the start of the merge, recoil energies.
    pub bandmap_start_depth: f64,
    /// Constant auxiliary-tweezer depth, recoil energies.
    pub bandmap_aux_depth: f64,

    /// Longest hop chain of the multi-site scan.
    pub multisite_sites: usize,

    /// Sensitivity-map pointing half-range, sites.
    pub map_offset_range: f64,
    pub map_offset_points: usize,
    /// Sensitivity-map intensity half-range (relative).
    pub map_scale_range: f64,
    pub map_scale_points: usize,

    /// RMS magnetic-field noise, gauss.
    pub budget_field_noise: f64,
    /// Phase-accumulation hold, seconds.
    pub budget_hold: f64,
    /// Relative trap-intensity noise.
    pub budget_intensity_noise: f64,
}

impl Default for Config {
    fn default() -> Self {
        let wavelength = 1.064e-6;
        Config {
            scenario: Scenario::Constants,
            out_dir: "out".to_owned(),
            threads: 0,
            verify: false,
            lattice_depth: 50.0,
            lattice_wavelength: wavelength,
            tweezer_depth: 500.0,
            tweezer_waist: 0.5,
            points_per_site: 256,
            step_scale: 1.0,
            rampup_min_duration: 2e-6,
            rampup_max_duration: 20e-6,
            rampup_points: 73,
            transport_distance: 1.0,
            transport_min_duration: 4e-6,
            transport_max_duration: 40e-6,
            transport_points: 73,
            transport_duration: 25e-6,
            transport_harmonics: 5,
            transport_evaluations: 400,
            bandmap_duration: 75e-6,
            bandmap_harmonics: 15,
            bandmap_evaluations: 400,
            bandmap_start_depth: 400.0,
            bandmap_aux_depth: 200.0,
            multisite_sites: 100,
            map_offset_range: 10e-9 / (0.5 * wavelength),
            map_offset_points: 21,
            map_scale_range: 0.01,
            map_scale_points: 21,
            budget_field_noise: 50e-6,
            budget_hold: 100e-6,
            budget_intensity_noise: 1e-5,
        }
    }
}

/// What unit family a key's value carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Dimension {
    /// Seconds; suffixes s, ms, us, ns.
    Time,
    /// Meters; suffixes m, mm, um, nm.
    Wavelength,
    /// Lattice sites; bare, or absolute via um/nm.
    SiteLength,
    /// Recoil energies; bare or `Er`.
    Depth,
    /// Gauss; suffixes G, mG, uG.
    Field,
    /// Bare dimensionless float.
    Float,
    /// Bare unsigned integer.
    Count,
    /// `true` / `false`.
    Bool,
    /// Free-form token.
    Text,
}

/// Every known key with its unit family, in echo order.
const SCHEMA: &[(&str, Dimension)] = &[
    ("bandmap.aux_depth", Dimension::Depth),
    ("bandmap.duration", Dimension::Time),
    ("bandmap.evaluations", Dimension::Count),
    ("bandmap.harmonics", Dimension::Count),
    ("bandmap.start_depth", Dimension::Depth),
    ("budget.field_noise", Dimension::Field),
    ("budget.hold", Dimension::Time),
    ("budget.intensity_noise", Dimension::Float),
    ("grid.points_per_site", Dimension::Count),
    ("grid.step_scale", Dimension::Float),
    ("lattice.depth", Dimension::Depth),
    ("lattice.wavelength", Dimension::Wavelength),
    ("map.offset_points", Dimension::Count),
    ("map.offset_range", Dimension::SiteLength),
    ("map.scale_points", Dimension::Count),
    ("map.scale_range", Dimension::Float),
    ("multisite.sites", Dimension::Count),
    ("rampup.max_duration", Dimension::Time),
    ("rampup.min_duration", Dimension::Time),
    ("rampup.points", Dimension::Count),
    ("run.out", Dimension::Text),
    ("run.scenario", Dimension::Text),
    ("run.threads", Dimension::Count),
    ("run.verify", Dimension::Bool),
    ("transport.distance", Dimension::SiteLength),
    ("transport.duration", Dimension::Time),
    ("transport.evaluations", Dimension::Count),
    ("transport.harmonics", Dimension::Count),
    ("transport.max_duration", Dimension::Time),
    ("transport.min_duration", Dimension::Time),
    ("transport.points", Dimension::Count),
    ("tweezer.depth", Dimension::Depth),
    ("tweezer.waist", Dimension::SiteLength),
];

/// One syntactically valid `key = value` line.
struct Entry<'a> {
    key: &'a str,
    value: &'a str,
    line: usize,
    column: usize,
}

/// FNV-1a over `bytes`, rendered as 16 hex characters.
fn fnv_hex(bytes: impl Iterator<Item = u8>) -> String {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    let mut h = OFFSET;
    for byte in bytes {
        h ^= u64::from(byte);
        h = h.wrapping_mul(PRIME);
    }
    format!("{h:016x}")
}

fn config_error(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Config {
        line,
        column,
        message: message.into(),
    }
}

impl Config {
    /// Parse a config file, starting from the defaults.
    pub fn from_file(path: &Path) -> Result<Config> {
        let text = std::fs::read_to_string(path)?;
        Config::parse(&text)
    }

    /// Parse config text, starting from the defaults.
    pub fn parse(text: &str) -> Result<Config> {
        let entries = lex(text)?;
        // The wavelength defines the site spacing that absolute-length
        // suffixes convert through, so resolve it ahead of everything.
        let mut config = Config::default();
        if let Some(entry) = entries.iter().find(|e| e.key == "lattice.wavelength") {
            config.lattice_wavelength = parse_wavelength(entry)?;
        }
        for entry in &entries {
            config.apply(entry)?;
        }
        config.validate()?;
        Ok(config)
    }

    /// The unit system this configuration implies.
    pub fn units(&self) -> Result<UnitSystem> {
        UnitSystem::new(self.lattice_wavelength, crate::units::SpeciesData::rb87().mass)
    }

    /// Canonical echo: every key in schema order, values in canonical
    /// units, shortest round-trip float formatting.  Parsing the echo
    /// reproduces the configuration exactly.
    pub fn echo(&self) -> String {
        let mut out = String::new();
        for &(key, _) in SCHEMA {
            out.push_str(key);
            out.push_str(" = ");
            out.push_str(&self.render(key));
            out.push('\n');
        }
        out
    }

    /// FNV-1a hash of the canonical echo, hex-rendered; stamps output
    /// files so artifacts can be traced to their exact parameters.
    pub fn hash(&self) -> String {
        fnv_hex(self.echo().bytes())
    }

    /// Hash of the physical parameters only (`run.*` keys excluded), so a
    /// persisted optimum computed by one scenario can be reused by another
    /// scenario pointed at the same output directory.
    pub fn physics_hash(&self) -> String {
        let physics = SCHEMA
            .iter()
            .filter(|(key, _)| !key.starts_with("run."))
            .map(|&(key, _)| format!("{key} = {}\n", self.render(key)))
            .collect::<String>();
        fnv_hex(physics.bytes())
    }

    fn render(&self, key: &str) -> String {
        match key {
            "bandmap.aux_depth" => self.bandmap_aux_depth.to_string(),
            "bandmap.duration" => self.bandmap_duration.to_string(),
            "bandmap.evaluations" => self.bandmap_evaluations.to_string(),
            "bandmap.harmonics" => self.bandmap_harmonics.to_string(),
            "bandmap.start_depth" => self.bandmap_start_depth.to_string(),
            "budget.field_noise" => self.budget_field_noise.to_string(),
            "budget.hold" => self.budget_hold.to_string(),
            "budget.intensity_noise" => self.budget_intensity_noise.to_string(),
            "grid.points_per_site" => self.points_per_site.to_string(),
            "grid.step_scale" => self.step_scale.to_string(),
            "lattice.depth" => self.lattice_depth.to_string(),
            "lattice.wavelength" => self.lattice_wavelength.to_string(),
            "map.offset_points" => self.map_offset_points.to_string(),
            "map.offset_range" => self.map_offset_range.to_string(),
            "map.scale_points" => self.map_scale_points.to_string(),
            "map.scale_range" => self.map_scale_range.to_string(),
            "multisite.sites" => self.multisite_sites.to_string(),
            "rampup.max_duration" => self.rampup_max_duration.to_string(),
            "rampup.min_duration" => self.rampup_min_duration.to_string(),
            "rampup.points" => self.rampup_points.to_string(),
            "run.out" => self.out_dir.clone(),
            "run.scenario" => self.scenario.id().to_owned(),
            "run.threads" => self.threads.to_string(),
            "run.verify" => self.verify.to_string(),
            "transport.distance" => self.transport_distance.to_string(),
            "transport.duration" => self.transport_duration.to_string(),
            "transport.evaluations" => self.transport_evaluations.to_string(),
            "transport.harmonics" => self.transport_harmonics.to_string(),
            "transport.max_duration" => self.transport_max_duration.to_string(),
            "transport.min_duration" => self.transport_min_duration.to_string(),
            "transport.points" => self.transport_points.to_string(),
            "tweezer.depth" => self.tweezer_depth.to_string(),
            "tweezer.waist" => self.tweezer_waist.to_string(),
            _ => unreachable!("render called for every schema key"),
        }
    }

    fn apply(&mut self, entry: &Entry) -> Result<()> {
        let dimension = SCHEMA
            .iter()
            .find(|(key, _)| *key == entry.key)
            .map(|&(_, d)| d)
            .ok_or_else(|| {
                config_error(
                    entry.line,
                    entry.column,
                    format!("unknown key `{}`", entry.key),
                )
            })?;
        let site = 0.5 * self.lattice_wavelength;
        match entry.key {
            "bandmap.aux_depth" => self.bandmap_aux_depth = parse_quantity(entry, dimension, site)?,
            "bandmap.duration" => self.bandmap_duration = parse_quantity(entry, dimension, site)?,
            "bandmap.evaluations" => self.bandmap_evaluations = parse_count(entry)?,
            "bandmap.harmonics" => self.bandmap_harmonics = parse_count(entry)?,
            "bandmap.start_depth" => {
                self.bandmap_start_depth = parse_quantity(entry, dimension, site)?
            }
            "budget.field_noise" => {
                self.budget_field_noise = parse_quantity(entry, dimension, site)?
            }
            "budget.hold" => self.budget_hold = parse_quantity(entry, dimension, site)?,
            "budget.intensity_noise" => {
                self.budget_intensity_noise = parse_quantity(entry, dimension, site)?
            }
            "grid.points_per_site" => self.points_per_site = parse_count(entry)?,
            "grid.step_scale" => self.step_scale = parse_quantity(entry, dimension, site)?,
            "lattice.depth" => self.lattice_depth = parse_quantity(entry, dimension, site)?,
            "lattice.wavelength" => self.lattice_wavelength = parse_wavelength(entry)?,
            "map.offset_points" => self.map_offset_points = parse_count(entry)?,
            "map.offset_range" => self.map_offset_range = parse_quantity(entry, dimension, site)?,
            "map.scale_points" => self.map_scale_points = parse_count(entry)?,
            "map.scale_range" => self.map_scale_range = parse_quantity(entry, dimension, site)?,
            "multisite.sites" => self.multisite_sites = parse_count(entry)?,
            "rampup.max_duration" => {
                self.rampup_max_duration = parse_quantity(entry, dimension, site)?
            }
            "rampup.min_duration" => {
                self.rampup_min_duration = parse_quantity(entry, dimension, site)?
            }
            "rampup.points" => self.rampup_points = parse_count(entry)?,
            "run.out" => self.out_dir = entry.value.to_owned(),
            "run.scenario" => {
                self.scenario = Scenario::from_id(entry.value).ok_or_else(|| {
                    config_error(
                        entry.line,
                        entry.column,
                        format!(
                            "unknown scenario `{}`; expected one of {}",
                            entry.value,
                            Scenario::ALL.map(Scenario::id).join(", ")
                        ),
                    )
                })?;
            }
            "run.threads" => self.threads = parse_count(entry)?,
            "run.verify" => {
                self.verify = match entry.value {
                    "true" => true,
                    "false" => false,
                    other => {
                        return Err(config_error(
                            entry.line,
                            entry.column,
                            format!("expected true or false, got `{other}`"),
                        ))
                    }
                }
            }
            "transport.distance" => {
                self.transport_distance = parse_quantity(entry, dimension, site)?
            }
            "transport.duration" => {
                self.transport_duration = parse_quantity(entry, dimension, site)?
            }
            "transport.evaluations" => self.transport_evaluations = parse_count(entry)?,
            "transport.harmonics" => self.transport_harmonics = parse_count(entry)?,
            "transport.max_duration" => {
                self.transport_max_duration = parse_quantity(entry, dimension, site)?
            }
            "transport.min_duration" => {
                self.transport_min_duration = parse_quantity(entry, dimension, site)?
            }
            "transport.points" => self.transport_points = parse_count(entry)?,
            "tweezer.depth" => self.tweezer_depth = parse_quantity(entry, dimension, site)?,
            "tweezer.waist" => self.tweezer_waist = parse_quantity(entry, dimension, site)?,
            _ => unreachable!("schema lookup succeeded"),
        }
        Ok(())
    }

    fn validate(&self) -> Result<()> {
        let positive: [(&str, f64); 12] = [
            ("lattice.depth", self.lattice_depth),
            ("lattice.wavelength", self.lattice_wavelength),
            ("tweezer.depth", self.tweezer_depth),
            ("tweezer.waist", self.tweezer_waist),
            ("grid.step_scale", self.step_scale),
            ("rampup.min_duration", self.rampup_min_duration),
            ("rampup.max_duration", self.rampup_max_duration),
            ("transport.min_duration", self.transport_min_duration),
            ("transport.max_duration", self.transport_max_duration),
            ("transport.duration", self.transport_duration),
            ("bandmap.duration", self.bandmap_duration),
            ("bandmap.start_depth", self.bandmap_start_depth),
        ];
        for (key, value) in positive {
            if !(value > 0.0) {
                return Err(config_error(0, 0, format!("{key} must be positive, got {value}")));
            }
        }
        let non_negative: [(&str, f64); 4] = [
            ("bandmap.aux_depth", self.bandmap_aux_depth),
            ("budget.field_noise", self.budget_field_noise),
            ("budget.hold", self.budget_hold),
            ("budget.intensity_noise", self.budget_intensity_noise),
        ];
        for (key, value) in non_negative {
            if !(value >= 0.0) {
                return Err(config_error(
                    0,
                    0,
                    format!("{key} must be non-negative, got {value}"),
                ));
            }
        }
        for (key, lo, hi) in [
            (
                "rampup durations",
                self.rampup_min_duration,
                self.rampup_max_duration,
            ),
            (
                "transport durations",
                self.transport_min_duration,
                self.transport_max_duration,
            ),
        ] {
            if lo > hi {
                return Err(config_error(
                    0,
                    0,
                    format!("{key}: minimum {lo} exceeds maximum {hi}"),
                ));
            }
        }
        for (key, points) in [
            ("rampup.points", self.rampup_points),
            ("transport.points", self.transport_points),
            ("map.offset_points", self.map_offset_points),
            ("map.scale_points", self.map_scale_points),
        ] {
            if points < 2 {
                return Err(config_error(
                    0,
                    0,
                    format!("{key} needs at least 2 samples, got {points}"),
                ));
            }
        }
        if self.points_per_site < 8 {
            return Err(config_error(
                0,
                0,
                format!(
                    "grid.points_per_site below 8 cannot resolve a site, got {}",
                    self.points_per_site
                ),
            ));
        }
        if !(self.step_scale <= 1.0) {
            return Err(config_error(
                0,
                0,
                format!("grid.step_scale must lie in (0, 1], got {}", self.step_scale),
            ));
        }
        Ok(())
    }
}

/// Split the text into entries, rejecting anything but comments, blanks,
/// and well-formed `section.key = value` lines.
fn lex(text: &str) -> Result<Vec<Entry<'_>>> {
    let mut entries: Vec<Entry> = Vec::new();
    for (index, raw) in text.lines().enumerate() {
        let line = index + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let column = raw.len() - raw.trim_start().len() + 1;
        let Some(eq) = trimmed.find('=') else {
            return Err(config_error(
                line,
                column,
                format!("expected `section.key = value`, got `{trimmed}`"),
            ));
        };
        let key = trimmed[..eq].trim_end();
        let value = trimmed[eq + 1..].trim();
        if key.is_empty() || value.is_empty() {
            return Err(config_error(
                line,
                column,
                "both key and value are required around `=`",
            ));
        }
        let dots = key.chars().filter(|&c| c == '.').count();
        if dots != 1 || key.starts_with('.') || key.ends_with('.') {
            return Err(config_error(
                line,
                column,
                format!("keys take the form `section.key`, got `{key}`"),
            ));
        }
        if let Some(previous) = entries.iter().find(|e| e.key == key) {
            return Err(config_error(
                line,
                column,
                format!("duplicate key `{key}` (first set on line {})", previous.line),
            ));
        }
        entries.push(Entry {
            key,
            value,
            line,
            column,
        });
    }
    Ok(entries)
}

/// Split a `12.5us`-style token into number text and suffix text.
fn split_suffix(value: &str) -> (&str, &str) {
    let split = value
        .rfind(|c: char| !c.is_ascii_alphabetic())
        .map_or(0, |i| i + 1);
    (&value[..split], &value[split..])
}

fn parse_number<'a>(entry: &'a Entry<'a>) -> Result<(f64, &'a str)> {
    let (number, suffix) = split_suffix(entry.value);
    let parsed: f64 = number.parse().map_err(|_| {
        config_error(
            entry.line,
            entry.column,
            format!("`{}` is not a number", entry.value),
        )
    })?;
    if !parsed.is_finite() {
        return Err(config_error(
            entry.line,
            entry.column,
            format!("`{}` is not finite", entry.value),
        ));
    }
    Ok((parsed, suffix))
}

fn parse_count(entry: &Entry) -> Result<usize> {
    entry.value.parse().map_err(|_| {
        config_error(
            entry.line,
            entry.column,
            format!("`{}` is not an unsigned integer", entry.value),
        )
    })
}

fn parse_wavelength(entry: &Entry) -> Result<f64> {
    let (value, suffix) = parse_number(entry)?;
    let meters = match suffix {
        "" | "m" => value,
        "mm" => value * 1e-3,
        "um" => value * 1e-6,
        "nm" => value * 1e-9,
        other => {
            return Err(config_error(
                entry.line,
                entry.column,
                format!("`{other}` is not a length suffix (use m, mm, um, or nm)"),
            ))
        }
    };
    Ok(meters)
}

/// Parse a value whose unit family is known, converting into canonical
/// units (`site` = site spacing in meters, for absolute-length suffixes
/// on site-valued keys).
fn parse_quantity(entry: &Entry, dimension: Dimension, site: f64) -> Result<f64> {
    let (value, suffix) = parse_number(entry)?;
    let bad_suffix = |expected: &str| {
        config_error(
            entry.line,
            entry.column,
            format!(
                "suffix `{suffix}` does not fit `{}` (expected {expected})",
                entry.key
            ),
        )
    };
    match dimension {
        Dimension::Time => match suffix {
            "" | "s" => Ok(value),
            "ms" => Ok(value * 1e-3),
            "us" => Ok(value * 1e-6),
            "ns" => Ok(value * 1e-9),
            _ => Err(bad_suffix("s, ms, us, or ns")),
        },
        Dimension::SiteLength => match suffix {
            "" => Ok(value),
            "um" => Ok(value * 1e-6 / site),
            "nm" => Ok(value * 1e-9 / site),
            _ => Err(bad_suffix("bare sites, um, or nm")),
        },
        Dimension::Depth => match suffix {
            "" | "Er" => Ok(value),
            _ => Err(bad_suffix("bare recoils or Er")),
        },
        Dimension::Field => match suffix {
            "" | "G" => Ok(value),
            "mG" => Ok(value * 1e-3),
            "uG" => Ok(value * 1e-6),
            _ => Err(bad_suffix("G, mG, or uG")),
        },
        Dimension::Float => match suffix {
            "" => Ok(value),
            _ => Err(bad_suffix("a bare number")),
        },
        Dimension::Wavelength | Dimension::Count | Dimension::Bool | Dimension::Text => {
            unreachable!("handled by dedicated parsers")
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn empty_text_gives_the_defaults() {
        let config = Config::parse("").unwrap();
        assert_eq!(config, Config::default());
    }

    #[test]
    fn si_suffixes_convert_to_canonical_units() {
        let config = Config::parse(
            "transport.duration = 11us\n\
             tweezer.depth = 500Er\n\
             map.offset_range = 36nm\n\
             budget.field_noise = 50uG\n\
             bandmap.duration = 0.075ms\n",
        )
        .unwrap();
        assert_relative_eq!(config.transport_duration, 11e-6);
        assert_relative_eq!(config.tweezer_depth, 500.0);
        assert_relative_eq!(config.map_offset_range, 36e-9 / 0.532e-6);
        assert_relative_eq!(config.budget_field_noise, 50e-6);
        assert_relative_eq!(config.bandmap_duration, 75e-6);
    }

    #[test]
    fn absolute_lengths_follow_a_changed_wavelength_wherever_it_appears() {
        // The site spacing comes from the wavelength even when the length
        // key precedes it in the file.
        let config = Config::parse(
            "map.offset_range = 36nm\n\
             lattice.wavelength = 532nm\n",
        )
        .unwrap();
        assert_relative_eq!(config.lattice_wavelength, 532e-9);
        assert_relative_eq!(config.map_offset_range, 36e-9 / 266e-9);
    }

    #[test]
    fn unknown_keys_are_rejected_with_position() {
        let err = Config::parse("lattice.depth = 50\nlattice.depht = 50\n").unwrap_err();
        match err {
            Error::Config { line, column, message } => {
                assert_eq!(line, 2);
                assert_eq!(column, 1);
                assert!(message.contains("lattice.depht"));
            }
            other => panic!("expected config error, got {other}"),
        }
    }

    #[test]
    fn malformed_lines_and_duplicates_are_rejected() {
        assert!(matches!(
            Config::parse("lattice.depth 50\n"),
            Err(Error::Config { line: 1, .. })
        ));
        assert!(matches!(
            Config::parse("depth = 50\n"),
            Err(Error::Config { .. })
        ));
        assert!(matches!(
            Config::parse("lattice.depth = 50\nlattice.depth = 60\n"),
            Err(Error::Config { line: 2, .. })
        ));
        assert!(matches!(
            Config::parse("lattice.depth = \n"),
            Err(Error::Config { .. })
        ));
    }

    #[test]
    fn wrong_suffixes_are_rejected() {
        for bad in [
            "transport.duration = 5nm",
            "tweezer.depth = 5us",
            "budget.field_noise = 5Er",
            "grid.step_scale = 0.5s",
            "lattice.wavelength = 5G",
        ] {
            assert!(
                matches!(Config::parse(bad), Err(Error::Config { .. })),
                "`{bad}` should fail"
            );
        }
    }

    #[test]
    fn nonsense_values_are_rejected() {
        for bad in [
            "transport.duration = fast",
            "rampup.points = -3",
            "rampup.points = 2.5",
            "run.verify = yes",
            "run.scenario = warp-drive",
            "lattice.depth = -50",
            "grid.step_scale = 2.0",
            "rampup.min_duration = 20us\nrampup.max_duration = 10us",
        ] {
            assert!(
                matches!(Config::parse(bad), Err(Error::Config { .. })),
                "`{bad}` should fail"
            );
        }
    }

    #[test]
    fn comments_and_blanks_are_ignored() {
        let config = Config::parse(
            "# a comment\n\
             \n\
             lattice.depth = 60\n\
             # another\n",
        )
        .unwrap();
        assert_relative_eq!(config.lattice_depth, 60.0);
    }

    #[test]
    fn echo_round_trips_exactly() {
        let config = Config::parse(
            "run.scenario = transport-scan\n\
             transport.duration = 25us\n\
             grid.step_scale = 0.3333333333333333\n\
             map.offset_range = 7nm\n",
        )
        .unwrap();
        let echoed = Config::parse(&config.echo()).unwrap();
        assert_eq!(config, echoed);
        assert_eq!(config.echo(), echoed.echo());
        assert_eq!(config.hash(), echoed.hash());
    }

    #[test]
    fn hash_tracks_every_value_change() {
        let base = Config::default();
        let mut changed = Config::default();
        changed.tweezer_depth = 501.0;
        assert_ne!(base.hash(), changed.hash());
        assert_eq!(base.hash(), Config::default().hash());
        assert_eq!(base.hash().len(), 16);
    }

    #[test]
    fn scenario_ids_round_trip() {
        for scenario in Scenario::ALL {
            assert_eq!(Scenario::from_id(scenario.id()), Some(scenario));
        }
        assert_eq!(Scenario::from_id("nope"), None);
    }

    #[test]
    fn config_errors_exit_with_code_two() {
        let err = Config::parse("bogus.key = 1\n").unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }
}
