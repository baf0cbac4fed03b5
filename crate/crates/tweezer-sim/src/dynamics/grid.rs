//! Uniform periodic spatial grid for wavefunction storage and spectral
//! propagation.  Positions are in lattice sites.

use crate::error::{Error, Result};
use std::f64::consts::PI;

/// Default spatial resolution: points per lattice site.
pub const DEFAULT_POINTS_PER_SITE: usize = 256;

/// Margin kept between any trajectory endpoint and the domain edge, in
/// sites.  Keeps periodic-boundary and hard-wall artifacts negligible.
pub const TRAJECTORY_MARGIN_SITES: usize = 6;

/// Uniform periodic grid on `[x_min, x_max)` with a power-of-two point
/// count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    x_min: f64,
    x_max: f64,
    n_points: usize,
    dx: f64,
    dk: f64,
}

impl Grid {
    pub fn new(x_min: f64, x_max: f64, n_points: usize) -> Result<Self> {
        if !(x_max > x_min) || !x_min.is_finite() || !x_max.is_finite() {
            return Err(Error::Domain(format!(
                "grid needs finite x_max > x_min, got [{x_min}, {x_max}]"
            )));
        }
        if n_points < 64 || !n_points.is_power_of_two() {
            return Err(Error::Domain(format!(
                "grid needs a power-of-two point count ≥ 64, got {n_points}"
            )));
        }
        let length = x_max - x_min;
        Ok(Grid {
            x_min,
            x_max,
            n_points,
            dx: length / n_points as f64,
            dk: 2.0 * PI / length,
        })
    }

    /// Grid holding a tweezer trajectory spanning `[lo, hi]` sites, with
    /// integer-aligned edges, at least [`TRAJECTORY_MARGIN_SITES`] of
    /// margin beyond each endpoint, a power-of-two number of sites, and
    /// `points_per_site` resolution.
    ///
    /// Integer alignment keeps lattice minima exactly on grid sites, so a
    /// one-site translation of a stored wavefunction is an exact array
    /// rotation (used to fold long transport sequences onto a small grid).
    pub fn for_trajectory_with(lo: f64, hi: f64, points_per_site: usize) -> Result<Self> {
        if !(hi >= lo) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::Domain(format!(
                "trajectory bounds must be finite with hi ≥ lo, got [{lo}, {hi}]"
            )));
        }
        if points_per_site < 4 || !points_per_site.is_power_of_two() {
            return Err(Error::Domain(format!(
                "points per site must be a power of two ≥ 4, got {points_per_site}"
            )));
        }
        let lo_site = lo.floor() as i64;
        let hi_site = hi.ceil() as i64;
        let span = (hi_site - lo_site).max(1) as usize;
        let sites = (span + 2 * TRAJECTORY_MARGIN_SITES)
            .next_power_of_two()
            .max(64 / points_per_site.min(64));
        let left = (sites - span) / 2;
        let x_min = (lo_site - left as i64) as f64;
        Grid::new(x_min, x_min + sites as f64, sites * points_per_site)
    }

    /// [`Grid::for_trajectory_with`] at the default 256 points per site.
    pub fn for_trajectory(lo: f64, hi: f64) -> Result<Self> {
        Grid::for_trajectory_with(lo, hi, DEFAULT_POINTS_PER_SITE)
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn dk(&self) -> f64 {
        self.dk
    }

    /// Position of grid point `i`.
    pub fn point(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.dx
    }

    /// All grid positions.
    pub fn points(&self) -> Vec<f64> {
        (0..self.n_points).map(|i| self.point(i)).collect()
    }

    /// FFT-ordered angular wavenumber of frequency bin `i`.
    pub fn wavenumber(&self, i: usize) -> f64 {
        let half = self.n_points / 2;
        if i < half {
            i as f64 * self.dk
        } else {
            (i as f64 - self.n_points as f64) * self.dk
        }
    }

    /// Number of grid points per unit site, if the grid is site-aligned
    /// with an integer point count per site.
    pub fn points_per_site(&self) -> Option<usize> {
        let pps = 1.0 / self.dx;
        let rounded = pps.round();
        ((pps - rounded).abs() < 1e-9 && rounded >= 1.0).then_some(rounded as usize)
    }

    /// Whether two grids index the same spatial points.
    pub fn same_as(&self, other: &Grid) -> bool {
        self.n_points == other.n_points && self.x_min == other.x_min && self.dx == other.dx
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn construction_validates_inputs() {
        assert!(Grid::new(0.0, 1.0, 256).is_ok());
        assert!(Grid::new(1.0, 0.0, 256).is_err());
        assert!(Grid::new(0.0, 1.0, 100).is_err());
        assert!(Grid::new(0.0, 1.0, 32).is_err());
    }

    #[test]
    fn one_site_trajectory_gets_sixteen_sites() {
        let g = Grid::for_trajectory(0.0, 1.0).unwrap();
        assert_eq!(g.n_points(), 16 * 256);
        assert_eq!(g.x_max() - g.x_min(), 16.0);
        assert_eq!(g.x_min().fract(), 0.0);
        // Margins at least six sites on both sides.
        assert!(0.0 - g.x_min() >= TRAJECTORY_MARGIN_SITES as f64);
        assert!(g.x_max() - 1.0 >= TRAJECTORY_MARGIN_SITES as f64);
        assert_eq!(g.points_per_site(), Some(256));
    }

    #[test]
    fn long_trajectory_grows_the_domain() {
        let g = Grid::for_trajectory(0.0, 101.0).unwrap();
        let sites = (g.x_max() - g.x_min()) as usize;
        assert_eq!(sites, 128);
        assert!(g.n_points().is_power_of_two());
    }

    #[test]
    fn wavenumbers_follow_fft_ordering() {
        let g = Grid::new(0.0, 16.0, 1024).unwrap();
        assert_eq!(g.wavenumber(0), 0.0);
        assert_relative_eq!(g.wavenumber(1), 2.0 * PI / 16.0, max_relative = 1e-15);
        assert_relative_eq!(
            g.wavenumber(1023),
            -2.0 * PI / 16.0,
            max_relative = 1e-15
        );
        assert_relative_eq!(
            g.wavenumber(512),
            -512.0 * 2.0 * PI / 16.0,
            max_relative = 1e-15
        );
    }

    #[test]
    fn points_cover_the_domain_half_open() {
        let g = Grid::new(-8.0, 8.0, 4096).unwrap();
        assert_eq!(g.point(0), -8.0);
        let last = g.point(g.n_points() - 1);
        assert!(last < 8.0);
        assert_relative_eq!(last, 8.0 - g.dx(), max_relative = 1e-12);
    }
}
