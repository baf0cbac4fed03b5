//! Complex wavefunction on a [`Grid`], with the inner-product and
//! observable helpers the scenarios report.

use super::grid::Grid;
use crate::error::{Error, Result};
use num_complex::Complex64;

/// Kahan-compensated sum; keeps 4096-point inner products near machine
/// accuracy.
fn kahan_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut c = 0.0;
    for v in values {
        let y = v - c;
        let t = sum + y;
        c = (t - sum) - y;
        sum = t;
    }
    sum
}

/// A single-particle wavefunction sampled on a grid, normalized so that
/// Σ|ψ_i|²·dx = 1.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveFunction {
    grid: Grid,
    data: Vec<Complex64>,
}

impl WaveFunction {
    pub fn new(grid: Grid, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != grid.n_points() {
            return Err(Error::GridMismatch(format!(
                "amplitude array has {} entries for a {}-point grid",
                data.len(),
                grid.n_points()
            )));
        }
        Ok(WaveFunction { grid, data })
    }

    pub fn zeros(grid: Grid) -> Self {
        let n = grid.n_points();
        WaveFunction {
            grid,
            data: vec![Complex64::new(0.0, 0.0); n],
        }
    }

    /// Normalized Gaussian wavepacket with position spread `sigma`
    /// (⟨x²⟩−⟨x⟩² = σ²) and mean momentum `k0`.
    pub fn gaussian(grid: Grid, center: f64, sigma: f64, k0: f64) -> Result<Self> {
        if !(sigma > 0.0) {
            return Err(Error::Domain(format!(
                "wavepacket width must be positive, got {sigma}"
            )));
        }
        let data = (0..grid.n_points())
            .map(|i| {
                let x = grid.point(i);
                let u = (x - center) / sigma;
                Complex64::from_polar((-u * u / 4.0).exp(), k0 * x)
            })
            .collect();
        let mut psi = WaveFunction::new(grid, data)?;
        psi.normalize()?;
        Ok(psi)
    }

    /// Ground state of a harmonic trap of internal frequency `omega` and
    /// internal mass `mass`, centered at `center`.
    pub fn harmonic_ground(grid: Grid, center: f64, mass: f64, omega: f64) -> Result<Self> {
        if !(omega > 0.0) || !(mass > 0.0) {
            return Err(Error::Domain(format!(
                "harmonic ground state needs positive mass and frequency, got {mass}, {omega}"
            )));
        }
        WaveFunction::gaussian(grid, center, (1.0 / (2.0 * mass * omega)).sqrt(), 0.0)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    /// Σ|ψ_i|²·dx.
    pub fn norm_sq(&self) -> f64 {
        kahan_sum(self.data.iter().map(|z| z.norm_sqr())) * self.grid.dx()
    }

    pub fn normalize(&mut self) -> Result<()> {
        let n2 = self.norm_sq();
        if !(n2 > 0.0) || !n2.is_finite() {
            return Err(Error::Numeric(format!(
                "cannot normalize a state with ‖ψ‖² = {n2}"
            )));
        }
        let inv = 1.0 / n2.sqrt();
        for z in &mut self.data {
            *z *= inv;
        }
        Ok(())
    }

    fn require_same_grid(&self, other: &WaveFunction) -> Result<()> {
        if !self.grid.same_as(&other.grid) {
            return Err(Error::GridMismatch(
                "wavefunctions live on different grids".into(),
            ));
        }
        Ok(())
    }

    /// ⟨self|other⟩ = Σ self_i* · other_i · dx.
    pub fn inner(&self, other: &WaveFunction) -> Result<Complex64> {
        self.require_same_grid(other)?;
        let re = kahan_sum(
            self.data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a.re * b.re + a.im * b.im),
        );
        let im = kahan_sum(
            self.data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a.re * b.im - a.im * b.re),
        );
        Ok(Complex64::new(re, im) * self.grid.dx())
    }

    /// |⟨target|self⟩|²: population of `self` in `target`, global phase
    /// discarded.
    pub fn overlap_fidelity(&self, target: &WaveFunction) -> Result<f64> {
        Ok(target.inner(self)?.norm_sqr())
    }

    /// ⟨x⟩.
    pub fn mean_position(&self) -> f64 {
        kahan_sum(
            self.data
                .iter()
                .enumerate()
                .map(|(i, z)| self.grid.point(i) * z.norm_sqr()),
        ) * self.grid.dx()
    }

    /// ⟨x²⟩ − ⟨x⟩².
    pub fn position_variance(&self) -> f64 {
        let mean = self.mean_position();
        kahan_sum(self.data.iter().enumerate().map(|(i, z)| {
            let d = self.grid.point(i) - mean;
            d * d * z.norm_sqr()
        })) * self.grid.dx()
    }

    /// |ψ_i|² for every grid point.
    pub fn density(&self) -> Vec<f64> {
        self.data.iter().map(|z| z.norm_sqr()).collect()
    }

    /// Largest |ψ| within half a site of either domain edge — the
    /// periodic-boundary leak monitor.
    pub fn edge_amplitude(&self) -> f64 {
        let n = self.data.len();
        let guard = self
            .grid
            .points_per_site()
            .map(|pps| pps / 2)
            .unwrap_or(n / 32)
            .clamp(1, n / 4);
        self.data[..guard]
            .iter()
            .chain(&self.data[n - guard..])
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// Translate the state by an integer number of sites via an exact
    /// cyclic rotation of the sample array (periodic domain).
    pub fn roll_sites(&mut self, sites: i64) -> Result<()> {
        let pps = self.grid.points_per_site().ok_or_else(|| {
            Error::GridMismatch("grid is not site-aligned; cannot roll by sites".into())
        })? as i64;
        let n = self.data.len() as i64;
        let shift = (sites * pps).rem_euclid(n) as usize;
        self.data.rotate_right(shift);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn grid() -> Grid {
        Grid::new(-8.0, 8.0, 4096).unwrap()
    }

    #[test]
    fn gaussian_is_normalized_with_requested_moments() {
        let psi = WaveFunction::gaussian(grid(), 0.5, 0.2, 3.0).unwrap();
        assert_relative_eq!(psi.norm_sq(), 1.0, max_relative = 1e-12);
        assert_relative_eq!(psi.mean_position(), 0.5, epsilon = 1e-9);
        assert_relative_eq!(psi.position_variance(), 0.04, max_relative = 1e-9);
    }

    #[test]
    fn inner_product_is_hermitian_and_fidelity_symmetric() {
        let a = WaveFunction::gaussian(grid(), 0.0, 0.3, 1.0).unwrap();
        let b = WaveFunction::gaussian(grid(), 0.4, 0.25, -2.0).unwrap();
        let ab = a.inner(&b).unwrap();
        let ba = b.inner(&a).unwrap();
        assert_relative_eq!(ab.re, ba.re, max_relative = 1e-12);
        assert_relative_eq!(ab.im, -ba.im, max_relative = 1e-12);
        assert_relative_eq!(
            a.overlap_fidelity(&b).unwrap(),
            b.overlap_fidelity(&a).unwrap(),
            max_relative = 1e-12
        );
        assert_relative_eq!(a.overlap_fidelity(&a).unwrap(), 1.0, max_relative = 1e-12);
    }

    #[test]
    fn distant_gaussians_are_nearly_orthogonal() {
        let a = WaveFunction::gaussian(grid(), -3.0, 0.1, 0.0).unwrap();
        let b = WaveFunction::gaussian(grid(), 3.0, 0.1, 0.0).unwrap();
        assert!(a.overlap_fidelity(&b).unwrap() < 1e-30);
    }

    #[test]
    fn grid_mismatch_is_rejected() {
        let a = WaveFunction::gaussian(grid(), 0.0, 0.3, 0.0).unwrap();
        let other = Grid::new(-8.0, 8.0, 2048).unwrap();
        let b = WaveFunction::gaussian(other, 0.0, 0.3, 0.0).unwrap();
        assert!(a.inner(&b).is_err());
        assert!(a.overlap_fidelity(&b).is_err());
    }

    #[test]
    fn roll_translates_exactly() {
        let g = grid();
        let mut psi = WaveFunction::gaussian(g, -2.0, 0.15, 0.7).unwrap();
        let original = psi.clone();
        psi.roll_sites(3).unwrap();
        // Peak moved from −2 to +1.
        assert_relative_eq!(psi.mean_position(), 1.0, epsilon = 1e-6);
        psi.roll_sites(-3).unwrap();
        assert_eq!(psi, original);
    }

    #[test]
    fn edge_amplitude_sees_only_the_boundary() {
        let g = grid();
        // Center of the (asymmetric) trajectory domain, 8 sites from either
        // wall: 40σ out, far below any guard threshold.
        let centered = WaveFunction::gaussian(g, 1.0, 0.2, 0.0).unwrap();
        assert!(centered.edge_amplitude() < 1e-60);
        let near_edge = WaveFunction::gaussian(g, -7.8, 0.2, 0.0).unwrap();
        assert!(near_edge.edge_amplitude() > 1e-3);
    }

    #[test]
    fn normalize_rejects_the_zero_state() {
        let mut zero = WaveFunction::zeros(grid());
        assert!(zero.normalize().is_err());
    }
}
