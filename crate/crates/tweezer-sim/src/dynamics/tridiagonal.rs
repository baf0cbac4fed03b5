//! Symmetric tridiagonal eigenvalue/eigenvector machinery shared by the
//! grid eigensolver and the Bloch-band solver.
//!
//! Eigenvalues come from Sturm-sequence bisection (bit-reproducible,
//! O(n) per eigenvalue); eigenvectors from inverse iteration with a
//! partial-pivoting tridiagonal LU solve.  This covers every spectral
//! problem in the crate without pulling in a dense linear-algebra stack.

use crate::error::{Error, Result};

/// Symmetric tridiagonal matrix: `diag` of length n, `off` of length n−1.
#[derive(Debug, Clone)]
pub struct SymTridiagonal {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

impl SymTridiagonal {
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Result<Self> {
        if diag.is_empty() || off.len() + 1 != diag.len() {
            return Err(Error::Numeric(format!(
                "tridiagonal shape mismatch: {} diagonal vs {} off-diagonal entries",
                diag.len(),
                off.len()
            )));
        }
        if diag.iter().chain(off.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Numeric("tridiagonal entries must be finite".into()));
        }
        Ok(SymTridiagonal { diag, off })
    }

    pub fn n(&self) -> usize {
        self.diag.len()
    }

    /// Infinity norm — the natural error scale of the matrix.
    pub fn norm(&self) -> f64 {
        let n = self.n();
        (0..n)
            .map(|i| {
                let left = if i > 0 { self.off[i - 1].abs() } else { 0.0 };
                let right = if i + 1 < n { self.off[i].abs() } else { 0.0 };
                self.diag[i].abs() + left + right
            })
            .fold(0.0, f64::max)
    }

    fn gershgorin_bounds(&self) -> (f64, f64) {
        let n = self.n();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let left = if i > 0 { self.off[i - 1].abs() } else { 0.0 };
            let right = if i + 1 < n { self.off[i].abs() } else { 0.0 };
            lo = lo.min(self.diag[i] - left - right);
            hi = hi.max(self.diag[i] + left + right);
        }
        (lo, hi)
    }

    /// Number of eigenvalues strictly below `x` (Sturm sequence count).
    pub fn count_below(&self, x: f64) -> usize {
        // Pivot floor keeps the recurrence's sign information when a
        // pivot lands exactly on zero.
        let pivmin = self
            .off
            .iter()
            .map(|e| e * e)
            .fold(f64::MIN_POSITIVE, f64::max)
            * f64::MIN_POSITIVE.sqrt();
        let mut count = 0;
        let mut q = 1.0f64;
        for i in 0..self.n() {
            let e2 = if i > 0 {
                self.off[i - 1] * self.off[i - 1]
            } else {
                0.0
            };
            q = self.diag[i] - x - e2 / q;
            if q.abs() < pivmin {
                q = -pivmin;
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// The k-th smallest eigenvalue (0-indexed) by bisection.
    pub fn eigenvalue(&self, k: usize) -> Result<f64> {
        if k >= self.n() {
            return Err(Error::Numeric(format!(
                "eigenvalue index {k} out of range for n = {}",
                self.n()
            )));
        }
        let (mut lo, mut hi) = self.gershgorin_bounds();
        let scale = hi.abs().max(lo.abs()).max(1.0);
        for _ in 0..128 {
            let mid = 0.5 * (lo + hi);
            if !(hi - lo > 4.0 * f64::EPSILON * scale) {
                break;
            }
            if self.count_below(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// The `count` smallest eigenvalues, ascending.
    pub fn smallest_eigenvalues(&self, count: usize) -> Result<Vec<f64>> {
        (0..count).map(|k| self.eigenvalue(k)).collect()
    }

    /// Eigenvector for eigenvalue `lambda` via inverse iteration,
    /// orthogonalized against `previous` (handles clustered/degenerate
    /// eigenvalues deterministically).  Returns a unit vector (2-norm).
    pub fn eigenvector(&self, lambda: f64, previous: &[Vec<f64>]) -> Result<Vec<f64>> {
        let n = self.n();
        let scale = self.norm().max(1.0);
        // Deterministic pseudo-random seed (splitmix64) so repeated runs
        // produce bit-identical states.
        let mut state = 0x9e3779b97f4a7c15u64 ^ (n as u64);
        let mut next = move || {
            state = state.wrapping_add(0x9e3779b97f4a7c15);
            let mut z = state;
            z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
            z ^= z >> 31;
            // Uniform in [−1, 1).
            (z >> 11) as f64 / (1u64 << 52) as f64 - 1.0
        };
        let mut x: Vec<f64> = (0..n).map(|_| next()).collect();
        orthogonalize(&mut x, previous);
        normalize(&mut x)?;

        let lu = LuTridiagonal::factor(self, lambda, scale);
        let mut converged = false;
        for _ in 0..8 {
            let mut y = x.clone();
            lu.solve(&mut y);
            orthogonalize(&mut y, previous);
            let growth = norm2(&y);
            if !growth.is_finite() || growth == 0.0 {
                // Relaunch from a fresh random direction.
                x = (0..n).map(|_| next()).collect();
                orthogonalize(&mut x, previous);
                normalize(&mut x)?;
                continue;
            }
            for v in &mut y {
                *v /= growth;
            }
            x = y;
            // Inverse-iteration growth ~ 1/(eps·‖T‖) signals convergence.
            if growth > 1.0 / (1e3 * f64::EPSILON * scale) {
                converged = true;
                break;
            }
        }
        // Accept on growth or on a direct residual check.
        let residual = self.residual(&x, lambda);
        if !converged && residual > 1e-10 * scale {
            return Err(Error::Numeric(format!(
                "inverse iteration did not converge: residual {residual:.3e} \
                 against scale {scale:.3e}"
            )));
        }
        // Deterministic sign: largest-magnitude component positive.
        let (imax, _) = x
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .expect("non-empty");
        if x[imax] < 0.0 {
            for v in &mut x {
                *v = -*v;
            }
        }
        Ok(x)
    }

    /// ‖T v − λ v‖₂ for a unit vector `v`.
    pub fn residual(&self, v: &[f64], lambda: f64) -> f64 {
        let n = self.n();
        let mut sum = 0.0;
        for i in 0..n {
            let mut r = (self.diag[i] - lambda) * v[i];
            if i > 0 {
                r += self.off[i - 1] * v[i - 1];
            }
            if i + 1 < n {
                r += self.off[i] * v[i + 1];
            }
            sum += r * r;
        }
        sum.sqrt()
    }
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn normalize(v: &mut [f64]) -> Result<()> {
    let n = norm2(v);
    if !(n > 0.0) || !n.is_finite() {
        return Err(Error::Numeric("cannot normalize zero vector".into()));
    }
    for x in v {
        *x /= n;
    }
    Ok(())
}

fn orthogonalize(v: &mut [f64], basis: &[Vec<f64>]) {
    for b in basis {
        let dot: f64 = v.iter().zip(b).map(|(a, c)| a * c).sum();
        for (x, c) in v.iter_mut().zip(b) {
            *x -= dot * c;
        }
    }
}

/// LU factorization of (T − λI) with partial pivoting, for the inverse
/// iteration solves.  Pivoting introduces a second superdiagonal.
struct LuTridiagonal {
    dl: Vec<f64>,
    d: Vec<f64>,
    du: Vec<f64>,
    du2: Vec<f64>,
    swapped: Vec<bool>,
}

impl LuTridiagonal {
    fn factor(t: &SymTridiagonal, lambda: f64, scale: f64) -> Self {
        let n = t.n();
        let mut dl = t.off.clone();
        let mut d: Vec<f64> = t.diag.iter().map(|v| v - lambda).collect();
        let mut du = t.off.clone();
        let mut du2 = vec![0.0; n.saturating_sub(2)];
        let mut swapped = vec![false; n.saturating_sub(1)];
        let floor = f64::EPSILON * scale;
        for i in 0..n - 1 {
            if d[i].abs() >= dl[i].abs() {
                if d[i].abs() < floor {
                    // Exactly-singular shift: nudge the pivot as inverse
                    // iteration prescribes.
                    d[i] = if d[i] < 0.0 { -floor } else { floor };
                }
                let fact = dl[i] / d[i];
                dl[i] = fact;
                d[i + 1] -= fact * du[i];
            } else {
                let fact = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = fact;
                let tmp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = tmp - fact * d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] = -fact * du[i + 1];
                }
                swapped[i] = true;
            }
        }
        if d[n - 1].abs() < floor {
            d[n - 1] = if d[n - 1] < 0.0 { -floor } else { floor };
        }
        LuTridiagonal {
            dl,
            d,
            du,
            du2,
            swapped,
        }
    }

    fn solve(&self, b: &mut [f64]) {
        let n = self.d.len();
        for i in 0..n - 1 {
            if self.swapped[i] {
                b.swap(i, i + 1);
            }
            b[i + 1] -= self.dl[i] * b[i];
        }
        b[n - 1] /= self.d[n - 1];
        if n > 1 {
            b[n - 2] = (b[n - 2] - self.du[n - 2] * b[n - 1]) / self.d[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            b[i] = (b[i] - self.du[i] * b[i + 1] - self.du2[i] * b[i + 2]) / self.d[i];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    /// Free Laplacian with hard walls: exact spectrum
    /// λ_k = 2 − 2cos(kπ/(n+1)), exact eigenvectors sin(k i π/(n+1)).
    fn laplacian(n: usize) -> SymTridiagonal {
        SymTridiagonal::new(vec![2.0; n], vec![-1.0; n - 1]).unwrap()
    }

    #[test]
    fn laplacian_spectrum_is_exact() {
        let n = 64;
        let t = laplacian(n);
        for k in [0usize, 1, 5, 31, 62, 63] {
            let expected = 2.0 - 2.0 * ((k + 1) as f64 * PI / (n + 1) as f64).cos();
            let got = t.eigenvalue(k).unwrap();
            assert_relative_eq!(got, expected, epsilon = 1e-12);
        }
    }

    #[test]
    fn counts_are_consistent_with_eigenvalues() {
        let t = laplacian(40);
        let evs = t.smallest_eigenvalues(40).unwrap();
        for (k, ev) in evs.iter().enumerate() {
            assert_eq!(t.count_below(ev - 1e-9), k);
            assert_eq!(t.count_below(ev + 1e-9), k + 1);
        }
        // Sorted ascending.
        assert!(evs.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn eigenvectors_match_analytic_sines() {
        let n = 50;
        let t = laplacian(n);
        let lam = t.eigenvalue(2).unwrap();
        let v = t.eigenvector(lam, &[]).unwrap();
        // Compare against sin(3πi/(n+1)) up to sign.
        let norm: f64 = (1..=n)
            .map(|i| (3.0 * PI * i as f64 / (n + 1) as f64).sin().powi(2))
            .sum::<f64>()
            .sqrt();
        let mut max_err = 0.0f64;
        for (i, &vi) in v.iter().enumerate() {
            let want = (3.0 * PI * (i + 1) as f64 / (n + 1) as f64).sin() / norm;
            max_err = max_err.max((vi.abs() - want.abs()).abs());
        }
        assert!(max_err < 1e-9, "max component error {max_err:.2e}");
        assert!(t.residual(&v, lam) < 1e-11);
    }

    #[test]
    fn clustered_pair_yields_orthogonal_vectors() {
        // Two nearly uncoupled 2-level blocks with almost identical
        // energies: eigenvalues cluster pairwise.
        let t = SymTridiagonal::new(vec![1.0, 1.0 + 1e-13, 5.0, 5.0], vec![1e-7, 1e-9, 1e-7])
            .unwrap();
        let l0 = t.eigenvalue(0).unwrap();
        let l1 = t.eigenvalue(1).unwrap();
        let v0 = t.eigenvector(l0, &[]).unwrap();
        let v1 = t.eigenvector(l1, &[v0.clone()]).unwrap();
        let dot: f64 = v0.iter().zip(&v1).map(|(a, b)| a * b).sum();
        assert!(dot.abs() < 1e-10, "overlap {dot:.3e}");
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        assert!(SymTridiagonal::new(vec![1.0, 2.0], vec![]).is_err());
        assert!(SymTridiagonal::new(vec![], vec![]).is_err());
        assert!(SymTridiagonal::new(vec![1.0, f64::NAN], vec![0.0]).is_err());
    }

    #[test]
    fn out_of_range_eigenvalue_index_errors() {
        let t = laplacian(8);
        assert!(t.eigenvalue(8).is_err());
    }
}
