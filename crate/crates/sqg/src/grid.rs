use crate::{Result, SqgError};

/// Discretization of the 2π-periodic 2-torus with an integer wavenumber
/// lattice. The domain side is fixed at 2π so that wavenumbers are integers
/// and the Poincaré constant of mean-free fields equals one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TorusGrid {
    n: usize,
}

impl TorusGrid {
    /// Grid with `n` collocation points per axis. `n` must be even and at
    /// least 8; powers of two give the fastest transforms.
    pub fn new(n: usize) -> Result<Self> {
        if n < 8 || !n.is_multiple_of(2) {
            return Err(SqgError::Config(format!(
                "grid size n = {n} must be even and >= 8"
            )));
        }
        Ok(TorusGrid { n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Physical spacing 2π/n.
    pub fn spacing(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.n as f64
    }

    /// Signed wavenumber for storage index `i` along either axis:
    /// 0, 1, …, n/2, −n/2+1, …, −1.
    pub fn wavenumber(&self, i: usize) -> i64 {
        debug_assert!(i < self.n);
        if i <= self.n / 2 {
            i as i64
        } else {
            i as i64 - self.n as i64
        }
    }

    /// Storage index of a signed wavenumber, reduced mod n.
    pub fn index_of(&self, k: i64) -> usize {
        k.rem_euclid(self.n as i64) as usize
    }

    /// Collocation coordinate of index `i`: 2π i / n.
    pub fn coord(&self, i: usize) -> f64 {
        2.0 * std::f64::consts::PI * i as f64 / self.n as f64
    }

    /// Two-thirds dealiasing test: a mode is kept iff |k| ≤ n/3,
    /// i.e. 9(k₁² + k₂²) ≤ n².
    pub fn dealias_keep(&self, k1: i64, k2: i64) -> bool {
        9 * (k1 * k1 + k2 * k2) as u64 <= (self.n * self.n) as u64
    }

    /// Largest |k| kept by the dealiasing rule.
    pub fn dealias_radius(&self) -> f64 {
        self.n as f64 / 3.0
    }

    /// Minimal-image displacement of a cell shift along one axis, in (−π, π].
    pub fn minimal_image(&self, cells: i64) -> f64 {
        let n = self.n as i64;
        let mut c = cells.rem_euclid(n);
        if c > n / 2 {
            c -= n;
        }
        c as f64 * self.spacing()
    }
}
