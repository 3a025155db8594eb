use crate::fft::Fft2;
use crate::grid::TorusGrid;
use crate::{Result, SqgError};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex64;

/// Mean-zero real scalar field stored as Fourier coefficients θ̂_k with the
/// convention θ(x) = Σ_k θ̂_k e^{ik·x}. Coefficients are indexed by storage
/// index (j₁, j₂) where `grid.wavenumber(j)` recovers the signed wavenumber.
///
/// Invariants kept by every constructor and operation:
/// θ̂₀ = 0 (mean-free) and θ̂₋ₖ = conj(θ̂ₖ) (real-valued field).
#[derive(Debug, Clone)]
pub struct SpectralField {
    grid: TorusGrid,
    coeffs: Array2<Complex64>,
}

impl SpectralField {
    pub fn zeros(grid: TorusGrid) -> Self {
        let n = grid.n();
        SpectralField {
            grid,
            coeffs: Array2::default((n, n)),
        }
    }

    /// Field from collocation values. The k = 0 coefficient is zeroed so the
    /// result is always mean-free, and conjugate symmetry is enforced
    /// exactly.
    pub fn from_values(grid: TorusGrid, values: &Array2<f64>) -> Self {
        let n = grid.n();
        assert_eq!(values.dim(), (n, n), "value grid size mismatch");
        let mut data = values.mapv(|v| Complex64::new(v, 0.0));
        Fft2::get(n).forward(&mut data);
        let scale = 1.0 / (n * n) as f64;
        data.mapv_inplace(|c| c * scale);
        let mut field = SpectralField { grid, coeffs: data };
        field.conjugate_symmetrize();
        field.coeffs[(0, 0)] = Complex64::new(0.0, 0.0);
        field
    }

    /// A·cos(k·x + φ) as a spectral field.
    pub fn harmonic(grid: TorusGrid, k: (i64, i64), amplitude: f64, phase: f64) -> Self {
        let mut f = SpectralField::zeros(grid);
        assert!(k != (0, 0), "harmonic mode must be nonzero");
        f.set_mode(k, Complex64::from_polar(amplitude / 2.0, phase));
        f
    }

    pub fn grid(&self) -> TorusGrid {
        self.grid
    }

    pub fn coeffs(&self) -> &Array2<Complex64> {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut Array2<Complex64> {
        &mut self.coeffs
    }

    /// Coefficient at signed wavenumber k.
    pub fn coeff(&self, k: (i64, i64)) -> Complex64 {
        let (i, j) = (self.grid.index_of(k.0), self.grid.index_of(k.1));
        self.coeffs[(i, j)]
    }

    /// Sets θ̂_k = c and θ̂_{−k} = conj(c), preserving realness.
    pub fn set_mode(&mut self, k: (i64, i64), c: Complex64) {
        let (i, j) = (self.grid.index_of(k.0), self.grid.index_of(k.1));
        let (im, jm) = (self.grid.index_of(-k.0), self.grid.index_of(-k.1));
        self.coeffs[(i, j)] = c;
        if (im, jm) != (i, j) {
            self.coeffs[(im, jm)] = c.conj();
        } else {
            // self-conjugate mode (zero or Nyquist) must be real
            self.coeffs[(i, j)] = Complex64::new(c.re, 0.0);
        }
        if k == (0, 0) {
            self.coeffs[(0, 0)] = Complex64::default();
        }
    }

    /// Collocation values by inverse transform.
    pub fn to_values(&self) -> Array2<f64> {
        let n = self.grid.n();
        let mut data = self.coeffs.clone();
        Fft2::get(n).inverse(&mut data);
        data.mapv(|c| c.re)
    }

    /// Enforces θ̂₋ₖ = conj(θ̂ₖ) by averaging the pair.
    pub fn conjugate_symmetrize(&mut self) {
        let n = self.grid.n();
        for i in 0..n {
            for j in 0..n {
                let (im, jm) = ((n - i) % n, (n - j) % n);
                if (i, j) < (im, jm) {
                    let a = self.coeffs[(i, j)];
                    let b = self.coeffs[(im, jm)];
                    let avg = 0.5 * (a + b.conj());
                    self.coeffs[(i, j)] = avg;
                    self.coeffs[(im, jm)] = avg.conj();
                } else if (i, j) == (im, jm) {
                    self.coeffs[(i, j)] = Complex64::new(self.coeffs[(i, j)].re, 0.0);
                }
            }
        }
    }

    /// Zeroes every coefficient with |k| beyond the two-thirds radius.
    pub fn dealias(&mut self) {
        let n = self.grid.n();
        for i in 0..n {
            let k1 = self.grid.wavenumber(i);
            for j in 0..n {
                let k2 = self.grid.wavenumber(j);
                if !self.grid.dealias_keep(k1, k2) {
                    self.coeffs[(i, j)] = Complex64::default();
                }
            }
        }
    }

    /// True if every coefficient beyond the dealiasing radius is zero.
    pub fn is_dealiased(&self) -> bool {
        let n = self.grid.n();
        for i in 0..n {
            let k1 = self.grid.wavenumber(i);
            for j in 0..n {
                let k2 = self.grid.wavenumber(j);
                if !self.grid.dealias_keep(k1, k2) && self.coeffs[(i, j)].norm() != 0.0 {
                    return false;
                }
            }
        }
        true
    }

    /// Max deviation from conjugate symmetry, for tests.
    pub fn symmetry_defect(&self) -> f64 {
        let n = self.grid.n();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let (im, jm) = ((n - i) % n, (n - j) % n);
                let d = (self.coeffs[(i, j)] - self.coeffs[(im, jm)].conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// L² norm under the Parseval convention ‖φ‖² = 4π² Σ|φ̂_k|².
    pub fn l2_norm(&self) -> f64 {
        let sum: f64 = self.coeffs.iter().map(|c| c.norm_sqr()).sum();
        2.0 * std::f64::consts::PI * sum.sqrt()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.coeffs.mapv_inplace(|c| c * factor);
        out
    }

    /// self − other.
    pub fn difference(&self, other: &SpectralField) -> Self {
        assert_eq!(self.grid, other.grid, "grid mismatch");
        let mut out = self.clone();
        out.coeffs.zip_mut_with(&other.coeffs, |a, b| *a -= b);
        out
    }

    /// Finite difference δ_hθ(x) = θ(x + h) − θ(x) for a grid shift h given
    /// in cells. Exact on the collocation grid.
    pub fn finite_difference(&self, shift: (i64, i64)) -> Array2<f64> {
        let v = self.to_values();
        finite_difference_values(&v, shift)
    }
}

/// δ_h of a value grid for a cell shift, with periodic wraparound.
pub fn finite_difference_values(values: &Array2<f64>, shift: (i64, i64)) -> Array2<f64> {
    let n = values.nrows();
    let a = shift.0.rem_euclid(n as i64) as usize;
    let b = shift.1.rem_euclid(n as i64) as usize;
    Array2::from_shape_fn((n, n), |(i, j)| {
        values[((i + a) % n, (j + b) % n)] - values[(i, j)]
    })
}

/// Divergence-free velocity u = ∇⊥Λ⁻¹θ as two spectral components.
#[derive(Debug, Clone)]
pub struct VelocityField {
    pub u1: SpectralField,
    pub u2: SpectralField,
}

impl VelocityField {
    pub fn grid(&self) -> TorusGrid {
        self.u1.grid()
    }

    /// Max of |k·û_k| over the lattice; exactly zero for Riesz velocities.
    pub fn divergence_defect(&self) -> f64 {
        let grid = self.grid();
        let n = grid.n();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            let k1 = grid.wavenumber(i) as f64;
            for j in 0..n {
                let k2 = grid.wavenumber(j) as f64;
                let d = k1 * self.u1.coeffs()[(i, j)] + k2 * self.u2.coeffs()[(i, j)];
                worst = worst.max(d.norm());
            }
        }
        worst
    }

    /// Pointwise sup of |u|.
    pub fn max_speed(&self) -> f64 {
        let v1 = self.u1.to_values();
        let v2 = self.u2.to_values();
        v1.iter()
            .zip(v2.iter())
            .map(|(a, b)| a.hypot(*b))
            .fold(0.0, f64::max)
    }
}

/// Random mean-free field with modulus spectrum amplitude·|k|^{−a} on an
/// active band of wavenumbers and uniformly random phases.
#[derive(Debug, Clone)]
pub struct SpectrumRecipe {
    pub decay: f64,
    pub k_min: u32,
    pub k_max: u32,
    pub amplitude: f64,
    pub seed: u64,
}

impl SpectrumRecipe {
    pub fn validate(&self) -> Result<()> {
        if self.decay <= 0.0 {
            return Err(SqgError::domain("spectrum.a", self.decay, "(0, inf)"));
        }
        if self.k_min == 0 || self.k_min > self.k_max {
            return Err(SqgError::Config(format!(
                "spectrum band [{}, {}] must satisfy 1 <= k_min <= k_max",
                self.k_min, self.k_max
            )));
        }
        Ok(())
    }
}

/// Generates the field of a [`SpectrumRecipe`]. Deterministic in the seed:
/// the same recipe yields bit-identical coefficients across runs.
pub fn generate_field(recipe: &SpectrumRecipe, grid: TorusGrid) -> Result<SpectralField> {
    recipe.validate()?;
    if f64::from(recipe.k_max) > grid.dealias_radius() {
        return Err(SqgError::Config(format!(
            "spectrum band reaches |k| = {} beyond the dealiasing radius {:.2} of n = {}",
            recipe.k_max,
            grid.dealias_radius(),
            grid.n()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(recipe.seed);
    let mut field = SpectralField::zeros(grid);
    let kmax = recipe.k_max as i64;
    let lo = (recipe.k_min * recipe.k_min) as i64;
    let hi = (recipe.k_max * recipe.k_max) as i64;
    // deterministic lexicographic sweep over a conjugate half-lattice
    for k1 in 0..=kmax {
        for k2 in -kmax..=kmax {
            if k1 == 0 && k2 <= 0 {
                continue; // other half or zero mode
            }
            let r2 = k1 * k1 + k2 * k2;
            if r2 < lo || r2 > hi {
                continue;
            }
            let modulus = recipe.amplitude * (r2 as f64).powf(-recipe.decay / 2.0);
            let phase: f64 = rng.gen_range(0.0..(2.0 * std::f64::consts::PI));
            field.set_mode((k1, k2), Complex64::from_polar(modulus, phase));
        }
    }
    Ok(field)
}
