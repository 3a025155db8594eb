//! Fractional derivatives, the Riesz-transform velocity, and the Sobolev,
//! sup and Hölder norms used by the estimate checks. All spectral operators
//! are diagonal Fourier multipliers; the finite-difference suprema run over
//! grid shifts with the minimal-image metric.

use crate::field::{SpectralField, VelocityField};
use ndarray::Array2;
use rayon::prelude::*;
use rustfft::num_complex::Complex64;

/// Λ^s: multiplier |k|^s on the mean-free lattice. Negative s is fine since
/// the zero mode is identically zero.
pub fn lambda_pow(field: &SpectralField, s: f64) -> SpectralField {
    let grid = field.grid();
    let n = grid.n();
    let mut out = field.clone();
    for i in 0..n {
        let k1 = grid.wavenumber(i) as f64;
        for j in 0..n {
            let k2 = grid.wavenumber(j) as f64;
            let kk = (k1 * k1 + k2 * k2).sqrt();
            let m = if kk > 0.0 { kk.powf(s) } else { 0.0 };
            out.coeffs_mut()[(i, j)] *= m;
        }
    }
    out
}

/// ∂/∂x_axis: multiplier i·k_axis. The Nyquist plane is zeroed to keep the
/// output real-symmetric; dealiased fields have no Nyquist content anyway.
pub fn derivative(field: &SpectralField, axis: usize) -> SpectralField {
    assert!(axis < 2);
    let grid = field.grid();
    let n = grid.n();
    let mut out = field.clone();
    for i in 0..n {
        for j in 0..n {
            let k = if axis == 0 {
                grid.wavenumber(i)
            } else {
                grid.wavenumber(j)
            };
            let m = if k.unsigned_abs() as usize == n / 2 {
                Complex64::default()
            } else {
                Complex64::new(0.0, k as f64)
            };
            out.coeffs_mut()[(i, j)] *= m;
        }
    }
    out
}

/// Riesz-transform velocity u = ∇⊥Λ⁻¹θ with multipliers
/// (−i k₂/|k|, i k₁/|k|). Divergence-free bit-exactly in coefficients and an
/// L² isometry up to rounding: ‖u‖² = ‖u₁‖² + ‖u₂‖² = ‖θ‖².
pub fn riesz_perp(field: &SpectralField) -> VelocityField {
    let grid = field.grid();
    let n = grid.n();
    // θ̂/|k| is chopped so that the later integer products k₂·t and k₁·(k₂·t)
    // are exact; then k₁û₁ + k₂û₂ cancels bitwise. Costs 2^{-(53-drop)}
    // relative accuracy in u, far below every tolerance in use.
    let drop_bits = 2 * (usize::BITS - (n / 2).leading_zeros());
    let mut u1 = field.clone();
    let mut u2 = field.clone();
    for i in 0..n {
        let k1 = grid.wavenumber(i);
        for j in 0..n {
            let k2 = grid.wavenumber(j);
            let kk = ((k1 * k1 + k2 * k2) as f64).sqrt();
            if kk == 0.0 {
                u1.coeffs_mut()[(i, j)] = Complex64::default();
                u2.coeffs_mut()[(i, j)] = Complex64::default();
                continue;
            }
            let c = field.coeffs()[(i, j)];
            let t = Complex64::new(chop(c.re / kk, drop_bits), chop(c.im / kk, drop_bits));
            let nyq1 = k1.unsigned_abs() as usize == n / 2;
            let nyq2 = k2.unsigned_abs() as usize == n / 2;
            u1.coeffs_mut()[(i, j)] = if nyq2 {
                Complex64::default()
            } else {
                Complex64::new(0.0, -(k2 as f64)) * t
            };
            u2.coeffs_mut()[(i, j)] = if nyq1 {
                Complex64::default()
            } else {
                Complex64::new(0.0, k1 as f64) * t
            };
        }
    }
    VelocityField { u1, u2 }
}

/// Rounds away the lowest `bits` mantissa bits (to nearest; a carry into
/// the exponent field rounds up to the next binade, which is correct).
fn chop(x: f64, bits: u32) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let half = 1u64 << (bits - 1);
    f64::from_bits((x.to_bits() + half) & !((1u64 << bits) - 1))
}

/// Homogeneous Sobolev norm ‖φ‖_{H^s} = 2π √(Σ |k|^{2s} |φ̂_k|²).
pub fn sobolev_norm(field: &SpectralField, s: f64) -> f64 {
    let grid = field.grid();
    let n = grid.n();
    let mut sum = 0.0;
    for i in 0..n {
        let k1 = grid.wavenumber(i) as f64;
        for j in 0..n {
            let k2 = grid.wavenumber(j) as f64;
            let kk2 = k1 * k1 + k2 * k2;
            if kk2 > 0.0 {
                sum += kk2.powf(s) * field.coeffs()[(i, j)].norm_sqr();
            }
        }
    }
    2.0 * std::f64::consts::PI * sum.sqrt()
}

/// Pointwise product computed alias-free on a doubled grid, truncated back
/// to the original lattice and stripped of its mean. Exact (to round-off)
/// whenever the combined bandwidth fits below the original Nyquist radius,
/// i.e. band(a) + band(b) ≤ n/2.
pub fn exact_product(a: &SpectralField, b: &SpectralField) -> SpectralField {
    let grid = a.grid();
    assert_eq!(grid, b.grid(), "grid mismatch");
    let n = grid.n();
    let big_grid = crate::grid::TorusGrid::new(2 * n).expect("doubled grid");
    let pad = |f: &SpectralField| {
        let mut big = SpectralField::zeros(big_grid);
        for i in 0..n {
            let k1 = grid.wavenumber(i);
            for j in 0..n {
                let k2 = grid.wavenumber(j);
                let (bi, bj) = (big_grid.index_of(k1), big_grid.index_of(k2));
                big.coeffs_mut()[(bi, bj)] = f.coeffs()[(i, j)];
            }
        }
        big
    };
    let va = pad(a).to_values();
    let vb = pad(b).to_values();
    let prod = &va * &vb;
    let big = SpectralField::from_values(big_grid, &prod);
    let mut out = SpectralField::zeros(grid);
    for i in 0..n {
        let k1 = grid.wavenumber(i);
        for j in 0..n {
            let k2 = grid.wavenumber(j);
            out.coeffs_mut()[(i, j)] = big.coeff((k1, k2));
        }
    }
    out.conjugate_symmetrize(); // Nyquist plane loses its mirror in truncation
    out.coeffs_mut()[(0, 0)] = Complex64::default();
    out
}

/// Sup norm over the collocation grid.
pub fn linf_norm(field: &SpectralField) -> f64 {
    linf_norm_of(&field.to_values())
}

pub fn linf_norm_of(values: &Array2<f64>) -> f64 {
    values.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// [θ]_{C^β} over grid pairs: max of |δ_hθ(x)| / |h|^β over grid shifts h
/// with 0 < |h| ≤ π in the minimal-image metric.
pub fn holder_seminorm(field: &SpectralField, beta: f64) -> f64 {
    assert!(beta > 0.0 && beta <= 1.0, "beta must lie in (0, 1]");
    let v = field.to_values();
    holder_seminorm_of(&v, field.grid().spacing(), beta)
}

pub fn holder_seminorm_of(values: &Array2<f64>, spacing: f64, beta: f64) -> f64 {
    shift_sup(values, spacing, |h2| h2.powf(-beta / 2.0))
}

/// Weighted finite-difference sup ‖w‖_∞ with w = |δ_hθ| / (ξ² + |h|²)^{β/2}.
/// Coincides with the Hölder seminorm when ξ = 0.
pub fn weighted_w_sup(field: &SpectralField, beta: f64, xi: f64) -> f64 {
    assert!(beta > 0.0 && beta <= 0.25, "beta must lie in (0, 1/4]");
    assert!(xi >= 0.0, "xi must be nonnegative");
    let v = field.to_values();
    weighted_w_sup_of(&v, field.grid().spacing(), beta, xi)
}

pub fn weighted_w_sup_of(values: &Array2<f64>, spacing: f64, beta: f64, xi: f64) -> f64 {
    shift_sup(values, spacing, |h2| (xi * xi + h2).powf(-beta / 2.0))
}

/// Max over grid shifts h (0 < |h| ≤ π, minimal image) and points x of
/// |δ_hθ(x)| · weight(|h|²). Since δ₋ₕθ(x+h) = −δ_hθ(x), only half of the
/// shift lattice needs visiting.
fn shift_sup(values: &Array2<f64>, spacing: f64, weight: impl Fn(f64) -> f64 + Sync) -> f64 {
    let n = values.nrows();
    let half = n / 2;
    let pi2 = std::f64::consts::PI * std::f64::consts::PI;
    let shifts: Vec<(usize, usize, f64)> = (0..=half)
        .flat_map(|a| {
            let bs: Vec<usize> = if a == 0 || a == half {
                (0..=half).collect()
            } else {
                (0..n).collect()
            };
            bs.into_iter().map(move |b| (a, b))
        })
        .filter(|&(a, b)| (a, b) != (0, 0))
        .filter_map(|(a, b)| {
            let h1 = minimal(a, n) * spacing;
            let h2 = minimal(b, n) * spacing;
            let r2 = h1 * h1 + h2 * h2;
            (r2 <= pi2 * (1.0 + 1e-12)).then_some((a, b, r2))
        })
        .collect();

    shifts
        .par_iter()
        .map(|&(a, b, r2)| {
            let mut m: f64 = 0.0;
            for i in 0..n {
                let ia = (i + a) % n;
                for j in 0..n {
                    let jb = (j + b) % n;
                    let d = (values[(ia, jb)] - values[(i, j)]).abs();
                    if d > m {
                        m = d;
                    }
                }
            }
            m * weight(r2)
        })
        .reduce(|| 0.0, f64::max)
}

fn minimal(cells: usize, n: usize) -> f64 {
    let c = cells % n;
    if c > n / 2 {
        c as f64 - n as f64
    } else {
        c as f64
    }
    .abs()
}
