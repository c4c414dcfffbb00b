//! Fourier-side operators and Sobolev norms on the 3-torus.
//!
//! Plancherel convention, fixed throughout the crate:
//!
//! ```text
//! ‖f‖²_{L²}  = (2π)³ Σ_k |f̂(k)|²
//! ‖f‖²_{Ḣ^s} = (2π)³ Σ_k |k|^{2s} |f̂(k)|²
//! ‖f‖²_{H^s} = (2π)³ Σ_k (1+|k|²)^s |f̂(k)|²
//! ```
//!
//! All fields are mean-free, so the homogeneous weight is never evaluated at
//! `k = 0` with a nonzero coefficient.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::SpectralError;
use crate::exec::{self, Execution};
use crate::field::SpectralField;

/// Volume of the periodic box, `(2π)³`.
pub const VOLUME: f64 = 8.0 * PI * PI * PI;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "order", rename_all = "snake_case")]
pub enum NormConvention {
    L2,
    Homogeneous(f64),
    Inhomogeneous(f64),
}

impl NormConvention {
    /// Numeric id used in the binary snapshot header.
    pub fn id(&self) -> u8 {
        match self {
            NormConvention::L2 => 0,
            NormConvention::Homogeneous(_) => 1,
            NormConvention::Inhomogeneous(_) => 2,
        }
    }

    pub fn order(&self) -> f64 {
        match *self {
            NormConvention::L2 => 0.0,
            NormConvention::Homogeneous(s) | NormConvention::Inhomogeneous(s) => s,
        }
    }

    pub fn from_id(id: u8, order: f64) -> Option<Self> {
        match id {
            0 => Some(NormConvention::L2),
            1 => Some(NormConvention::Homogeneous(order)),
            2 => Some(NormConvention::Inhomogeneous(order)),
            _ => None,
        }
    }

    #[inline]
    pub fn weight(&self, k_sq: f64) -> f64 {
        match *self {
            NormConvention::L2 => 1.0,
            NormConvention::Homogeneous(s) => {
                if k_sq == 0.0 {
                    0.0
                } else {
                    k_sq.powf(s)
                }
            }
            NormConvention::Inhomogeneous(s) => (1.0 + k_sq).powf(s),
        }
    }
}

/// `(2π)³ Σ_k w(|k|²) |û(k)|²` with a deterministic reduction order.
pub fn weighted_energy<F>(u: &SpectralField, weight: F) -> f64
where
    F: Fn(f64) -> f64 + Sync + Send,
{
    let g = *u.grid();
    let [a, b, c] = u.components();
    let sum = exec::chunked_sum(Execution::default(), g.len(), |i| {
        let m = a[i].norm_sqr() + b[i].norm_sqr() + c[i].norm_sqr();
        if m == 0.0 {
            0.0
        } else {
            weight(g.k_sq(i)) * m
        }
    });
    VOLUME * sum
}

pub fn sobolev_norm_sq(u: &SpectralField, conv: NormConvention) -> f64 {
    weighted_energy(u, |k2| conv.weight(k2))
}

pub fn sobolev_norm(u: &SpectralField, conv: NormConvention) -> f64 {
    sobolev_norm_sq(u, conv).sqrt()
}

/// Real L² inner product `∫ u·v dx`.
pub fn inner_product(u: &SpectralField, v: &SpectralField) -> Result<f64, SpectralError> {
    if u.grid() != v.grid() {
        return Err(SpectralError::GridMismatch);
    }
    let n = u.grid().len();
    let s = exec::chunked_sum(Execution::default(), n, |i| {
        let a = u.coeff(i);
        let b = v.coeff(i);
        (a[0] * b[0].conj() + a[1] * b[1].conj() + a[2] * b[2].conj()).re
    });
    Ok(VOLUME * s)
}

/// `(−Δ)^α u`, the Fourier multiplier `|k|^{2α}`.
pub fn frac_laplacian(u: &SpectralField, alpha: f64) -> Result<SpectralField, SpectralError> {
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(SpectralError::NegativeOrder(alpha));
    }
    Ok(u.map_modes(|k2| if k2 == 0.0 { 0.0 } else { k2.powf(alpha) }))
}

/// Helmholtz-Leray projection `(I − k kᵀ/|k|²) û(k)` on every mode.
pub fn leray_project(u: &SpectralField) -> SpectralField {
    let g = *u.grid();
    let mut out = u.clone();
    let [a, b, c] = u.components();
    for i in 1..g.len() {
        let k = g.k_vec(i);
        let k2 = g.k_sq(i);
        let dot = (k[0] * a[i] + k[1] * b[i] + k[2] * c[i]) / k2;
        out.component_mut(0)[i] = a[i] - k[0] * dot;
        out.component_mut(1)[i] = b[i] - k[1] * dot;
        out.component_mut(2)[i] = c[i] - k[2] * dot;
    }
    out.set_divergence_free(true);
    out
}

/// Gaussian mollifier `exp(−ε²|k|²/2)` applied per mode.
pub fn mollify(u: &SpectralField, eps: f64) -> Result<SpectralField, SpectralError> {
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(SpectralError::NegativeMollifier(eps));
    }
    if eps == 0.0 {
        return Ok(u.clone());
    }
    let e2 = eps * eps;
    Ok(u.map_modes(|k2| (-0.5 * e2 * k2).exp()))
}

/// Zeroes every coefficient outside the dealias mask.
pub fn dealias(u: &SpectralField) -> SpectralField {
    let g = *u.grid();
    let mut out = u.clone();
    for c in 0..3 {
        for (i, z) in out.component_mut(c).iter_mut().enumerate() {
            if !g.in_mask(i) {
                *z = Complex64::default();
            }
        }
    }
    out
}

/// Sum over modes of the interpolation inequality
/// `‖f‖_{Ḣ^{target}} ≤ ‖f‖_{Ḣ^{hi}}^θ ‖f‖_{Ḣ^{lo}}^{1−θ}` with
/// `θ = (target − lo)/(hi − lo)`; returns `(lhs, rhs)`.
pub fn interpolation_sides(u: &SpectralField, target: f64, hi: f64, lo: f64) -> (f64, f64) {
    let theta = if hi == lo { 0.0 } else { (target - lo) / (hi - lo) };
    let lhs = sobolev_norm(u, NormConvention::Homogeneous(target));
    let a = sobolev_norm(u, NormConvention::Homogeneous(hi));
    let b = sobolev_norm(u, NormConvention::Homogeneous(lo));
    (lhs, a.powf(theta) * b.powf(1.0 - theta))
}

/// `‖∇f‖ ≤ ‖(−Δ)^{(s+β)/2} f‖^{(1−s)/β} ‖(−Δ)^{s/2} f‖^{1−(1−s)/β}`, valid for
/// `1 − β ≤ s ≤ 1`.
pub fn gradient_interpolation(u: &SpectralField, s: f64, beta: f64) -> (f64, f64) {
    let lhs = sobolev_norm(u, NormConvention::Homogeneous(1.0));
    let theta = (1.0 - s) / beta;
    let a = sobolev_norm(u, NormConvention::Homogeneous(s + beta));
    let b = sobolev_norm(u, NormConvention::Homogeneous(s));
    (lhs, a.powf(theta) * b.powf(1.0 - theta))
}

/// `‖f‖_{Ḣ^{3/2−β}} ≤ ‖(−Δ)^{β/2} f‖^{3/(2β)−1} ‖f‖^{2−3/(2β)}`, valid for
/// `3/4 ≤ β ≤ 3/2`.
pub fn critical_interpolation(u: &SpectralField, beta: f64) -> (f64, f64) {
    let lhs = sobolev_norm(u, NormConvention::Homogeneous(1.5 - beta));
    let theta = 1.5 / beta - 1.0;
    let a = sobolev_norm(u, NormConvention::Homogeneous(beta));
    let b = sobolev_norm(u, NormConvention::L2);
    (lhs, a.powf(theta) * b.powf(1.0 - theta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fft::Fft3;
    use crate::grid::GridSpec;

    fn grid() -> GridSpec {
        GridSpec::new(16).unwrap()
    }

    /// `sin(k x₁) e_c` built from its exact coefficients.
    fn sin_mode(k: [i64; 3], c: usize) -> SpectralField {
        let mut u = SpectralField::zeros(grid());
        let mut v = [Complex64::default(); 3];
        v[c] = Complex64::new(0.0, -0.5);
        u.set_mode(k, v).unwrap();
        u
    }

    fn sin_e2(k: i64) -> SpectralField {
        sin_mode([k, 0, 0], 1)
    }

    fn max_diff(a: &SpectralField, b: &SpectralField) -> f64 {
        (a - b).max_abs_coeff()
    }

    #[test]
    fn frac_laplacian_examples() {
        let u1 = sin_e2(1);
        for alpha in [0.0, 0.3, 1.0, 1.25] {
            assert!(max_diff(&frac_laplacian(&u1, alpha).unwrap(), &u1) < 1e-15);
        }
        let u2 = sin_e2(2);
        assert!(max_diff(&frac_laplacian(&u2, 0.5).unwrap(), &u2.scaled(2.0)) < 1e-15);
        assert!(max_diff(&frac_laplacian(&u2, 1.0).unwrap(), &u2.scaled(4.0)) < 1e-15);
        assert_eq!(
            frac_laplacian(&u2, -0.1).unwrap_err(),
            SpectralError::NegativeOrder(-0.1)
        );
    }

    #[test]
    fn frac_laplacian_keeps_flag_and_mean() {
        let mut u = sin_e2(2);
        u.set_divergence_free(true);
        let v = frac_laplacian(&u, 0.7).unwrap();
        assert!(v.is_divergence_free());
        assert_eq!(v.coeff(0), [Complex64::default(); 3]);
    }

    #[test]
    fn sobolev_examples() {
        let u1 = sin_e2(1);
        let l2 = sobolev_norm(&u1, NormConvention::L2);
        assert!((l2 * l2 - VOLUME / 2.0).abs() < 1e-12 * VOLUME);
        for s in [0.0, 0.5, 1.0, 2.7] {
            let h = sobolev_norm(&u1, NormConvention::Homogeneous(s));
            assert!((h - l2).abs() < 1e-13 * l2);
        }
        let u2 = sin_e2(2);
        let r = sobolev_norm(&u2, NormConvention::Homogeneous(1.0))
            / sobolev_norm(&u2, NormConvention::L2);
        assert!((r - 2.0).abs() < 1e-14);

        // Two separated modes: Plancherel sum mode by mode.
        let u = &sin_e2(1) + &sin_mode([0, 2, 0], 2);
        let h1 = sobolev_norm_sq(&u, NormConvention::Homogeneous(1.0));
        let expect = VOLUME / 2.0 + 4.0 * VOLUME / 2.0;
        assert!((h1 - expect).abs() < 1e-12 * expect);
    }

    #[test]
    fn inhomogeneous_norm_monotone_in_order() {
        let u = SpectralField::from_fn(grid(), |x| {
            [(x[1] + x[2]).sin(), (3.0 * x[2]).cos() * 0.2, (2.0 * x[0]).sin()]
        });
        let mut prev = 0.0;
        for i in 0..10 {
            let v = sobolev_norm(&u, NormConvention::Inhomogeneous(0.3 * i as f64));
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn leray_examples() {
        let grad = SpectralField::from_fn(grid(), |x| [x[0].cos(), 0.0, 0.0]);
        assert!(leray_project(&grad).max_abs_coeff() < 1e-16);

        let shear = SpectralField::from_fn(grid(), |x| [x[1].sin(), 0.0, 0.0]);
        assert!(max_diff(&leray_project(&shear), &shear) < 1e-16);

        let u = SpectralField::from_fn(grid(), |x| [x[0].sin(), x[0].sin(), 0.0]);
        let want = SpectralField::from_fn(grid(), |x| [0.0, x[0].sin(), 0.0]);
        assert!(max_diff(&leray_project(&u), &want) < 1e-16);
    }

    #[test]
    fn mollify_examples() {
        let u = sin_e2(1);
        assert_eq!(mollify(&u, 0.0).unwrap(), u);
        let m = mollify(&u, 1.0).unwrap();
        assert!(max_diff(&m, &u.scaled((-0.5f64).exp())) < 1e-16);
        assert!(mollify(&u, -1.0).is_err());
    }

    #[test]
    fn dealias_examples() {
        let g = grid();
        let inside = &sin_mode([5, 0, 0], 1) + &sin_mode([0, 3, -2], 0);
        assert_eq!(dealias(&inside), inside);

        let mut outside = SpectralField::zeros(g);
        outside
            .set_mode([6, 0, 1], [Complex64::new(0.0, 1.0); 3])
            .unwrap();
        assert!(dealias(&outside).is_zero());

        let mixed = &inside + &outside;
        assert_eq!(dealias(&mixed), inside);
        assert_eq!(dealias(&dealias(&mixed)), dealias(&mixed));
    }

    #[test]
    fn parseval_against_quadrature() {
        let g = grid();
        let u = SpectralField::from_fn(g, |x| {
            [(x[1] + 2.0 * x[2]).sin(), x[0].cos() * x[2].sin(), (3.0 * x[0]).cos()]
        });
        let fft = Fft3::new(g.n(), Execution::default());
        let phys = u.to_physical(&fft);
        let h3 = g.spacing().powi(3);
        let quad: f64 = (0..g.len())
            .map(|i| phys.iter().map(|c| c[i] * c[i]).sum::<f64>())
            .sum::<f64>()
            * h3;
        let spec = sobolev_norm_sq(&u, NormConvention::L2);
        assert!((quad - spec).abs() <= 1e-10 * spec);
    }

    #[test]
    fn interpolation_equality_on_single_mode() {
        let u = sin_e2(3);
        let (l, r) = gradient_interpolation(&u, 0.4, 1.1);
        assert!((l - r).abs() <= 1e-12 * r);
        let (l, r) = critical_interpolation(&u, 1.0);
        assert!((l - r).abs() <= 1e-12 * r);
    }
}
