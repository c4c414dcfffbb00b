use std::ops::{Add, Sub};

use num_complex::Complex64;

use crate::error::SpectralError;
use crate::exec::Execution;
use crate::fft::Fft3;
use crate::grid::GridSpec;

/// Periodic real vector field stored as Fourier coefficients on the lattice.
///
/// Coefficients are kept per component in the row-major layout of
/// [`GridSpec`]. The field is real in physical space, so `û(-k) = conj(û(k))`;
/// the zero mode is kept at 0.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: GridSpec,
    comps: [Vec<Complex64>; 3],
    divergence_free: bool,
}

impl SpectralField {
    pub fn zeros(grid: GridSpec) -> Self {
        let z = vec![Complex64::default(); grid.len()];
        SpectralField {
            grid,
            comps: [z.clone(), z.clone(), z],
            divergence_free: true,
        }
    }

    /// Builds a field from raw coefficient arrays; the zero mode is cleared.
    pub fn from_components(
        grid: GridSpec,
        mut comps: [Vec<Complex64>; 3],
        divergence_free: bool,
    ) -> Result<Self, SpectralError> {
        for c in &mut comps {
            if c.len() != grid.len() {
                return Err(SpectralError::InvalidField(format!(
                    "component has {} coefficients, grid needs {}",
                    c.len(),
                    grid.len()
                )));
            }
            c[0] = Complex64::default();
        }
        Ok(SpectralField {
            grid,
            comps,
            divergence_free,
        })
    }

    /// Transforms physical samples into a mean-free spectral field.
    pub fn from_physical(
        grid: GridSpec,
        values: &[Vec<f64>; 3],
        fft: &Fft3,
    ) -> Result<Self, SpectralError> {
        let mut comps: [Vec<Complex64>; 3] = Default::default();
        for (c, v) in comps.iter_mut().zip(values) {
            if v.len() != grid.len() {
                return Err(SpectralError::InvalidField("sample count mismatch".into()));
            }
            let mut buf: Vec<Complex64> = v.iter().map(|&x| Complex64::new(x, 0.0)).collect();
            fft.forward(&mut buf);
            *c = buf;
        }
        let mut f = Self::from_components(grid, comps, false)?;
        f.symmetrize();
        Ok(f)
    }

    /// Samples `f(x)` at the grid points and transforms it.
    pub fn from_fn<F>(grid: GridSpec, f: F) -> Self
    where
        F: Fn([f64; 3]) -> [f64; 3],
    {
        let n = grid.n();
        let mut vals: [Vec<f64>; 3] = [
            vec![0.0; grid.len()],
            vec![0.0; grid.len()],
            vec![0.0; grid.len()],
        ];
        for i0 in 0..n {
            for i1 in 0..n {
                for i2 in 0..n {
                    let x = [grid.coordinate(i0), grid.coordinate(i1), grid.coordinate(i2)];
                    let v = f(x);
                    let idx = grid.flat(i0, i1, i2);
                    for c in 0..3 {
                        vals[c][idx] = v[c];
                    }
                }
            }
        }
        let fft = Fft3::new(n, Execution::default());
        Self::from_physical(grid, &vals, &fft).expect("sample arrays sized from the grid")
    }

    /// Physical-space samples of each component.
    pub fn to_physical(&self, fft: &Fft3) -> [Vec<f64>; 3] {
        let mut out: [Vec<f64>; 3] = Default::default();
        for (o, c) in out.iter_mut().zip(&self.comps) {
            let mut buf = c.clone();
            fft.inverse(&mut buf);
            *o = buf.into_iter().map(|z| z.re).collect();
        }
        out
    }

    #[inline]
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    #[inline]
    pub fn component(&self, c: usize) -> &[Complex64] {
        &self.comps[c]
    }

    #[inline]
    pub fn component_mut(&mut self, c: usize) -> &mut [Complex64] {
        &mut self.comps[c]
    }

    pub fn components(&self) -> &[Vec<Complex64>; 3] {
        &self.comps
    }

    #[inline]
    pub fn coeff(&self, flat: usize) -> [Complex64; 3] {
        [self.comps[0][flat], self.comps[1][flat], self.comps[2][flat]]
    }

    pub fn coeff_at(&self, k: [i64; 3]) -> Option<[Complex64; 3]> {
        self.grid.index_of(k).map(|i| self.coeff(i))
    }

    /// Sets the coefficient at `k` and its Hermitian partner at `-k`.
    pub fn set_mode(&mut self, k: [i64; 3], value: [Complex64; 3]) -> Result<(), SpectralError> {
        if k == [0, 0, 0] {
            return Err(SpectralError::InvalidField("the zero mode is fixed at 0".into()));
        }
        let i = self
            .grid
            .index_of(k)
            .ok_or_else(|| SpectralError::InvalidField(format!("mode {k:?} not on the grid")))?;
        let j = self.grid.index_of([-k[0], -k[1], -k[2]]).ok_or_else(|| {
            SpectralError::InvalidField(format!("mode {k:?} has no representable partner"))
        })?;
        for c in 0..3 {
            self.comps[c][i] = value[c];
            self.comps[c][j] = value[c].conj();
        }
        Ok(())
    }

    pub fn is_divergence_free(&self) -> bool {
        self.divergence_free
    }

    pub fn set_divergence_free(&mut self, flag: bool) {
        self.divergence_free = flag;
    }

    /// Enforces Hermitian symmetry and the zero mean, zeroing Nyquist-plane
    /// modes whose partner is unrepresentable.
    pub fn symmetrize(&mut self) {
        let g = self.grid;
        for c in &mut self.comps {
            let orig = c.clone();
            for (i, z) in c.iter_mut().enumerate() {
                *z = match g.negated(i) {
                    Some(j) => 0.5 * (orig[i] + orig[j].conj()),
                    None => Complex64::default(),
                };
            }
            c[0] = Complex64::default();
        }
    }

    /// `max_k |k · û(k)| / max_k |k| |û(k)|`; 0 for the zero field.
    pub fn divergence_residual(&self) -> f64 {
        let g = &self.grid;
        let mut worst_div = 0.0_f64;
        let mut scale = 0.0_f64;
        for i in 0..g.len() {
            let k = g.k_vec(i);
            let u = self.coeff(i);
            let div = k[0] * u[0] + k[1] * u[1] + k[2] * u[2];
            worst_div = worst_div.max(div.norm());
            let mag = (u[0].norm_sqr() + u[1].norm_sqr() + u[2].norm_sqr()).sqrt();
            scale = scale.max(g.k_sq(i).sqrt() * mag);
        }
        if scale == 0.0 {
            0.0
        } else {
            worst_div / scale
        }
    }

    /// Largest Hermitian-symmetry defect relative to the largest coefficient.
    pub fn hermitian_residual(&self) -> f64 {
        let g = &self.grid;
        let mut worst = 0.0_f64;
        let mut scale = 0.0_f64;
        for c in &self.comps {
            for (i, z) in c.iter().enumerate() {
                scale = scale.max(z.norm());
                match g.negated(i) {
                    Some(j) => worst = worst.max((z - c[j].conj()).norm()),
                    None => worst = worst.max(z.norm()),
                }
            }
        }
        if scale == 0.0 {
            0.0
        } else {
            worst / scale
        }
    }

    /// Checks the structural invariants: Hermitian symmetry, zero mean and,
    /// when flagged, the divergence constraint (all to 1e-12 relative).
    pub fn validate(&self) -> Result<(), SpectralError> {
        if self.comps.iter().any(|c| c.iter().any(|z| !z.re.is_finite() || !z.im.is_finite())) {
            return Err(SpectralError::InvalidField("non-finite coefficient".into()));
        }
        if self.comps.iter().any(|c| c[0] != Complex64::default()) {
            return Err(SpectralError::InvalidField("nonzero mean".into()));
        }
        let h = self.hermitian_residual();
        if h > 1e-12 {
            return Err(SpectralError::InvalidField(format!(
                "Hermitian symmetry violated by {h:e}"
            )));
        }
        if self.divergence_free {
            let d = self.divergence_residual();
            if d > 1e-12 {
                return Err(SpectralError::InvalidField(format!(
                    "flagged divergence-free but residual is {d:e}"
                )));
            }
        }
        Ok(())
    }

    pub fn scaled(&self, a: f64) -> SpectralField {
        let mut out = self.clone();
        out.scale_mut(a);
        out
    }

    pub fn scale_mut(&mut self, a: f64) {
        for c in &mut self.comps {
            for z in c.iter_mut() {
                *z *= a;
            }
        }
    }

    /// `self += a * x`.
    pub fn axpy(&mut self, a: f64, x: &SpectralField) {
        assert_eq!(self.grid, x.grid, "axpy across grids");
        for (c, xc) in self.comps.iter_mut().zip(&x.comps) {
            for (z, w) in c.iter_mut().zip(xc) {
                *z += a * w;
            }
        }
        self.divergence_free &= x.divergence_free;
    }

    /// Applies a real per-mode multiplier `m(|k|²)`.
    pub fn map_modes<F>(&self, m: F) -> SpectralField
    where
        F: Fn(f64) -> f64,
    {
        let mut out = self.clone();
        let g = self.grid;
        for c in &mut out.comps {
            for (i, z) in c.iter_mut().enumerate() {
                *z *= m(g.k_sq(i));
            }
        }
        out
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.comps
            .iter()
            .flat_map(|c| c.iter())
            .fold(0.0_f64, |m, z| m.max(z.norm()))
    }

    pub fn is_zero(&self) -> bool {
        self.comps.iter().all(|c| c.iter().all(|z| *z == Complex64::default()))
    }
}

impl Add for &SpectralField {
    type Output = SpectralField;
    fn add(self, rhs: &SpectralField) -> SpectralField {
        let mut out = self.clone();
        out.axpy(1.0, rhs);
        out
    }
}

impl Sub for &SpectralField {
    type Output = SpectralField;
    fn sub(self, rhs: &SpectralField) -> SpectralField {
        let mut out = self.clone();
        out.axpy(-1.0, rhs);
        out
    }
}
