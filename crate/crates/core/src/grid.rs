use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::SpectralError;

/// Default dealiasing fraction (2/3 rule).
pub const TWO_THIRDS: f64 = 2.0 / 3.0;

/// Discretization of the periodic box `[0, 2π)³` with `n` modes per axis.
///
/// Flat indices are row-major over `(i0, i1, i2)`; index `i` on an axis holds
/// wavenumber `i` for `i < n/2` and `i - n` otherwise, so wavenumbers span
/// `[-n/2, n/2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGrid", into = "RawGrid")]
pub struct GridSpec {
    n: usize,
    dealias_fraction: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    n: usize,
    #[serde(default = "default_fraction")]
    dealias_fraction: f64,
}

fn default_fraction() -> f64 {
    TWO_THIRDS
}

impl TryFrom<RawGrid> for GridSpec {
    type Error = SpectralError;
    fn try_from(raw: RawGrid) -> Result<Self, Self::Error> {
        GridSpec::with_dealias(raw.n, raw.dealias_fraction)
    }
}

impl From<GridSpec> for RawGrid {
    fn from(g: GridSpec) -> Self {
        RawGrid {
            n: g.n,
            dealias_fraction: g.dealias_fraction,
        }
    }
}

impl GridSpec {
    pub fn new(n: usize) -> Result<Self, SpectralError> {
        Self::with_dealias(n, TWO_THIRDS)
    }

    pub fn with_dealias(n: usize, dealias_fraction: f64) -> Result<Self, SpectralError> {
        if n < 8 || n % 2 != 0 {
            return Err(SpectralError::InvalidGrid(format!(
                "modes per axis must be even and at least 8, got {n}"
            )));
        }
        if !(dealias_fraction > 0.0 && dealias_fraction <= 1.0) {
            return Err(SpectralError::InvalidGrid(format!(
                "dealias fraction must lie in (0, 1], got {dealias_fraction}"
            )));
        }
        Ok(GridSpec {
            n,
            dealias_fraction,
        })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dealias_fraction(&self) -> f64 {
        self.dealias_fraction
    }

    pub fn period(&self) -> f64 {
        2.0 * PI
    }

    /// Total number of lattice modes, `n³`.
    #[inline]
    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Grid spacing in physical space.
    pub fn spacing(&self) -> f64 {
        2.0 * PI / self.n as f64
    }

    #[inline]
    pub fn wavenumber(&self, idx: usize) -> i64 {
        let n = self.n as i64;
        let i = idx as i64;
        if i < n / 2 {
            i
        } else {
            i - n
        }
    }

    #[inline]
    pub fn axis_index(&self, k: i64) -> Option<usize> {
        let half = (self.n / 2) as i64;
        if k < -half || k >= half {
            return None;
        }
        Some(if k >= 0 { k as usize } else { (k + self.n as i64) as usize })
    }

    #[inline]
    pub fn flat(&self, i0: usize, i1: usize, i2: usize) -> usize {
        (i0 * self.n + i1) * self.n + i2
    }

    /// Flat index of the wavevector `k`, if it is representable.
    pub fn index_of(&self, k: [i64; 3]) -> Option<usize> {
        Some(self.flat(
            self.axis_index(k[0])?,
            self.axis_index(k[1])?,
            self.axis_index(k[2])?,
        ))
    }

    #[inline]
    pub fn mode(&self, flat: usize) -> [i64; 3] {
        let n = self.n;
        [
            self.wavenumber(flat / (n * n)),
            self.wavenumber((flat / n) % n),
            self.wavenumber(flat % n),
        ]
    }

    #[inline]
    pub fn k_vec(&self, flat: usize) -> [f64; 3] {
        let k = self.mode(flat);
        [k[0] as f64, k[1] as f64, k[2] as f64]
    }

    /// `|k|²` of a flat index.
    #[inline]
    pub fn k_sq(&self, flat: usize) -> f64 {
        let k = self.mode(flat);
        (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as f64
    }

    #[inline]
    pub fn max_abs_k(&self, flat: usize) -> i64 {
        let k = self.mode(flat);
        k[0].abs().max(k[1].abs()).max(k[2].abs())
    }

    /// Largest retained `|k_i|` under the dealias mask.
    pub fn dealias_cutoff(&self) -> i64 {
        // Nudge guards against 2/3 * 3m landing a hair under an integer.
        (self.dealias_fraction * (self.n / 2) as f64 + 1e-12).floor() as i64
    }

    #[inline]
    pub fn in_mask(&self, flat: usize) -> bool {
        self.max_abs_k(flat) <= self.dealias_cutoff()
    }

    /// Flat index of `-k`, or `None` when `-k` falls on the unrepresentable
    /// side of the Nyquist plane.
    pub fn negated(&self, flat: usize) -> Option<usize> {
        let k = self.mode(flat);
        self.index_of([-k[0], -k[1], -k[2]])
    }

    /// Physical coordinate of grid point `idx` on one axis.
    pub fn coordinate(&self, idx: usize) -> f64 {
        idx as f64 * self.spacing()
    }
}
