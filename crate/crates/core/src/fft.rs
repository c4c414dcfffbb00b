use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::exec::{self, Execution};

/// Planned 3-D complex transforms on an `n³` cube stored row-major.
///
/// `forward` maps grid values to Fourier coefficients with the `1/n³`
/// normalization, so that `f(x) = Σ_k f̂(k) e^{ik·x}`; `inverse` is the
/// unnormalized synthesis.
#[derive(Clone)]
pub struct Fft3 {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    exec: Execution,
}

impl std::fmt::Debug for Fft3 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fft3")
            .field("n", &self.n)
            .field("exec", &self.exec)
            .finish()
    }
}

#[derive(Clone, Copy)]
enum Direction {
    Forward,
    Inverse,
}

impl Fft3 {
    pub fn new(n: usize, exec: Execution) -> Self {
        let mut planner = FftPlanner::new();
        Fft3 {
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
            exec,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn execution(&self) -> Execution {
        self.exec
    }

    pub fn forward(&self, data: &mut [Complex64]) {
        self.transform(data, Direction::Forward);
        let scale = 1.0 / (self.n * self.n * self.n) as f64;
        exec::for_each_chunk_mut(self.exec, data, self.n * self.n, |_, c| {
            for z in c.iter_mut() {
                *z *= scale;
            }
        });
    }

    pub fn inverse(&self, data: &mut [Complex64]) {
        self.transform(data, Direction::Inverse);
    }

    fn plan(&self, dir: Direction) -> &Arc<dyn Fft<f64>> {
        match dir {
            Direction::Forward => &self.forward,
            Direction::Inverse => &self.inverse,
        }
    }

    fn transform(&self, data: &mut [Complex64], dir: Direction) {
        let n = self.n;
        assert_eq!(data.len(), n * n * n, "buffer does not match the cube size");
        let fft = self.plan(dir);
        let plane = n * n;

        // Axis 2 is contiguous; rustfft processes a whole plane of lines at once.
        exec::for_each_chunk_mut(self.exec, data, plane, |_, p| {
            let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
            fft.process_with_scratch(p, &mut scratch);
        });

        // Axis 1: transpose each plane, transform rows, transpose back.
        exec::for_each_chunk_mut(self.exec, data, plane, |_, p| {
            let mut t = vec![Complex64::default(); plane];
            for i1 in 0..n {
                for i2 in 0..n {
                    t[i2 * n + i1] = p[i1 * n + i2];
                }
            }
            let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
            fft.process_with_scratch(&mut t, &mut scratch);
            for i2 in 0..n {
                for i1 in 0..n {
                    p[i1 * n + i2] = t[i2 * n + i1];
                }
            }
        });

        // Axis 0: swap axes 0 and 2 through a scratch cube.
        let mut swapped = vec![Complex64::default(); data.len()];
        {
            let src: &[Complex64] = data;
            exec::for_each_chunk_mut(self.exec, &mut swapped, plane, |i2, p| {
                for i1 in 0..n {
                    for i0 in 0..n {
                        p[i1 * n + i0] = src[(i0 * n + i1) * n + i2];
                    }
                }
                let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
                fft.process_with_scratch(p, &mut scratch);
            });
        }
        let src: &[Complex64] = &swapped;
        exec::for_each_chunk_mut(self.exec, data, plane, |i0, p| {
            for i1 in 0..n {
                for i2 in 0..n {
                    p[i1 * n + i2] = src[(i2 * n + i1) * n + i0];
                }
            }
        });
    }
}
