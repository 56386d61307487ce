//! Spectral (Fourier) differentiation on the periodic grid.
//!
//! First derivatives use wavenumbers with the Nyquist bin zeroed, the
//! Laplacian uses the full `-|k|^2`. All multipliers commute, so
//! `div(curl u)` and `curl(grad f)` vanish to round-off.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::exec;

use super::fields::{AnyField, ScalarField, VectorField};
use super::grid::Grid;

pub type Spectrum = Vec<Complex64>;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Planned complex 3-D FFT for one grid (unnormalized forward, `1/n^3` inverse).
pub struct Fft3 {
    grid: Grid,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    k_full: Vec<f64>,
    k_deriv: Vec<f64>,
}

impl std::fmt::Debug for Fft3 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fft3").field("grid", &self.grid).finish()
    }
}

impl Fft3 {
    pub fn new(grid: Grid) -> Self {
        let mut planner = FftPlanner::new();
        let n = grid.n();
        Fft3 {
            grid,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
            k_full: (0..n).map(|m| grid.wavenumber(m)).collect(),
            k_deriv: (0..n).map(|m| grid.derivative_wavenumber(m)).collect(),
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Wavenumber vector of spectral index `idx`, Nyquist zeroed.
    #[inline]
    pub fn k_deriv(&self, idx: usize) -> [f64; 3] {
        let (i, j, k) = self.grid.unravel(idx);
        [self.k_deriv[i], self.k_deriv[j], self.k_deriv[k]]
    }

    /// `|k|^2` with the true Nyquist wavenumber.
    #[inline]
    pub fn k2(&self, idx: usize) -> f64 {
        let (i, j, k) = self.grid.unravel(idx);
        self.k_full[i].powi(2) + self.k_full[j].powi(2) + self.k_full[k].powi(2)
    }

    /// Integer mode numbers `|m|` per axis (Nyquist counted as `n/2`).
    #[inline]
    pub fn mode_numbers(&self, idx: usize) -> [usize; 3] {
        let n = self.grid.n();
        let (i, j, k) = self.grid.unravel(idx);
        let fold = |m: usize| if m <= n / 2 { m } else { n - m };
        [fold(i), fold(j), fold(k)]
    }

    fn transform(&self, data: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        let n = self.grid.n();
        let plane = n * n;
        // x: contiguous lines
        exec::for_each_chunk_mut(data, plane, |_, chunk| {
            let mut scratch = vec![Complex64::default(); plan.get_inplace_scratch_len()];
            plan.process_with_scratch(chunk, &mut scratch);
        });
        // y: transpose each z-plane
        exec::for_each_chunk_mut(data, plane, |_, chunk| {
            let mut buf = vec![Complex64::default(); plane];
            let mut scratch = vec![Complex64::default(); plan.get_inplace_scratch_len()];
            for j in 0..n {
                for i in 0..n {
                    buf[i * n + j] = chunk[i + n * j];
                }
            }
            plan.process_with_scratch(&mut buf, &mut scratch);
            for j in 0..n {
                for i in 0..n {
                    chunk[i + n * j] = buf[i * n + j];
                }
            }
        });
        // z: gather per y-index, then scatter
        let src: &[Complex64] = data;
        let columns = exec::map_collect(n, |j| {
            let mut buf = vec![Complex64::default(); plane];
            let mut scratch = vec![Complex64::default(); plan.get_inplace_scratch_len()];
            for k in 0..n {
                for i in 0..n {
                    buf[i * n + k] = src[i + n * (j + n * k)];
                }
            }
            plan.process_with_scratch(&mut buf, &mut scratch);
            buf
        });
        for (j, buf) in columns.iter().enumerate() {
            for k in 0..n {
                for i in 0..n {
                    data[i + n * (j + n * k)] = buf[i * n + k];
                }
            }
        }
    }

    pub fn forward_in_place(&self, data: &mut [Complex64]) {
        self.transform(data, &self.forward);
    }

    pub fn inverse_in_place(&self, data: &mut [Complex64]) {
        self.transform(data, &self.inverse);
        let scale = 1.0 / self.grid.len() as f64;
        exec::for_each_chunk_mut(data, exec::REDUCE_CHUNK, |_, c| {
            c.iter_mut().for_each(|z| *z *= scale)
        });
    }

    pub fn forward_real(&self, values: &[f64]) -> Spectrum {
        let mut data: Spectrum = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward_in_place(&mut data);
        data
    }

    /// Inverse transform keeping the real part.
    pub fn inverse_real(&self, mut spec: Spectrum) -> Vec<f64> {
        self.inverse_in_place(&mut spec);
        spec.into_iter().map(|z| z.re).collect()
    }

    pub fn to_field(&self, spec: Spectrum) -> Result<ScalarField> {
        ScalarField::new(self.grid, self.inverse_real(spec))
    }

    /// Multiplies a spectrum by `i k_axis`.
    pub fn derivative(&self, spec: &[Complex64], axis: usize) -> Spectrum {
        let mut out = vec![Complex64::default(); spec.len()];
        exec::fill(&mut out, |idx| I * self.k_deriv(idx)[axis] * spec[idx]);
        out
    }

    pub fn laplacian_spectrum(&self, spec: &[Complex64]) -> Spectrum {
        let mut out = vec![Complex64::default(); spec.len()];
        exec::fill(&mut out, |idx| -self.k2(idx) * spec[idx]);
        out
    }

    /// Zero-mean solution of `Δu = f` in spectral space.
    pub fn solve_poisson(&self, spec: &[Complex64]) -> Spectrum {
        let mut out = vec![Complex64::default(); spec.len()];
        exec::fill(&mut out, |idx| {
            let k2 = self.k2(idx);
            if k2 == 0.0 {
                Complex64::default()
            } else {
                -spec[idx] / k2
            }
        });
        out
    }

    pub fn grad(&self, f: &ScalarField) -> Result<VectorField> {
        let spec = self.forward_real(f.values());
        VectorField::new([
            self.to_field(self.derivative(&spec, 0))?,
            self.to_field(self.derivative(&spec, 1))?,
            self.to_field(self.derivative(&spec, 2))?,
        ])
    }

    pub fn div(&self, v: &VectorField) -> Result<ScalarField> {
        let specs = self.forward_vector(v);
        let mut out = vec![Complex64::default(); self.grid.len()];
        exec::fill(&mut out, |idx| {
            let k = self.k_deriv(idx);
            I * (k[0] * specs[0][idx] + k[1] * specs[1][idx] + k[2] * specs[2][idx])
        });
        self.to_field(out)
    }

    pub fn curl(&self, v: &VectorField) -> Result<VectorField> {
        let s = self.forward_vector(v);
        let comp = |a: usize| {
            let (b, c) = ((a + 1) % 3, (a + 2) % 3);
            let mut out = vec![Complex64::default(); self.grid.len()];
            exec::fill(&mut out, |idx| {
                let k = self.k_deriv(idx);
                I * (k[b] * s[c][idx] - k[c] * s[b][idx])
            });
            self.to_field(out)
        };
        VectorField::new([comp(0)?, comp(1)?, comp(2)?])
    }

    pub fn laplacian(&self, f: &ScalarField) -> Result<ScalarField> {
        let spec = self.forward_real(f.values());
        self.to_field(self.laplacian_spectrum(&spec))
    }

    pub fn vector_laplacian(&self, v: &VectorField) -> Result<VectorField> {
        VectorField::new([
            self.laplacian(v.component(0))?,
            self.laplacian(v.component(1))?,
            self.laplacian(v.component(2))?,
        ])
    }

    /// All nine first derivatives `d_j v_i`, returned as `[i][j]`.
    pub fn velocity_gradient(&self, v: &VectorField) -> Result<[[ScalarField; 3]; 3]> {
        let s = self.forward_vector(v);
        let row = |i: usize| -> Result<[ScalarField; 3]> {
            Ok([
                self.to_field(self.derivative(&s[i], 0))?,
                self.to_field(self.derivative(&s[i], 1))?,
                self.to_field(self.derivative(&s[i], 2))?,
            ])
        };
        Ok([row(0)?, row(1)?, row(2)?])
    }

    pub fn forward_vector(&self, v: &VectorField) -> [Spectrum; 3] {
        [
            self.forward_real(v.component(0).values()),
            self.forward_real(v.component(1).values()),
            self.forward_real(v.component(2).values()),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Operator {
    Grad,
    Div,
    Curl,
    Laplacian,
}

/// Spectral `grad`, `div`, `curl` or `laplacian` of a periodic field.
pub fn apply_operator(field: &AnyField, op: Operator) -> Result<AnyField> {
    let fft = Fft3::new(*field.grid());
    match (op, field) {
        (Operator::Grad, AnyField::Scalar(f)) => Ok(fft.grad(f)?.into()),
        (Operator::Div, AnyField::Vector(v)) => Ok(fft.div(v)?.into()),
        (Operator::Curl, AnyField::Vector(v)) => Ok(fft.curl(v)?.into()),
        (Operator::Laplacian, AnyField::Scalar(f)) => Ok(fft.laplacian(f)?.into()),
        (Operator::Laplacian, AnyField::Vector(v)) => Ok(fft.vector_laplacian(v)?.into()),
        (op, _) => Err(crate::error::Error::shape(format!(
            "operator {op:?} is not defined for this field kind"
        ))),
    }
}
