use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform periodic lattice on the box `[-L/2, L/2)^3`.
///
/// Node `(i, j, k)` sits at `-L/2 + (i, j, k) * h` with `h = L / n`; nodes are
/// also the cell centers used by all ball quadratures. Flat storage is
/// x-fastest: `idx = i + n * (j + n * k)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    n: usize,
    box_length: f64,
}

impl Grid {
    pub fn new(n: usize, box_length: f64) -> Result<Self> {
        if n < 4 || !n.is_multiple_of(2) {
            return Err(Error::domain(format!(
                "grid needs an even number of points >= 4 per axis, got {n}"
            )));
        }
        if !(box_length.is_finite() && box_length > 0.0) {
            return Err(Error::domain(format!(
                "box length must be positive and finite, got {box_length}"
            )));
        }
        Ok(Grid { n, box_length })
    }

    /// The default `2π`-periodic box.
    pub fn periodic_2pi(n: usize) -> Result<Self> {
        Grid::new(n, std::f64::consts::TAU)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn box_length(&self) -> f64 {
        self.box_length
    }

    pub fn spacing(&self) -> f64 {
        self.box_length / self.n as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(3)
    }

    pub fn volume(&self) -> f64 {
        self.box_length.powi(3)
    }

    /// Number of nodes, `n^3`.
    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn coord(&self, i: usize) -> f64 {
        -0.5 * self.box_length + i as f64 * self.spacing()
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.n * (j + self.n * k)
    }

    #[inline]
    pub fn unravel(&self, idx: usize) -> (usize, usize, usize) {
        let n = self.n;
        (idx % n, (idx / n) % n, idx / (n * n))
    }

    pub fn position(&self, idx: usize) -> [f64; 3] {
        let (i, j, k) = self.unravel(idx);
        [self.coord(i), self.coord(j), self.coord(k)]
    }

    /// Angular wavenumber of FFT bin `m`; the Nyquist bin maps to `-n/2`.
    pub fn wavenumber(&self, m: usize) -> f64 {
        let n = self.n as isize;
        let m = m as isize;
        let signed = if m < n / 2 { m } else { m - n };
        std::f64::consts::TAU / self.box_length * signed as f64
    }

    /// Wavenumber used for odd (first) derivatives: Nyquist bin zeroed so that
    /// derivatives of real fields stay real.
    pub fn derivative_wavenumber(&self, m: usize) -> f64 {
        if m == self.n / 2 {
            0.0
        } else {
            self.wavenumber(m)
        }
    }

    /// Periodic minimum-image displacement `x - c` along one axis.
    #[inline]
    pub fn min_image(&self, d: f64) -> f64 {
        let l = self.box_length;
        d - l * (d / l).round()
    }

    /// Wraps a coordinate into `[-L/2, L/2)`.
    pub fn wrap(&self, x: f64) -> f64 {
        let l = self.box_length;
        let half = 0.5 * l;
        let y = (x + half).rem_euclid(l) - half;
        if y >= half {
            -half
        } else {
            y
        }
    }
}
