use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec;
use crate::field::quadrature::ball_cells;
use crate::field::{Ball, Fft3, Grid, ScalarField, VectorField};

/// How derivatives are taken.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Stencil {
    /// Spectral, on the whole periodic box.
    Spectral,
    /// Second-order central differences on the nodes of a ball whose stencil
    /// never wraps around the box. Exact for quadratic polynomials, which
    /// covers gradients of harmonic cubics.
    Central { ball: Ball },
}

#[derive(Debug, Clone, PartialEq)]
pub struct VorticityCheck {
    /// `curl u` (zero off the ball in central mode).
    pub omega: VectorField,
    pub max_omega: f64,
    /// Max-norm of `Δu` over the evaluated nodes.
    pub max_lap: f64,
}

fn check_no_wrap(grid: &Grid, ball: &Ball) -> Result<()> {
    let half = 0.5 * grid.box_length();
    let reach = ball.radius + grid.spacing();
    for a in 0..3 {
        if ball.center[a] - reach < -half || ball.center[a] + reach > half - grid.spacing() {
            return Err(Error::geometry(format!(
                "central stencil on a ball of radius {} at {:?} would wrap around the box",
                ball.radius, ball.center
            )));
        }
    }
    Ok(())
}

/// Vorticity and the max-norm of the vector Laplacian.
pub fn vorticity_harmonic_check(u: &VectorField, stencil: &Stencil) -> Result<VorticityCheck> {
    match stencil {
        Stencil::Spectral => {
            let fft = Fft3::new(*u.grid());
            let omega = fft.curl(u)?;
            let lap = fft.vector_laplacian(u)?;
            Ok(VorticityCheck {
                max_omega: omega.max_abs(),
                max_lap: lap.max_abs(),
                omega,
            })
        }
        Stencil::Central { ball } => {
            let g = *u.grid();
            check_no_wrap(&g, ball)?;
            let cells = ball_cells(&g, ball)?;
            let h = g.spacing();
            let n = g.n();
            let shift = |idx: usize, axis: usize, s: i64| {
                let (i, j, k) = g.unravel(idx);
                let mut c = [i as i64, j as i64, k as i64];
                c[axis] = (c[axis] + s).rem_euclid(n as i64);
                g.index(c[0] as usize, c[1] as usize, c[2] as usize)
            };
            let d = |f: &ScalarField, idx: usize, axis: usize| {
                (f.values()[shift(idx, axis, 1)] - f.values()[shift(idx, axis, -1)]) / (2.0 * h)
            };
            let curl_at = |idx: usize| -> [f64; 3] {
                let c = u.components();
                [
                    d(&c[2], idx, 1) - d(&c[1], idx, 2),
                    d(&c[0], idx, 2) - d(&c[2], idx, 0),
                    d(&c[1], idx, 0) - d(&c[0], idx, 1),
                ]
            };
            let lap_at = |f: &ScalarField, idx: usize| -> f64 {
                let v = f.values();
                let mut s = -6.0 * v[idx];
                for axis in 0..3 {
                    s += v[shift(idx, axis, 1)] + v[shift(idx, axis, -1)];
                }
                s / (h * h)
            };
            let mut om = [vec![0.0; g.len()], vec![0.0; g.len()], vec![0.0; g.len()]];
            let values = exec::map_collect(cells.len(), |c| curl_at(cells[c]));
            for (c, w) in cells.iter().zip(values) {
                for a in 0..3 {
                    om[a][*c] = w[a];
                }
            }
            let max_lap = exec::max(cells.len(), |c| {
                (0..3)
                    .map(|a| lap_at(u.component(a), cells[c]).abs())
                    .fold(0.0, f64::max)
            });
            let [a, b, c] = om;
            let omega = VectorField::new([ScalarField::new(g, a)?, ScalarField::new(g, b)?, ScalarField::new(g, c)?])?;
            Ok(VorticityCheck {
                max_omega: omega.max_abs(),
                max_lap,
                omega,
            })
        }
    }
}
