//! Cell-center quadrature over balls on the periodic grid.
//!
//! A cell contributes `h^3 * f(center)` iff its center lies strictly inside
//! the ball, measured with the periodic minimum image. Error is `O(h)` from
//! the cells cut by the sphere.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec;

use super::fields::{ScalarField, VectorField};
use super::geometry::Ball;
use super::grid::Grid;

/// Spatial integration region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Region {
    Ball(Ball),
    /// The whole periodic box (gridded data) or the field's support (analytic data).
    Everywhere,
}

pub fn check_ball_fits(grid: &Grid, ball: &Ball) -> Result<()> {
    if 2.0 * ball.radius >= grid.box_length() {
        return Err(Error::geometry(format!(
            "ball of radius {} does not fit in a periodic box of length {}",
            ball.radius,
            grid.box_length()
        )));
    }
    Ok(())
}

/// Flat indices of the cells whose centers lie in `ball`, in storage order.
pub fn ball_cells(grid: &Grid, ball: &Ball) -> Result<Vec<usize>> {
    check_ball_fits(grid, ball)?;
    let r2 = ball.radius * ball.radius;
    let axis = |a: usize| -> Vec<(usize, f64)> {
        (0..grid.n())
            .filter_map(|i| {
                let d = grid.min_image(grid.coord(i) - ball.center[a]);
                (d * d < r2).then_some((i, d * d))
            })
            .collect()
    };
    let (xs, ys, zs) = (axis(0), axis(1), axis(2));
    let mut cells = Vec::new();
    for &(k, dz) in &zs {
        for &(j, dy) in &ys {
            if dz + dy >= r2 {
                continue;
            }
            for &(i, dx) in &xs {
                if dz + dy + dx < r2 {
                    cells.push(grid.index(i, j, k));
                }
            }
        }
    }
    Ok(cells)
}

pub fn region_cells(grid: &Grid, region: &Region) -> Result<Vec<usize>> {
    match region {
        Region::Ball(b) => ball_cells(grid, b),
        Region::Everywhere => Ok((0..grid.len()).collect()),
    }
}

/// `h^3 * Σ f(idx)` over the given cells.
pub fn sum_cells(grid: &Grid, cells: &[usize], f: impl Fn(usize) -> f64 + Sync + Send) -> f64 {
    grid.cell_volume() * exec::sum(cells.len(), |c| f(cells[c]))
}

pub fn region_integral(
    grid: &Grid,
    region: &Region,
    f: impl Fn(usize) -> f64 + Sync + Send,
) -> Result<f64> {
    match region {
        Region::Everywhere => Ok(grid.cell_volume() * exec::sum(grid.len(), f)),
        Region::Ball(b) => Ok(sum_cells(grid, &ball_cells(grid, b)?, f)),
    }
}

/// Pointwise absolute value (scalar) or Euclidean length (vector).
pub trait PointMagnitude {
    fn grid(&self) -> &Grid;
    fn magnitude_at(&self, idx: usize) -> f64;
}

impl PointMagnitude for ScalarField {
    fn grid(&self) -> &Grid {
        ScalarField::grid(self)
    }

    fn magnitude_at(&self, idx: usize) -> f64 {
        self.values()[idx].abs()
    }
}

impl PointMagnitude for VectorField {
    fn grid(&self) -> &Grid {
        VectorField::grid(self)
    }

    fn magnitude_at(&self, idx: usize) -> f64 {
        self.magnitude(idx)
    }
}

/// `∫_B |f|^p dx`, without the final root.
pub fn ball_power_integral<F: PointMagnitude + Sync>(field: &F, ball: &Ball, p: f64) -> Result<f64> {
    check_exponent(p)?;
    let cells = ball_cells(field.grid(), ball)?;
    Ok(sum_cells(field.grid(), &cells, |i| field.magnitude_at(i).powf(p)))
}

/// `(∫_B |f|^p dx)^(1/p)`.
pub fn lp_norm_ball<F: PointMagnitude + Sync>(field: &F, ball: &Ball, p: f64) -> Result<f64> {
    Ok(ball_power_integral(field, ball, p)?.powf(1.0 / p))
}

fn check_exponent(p: f64) -> Result<()> {
    if !(p.is_finite() && p >= 1.0) {
        return Err(Error::domain(format!("Lebesgue exponent must be >= 1, got {p}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn zero_field_has_zero_norm() {
        let g = Grid::periodic_2pi(16).unwrap();
        let f = ScalarField::zeros(g);
        assert_eq!(lp_norm_ball(&f, &Ball::centered(1.0).unwrap(), 3.0).unwrap(), 0.0);
    }

    #[test]
    fn errors() {
        let g = Grid::periodic_2pi(16).unwrap();
        let f = ScalarField::zeros(g);
        let big = Ball::centered(3.2).unwrap();
        assert!(matches!(lp_norm_ball(&f, &big, 2.0), Err(Error::Geometry(_))));
        let b = Ball::centered(1.0).unwrap();
        assert!(matches!(lp_norm_ball(&f, &b, 0.5), Err(Error::Domain(_))));
    }

    #[test]
    fn ball_wraps_across_the_periodic_boundary() {
        let g = Grid::new(32, 4.0).unwrap();
        let inner = ball_cells(&g, &Ball::new([0.0; 3], 0.7).unwrap()).unwrap();
        let edge = ball_cells(&g, &Ball::new([2.0, 2.0, 2.0], 0.7).unwrap()).unwrap();
        assert_eq!(inner.len(), edge.len());
    }

    #[test]
    fn unit_ball_volume_converges() {
        let exact = 4.0 * PI / 3.0;
        let errs: Vec<f64> = [32usize, 64, 128]
            .iter()
            .map(|&n| {
                let g = Grid::periodic_2pi(n).unwrap();
                let one = ScalarField::constant(g, 1.0).unwrap();
                let b = Ball::centered(1.0).unwrap();
                (ball_power_integral(&one, &b, 1.0).unwrap() - exact).abs() / exact
            })
            .collect();
        assert!(errs[2] < 0.02, "{errs:?}");
    }
}
