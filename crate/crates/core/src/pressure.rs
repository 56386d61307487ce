//! Splitting the pressure into a velocity-driven part and a harmonic remainder.
//!
//! Periodic mode solves `Δp¹ = -∂_i∂_j(v_i v_j)` spectrally. Ball mode solves the
//! 7-point Dirichlet problem `Δ_h p¹ = Δ_h q` on the cells of the ball, where
//! `q` is the periodic spectral solution; `p¹` vanishes on every cell outside.
//! Using the discrete Laplacian of `q` as the data keeps `Δ_h p² = Δ_h (p - q)`,
//! which is zero whenever `p` is the flow's own pressure up to a harmonic term.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec;
use crate::field::quadrature::{ball_cells, ball_power_integral, check_ball_fits, sum_cells};
use crate::field::sample::{sample_scalar, SampleMode};
use crate::field::{Ball, Fft3, Grid, ScalarField, Snapshot, VectorField};

pub const DEFAULT_CG_TOL: f64 = 1e-10;
/// Cells within this many spacings of the sphere are excluded from the
/// ball-mode harmonic residual.
pub const BOUNDARY_LAYER: f64 = 2.0;
pub const EPS_DEN: f64 = 1e-30;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum SplitDomain {
    Periodic,
    Ball { ball: Ball },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitConfig {
    pub cg_tol: f64,
    /// Defaults to `10 n`.
    pub max_iterations: Option<usize>,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            cg_tol: DEFAULT_CG_TOL,
            max_iterations: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PressureSplit {
    pub p1: ScalarField,
    pub p2: ScalarField,
    pub domain: SplitDomain,
    /// `∫|p¹|^{3/2} / ∫|v|³` over the domain (0 when the velocity vanishes).
    pub cz_ratio: f64,
    /// Max-norm of the discrete `Δp²` (globally, or away from the boundary layer).
    pub harmonic_residual: f64,
    /// Max-norm of `p²` over the same set of points.
    pub p2_max: f64,
    pub cg_iterations: usize,
    pub cg_relative_residual: f64,
}

/// Serializable summary without the fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSummary {
    pub time: f64,
    pub domain: SplitDomain,
    pub cz_ratio: f64,
    pub harmonic_residual: f64,
    pub p2_max: f64,
    pub p1_max: f64,
    pub cg_iterations: usize,
    pub cg_relative_residual: f64,
}

impl PressureSplit {
    pub fn summary(&self, time: f64) -> SplitSummary {
        SplitSummary {
            time,
            domain: self.domain,
            cz_ratio: self.cz_ratio,
            harmonic_residual: self.harmonic_residual,
            p2_max: self.p2_max,
            p1_max: self.p1.max_abs(),
            cg_iterations: self.cg_iterations,
            cg_relative_residual: self.cg_relative_residual,
        }
    }
}

/// Spectrum of `-∂_i∂_j(v_i v_j)`.
fn source_spectrum(fft: &Fft3, v: &VectorField) -> Vec<Complex64> {
    let n = v.grid().len();
    let mut acc = vec![Complex64::default(); n];
    for i in 0..3 {
        for j in i..3 {
            let prod: Vec<f64> = v
                .component(i)
                .values()
                .iter()
                .zip(v.component(j).values())
                .map(|(a, b)| a * b)
                .collect();
            let f = fft.forward_real(&prod);
            let w = if i == j { 1.0 } else { 2.0 };
            let mut next = vec![Complex64::default(); n];
            exec::fill(&mut next, |idx| {
                let k = fft.k_deriv(idx);
                acc[idx] + w * k[i] * k[j] * f[idx]
            });
            acc = next;
        }
    }
    acc
}

/// Zero-mean periodic solution of `Δq = -∂_i∂_j(v_i v_j)`.
pub fn periodic_poisson_pressure(v: &VectorField) -> Result<ScalarField> {
    let fft = Fft3::new(*v.grid());
    let src = source_spectrum(&fft, v);
    fft.to_field(fft.solve_poisson(&src))
}

/// 7-point Laplacian at one node (periodic neighbours).
fn lap7(grid: &Grid, u: &[f64], idx: usize) -> f64 {
    let n = grid.n();
    let (i, j, k) = grid.unravel(idx);
    let (ip, im) = ((i + 1) % n, (i + n - 1) % n);
    let (jp, jm) = ((j + 1) % n, (j + n - 1) % n);
    let (kp, km) = ((k + 1) % n, (k + n - 1) % n);
    let s = u[grid.index(ip, j, k)]
        + u[grid.index(im, j, k)]
        + u[grid.index(i, jp, k)]
        + u[grid.index(i, jm, k)]
        + u[grid.index(i, j, kp)]
        + u[grid.index(i, j, km)]
        - 6.0 * u[idx];
    s / (grid.spacing() * grid.spacing())
}

/// Discrete 7-point Laplacian of a periodic field.
pub fn laplacian_7pt(f: &ScalarField) -> Result<ScalarField> {
    let g = *f.grid();
    let mut out = vec![0.0; g.len()];
    exec::fill(&mut out, |idx| lap7(&g, f.values(), idx));
    ScalarField::new(g, out)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    exec::sum(a.len(), |i| a[i] * b[i])
}

struct CgOutcome {
    iterations: usize,
    relative_residual: f64,
}

/// Solves `-Δ_h x = b` on `cells`, with `x = 0` on every other node.
fn dirichlet_cg(grid: &Grid, cells: &[usize], b: &[f64], tol: f64, cap: usize) -> Result<(Vec<f64>, CgOutcome)> {
    let m = cells.len();
    let mut full = vec![0.0; grid.len()];
    let apply = |x: &[f64], full: &mut Vec<f64>| -> Vec<f64> {
        for (c, &idx) in cells.iter().enumerate() {
            full[idx] = x[c];
        }
        exec::map_collect(m, |c| -lap7(grid, full, cells[c]))
    };
    let b_norm = dot(b, b).sqrt();
    let mut x = vec![0.0; m];
    if b_norm == 0.0 {
        return Ok((x, CgOutcome { iterations: 0, relative_residual: 0.0 }));
    }
    let mut r = b.to_vec();
    let mut p = r.clone();
    let mut rr = dot(&r, &r);
    for it in 1..=cap {
        let ap = apply(&p, &mut full);
        let alpha = rr / dot(&p, &ap);
        x.iter_mut().zip(&p).for_each(|(xi, pi)| *xi += alpha * pi);
        r.iter_mut().zip(&ap).for_each(|(ri, ai)| *ri -= alpha * ai);
        let rr_new = dot(&r, &r);
        let rel = rr_new.sqrt() / b_norm;
        if !rel.is_finite() {
            return Err(Error::Solver(format!("CG breakdown at iteration {it}")));
        }
        if rel <= tol {
            return Ok((x, CgOutcome { iterations: it, relative_residual: rel }));
        }
        let beta = rr_new / rr;
        p.iter_mut().zip(&r).for_each(|(pi, ri)| *pi = ri + beta * *pi);
        rr = rr_new;
    }
    Err(Error::Solver(format!(
        "CG did not reach relative residual {tol:e} within {cap} iterations"
    )))
}

fn cz_ratio(p1: &ScalarField, v: &VectorField, ball: Option<&Ball>) -> Result<f64> {
    let (num, den) = match ball {
        Some(b) => (ball_power_integral(p1, b, 1.5)?, ball_power_integral(v, b, 3.0)?),
        None => {
            let g = p1.grid();
            let all: Vec<usize> = (0..g.len()).collect();
            (
                sum_cells(g, &all, |i| p1.values()[i].abs().powf(1.5)),
                sum_cells(g, &all, |i| v.magnitude(i).powi(3)),
            )
        }
    };
    Ok(if den > 0.0 { num / den } else { 0.0 })
}

pub fn split_pressure(snapshot: &Snapshot, domain: SplitDomain) -> Result<PressureSplit> {
    split_pressure_with(snapshot, domain, &SplitConfig::default())
}

pub fn split_pressure_with(snapshot: &Snapshot, domain: SplitDomain, config: &SplitConfig) -> Result<PressureSplit> {
    let grid = *snapshot.grid();
    let v = snapshot.velocity();
    let p = snapshot.pressure();
    let fft = Fft3::new(grid);
    let q = fft.to_field(fft.solve_poisson(&source_spectrum(&fft, v)))?;
    match domain {
        SplitDomain::Periodic => {
            let p2 = p.sub(&q)?;
            let lap = fft.laplacian(&p2)?;
            Ok(PressureSplit {
                cz_ratio: cz_ratio(&q, v, None)?,
                harmonic_residual: lap.max_abs(),
                p2_max: p2.max_abs(),
                p1: q,
                p2,
                domain,
                cg_iterations: 0,
                cg_relative_residual: 0.0,
            })
        }
        SplitDomain::Ball { ball } => {
            check_ball_fits(&grid, &ball)?;
            let h = grid.spacing();
            if ball.radius < 4.0 * h {
                return Err(Error::resolution(format!(
                    "ball radius {} is below 4h = {}",
                    ball.radius,
                    4.0 * h
                )));
            }
            if 2.0 * ball.radius + 2.0 * h >= grid.box_length() {
                return Err(Error::geometry(format!(
                    "ball of radius {} leaves no exterior layer in a box of length {}",
                    ball.radius,
                    grid.box_length()
                )));
            }
            let cells = ball_cells(&grid, &ball)?;
            let b: Vec<f64> = exec::map_collect(cells.len(), |c| -lap7(&grid, q.values(), cells[c]));
            let cap = config.max_iterations.unwrap_or(10 * grid.n());
            let (x, outcome) = dirichlet_cg(&grid, &cells, &b, config.cg_tol, cap)?;
            let mut p1v = vec![0.0; grid.len()];
            for (c, &idx) in cells.iter().enumerate() {
                p1v[idx] = x[c];
            }
            let p1 = ScalarField::new(grid, p1v)?;
            let p2 = p.sub(&p1)?;
            let inner = Ball::new(ball.center, ball.radius - BOUNDARY_LAYER * h)?;
            let interior = ball_cells(&grid, &inner)?;
            let harmonic_residual = exec::max(interior.len(), |c| lap7(&grid, p2.values(), interior[c]).abs());
            let p2_max = exec::max(interior.len(), |c| p2.values()[interior[c]].abs());
            Ok(PressureSplit {
                cz_ratio: cz_ratio(&p1, v, Some(&ball))?,
                harmonic_residual,
                p2_max,
                p1,
                p2,
                domain,
                cg_iterations: outcome.iterations,
                cg_relative_residual: outcome.relative_residual,
            })
        }
    }
}

/// Quasi-uniform directions on the unit sphere.
fn fibonacci_sphere(count: usize) -> Vec<[f64; 3]> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..count)
        .map(|i| {
            let z = 1.0 - 2.0 * (i as f64 + 0.5) / count as f64;
            let rho = (1.0 - z * z).sqrt();
            let phi = golden * i as f64;
            [rho * phi.cos(), rho * phi.sin(), z]
        })
        .collect()
}

pub const SPHERE_SAMPLES: usize = 4096;

/// `sup_inner |p²|^{3/2} / ∫_outer |p²|^{3/2}`.
///
/// The supremum is taken over the grid nodes inside `inner` and over points
/// on its sphere (trilinear); for harmonic `p²` the maximum sits on the sphere.
pub fn harmonic_interior_ratio(p2: &ScalarField, outer: &Ball, inner: &Ball) -> Result<f64> {
    let grid = p2.grid();
    check_ball_fits(grid, outer)?;
    let d: f64 = (0..3)
        .map(|a| (outer.center[a] - inner.center[a]).powi(2))
        .sum::<f64>()
        .sqrt();
    if d + inner.radius >= outer.radius {
        return Err(Error::geometry(format!(
            "inner ball (radius {}) is not strictly inside the outer ball (radius {})",
            inner.radius, outer.radius
        )));
    }
    let den = ball_power_integral(p2, outer, 1.5)?;
    if !(den > EPS_DEN) {
        return Err(Error::Degenerate(format!(
            "∫|p2|^(3/2) over the outer ball is {den:e}"
        )));
    }
    let nodes = ball_cells(grid, inner)?;
    let node_max = exec::max(nodes.len(), |c| p2.values()[nodes[c]].abs());
    let dirs = fibonacci_sphere(SPHERE_SAMPLES);
    let sphere_max = exec::max(dirs.len(), |i| {
        let x = [
            inner.center[0] + inner.radius * dirs[i][0],
            inner.center[1] + inner.radius * dirs[i][1],
            inner.center[2] + inner.radius * dirs[i][2],
        ];
        sample_scalar(p2, x, SampleMode::Trilinear).abs()
    });
    Ok(node_max.max(sphere_max).powf(1.5) / den)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::analytic::{sample_snapshot, TaylorGreen};

    fn tg(n: usize) -> Snapshot {
        sample_snapshot(&TaylorGreen { wavenumber: 1.0, amplitude: 1.0 }, Grid::periodic_2pi(n).unwrap(), 0.0).unwrap()
    }

    #[test]
    fn zero_velocity_gives_zero_p1() {
        let g = Grid::periodic_2pi(32).unwrap();
        let p = ScalarField::from_fn(g, |x| x[0].cos()).unwrap();
        let s = Snapshot::new(0.0, VectorField::zeros(g), p.clone()).unwrap();
        for dom in [SplitDomain::Periodic, SplitDomain::Ball { ball: Ball::centered(1.5).unwrap() }] {
            let sp = split_pressure(&s, dom).unwrap();
            assert_eq!(sp.p1.max_abs(), 0.0);
            assert_eq!(sp.p2, p);
            assert_eq!(sp.cz_ratio, 0.0);
        }
    }

    #[test]
    fn taylor_green_pressure_is_recovered() {
        let s = tg(32);
        let sp = split_pressure(&s, SplitDomain::Periodic).unwrap();
        let rel = sp.p1.max_diff(s.pressure()).unwrap() / s.pressure().max_abs();
        assert!(rel < 1e-12, "{rel}");
        assert!(sp.p2.max_abs() < 1e-12);
    }

    #[test]
    fn shear_has_no_source() {
        let g = Grid::periodic_2pi(16).unwrap();
        let v = VectorField::from_fn(g, |x| [x[1].sin(), 0.0, 0.0]).unwrap();
        let p = ScalarField::from_fn(g, |x| 0.3 + x[2].sin()).unwrap();
        let s = Snapshot::new(0.0, v, p.clone()).unwrap();
        let sp = split_pressure(&s, SplitDomain::Periodic).unwrap();
        assert!(sp.p1.max_abs() < 1e-14);
        assert!(sp.p2.max_diff(&p).unwrap() < 1e-14);
    }

    #[test]
    fn ball_mode_is_harmonic_inside() {
        let s = tg(32);
        let shifted = s.with_pressure(s.pressure().map(|x| x + 1.0).unwrap()).unwrap();
        let sp = split_pressure(&shifted, SplitDomain::Ball { ball: Ball::centered(2.0).unwrap() }).unwrap();
        assert!(sp.harmonic_residual <= 1e-3 * sp.p2_max, "{} {}", sp.harmonic_residual, sp.p2_max);
        let recon = sp.p1.add(&sp.p2).unwrap();
        assert!(recon.max_diff(shifted.pressure()).unwrap() < 1e-12);
    }

    #[test]
    fn constant_ratio() {
        let g = Grid::new(64, 2.5).unwrap();
        let one = ScalarField::constant(g, 1.0).unwrap();
        let r = harmonic_interior_ratio(&one, &Ball::centered(1.0).unwrap(), &Ball::centered(2.0 / 3.0).unwrap()).unwrap();
        assert!((r - 0.238_732_414_637_843).abs() < 0.01 * 0.2387, "{r}");
    }

    #[test]
    fn inner_ball_must_be_inside() {
        let g = Grid::periodic_2pi(16).unwrap();
        let one = ScalarField::constant(g, 1.0).unwrap();
        let r = harmonic_interior_ratio(&one, &Ball::centered(1.0).unwrap(), &Ball::centered(1.0).unwrap());
        assert!(matches!(r, Err(Error::Geometry(_))));
        let zero = ScalarField::zeros(g);
        let r = harmonic_interior_ratio(&zero, &Ball::centered(1.0).unwrap(), &Ball::centered(0.5).unwrap());
        assert!(matches!(r, Err(Error::Degenerate(_))));
    }
}
