use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec;
use crate::field::quadrature::{ball_cells, sum_cells};
use crate::field::slab::{interpolate, trapezoid_window};
use crate::field::{Ball, Fft3, Grid, Snapshot, SpaceTimeSlab};

/// Exponent of the spatial bump `(1 - |y|²)^m`; `m = 8` makes it `C⁷`.
pub const BUMP_POWER: i32 = 8;

/// `φ(x,t) = A (1 - |x - x0|²/ρ²)_+^m σ((t - t0)/τ)` with the septic ramp
/// `σ(s) = s⁴(35 - 84s + 70s² - 20s³)` on `[0, 1]`, `0` before and `1` after.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestFunction {
    pub id: String,
    pub center: [f64; 3],
    pub radius: f64,
    pub t0: f64,
    pub tau: f64,
    #[serde(default = "one")]
    pub amplitude: f64,
}

fn one() -> f64 {
    1.0
}

/// Values needed at one point: `φ`, `∂_tφ`, `∇φ`, `Δφ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhiJet {
    pub phi: f64,
    pub dt: f64,
    pub grad: [f64; 3],
    pub lap: f64,
}

fn ramp(s: f64) -> (f64, f64) {
    if s <= 0.0 {
        (0.0, 0.0)
    } else if s >= 1.0 {
        (1.0, 0.0)
    } else {
        let s4 = s * s * s * s;
        let v = s4 * (35.0 - 84.0 * s + 70.0 * s * s - 20.0 * s * s * s);
        let d = 140.0 * s * s * s * (1.0 - s).powi(3);
        (v, d)
    }
}

impl TestFunction {
    pub fn new(id: impl Into<String>, center: [f64; 3], radius: f64, t0: f64, tau: f64) -> Self {
        TestFunction {
            id: id.into(),
            center,
            radius,
            t0,
            tau,
            amplitude: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.radius > 0.0 && self.tau > 0.0) {
            return Err(Error::domain(format!(
                "test function `{}` needs positive radius and ramp time",
                self.id
            )));
        }
        if !(self.amplitude >= 0.0 && self.amplitude.is_finite()) {
            return Err(Error::domain(format!(
                "test function `{}` would be negative (amplitude {})",
                self.id, self.amplitude
            )));
        }
        Ok(())
    }

    pub fn support(&self) -> Result<Ball> {
        Ball::new(self.center, self.radius)
    }

    /// Jet at offset `d = x - x0` (already minimum-imaged) and time `t`.
    pub fn jet(&self, d: [f64; 3], t: f64) -> PhiJet {
        let rho2 = self.radius * self.radius;
        let r2 = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]) / rho2;
        if r2 >= 1.0 {
            return PhiJet { phi: 0.0, dt: 0.0, grad: [0.0; 3], lap: 0.0 };
        }
        let m = BUMP_POWER as f64;
        let w = 1.0 - r2;
        let b = w.powi(BUMP_POWER);
        let b1 = w.powi(BUMP_POWER - 1);
        let b2 = w.powi(BUMP_POWER - 2);
        let (s, ds) = ramp((t - self.t0) / self.tau);
        let a = self.amplitude;
        let gscale = -2.0 * m * b1 / rho2;
        PhiJet {
            phi: a * b * s,
            dt: a * b * ds / self.tau,
            grad: [a * s * gscale * d[0], a * s * gscale * d[1], a * s * gscale * d[2]],
            lap: a * s * (4.0 * m * (m - 1.0) * r2 * b2 - 6.0 * m * b1) / rho2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyResidual {
    pub test_function_id: String,
    pub t: f64,
    /// `∫φ|v|²(t) + 2∫∫φ|∇v|²`.
    pub lhs: f64,
    /// `∫∫ |v|²(Δφ + ∂_tφ) + v·∇φ(|v|² + 2p)`.
    pub rhs: f64,
    pub residual: f64,
}

struct SliceTerms {
    energy: f64,
    dissipation: f64,
    flux: f64,
}

fn slice_terms(fft: &Fft3, snap: &Snapshot, phi: &TestFunction, cells: &[usize]) -> Result<SliceTerms> {
    let grid: &Grid = snap.grid();
    let t = snap.time();
    if (t - phi.t0) / phi.tau <= 0.0 {
        return Ok(SliceTerms { energy: 0.0, dissipation: 0.0, flux: 0.0 });
    }
    let v = snap.velocity();
    let p = snap.pressure().values();
    let grad = fft.velocity_gradient(v)?;
    let jet_at = |idx: usize| {
        let x = grid.position(idx);
        let d = [
            grid.min_image(x[0] - phi.center[0]),
            grid.min_image(x[1] - phi.center[1]),
            grid.min_image(x[2] - phi.center[2]),
        ];
        phi.jet(d, t)
    };
    let energy = sum_cells(grid, cells, |idx| {
        let u = v.at(idx);
        jet_at(idx).phi * (u[0] * u[0] + u[1] * u[1] + u[2] * u[2])
    });
    let dissipation = sum_cells(grid, cells, |idx| {
        let mut g2 = 0.0;
        for row in &grad {
            for d in row {
                g2 += d.values()[idx] * d.values()[idx];
            }
        }
        jet_at(idx).phi * g2
    });
    let flux = sum_cells(grid, cells, |idx| {
        let u = v.at(idx);
        let j = jet_at(idx);
        let u2 = u[0] * u[0] + u[1] * u[1] + u[2] * u[2];
        let ug = u[0] * j.grad[0] + u[1] * j.grad[1] + u[2] * j.grad[2];
        u2 * (j.lap + j.dt) + ug * (u2 + 2.0 * p[idx])
    });
    Ok(SliceTerms { energy, dissipation, flux })
}

/// Both sides of the local energy balance up to time `t`, starting where `φ`
/// vanishes identically (the slab start must not precede the ramp).
pub fn energy_residual(slab: &SpaceTimeSlab, phi: &TestFunction, t: f64) -> Result<EnergyResidual> {
    phi.validate()?;
    let grid = *slab.grid();
    let support = phi.support()?;
    let cells = ball_cells(&grid, &support)?;
    if phi.t0 < slab.t_start() - 1e-12 {
        return Err(Error::domain(format!(
            "test function `{}` ramps up at t0 = {} before the data starts at {}",
            phi.id,
            phi.t0,
            slab.t_start()
        )));
    }
    if !(t > slab.t_start() && t <= slab.t_end() + 1e-12) {
        return Err(Error::window(format!(
            "t = {t} is outside ]{}, {}]",
            slab.t_start(),
            slab.t_end()
        )));
    }
    let snaps = slab.snapshots();
    let last = snaps.iter().position(|s| s.time() >= t - 1e-12).unwrap_or(snaps.len() - 1);
    let fft = Fft3::new(grid);
    let used = &snaps[..=last];
    let terms = exec::map_collect(used.len(), |i| slice_terms(&fft, &used[i], phi, &cells))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let times: Vec<f64> = used.iter().map(|s| s.time()).collect();
    let energy: Vec<f64> = terms.iter().map(|s| s.energy).collect();
    let diss: Vec<f64> = terms.iter().map(|s| s.dissipation).collect();
    let flux: Vec<f64> = terms.iter().map(|s| s.flux).collect();
    let t0 = slab.t_start();
    let lhs = interpolate(&times, &energy, t)? + 2.0 * trapezoid_window(&times, &diss, t0, t)?;
    let rhs = trapezoid_window(&times, &flux, t0, t)?;
    Ok(EnergyResidual {
        test_function_id: phi.id.clone(),
        t,
        lhs,
        rhs,
        residual: rhs - lhs,
    })
}
