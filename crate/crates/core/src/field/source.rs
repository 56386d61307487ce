use serde::{Deserialize, Serialize};

use crate::error::Result;

use super::quadrature::Region;

/// Pointwise densities integrated by the diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Integrand {
    /// `|v|^p`
    VelocityPow(f64),
    /// `|p|^q`
    PressurePow(f64),
    /// `|v|^3 + |p|^{3/2}`
    Ckn,
    One,
}

impl Integrand {
    pub const VELOCITY_CUBED: Integrand = Integrand::VelocityPow(3.0);
    pub const PRESSURE_THREE_HALVES: Integrand = Integrand::PressurePow(1.5);

    #[inline]
    pub fn eval(&self, v: [f64; 3], p: f64) -> f64 {
        let speed2 = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
        match *self {
            Integrand::VelocityPow(3.0) => speed2 * speed2.sqrt(),
            Integrand::VelocityPow(e) => speed2.powf(0.5 * e),
            Integrand::PressurePow(1.5) => p.abs() * p.abs().sqrt(),
            Integrand::PressurePow(e) => p.abs().powf(e),
            Integrand::Ckn => speed2 * speed2.sqrt() + p.abs() * p.abs().sqrt(),
            Integrand::One => 1.0,
        }
    }

    pub fn uses_pressure(&self) -> bool {
        matches!(self, Integrand::PressurePow(_) | Integrand::Ckn)
    }
}

/// Anything the diagnostics can integrate over space-time regions: gridded
/// slabs (trapezoid in time, cell-center quadrature in space) or closed-form
/// fields sampled exactly.
pub trait SpaceTimeSource: Sync {
    fn time_span(&self) -> (f64, f64);

    /// Spatial resolution, if the data is gridded.
    fn spacing(&self) -> Option<f64>;

    /// Largest snapshot interval, if the data is sampled in time.
    fn max_time_step(&self) -> Option<f64>;

    fn check_region(&self, region: &Region) -> Result<()>;

    /// `∫_region integrand(v, p)(x, t) dx` at one time.
    fn slice_integral(&self, region: &Region, t: f64, integrand: Integrand) -> Result<f64>;

    /// `∫_{window} ∫_region integrand dx dt`.
    fn window_integral(&self, region: &Region, window: (f64, f64), integrand: Integrand) -> Result<f64>;
}
