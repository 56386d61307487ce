//! Scale-invariant quantities evaluated on space-time data.

mod ckn;
mod criterion;
mod energy;
mod slices;
mod vorticity;

pub use ckn::{ckn_scan, decay_scan, CknScanResult, DecayScan};
pub use criterion::{criterion_profile, g_profile, CriterionProfile, TimeSeries, WindowFamily, WindowValue};
pub use energy::{energy_residual, EnergyResidual, TestFunction};
pub use slices::{good_slices, GoodSlices};
pub use vorticity::{vorticity_harmonic_check, Stencil, VorticityCheck};

/// Least-squares slope of `y` against `x`.
pub fn fit_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Slope of `log y` against `log x`; `None` unless every value is positive.
pub fn fit_log_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.iter().chain(y).any(|&v| !(v > 0.0)) {
        return None;
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    fit_slope(&lx, &ly)
}
