use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Ball, Integrand, Region, SpaceTimeSource};

use super::fit_log_slope;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CknScanResult {
    pub center: [f64; 3],
    pub t_top: f64,
    pub radii: Vec<f64>,
    /// `C(R) = R^{-2} ∫_{Q(z0,R)} (|v|³ + |p|^{3/2}) dz`.
    pub values: Vec<f64>,
    pub fitted_slope: Option<f64>,
    pub epsilon_threshold: f64,
    /// `min_R C(R) >= epsilon_threshold`.
    pub flagged: bool,
}

fn check_cylinder<S: SpaceTimeSource + ?Sized>(source: &S, ball: &Ball, t_top: f64) -> Result<()> {
    source.check_region(&Region::Ball(*ball))?;
    let (start, end) = source.time_span();
    let r2 = ball.radius * ball.radius;
    if t_top - r2 < start - 1e-12 || t_top > end + 1e-12 {
        return Err(Error::geometry(format!(
            "cylinder ]{}, {t_top}[ is outside the data span [{start}, {end}]",
            t_top - r2
        )));
    }
    Ok(())
}

/// CKN quantity at each radius, radii strictly decreasing.
pub fn ckn_scan<S: SpaceTimeSource + ?Sized>(
    source: &S,
    center: [f64; 3],
    t_top: f64,
    radii: &[f64],
    epsilon_threshold: f64,
) -> Result<CknScanResult> {
    if radii.is_empty() || radii.windows(2).any(|w| !(w[1] < w[0])) || !(radii[radii.len() - 1] > 0.0) {
        return Err(Error::domain("radii must be positive and strictly decreasing"));
    }
    if !epsilon_threshold.is_finite() {
        return Err(Error::domain("epsilon threshold must be finite"));
    }
    let r_min = radii[radii.len() - 1];
    if let Some(h) = source.spacing() {
        if r_min < 4.0 * h * (1.0 - 1e-12) {
            return Err(Error::resolution(format!("smallest radius {r_min} is below 4h = {}", 4.0 * h)));
        }
    }
    if let Some(dt) = source.max_time_step() {
        if r_min * r_min < 2.0 * dt * (1.0 - 1e-9) {
            return Err(Error::resolution(format!(
                "smallest cylinder height {} spans fewer than two snapshot intervals of {dt}",
                r_min * r_min
            )));
        }
    }
    let values = radii
        .iter()
        .map(|&r| {
            let ball = Ball::new(center, r)?;
            check_cylinder(source, &ball, t_top)?;
            let q = source.window_integral(&Region::Ball(ball), (t_top - r * r, t_top), Integrand::Ckn)?;
            Ok(q / (r * r))
        })
        .collect::<Result<Vec<_>>>()?;
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(CknScanResult {
        center,
        t_top,
        radii: radii.to_vec(),
        fitted_slope: fit_log_slope(radii, &values),
        values,
        epsilon_threshold,
        flagged: min >= epsilon_threshold,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayScan {
    pub centers: Vec<[f64; 3]>,
    pub t_top: f64,
    pub radius: f64,
    /// `∫_{Q(z0,r)} (|u|³ + |q|^{3/2}) dz` per center.
    pub values: Vec<f64>,
    /// Strictly decreasing along the list of centers.
    pub decreasing: bool,
}

/// The CKN integrand over unit-type cylinders at centers of growing `|x0|`.
pub fn decay_scan<S: SpaceTimeSource + ?Sized>(
    source: &S,
    centers: &[[f64; 3]],
    t_top: f64,
    radius: f64,
) -> Result<DecayScan> {
    let values = centers
        .iter()
        .map(|&c| {
            let ball = Ball::new(c, radius)?;
            check_cylinder(source, &ball, t_top)?;
            source.window_integral(&Region::Ball(ball), (t_top - radius * radius, t_top), Integrand::Ckn)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DecayScan {
        centers: centers.to_vec(),
        t_top,
        radius,
        decreasing: values.windows(2).all(|w| w[1] < w[0]),
        values,
    })
}
