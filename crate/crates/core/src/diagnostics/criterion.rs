use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec;
use crate::field::quadrature::ball_power_integral;
use crate::field::{Ball, Integrand, Region, SpaceTimeSlab, SpaceTimeSource};

use super::fit_log_slope;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.len() != values.len() || times.is_empty() {
            return Err(Error::shape(format!(
                "time series with {} times and {} values",
                times.len(),
                values.len()
            )));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::window("time series times must be strictly increasing"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("time series values".into()));
        }
        Ok(TimeSeries { times, values })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// `g(t) = ∫_ball |v(·,t)|³ dx` at every snapshot.
pub fn g_profile(slab: &SpaceTimeSlab, ball: &Ball) -> Result<TimeSeries> {
    let snaps = slab.snapshots();
    let values = exec::map_collect(snaps.len(), |i| ball_power_integral(snaps[i].velocity(), ball, 3.0))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    TimeSeries::new(slab.times(), values)
}

/// Windows `[T - δ 2^{-j}, T]` for `j = 0..count`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowFamily {
    pub delta: f64,
    pub count: usize,
}

impl Default for WindowFamily {
    fn default() -> Self {
        WindowFamily { delta: 0.5, count: 8 }
    }
}

impl WindowFamily {
    pub fn lengths(&self) -> Vec<f64> {
        (0..self.count).map(|j| self.delta * 0.5f64.powi(j as i32)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowValue {
    pub t: f64,
    pub length: f64,
    pub average: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionProfile {
    #[serde(rename = "T")]
    pub t_top: f64,
    pub windows: Vec<WindowValue>,
    /// Minimum over the tail half of the windows (liminf stand-in).
    pub m_proxy: f64,
    /// Maximum over the tail half of the windows (limsup stand-in).
    #[serde(rename = "M_proxy")]
    pub big_m_proxy: f64,
    /// Slope of `log A_j` against `log(T - t_j)` over all windows.
    pub fitted_exponent: Option<f64>,
}

/// `A_j = (T - t_j)^{-1} ∫_{t_j}^T ∫_region |v|³ dx ds` over a geometric window family.
pub fn criterion_profile<S: SpaceTimeSource + ?Sized>(
    source: &S,
    t_top: f64,
    region: &Region,
    family: &WindowFamily,
) -> Result<CriterionProfile> {
    if family.count == 0 || !(family.delta > 0.0) {
        return Err(Error::domain("window family needs delta > 0 and at least one window"));
    }
    source.check_region(region)?;
    let (start, end) = source.time_span();
    if t_top > end + 1e-12 {
        return Err(Error::window(format!("T = {t_top} is past the data end {end}")));
    }
    let lengths = family.lengths();
    if t_top - lengths[0] < start - 1e-12 {
        return Err(Error::window(format!(
            "largest window [{}, {t_top}] starts before the data at {start}",
            t_top - lengths[0]
        )));
    }
    if let Some(dt) = source.max_time_step() {
        let smallest = *lengths.last().expect("non-empty");
        if smallest < dt * (1.0 - 1e-9) {
            return Err(Error::resolution(format!(
                "smallest window {smallest} is shorter than the snapshot interval {dt}"
            )));
        }
    }
    let windows = lengths
        .iter()
        .map(|&len| {
            let total = source.window_integral(region, (t_top - len, t_top), Integrand::VELOCITY_CUBED)?;
            Ok(WindowValue {
                t: t_top - len,
                length: len,
                average: total / len,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let tail = &windows[windows.len() / 2..];
    let m_proxy = tail.iter().map(|w| w.average).fold(f64::INFINITY, f64::min);
    let big_m_proxy = tail.iter().map(|w| w.average).fold(f64::NEG_INFINITY, f64::max);
    let x: Vec<f64> = windows.iter().map(|w| w.length).collect();
    let y: Vec<f64> = windows.iter().map(|w| w.average).collect();
    Ok(CriterionProfile {
        t_top,
        fitted_exponent: fit_log_slope(&x, &y),
        windows,
        m_proxy,
        big_m_proxy,
    })
}
