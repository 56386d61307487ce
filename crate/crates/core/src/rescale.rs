//! Parabolic zoom `u(y,s) = R v(x0 + R y, t0 + R² s)`, `q = R² p(...)`, the
//! identities it preserves, and self-similar test profiles.

use serde::{Deserialize, Serialize};

use crate::diagnostics::fit_log_slope;
use crate::error::{Error, Result};
use crate::field::analytic::{AnalyticField, ExactSampler, TimeRule, ZeroExtended, Zoomed};
use crate::field::sample::{resample_scalar, resample_vector, AffineMap, Extension, SampleMode};
use crate::field::slab::interpolate;
use crate::field::{Ball, Grid, Integrand, Region, ScalarField, Snapshot, SpaceTimeSlab, SpaceTimeSource, VectorField};
use crate::pressure::periodic_poisson_pressure;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZoomParams {
    /// `R_k` in `]0, 1]`.
    pub scale: f64,
    /// Backward horizon `T < 0` of the zoomed window `[T, 0]`.
    pub horizon: f64,
    #[serde(default)]
    pub center: [f64; 3],
    #[serde(default)]
    pub t0: f64,
}

impl ZoomParams {
    pub fn new(scale: f64, horizon: f64) -> Result<Self> {
        let p = ZoomParams {
            scale,
            horizon,
            center: [0.0; 3],
            t0: 0.0,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn at(mut self, center: [f64; 3], t0: f64) -> Self {
        self.center = center;
        self.t0 = t0;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.scale > 0.0 && self.scale <= 1.0) {
            return Err(Error::domain(format!("zoom scale must lie in ]0, 1], got {}", self.scale)));
        }
        if !(self.horizon < 0.0 && self.horizon.is_finite()) {
            return Err(Error::domain(format!("zoom horizon must be negative, got {}", self.horizon)));
        }
        Ok(())
    }

    /// `t_k = T R²`.
    pub fn t_k(&self) -> f64 {
        self.horizon * self.scale * self.scale
    }

    /// The source time interval `[t0 + T R², t0]`.
    pub fn source_window(&self) -> (f64, f64) {
        (self.t0 + self.t_k(), self.t0)
    }

    fn map(&self) -> AffineMap {
        AffineMap {
            offset: self.center,
            scale: self.scale,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZoomOptions {
    pub mode: SampleMode,
    pub extension: Extension,
}

impl Default for ZoomOptions {
    fn default() -> Self {
        ZoomOptions {
            mode: SampleMode::Trilinear,
            extension: Extension::ZeroOutsideBox,
        }
    }
}

fn lerp_snapshot(slab: &SpaceTimeSlab, t: f64) -> Result<Snapshot> {
    let (lo, hi) = slab.bracket(t, t);
    let snaps = slab.snapshots();
    if lo == hi || (snaps[lo].time() - t).abs() <= 1e-12 {
        return Ok(snaps[lo].clone());
    }
    if (snaps[hi].time() - t).abs() <= 1e-12 {
        return Ok(snaps[hi].clone());
    }
    let (a, b) = (&snaps[lo], &snaps[hi]);
    let w = (t - a.time()) / (b.time() - a.time());
    let mix = |x: &ScalarField, y: &ScalarField| -> Result<ScalarField> {
        let vals = x.values().iter().zip(y.values()).map(|(p, q)| p + w * (q - p)).collect();
        ScalarField::new(*x.grid(), vals)
    };
    let v = VectorField::new([
        mix(a.velocity().component(0), b.velocity().component(0))?,
        mix(a.velocity().component(1), b.velocity().component(1))?,
        mix(a.velocity().component(2), b.velocity().component(2))?,
    ])?;
    Snapshot::new(t, v, mix(a.pressure(), b.pressure())?)
}

/// Zoomed slab on `target` over `[T, 0]`.
///
/// Output times are `T`, the pulled-back source snapshot times inside the
/// window, and `0`; off-snapshot ends are interpolated linearly in time.
pub fn zoom(slab: &SpaceTimeSlab, params: &ZoomParams, target: &Grid, options: &ZoomOptions) -> Result<SpaceTimeSlab> {
    params.validate()?;
    let (a, b) = params.source_window();
    let tol = 1e-12 * (1.0 + a.abs().max(b.abs()));
    if a < slab.t_start() - tol || b > slab.t_end() + tol {
        return Err(Error::window(format!(
            "zoom needs source times [{a}, {b}], data covers [{}, {}]",
            slab.t_start(),
            slab.t_end()
        )));
    }
    let r2 = params.scale * params.scale;
    let mut source_times = vec![a];
    source_times.extend(slab.times().into_iter().filter(|&t| t > a + tol && t < b - tol));
    source_times.push(b);
    let map = params.map();
    let snaps = source_times
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let src = lerp_snapshot(slab, t.clamp(slab.t_start(), slab.t_end()))?;
            let s = if i == 0 {
                params.horizon
            } else if i == source_times.len() - 1 {
                0.0
            } else {
                (t - params.t0) / r2
            };
            let v = resample_vector(src.velocity(), target, &map, options.mode, &options.extension)?
                .scaled(params.scale);
            let p = resample_scalar(src.pressure(), target, &map, options.mode, &options.extension)?.scaled(r2);
            Snapshot::new(s, v, p)
        })
        .collect::<Result<Vec<_>>>()?;
    SpaceTimeSlab::new(snaps)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub scale: f64,
    pub horizon: f64,
    pub a: f64,
    /// `|T|^{-1} ∫_T^0 ∫_{B(1/R)} |u|³` (zoomed side).
    pub average_zoomed: f64,
    /// `|T R²|^{-1} ∫_{T R²}^0 ∫_{B} |v|³` (source side).
    pub average_source: f64,
    pub average_rel: f64,
    /// `a^{-2} ∫_{Q(a)} (|u|³ + |q|^{3/2})` (zoomed side).
    pub ckn_zoomed: f64,
    /// `(aR)^{-2} ∫_{Q(aR)} (|v|³ + |p|^{3/2})` (source side).
    pub ckn_source: f64,
    pub ckn_rel: f64,
    /// The same pair of window averages for `|p|^{3/2}`.
    pub pressure_zoomed: Option<f64>,
    pub pressure_source: Option<f64>,
    pub pressure_rel: Option<f64>,
}

pub fn relative_gap(x: f64, y: f64) -> f64 {
    let scale = x.abs().max(y.abs());
    if scale == 0.0 {
        0.0
    } else {
        (x - y).abs() / scale
    }
}

fn check_a(a: f64, params: &ZoomParams) -> Result<()> {
    if !(a > 0.0 && a <= 1.0) {
        return Err(Error::domain(format!("a must lie in ]0, 1], got {a}")));
    }
    if a * a > -params.horizon {
        return Err(Error::domain(format!(
            "Q(a) with a = {a} reaches past the horizon T = {}",
            params.horizon
        )));
    }
    Ok(())
}

struct Sides<'a, S: ?Sized, Z: ?Sized> {
    source: &'a S,
    zoomed: &'a Z,
    zoomed_everywhere: Region,
    pressure: bool,
}

fn both_sides<S, Z>(sides: Sides<'_, S, Z>, params: &ZoomParams, a: f64) -> Result<ScalingReport>
where
    S: SpaceTimeSource + ?Sized,
    Z: SpaceTimeSource + ?Sized,
{
    let r = params.scale;
    let t = params.horizon;
    let unit = Region::Ball(Ball::new(params.center, 1.0)?);
    let src_window = params.source_window();
    let avg = |integrand: Integrand| -> Result<(f64, f64)> {
        let z = sides.zoomed.window_integral(&sides.zoomed_everywhere, (t, 0.0), integrand)? / -t;
        let s = sides.source.window_integral(&unit, src_window, integrand)? / (-t * r * r);
        Ok((z, s))
    };
    let (average_zoomed, average_source) = avg(Integrand::VELOCITY_CUBED)?;
    let ckn = if sides.pressure { Integrand::Ckn } else { Integrand::VELOCITY_CUBED };
    let ckn_zoomed = sides
        .zoomed
        .window_integral(&Region::Ball(Ball::new([0.0; 3], a)?), (-a * a, 0.0), ckn)?
        / (a * a);
    let ar = a * r;
    let ckn_source = sides.source.window_integral(
        &Region::Ball(Ball::new(params.center, ar)?),
        (params.t0 - ar * ar, params.t0),
        ckn,
    )? / (ar * ar);
    let (pz, ps) = if sides.pressure {
        let (z, s) = avg(Integrand::PRESSURE_THREE_HALVES)?;
        (Some(z), Some(s))
    } else {
        (None, None)
    };
    Ok(ScalingReport {
        scale: r,
        horizon: t,
        a,
        average_rel: relative_gap(average_zoomed, average_source),
        average_zoomed,
        average_source,
        ckn_rel: relative_gap(ckn_zoomed, ckn_source),
        ckn_zoomed,
        ckn_source,
        pressure_rel: pz.zip(ps).map(|(z, s)| relative_gap(z, s)),
        pressure_zoomed: pz,
        pressure_source: ps,
    })
}

/// Both scaling identities on a closed-form field sampled exactly.
///
/// The field is cut off outside `B(x0, 1)` for the window-average identity;
/// lattice spacing `spacing` is used at unit length scale on the source side.
pub fn scaling_identity_exact<F>(field: &F, params: &ZoomParams, a: f64, spacing: f64, rule: TimeRule) -> Result<ScalingReport>
where
    F: AnalyticField,
{
    params.validate()?;
    check_a(a, params)?;
    let unit = Ball::new(params.center, 1.0)?;
    let cut = ZeroExtended { inner: field, ball: unit };
    let zoomed = Zoomed::new(&cut, params.scale, params.center, params.t0);
    let (lo, hi) = params.source_window();
    let source = ExactSampler::new(&cut, spacing, rule, (lo, hi))?;
    let zsrc = ExactSampler::new(&zoomed, spacing, rule, (params.horizon, 0.0))?;
    let pressure = field.pressure(params.center, params.t0).is_some();
    both_sides(
        Sides {
            source: &source,
            zoomed: &zsrc,
            zoomed_everywhere: Region::Everywhere,
            pressure,
        },
        params,
        a,
    )
}

/// Both scaling identities on gridded data: the slab is zoomed onto `target`
/// (zero outside `B(x0, 1)`) and each side is integrated on its own grid.
pub fn scaling_identity_gridded(
    slab: &SpaceTimeSlab,
    params: &ZoomParams,
    a: f64,
    target: &Grid,
    mode: SampleMode,
) -> Result<ScalingReport> {
    params.validate()?;
    check_a(a, params)?;
    let unit = Ball::new(params.center, 1.0)?;
    let options = ZoomOptions {
        mode,
        extension: Extension::ZeroOutsideBall(unit),
    };
    let zoomed = zoom(slab, params, target, &options)?;
    let outer = 1.0 / params.scale;
    let region = if 2.0 * outer < target.box_length() {
        Region::Ball(Ball::new([0.0; 3], outer)?)
    } else if outer * 3f64.sqrt() <= 0.5 * target.box_length() || params.scale == 1.0 {
        Region::Everywhere
    } else {
        return Err(Error::geometry(format!(
            "target box of length {} cannot hold B(1/R) = B({outer})",
            target.box_length()
        )));
    };
    both_sides(
        Sides {
            source: slab,
            zoomed: &zoomed,
            zoomed_everywhere: region,
            pressure: true,
        },
        params,
        a,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarmonicVanishing {
    pub scales: Vec<f64>,
    pub a: f64,
    pub horizon: f64,
    /// `|T|^{-1} ∫_T^0 ∫_{B(a)} |q^{2k}|^{3/2}` per scale.
    pub values: Vec<f64>,
    /// Slope of `log value` against `log R`.
    pub fitted_exponent: Option<f64>,
    /// Values decrease as `R` decreases.
    pub decreasing: bool,
}

fn check_scales(scales: &[f64], a: f64) -> Result<()> {
    if scales.is_empty() {
        return Err(Error::domain("need at least one zoom scale"));
    }
    for &r in scales {
        if a * r >= 2.0 / 3.0 {
            return Err(Error::geometry(format!(
                "a R = {a} * {r} = {} violates a R < 2/3",
                a * r
            )));
        }
    }
    Ok(())
}

fn vanishing_report(scales: &[f64], a: f64, horizon: f64, values: Vec<f64>) -> HarmonicVanishing {
    let mut order: Vec<usize> = (0..scales.len()).collect();
    order.sort_by(|&i, &j| scales[j].total_cmp(&scales[i]));
    let decreasing = order.windows(2).all(|w| values[w[1]] < values[w[0]]);
    HarmonicVanishing {
        scales: scales.to_vec(),
        a,
        horizon,
        fitted_exponent: fit_log_slope(scales, &values),
        values,
        decreasing,
    }
}

/// Window averages of the zoomed harmonic pressure for a closed-form `p²`
/// (the field's pressure), zoomed at `(x0, t0)`.
pub fn harmonic_part_vanishing<F: AnalyticField>(
    p2: &F,
    base: &ZoomParams,
    scales: &[f64],
    a: f64,
    spacing: f64,
    rule: TimeRule,
) -> Result<HarmonicVanishing> {
    check_scales(scales, a)?;
    let values = scales
        .iter()
        .map(|&r| {
            let params = ZoomParams { scale: r, ..*base };
            params.validate()?;
            let z = Zoomed::new(p2, r, params.center, params.t0);
            let src = ExactSampler::new(&z, spacing, rule, (params.horizon, 0.0))?;
            let ball = Region::Ball(Ball::new([0.0; 3], a)?);
            Ok(src.window_integral(&ball, (params.horizon, 0.0), Integrand::PRESSURE_THREE_HALVES)? / -params.horizon)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(vanishing_report(scales, a, base.horizon, values))
}

/// Gridded version: the slab's pressure is taken as `p²` and zoomed onto
/// `target` for each scale.
pub fn harmonic_part_vanishing_slab(
    slab: &SpaceTimeSlab,
    base: &ZoomParams,
    scales: &[f64],
    a: f64,
    target: &Grid,
    options: &ZoomOptions,
) -> Result<HarmonicVanishing> {
    check_scales(scales, a)?;
    let values = scales
        .iter()
        .map(|&r| {
            let params = ZoomParams { scale: r, ..*base };
            let z = zoom(slab, &params, target, options)?;
            let ball = Region::Ball(Ball::new([0.0; 3], a)?);
            Ok(z.window_integral(&ball, (params.horizon, 0.0), Integrand::PRESSURE_THREE_HALVES)? / -params.horizon)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(vanishing_report(scales, a, base.horizon, values))
}

/// Named divergence-free profiles `U`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileShape {
    /// `U = curl(ψ e_3)` with `ψ = exp(1 - 1/(1 - |y|²))` on the unit ball.
    CurlBump,
}

/// `∫|U|³` for [`ProfileShape::CurlBump`], from
/// `(3π²/4) ∫_0^1 (2rψ/(1-r²)²)³ r² dr`.
pub const CURL_BUMP_L3_CUBED: f64 = 9.504_063_497_345_31;

impl ProfileShape {
    pub fn eval(&self, y: [f64; 3]) -> [f64; 3] {
        match self {
            ProfileShape::CurlBump => {
                let r2 = y[0] * y[0] + y[1] * y[1] + y[2] * y[2];
                if r2 >= 1.0 {
                    return [0.0; 3];
                }
                let w = 1.0 - r2;
                let psi = (1.0 - 1.0 / w).exp();
                // ∂_i ψ = -2 ψ y_i / w²
                let g = -2.0 * psi / (w * w);
                [g * y[1], -g * y[0], 0.0]
            }
        }
    }

    pub fn l3_cubed(&self) -> f64 {
        match self {
            ProfileShape::CurlBump => CURL_BUMP_L3_CUBED,
        }
    }
}

/// `v(x,t) = (T* - t)^{-α} U(x / sqrt(T* - t))`, supported in `|x| < sqrt(T* - t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticProfile {
    pub alpha: f64,
    pub shape: ProfileShape,
    pub t_sing: f64,
}

impl SyntheticProfile {
    pub fn new(alpha: f64, shape: ProfileShape, t_sing: f64) -> Result<Self> {
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(Error::domain(format!("alpha must be >= 0, got {alpha}")));
        }
        Ok(SyntheticProfile { alpha, shape, t_sing })
    }

    /// `∫|v(·,t)|³ dx = (T* - t)^{3/2 - 3α} ∫|U|³`.
    pub fn l3_cubed_at(&self, t: f64) -> f64 {
        (self.t_sing - t).powf(1.5 - 3.0 * self.alpha) * self.shape.l3_cubed()
    }

    /// Closed-form window average `(T*-t)^{-1} ∫_t^{T*} ∫|v|³` for `T = T*`.
    pub fn window_average(&self, t: f64) -> f64 {
        let e = 1.5 - 3.0 * self.alpha;
        (self.t_sing - t).powf(e) / (e + 1.0) * self.shape.l3_cubed()
    }
}

impl AnalyticField for SyntheticProfile {
    fn velocity(&self, x: [f64; 3], t: f64) -> [f64; 3] {
        let tau = self.t_sing - t;
        if !(tau > 0.0) {
            return [f64::NAN; 3];
        }
        let l = tau.sqrt();
        let a = tau.powf(-self.alpha);
        let u = self.shape.eval([x[0] / l, x[1] / l, x[2] / l]);
        [a * u[0], a * u[1], a * u[2]]
    }

    fn support(&self, t: f64) -> Option<Ball> {
        Some(Ball {
            center: [0.0; 3],
            radius: (self.t_sing - t).max(0.0).sqrt(),
        })
    }

    fn length_scale(&self, t: f64) -> f64 {
        (self.t_sing - t).max(0.0).sqrt()
    }
}

/// Samples the profile on `grid` at `times` and attaches the periodic
/// Poisson pressure.
pub fn synthetic_profile(profile: &SyntheticProfile, grid: Grid, times: &[f64]) -> Result<SpaceTimeSlab> {
    if let Some(&bad) = times.iter().find(|&&t| t >= profile.t_sing) {
        return Err(Error::domain(format!(
            "time {bad} is not before the singular time {}",
            profile.t_sing
        )));
    }
    let snaps = times
        .iter()
        .map(|&t| {
            let v = VectorField::from_fn(grid, |x| profile.velocity(x, t))?;
            let p = periodic_poisson_pressure(&v)?;
            Snapshot::new(t, v, p)
        })
        .collect::<Result<Vec<_>>>()?;
    SpaceTimeSlab::new(snaps)
}

/// Linear-in-time value of a sampled series (used by reports).
pub fn series_value(times: &[f64], values: &[f64], t: f64) -> Result<f64> {
    interpolate(times, values, t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::analytic::{Shear, Uniform};

    #[test]
    fn params_validate() {
        assert!(ZoomParams::new(0.0, -1.0).is_err());
        assert!(ZoomParams::new(1.5, -1.0).is_err());
        assert!(ZoomParams::new(0.5, 0.0).is_err());
        let p = ZoomParams::new(0.5, -4.0).unwrap();
        assert_eq!(p.t_k(), -1.0);
    }

    #[test]
    fn profile_is_divergence_free() {
        let u = ProfileShape::CurlBump;
        let (y, e) = ([0.3, -0.2, 0.4], 1e-6);
        let mut div = 0.0;
        for a in 0..3 {
            let mut p = y;
            let mut m = y;
            p[a] += e;
            m[a] -= e;
            div += (u.eval(p)[a] - u.eval(m)[a]) / (2.0 * e);
        }
        assert!(div.abs() < 1e-8);
    }

    #[test]
    fn exact_identity_on_constants() {
        let f = Uniform { velocity: [0.0, 2.0, 0.0], pressure: 0.0 };
        let p = ZoomParams::new(0.5, -1.0).unwrap();
        let r = scaling_identity_exact(&f, &p, 0.5, 0.05, TimeRule::uniform(2)).unwrap();
        assert!(r.average_rel < 1e-12 && r.ckn_rel < 1e-12, "{r:?}");
    }

    #[test]
    fn zoom_of_shear() {
        let g = Grid::periodic_2pi(32).unwrap();
        let shear = Shear { amplitude: 1.0, rate: 2.0 };
        let times: Vec<f64> = (0..=10).map(|i| -0.5 + 0.05 * i as f64).collect();
        let slab = crate::field::analytic::sample_slab(&shear, g, &times).unwrap();
        let p = ZoomParams::new(0.5, -1.0).unwrap();
        let opts = ZoomOptions { mode: SampleMode::Spectral, extension: Extension::Periodic };
        let z = zoom(&slab, &p, &g, &opts).unwrap();
        assert_eq!(z.t_start(), -1.0);
        assert_eq!(z.t_end(), 0.0);
        for s in z.snapshots() {
            let exact = VectorField::from_fn(g, |y| [0.5 * (0.5 * y[1]).sin() * (2.0 * 0.25 * s.time()).exp(), 0.0, 0.0])
                .unwrap();
            assert!(s.velocity().max_diff(&exact).unwrap() < 1e-12);
        }
    }

    #[test]
    fn uncovered_window_is_rejected() {
        let g = Grid::periodic_2pi(8).unwrap();
        let slab = crate::field::analytic::sample_slab(&Uniform { velocity: [1.0, 0.0, 0.0], pressure: 0.0 }, g, &[-0.1, 0.0])
            .unwrap();
        let p = ZoomParams::new(0.5, -1.0).unwrap();
        assert!(matches!(zoom(&slab, &p, &g, &ZoomOptions::default()), Err(Error::Window(_))));
    }

    #[test]
    fn harmonic_constraint() {
        let f = Uniform { velocity: [0.0; 3], pressure: 1.0 };
        let p = ZoomParams::new(1.0, -1.0).unwrap();
        let r = harmonic_part_vanishing(&f, &p, &[1.0], 0.7, 0.1, TimeRule::uniform(1));
        assert!(matches!(r, Err(Error::Geometry(_))));
    }
}
