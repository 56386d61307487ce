//! Closed-form space-time fields and their exact-sampling quadrature.
//!
//! An [`ExactSampler`] integrates a field on a lattice anchored at the region
//! center with spacing `h * length_scale(t)`. Zooming a field by `R` divides
//! its length scale by `R`, so the lattice of the zoomed field is the image
//! of the original lattice under the change of variables and both sides of a
//! scaling identity see the same sample points (bit-for-bit when `R` is a
//! power of two).

use crate::error::{Error, Result};
use crate::exec;

use super::fields::{ScalarField, VectorField};
use super::geometry::Ball;
use super::grid::Grid;
use super::quadrature::Region;
use super::slab::{clamp_window, interpolate, Snapshot, SpaceTimeSlab};
use super::source::{Integrand, SpaceTimeSource};

pub trait AnalyticField: Sync + Send {
    fn velocity(&self, x: [f64; 3], t: f64) -> [f64; 3];

    fn pressure(&self, _x: [f64; 3], _t: f64) -> Option<f64> {
        None
    }

    /// A ball outside of which the field vanishes at time `t`.
    fn support(&self, _t: f64) -> Option<Ball> {
        None
    }

    /// Characteristic length at time `t`; scales the sampling lattice.
    fn length_scale(&self, _t: f64) -> f64 {
        1.0
    }
}

impl<F: AnalyticField + ?Sized> AnalyticField for &F {
    fn velocity(&self, x: [f64; 3], t: f64) -> [f64; 3] {
        (**self).velocity(x, t)
    }
    fn pressure(&self, x: [f64; 3], t: f64) -> Option<f64> {
        (**self).pressure(x, t)
    }
    fn support(&self, t: f64) -> Option<Ball> {
        (**self).support(t)
    }
    fn length_scale(&self, t: f64) -> f64 {
        (**self).length_scale(t)
    }
}

impl<F: AnalyticField + ?Sized> AnalyticField for Box<F> {
    fn velocity(&self, x: [f64; 3], t: f64) -> [f64; 3] {
        (**self).velocity(x, t)
    }
    fn pressure(&self, x: [f64; 3], t: f64) -> Option<f64> {
        (**self).pressure(x, t)
    }
    fn support(&self, t: f64) -> Option<Ball> {
        (**self).support(t)
    }
    fn length_scale(&self, t: f64) -> f64 {
        (**self).length_scale(t)
    }
}

const GAUSS5: [(f64, f64); 5] = [
    (-0.906_179_845_938_664, 0.236_926_885_056_189_1),
    (-0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (0.0, 0.568_888_888_888_888_9),
    (0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (0.906_179_845_938_664, 0.236_926_885_056_189_1),
];

/// Composite 5-point Gauss-Legendre rule in time.
///
/// With `grading < 1` the panels shrink geometrically towards the upper end of
/// the window, which keeps integrable singularities at the top (blow-up time,
/// `t = 0` of a zoom) accurate; no node ever sits on the endpoint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeRule {
    pub panels: usize,
    pub grading: f64,
}

impl TimeRule {
    pub fn uniform(panels: usize) -> Self {
        TimeRule { panels, grading: 1.0 }
    }

    pub fn graded(panels: usize, ratio: f64) -> Self {
        TimeRule {
            panels,
            grading: ratio,
        }
    }

    /// `(t, weight)` pairs on `[a, b]`.
    pub fn nodes(&self, a: f64, b: f64) -> Vec<(f64, f64)> {
        let w = b - a;
        let edges: Vec<f64> = if self.grading >= 1.0 {
            (0..=self.panels)
                .map(|i| a + w * i as f64 / self.panels as f64)
                .collect()
        } else {
            // stop grading once panels fall below rounding of b
            let floor = (64.0 * f64::EPSILON * b.abs()).max(1e-250 * w);
            let mut e: Vec<f64> = (0..=self.panels)
                .map(|i| w * self.grading.powi(i as i32))
                .take_while(|&d| d > floor)
                .map(|d| b - d)
                .collect();
            e.push(b);
            e
        };
        let mut out = Vec::with_capacity(5 * edges.len());
        for p in edges.windows(2) {
            let (lo, hi) = (p[0], p[1]);
            let half = 0.5 * (hi - lo);
            let mid = 0.5 * (hi + lo);
            for (x, wt) in GAUSS5 {
                out.push((mid + half * x, half * wt));
            }
        }
        out
    }
}

/// Exact-sampling quadrature over an [`AnalyticField`].
#[derive(Debug, Clone)]
pub struct ExactSampler<F> {
    field: F,
    spacing: f64,
    time_rule: TimeRule,
    span: (f64, f64),
}

impl<F: AnalyticField> ExactSampler<F> {
    /// `spacing` is the lattice step at unit length scale; `span` the time
    /// interval on which the field may be evaluated.
    pub fn new(field: F, spacing: f64, time_rule: TimeRule, span: (f64, f64)) -> Result<Self> {
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(Error::domain(format!("lattice spacing must be positive, got {spacing}")));
        }
        if time_rule.panels == 0 || !(time_rule.grading > 0.0) {
            return Err(Error::domain("time rule needs >= 1 panel and a positive grading"));
        }
        if !(span.1 > span.0) {
            return Err(Error::window(format!("empty span [{}, {}]", span.0, span.1)));
        }
        Ok(ExactSampler {
            field,
            spacing,
            time_rule,
            span,
        })
    }

    pub fn field(&self) -> &F {
        &self.field
    }

    pub fn lattice_spacing(&self, t: f64) -> f64 {
        self.spacing * self.field.length_scale(t)
    }

    fn resolve_region(&self, region: &Region, t: f64) -> Result<Option<(Ball, Option<Ball>)>> {
        let support = self.field.support(t);
        match (region, support) {
            (Region::Ball(b), None) => Ok(Some((*b, None))),
            (Region::Ball(b), Some(s)) if *b == s => Ok(Some((s, None))),
            (Region::Ball(b), Some(s)) => {
                let d2: f64 = (0..3).map(|a| (b.center[a] - s.center[a]).powi(2)).sum();
                if d2.sqrt() >= b.radius + s.radius {
                    Ok(None)
                } else {
                    Ok(Some((*b, Some(s))))
                }
            }
            (Region::Everywhere, Some(s)) => Ok(Some((s, None))),
            (Region::Everywhere, None) => Err(Error::domain(
                "whole-space integral of an analytic field needs a bounded support",
            )),
        }
    }
}

impl<F: AnalyticField> SpaceTimeSource for ExactSampler<F> {
    fn time_span(&self) -> (f64, f64) {
        self.span
    }

    fn spacing(&self) -> Option<f64> {
        None
    }

    fn max_time_step(&self) -> Option<f64> {
        None
    }

    fn check_region(&self, _region: &Region) -> Result<()> {
        Ok(())
    }

    fn slice_integral(&self, region: &Region, t: f64, integrand: Integrand) -> Result<f64> {
        let Some((ball, clip)) = self.resolve_region(region, t)? else {
            return Ok(0.0);
        };
        if integrand.uses_pressure() && self.field.pressure(ball.center, t).is_none() {
            return Err(Error::domain("integrand needs a pressure the field does not provide"));
        }
        let h = self.lattice_spacing(t);
        let rh = ball.radius / h;
        let r2 = rh * rh;
        let m = rh.floor() as i64 + 1;
        let side = (2 * m + 1) as usize;
        let c = ball.center;
        let total = exec::sum(side * side * side, |flat| {
            let i = (flat % side) as i64 - m;
            let j = ((flat / side) % side) as i64 - m;
            let k = (flat / (side * side)) as i64 - m;
            if ((i * i + j * j + k * k) as f64) >= r2 {
                return 0.0;
            }
            let x = [c[0] + h * i as f64, c[1] + h * j as f64, c[2] + h * k as f64];
            if let Some(s) = clip {
                if !s.contains(x) {
                    return 0.0;
                }
            }
            let p = self.field.pressure(x, t).unwrap_or(0.0);
            integrand.eval(self.field.velocity(x, t), p)
        });
        let value = total * h * h * h;
        if !value.is_finite() {
            return Err(Error::NonFinite(format!("analytic slice integral at t = {t}")));
        }
        Ok(value)
    }

    fn window_integral(&self, region: &Region, window: (f64, f64), integrand: Integrand) -> Result<f64> {
        let (a, b) = clamp_window(self.span.0, self.span.1, window.0, window.1)?;
        let mut parts = Vec::new();
        for (t, w) in self.time_rule.nodes(a, b) {
            parts.push(w * self.slice_integral(region, t, integrand)?);
        }
        Ok(exec::pairwise_sum(&parts))
    }
}

/// `u(y, s) = R v(x0 + R y, t0 + R^2 s)`, `q(y, s) = R^2 p(x0 + R y, t0 + R^2 s)`.
#[derive(Debug, Clone)]
pub struct Zoomed<F> {
    pub inner: F,
    pub scale: f64,
    pub center: [f64; 3],
    pub t0: f64,
}

impl<F> Zoomed<F> {
    pub fn new(inner: F, scale: f64, center: [f64; 3], t0: f64) -> Self {
        Zoomed {
            inner,
            scale,
            center,
            t0,
        }
    }

    fn pull_back(&self, y: [f64; 3], s: f64) -> ([f64; 3], f64) {
        let r = self.scale;
        (
            [
                self.center[0] + r * y[0],
                self.center[1] + r * y[1],
                self.center[2] + r * y[2],
            ],
            self.t0 + r * r * s,
        )
    }
}

impl<F: AnalyticField> AnalyticField for Zoomed<F> {
    fn velocity(&self, y: [f64; 3], s: f64) -> [f64; 3] {
        let (x, t) = self.pull_back(y, s);
        let v = self.inner.velocity(x, t);
        [self.scale * v[0], self.scale * v[1], self.scale * v[2]]
    }

    fn pressure(&self, y: [f64; 3], s: f64) -> Option<f64> {
        let (x, t) = self.pull_back(y, s);
        self.inner.pressure(x, t).map(|p| self.scale * self.scale * p)
    }

    fn support(&self, s: f64) -> Option<Ball> {
        let (_, t) = self.pull_back([0.0; 3], s);
        self.inner.support(t).map(|b| Ball {
            center: [
                (b.center[0] - self.center[0]) / self.scale,
                (b.center[1] - self.center[1]) / self.scale,
                (b.center[2] - self.center[2]) / self.scale,
            ],
            radius: b.radius / self.scale,
        })
    }

    fn length_scale(&self, s: f64) -> f64 {
        let (_, t) = self.pull_back([0.0; 3], s);
        self.inner.length_scale(t) / self.scale
    }
}

/// The field, set to zero outside a fixed ball.
#[derive(Debug, Clone)]
pub struct ZeroExtended<F> {
    pub inner: F,
    pub ball: Ball,
}

impl<F: AnalyticField> AnalyticField for ZeroExtended<F> {
    fn velocity(&self, x: [f64; 3], t: f64) -> [f64; 3] {
        if self.ball.contains(x) {
            self.inner.velocity(x, t)
        } else {
            [0.0; 3]
        }
    }

    fn pressure(&self, x: [f64; 3], t: f64) -> Option<f64> {
        let p = self.inner.pressure(x, t)?;
        Some(if self.ball.contains(x) { p } else { 0.0 })
    }

    fn support(&self, _t: f64) -> Option<Ball> {
        Some(self.ball)
    }

    fn length_scale(&self, t: f64) -> f64 {
        self.inner.length_scale(t)
    }
}

/// Taylor-Green vortex with fundamental wavenumber `k` and unit viscosity:
/// `v = A (sin kx cos ky, -cos kx sin ky, 0) e^{-2k^2 t}`,
/// `p = (A^2/4)(cos 2kx + cos 2ky) e^{-4k^2 t}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaylorGreen {
    pub wavenumber: f64,
    pub amplitude: f64,
}

impl TaylorGreen {
    /// Taylor-Green vortex periodic on a box of length `box_length`.
    pub fn for_box(box_length: f64, amplitude: f64) -> Self {
        TaylorGreen {
            wavenumber: std::f64::consts::TAU / box_length,
            amplitude,
        }
    }

    pub fn decay(&self, t: f64) -> f64 {
        (-2.0 * self.wavenumber * self.wavenumber * t).exp()
    }
}

impl AnalyticField for TaylorGreen {
    fn velocity(&self, x: [f64; 3], t: f64) -> [f64; 3] {
        let k = self.wavenumber;
        let a = self.amplitude * self.decay(t);
        let (sx, cx) = (k * x[0]).sin_cos();
        let (sy, cy) = (k * x[1]).sin_cos();
        [a * sx * cy, -a * cx * sy, 0.0]
    }

    fn pressure(&self, x: [f64; 3], t: f64) -> Option<f64> {
        let k = self.wavenumber;
        let a = self.amplitude * self.decay(t);
        Some(0.25 * a * a * ((2.0 * k * x[0]).cos() + (2.0 * k * x[1]).cos()))
    }
}

/// Spatially constant velocity and pressure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Uniform {
    pub velocity: [f64; 3],
    pub pressure: f64,
}

impl AnalyticField for Uniform {
    fn velocity(&self, _x: [f64; 3], _t: f64) -> [f64; 3] {
        self.velocity
    }

    fn pressure(&self, _x: [f64; 3], _t: f64) -> Option<f64> {
        Some(self.pressure)
    }
}

/// `v = (A sin x2 e^{rate t}, 0, 0)`, `p = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Shear {
    pub amplitude: f64,
    pub rate: f64,
}

impl AnalyticField for Shear {
    fn velocity(&self, x: [f64; 3], t: f64) -> [f64; 3] {
        [self.amplitude * x[1].sin() * (self.rate * t).exp(), 0.0, 0.0]
    }

    fn pressure(&self, _x: [f64; 3], _t: f64) -> Option<f64> {
        Some(0.0)
    }
}

/// Field given by closures; `pressure` returning `None` means no pressure.
#[derive(Clone)]
pub struct FnField<V, P> {
    pub velocity: V,
    pub pressure: P,
}

impl<V, P> AnalyticField for FnField<V, P>
where
    V: Fn([f64; 3], f64) -> [f64; 3] + Sync + Send,
    P: Fn([f64; 3], f64) -> Option<f64> + Sync + Send,
{
    fn velocity(&self, x: [f64; 3], t: f64) -> [f64; 3] {
        (self.velocity)(x, t)
    }

    fn pressure(&self, x: [f64; 3], t: f64) -> Option<f64> {
        (self.pressure)(x, t)
    }
}

/// `v = (1 + |x|)^{-power} e_1`, `p = 0`, time independent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialDecay {
    pub power: f64,
}

impl AnalyticField for RadialDecay {
    fn velocity(&self, x: [f64; 3], _t: f64) -> [f64; 3] {
        let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
        [(1.0 + r).powf(-self.power), 0.0, 0.0]
    }

    fn pressure(&self, _x: [f64; 3], _t: f64) -> Option<f64> {
        Some(0.0)
    }
}

/// Samples the field on every grid node at time `t`; missing pressure is zero.
pub fn sample_snapshot<F: AnalyticField + ?Sized>(field: &F, grid: Grid, t: f64) -> Result<Snapshot> {
    let v = VectorField::from_fn(grid, |x| field.velocity(x, t))?;
    let p = ScalarField::from_fn(grid, |x| field.pressure(x, t).unwrap_or(0.0))?;
    Snapshot::new(t, v, p)
}

pub fn sample_slab<F: AnalyticField + ?Sized>(field: &F, grid: Grid, times: &[f64]) -> Result<SpaceTimeSlab> {
    SpaceTimeSlab::new(
        times
            .iter()
            .map(|&t| sample_snapshot(field, grid, t))
            .collect::<Result<_>>()?,
    )
}

/// Linear interpolation between the stored values of a sampled series.
#[allow(dead_code)]
pub(crate) fn series_at(times: &[f64], values: &[f64], t: f64) -> Result<f64> {
    interpolate(times, values, t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn gauss_rule_integrates_polynomials() {
        let rule = TimeRule::uniform(3);
        let v: f64 = rule.nodes(-1.0, 2.0).iter().map(|(t, w)| w * t.powi(7)).sum();
        assert!((v - (256.0 - 1.0) / 8.0).abs() < 1e-11);
    }

    #[test]
    fn graded_rule_handles_endpoint_singularity() {
        let rule = TimeRule::graded(80, 0.6);
        let v: f64 = rule.nodes(0.0, 1.0).iter().map(|(t, w)| w * (1.0 - t).powf(-0.7)).sum();
        assert!((v - 1.0 / 0.3).abs() < 1e-4, "{v}");
        // singular point at exactly zero grades much further
        let rule = TimeRule::graded(240, 0.5);
        let v: f64 = rule.nodes(-1.0, 0.0).iter().map(|(t, w)| w * (-t).powf(-0.9)).sum();
        assert!((v - 10.0).abs() < 1e-5, "{v}");
    }

    #[test]
    fn lattice_ball_volume() {
        let s = ExactSampler::new(
            Uniform { velocity: [1.0, 0.0, 0.0], pressure: 0.0 },
            0.02,
            TimeRule::uniform(1),
            (0.0, 1.0),
        )
        .unwrap();
        let region = Region::Ball(Ball::centered(1.0).unwrap());
        let v = s.slice_integral(&region, 0.5, Integrand::One).unwrap();
        assert!((v - 4.0 * PI / 3.0).abs() < 1e-3 * 4.0 * PI / 3.0, "{v}");
    }

    #[test]
    fn taylor_green_satisfies_momentum_equation() {
        // v_t + v.grad v + grad p - lap v = 0, checked by central differences
        let tg = TaylorGreen { wavenumber: 1.3, amplitude: 0.7 };
        let (x, t, d) = ([0.31, -0.8, 0.2], 0.05, 1e-4);
        let shift = |a: usize, s: f64| {
            let mut y = x;
            y[a] += s;
            y
        };
        let v = tg.velocity(x, t);
        for i in 0..3 {
            let dt = (tg.velocity(x, t + d)[i] - tg.velocity(x, t - d)[i]) / (2.0 * d);
            let mut adv = 0.0;
            let mut lap = 0.0;
            for a in 0..3 {
                let p = tg.velocity(shift(a, d), t)[i];
                let m = tg.velocity(shift(a, -d), t)[i];
                adv += v[a] * (p - m) / (2.0 * d);
                lap += (p - 2.0 * v[i] + m) / (d * d);
            }
            let gp = (tg.pressure(shift(i, d), t).unwrap() - tg.pressure(shift(i, -d), t).unwrap()) / (2.0 * d);
            assert!((dt + adv + gp - lap).abs() < 1e-5, "component {i}");
        }
    }

    #[test]
    fn zoomed_support_and_scale() {
        let f = ZeroExtended {
            inner: Uniform { velocity: [2.0, 0.0, 0.0], pressure: 3.0 },
            ball: Ball::centered(1.0).unwrap(),
        };
        let z = Zoomed::new(&f, 0.5, [0.0; 3], 0.0);
        assert_eq!(z.support(-1.0).unwrap().radius, 2.0);
        assert_eq!(z.velocity([1.5, 0.0, 0.0], -1.0), [1.0, 0.0, 0.0]);
        assert_eq!(z.pressure([1.5, 0.0, 0.0], -1.0), Some(0.75));
        assert_eq!(z.velocity([2.5, 0.0, 0.0], -1.0), [0.0; 3]);
        assert_eq!(z.length_scale(0.0), 2.0);
    }
}
