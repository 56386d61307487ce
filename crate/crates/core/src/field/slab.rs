use crate::error::{Error, Result};
use crate::exec;

use super::fields::{same_grid, ScalarField, VectorField};
use super::geometry::{Ball, ParabolicCylinder};
use super::grid::Grid;
use super::quadrature::{region_cells, sum_cells, Region};
use super::source::{Integrand, SpaceTimeSource};
use super::spectral::Fft3;

/// Default bound on `max |div v|` for fields that must be solenoidal.
pub const DEFAULT_DIV_TOL: f64 = 1e-10;

/// Velocity and pressure at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    time: f64,
    velocity: VectorField,
    pressure: ScalarField,
}

impl Snapshot {
    pub fn new(time: f64, velocity: VectorField, pressure: ScalarField) -> Result<Self> {
        if !time.is_finite() {
            return Err(Error::NonFinite("snapshot time".into()));
        }
        same_grid(velocity.grid(), pressure.grid())?;
        Ok(Snapshot {
            time,
            velocity,
            pressure,
        })
    }

    /// Like [`Snapshot::new`], additionally requiring `max |div v| <= div_tol`.
    pub fn solenoidal(
        time: f64,
        velocity: VectorField,
        pressure: ScalarField,
        div_tol: f64,
    ) -> Result<Self> {
        let div = max_divergence(&velocity)?;
        if div > div_tol {
            return Err(Error::domain(format!(
                "velocity at t = {time} is not solenoidal: max |div v| = {div:e} > {div_tol:e}"
            )));
        }
        Snapshot::new(time, velocity, pressure)
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn velocity(&self) -> &VectorField {
        &self.velocity
    }

    pub fn pressure(&self) -> &ScalarField {
        &self.pressure
    }

    pub fn grid(&self) -> &Grid {
        self.velocity.grid()
    }

    pub fn with_pressure(&self, pressure: ScalarField) -> Result<Self> {
        Snapshot::new(self.time, self.velocity.clone(), pressure)
    }

    pub fn into_parts(self) -> (f64, VectorField, ScalarField) {
        (self.time, self.velocity, self.pressure)
    }
}

/// Spectral `max |div v|`.
pub fn max_divergence(v: &VectorField) -> Result<f64> {
    Ok(Fft3::new(*v.grid()).div(v)?.max_abs())
}

/// Time-ordered snapshots on a common grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeSlab {
    snapshots: Vec<Snapshot>,
}

impl SpaceTimeSlab {
    pub fn new(snapshots: Vec<Snapshot>) -> Result<Self> {
        if snapshots.len() < 2 {
            return Err(Error::window(format!(
                "a slab needs at least 2 snapshots, got {}",
                snapshots.len()
            )));
        }
        let g = *snapshots[0].grid();
        for w in snapshots.windows(2) {
            same_grid(&g, w[1].grid())?;
            if w[1].time <= w[0].time {
                return Err(Error::window(format!(
                    "snapshot times must increase strictly ({} then {})",
                    w[0].time, w[1].time
                )));
            }
        }
        Ok(SpaceTimeSlab { snapshots })
    }

    pub fn snapshots(&self) -> &[Snapshot] {
        &self.snapshots
    }

    pub fn into_snapshots(self) -> Vec<Snapshot> {
        self.snapshots
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn grid(&self) -> &Grid {
        self.snapshots[0].grid()
    }

    pub fn t_start(&self) -> f64 {
        self.snapshots[0].time
    }

    pub fn t_end(&self) -> f64 {
        self.snapshots[self.snapshots.len() - 1].time
    }

    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.time).collect()
    }

    pub fn max_time_step(&self) -> f64 {
        self.snapshots
            .windows(2)
            .map(|w| w[1].time - w[0].time)
            .fold(0.0, f64::max)
    }

    /// Replaces every pressure with `f(snapshot)`.
    pub fn map_pressure(
        &self,
        f: impl Fn(&Snapshot) -> Result<ScalarField> + Sync + Send,
    ) -> Result<Self> {
        let mapped: Vec<Result<Snapshot>> = exec::map_collect(self.snapshots.len(), |i| {
            let s = &self.snapshots[i];
            s.with_pressure(f(s)?)
        });
        SpaceTimeSlab::new(mapped.into_iter().collect::<Result<_>>()?)
    }

    /// Snapshot index range needed to integrate over `[a, b]`.
    pub(crate) fn bracket(&self, a: f64, b: f64) -> (usize, usize) {
        let times = self.times();
        let lo = times.iter().rposition(|&t| t <= a).unwrap_or(0);
        let hi = times
            .iter()
            .position(|&t| t >= b)
            .unwrap_or(times.len() - 1);
        (lo, hi)
    }

    pub(crate) fn clamp_window(&self, a: f64, b: f64) -> Result<(f64, f64)> {
        clamp_window(self.t_start(), self.t_end(), a, b)
    }
}

pub(crate) fn clamp_window(start: f64, end: f64, a: f64, b: f64) -> Result<(f64, f64)> {
    let tol = 1e-12 * (1.0 + start.abs().max(end.abs()));
    if !(a.is_finite() && b.is_finite()) || b <= a {
        return Err(Error::window(format!("empty time window [{a}, {b}]")));
    }
    if a < start - tol || b > end + tol {
        return Err(Error::window(format!(
            "time window [{a}, {b}] not covered by data on [{start}, {end}]"
        )));
    }
    Ok((a.max(start), b.min(end)))
}

/// Integral over `[a, b]` of the piecewise-linear interpolant of
/// `(times, values)`: the trapezoid rule, with partial end intervals clipped.
pub fn trapezoid_window(times: &[f64], values: &[f64], a: f64, b: f64) -> Result<f64> {
    if times.len() != values.len() || times.len() < 2 {
        return Err(Error::shape("trapezoid needs >= 2 matching samples"));
    }
    let (a, b) = clamp_window(times[0], times[times.len() - 1], a, b)?;
    let mut total = 0.0;
    for i in 0..times.len() - 1 {
        let (t0, t1) = (times[i], times[i + 1]);
        let lo = a.max(t0);
        let hi = b.min(t1);
        if hi <= lo {
            continue;
        }
        let slope = (values[i + 1] - values[i]) / (t1 - t0);
        let f_lo = values[i] + slope * (lo - t0);
        let f_hi = values[i] + slope * (hi - t0);
        total += 0.5 * (hi - lo) * (f_lo + f_hi);
    }
    Ok(total)
}

/// Linear interpolation of a sampled series at `t`.
pub fn interpolate(times: &[f64], values: &[f64], t: f64) -> Result<f64> {
    let n = times.len();
    if n == 0 || n != values.len() {
        return Err(Error::shape("interpolation needs matching samples"));
    }
    let tol = 1e-12 * (1.0 + t.abs());
    if t < times[0] - tol || t > times[n - 1] + tol {
        return Err(Error::window(format!(
            "time {t} outside [{}, {}]",
            times[0],
            times[n - 1]
        )));
    }
    if let Some(i) = times.iter().position(|&s| (s - t).abs() <= tol) {
        return Ok(values[i]);
    }
    let i = times.iter().rposition(|&s| s <= t).unwrap_or(0).min(n - 2);
    let w = (t - times[i]) / (times[i + 1] - times[i]);
    Ok(values[i] + w * (values[i + 1] - values[i]))
}

/// `∫` over the cylinder's time window of a per-snapshot spatial functional.
///
/// The functional receives each needed snapshot and the cylinder's ball; time
/// integration is the trapezoid rule with linear clipping at the window ends.
pub fn space_time_integral<F>(slab: &SpaceTimeSlab, cyl: &ParabolicCylinder, integrand: F) -> Result<f64>
where
    F: Fn(&Snapshot, &Ball) -> Result<f64> + Sync + Send,
{
    let (a, b) = cyl.time_window();
    let (a, b) = slab.clamp_window(a, b)?;
    let (lo, hi) = slab.bracket(a, b);
    let snaps = &slab.snapshots()[lo..=hi];
    let values: Vec<f64> = exec::map_collect(snaps.len(), |i| integrand(&snaps[i], &cyl.ball))
        .into_iter()
        .collect::<Result<_>>()?;
    let times: Vec<f64> = snaps.iter().map(|s| s.time()).collect();
    trapezoid_window(&times, &values, a, b)
}

impl SpaceTimeSlab {
    fn region_values(&self, region: &Region, lo: usize, hi: usize, integrand: Integrand) -> Result<Vec<f64>> {
        let grid = self.grid();
        let cells = region_cells(grid, region)?;
        let values = exec::map_collect(hi - lo + 1, |i| {
            let s = &self.snapshots[lo + i];
            let (v, p) = (s.velocity(), s.pressure().values());
            sum_cells(grid, &cells, |idx| integrand.eval(v.at(idx), p[idx]))
        });
        Ok(values)
    }
}

impl SpaceTimeSource for SpaceTimeSlab {
    fn time_span(&self) -> (f64, f64) {
        (self.t_start(), self.t_end())
    }

    fn spacing(&self) -> Option<f64> {
        Some(self.grid().spacing())
    }

    fn max_time_step(&self) -> Option<f64> {
        Some(SpaceTimeSlab::max_time_step(self))
    }

    fn check_region(&self, region: &Region) -> Result<()> {
        match region {
            Region::Ball(b) => super::quadrature::check_ball_fits(self.grid(), b),
            Region::Everywhere => Ok(()),
        }
    }

    fn slice_integral(&self, region: &Region, t: f64, integrand: Integrand) -> Result<f64> {
        let (lo, hi) = self.bracket(t, t);
        let times: Vec<f64> = self.snapshots[lo..=hi].iter().map(|s| s.time()).collect();
        let values = self.region_values(region, lo, hi, integrand)?;
        interpolate(&times, &values, t)
    }

    fn window_integral(&self, region: &Region, window: (f64, f64), integrand: Integrand) -> Result<f64> {
        let (a, b) = self.clamp_window(window.0, window.1)?;
        let (lo, hi) = self.bracket(a, b);
        let times: Vec<f64> = self.snapshots[lo..=hi].iter().map(|s| s.time()).collect();
        let values = self.region_values(region, lo, hi, integrand)?;
        trapezoid_window(&times, &values, a, b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn const_slab(times: &[f64], speed: f64) -> SpaceTimeSlab {
        let g = Grid::periodic_2pi(16).unwrap();
        let snaps = times
            .iter()
            .map(|&t| {
                Snapshot::new(
                    t,
                    VectorField::from_fn(g, |_| [speed, 0.0, 0.0]).unwrap(),
                    ScalarField::zeros(g),
                )
                .unwrap()
            })
            .collect();
        SpaceTimeSlab::new(snaps).unwrap()
    }

    #[test]
    fn slab_invariants() {
        let g = Grid::periodic_2pi(8).unwrap();
        let s = |t| Snapshot::new(t, VectorField::zeros(g), ScalarField::zeros(g)).unwrap();
        assert!(matches!(SpaceTimeSlab::new(vec![s(0.0)]), Err(Error::Window(_))));
        assert!(SpaceTimeSlab::new(vec![s(1.0), s(0.5)]).is_err());
        assert!(SpaceTimeSlab::new(vec![s(0.0), s(0.0)]).is_err());
        assert!(SpaceTimeSlab::new(vec![s(0.0), s(0.5)]).is_ok());
    }

    #[test]
    fn solenoidal_check() {
        let g = Grid::periodic_2pi(8).unwrap();
        let div_free = VectorField::from_fn(g, |x| [x[1].sin(), 0.0, 0.0]).unwrap();
        let compressive = VectorField::from_fn(g, |x| [x[0].sin(), 0.0, 0.0]).unwrap();
        assert!(Snapshot::solenoidal(0.0, div_free, ScalarField::zeros(g), DEFAULT_DIV_TOL).is_ok());
        assert!(Snapshot::solenoidal(0.0, compressive, ScalarField::zeros(g), DEFAULT_DIV_TOL).is_err());
    }

    #[test]
    fn trapezoid_is_exact_on_linear_and_clips() {
        let times = [0.0, 0.3, 0.5, 1.0];
        let vals: Vec<f64> = times.iter().map(|t| 2.0 * t + 1.0).collect();
        let exact = |a: f64, b: f64| (b * b + b) - (a * a + a);
        for (a, b) in [(0.0, 1.0), (0.1, 0.9), (0.31, 0.32), (0.5, 1.0)] {
            let v = trapezoid_window(&times, &vals, a, b).unwrap();
            assert!((v - exact(a, b)).abs() < 1e-14, "{a} {b}");
        }
        assert!(trapezoid_window(&times, &vals, 0.5, 0.5).is_err());
        assert!(trapezoid_window(&times, &vals, -0.5, 0.5).is_err());
    }

    #[test]
    fn integrand_one_gives_cylinder_volume() {
        let slab = const_slab(&[-1.0, -0.5, 0.0], 0.0);
        let cyl = ParabolicCylinder::new([0.0; 3], 0.0, 1.0).unwrap();
        let g = *slab.grid();
        let vol = space_time_integral(&slab, &cyl, |_, ball| {
            Ok(super::super::quadrature::ball_cells(&g, ball)?.len() as f64 * g.cell_volume())
        })
        .unwrap();
        // one unit of time over the lattice ball
        let cells = super::super::quadrature::ball_cells(&g, &cyl.ball).unwrap().len() as f64;
        assert!((vol - cells * g.cell_volume()).abs() < 1e-12, "{vol}");
        let zero = space_time_integral(&slab, &cyl, |_, _| Ok(0.0)).unwrap();
        assert_eq!(zero, 0.0);
    }

    #[test]
    fn empty_window_is_an_error() {
        let slab = const_slab(&[0.0, 1.0], 1.0);
        let cyl = ParabolicCylinder::new([0.0; 3], 3.0, 1.0).unwrap();
        assert!(matches!(
            space_time_integral(&slab, &cyl, |_, _| Ok(1.0)),
            Err(Error::Window(_))
        ));
    }

    #[test]
    fn time_linear_integrand_is_exact() {
        let slab = const_slab(&[0.0, 0.2, 0.7, 1.0, 1.3], 1.0);
        let cyl = ParabolicCylinder::new([0.0; 3], 1.15, 1.0).unwrap();
        let v = space_time_integral(&slab, &cyl, |s, _| Ok(3.0 * s.time())).unwrap();
        let (a, b) = (0.15, 1.15);
        assert!((v - 1.5 * (b * b - a * a)).abs() < 1e-14);
    }
}
