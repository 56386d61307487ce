//! Dealiased pseudo-spectral Navier-Stokes integrator on the periodic box.
//!
//! Time stepping is classical RK4 on the integrating-factor variable
//! `e^{ν|k|²t} û`, so the viscous term is treated exactly. The nonlinear term
//! is `-P ∂_j(u_i u_j)` with the product formed in physical space and both
//! factors and product truncated by the 2/3 rule.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec;
use crate::field::analytic::{AnalyticField, TaylorGreen};
use crate::field::slab::DEFAULT_DIV_TOL;
use crate::field::spectral::Spectrum;
use crate::field::{Fft3, Grid, ScalarField, Snapshot, SpaceTimeSlab, VectorField};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Named initial-data generators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialCondition {
    /// Taylor-Green vortex with the box's fundamental wavenumber.
    TaylorGreen { amplitude: f64 },
    Zero,
    /// `(A sin(k x2), 0, 0)` with the fundamental wavenumber `k`.
    Shear { amplitude: f64 },
    /// Projected random Fourier modes with `|m|_max <= k_max`, scaled so that
    /// `max |v| = amplitude`.
    Random { seed: u64, amplitude: f64, k_max: usize },
}

impl InitialCondition {
    pub fn velocity(&self, grid: Grid) -> Result<VectorField> {
        let k = std::f64::consts::TAU / grid.box_length();
        match *self {
            InitialCondition::TaylorGreen { amplitude } => {
                let tg = TaylorGreen { wavenumber: k, amplitude };
                VectorField::from_fn(grid, |x| tg.velocity(x, 0.0))
            }
            InitialCondition::Zero => Ok(VectorField::zeros(grid)),
            InitialCondition::Shear { amplitude } => {
                VectorField::from_fn(grid, |x| [amplitude * (k * x[1]).sin(), 0.0, 0.0])
            }
            InitialCondition::Random { seed, amplitude, k_max } => random_solenoidal(grid, seed, amplitude, k_max),
        }
    }
}

fn random_solenoidal(grid: Grid, seed: u64, amplitude: f64, k_max: usize) -> Result<VectorField> {
    let fft = Fft3::new(grid);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let comps: Vec<ScalarField> = (0..3)
        .map(|_| {
            let spec: Spectrum = (0..grid.len())
                .map(|idx| {
                    let m = fft.mode_numbers(idx);
                    let (re, im): (f64, f64) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                    if m.iter().all(|&mi| mi <= k_max) && m != [0, 0, 0] {
                        let m2 = (m[0] * m[0] + m[1] * m[1] + m[2] * m[2]) as f64;
                        Complex64::new(re, im) / (1.0 + m2)
                    } else {
                        Complex64::default()
                    }
                })
                .collect();
            fft.to_field(spec)
        })
        .collect::<Result<_>>()?;
    let [a, b, c]: [ScalarField; 3] = comps.try_into().expect("three components");
    let v = leray_project(&VectorField::new([a, b, c])?)?;
    let peak = v.max_magnitude();
    if peak == 0.0 {
        return Err(Error::Degenerate("random initial field has no resolved modes".into()));
    }
    Ok(v.scaled(amplitude / peak))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub grid: Grid,
    pub dt: f64,
    #[serde(default)]
    pub t_start: f64,
    pub t_end: f64,
    pub output_stride: usize,
    pub initial_condition: InitialCondition,
    #[serde(default = "default_true")]
    pub dealias: bool,
    /// Advective Courant bound checked on the initial data.
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    /// Expert setting; the equations are posed with unit viscosity.
    #[serde(default = "default_viscosity")]
    pub viscosity: f64,
}

fn default_true() -> bool {
    true
}

fn default_cfl() -> f64 {
    0.5
}

fn default_viscosity() -> f64 {
    1.0
}

impl SolverConfig {
    pub fn new(grid: Grid, dt: f64, t_end: f64, output_stride: usize, initial_condition: InitialCondition) -> Self {
        SolverConfig {
            grid,
            dt,
            t_start: 0.0,
            t_end,
            output_stride,
            initial_condition,
            dealias: true,
            cfl: default_cfl(),
            viscosity: default_viscosity(),
        }
    }

    /// Number of time steps; a final partial step lands exactly on `t_end`.
    pub fn step_count(&self) -> usize {
        let ratio = (self.t_end - self.t_start) / self.dt;
        (ratio - 1e-9).ceil().max(0.0) as usize
    }

    /// Number of emitted snapshots, `ceil(steps / stride) + 1`.
    pub fn output_count(&self) -> usize {
        self.step_count().div_ceil(self.output_stride) + 1
    }

    fn validate(&self) -> Result<()> {
        let cfg = |key: &str, msg: String| Err(Error::Config { key: key.into(), msg });
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return cfg("dt", format!("must be positive, got {}", self.dt));
        }
        if self.output_stride == 0 {
            return cfg("output_stride", "must be >= 1".into());
        }
        if !(self.t_start.is_finite() && self.t_end.is_finite()) {
            return cfg("t_end", "must be finite".into());
        }
        if !(self.cfl > 0.0) {
            return cfg("cfl", format!("must be positive, got {}", self.cfl));
        }
        if !(self.viscosity >= 0.0 && self.viscosity.is_finite()) {
            return cfg("viscosity", format!("must be >= 0, got {}", self.viscosity));
        }
        Ok(())
    }
}

/// Removes the gradient part of `v` mode by mode.
pub fn leray_project(v: &VectorField) -> Result<VectorField> {
    let fft = Fft3::new(*v.grid());
    let mut s = fft.forward_vector(v);
    project_in_place(&fft, &mut s);
    let [a, b, c] = s;
    VectorField::new([fft.to_field(a)?, fft.to_field(b)?, fft.to_field(c)?])
}

fn project_in_place(fft: &Fft3, s: &mut [Spectrum; 3]) {
    let [a, b, c] = s;
    let n = a.len();
    let mut out = vec![[Complex64::default(); 3]; n];
    exec::fill(&mut out, |idx| {
        let k = fft.k_deriv(idx);
        let u = [a[idx], b[idx], c[idx]];
        let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
        if k2 == 0.0 {
            return u;
        }
        let kdotu = (k[0] * u[0] + k[1] * u[1] + k[2] * u[2]) / k2;
        [u[0] - k[0] * kdotu, u[1] - k[1] * kdotu, u[2] - k[2] * kdotu]
    });
    for (idx, u) in out.into_iter().enumerate() {
        a[idx] = u[0];
        b[idx] = u[1];
        c[idx] = u[2];
    }
}

const PAIRS: [(usize, usize); 6] = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)];

fn pair_index(i: usize, j: usize) -> usize {
    let (a, b) = if i <= j { (i, j) } else { (j, i) };
    PAIRS.iter().position(|&p| p == (a, b)).expect("valid pair")
}

/// Per-grid transform state shared by all steps of a run.
struct Integrator {
    fft: Fft3,
    keep: Option<Vec<bool>>,
    k2: Vec<f64>,
    viscosity: f64,
}

impl Integrator {
    fn new(grid: Grid, dealias: bool, viscosity: f64) -> Self {
        let fft = Fft3::new(grid);
        let n = grid.n();
        let keep = dealias.then(|| {
            exec::map_collect(grid.len(), |idx| fft.mode_numbers(idx).iter().all(|&m| 3 * m < n))
        });
        let k2 = exec::map_collect(grid.len(), |idx| fft.k2(idx));
        Integrator { fft, keep, k2, viscosity }
    }

    fn truncate(&self, s: &mut [Complex64]) {
        if let Some(keep) = &self.keep {
            s.iter_mut().zip(keep).for_each(|(z, &k)| {
                if !k {
                    *z = Complex64::default();
                }
            });
        }
    }

    fn physical(&self, s: &[Complex64]) -> Vec<f64> {
        let mut t = s.to_vec();
        self.truncate(&mut t);
        self.fft.inverse_real(t)
    }

    /// Spectra of the six distinct products `u_i u_j`, truncated.
    fn products(&self, s: &[Spectrum; 3]) -> Vec<Spectrum> {
        let u: Vec<Vec<f64>> = s.iter().map(|c| self.physical(c)).collect();
        PAIRS
            .iter()
            .map(|&(i, j)| {
                let prod: Vec<f64> = u[i].iter().zip(&u[j]).map(|(a, b)| a * b).collect();
                let mut spec = self.fft.forward_real(&prod);
                self.truncate(&mut spec);
                spec
            })
            .collect()
    }

    /// `-P ∂_j(u_i u_j)` in spectral space.
    fn nonlinear(&self, s: &[Spectrum; 3]) -> [Spectrum; 3] {
        let f = self.products(s);
        let mk = |i: usize| {
            let mut out = vec![Complex64::default(); self.k2.len()];
            exec::fill(&mut out, |idx| {
                let k = self.fft.k_deriv(idx);
                -I * (0..3).map(|j| k[j] * f[pair_index(i, j)][idx]).sum::<Complex64>()
            });
            out
        };
        let mut out = [mk(0), mk(1), mk(2)];
        project_in_place(&self.fft, &mut out);
        out
    }

    /// `p̂ = -k_i k_j (u_i u_j)^ / |k|^2`, zero mean.
    fn pressure(&self, s: &[Spectrum; 3]) -> Spectrum {
        let f = self.products(s);
        let mut out = vec![Complex64::default(); self.k2.len()];
        exec::fill(&mut out, |idx| {
            let k2 = self.k2[idx];
            if k2 == 0.0 {
                return Complex64::default();
            }
            let k = self.fft.k_deriv(idx);
            let mut acc = Complex64::default();
            for i in 0..3 {
                for j in 0..3 {
                    acc += k[i] * k[j] * f[pair_index(i, j)][idx];
                }
            }
            -acc / k2
        });
        out
    }

    fn decay(&self, tau: f64) -> Vec<f64> {
        self.k2.iter().map(|&k2| (-self.viscosity * k2 * tau).exp()).collect()
    }

    /// One IF-RK4 step in place.
    fn advance(&self, u: &mut [Spectrum; 3], dt: f64) {
        let e_half = self.decay(0.5 * dt);
        let e_full = self.decay(dt);
        let combine = |base: &[Spectrum; 3], f: &(dyn Fn(usize, usize, Complex64) -> Complex64 + Sync)| -> [Spectrum; 3] {
            std::array::from_fn(|a| {
                let mut out = vec![Complex64::default(); base[a].len()];
                exec::fill(&mut out, |idx| f(a, idx, base[a][idx]));
                out
            })
        };
        let n1 = self.nonlinear(u);
        let u1 = combine(u, &|a, idx, z| e_half[idx] * (z + 0.5 * dt * n1[a][idx]));
        let n2 = self.nonlinear(&u1);
        let u2 = combine(u, &|a, idx, z| e_half[idx] * z + 0.5 * dt * n2[a][idx]);
        let n3 = self.nonlinear(&u2);
        let u3 = combine(u, &|a, idx, z| e_full[idx] * z + dt * e_half[idx] * n3[a][idx]);
        let n4 = self.nonlinear(&u3);
        *u = combine(u, &|a, idx, z| {
            e_full[idx] * z
                + dt / 6.0
                    * (e_full[idx] * n1[a][idx] + 2.0 * e_half[idx] * (n2[a][idx] + n3[a][idx]) + n4[a][idx])
        });
    }

    fn snapshot(&self, u: &[Spectrum; 3], t: f64) -> Result<Snapshot> {
        let comps: Vec<Vec<f64>> = u.iter().map(|c| self.fft.inverse_real(c.clone())).collect();
        let p = self.fft.inverse_real(self.pressure(u));
        if comps.iter().chain(std::iter::once(&p)).any(|c| c.iter().any(|x| !x.is_finite())) {
            return Err(Error::Divergence { time: t });
        }
        let grid = *self.fft.grid();
        let [a, b, c]: [Vec<f64>; 3] = comps.try_into().expect("three components");
        Snapshot::new(
            t,
            VectorField::new([ScalarField::new(grid, a)?, ScalarField::new(grid, b)?, ScalarField::new(grid, c)?])?,
            ScalarField::new(grid, p)?,
        )
    }

    fn courant(&self, u: &[Spectrum; 3], dt: f64) -> f64 {
        let comps: Vec<Vec<f64>> = u.iter().map(|c| self.fft.inverse_real(c.clone())).collect();
        let speed = exec::max(comps[0].len(), |i| {
            (comps[0][i] * comps[0][i] + comps[1][i] * comps[1][i] + comps[2][i] * comps[2][i]).sqrt()
        });
        speed * dt / self.fft.grid().spacing()
    }

    fn check(&self, u: &[Spectrum; 3], dt: f64, t: f64) -> Result<()> {
        if u.iter().any(|c| c.iter().any(|z| !(z.re.is_finite() && z.im.is_finite()))) {
            return Err(Error::Divergence { time: t });
        }
        let courant = self.courant(u, dt);
        if courant.is_nan() {
            return Err(Error::Divergence { time: t });
        }
        if courant > 1.0 {
            return Err(Error::Stability { time: t, courant });
        }
        Ok(())
    }
}

/// Advances a solenoidal state by `dt` with unit viscosity and dealiasing.
pub fn step(state: &Snapshot, dt: f64) -> Result<Snapshot> {
    let div = crate::field::slab::max_divergence(state.velocity())?;
    if div > DEFAULT_DIV_TOL * state.velocity().max_abs().max(1.0) {
        return Err(Error::domain(format!("state is not solenoidal: max |div v| = {div:e}")));
    }
    let it = Integrator::new(*state.grid(), true, 1.0);
    let mut u = it.fft.forward_vector(state.velocity());
    it.check(&u, dt, state.time())?;
    it.advance(&mut u, dt);
    it.snapshot(&u, state.time() + dt)
}

/// Integrates `config` and returns every `output_stride`-th state plus the
/// final one.
pub fn run(config: &SolverConfig) -> Result<SpaceTimeSlab> {
    config.validate()?;
    let steps = config.step_count();
    if steps == 0 {
        return Err(Error::window(format!(
            "run from t = {} to t = {} produces a single snapshot",
            config.t_start, config.t_end
        )));
    }
    let it = Integrator::new(config.grid, config.dealias, config.viscosity);
    let v0 = leray_project(&config.initial_condition.velocity(config.grid)?)?;
    let mut u = it.fft.forward_vector(&v0);
    let courant = it.courant(&u, config.dt);
    if courant > config.cfl {
        return Err(Error::Config {
            key: "dt".into(),
            msg: format!("initial Courant number {courant:.3} exceeds cfl = {}", config.cfl),
        });
    }
    let mut snaps = vec![it.snapshot(&u, config.t_start)?];
    let mut t = config.t_start;
    for s in 1..=steps {
        let t_next = if s == steps { config.t_end } else { config.t_start + s as f64 * config.dt };
        it.check(&u, t_next - t, t)?;
        it.advance(&mut u, t_next - t);
        t = t_next;
        if s % config.output_stride == 0 || s == steps {
            snaps.push(it.snapshot(&u, t)?);
        }
    }
    SpaceTimeSlab::new(snaps)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tg_snapshot(n: usize, t: f64) -> Snapshot {
        crate::field::analytic::sample_snapshot(&TaylorGreen { wavenumber: 1.0, amplitude: 1.0 }, Grid::periodic_2pi(n).unwrap(), t)
            .unwrap()
    }

    #[test]
    fn projection_examples() {
        let g = Grid::periodic_2pi(16).unwrap();
        let shear = VectorField::from_fn(g, |x| [x[1].sin(), 0.0, 0.0]).unwrap();
        assert!(leray_project(&shear).unwrap().max_diff(&shear).unwrap() < 1e-14);
        let grad = VectorField::from_fn(g, |x| [x[0].cos(), 0.0, 0.0]).unwrap();
        assert!(leray_project(&grad).unwrap().max_abs() < 1e-14);
        let mixed = VectorField::from_fn(g, |x| [x[1].sin() + x[0].cos(), 0.0, 0.0]).unwrap();
        assert!(leray_project(&mixed).unwrap().max_diff(&shear).unwrap() < 1e-14);
    }

    #[test]
    fn projection_is_idempotent() {
        let v = random_solenoidal(Grid::periodic_2pi(16).unwrap(), 3, 1.0, 3).unwrap();
        let w = leray_project(&v).unwrap();
        assert!(w.max_diff(&v).unwrap() < 1e-14);
        assert!(crate::field::slab::max_divergence(&v).unwrap() < DEFAULT_DIV_TOL);
    }

    #[test]
    fn rest_state_stays_at_rest() {
        let g = Grid::periodic_2pi(8).unwrap();
        let s = Snapshot::new(0.0, VectorField::zeros(g), ScalarField::zeros(g)).unwrap();
        let next = step(&s, 0.01).unwrap();
        assert_eq!(next.velocity().max_abs(), 0.0);
        assert_eq!(next.pressure().max_abs(), 0.0);
    }

    #[test]
    fn taylor_green_single_step() {
        let s = tg_snapshot(16, 0.0);
        let next = step(&s, 0.01).unwrap();
        let exact = tg_snapshot(16, 0.01);
        assert!(next.velocity().max_diff(exact.velocity()).unwrap() < 1e-13);
    }

    #[test]
    fn beltrami_mode_decays_exactly() {
        let g = Grid::periodic_2pi(16).unwrap();
        let v = VectorField::from_fn(g, |x| [x[2].sin(), x[2].cos(), 0.0]).unwrap();
        let s = Snapshot::new(0.0, v.clone(), ScalarField::zeros(g)).unwrap();
        let next = step(&s, 0.05).unwrap();
        assert!(next.velocity().max_diff(&v.scaled((-0.05f64).exp())).unwrap() < 1e-14);
    }

    #[test]
    fn cfl_violation_is_reported() {
        let g = Grid::periodic_2pi(8).unwrap();
        let v = VectorField::from_fn(g, |x| [10.0 * x[1].sin(), 0.0, 0.0]).unwrap();
        let s = Snapshot::new(0.0, v, ScalarField::zeros(g)).unwrap();
        assert!(matches!(step(&s, 0.5), Err(Error::Stability { .. })));
    }

    #[test]
    fn degenerate_run_is_a_window_error() {
        let cfg = SolverConfig::new(Grid::periodic_2pi(8).unwrap(), 0.01, 0.0, 1, InitialCondition::Zero);
        assert!(matches!(run(&cfg), Err(Error::Window(_))));
    }

    #[test]
    fn output_count_and_times() {
        let cfg = SolverConfig::new(Grid::periodic_2pi(8).unwrap(), 0.01, 0.095, 3, InitialCondition::Zero);
        let slab = run(&cfg).unwrap();
        assert_eq!(slab.len(), cfg.output_count());
        assert_eq!(slab.len(), 5);
        assert_eq!(slab.t_end(), 0.095);
    }
}
