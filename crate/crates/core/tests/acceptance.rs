//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

use std::f64::consts::TAU;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use nsrl::diagnostics::{
    ckn_scan, criterion_profile, energy_residual, good_slices, vorticity_harmonic_check, Stencil, TestFunction,
    TimeSeries, WindowFamily,
};
use nsrl::field::analytic::{sample_slab, ExactSampler, FnField, TaylorGreen, TimeRule};
use nsrl::field::{AnalyticField, Ball, Grid, Region, SampleMode, ScalarField, Snapshot, VectorField};
use nsrl::pressure::{harmonic_interior_ratio, periodic_poisson_pressure, split_pressure, SplitDomain};
use nsrl::rescale::{
    harmonic_part_vanishing, scaling_identity_exact, scaling_identity_gridded, ProfileShape, SyntheticProfile,
    ZoomParams,
};
use nsrl::solver::{run, InitialCondition, SolverConfig};

// Tolerances.
const C1_VELOCITY: f64 = 1e-6;
const C1_PRESSURE_REL: f64 = 1e-8;
const C1_SECONDS: f64 = 30.0;
const C2_TOL_E: f64 = 2e-5;
const C2_RATE: f64 = 1.8;
const C3_EXACT: f64 = 1e-10;
const C3_GRIDDED: f64 = 1e-2;
const C4_TRIALS: usize = 1000;
const C5_EXPONENT: f64 = 0.015;
const C5_PROXY_REL: f64 = 0.01;
const C6_SLOPE: f64 = 2.5;
const C7_CZ_VARIATION: f64 = 0.10;
const C7_PERIODIC: f64 = 1e-6;
const C7_BALL: f64 = 1e-3;
const C7_RATIO: f64 = 0.487_310_500_771_048;
const C7_RATIO_REL: f64 = 0.01;
const C8_TARGET: f64 = 1.0;
const C8_TOL: f64 = 0.2;
const C9_LAP: f64 = 1e-12;

struct Values<'a>(&'a [f64]);

impl std::fmt::LowerExp for Values<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|v| format!("{v:.3e}")).collect();
        write!(f, "[{}]", parts.join(", "))
    }
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn tg() -> TaylorGreen {
    TaylorGreen { wavenumber: 1.0, amplitude: 1.0 }
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let grid = Grid::periodic_2pi(32).unwrap();
    let cfg = SolverConfig::new(grid, 1e-3, 0.1, 100, InitialCondition::TaylorGreen { amplitude: 1.0 });
    let slab = run(&cfg).unwrap();
    let last = slab.snapshots().last().unwrap();
    let exact_v = VectorField::from_fn(grid, |x| tg().velocity(x, last.time())).unwrap();
    let exact_p = ScalarField::from_fn(grid, |x| tg().pressure(x, last.time()).unwrap()).unwrap();
    let ev = last.velocity().max_diff(&exact_v).unwrap();
    let p = periodic_poisson_pressure(last.velocity()).unwrap();
    let ep = p.max_diff(&exact_p).unwrap() / exact_p.max_abs();
    let secs = start.elapsed().as_secs_f64();
    outcome(
        (last.time() - 0.1).abs() < 1e-12 && ev <= C1_VELOCITY && ep <= C1_PRESSURE_REL && secs < C1_SECONDS,
        format!("t={} |v-v*|={ev:.2e} (<= {C1_VELOCITY:e}) |p-p*|/|p*|={ep:.2e} (<= {C1_PRESSURE_REL:e}) {secs:.1}s", last.time()),
    )
}

fn criterion_2() -> Outcome {
    let grid = Grid::periodic_2pi(32).unwrap();
    let phis = [
        TestFunction::new("c", [0.0; 3], 1.5, 0.0, 0.2),
        TestFunction::new("o", [0.7, -0.4, 0.2], 1.2, 0.05, 0.15),
        TestFunction::new("w", [1.0, 1.0, 0.0], 2.0, 0.0, 0.3),
        TestFunction::new("s", [-1.2, 0.3, -0.5], 1.3, 0.1, 0.1),
        TestFunction::new("l", [0.2, 0.2, 1.5], 1.8, 0.0, 0.25),
    ];
    let tol_at = |dt: f64| {
        let steps = (0.4 / dt).round() as usize;
        let times: Vec<f64> = (0..=steps).map(|i| i as f64 * dt).collect();
        let slab = sample_slab(&tg(), grid, &times).unwrap();
        phis.iter()
            .map(|phi| energy_residual(&slab, phi, 0.4).unwrap().residual.abs())
            .fold(0.0, f64::max)
    };
    let coarse = tol_at(0.01);
    let fine = tol_at(0.005);
    let rate = (coarse / fine).log2();
    outcome(
        fine <= C2_TOL_E && rate >= C2_RATE,
        format!("tol_E(0.01)={coarse:.2e} tol_E(0.005)={fine:.2e} (<= {C2_TOL_E:e}) rate={rate:.2} (>= {C2_RATE})"),
    )
}

fn criterion_3() -> Outcome {
    let mut worst_exact: f64 = 0.0;
    for r in [1.0, 0.5, 0.25] {
        let p = ZoomParams::new(r, -0.5).unwrap().at([0.3, -0.2, 0.1], 0.7);
        let rep = scaling_identity_exact(&tg(), &p, 0.5, 0.05, TimeRule::uniform(4)).unwrap();
        worst_exact = worst_exact.max(rep.average_rel).max(rep.ckn_rel).max(rep.pressure_rel.unwrap());
    }
    let grid = Grid::periodic_2pi(64).unwrap();
    let times: Vec<f64> = (0..=40).map(|i| i as f64 * 0.01).collect();
    let slab = sample_slab(&tg(), grid, &times).unwrap();
    let mut worst_grid: f64 = 0.0;
    for r in [1.0, 0.5, 0.25] {
        let p = ZoomParams::new(r, -0.25).unwrap().at([0.0; 3], 0.4);
        let target = Grid::new(64, TAU / r).unwrap();
        let rep = scaling_identity_gridded(&slab, &p, 0.5, &target, SampleMode::Trilinear).unwrap();
        worst_grid = worst_grid.max(rep.average_rel).max(rep.ckn_rel);
    }
    outcome(
        worst_exact <= C3_EXACT && worst_grid <= C3_GRIDDED,
        format!("exact max rel={worst_exact:.2e} (<= {C3_EXACT:e}) gridded max rel={worst_grid:.2e} (<= {C3_GRIDDED:e})"),
    )
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut failures = 0;
    let mut worst_slack = f64::NEG_INFINITY;
    for _ in 0..C4_TRIALS {
        let t_k = -rng.gen_range(0.1..5.0);
        let k = rng.gen_range(4..60);
        let mut inner: Vec<f64> = (0..k).map(|_| rng.gen_range(t_k..0.0)).collect();
        inner.sort_by(f64::total_cmp);
        inner.dedup();
        let mut times = vec![t_k];
        times.extend(inner.into_iter().filter(|&t| t > t_k && t < 0.0));
        times.push(0.0);
        let values: Vec<f64> = times
            .iter()
            .map(|_| {
                if rng.gen_bool(0.15) {
                    rng.gen_range(0.0..200.0)
                } else {
                    rng.gen_range(0.0..2.0)
                }
            })
            .collect();
        let average: f64 = times.windows(2).zip(&values).map(|(w, v)| v * (w[1] - w[0])).sum::<f64>() / -t_k;
        let m = average.max(1e-9) * rng.gen_range(1.0..3.0);
        let interval = times.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
        let g = TimeSeries::new(times, values).unwrap();
        match good_slices(&g, t_k, m) {
            Ok(r) => {
                let bound = -t_k / 10.0 + interval;
                worst_slack = worst_slack.max(r.e_k_measure - bound);
                if !(r.precondition_holds && r.e_k_measure <= bound && r.g_at_sk <= 10.0 * m) {
                    failures += 1;
                }
            }
            Err(_) => failures += 1,
        }
    }
    outcome(
        failures == 0,
        format!("{C4_TRIALS} step functions, failures={failures}, max(|E_k| - bound)={worst_slack:.3e}"),
    )
}

fn criterion_5() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (alpha, target) in [(0.4, 0.3), (0.5, 0.0), (0.6, -0.3)] {
        let p = SyntheticProfile::new(alpha, ProfileShape::CurlBump, 0.0).unwrap();
        let s = ExactSampler::new(p, 0.05, TimeRule::graded(30, 0.5), (-1.0, 0.0)).unwrap();
        let prof = criterion_profile(&s, 0.0, &Region::Everywhere, &WindowFamily::default()).unwrap();
        let e = prof.fitted_exponent.unwrap_or(f64::NAN);
        pass &= (e - target).abs() <= C5_EXPONENT;
        if alpha == 0.5 {
            let rel = (prof.big_m_proxy - prof.m_proxy) / prof.big_m_proxy;
            pass &= rel <= C5_PROXY_REL;
            parts.push(format!("a=0.5: {e:+.4} (M-m)/M={rel:.1e}"));
        } else {
            parts.push(format!("a={alpha}: {e:+.4}"));
        }
    }
    outcome(pass, format!("{} (target 3/2-3a +- {C5_EXPONENT})", parts.join(", ")))
}

fn criterion_6() -> Outcome {
    let grid = Grid::new(64, 1.6).unwrap();
    let cfg = SolverConfig::new(grid, 0.004, 0.2, 1, InitialCondition::TaylorGreen { amplitude: 1.0 });
    let slab = run(&cfg).unwrap();
    let r = ckn_scan(&slab, [0.0; 3], 0.2, &[0.4, 0.2, 0.1], 1.0).unwrap();
    let slope = r.fitted_slope.unwrap_or(f64::NAN);
    let decreasing = r.values.windows(2).all(|w| w[1] < w[0]);
    outcome(
        slope >= C6_SLOPE && decreasing,
        format!("C(R)={:.3e} slope={slope:.2} (>= {C6_SLOPE}) decreasing={decreasing}", Values(&r.values)),
    )
}

type VelocityFn = Box<dyn Fn([f64; 3]) -> [f64; 3] + Sync + Send>;

fn criterion_7() -> Outcome {
    let fields: [(&str, VelocityFn); 3] = [
        ("taylor-green", Box::new(|x| tg().velocity(x, 0.0))),
        ("abc", Box::new(|x| [x[2].sin() + x[1].cos(), x[0].sin() + x[2].cos(), x[1].sin() + x[0].cos()])),
        (
            "tg+shear",
            Box::new(|x| {
                let v = tg().velocity(x, 0.0);
                [v[0] + 0.5 * (2.0 * x[1]).sin(), v[1], v[2] + (x[0]).cos()]
            }),
        ),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, f) in &fields {
        let cz = |n: usize| {
            let g = Grid::periodic_2pi(n).unwrap();
            let v = VectorField::from_fn(g, f).unwrap();
            let s = Snapshot::new(0.0, v, ScalarField::zeros(g)).unwrap();
            split_pressure(&s, SplitDomain::Periodic).unwrap().cz_ratio
        };
        let (a, b) = (cz(32), cz(64));
        let var = (a - b).abs() / b;
        pass &= var < C7_CZ_VARIATION;
        parts.push(format!("{name} cz {a:.4}/{b:.4}"));
    }
    let g = Grid::periodic_2pi(64).unwrap();
    let times = [0.0, 0.1];
    let slab = sample_slab(&tg(), g, &times).unwrap();
    let s = &slab.snapshots()[0];
    let gauged = s.with_pressure(s.pressure().map(|x| x + 1.0).unwrap()).unwrap();
    let per = split_pressure(&gauged, SplitDomain::Periodic).unwrap();
    let per_rel = per.harmonic_residual / per.p2_max;
    let ball = split_pressure(&gauged, SplitDomain::Ball { ball: Ball::centered(2.0).unwrap() }).unwrap();
    let ball_rel = ball.harmonic_residual / ball.p2_max;
    pass &= per_rel <= C7_PERIODIC && ball_rel <= C7_BALL;
    let g3 = Grid::new(64, 3.0).unwrap();
    let x1 = ScalarField::from_fn(g3, |x| x[0]).unwrap();
    let ratio =
        harmonic_interior_ratio(&x1, &Ball::centered(1.0).unwrap(), &Ball::centered(2.0 / 3.0).unwrap()).unwrap();
    let ratio_rel = (ratio - C7_RATIO).abs() / C7_RATIO;
    pass &= ratio_rel <= C7_RATIO_REL;
    outcome(
        pass,
        format!(
            "{}; periodic res/|p2|={per_rel:.1e} ball res/|p2|={ball_rel:.1e} ratio(x1)={ratio:.4} ({ratio_rel:.1e} rel)",
            parts.join(", ")
        ),
    )
}

fn criterion_8() -> Outcome {
    let gamma = 0.6;
    let fixture = FnField {
        velocity: |_x: [f64; 3], _t: f64| [0.0; 3],
        pressure: move |x: [f64; 3], t: f64| Some((1.0 + x[0]) * t.abs().powf(-gamma)),
    };
    let base = ZoomParams::new(1.0, -1.0).unwrap();
    let r = harmonic_part_vanishing(&fixture, &base, &[0.5, 0.25, 0.125], 1.0, 0.05, TimeRule::graded(40, 0.5)).unwrap();
    let e = r.fitted_exponent.unwrap_or(f64::NAN);
    outcome(
        (e - C8_TARGET).abs() <= C8_TOL && r.decreasing,
        format!("values={:.4?} exponent={e:.3} (target {C8_TARGET} +- {C8_TOL})", r.values),
    )
}

fn criterion_9() -> Outcome {
    let g = Grid::periodic_2pi(32).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst_lap: f64 = 0.0;
    let mut worst_omega: f64 = 0.0;
    for _ in 0..20 {
        let c: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
        // gradients of x³-3xy², xyz, x²-y², z³-3zx², yz, x
        let u = VectorField::from_fn(g, |p| {
            let [x, y, z] = p;
            [
                c[0] * (3.0 * x * x - 3.0 * y * y) + c[1] * y * z + c[2] * 2.0 * x - c[3] * 6.0 * z * x + c[5],
                c[0] * (-6.0 * x * y) + c[1] * x * z - c[2] * 2.0 * y + c[4] * z,
                c[1] * x * y + c[3] * (3.0 * z * z - 3.0 * x * x) + c[4] * y,
            ]
        })
        .unwrap();
        let r = vorticity_harmonic_check(&u, &Stencil::Central { ball: Ball::centered(1.0).unwrap() }).unwrap();
        worst_lap = worst_lap.max(r.max_lap);
        worst_omega = worst_omega.max(r.max_omega);
    }
    outcome(
        worst_lap <= C9_LAP,
        format!("20 fields, max|curl u|={worst_omega:.1e} max|lap u|={worst_lap:.1e} (<= {C9_LAP:e})"),
    )
}

fn nsrl(dir: &Path, args: &[&str], threads: Option<&str>) -> std::process::Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_nsrl"));
    cmd.current_dir(dir).args(args);
    match threads {
        Some(t) => cmd.env("NSRL_THREADS", t),
        None => cmd.env_remove("NSRL_THREADS"),
    };
    cmd.output().expect("run nsrl")
}

fn run_pipeline(dir: &Path, threads: Option<&str>) -> (Vec<Vec<u8>>, serde_json::Value) {
    std::fs::write(
        dir.join("sim.cfg"),
        "n = 16\nbox_length = 1.0\ndt = 0.01\nt_end = 0.2\noutput_stride = 2\ninit = random\nseed = 11\n",
    )
    .unwrap();
    std::fs::write(
        dir.join("diag.cfg"),
        "epsilon = 0.5\ncriterion_radius = 0.4\nwindow_delta = 0.16\nwindow_count = 3\nckn_centers = 0,0,0; 0.2,0,0\nckn_radii = 0.4, 0.3\n",
    )
    .unwrap();
    let out = nsrl(dir, &["simulate", "sim.cfg", "--out", "run.json"], threads);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = nsrl(dir, &["diagnose", "run.json", "diag.cfg", "--out", "report.json"], threads);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let mut names: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n.ends_with(".nsrs"))
        .collect();
    names.sort();
    let bytes = names.iter().map(|n| std::fs::read(dir.join(n)).unwrap()).collect();
    let report = serde_json::from_slice(&std::fs::read(dir.join("report.json")).unwrap()).unwrap();
    (bytes, report)
}

fn criterion_10() -> Outcome {
    let dirs: Vec<_> = (0..3).map(|_| tempfile::tempdir().unwrap()).collect();
    let a = run_pipeline(dirs[0].path(), None);
    let b = run_pipeline(dirs[1].path(), Some("1"));
    let c = run_pipeline(dirs[2].path(), Some("4"));
    let same_bytes = a.0 == b.0 && b.0 == c.0 && !a.0.is_empty();
    let same_reports = a.1 == b.1 && b.1 == c.1;
    outcome(
        same_bytes && same_reports,
        format!(
            "{} snapshots byte-identical={same_bytes}, reports identical={same_reports} (default, NSRL_THREADS=1, NSRL_THREADS=4)",
            a.0.len()
        ),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 10] = [
        ("solver exactness", criterion_1),
        ("energy identity", criterion_2),
        ("scaling identities", criterion_3),
        ("good-slice lemma", criterion_4),
        ("criticality dichotomy", criterion_5),
        ("CKN decay for smooth data", criterion_6),
        ("pressure split", criterion_7),
        ("harmonic-part vanishing", criterion_8),
        ("vorticity identity", criterion_9),
        ("reproducibility", criterion_10),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = f();
        let tag = if o.pass { "PASS" } else { "FAIL" };
        if !o.pass {
            failed += 1;
        }
        println!(
            "criterion {:>2} {tag} {name}: {} [{:.1}s]",
            i + 1,
            o.detail,
            start.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
