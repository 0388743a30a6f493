//! Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
//! fails. Runs with `cargo test --test acceptance`.

use std::process::Command;
use std::time::{Duration, Instant};

use nalgebra::Matrix4;
use plus_cli::config::AircraftConfig;
use plus_core::actuator::{default_servo, simulate_commands, step_response_trace, ServoModel};
use plus_core::aero::{AeroCoefficients, AltitudeRow, Plant};
use plus_core::controller::{
    build_schedule, phugoid_frequency, required_sigma, FrequencyConvention, MatchingContext, ScheduleOptions,
};
use plus_core::powerline::{solve_catenary_from_sag, wire_magnetic_field, CatenarySpec, PowerlineProfile};
use plus_core::sim::{clearance_metrics, integrate, propagate, wavelength_surface, SimConfig};
use plus_core::sweep::delta_cl_max;
use plus_core::sysid::{fit_all, generate_multistep, FitOptions, ModelStructure};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

type Check = fn() -> Outcome;

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn trim_plant() -> Plant {
    Plant::reference(AltitudeRow::ClimbRate)
}

/// Slowest complex eigenpair of the (u, w, q, θ) block.
fn phugoid_eigen(plant: &Plant) -> (f64, f64) {
    let a = plant.a;
    let m = Matrix4::from_fn(|i, j| a[i][j]);
    m.complex_eigenvalues()
        .iter()
        .filter(|z| z.im > 0.0)
        .map(|z| (z.re, z.im))
        .min_by(|p, q| p.0.hypot(p.1).total_cmp(&q.0.hypot(q.1)))
        .expect("complex pair")
}

fn c1_eigen_consistency() -> Outcome {
    let plant = trim_plant();
    let (_, im) = phugoid_eigen(&plant);
    let w = phugoid_frequency(&plant.derivatives(), 0.0, FrequencyConvention::Classical).unwrap();
    let rel = (w - im).abs() / im;
    outcome(rel <= 0.20, format!("omega = {w:.4} rad/s, |Im lambda| = {im:.4} rad/s, rel diff {rel:.3} (tol 0.20)"))
}

fn c2_matching_round_trip() -> Outcome {
    let d = trim_plant().derivatives();
    let u0 = 25.0;
    let span = CatenarySpec::from_sag(70.0, 0.02, 30.0).unwrap();
    let mut worst = 0.0f64;
    let mut counts = Vec::new();
    for (lo, hi) in [(-0.032, 0.055), (-1.0, 1.0)] {
        let ctx = MatchingContext::new(d, u0, span, lo, hi);
        let mut unsaturated = 0;
        for k in 1..=140 {
            let x = 0.5 * k as f64;
            let sol = required_sigma(&ctx, x).unwrap();
            if sol.saturated {
                continue;
            }
            unsaturated += 1;
            let want = u0 * x / (span.a * (((x - 35.0) / span.a).cosh()));
            let got = ctx.frequency(sol.sigma).unwrap();
            worst = worst.max((got - want).abs() / want);
        }
        counts.push(unsaturated);
    }
    outcome(
        worst <= 1e-8 && counts.iter().all(|&c| c > 0),
        format!("max rel err {worst:.2e} over {} + {} unsaturated samples (tol 1e-8)", counts[0], counts[1]),
    )
}

fn bisect_sag(l: f64, sag: f64) -> f64 {
    let f = |a: f64| a * ((l / (2.0 * a)).cosh() - 1.0) - sag * l;
    let (mut lo, mut hi) = (l / 50.0, 1e6 * l);
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn c3_catenary_sag() -> Outcome {
    let mut worst_res = 0.0f64;
    let mut worst_cross = 0.0f64;
    for l in [40.0, 70.0, 100.0, 300.0, 500.0] {
        for pct in 1..=5 {
            let sag = pct as f64 / 100.0;
            let a = solve_catenary_from_sag(l, sag).unwrap();
            let res = (a * ((l / (2.0 * a)).cosh() - 1.0) - sag * l).abs() / l;
            worst_res = worst_res.max(res);
            worst_cross = worst_cross.max((a - bisect_sag(l, sag)).abs() / a);
        }
    }
    outcome(
        worst_res <= 1e-9 && worst_cross <= 1e-6,
        format!("max residual {worst_res:.2e}·L (tol 1e-9·L), max rel diff to bisection {worst_cross:.2e}"),
    )
}

fn c4_tracking() -> Outcome {
    let plant = trim_plant();
    let span = CatenarySpec::from_sag(70.0, 0.02, 30.0).unwrap();
    let profile = PowerlineProfile::uniform(span, 4).unwrap();
    let ctx = MatchingContext::new(plant.derivatives(), 25.0, span, -0.032, 0.055);
    let schedule = build_schedule(&ctx, &profile, &ScheduleOptions::default()).unwrap();
    let traj = integrate(&plant, &schedule, &profile, &SimConfig::default()).unwrap();
    let m = clearance_metrics(&traj, &profile, 30.0).unwrap();
    let troughs: Vec<String> = m.spans.iter().filter_map(|s| s.trough_clearance).map(|c| format!("{c:.2}")).collect();
    let spans = m.spans.len();
    outcome(
        m.alternates() && m.fraction_under_1m >= 0.20 && spans >= 3,
        format!(
            "(a) trough clearances [{}] m, alternating {}; (b) fraction under 1 m {:.3} over {} spans (floor 0.20, >= 3 spans)",
            troughs.join(", "),
            m.alternates(),
            m.fraction_under_1m,
            spans
        ),
    )
}

fn run_sweep(jobs: usize, dir: &std::path::Path) -> (Vec<u8>, Duration) {
    let t = Instant::now();
    let status = Command::new(env!("CARGO_BIN_EXE_plus"))
        .args(["--seed", "7", "--jobs", &jobs.to_string(), "--out-dir"])
        .arg(dir)
        .arg("sweep")
        .stderr(std::process::Stdio::null())
        .stdout(std::process::Stdio::null())
        .status()
        .expect("run plus");
    assert!(status.success(), "sweep exited with {status}");
    (std::fs::read(dir.join("sweep.csv")).unwrap(), t.elapsed())
}

fn c5_sweep() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let (one, _) = run_sweep(1, &tmp.path().join("j1"));
    let (eight, t8) = run_sweep(8, &tmp.path().join("j8"));
    let rows = one.iter().filter(|&&b| b == b'\n').count() - 1;
    outcome(
        rows == 4500 && one == eight && t8 < Duration::from_secs(600),
        format!(
            "{rows} rows (want 4500), jobs 1 vs 8 identical: {}, jobs-8 wall time {:.1} s (budget 600 s)",
            one == eight,
            t8.as_secs_f64()
        ),
    )
}

fn c6_delta_cl() -> Outcome {
    let model = AeroCoefficients { cl0: 0.2, cl_alpha: 4.5, cl_mu: 1.1, cd0: 0.03, ..Default::default() };
    let a0 = 0.05;
    let zero = delta_cl_max(&[0.0; 50], &[a0; 50], &model, a0).unwrap().value;
    let sigma: Vec<f64> = (0..50).map(|k| 0.04 * (k as f64 * 0.2).sin()).collect();
    let d = delta_cl_max(&sigma, &[a0; 50], &model, a0).unwrap();
    let err = (d.value - 1.1 * d.sigma_bar).abs();
    outcome(
        zero == 0.0 && err <= 1e-12,
        format!("zero case {zero:e} (exact 0), affine case error {err:.1e} (tol 1e-12)"),
    )
}

fn c7_actuator() -> Outcome {
    let servo = default_servo();
    let dt = 1e-3;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut commands = Vec::with_capacity(10_000);
    let mut c = 0.0;
    for k in 0..10_000 {
        if k % 50 == 0 {
            c = rng.random_range(-30.0..30.0);
        }
        commands.push(c);
    }
    let max_rate = |model: &ServoModel| {
        let trace = simulate_commands(model, &commands, dt).unwrap();
        trace.windows(2).map(|w| (w[1].output - w[0].output).abs() / dt).fold(0.0, f64::max)
    };
    let rate = max_rate(&servo);
    // a slower servo on the same trace, so the limit is reached
    let tight = ServoModel { slew_limit: 60.0, ..servo };
    let tight_rate = max_rate(&tight);
    let slew_ok = rate <= servo.output_slew() && tight_rate <= tight.output_slew();
    let binds = tight_rate >= 0.999 * tight.output_slew();

    let step = step_response_trace(&servo, 3.0, 10.0, dt).unwrap();
    let fin = servo.gain * 3.0;
    let peak = step.iter().map(|s| s.output).fold(f64::MIN, f64::max);
    let overshoot = peak / fin - 1.0;
    let z: f64 = servo.zeta;
    let classical = (-std::f64::consts::PI * z / (1.0 - z * z).sqrt()).exp();
    let os_rel = (overshoot - classical).abs() / classical;

    let first = step.iter().position(|s| s.output != 0.0).unwrap();
    let delay = (first - 1) as f64 * dt;
    let delay_ok = (delay - 0.05).abs() <= dt;
    outcome(
        slew_ok && binds && os_rel <= 0.01 && delay_ok,
        format!(
            "max rate {rate:.3} <= {:.3}/s, slowed servo {tight_rate:.4} <= {:.4}/s (limit reached: {binds}); overshoot {:.4} vs {classical:.4} (rel {os_rel:.1e}, tol 0.01); delay {delay:.3} s (0.05 +- {dt})",
            servo.output_slew(),
            tight.output_slew(),
            overshoot
        ),
    )
}

fn c8_sysid() -> Outcome {
    let servo = default_servo();
    let rec = generate_multistep(3.0, 6, 2.0, &servo, 0.0, 0, 120.0).unwrap();
    let fits = fit_all(&rec, &FitOptions::default()).unwrap();
    let acc = |m: ModelStructure| fits.iter().find(|f| f.structure == m).unwrap().accuracy;
    let full = fits.iter().find(|f| f.structure == ModelStructure::SecondOrderDelay).unwrap();
    let p = full.parameters;
    let zeta = p.zeta.unwrap();
    let wn = p.omega_n.unwrap();
    let delay = p.delay.unwrap();
    let dt = rec.dt();
    let (a1, a2, a3) =
        (acc(ModelStructure::FirstOrder), acc(ModelStructure::SecondOrder), acc(ModelStructure::SecondOrderDelay));
    let ok = (zeta / 0.45 - 1.0).abs() <= 0.02
        && (wn / servo.omega_n - 1.0).abs() <= 0.02
        && (delay - 0.05).abs() <= dt
        && a3 > 99.0
        && a1 < a2
        && a2 < a3;
    outcome(
        ok,
        format!(
            "zeta {zeta:.4} (0.45 +- 2%), f_n {:.4} Hz (1.0 +- 2%), delay {delay:.4} s (0.05 +- {dt:.4}); accuracy {a1:.1} < {a2:.1} < {a3:.2} %",
            wn / (2.0 * std::f64::consts::PI)
        ),
    )
}

fn c9_field() -> Outcome {
    let b = wire_magnetic_field(628.0, 1.0).unwrap() * 1e6;
    outcome((b - 125.6).abs() <= 0.1, format!("B = {b:.3} uT (125.6 +- 0.1)"))
}

fn c10_rk4_order() -> Outcome {
    let plant = trim_plant();
    let (_, im) = phugoid_eigen(&plant);
    let period = 2.0 * std::f64::consts::PI / im;
    let x0 = [1.0, 0.0, 0.0, 0.0, 0.0];
    let run = |n: usize| propagate(&plant, 0.0, &x0, period / n as f64, n);
    let (a, b, c) = (run(800), run(1600), run(3200));
    let dist = |p: &[f64; 5], q: &[f64; 5]| (0..5).map(|i| (p[i] - q[i]).powi(2)).sum::<f64>().sqrt();
    let order = (dist(&a, &b) / dist(&b, &c)).log2();
    outcome(order >= 3.9, format!("observed order {order:.3} over one period ({period:.2} s) (min 3.9)"))
}

fn c11_wavelength_asymmetry() -> Outcome {
    let a = AircraftConfig::default();
    let pts = wavelength_surface(
        &a.airfoil().unwrap(),
        a.morph_mode,
        &a.calibration,
        &a.geometry(),
        &[1.4],
        &[0.254],
        &[-0.14, 0.0, 0.14],
        &a.derivatives,
    )
    .unwrap();
    let (thin, base, thick) = (pts[0].wavelength, pts[1].wavelength, pts[2].wavelength);
    let (up, down) = ((thick - base).abs(), (base - thin).abs());
    outcome(
        up > down,
        format!("lambda(-14%) {thin:.2} m, lambda(0) {base:.2} m, lambda(+14%) {thick:.2} m: |thicken| {up:.2} > |thin| {down:.2}"),
    )
}

fn main() {
    let criteria: [(&str, Check, Duration); 11] = [
        ("1 eigen-consistency", c1_eigen_consistency, Duration::from_secs(1)),
        ("2 matching round trip", c2_matching_round_trip, Duration::from_secs(1)),
        ("3 catenary sag solve", c3_catenary_sag, Duration::from_secs(1)),
        ("4 tracking scenario", c4_tracking, Duration::from_secs(10)),
        ("5 sweep cardinality/determinism", c5_sweep, Duration::from_secs(1200)),
        ("6 delta C_L,m cases", c6_delta_cl, Duration::from_secs(1)),
        ("7 actuator", c7_actuator, Duration::from_secs(1)),
        ("8 sysid inverse crime", c8_sysid, Duration::from_secs(30)),
        ("9 magnetic field", c9_field, Duration::from_millis(1)),
        ("10 RK4 convergence", c10_rk4_order, Duration::from_secs(5)),
        ("11 wavelength asymmetry", c11_wavelength_asymmetry, Duration::from_secs(1)),
    ];
    let mut failed = 0;
    for (name, check, budget) in criteria {
        let t = Instant::now();
        let o = check();
        let elapsed = t.elapsed();
        let in_time = elapsed <= budget;
        let pass = o.pass && in_time;
        failed += usize::from(!pass);
        println!(
            "{} criterion {name}: {} [{:.3} s, budget {:.3} s]",
            if pass { "PASS" } else { "FAIL" },
            o.detail,
            elapsed.as_secs_f64(),
            budget.as_secs_f64()
        );
    }
    println!("acceptance: {} passed, {failed} failed", 11 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
