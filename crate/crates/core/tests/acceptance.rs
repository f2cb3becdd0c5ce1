//! Acceptance criteria 1-8. Runs without the libtest harness so that every
//! criterion prints exactly one PASS/FAIL line; exits non-zero on any failure.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tworay_core::boundary::{boundary_witness, gamma_maps, greens_residual, sign_convention};
use tworay_core::exec::Execution;
use tworay_core::extension::{
    normality_residual, profile_with_traces, random_domain_function, random_vector, selfadjoint_bc_residual_traces,
    ExtensionSpec,
};
use tworay_core::heat::{cosine_reduce, heat_probe, HeatConfig};
use tworay_core::models::{random_spec, random_unitary, s1, s2};
use tworay_core::operator::{CVector, UnitaryMap};
use tworay_core::ray::{default_nodes, DEFAULT_TRUNCATION};
use tworay_core::spectral::report::{probe_report, ProbeSettings};
use tworay_core::spectral::{
    counterexample_divergence, divergence_closed_form, eigen_scan, fit_slope, resolvent_norm_sweep, LambdaGrid,
    SweepOptions,
};

struct Outcome {
    passed: bool,
    detail: String,
}

fn check(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn model_s1() -> ExtensionSpec {
    s1(PI / 2.0, 0.0, 1.0)
}

fn boundary_space() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let m = default_nodes(DEFAULT_TRUNCATION);
    let (mut round_trip, mut green) = (0.0_f64, 0.0_f64);
    for dim in [1, 2, 4] {
        let mut previous = None;
        for _ in 0..200 {
            let f = random_vector(&mut rng, dim);
            let g = random_vector(&mut rng, dim);
            let u = boundary_witness(&f, &g, 0.0, 1.0, DEFAULT_TRUNCATION, m).unwrap();
            let d = gamma_maps(&u);
            round_trip = round_trip.max((d.y1 - f).norm()).max((d.y2 - g).norm());
            if let Some(v) = previous.take() {
                green = green.max(greens_residual(&u, &v).unwrap());
            }
            previous = Some(u);
        }
    }
    check(
        round_trip <= 1e-10 && green <= 1e-6,
        format!("round trip {round_trip:.2e} <= 1e-10, Green residual {green:.2e} <= 1e-6 ({:?})", sign_convention()),
    )
}

fn normality() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let m = default_nodes(DEFAULT_TRUNCATION);
    let (mut on, mut off) = (0.0_f64, 0.0_f64);
    for spec in [model_s1(), s2()] {
        for _ in 0..100 {
            let u = random_domain_function(&spec, &mut rng, DEFAULT_TRUNCATION, m).unwrap();
            on = on.max(normality_residual(&spec, &u).unwrap().lhs_sq_diff.abs());
        }
        for _ in 0..100 {
            let t1 = random_vector(&mut rng, spec.dim());
            let t2 = random_vector(&mut rng, spec.dim());
            let u = profile_with_traces(&mut rng, spec.a(), spec.b(), &t1, &t2, DEFAULT_TRUNCATION, m).unwrap();
            off = off.max(normality_residual(&spec, &u).unwrap().residual);
        }
    }
    check(
        on <= 1e-6 && off <= 1e-5,
        format!("domain |diff| {on:.2e} <= 1e-6, off-domain residual {off:.2e} <= 1e-5"),
    )
}

fn coupling_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut wrong = 0;
    for i in 0..500 {
        let dim = 1 + i % 4;
        let w = UnitaryMap::with_tol(random_unitary(&mut rng, dim), 1e-9).unwrap();
        let u1 = random_vector(&mut rng, dim);
        let mut u2 = w.apply(&u1);
        if rng.random_bool(0.5) {
            let d = random_vector(&mut rng, dim);
            let size = 10f64.powf(rng.random_range(-6.0..0.0));
            u2 += &d * c(size / d.norm(), 0.0);
        }
        let residual = selfadjoint_bc_residual_traces(&w, &u1, &u2);
        if (residual <= 1e-10) != ((&u2 - w.apply(&u1)).norm() <= 1e-9) {
            wrong += 1;
        }
    }
    check(wrong == 0, format!("{wrong} misclassified of 500"))
}

fn empty_point_spectrum() -> Outcome {
    let points = LambdaGrid::square(2.0, 41).points();
    let heat = cosine_reduce(&HeatConfig::new(8, PI / 3.0).unwrap()).unwrap();
    let found: usize = [model_s1(), s2(), heat]
        .iter()
        .map(|spec| eigen_scan(spec, &points, Execution::default()).iter().filter(|v| v.eigenfunction_exists).count())
        .sum();
    check(found == 0, format!("{found} eigenfunctions over 3 x {} points", points.len()))
}

fn resolvent_off_axis() -> Outcome {
    let spec = model_s1();
    let lambdas = [c(1.0, 0.0), c(-1.0, 0.0), c(0.5, 0.0), c(-0.5, 0.0), c(2.0, 0.0), c(1.0, 3.0), c(0.1, 0.0)];
    let rows = resolvent_norm_sweep(&spec, &lambdas, &SweepOptions::default()).unwrap();
    let mut residual = 0.0_f64;
    let mut rel = 0.0_f64;
    let mut obstructed = 0;
    for row in &rows[..6] {
        residual = residual.max(row.max_residual);
        obstructed += row.obstructed_count;
        let oracle = 1.0 / row.lambda[0].abs();
        rel = rel.max((row.norm_estimate - oracle).abs() / oracle);
    }
    let ratio = rows[6].norm_estimate / rows[0].norm_estimate;
    check(
        obstructed == 0 && residual <= 1e-5 && rel <= 0.25 && ratio >= 8.0,
        format!("residual {residual:.2e} <= 1e-5, norm rel. error {rel:.3} <= 0.25, ratio {ratio:.2} >= 8, {obstructed} obstructed"),
    )
}

fn divergence() -> Outcome {
    let spec = model_s1();
    let fstar = CVector::from_element(1, c(1.0, 0.0));
    let rows = counterexample_divergence(&spec, 0.7, &fstar, &[10.0, 100.0]).unwrap();
    let e10 = (rows[0].norm_sq - 8.500091).abs().max((rows[0].norm_sq - divergence_closed_form(10.0)).abs());
    let e100 = (rows[1].norm_sq - 98.5).abs().max((rows[1].norm_sq - divergence_closed_form(100.0)).abs());
    let slope = fit_slope(&counterexample_divergence(&spec, 0.7, &fstar, &[20.0, 40.0, 80.0]).unwrap());
    check(
        e10 <= 1e-5 && e100 <= 1e-4 && (slope - 1.0).abs() <= 0.01,
        format!("T=10 err {e10:.2e} <= 1e-5, T=100 err {e100:.2e} <= 1e-4, slope {slope:.6}"),
    )
}

fn extension_flags() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut wrong = 0;
    for i in 0..50 {
        let dim = 1 + i % 4;
        let rank2 = rng.random_range(0..=dim);
        if !random_spec(&mut rng, dim, 0, rank2).unwrap().maximal_normal() {
            wrong += 1;
        }
    }
    for i in 0..50 {
        let dim = 2 + i % 3;
        let r1 = rng.random_range(0..=dim);
        let r2 = (r1 + rng.random_range(1..=dim)) % (dim + 1);
        if random_spec(&mut rng, dim, r1, r2).unwrap().normal_extension_possible() {
            wrong += 1;
        }
    }
    check(wrong == 0, format!("{wrong} wrong flags of 100"))
}

fn heat_demo() -> Outcome {
    let settings = ProbeSettings::default();
    let report = heat_probe(&HeatConfig::new(8, PI / 3.0).unwrap(), &settings).unwrap();
    let failed: Vec<&str> = report.probe.assertions.iter().filter(|a| !a.passed).map(|a| a.name.as_str()).collect();
    let single = heat_probe(&HeatConfig::new(1, PI / 3.0).unwrap(), &settings).unwrap();
    let direct = probe_report(&s1(PI / 3.0, -1.0, 1.0), &settings).unwrap();
    let identical = format!("{:?}", single.probe) == format!("{direct:?}");
    check(
        failed.is_empty() && identical,
        format!(
            "{} of {} checks pass{}, single mode identical to scalar model: {identical}",
            report.probe.assertions.len() - failed.len(),
            report.probe.assertions.len(),
            if failed.is_empty() { String::new() } else { format!(" (failed: {})", failed.join(", ")) },
        ),
    )
}

type Criterion = (&'static str, fn() -> Outcome, Option<Duration>);

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("boundary space", boundary_space, Some(Duration::from_secs(30))),
        ("normality", normality, Some(Duration::from_secs(60))),
        ("coupling equivalence", coupling_equivalence, None),
        ("empty point spectrum", empty_point_spectrum, Some(Duration::from_secs(30))),
        ("resolvent off the axis", resolvent_off_axis, None),
        ("counterexample divergence", divergence, None),
        ("extension flags", extension_flags, None),
        ("heat demo", heat_demo, None),
    ];
    let mut all = true;
    for (i, (name, run, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let in_time = budget.is_none_or(|b| elapsed <= b);
        let passed = outcome.passed && in_time;
        all &= passed;
        let budget_note = budget.map(|b| format!(", budget {}s", b.as_secs())).unwrap_or_default();
        println!(
            "criterion {} {name}: {} - {} [{:.2}s{budget_note}]",
            i + 1,
            if passed { "PASS" } else { "FAIL" },
            outcome.detail,
            elapsed.as_secs_f64(),
        );
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
