//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Criterion 11 is reported as two lines. `11a` (Cauchy behaviour of
//! `C₁(κ)/κ`) is a known failure of the formula itself and is listed in
//! `KNOWN_FAILURES`; any other failure makes the run exit nonzero.

use std::time::Instant;

use num_rational::BigRational;
use num_traits::Signed;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tentcocycle::bound_calculator::{
    asymptotic_bound, basic_constants, frequency_threshold, in_g_p, spectral_gap_bound, FrequencyOptions,
};
use tentcocycle::cone_metric::{cone_contains, d_adapted_verify, theta, ConeParams};
use tentcocycle::interval_maps::{PairedTentParams, SecondIterate};
use tentcocycle::markov_analysis::{
    char_poly_verify, exact_lambda2, invariant_density, solve_kappa, spectral_radius, adjacency_exact,
};
use tentcocycle::rds_cocycle::{
    contraction_schedule, eta_bracket, first_contraction_time, lambda2_power_iteration,
    pullback_density, push_forward_normalized, CocycleOptions, DrivingStream,
};
use tentcocycle::sampling::{cone_element, signed_step_function, unit_parameter};
use tentcocycle::step_functions::{ly_check, pf_apply, StepFunction};

type Q = BigRational;

const KNOWN_FAILURES: &[&str] = &["11a"];

struct Outcome {
    id: &'static str,
    pass: bool,
    detail: String,
}

fn outcome(id: &'static str, pass: bool, detail: String) -> Vec<Outcome> {
    vec![Outcome { id, pass, detail }]
}

fn c1_charpoly() -> Vec<Outcome> {
    let t = Instant::now();
    let bad: Vec<u32> = (1..=12).filter(|n| !char_poly_verify(*n).unwrap_or(false)).collect();
    let secs = t.elapsed().as_secs_f64();
    outcome("1", bad.is_empty() && secs < 10.0, format!("mismatches at n = {bad:?}, {secs:.2} s"))
}

fn c2_spectral_radius() -> Vec<Outcome> {
    let mut worst = 0.0_f64;
    for n in 1..=12 {
        let a = adjacency_exact(n).unwrap();
        let (lo, hi) = spectral_radius(&a, 1e-14, 1_000_000);
        let target = 2.0 + 2.0 * solve_kappa(n).unwrap();
        worst = worst.max((lo - target).abs()).max((hi - target).abs());
    }
    outcome("2", worst <= 1e-9, format!("max |rho - (2+2kappa)| = {worst:.2e}"))
}

fn c3_sharpness() -> Vec<Outcome> {
    let ratios: Vec<f64> = (5..=12).map(|n| exact_lambda2(n).unwrap().ratio_to_minus_2kappa).collect();
    let decreasing = ratios.windows(2).all(|w| w[1] < w[0]);
    let pass = decreasing && ratios[7] <= 1.01 && (ratios[0] - 1.20).abs() <= 0.01;
    outcome(
        "3",
        pass,
        format!("ratio(5) = {:.4}, ratio(12) = {:.4}, decreasing = {decreasing}", ratios[0], ratios[7]),
    )
}

fn random_quadruple(rng: &mut ChaCha8Rng, small: bool) -> SecondIterate<Q> {
    let den = if small { 40 } else { 20 };
    let mut p = || {
        let e: Q = unit_parameter(rng, den);
        if small { e / Q::from_integer(2.into()) } else { e }
    };
    let now = PairedTentParams::new(p(), p()).unwrap();
    let next = PairedTentParams::new(p(), p()).unwrap();
    SecondIterate::new(now, next).unwrap()
}

fn c4_lasota_yorke() -> Vec<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut general_bad, mut sharp_bad, mut sharp_cases) = (0, 0, 0);
    let cases = 10_000;
    for i in 0..cases {
        let si = random_quadruple(&mut rng, i % 2 == 0);
        let f: StepFunction<Q> = signed_step_function(&mut rng, 12, 16);
        let c = ly_check(&si, &f);
        general_bad += usize::from(!c.general_holds);
        if let Some(h) = c.sharp_holds {
            sharp_cases += 1;
            sharp_bad += usize::from(!h);
        }
    }
    outcome(
        "4",
        general_bad == 0 && sharp_bad == 0 && sharp_cases > 0,
        format!("{cases} exact cases: {general_bad} general violations, {sharp_bad}/{sharp_cases} sharp violations"),
    )
}

fn c5_cone_preservation() -> Vec<Outcome> {
    let cone = ConeParams::new(120.0, 0.8).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut bad = 0;
    let cases = 10_000;
    for _ in 0..cases {
        let si = random_quadruple(&mut rng, false);
        let f: StepFunction<Q> = cone_element(&mut rng, cone.a, 16, 120);
        if !cone_contains(&pf_apply(&si.map, &f), &cone, cone.nu) {
            bad += 1;
        }
    }
    outcome("5", bad == 0, format!("{cases} exact cases: {bad} images outside C_(nu a)"))
}

fn c6_contraction() -> Vec<Outcome> {
    let stream = DrivingStream::constant(1.0, 1.0).unwrap();
    let cone = ConeParams::default();
    let report = spectral_gap_bound(&stream, &cone).unwrap();
    let opts = CocycleOptions::default();
    let factor = (report.d_p / 4.0).tanh();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut interior = || {
        let f: StepFunction<f64> = cone_element(&mut rng, cone.a, 16, 120);
        f.shift(&(0.05 * f.l1()))
    };
    let mut worst = f64::NEG_INFINITY;
    let mut pairs = 0;
    while pairs < 100 {
        let (v, w) = (interior(), interior());
        let before = theta(&v, &w, &cone).unwrap();
        if !before.is_finite() || before == 0.0 {
            continue;
        }
        pairs += 1;
        let pv = push_forward_normalized(&stream, 0, report.k_p as usize, &v, &opts);
        let pw = push_forward_normalized(&stream, 0, report.k_p as usize, &w, &opts);
        let after = theta(&pv, &pw, &cone).unwrap();
        worst = worst.max(after - factor * before);
    }
    outcome(
        "6",
        worst <= 1e-8,
        format!("k_P = {}, D_P = {:.3}, max excess over {pairs} pairs = {worst:.2e}", report.k_p, report.d_p),
    )
}

fn c7_equivariant_density() -> Vec<Outcome> {
    let opts = CocycleOptions::default();
    let mut details = Vec::new();
    let mut pass = true;
    for n in [1u32, 5] {
        let model = exact_lambda2(n).unwrap();
        let stream = DrivingStream::constant(model.kappa, model.kappa).unwrap();
        let exact = invariant_density(&model);
        let v = pullback_density(&stream, 0, 60, &StepFunction::<f64>::one(), &opts).unwrap();
        let v = v.density.scale(&(1.0 / v.density.integral()));
        let dist = v.l1_distance(&exact);
        let start = first_contraction_time::<f64>(&stream, -60, 60, &opts).unwrap_or(1);
        let incs: Vec<f64> = (start.max(2)..=60)
            .map(|d| pullback_density(&stream, 0, d, &StepFunction::<f64>::one(), &opts).unwrap().cauchy_increment)
            .collect();
        // Increments at the level of rounding noise are not ordered.
        let floor = 1e-13;
        let monotone = incs.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9) || w[1] <= floor);
        pass &= dist <= 1e-6 && monotone;
        details.push(format!("n={n}: L1 = {dist:.2e}, increments monotone from depth {start} = {monotone}"));
    }
    outcome("7", pass, details.join("; "))
}

fn c8_eta() -> Vec<Outcome> {
    let stream = DrivingStream::iid(&[(1.0, 0.5, 0.5), (0.25, 1.0, 0.5)], 8).unwrap();
    let opts = CocycleOptions { pullback_depth: 40, ..CocycleOptions::default() };
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (mut monotone, mut worst_v, mut worst_rel) = (true, 0.0_f64, 0.0_f64);
    for i in 0..100 {
        let x: StepFunction<f64> = signed_step_function(&mut rng, 10, 32);
        let e = eta_bracket(&stream, i, &x, 30, &opts).unwrap();
        monotone &= e.monotone;
        worst_v = worst_v.max((e.eta_of_v - 1.0).abs());
        let scale = x.integral().abs().max(x.l1());
        worst_rel = worst_rel.max((e.eta * e.integral_of_v - x.integral()).abs() / scale);
    }
    outcome(
        "8",
        monotone && worst_v <= 1e-6 && worst_rel <= 1e-6,
        format!("monotone = {monotone}, max |eta(v)-1| = {worst_v:.2e}, max relative integral error = {worst_rel:.2e}"),
    )
}

fn c9_lambda2_cross() -> Vec<Outcome> {
    let opts = CocycleOptions::default();
    let mut worst = 0.0_f64;
    let mut slowest = 0.0_f64;
    for n in 5..=8 {
        let model = exact_lambda2(n).unwrap();
        let stream = DrivingStream::constant(model.kappa, model.kappa).unwrap();
        let t = Instant::now();
        let est = lambda2_power_iteration::<f64>(&stream, 0, 400, 1, &opts).unwrap();
        slowest = slowest.max(t.elapsed().as_secs_f64());
        worst = worst.max((est.lambda2 - model.lambda2).abs());
    }
    outcome("9", worst <= 0.01 && slowest < 5.0, format!("max |error| = {worst:.2e}, slowest run {slowest:.2} s"))
}

fn c10_bound_validity() -> Vec<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let (mut nonneg, mut above, mut checked) = (0, 0, 0);
    let cones = [ConeParams::default(), ConeParams::new(60.0, 0.9).unwrap(), ConeParams::new(400.0, 0.77).unwrap()];
    for i in 0..100 {
        let cone = cones[i % cones.len()];
        let (stream, exact) = if i % 4 == 0 {
            let n = 1 + (i / 4) as u32 % 12;
            let m = exact_lambda2(n).unwrap();
            (DrivingStream::constant(m.kappa, m.kappa).unwrap(), Some(m.lambda2))
        } else if i % 2 == 0 {
            let len = rng.random_range(1..=6);
            let cycle: Vec<(f64, f64)> =
                (0..len).map(|_| (rng.random_range(0.05..=1.0), rng.random_range(0.05..=1.0))).collect();
            (DrivingStream::periodic(&cycle).unwrap(), None)
        } else {
            let rows = rng.random_range(1..=4);
            let table: Vec<(f64, f64, f64)> = (0..rows)
                .map(|_| {
                    let pick = |r: &mut ChaCha8Rng| if r.random_bool(0.3) { 0.0 } else { r.random_range(0.05..=1.0) };
                    (pick(&mut rng), pick(&mut rng), 1.0 / rows as f64)
                })
                .collect();
            match DrivingStream::iid(&table, i as u64) {
                Ok(s) if basic_constants(&s).is_ok() => (s, None),
                _ => (DrivingStream::constant(0.5, 0.5).unwrap(), None),
            }
        };
        let r = spectral_gap_bound(&stream, &cone).unwrap();
        nonneg += usize::from(!(r.c < 0.0));
        if let Some(l2) = exact {
            checked += 1;
            above += usize::from(l2 > r.c);
        }
    }
    outcome(
        "10",
        nonneg == 0 && above == 0,
        format!("100 cases: {nonneg} with C >= 0, {above}/{checked} exact lambda2 above C"),
    )
}

fn c11_asymptotic() -> Vec<Outcome> {
    let base = DrivingStream::constant(1.0, 1.0).unwrap();
    let cone = ConeParams::default();
    let th = frequency_threshold(&base, &FrequencyOptions::default()).unwrap();
    let vals: Vec<f64> = (5..=12)
        .map(|k| {
            let kappa = 2f64.powi(-k);
            asymptotic_bound(&base, &cone, kappa, &th).unwrap().c1_kappa / kappa
        })
        .collect();
    let ratios: Vec<f64> = vals.windows(2).map(|w| w[1] / w[0]).collect();
    let cauchy = ratios.iter().rev().take(2).all(|r| (r - 1.0).abs() <= 0.1);
    let negative = vals.iter().all(|v| *v < 0.0);
    let a = Outcome {
        id: "11a",
        pass: cauchy,
        detail: format!(
            "C1(kappa)/kappa at 2^-5..2^-12 = [{}]; last ratios {:.3?}",
            vals.iter().map(|v| format!("{v:.3e}")).collect::<Vec<_>>().join(", "),
            &ratios[ratios.len() - 2..]
        ),
    };

    let opts = CocycleOptions { burn_in: 50, ..CocycleOptions::default() };
    let pts: Vec<(f64, f64)> = (5..=10)
        .map(|n| {
            let kappa = solve_kappa(n).unwrap();
            let stream = base.with_kappa(kappa).unwrap();
            let est = lambda2_power_iteration::<f64>(&stream, 0, 600, 1, &opts).unwrap();
            (kappa.ln(), (-est.lambda2).ln())
        })
        .collect();
    let slope = fit_slope(&pts);
    let b = Outcome {
        id: "11b",
        pass: negative && (0.9..=1.1).contains(&slope),
        detail: format!("C1 < 0 at every kappa = {negative}; log-log slope of -lambda2 vs kappa = {slope:.4}"),
    };
    vec![a, b]
}

fn fit_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

fn c12_appendix() -> Vec<Outcome> {
    let cone = ConeParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let (mut tri_bad, mut adapt_bad) = (0, 0);
    let cases = 10_000;
    let half = Q::new(1.into(), 2.into());
    for _ in 0..cases {
        let f: StepFunction<Q> = signed_step_function(&mut rng, 12, 24);
        let g: StepFunction<Q> = signed_step_function(&mut rng, 12, 24);
        let lhs = (f.variation() - g.variation()).abs();
        tri_bad += usize::from(lhs > f.sub(&g).variation());

        let u: StepFunction<Q> = cone_element(&mut rng, cone.a, 12, 120);
        let w: StepFunction<Q> = cone_element(&mut rng, cone.a, 12, 120);
        let big = u.add(&w).scale(&half);
        let small = u.sub(&w).scale(&half);
        match d_adapted_verify(&big, &small, &cone) {
            Ok(r) if r.holds => {}
            _ => adapt_bad += 1,
        }
    }
    outcome(
        "12",
        tri_bad == 0 && adapt_bad == 0,
        format!("{cases} exact pairs: {tri_bad} variation violations, {adapt_bad} adaptedness violations"),
    )
}

fn c13_schedule() -> Vec<Outcome> {
    let mut bad = 0;
    let mut runs = 0;
    let streams = [
        DrivingStream::constant(1.0, 1.0).unwrap(),
        DrivingStream::periodic(&[(1.0, 0.0), (0.0, 0.0), (0.0, 1.0), (0.5, 0.5), (0.0, 0.0), (0.0, 0.0)]).unwrap(),
        DrivingStream::iid(&[(1.0, 0.0, 0.4), (0.0, 1.0, 0.4), (0.0, 0.0, 0.2)], 13).unwrap(),
    ];
    for stream in &streams {
        let r = spectral_gap_bound(stream, &ConeParams::default()).unwrap();
        for k_p in 1..=20usize {
            for horizon in [k_p, 100, 10_000] {
                let s = contraction_schedule(horizon, |i| in_g_p(stream, &r, i), k_p, r.d_p).unwrap();
                runs += 1;
                bad += usize::from(!(s.forward_ok && s.backward_ok));
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..40 {
        let density = rng.random_range(0.0..=1.0);
        let mask: Vec<bool> = (0..=20_001).map(|_| rng.random_bool(density)).collect();
        let k_p = rng.random_range(1..=20usize);
        let s = contraction_schedule(10_000, |i| mask[(i + 10_000) as usize], k_p, 50.0).unwrap();
        runs += 1;
        bad += usize::from(!(s.forward_ok && s.backward_ok));
    }
    outcome("13", bad == 0, format!("{runs} schedules: {bad} with a violated inequality"))
}

fn main() {
    let criteria: [fn() -> Vec<Outcome>; 13] = [
        c1_charpoly,
        c2_spectral_radius,
        c3_sharpness,
        c4_lasota_yorke,
        c5_cone_preservation,
        c6_contraction,
        c7_equivariant_density,
        c8_eta,
        c9_lambda2_cross,
        c10_bound_validity,
        c11_asymptotic,
        c12_appendix,
        c13_schedule,
    ];
    let mut unexpected = Vec::new();
    for run in criteria {
        let t = Instant::now();
        for o in run() {
            let tag = if o.pass { "PASS" } else { "FAIL" };
            let note = if !o.pass && KNOWN_FAILURES.contains(&o.id) { " (known)" } else { "" };
            println!("criterion {:>3}: {tag}{note} [{:.1} s] {}", o.id, t.elapsed().as_secs_f64(), o.detail);
            if !o.pass && !KNOWN_FAILURES.contains(&o.id) {
                unexpected.push(o.id);
            }
        }
    }
    if !unexpected.is_empty() {
        eprintln!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}
