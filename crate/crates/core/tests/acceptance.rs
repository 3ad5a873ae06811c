//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero when any fails.

use std::f64::consts::PI;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use halo_grating::ags::{log_log_slope, truncation_gap, verify_identities};
use halo_grating::bar_amplitude::oracle::{dimer_bar_amplitude_oracle, LateralAxis};
use halo_grating::bar_amplitude::{dimer_bar_amplitude, fit_effective_width, point_bar_amplitude};
use halo_grating::grating::{grating_function, linear_grid, pattern, pattern_from_amplitude};
use halo_grating::quadrature::{adaptive_semi_infinite, Tolerance};
use halo_grating::special::exp_integral_e1;
use halo_grating::surface::SurfaceSpec;
use halo_grating::{BarSpec, BeamState, DimerModel, FiniteModel, GratingGeometry, Particle};
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn check(cond: bool, detail: String) -> Outcome {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn beam() -> BeamState {
    BeamState::new(2.0 * 4.002603254, 1000.0, true).unwrap()
}

fn he2() -> DimerModel {
    DimerModel::calibrated_to_x2(2.8).unwrap()
}

fn bar() -> BarSpec {
    BarSpec::new(25.0).unwrap()
}

fn identity_suite() -> Outcome {
    let mut worst = 0.0f64;
    let mut failed = Vec::new();
    for seed in 0..100 {
        let model = FiniteModel::random_suite_member(seed).map_err(|e| e.to_string())?;
        let report = verify_identities(&model, 1e-10).map_err(|e| e.to_string())?;
        worst = worst.max(report.worst());
        if !report.all_passed() {
            failed.push(seed);
        }
    }
    check(
        failed.is_empty(),
        format!("100 models, worst residual {worst:.2e}, failing seeds {failed:?}"),
    )
}

fn truncation_scaling() -> Outcome {
    let eps = [1e-1, 1e-2, 1e-3, 1e-4, 1e-5];
    let mut details = Vec::new();
    let mut ok = true;
    for seed in 0..5 {
        let base = FiniteModel::random_suite_member(seed).map_err(|e| e.to_string())?;
        let mut lowest = Vec::new();
        let mut first = Vec::new();
        for &e in &eps {
            let gap = truncation_gap(&base.with_binding_scaled(e))
                .map_err(|e| e.to_string())?
                .ok_or("U_VV vanished")?;
            lowest.push(gap.lowest_order);
            first.push(gap.first_iteration);
        }
        let s1 = log_log_slope(&eps, &lowest);
        let s2 = log_log_slope(&eps, &first);
        ok &= (s1 - 1.0).abs() <= 0.1 && (s2 - 2.0).abs() <= 0.2;
        details.push(format!("{s1:.3}/{s2:.3}"));
    }
    check(ok, format!("slopes (lowest/first) over 4 decades: {}", details.join(" ")))
}

fn point_limit() -> Outcome {
    let model = DimerModel::calibrated_to_x2(0.01).unwrap();
    let b = beam();
    let scale = point_bar_amplitude(0.0, bar(), &b).norm();
    let mut worst = 0.0f64;
    for k in linear_grid(-1.0, 1.0, 401) {
        let d = dimer_bar_amplitude(k, bar(), &b, &model).map_err(|e| e.to_string())?;
        let p = point_bar_amplitude(k, bar(), &b);
        worst = worst.max((d - p).norm() / scale);
    }
    check(worst < 1e-3, format!("max |t_mol - t_point| / |t_point(0)| = {worst:.3e}"))
}

fn oracle_equivalence() -> Outcome {
    let model = he2();
    let b = beam();
    let start = Instant::now();
    let mut worst = 0.0f64;
    for k in linear_grid(0.05, 1.5, 10) {
        let fast = dimer_bar_amplitude(k, bar(), &b, &model).map_err(|e| e.to_string())?;
        let slow = dimer_bar_amplitude_oracle(k, bar(), &b, &model, LateralAxis::X2);
        worst = worst.max((fast - slow).norm() / slow.norm());
    }
    let secs = start.elapsed().as_secs_f64();
    check(
        worst < 1e-6 && secs <= 300.0,
        format!("10 samples, max relative difference {worst:.3e}, oracle time {secs:.1} s"),
    )
}

fn even_orders() -> Outcome {
    let geometry = GratingGeometry::symmetric(25.0, 100).unwrap();
    let grid = [0.0, 2.0 * PI / 50.0 * 2.0];
    let model = he2();
    let ratio = |p: Particle| -> Result<f64, String> {
        let pat = pattern(&geometry, &beam(), p, &grid).map_err(|e| e.to_string())?;
        Ok(pat.order(2).unwrap().intensity / pat.order(1).unwrap().intensity)
    };
    let point = ratio(Particle::Point)?;
    let dimer = ratio(Particle::Dimer(&model))?;
    check(
        point < 1e-12 && dimer > 1e-4,
        format!("I2/I1 point {point:.3e}, calibrated dimer {dimer:.6e}"),
    )
}

fn suppression_trend() -> Outcome {
    let model = he2();
    let b = beam();
    let mut ratios = Vec::new();
    for n in [1, 3, 5] {
        let k = 2.0 * PI * n as f64 / 50.0;
        let d = dimer_bar_amplitude(k, bar(), &b, &model).map_err(|e| e.to_string())?;
        ratios.push(d.norm_sqr() / point_bar_amplitude(k, bar(), &b).norm_sqr());
    }
    let ok = ratios.windows(2).all(|w| w[1] < w[0]) && ratios.iter().all(|&r| r < 1.0);
    check(ok, format!("|t_mol/t_point|^2 at n=1,3,5: {ratios:.4?}"))
}

fn effective_width() -> Outcome {
    let cal = fit_effective_width(&he2(), bar(), 0.15, 201).map_err(|e| e.to_string())?;
    let near_point = DimerModel::calibrated_to_x2(0.01).unwrap();
    let small = fit_effective_width(&near_point, bar(), 0.15, 201).map_err(|e| e.to_string())?;
    check(
        (cal.delta - 2.8).abs() <= 0.5 && small.delta.abs() < 0.05,
        format!("delta calibrated {:.4} nm, near-point {:.5} nm", cal.delta, small.delta),
    )
}

fn wavefunction_analytics() -> Outcome {
    let model = he2();
    let kappa = model.kappa().unwrap();
    let tol = Tolerance::new(1e-18, 1e-12);
    let radial = |f: &dyn Fn(f64) -> f64| adaptive_semi_infinite(f, 0.0, 1.0 / kappa, tol, 4000).value;
    let norm = radial(&|r| 4.0 * PI * r * r * model.density(r));
    let mut ff = 0.0f64;
    for q in [0.01, 0.05, 0.1, 0.3, 1.0, 3.0] {
        let numeric = radial(&|r| {
            let qr = q * r;
            let j0 = if qr == 0.0 { 1.0 } else { qr.sin() / qr };
            4.0 * PI * r * r * model.density(r) * j0
        });
        let closed = (2.0 * kappa / q) * (q / (2.0 * kappa)).atan();
        ff = ff.max((numeric - closed).abs());
    }
    let mut marginal = 0.0f64;
    for x in [0.05f64, 0.5, 2.0, 5.6, 15.0, 40.0] {
        let numeric = adaptive_semi_infinite(
            |p| 2.0 * PI * p * model.density((x * x + p * p).sqrt()),
            0.0,
            x.max(1.0 / kappa),
            tol,
            4000,
        )
        .value;
        let closed = kappa * exp_integral_e1(2.0 * kappa * x);
        marginal = marginal.max((numeric - closed).abs() / closed);
    }
    check(
        ff < 1e-8 && marginal < 1e-6 && (norm - 1.0).abs() < 1e-6,
        format!(
            "form factor {ff:.2e}, marginal {marginal:.2e} rel, normalization {:.2e}",
            (norm - 1.0).abs()
        ),
    )
}

fn grating_function_checks() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let k: f64 = rng.random_range(-2.0..2.0);
        let d: f64 = rng.random_range(20.0..200.0);
        let n: usize = rng.random_range(1..=200);
        let centre = (n as f64 - 1.0) / 2.0;
        let sum: Complex<f64> = (0..n)
            .map(|j| Complex::from_polar(1.0, k * d * (j as f64 - centre)))
            .sum();
        let g = grating_function(k, d, n);
        worst = worst.max((sum - Complex::new(g, 0.0)).norm() / n as f64);
    }
    let mut peaks_ok = true;
    for n in [1usize, 2, 7, 100, 101] {
        for order in -12i64..=12 {
            let k = 2.0 * PI * order as f64 / 50.0;
            let expect = if n % 2 == 0 && order % 2 != 0 { -(n as f64) } else { n as f64 };
            peaks_ok &= grating_function(k, 50.0, n) == expect;
        }
    }
    let b = beam();
    let peaks = |n: usize| -> Result<Vec<f64>, String> {
        let geometry = GratingGeometry::symmetric(25.0, n).unwrap();
        let p = pattern_from_amplitude(50.0, &[0.0, 0.7], |k| {
            Ok(point_bar_amplitude(k, geometry.bar(), &b) * grating_function(k, 50.0, n))
        })
        .map_err(|e| e.to_string())?;
        Ok(p.orders.iter().map(|o| o.intensity).collect())
    };
    let (p50, p100) = (peaks(50)?, peaks(100)?);
    let mut scaling = 0.0f64;
    for (a, c) in p50.iter().zip(&p100) {
        if *a > 1e-20 {
            scaling = scaling.max((c / a / 4.0 - 1.0).abs());
        }
    }
    check(
        worst < 1e-10 && peaks_ok && scaling < 1e-6,
        format!("max |diff|/N {worst:.2e}, peaks +-N {peaks_ok}, N^2 scaling error {scaling:.2e}"),
    )
}

fn surface_limits() -> Outcome {
    let geometry = GratingGeometry::new(100.0, 50.0, 100, 100.0, 0.0).unwrap();
    let grid = linear_grid(0.0, 0.4, 201);
    let free = SurfaceSpec::new(0.0, geometry, 1000.0, 0.5).unwrap();
    let geo = free.geometric_pattern(&grid).map_err(|e| e.to_string())?;
    let atom = free.atomic_pattern(&grid).map_err(|e| e.to_string())?;
    let peak = geo.intensity.iter().cloned().fold(0.0, f64::max);
    let mut zero_c3 = 0.0f64;
    for (a, g) in atom.intensity.iter().zip(&geo.intensity) {
        zero_c3 = zero_c3.max((a - g).abs() / peak);
    }
    for (a, g) in atom.orders.iter().zip(&geo.orders) {
        if g.intensity > 1e-12 * peak {
            zero_c3 = zero_c3.max((a.intensity - g.intensity).abs() / g.intensity);
        }
    }

    let mut linear = 0.0f64;
    for alpha in [0.0, 8.0] {
        let g = GratingGeometry::new(100.0, 50.0, 100, 100.0, alpha).unwrap();
        let base = SurfaceSpec::new(0.1, g, 1000.0, 0.5).unwrap();
        let double_c3 = SurfaceSpec::new(0.2, g, 1000.0, 0.5).unwrap();
        let half_v = SurfaceSpec::new(0.1, g, 500.0, 0.5).unwrap();
        for x in [-24.0, -10.0, 0.0, 3.3, 20.0, 24.4] {
            let p = base.eikonal_phase(x).unwrap();
            linear = linear.max((double_c3.eikonal_phase(x).unwrap() / (2.0 * p) - 1.0).abs());
            linear = linear.max((half_v.eikonal_phase(x).unwrap() / (2.0 * p) - 1.0).abs());
        }
    }

    let ratio = |alpha: f64| -> Result<f64, String> {
        let g = GratingGeometry::new(100.0, 50.0, 100, 100.0, alpha).unwrap();
        let s = SurfaceSpec::new(0.1, g, 1000.0, 0.5).unwrap();
        let p = s.atomic_pattern(&[0.0, 0.13]).map_err(|e| e.to_string())?;
        Ok(p.order(2).unwrap().intensity / p.order(1).unwrap().intensity)
    };
    let (r0, r8) = (ratio(0.0)?, ratio(8.0)?);
    let change = (r8 / r0 - 1.0).abs();
    check(
        zero_c3 < 1e-12 && linear < 1e-12 && change > 0.01,
        format!(
            "C3=0 deviation {zero_c3:.2e}, phase linearity {linear:.2e}, I2/I1 {r0:.5e} (0 deg) vs {r8:.5e} (8 deg), change {:.1}%",
            100.0 * change
        ),
    )
}

fn read_dir_sorted(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap())
        })
        .collect();
    files.sort();
    files
}

fn determinism() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_halo-grating");
    let configs = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    let runs: [(&str, &[&str]); 6] = [
        ("fig2.cfg", &["pattern"]),
        ("fig2.cfg", &["bar"]),
        ("fig3.cfg", &["fit-width"]),
        ("surface.cfg", &["surface"]),
        ("fig2.cfg", &["verify-ags", "--seeds", "10"]),
        ("fig2.cfg", &["--point", "pattern"]),
    ];
    let mut compared = 0;
    for (cfg, args) in runs {
        let mut outputs = Vec::new();
        for _ in 0..2 {
            let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
            let out = Command::new(bin)
                .arg("--config")
                .arg(configs.join(cfg))
                .arg("--out")
                .arg(dir.path())
                .args(args)
                .output()
                .map_err(|e| e.to_string())?;
            if !out.status.success() {
                return Err(format!("{args:?} exited with {}", out.status));
            }
            outputs.push((out.stdout, read_dir_sorted(dir.path())));
        }
        if outputs[0] != outputs[1] {
            return Err(format!("{args:?} differs between runs"));
        }
        compared += outputs[0].1.len();
    }
    Ok(format!("6 commands run twice, stdout and {compared} output files byte-identical"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("transition-operator identities", identity_suite),
        ("truncation scaling", truncation_scaling),
        ("point limit of the dimer amplitude", point_limit),
        ("dimer amplitude vs 3-D oracle", oracle_equivalence),
        ("even-order reappearance", even_orders),
        ("odd-order suppression trend", suppression_trend),
        ("effective bar width", effective_width),
        ("halo wavefunction analytics", wavefunction_analytics),
        ("grating function", grating_function_checks),
        ("surface potential limits", surface_limits),
        ("CLI determinism", determinism),
    ];
    let mut failures = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS {:>2} {name}: {detail} [{secs:.1} s]", i + 1),
            Err(detail) => {
                failures += 1;
                println!("FAIL {:>2} {name}: {detail} [{secs:.1} s]", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failures} failed", criteria.len() - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
