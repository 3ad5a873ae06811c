//! `halo-grating` command line.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 configuration error, 3 numerical
//! error, 4 verification failure.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use num_complex::Complex;
use serde::Serialize;
use serde_json::json;

use crate::ags::{log_log_slope, truncation_gap, verify_identities, FiniteModel, IdentityReport};
use crate::bar_amplitude::{dimer_bar_amplitude, fit_effective_width, point_bar_amplitude, BarSpec, Particle};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::grating::{pattern, relative_peak_heights};
use crate::units::{self, constants::HELIUM4_MASS};

pub const EXIT_IO: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_VERIFY: i32 = 4;

#[derive(Parser, Debug)]
#[command(name = "halo-grating", version, about = "Atom and dimer diffraction by transmission gratings")]
pub struct Cli {
    /// Run configuration file; built-in defaults when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Use the point-particle amplitude instead of the dimer.
    #[arg(long, global = true)]
    pub point: bool,
    /// Divide the overall 2v/(2π)² factor out of all amplitudes.
    #[arg(long, global = true)]
    pub normalized: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Single-bar intensities for dimer and point particle.
    Bar,
    /// Coherent N-bar pattern and order table.
    Pattern,
    /// Effective bar width of a point particle matching the dimer.
    FitWidth,
    /// Atomic pattern with the van der Waals surface potential.
    Surface,
    /// Check the transition-operator identities on random finite models.
    VerifyAgs {
        /// First seed; seeds `seed .. seed+seeds` are used.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        seeds: u64,
        #[arg(long, default_value_t = 8)]
        dim: usize,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Print size measures and form factor of the configured dimer model.
    ModelInfo,
}

/// Parses arguments, runs, and returns the process exit code.
pub fn run_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { 0 };
        }
    };
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io(_) => EXIT_IO,
        Error::Config { .. } | Error::Domain(_) | Error::Validation(_) => EXIT_CONFIG,
        Error::Numerical { .. } => EXIT_NUMERICAL,
    }
}

pub fn run(cli: &Cli) -> Result<i32> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if cli.normalized {
        cfg.normalized = true;
    }
    match &cli.command {
        Command::Bar => cmd_bar(&cfg, cli),
        Command::Pattern => cmd_pattern(&cfg, cli),
        Command::FitWidth => cmd_fit_width(&cfg, cli),
        Command::Surface => cmd_surface(&cfg, cli),
        Command::VerifyAgs { seed, seeds, dim, tol } => cmd_verify_ags(*seed, *seeds, *dim, *tol, &cli.out),
        Command::ModelInfo => cmd_model_info(&cfg),
    }
}

/// 12 significant digits.
fn num(x: f64) -> String {
    format!("{x:.11e}")
}

struct Table {
    name: &'static str,
    columns: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn new(name: &'static str, columns: Vec<&'static str>) -> Self {
        Table {
            name,
            columns,
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

#[derive(Serialize)]
struct Metadata<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    point: bool,
    config_text: String,
    config: &'a RunConfig,
    tables: Vec<TableMeta>,
    extra: serde_json::Value,
}

#[derive(Serialize)]
struct TableMeta {
    file: String,
    columns: Vec<&'static str>,
    rows: usize,
}

fn write_outputs(
    out: &Path,
    command: &str,
    cfg: &RunConfig,
    point: bool,
    tables: &[Table],
    extra: serde_json::Value,
) -> Result<()> {
    fs::create_dir_all(out)?;
    let config_text = cfg.to_config_text();
    for t in tables {
        let mut s = String::new();
        let _ = writeln!(s, "# halo-grating {} {command}", env!("CARGO_PKG_VERSION"));
        let _ = writeln!(s, "# point = {point}");
        for line in config_text.lines() {
            let _ = writeln!(s, "# {line}");
        }
        let _ = writeln!(s, "{}", t.columns.join(","));
        for row in &t.rows {
            let _ = writeln!(s, "{}", row.join(","));
        }
        fs::write(out.join(format!("{}.csv", t.name)), s)?;
    }
    let meta = Metadata {
        tool: "halo-grating",
        version: env!("CARGO_PKG_VERSION"),
        command,
        point,
        config_text,
        config: cfg,
        tables: tables
            .iter()
            .map(|t| TableMeta {
                file: format!("{}.csv", t.name),
                columns: t.columns.clone(),
                rows: t.rows.len(),
            })
            .collect(),
        extra,
    };
    let json = serde_json::to_string_pretty(&meta).map_err(|e| Error::Io(e.into()))?;
    fs::write(out.join(format!("{command}.meta.json")), json + "\n")?;
    Ok(())
}

fn ratio(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        f64::INFINITY
    } else {
        a / b
    }
}

fn cmd_bar(cfg: &RunConfig, cli: &Cli) -> Result<i32> {
    let beam = cfg.beam_state()?;
    let bar = cfg.grating.bar();
    let grid = cfg.k2_grid();
    let model = if cli.point { None } else { Some(cfg.dimer.build()?) };
    let intensities = |k: f64| -> Result<(f64, Option<f64>)> {
        let p = point_bar_amplitude(k, bar, &beam).norm_sqr();
        let d = match &model {
            Some(m) => Some(dimer_bar_amplitude(k, bar, &beam, m)?.norm_sqr()),
            None => None,
        };
        Ok((p, d))
    };
    let columns = if cli.point {
        vec!["K2_nm^-1", "I_point"]
    } else {
        vec!["K2_nm^-1", "I_point", "I_dimer", "ratio"]
    };
    let mut curve = Table::new("bar", columns);
    let rows = {
        use rayon::prelude::*;
        grid.par_iter().map(|&k| intensities(k).map(|r| (k, r))).collect::<Result<Vec<_>>>()?
    };
    for (k, (p, d)) in rows {
        let mut row = vec![num(k), num(p)];
        if let Some(d) = d {
            row.push(num(d));
            row.push(num(ratio(d, p)));
        }
        curve.push(row);
    }
    let mut orders = Table::new(
        "bar_orders",
        if cli.point {
            vec!["n", "K2_n_nm^-1", "I_point"]
        } else {
            vec!["n", "K2_n_nm^-1", "I_point", "I_dimer", "ratio"]
        },
    );
    let k_max = grid.iter().fold(0.0f64, |m, k| m.max(k.abs()));
    let n_max = (k_max * cfg.grating.period / (2.0 * std::f64::consts::PI)).floor() as i64;
    for n in 0..=n_max {
        let k = cfg.grating.order_wavenumber(n);
        let (p, d) = intensities(k)?;
        let mut row = vec![n.to_string(), num(k), num(p)];
        if let Some(d) = d {
            row.push(num(d));
            row.push(num(ratio(d, p)));
        }
        orders.push(row);
    }
    write_outputs(&cli.out, "bar", cfg, cli.point, &[curve, orders], json!({}))?;
    println!("bar: {} samples, orders 0..={n_max}", grid.len());
    Ok(0)
}

fn cmd_pattern(cfg: &RunConfig, cli: &Cli) -> Result<i32> {
    let beam = cfg.beam_state()?;
    let grid = cfg.k2_grid();
    let model = if cli.point { None } else { Some(cfg.dimer.build()?) };
    let particle = model.as_ref().map_or(Particle::Point, Particle::Dimer);
    let p = pattern(&cfg.grating, &beam, particle, &grid)?;
    let mut curve = Table::new("pattern", vec!["K2_nm^-1", "I"]);
    for (k, i) in p.k2_grid.iter().zip(&p.intensity) {
        curve.push(vec![num(*k), num(*i)]);
    }
    let i1 = p.order(1).map(|o| o.intensity);
    let mut orders = Table::new("pattern_orders", vec!["n", "K2_n_nm^-1", "I_n", "I_n/I_1"]);
    for o in &p.orders {
        let rel = i1.map_or(f64::NAN, |i1| ratio(o.intensity, i1));
        orders.push(vec![o.n.to_string(), num(o.k2), num(o.intensity), num(rel)]);
    }
    write_outputs(&cli.out, "pattern", cfg, cli.point, &[curve, orders], json!({}))?;
    println!("{:>4} {:>18} {:>18}", "n", "I_n", "I_n/I_1");
    for o in &p.orders {
        let rel = i1.map_or(f64::NAN, |i1| ratio(o.intensity, i1));
        println!("{:>4} {:>18} {:>18}", o.n, num(o.intensity), num(rel));
    }
    Ok(0)
}

fn cmd_fit_width(cfg: &RunConfig, cli: &Cli) -> Result<i32> {
    let model = cfg.dimer.build()?;
    let bar = cfg.grating.bar();
    let fit = fit_effective_width(&model, bar, cfg.fit.k2_max, cfg.fit.samples)?;
    let beam = cfg.beam_state()?;
    let widened = BarSpec::new(bar.width + fit.delta)?;
    let grid = crate::grating::linear_grid(0.0, cfg.fit.k2_max, fit.samples);
    let mut t = Table::new("fit_width", vec!["K2_nm^-1", "I_dimer", "I_point_bar", "I_point_effective"]);
    for &k in &grid {
        t.push(vec![
            num(k),
            num(dimer_bar_amplitude(k, bar, &beam, &model)?.norm_sqr()),
            num(point_bar_amplitude(k, bar, &beam).norm_sqr()),
            num(point_bar_amplitude(k, widened, &beam).norm_sqr()),
        ]);
    }
    let sizes = model.size_measures();
    let extra = json!({
        "delta_nm": fit.delta,
        "residual": fit.residual,
        "bar_width_nm": bar.width,
        "effective_width_nm": widened.width,
        "mean_abs_x2_nm": sizes.mean_abs_x2,
    });
    write_outputs(&cli.out, "fit_width", cfg, false, &[t], extra)?;
    println!("model            {}", model.label);
    println!("bar width        {} nm", num(bar.width));
    println!("delta            {} nm", num(fit.delta));
    println!("effective width  {} nm", num(widened.width));
    println!("<|x2|>           {} nm", num(sizes.mean_abs_x2));
    println!("residual         {}", num(fit.residual));
    Ok(0)
}

fn cmd_surface(cfg: &RunConfig, cli: &Cli) -> Result<i32> {
    let spec = cfg.surface_spec()?;
    if spec.open_half_width().is_none() {
        eprintln!("warning: slit fully blocked by the wall cutoff; transmission is zero");
    }
    let mut straight = spec;
    straight.geometry.wedge_angle = 0.0;
    let grid = cfg.k2_grid();
    let geo = spec.geometric_pattern(&grid)?;
    let flat = straight.atomic_pattern(&grid)?;
    let wedge = spec.atomic_pattern(&grid)?;
    let mut curve = Table::new("surface", vec!["K2_nm^-1", "I_geometric", "I_surface_alpha0", "I_surface"]);
    for i in 0..grid.len() {
        curve.push(vec![num(grid[i]), num(geo.intensity[i]), num(flat.intensity[i]), num(wedge.intensity[i])]);
    }
    let rel = |p: &crate::grating::DiffractionPattern<f64>| relative_peak_heights(p, 1).ok();
    let (rg, rf, rw) = (rel(&geo), rel(&flat), rel(&wedge));
    let pick = |r: &Option<Vec<(i64, f64)>>, i: usize| r.as_ref().map_or(f64::NAN, |v| v[i].1);
    let mut orders = Table::new(
        "surface_orders",
        vec![
            "n",
            "K2_n_nm^-1",
            "I_geometric",
            "I_surface_alpha0",
            "I_surface",
            "R_geometric",
            "R_surface_alpha0",
            "R_surface",
        ],
    );
    for (i, o) in geo.orders.iter().enumerate() {
        orders.push(vec![
            o.n.to_string(),
            num(o.k2),
            num(o.intensity),
            num(flat.orders[i].intensity),
            num(wedge.orders[i].intensity),
            num(pick(&rg, i)),
            num(pick(&rf, i)),
            num(pick(&rw, i)),
        ]);
    }
    let extra = json!({
        "effective_slit_width_nm": spec.effective_slit_width(),
        "velocity_m_per_s": spec.velocity,
    });
    write_outputs(&cli.out, "surface", cfg, true, &[curve, orders], extra)?;
    println!("{:>4} {:>18} {:>18} {:>18}", "n", "R_geometric", "R_alpha0", "R_surface");
    for i in 0..geo.orders.len() {
        println!(
            "{:>4} {:>18} {:>18} {:>18}",
            geo.orders[i].n,
            num(pick(&rg, i)),
            num(pick(&rf, i)),
            num(pick(&rw, i))
        );
    }
    Ok(0)
}

// Scalar versions of U_VV and T_W for one-dimensional models.
fn scalar_check(m: &FiniteModel<f64>) -> f64 {
    let (h, v, w, z) = (m.h0[(0, 0)], m.v[(0, 0)], m.w[(0, 0)], m.z);
    let one = Complex::new(1.0, 0.0);
    let g = one / (z - h - v - w);
    let gv = one / (z - h - v);
    let u_vv = (z - h - v) * (g - gv) * (z - h - v);
    let t_w = w + w * w / (z - h - w);
    let t_v = v + v * v / (z - h - v);
    let g0 = one / (z - h);
    // U_VV = T_W / (1 − T_W G₀ T_V G₀)
    let decoupled = t_w / (one - t_w * g0 * t_v * g0);
    let mat = crate::ags::u_vv_from_definition(m).map(|u| u[(0, 0)]).unwrap_or(Complex::new(f64::NAN, 0.0));
    ((u_vv - decoupled).norm() / decoupled.norm()).max((mat - u_vv).norm() / u_vv.norm())
}

fn cmd_verify_ags(seed: u64, seeds: u64, dim: usize, tol: f64, out: &Path) -> Result<i32> {
    if dim == 0 {
        return Err(Error::domain("dimension must be at least 1"));
    }
    let mut reports: Vec<(u64, IdentityReport)> = Vec::new();
    let mut scalar_worst = 0.0f64;
    for s in seed..seed + seeds {
        let model = FiniteModel::random_with_dim(s, dim)?;
        if dim == 1 {
            scalar_worst = scalar_worst.max(scalar_check(&model));
        }
        reports.push((s, verify_identities(&model, tol)?));
    }
    let failures: Vec<&(u64, IdentityReport)> = reports.iter().filter(|(_, r)| !r.all_passed()).collect();
    println!("verify-ags: {} models, dim {dim}, tol {tol:e}", reports.len());
    let ids = reports.first().map(|(_, r)| r.residuals.iter().map(|x| x.identity).collect::<Vec<_>>());
    for id in ids.unwrap_or_default() {
        let worst = reports.iter().filter_map(|(_, r)| r.residual(id)).fold(0.0, f64::max);
        let status = if worst < tol { "pass" } else { "FAIL" };
        println!("  {status} {:<44} worst residual {worst:.3e}", id.formula());
    }
    if dim == 1 {
        let status = if scalar_worst < tol { "pass" } else { "FAIL" };
        println!("  {status} {:<44} worst residual {scalar_worst:.3e}", "scalar closed forms");
    }
    // Lowest-order truncation: gap against ‖V‖ on the first model.
    let base = FiniteModel::random_with_dim(seed, dim)?;
    let eps = [1e-1, 1e-2, 1e-3, 1e-4];
    let mut gaps = Vec::new();
    for &e in &eps {
        if let Some(g) = truncation_gap(&base.with_binding_scaled(e))? {
            gaps.push(g);
        }
    }
    if gaps.len() == eps.len() {
        let slope0 = log_log_slope(&eps, &gaps.iter().map(|g| g.lowest_order).collect::<Vec<_>>());
        let slope1 = log_log_slope(&eps, &gaps.iter().map(|g| g.first_iteration).collect::<Vec<_>>());
        println!("  truncation gap slope vs |V|: lowest order {slope0:.4}, first iteration {slope1:.4}");
    }
    for (s, r) in &failures {
        for x in r.residuals.iter().filter(|x| !x.passed) {
            println!("  seed {s}: {} residual {:.3e}", x.identity.formula(), x.residual);
        }
    }
    fs::create_dir_all(out)?;
    let doc = json!({
        "tool": "halo-grating",
        "version": env!("CARGO_PKG_VERSION"),
        "seed": seed,
        "seeds": seeds,
        "dim": dim,
        "tolerance": tol,
        "failures": failures.len(),
        "reports": reports.iter().map(|(s, r)| json!({"seed": s, "report": r})).collect::<Vec<_>>(),
    });
    let text = serde_json::to_string_pretty(&doc).map_err(|e| Error::Io(e.into()))?;
    fs::write(out.join("verify_ags.json"), text + "\n")?;
    let scalar_ok = dim != 1 || scalar_worst < tol;
    if failures.is_empty() && scalar_ok {
        println!("all identities hold");
        Ok(0)
    } else {
        println!("{} of {} models failed", failures.len(), reports.len());
        Ok(EXIT_VERIFY)
    }
}

fn cmd_model_info(cfg: &RunConfig) -> Result<i32> {
    let m = cfg.dimer.build()?;
    let s = m.size_measures();
    println!("model            {}", m.label);
    if let Some(k) = m.kappa() {
        println!("kappa            {} nm^-1", num(k));
        println!(
            "binding energy   {} ueV (He-4 constituents)",
            num(units::binding_from_kappa(k, HELIUM4_MASS))
        );
    }
    println!("normalization    {}", num(m.normalization()));
    println!("<r>              {} nm", num(s.mean_r));
    println!("<|x2|>           {} nm", num(s.mean_abs_x2));
    println!("diameter (2<r>)  {} nm", num(s.diameter_estimate));
    println!("{:>10} {:>18}", "q_nm^-1", "F(q)");
    for q in [0.0, 0.05, 0.1, 0.2, 0.5, 1.0] {
        println!("{:>10} {:>18}", q, num(m.form_factor(q)));
    }
    println!("{:>10} {:>18}", "x2_nm", "g(x2)_nm^-1");
    for x in [0.1, 1.0, 2.8, 5.0, 10.0] {
        println!("{:>10} {:>18}", x, num(m.transverse_density(x)));
    }
    Ok(0)
}
