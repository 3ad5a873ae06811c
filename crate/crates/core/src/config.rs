//! Run configuration: `[section]` headers and `key = value unit` lines.
//!
//! ```text
//! # symmetric 50 nm grating
//! [grating]
//! period = 50 nm
//! slit_width = 25 nm
//! bar_count = 100
//! ```
//!
//! Physical quantities must carry a unit; the accepted spellings are listed in
//! [`Quantity::units`]. Unknown sections, keys or units are errors reported with
//! the offending line.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::PathBuf;

use serde::Serialize;

use crate::bar_amplitude::BeamState;
use crate::error::{Error, Result};
use crate::grating::GratingGeometry;
use crate::surface::SurfaceSpec;
use crate::units::constants::HELIUM4_MASS;
use crate::wavefunction::DimerModel;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Quantity {
    Length,
    Wavenumber,
    Mass,
    Energy,
    Velocity,
    Angle,
    SurfaceConstant,
}

impl Quantity {
    /// Accepted unit spellings and their factor to the internal unit.
    pub fn units(self) -> &'static [(&'static str, f64)] {
        match self {
            Quantity::Length => &[("nm", 1.0), ("um", 1e3), ("µm", 1e3), ("A", 0.1), ("Å", 0.1)],
            Quantity::Wavenumber => &[("nm^-1", 1.0), ("1/nm", 1.0), ("A^-1", 10.0), ("1/A", 10.0)],
            Quantity::Mass => &[("amu", 1.0), ("u", 1.0), ("Da", 1.0)],
            Quantity::Energy => &[("ueV", 1.0), ("µeV", 1.0), ("neV", 1e-3), ("meV", 1e3)],
            Quantity::Velocity => &[("m/s", 1.0), ("km/s", 1e3)],
            Quantity::Angle => &[("deg", 1.0), ("rad", 180.0 / std::f64::consts::PI)],
            Quantity::SurfaceConstant => &[("meV*nm^3", 1.0), ("meV.nm^3", 1.0), ("meV nm^3", 1.0)],
        }
    }

    fn canonical(self) -> &'static str {
        self.units()[0].0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DimerSpec {
    /// Halo density with `⟨|x₂|⟩` fixed (nm).
    Calibrated { mean_abs_x2: f64 },
    /// Halo density from binding energy (µeV) and constituent mass (amu).
    Binding { binding_energy: f64, constituent_mass: f64 },
    /// Halo density with explicit κ (nm⁻¹).
    Kappa { kappa: f64 },
    /// Two-column radial table.
    Tabulated { path: PathBuf, normalize: bool },
}

impl DimerSpec {
    pub fn build(&self) -> Result<DimerModel<f64>> {
        match self {
            DimerSpec::Calibrated { mean_abs_x2 } => DimerModel::calibrated_to_x2(*mean_abs_x2),
            DimerSpec::Binding {
                binding_energy,
                constituent_mass,
            } => DimerModel::from_binding(*binding_energy, *constituent_mass),
            DimerSpec::Kappa { kappa } => DimerModel::exponential(*kappa, None),
            DimerSpec::Tabulated { path, normalize } => DimerModel::load_table(path, *normalize),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SurfaceConfig {
    pub c3: f64,
    pub cutoff: f64,
    /// Atom velocity; the beam velocity when absent.
    pub velocity: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridConfig {
    pub k2_min: f64,
    pub k2_max: f64,
    pub k2_samples: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FitConfig {
    pub k2_max: f64,
    pub samples: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BeamConfig {
    pub total_mass: f64,
    pub velocity: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub grating: GratingGeometry<f64>,
    pub beam: BeamConfig,
    pub dimer: DimerSpec,
    pub surface: SurfaceConfig,
    pub grid: GridConfig,
    pub fit: FitConfig,
    pub normalized: bool,
}

impl Default for RunConfig {
    /// Symmetric 50/25 nm grating, ⁴He₂ at 1000 m/s, halo density with `⟨|x₂|⟩ = 2.8 nm`.
    fn default() -> Self {
        RunConfig {
            grating: GratingGeometry {
                period: 50.0,
                slit_width: 25.0,
                bar_count: 100,
                depth: 100.0,
                wedge_angle: 0.0,
            },
            beam: BeamConfig {
                total_mass: 2.0 * HELIUM4_MASS,
                velocity: 1000.0,
            },
            dimer: DimerSpec::Calibrated { mean_abs_x2: 2.8 },
            surface: SurfaceConfig {
                c3: 0.1,
                cutoff: 0.5,
                velocity: None,
            },
            grid: GridConfig {
                k2_min: 0.0,
                k2_max: 1.5,
                k2_samples: 751,
            },
            fit: FitConfig {
                k2_max: 0.15,
                samples: 201,
            },
            normalized: false,
        }
    }
}

struct Entry<'a> {
    line: usize,
    key: String,
    value: &'a str,
}

impl Entry<'_> {
    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Config {
            line: self.line,
            key: self.key.clone(),
            msg: msg.into(),
        }
    }

    fn quantity(&self, q: Quantity) -> Result<f64> {
        let v = self.value.trim();
        let split = v
            .find(|c: char| !(c.is_ascii_digit() || matches!(c, '.' | '-' | '+' | 'e' | 'E')))
            .unwrap_or(v.len());
        let (num, unit) = v.split_at(split);
        let unit = unit.trim();
        let x: f64 = num
            .trim()
            .parse()
            .map_err(|_| self.err(format!("`{v}` is not a number followed by a unit")))?;
        if !x.is_finite() {
            return Err(self.err("value must be finite"));
        }
        if unit.is_empty() {
            return Err(self.err(format!("missing unit, expected one of {}", unit_list(q))));
        }
        q.units()
            .iter()
            .find(|(u, _)| *u == unit)
            .map(|(_, f)| x * f)
            .ok_or_else(|| self.err(format!("unit `{unit}` not accepted, expected one of {}", unit_list(q))))
    }

    fn count(&self) -> Result<usize> {
        self.value
            .trim()
            .parse()
            .map_err(|_| self.err(format!("`{}` is not a non-negative integer", self.value.trim())))
    }

    fn boolean(&self) -> Result<bool> {
        match self.value.trim() {
            "true" | "yes" | "on" => Ok(true),
            "false" | "no" | "off" => Ok(false),
            other => Err(self.err(format!("`{other}` is not a boolean"))),
        }
    }

    fn text(&self) -> Result<&str> {
        let v = self.value.trim().trim_matches('"');
        if v.is_empty() {
            Err(self.err("empty value"))
        } else {
            Ok(v)
        }
    }
}

fn unit_list(q: Quantity) -> String {
    q.units().iter().map(|(u, _)| format!("`{u}`")).collect::<Vec<_>>().join(", ")
}

#[derive(Default)]
struct DimerKeys {
    model: Option<(usize, String)>,
    mean_abs_x2: Option<f64>,
    binding_energy: Option<f64>,
    constituent_mass: Option<f64>,
    kappa: Option<f64>,
    table: Option<PathBuf>,
    normalize: Option<bool>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        Self::parse_with_base(text, None)
    }

    /// Parses `text`; relative table paths resolve against `base`.
    pub fn parse_with_base(text: &str, base: Option<&std::path::Path>) -> Result<Self> {
        let mut cfg = RunConfig::default();
        let mut dimer = DimerKeys::default();
        let mut section = String::new();
        let mut seen = BTreeSet::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            if let Some(rest) = content.strip_prefix('[') {
                let name = rest.strip_suffix(']').ok_or_else(|| Error::Config {
                    line,
                    key: content.to_string(),
                    msg: "unterminated section header".into(),
                })?;
                section = name.trim().to_string();
                if !["grating", "beam", "dimer", "surface", "grid", "fit", "output"].contains(&section.as_str()) {
                    return Err(Error::Config {
                        line,
                        key: section.clone(),
                        msg: "unknown section".into(),
                    });
                }
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| Error::Config {
                line,
                key: content.to_string(),
                msg: "expected `key = value`".into(),
            })?;
            let e = Entry {
                line,
                key: format!("{section}.{}", key.trim()),
                value,
            };
            if section.is_empty() {
                return Err(e.err("key outside of any section"));
            }
            if !seen.insert(e.key.clone()) {
                return Err(e.err("duplicate key"));
            }
            match e.key.as_str() {
                "grating.period" => cfg.grating.period = e.quantity(Quantity::Length)?,
                "grating.slit_width" => cfg.grating.slit_width = e.quantity(Quantity::Length)?,
                "grating.bar_count" => cfg.grating.bar_count = e.count()?,
                "grating.depth" => cfg.grating.depth = e.quantity(Quantity::Length)?,
                "grating.wedge_angle" => cfg.grating.wedge_angle = e.quantity(Quantity::Angle)?,
                "beam.total_mass" => cfg.beam.total_mass = e.quantity(Quantity::Mass)?,
                "beam.velocity" => cfg.beam.velocity = e.quantity(Quantity::Velocity)?,
                "dimer.model" => dimer.model = Some((line, e.text()?.to_string())),
                "dimer.mean_abs_x2" => dimer.mean_abs_x2 = Some(e.quantity(Quantity::Length)?),
                "dimer.binding_energy" => dimer.binding_energy = Some(e.quantity(Quantity::Energy)?),
                "dimer.constituent_mass" => dimer.constituent_mass = Some(e.quantity(Quantity::Mass)?),
                "dimer.kappa" => dimer.kappa = Some(e.quantity(Quantity::Wavenumber)?),
                "dimer.table" => {
                    let p = PathBuf::from(e.text()?);
                    dimer.table = Some(match base {
                        Some(b) if p.is_relative() => b.join(p),
                        _ => p,
                    });
                }
                "dimer.normalize" => dimer.normalize = Some(e.boolean()?),
                "surface.c3" => cfg.surface.c3 = e.quantity(Quantity::SurfaceConstant)?,
                "surface.cutoff" => cfg.surface.cutoff = e.quantity(Quantity::Length)?,
                "surface.velocity" => cfg.surface.velocity = Some(e.quantity(Quantity::Velocity)?),
                "grid.k2_min" => cfg.grid.k2_min = e.quantity(Quantity::Wavenumber)?,
                "grid.k2_max" => cfg.grid.k2_max = e.quantity(Quantity::Wavenumber)?,
                "grid.k2_samples" => cfg.grid.k2_samples = e.count()?,
                "fit.k2_max" => cfg.fit.k2_max = e.quantity(Quantity::Wavenumber)?,
                "fit.samples" => cfg.fit.samples = e.count()?,
                "output.normalized" => cfg.normalized = e.boolean()?,
                _ => return Err(e.err("unknown key")),
            }
        }
        cfg.dimer = resolve_dimer(dimer)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse_with_base(&text, path.parent())
    }

    pub fn validate(&self) -> Result<()> {
        let cfg_err = |key: &str, msg: String| Error::Config {
            line: 0,
            key: key.into(),
            msg,
        };
        self.grating.validate().map_err(|e| cfg_err("grating", e.to_string()))?;
        self.beam_state().map_err(|e| cfg_err("beam", e.to_string()))?;
        if self.grid.k2_samples < 2 {
            return Err(cfg_err("grid.k2_samples", "need at least 2 samples".into()));
        }
        if !(self.grid.k2_max > self.grid.k2_min) {
            return Err(cfg_err("grid.k2_max", "must exceed grid.k2_min".into()));
        }
        if !(self.fit.k2_max > 0.0) || self.fit.samples < 3 {
            return Err(cfg_err("fit", "need k2_max > 0 and at least 3 samples".into()));
        }
        self.surface_spec().map_err(|e| cfg_err("surface", e.to_string()))?;
        Ok(())
    }

    pub fn beam_state(&self) -> Result<BeamState<f64>> {
        BeamState::new(self.beam.total_mass, self.beam.velocity, self.normalized)
    }

    pub fn surface_spec(&self) -> Result<SurfaceSpec<f64>> {
        SurfaceSpec::new(
            self.surface.c3,
            self.grating,
            self.surface.velocity.unwrap_or(self.beam.velocity),
            self.surface.cutoff,
        )
    }

    pub fn k2_grid(&self) -> Vec<f64> {
        crate::grating::linear_grid(self.grid.k2_min, self.grid.k2_max, self.grid.k2_samples)
    }

    /// Canonical text form, parseable by [`RunConfig::parse`].
    pub fn to_config_text(&self) -> String {
        let mut s = String::new();
        let q = |x: f64, u: Quantity| format!("{x:?} {}", u.canonical());
        let g = &self.grating;
        let _ = writeln!(s, "[grating]");
        let _ = writeln!(s, "period = {}", q(g.period, Quantity::Length));
        let _ = writeln!(s, "slit_width = {}", q(g.slit_width, Quantity::Length));
        let _ = writeln!(s, "bar_count = {}", g.bar_count);
        let _ = writeln!(s, "depth = {}", q(g.depth, Quantity::Length));
        let _ = writeln!(s, "wedge_angle = {}", q(g.wedge_angle, Quantity::Angle));
        let _ = writeln!(s, "[beam]");
        let _ = writeln!(s, "total_mass = {}", q(self.beam.total_mass, Quantity::Mass));
        let _ = writeln!(s, "velocity = {}", q(self.beam.velocity, Quantity::Velocity));
        let _ = writeln!(s, "[dimer]");
        match &self.dimer {
            DimerSpec::Calibrated { mean_abs_x2 } => {
                let _ = writeln!(s, "model = calibrated");
                let _ = writeln!(s, "mean_abs_x2 = {}", q(*mean_abs_x2, Quantity::Length));
            }
            DimerSpec::Binding {
                binding_energy,
                constituent_mass,
            } => {
                let _ = writeln!(s, "model = binding");
                let _ = writeln!(s, "binding_energy = {}", q(*binding_energy, Quantity::Energy));
                let _ = writeln!(s, "constituent_mass = {}", q(*constituent_mass, Quantity::Mass));
            }
            DimerSpec::Kappa { kappa } => {
                let _ = writeln!(s, "model = kappa");
                let _ = writeln!(s, "kappa = {}", q(*kappa, Quantity::Wavenumber));
            }
            DimerSpec::Tabulated { path, normalize } => {
                let _ = writeln!(s, "model = tabulated");
                let _ = writeln!(s, "table = {}", path.display());
                let _ = writeln!(s, "normalize = {normalize}");
            }
        }
        let _ = writeln!(s, "[surface]");
        let _ = writeln!(s, "c3 = {}", q(self.surface.c3, Quantity::SurfaceConstant));
        let _ = writeln!(s, "cutoff = {}", q(self.surface.cutoff, Quantity::Length));
        if let Some(v) = self.surface.velocity {
            let _ = writeln!(s, "velocity = {}", q(v, Quantity::Velocity));
        }
        let _ = writeln!(s, "[grid]");
        let _ = writeln!(s, "k2_min = {}", q(self.grid.k2_min, Quantity::Wavenumber));
        let _ = writeln!(s, "k2_max = {}", q(self.grid.k2_max, Quantity::Wavenumber));
        let _ = writeln!(s, "k2_samples = {}", self.grid.k2_samples);
        let _ = writeln!(s, "[fit]");
        let _ = writeln!(s, "k2_max = {}", q(self.fit.k2_max, Quantity::Wavenumber));
        let _ = writeln!(s, "samples = {}", self.fit.samples);
        let _ = writeln!(s, "[output]");
        let _ = writeln!(s, "normalized = {}", self.normalized);
        s
    }
}

fn resolve_dimer(k: DimerKeys) -> Result<DimerSpec> {
    let inferred = infer_model(&k).to_string();
    let (line, model) = k.model.clone().unwrap_or((0, inferred));
    let missing = |key: &str| Error::Config {
        line,
        key: format!("dimer.{key}"),
        msg: format!("required for model `{model}`"),
    };
    Ok(match model.as_str() {
        "calibrated" => DimerSpec::Calibrated {
            mean_abs_x2: k.mean_abs_x2.unwrap_or(2.8),
        },
        "binding" => DimerSpec::Binding {
            binding_energy: k.binding_energy.ok_or_else(|| missing("binding_energy"))?,
            constituent_mass: k.constituent_mass.unwrap_or(HELIUM4_MASS),
        },
        "kappa" => DimerSpec::Kappa {
            kappa: k.kappa.ok_or_else(|| missing("kappa"))?,
        },
        "tabulated" => DimerSpec::Tabulated {
            path: k.table.ok_or_else(|| missing("table"))?,
            normalize: k.normalize.unwrap_or(false),
        },
        other => {
            return Err(Error::Config {
                line,
                key: "dimer.model".into(),
                msg: format!("unknown model `{other}`, expected calibrated, binding, kappa or tabulated"),
            })
        }
    })
}

fn infer_model(k: &DimerKeys) -> &'static str {
    if k.table.is_some() {
        "tabulated"
    } else if k.kappa.is_some() {
        "kappa"
    } else if k.binding_energy.is_some() {
        "binding"
    } else {
        "calibrated"
    }
}
