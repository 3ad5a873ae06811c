//! Dimer ground-state probability densities and the reduced quantities the
//! single-bar amplitude consumes: the form factor `F(q)` and the transverse
//! marginal `g(x₂)`.
//!
//! All densities are isotropic, `ρ(x) = ρ(|x|)`. The default model is the
//! zero-range halo form `ρ(r) = (κ/2π)·e^{−2κr}/r²`, which is exactly
//! normalized and whose `r⁻²` divergence is integrable.

use std::path::Path;

use crate::error::{Error, Result};
use crate::num::{atanc, sinc, Real};
use crate::quadrature::{self, Tolerance};
use crate::special::exp_integral_e1;

/// Floor applied to `|x₂|` where the marginal of the halo density diverges logarithmically.
pub const TRANSVERSE_FLOOR_NM: f64 = 1e-6;

const NORMALIZATION_TOL: f64 = 1e-6;

/// Radial density on a grid `0 < r₀ < r₁ < …`, stored as the radial weight `u(r) = 4πr²ρ(r)`.
///
/// `u` is interpolated linearly between nodes, held at `u(r₀)` on `[0, r₀]`
/// and is zero past the last node.
#[derive(Clone, Debug, PartialEq)]
pub struct RadialTable<T> {
    r: Vec<T>,
    weight: Vec<T>,
    // ∫_{r_i}^∞ u(r)/(2r) dr, one entry per node.
    tail: Vec<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum DensityKind<T> {
    AnalyticExponential { kappa: T },
    TabulatedRadial(RadialTable<T>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct DimerModel<T> {
    pub kind: DensityKind<T>,
    /// Binding energy magnitude in µeV, if known.
    pub binding_energy: Option<T>,
    pub label: String,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SizeMeasures<T> {
    /// `⟨r⟩` in nm.
    pub mean_r: T,
    /// `⟨|x₂|⟩` in nm.
    pub mean_abs_x2: T,
    /// `2⟨r⟩` in nm.
    pub diameter_estimate: T,
}

impl<T: Real> RadialTable<T> {
    fn new(r: Vec<T>, density: Vec<T>) -> Result<Self> {
        if r.len() != density.len() {
            return Err(Error::Validation(format!(
                "radial grid has {} points but density has {}",
                r.len(),
                density.len()
            )));
        }
        if r.len() < 2 {
            return Err(Error::Validation("radial table needs at least two points".into()));
        }
        if !(r[0] > T::zero()) {
            return Err(Error::Validation(format!("radial grid must start at r > 0, got {}", r[0])));
        }
        for w in r.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::Validation(format!(
                    "radial grid must be strictly increasing ({} then {})",
                    w[0], w[1]
                )));
            }
        }
        if let Some(bad) = density.iter().find(|d| !(**d >= T::zero()) || !d.is_finite()) {
            return Err(Error::Validation(format!("density must be finite and non-negative, got {bad}")));
        }
        let four_pi = T::lit(4.0) * T::PI();
        let weight: Vec<T> = r.iter().zip(&density).map(|(&r, &d)| four_pi * r * r * d).collect();
        let n = r.len();
        let mut tail = vec![T::zero(); n];
        for i in (0..n - 1).rev() {
            tail[i] = tail[i + 1] + segment_inverse_moment(r[i], r[i + 1], weight[i], weight[i + 1]);
        }
        Ok(RadialTable { r, weight, tail })
    }

    fn weight_at(&self, r: T) -> T {
        let n = self.r.len();
        if r <= self.r[0] {
            return self.weight[0];
        }
        if r > self.r[n - 1] {
            return T::zero();
        }
        let i = self.segment(r);
        let (r0, r1) = (self.r[i], self.r[i + 1]);
        let t = (r - r0) / (r1 - r0);
        self.weight[i] + (self.weight[i + 1] - self.weight[i]) * t
    }

    // Index i with r_i ≤ r ≤ r_{i+1}; caller guarantees r inside the grid.
    fn segment(&self, r: T) -> usize {
        let idx = self.r.partition_point(|&x| x <= r);
        idx.saturating_sub(1).min(self.r.len() - 2)
    }

    fn normalization(&self) -> T {
        let mut s = self.weight[0] * self.r[0];
        for i in 0..self.r.len() - 1 {
            s = s + (self.weight[i] + self.weight[i + 1]) * (self.r[i + 1] - self.r[i]) * T::lit(0.5);
        }
        s
    }

    fn mean_r(&self) -> T {
        let r0 = self.r[0];
        let mut s = self.weight[0] * r0 * r0 * T::lit(0.5);
        for i in 0..self.r.len() - 1 {
            let (a, b) = (self.r[i], self.r[i + 1]);
            let (ua, ub) = (self.weight[i], self.weight[i + 1]);
            s = s + (b - a) * (ua * (T::lit(2.0) * a + b) + ub * (a + T::lit(2.0) * b)) / T::lit(6.0);
        }
        s
    }

    fn form_factor(&self, q: T) -> T {
        let r0 = self.r[0];
        let u0 = self.weight[0];
        let mut s = quadrature::kronrod21(|r: T| u0 * sinc(q * r), T::zero(), r0);
        for i in 0..self.r.len() - 1 {
            let (a, b) = (self.r[i], self.r[i + 1]);
            let (ua, ub) = (self.weight[i], self.weight[i + 1]);
            s = s + quadrature::kronrod21(
                |r: T| (ua + (ub - ua) * (r - a) / (b - a)) * sinc(q * r),
                a,
                b,
            );
        }
        s
    }

    fn transverse(&self, x: T) -> T {
        let n = self.r.len();
        let r0 = self.r[0];
        if x < r0 {
            return self.weight[0] * T::lit(0.5) * (r0 / x).ln() + self.tail[0];
        }
        if x >= self.r[n - 1] {
            return T::zero();
        }
        let i = self.segment(x);
        let ux = self.weight_at(x);
        segment_inverse_moment(x, self.r[i + 1], ux, self.weight[i + 1]) + self.tail[i + 1]
    }

    fn transverse_mass_below(&self, eps: T) -> Option<T> {
        let r0 = self.r[0];
        (eps <= r0).then(|| {
            eps * self.tail[0] + self.weight[0] * T::lit(0.5) * eps * ((r0 / eps).ln() + T::one())
        })
    }

    fn last_radius(&self) -> T {
        self.r[self.r.len() - 1]
    }

    pub fn radii(&self) -> &[T] {
        &self.r
    }
}

// ∫_a^b u(r)/(2r) dr for u linear between (a, ua) and (b, ub).
fn segment_inverse_moment<T: Real>(a: T, b: T, ua: T, ub: T) -> T {
    let slope = (ub - ua) / (b - a);
    let intercept = ua - slope * a;
    (intercept * (b / a).ln() + slope * (b - a)) * T::lit(0.5)
}

impl<T: Real> DimerModel<T> {
    /// Halo density `ρ(r) = (κ/2π)·e^{−2κr}/r²`.
    pub fn exponential(kappa: T, binding_energy: Option<T>) -> Result<Self> {
        if !(kappa > T::zero()) || !kappa.is_finite() {
            return Err(Error::domain(format!("decay constant must be positive, got κ = {kappa} nm⁻¹")));
        }
        Ok(DimerModel {
            kind: DensityKind::AnalyticExponential { kappa },
            binding_energy,
            label: format!("halo κ={kappa} nm^-1"),
        })
    }

    /// Halo density whose `⟨|x₂|⟩` equals `target_x2`; for this form `⟨|x₂|⟩ = 1/(4κ)`.
    pub fn calibrated_to_x2(target_x2: T) -> Result<Self> {
        if !(target_x2 > T::zero()) || !target_x2.is_finite() {
            return Err(Error::domain(format!("target ⟨|x₂|⟩ must be positive, got {target_x2} nm")));
        }
        let mut m = Self::exponential(T::one() / (T::lit(4.0) * target_x2), None)?;
        m.label = format!("halo calibrated <|x2|>={target_x2} nm");
        Ok(m)
    }

    /// Halo density with κ from the binding energy (µeV) and constituent mass (amu).
    pub fn from_binding(binding_energy: T, constituent_mass: T) -> Result<Self> {
        let kappa = crate::units::kappa_from_binding(binding_energy, constituent_mass)?;
        let mut m = Self::exponential(kappa, Some(binding_energy))?;
        m.label = format!("halo E_b={binding_energy} ueV");
        Ok(m)
    }

    /// Tabulated radial density `ρ(r_i)` in nm⁻³. Must already be normalized to 1e-6.
    pub fn tabulated(r: Vec<T>, density: Vec<T>, label: impl Into<String>) -> Result<Self> {
        let table = RadialTable::new(r, density)?;
        let norm = table.normalization();
        if (norm - T::one()).abs() > T::lit(NORMALIZATION_TOL) {
            return Err(Error::Validation(format!(
                "tabulated density integrates to {norm}, expected 1 within {NORMALIZATION_TOL:e}"
            )));
        }
        Ok(DimerModel {
            kind: DensityKind::TabulatedRadial(table),
            binding_energy: None,
            label: label.into(),
        })
    }

    /// Tabulated radial density rescaled to unit norm.
    pub fn tabulated_normalized(r: Vec<T>, density: Vec<T>, label: impl Into<String>) -> Result<Self> {
        let norm = RadialTable::new(r.clone(), density.clone())?.normalization();
        if !(norm > T::zero()) {
            return Err(Error::Validation("tabulated density has zero norm".into()));
        }
        let scaled = density.into_iter().map(|d| d / norm).collect();
        Self::tabulated(r, scaled, label)
    }

    /// Parses two whitespace-separated columns `r [nm]  ρ [nm⁻³]`; `#` starts a comment.
    pub fn parse_table(text: &str, label: impl Into<String>, normalize: bool) -> Result<Self> {
        let mut r = Vec::new();
        let mut rho = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split(|c: char| c.is_whitespace() || c == ',').filter(|s| !s.is_empty()).collect();
            if cols.len() != 2 {
                return Err(Error::Validation(format!(
                    "line {}: expected two columns (r, density), found {}",
                    n + 1,
                    cols.len()
                )));
            }
            let parse = |s: &str| {
                s.parse::<f64>()
                    .map_err(|e| Error::Validation(format!("line {}: `{s}`: {e}", n + 1)))
            };
            r.push(T::lit(parse(cols[0])?));
            rho.push(T::lit(parse(cols[1])?));
        }
        if normalize {
            Self::tabulated_normalized(r, rho, label)
        } else {
            Self::tabulated(r, rho, label)
        }
    }

    pub fn load_table(path: &Path, normalize: bool) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse_table(&text, path.display().to_string(), normalize)
    }

    pub fn kappa(&self) -> Option<T> {
        match self.kind {
            DensityKind::AnalyticExponential { kappa } => Some(kappa),
            DensityKind::TabulatedRadial(_) => None,
        }
    }

    /// `ρ(r)` in nm⁻³.
    pub fn density(&self, r: T) -> T {
        let r = r.abs();
        match &self.kind {
            DensityKind::AnalyticExponential { kappa } => {
                *kappa / (T::lit(2.0) * T::PI()) * (-(T::lit(2.0) * *kappa * r)).exp() / (r * r)
            }
            DensityKind::TabulatedRadial(t) => t.weight_at(r) / (T::lit(4.0) * T::PI() * r * r),
        }
    }

    /// `r²ρ(r)`, finite at the origin.
    pub fn radial_weight(&self, r: T) -> T {
        let r = r.abs();
        match &self.kind {
            DensityKind::AnalyticExponential { kappa } => {
                *kappa / (T::lit(2.0) * T::PI()) * (-(T::lit(2.0) * *kappa * r)).exp()
            }
            DensityKind::TabulatedRadial(t) => t.weight_at(r) / (T::lit(4.0) * T::PI()),
        }
    }

    /// Radius beyond which the density is zero or negligible (`e^{−2κr} < 1e-30`).
    pub fn support_radius(&self) -> T {
        match &self.kind {
            DensityKind::AnalyticExponential { kappa } => T::lit(35.0) / *kappa,
            DensityKind::TabulatedRadial(t) => t.last_radius(),
        }
    }

    pub fn normalization(&self) -> T {
        match &self.kind {
            DensityKind::AnalyticExponential { .. } => T::one(),
            DensityKind::TabulatedRadial(t) => t.normalization(),
        }
    }

    pub fn size_measures(&self) -> SizeMeasures<T> {
        let mean_r = match &self.kind {
            DensityKind::AnalyticExponential { kappa } => T::one() / (T::lit(2.0) * *kappa),
            DensityKind::TabulatedRadial(t) => t.mean_r() / t.normalization(),
        };
        // ⟨|cos θ|⟩ = 1/2 for any isotropic density.
        SizeMeasures {
            mean_r,
            mean_abs_x2: mean_r * T::lit(0.5),
            diameter_estimate: mean_r * T::lit(2.0),
        }
    }

    /// `F(q) = ∫ e^{iq·x} ρ(x) d³x`; real and even in `q`, `F(0) = 1`.
    pub fn form_factor(&self, q: T) -> T {
        match &self.kind {
            DensityKind::AnalyticExponential { kappa } => atanc(q / (T::lit(2.0) * *kappa)),
            DensityKind::TabulatedRadial(t) => t.form_factor(q),
        }
    }

    /// `g(x₂) = ∫∫ ρ dx₁ dx₃` in nm⁻¹, evaluated at `max(|x₂|, 1e-6 nm)`.
    pub fn transverse_density(&self, x2: T) -> T {
        let x = x2.abs().max(T::lit(TRANSVERSE_FLOOR_NM));
        match &self.kind {
            DensityKind::AnalyticExponential { kappa } => *kappa * exp_integral_e1(T::lit(2.0) * *kappa * x),
            DensityKind::TabulatedRadial(t) => t.transverse(x),
        }
    }

    /// `∫_0^ε g(x) dx` with the logarithmic singularity integrated exactly.
    pub fn transverse_mass_below(&self, eps: T) -> T {
        match &self.kind {
            DensityKind::AnalyticExponential { kappa } => {
                let y = T::lit(2.0) * *kappa * eps;
                T::lit(0.5) * (T::one() - (-y).exp() + y * exp_integral_e1(y))
            }
            DensityKind::TabulatedRadial(t) => t.transverse_mass_below(eps).unwrap_or_else(|| {
                quadrature::adaptive(|x| t.transverse(x), T::zero(), eps, Tolerance::new(0.0, 1e-10), 500).value
            }),
        }
    }
}
