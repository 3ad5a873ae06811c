//! N-bar coherent diffraction: single-bar amplitude times the grating function.

use num_complex::Complex;
use rayon::prelude::*;
use serde::Serialize;

use crate::bar_amplitude::{bar_amplitude, BarSpec, BeamState, ComplexAmplitude, Particle};
use crate::error::{Error, Result};
use crate::num::Real;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GratingGeometry<T> {
    /// `d` in nm.
    pub period: T,
    /// `s` in nm.
    pub slit_width: T,
    /// `N`.
    pub bar_count: usize,
    /// Bar depth along the beam, nm.
    pub depth: T,
    /// Wedge angle of the bar walls off the beam axis, degrees.
    pub wedge_angle: T,
}

impl<T: Real> GratingGeometry<T> {
    pub fn new(period: T, slit_width: T, bar_count: usize, depth: T, wedge_angle: T) -> Result<Self> {
        let g = GratingGeometry {
            period,
            slit_width,
            bar_count,
            depth,
            wedge_angle,
        };
        g.validate()?;
        Ok(g)
    }

    /// Period `2a` with equal bars and slits of width `a`.
    pub fn symmetric(bar_width: T, bar_count: usize) -> Result<Self> {
        Self::new(bar_width * T::lit(2.0), bar_width, bar_count, T::zero(), T::zero())
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.slit_width > T::zero() && self.slit_width < self.period) {
            return Err(Error::domain(format!(
                "need 0 < slit width < period, got s={} d={}",
                self.slit_width, self.period
            )));
        }
        if self.bar_count < 1 {
            return Err(Error::domain("grating needs at least one bar"));
        }
        if !(self.depth >= T::zero()) {
            return Err(Error::domain(format!("depth must be non-negative, got {}", self.depth)));
        }
        if !(self.wedge_angle >= T::zero() && self.wedge_angle < T::lit(45.0)) {
            return Err(Error::domain(format!(
                "wedge angle must lie in [0°, 45°), got {}°",
                self.wedge_angle
            )));
        }
        Ok(())
    }

    pub fn bar(&self) -> BarSpec<T> {
        BarSpec {
            width: self.period - self.slit_width,
        }
    }

    /// `K₂ₙ = 2πn/d`.
    pub fn order_wavenumber(&self, n: i64) -> T {
        T::lit(2.0) * T::PI() * T::from_i64(n).unwrap() / self.period
    }
}

/// `sin(NK₂d/2)/sin(K₂d/2)`, returning `±N` at the removable points `K₂d = 2πn`.
pub fn grating_function<T: Real>(k2: T, period: T, bar_count: usize) -> T {
    let n = T::from_usize(bar_count).unwrap();
    let x = k2 * period * T::lit(0.5);
    let m = (x / T::PI()).round();
    let delta = x - m * T::PI();
    // sin(N(mπ+δ))/sin(mπ+δ) = (−1)^{m(N−1)} sin(Nδ)/sin(δ)
    let odd_m = (m * T::lit(0.5)).fract() != T::zero();
    let sign = if odd_m && bar_count % 2 == 0 { -T::one() } else { T::one() };
    if delta == T::zero() {
        sign * n
    } else {
        sign * (n * delta).sin() / delta.sin()
    }
}

pub fn coherent_amplitude<T: Real>(
    k2: T,
    geometry: &GratingGeometry<T>,
    beam: &BeamState<T>,
    particle: Particle<'_, T>,
) -> Result<ComplexAmplitude<T>> {
    let t = bar_amplitude(k2, geometry.bar(), beam, particle)?;
    Ok(t * grating_function(k2, geometry.period, geometry.bar_count))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OrderPeak<T> {
    pub n: i64,
    pub k2: T,
    pub intensity: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DiffractionPattern<T> {
    pub k2_grid: Vec<T>,
    /// `|t_coh|²` on the grid, relative units.
    pub intensity: Vec<T>,
    /// Orders `n = 0 … n_max` read at the exact positions `2πn/d`.
    pub orders: Vec<OrderPeak<T>>,
}

fn check_grid<T: Real>(grid: &[T]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::domain("K2 grid is empty"));
    }
    if grid.iter().any(|k| !k.is_finite()) {
        return Err(Error::domain("K2 grid contains non-finite values"));
    }
    if grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::domain("K2 grid must be sorted ascending"));
    }
    Ok(())
}

/// Samples `|amplitude(K₂)|²` on `grid` and at every order position up to `max|K₂|`.
pub fn pattern_from_amplitude<T, F>(period: T, grid: &[T], amplitude: F) -> Result<DiffractionPattern<T>>
where
    T: Real,
    F: Fn(T) -> Result<Complex<T>> + Sync,
{
    check_grid(grid)?;
    let intensity = grid
        .par_iter()
        .map(|&k| amplitude(k).map(|t| t.norm_sqr()))
        .collect::<Result<Vec<T>>>()?;
    let k_max = grid.iter().fold(T::zero(), |m, k| m.max(k.abs()));
    let n_max = (k_max * period / (T::lit(2.0) * T::PI())).floor().to_i64().unwrap_or(0);
    let orders = (0..=n_max)
        .into_par_iter()
        .map(|n| {
            let k2 = T::lit(2.0) * T::PI() * T::from_i64(n).unwrap() / period;
            amplitude(k2).map(|t| OrderPeak {
                n,
                k2,
                intensity: t.norm_sqr(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DiffractionPattern {
        k2_grid: grid.to_vec(),
        intensity,
        orders,
    })
}

pub fn pattern<T: Real>(
    geometry: &GratingGeometry<T>,
    beam: &BeamState<T>,
    particle: Particle<'_, T>,
    k2_grid: &[T],
) -> Result<DiffractionPattern<T>> {
    geometry.validate()?;
    pattern_from_amplitude(geometry.period, k2_grid, |k| {
        coherent_amplitude(k, geometry, beam, particle)
    })
}

impl<T: Real> DiffractionPattern<T> {
    pub fn order(&self, n: i64) -> Option<&OrderPeak<T>> {
        self.orders.iter().find(|o| o.n == n)
    }
}

/// `(n, Iₙ/I_ref)` for every tabulated order.
pub fn relative_peak_heights<T: Real>(pattern: &DiffractionPattern<T>, reference: i64) -> Result<Vec<(i64, T)>> {
    let i_ref = pattern
        .order(reference)
        .ok_or_else(|| Error::domain(format!("reference order {reference} not in pattern")))?
        .intensity;
    if !(i_ref > T::zero()) {
        return Err(Error::domain(format!("reference order {reference} has zero intensity")));
    }
    Ok(pattern.orders.iter().map(|o| (o.n, o.intensity / i_ref)).collect())
}

/// Uniform grid of `samples` points on `[min, max]`.
pub fn linear_grid<T: Real>(min: T, max: T, samples: usize) -> Vec<T> {
    if samples == 1 {
        return vec![min];
    }
    let step = (max - min) / T::from_usize(samples - 1).unwrap();
    (0..samples).map(|i| min + step * T::from_usize(i).unwrap()).collect()
}
