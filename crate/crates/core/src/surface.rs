//! Atom transmission through a slit with the attractive van der Waals wall
//! potential `−C₃/r⊥³`, in the eikonal (phase-object) approximation.
//!
//! The slit half-width opens linearly along the beam, `w(z) = s/2 + z·tan α`,
//! for `0 ≤ z ≤ t`. Each wall is a half-space at the local distance, and the
//! straight-line phase is `φ(x) = (C₃/ħv)·∫₀^t [r_L⁻³ + r_R⁻³] dz`.
//! Trajectories closer than the cutoff to a wall are counted as lost.

use num_complex::Complex;

use crate::bar_amplitude::ComplexAmplitude;
use crate::error::{Error, Result};
use crate::grating::{grating_function, pattern_from_amplitude, DiffractionPattern, GratingGeometry};
use crate::num::{sinc, Real};
use crate::quadrature::{self, Tolerance};
use crate::units::phase_per_mev_nm;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SurfaceSpec<T> {
    /// meV·nm³.
    pub c3: T,
    pub geometry: GratingGeometry<T>,
    /// m/s.
    pub velocity: T,
    /// Wall-adsorption cutoff in nm.
    pub cutoff_distance: T,
}

impl<T: Real> SurfaceSpec<T> {
    pub fn new(c3: T, geometry: GratingGeometry<T>, velocity: T, cutoff_distance: T) -> Result<Self> {
        geometry.validate()?;
        if !(c3 >= T::zero()) {
            return Err(Error::domain(format!("C3 must be non-negative, got {c3}")));
        }
        if !(velocity > T::zero()) {
            return Err(Error::domain(format!("velocity must be positive, got {velocity} m/s")));
        }
        if !(cutoff_distance > T::zero()) {
            return Err(Error::domain(format!("cutoff distance must be positive, got {cutoff_distance} nm")));
        }
        Ok(SurfaceSpec {
            c3,
            geometry,
            velocity,
            cutoff_distance,
        })
    }

    fn tan_alpha(&self) -> T {
        self.geometry.wedge_angle.to_radians().tan()
    }

    /// Half-width of the open lateral interval `|x| ≤ h`, or `None` when the slit is fully blocked.
    ///
    /// The narrowest cross-section is the entrance face, so straight paths are
    /// shadowed to `s/2` and then trimmed by the cutoff.
    pub fn open_half_width(&self) -> Option<T> {
        let h = self.geometry.slit_width * T::lit(0.5) - self.cutoff_distance;
        (h > T::zero()).then_some(h)
    }

    /// Projected open width `s − 2δ`; zero when blocked.
    pub fn effective_slit_width(&self) -> T {
        self.open_half_width().map_or(T::zero(), |h| h * T::lit(2.0))
    }

    // ∫₀^t dz/(c + zτ)³ = t(c+e)/(2c²e²) with e = c + tτ.
    fn wall_integral(&self, c: T) -> T {
        let t = self.geometry.depth;
        let e = c + t * self.tan_alpha();
        t * (c + e) / (T::lit(2.0) * c * c * e * e)
    }

    /// Eikonal phase in radians, or `None` if the path at `x` is blocked.
    pub fn eikonal_phase(&self, x: T) -> Option<T> {
        let h = self.open_half_width()?;
        if !(x.abs() <= h) {
            return None;
        }
        let half = self.geometry.slit_width * T::lit(0.5);
        if self.c3 == T::zero() {
            return Some(T::zero());
        }
        let walls = self.wall_integral(half + x) + self.wall_integral(half - x);
        Some(self.c3 * phase_per_mev_nm(self.velocity) * walls)
    }

    /// `2 sin(K₂h)/K₂` for the projected open width `2h`.
    pub fn geometric_slit_amplitude(&self, k2: T) -> ComplexAmplitude<T> {
        let w = self.effective_slit_width();
        Complex::new(w * sinc(k2 * w * T::lit(0.5)), T::zero())
    }

    /// `τ(K₂) = ∫_open e^{iK₂x} e^{iφ(x)} dx`. Zero if the slit is fully blocked.
    pub fn slit_transmission_amplitude(&self, k2: T) -> Result<ComplexAmplitude<T>> {
        let Some(h) = self.open_half_width() else {
            return Ok(Complex::new(T::zero(), T::zero()));
        };
        if self.c3 == T::zero() {
            return Ok(self.geometric_slit_amplitude(k2));
        }
        let phase = |x: T| k2 * x + self.eikonal_phase(x).unwrap_or(T::zero());
        let tol = Tolerance::new(1e-13, 1e-11);
        let re = quadrature::integrate(|x| phase(x).cos(), -h, h, tol, "slit transmission (real part)")?;
        let im = quadrature::integrate(|x| phase(x).sin(), -h, h, tol, "slit transmission (imaginary part)")?;
        Ok(Complex::new(re, im))
    }

    /// Aperture amplitude times the grating function, sampled on `k2_grid`.
    pub fn atomic_pattern(&self, k2_grid: &[T]) -> Result<DiffractionPattern<T>> {
        let g = &self.geometry;
        pattern_from_amplitude(g.period, k2_grid, |k| {
            Ok(self.slit_transmission_amplitude(k)? * grating_function(k, g.period, g.bar_count))
        })
    }

    /// Same grating with the surface potential switched off.
    pub fn geometric_pattern(&self, k2_grid: &[T]) -> Result<DiffractionPattern<T>> {
        let g = &self.geometry;
        pattern_from_amplitude(g.period, k2_grid, |k| {
            Ok(self.geometric_slit_amplitude(k) * grating_function(k, g.period, g.bar_count))
        })
    }
}

pub fn atomic_pattern_with_surface<T: Real>(spec: &SurfaceSpec<T>, k2_grid: &[T]) -> Result<DiffractionPattern<T>> {
    spec.atomic_pattern(k2_grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grating::relative_peak_heights;

    fn spec(c3: f64, alpha: f64, v: f64) -> SurfaceSpec<f64> {
        let g = GratingGeometry::new(100.0, 50.0, 10, 100.0, alpha).unwrap();
        SurfaceSpec::new(c3, g, v, 0.5).unwrap()
    }

    #[test]
    fn phase_closed_form_straight_walls() {
        let s = spec(0.1, 0.0, 1000.0);
        let w = 25.0;
        let want = 2.0 * 0.1 * 100.0 * phase_per_mev_nm(1000.0) / (w * w * w);
        assert!((s.eikonal_phase(0.0).unwrap() - want).abs() < 1e-14 * want);
    }

    #[test]
    fn phase_wedge_vs_quadrature() {
        let s = spec(0.1, 8.0, 1000.0);
        let tan = 8f64.to_radians().tan();
        for x in [0.0, 10.0, -20.0, 24.4] {
            let f = |z: f64| {
                let w = 25.0 + z * tan;
                0.1 / (w + x).powi(3) + 0.1 / (w - x).powi(3)
            };
            let direct = quadrature::adaptive(f, 0.0, 100.0, Tolerance::new(0.0, 1e-13), 200).value
                * phase_per_mev_nm(1000.0);
            let got = s.eikonal_phase(x).unwrap();
            assert!((got - direct).abs() < 1e-11 * direct, "x={x}");
        }
    }

    #[test]
    fn phase_properties() {
        let s = spec(0.1, 8.0, 1000.0);
        assert_eq!(spec(0.0, 8.0, 1000.0).eikonal_phase(3.0), Some(0.0));
        let mut prev = f64::INFINITY;
        for i in 0..=24 {
            let x = -24.5 + i as f64;
            let p = s.eikonal_phase(x).unwrap();
            assert!(p > 0.0);
            if x <= 0.0 {
                assert!(p < prev);
                prev = p;
            }
        }
        assert!(spec(0.2, 8.0, 1000.0).eikonal_phase(5.0) > s.eikonal_phase(5.0));
        assert_eq!(s.eikonal_phase(24.6), None);
        assert_eq!(s.eikonal_phase(-24.6), None);
    }

    #[test]
    fn blocking_monotone_in_cutoff() {
        let g = GratingGeometry::new(100.0, 50.0, 10, 100.0, 8.0).unwrap();
        let mut prev = f64::INFINITY;
        for cut in [0.1, 0.5, 1.0, 5.0, 24.9] {
            let w = SurfaceSpec::new(0.1, g, 1000.0, cut).unwrap().effective_slit_width();
            assert!(w <= prev);
            prev = w;
        }
        let blocked = SurfaceSpec::new(0.1, g, 1000.0, 25.0).unwrap();
        assert_eq!(blocked.open_half_width(), None);
        assert_eq!(blocked.slit_transmission_amplitude(0.3).unwrap(), Complex::new(0.0, 0.0));
    }

    #[test]
    fn quadrature_reproduces_geometric_slit() {
        // Same integral as the closed form, done numerically.
        let s = spec(0.0, 0.0, 1000.0);
        let h = s.open_half_width().unwrap();
        for k in [0.0, 0.05, 0.31, 1.2] {
            let num = quadrature::adaptive(|x: f64| (k * x).cos(), -h, h, Tolerance::new(1e-14, 1e-13), 100).value;
            assert!((num - s.geometric_slit_amplitude(k).re).abs() < 1e-12);
        }
    }

    #[test]
    fn symmetric_slit_amplitude_even() {
        let s = spec(0.1, 8.0, 1000.0);
        for k in [0.05, 0.4] {
            let p = s.slit_transmission_amplitude(k).unwrap();
            let m = s.slit_transmission_amplitude(-k).unwrap();
            assert!((p - m).norm() < 1e-10 * p.norm());
        }
    }

    #[test]
    fn attraction_narrows_slit() {
        let geo = spec(0.0, 0.0, 1000.0);
        let vdw = spec(0.1, 0.0, 1000.0);
        let first_min = |s: &SurfaceSpec<f64>| {
            let ks: Vec<f64> = (0..=600).map(|i| 0.08 + 0.0002 * i as f64).collect();
            let is: Vec<f64> = ks.iter().map(|&k| s.slit_transmission_amplitude(k).unwrap().norm_sqr()).collect();
            (1..is.len() - 1).find(|&i| is[i] < is[i - 1] && is[i] <= is[i + 1]).map(|i| ks[i]).unwrap()
        };
        let k_geo = first_min(&geo);
        let k_vdw = first_min(&vdw);
        assert!((k_geo - 2.0 * std::f64::consts::PI / geo.effective_slit_width()).abs() < 3e-4);
        assert!(k_vdw > k_geo, "{k_vdw} vs {k_geo}");
    }

    #[test]
    fn slower_atoms_deviate_more() {
        let grid: Vec<f64> = (0..=40).map(|i| i as f64 * 0.01).collect();
        let dev = |v: f64| {
            let s = spec(0.1, 8.0, v);
            let a = s.atomic_pattern(&grid).unwrap();
            let g = s.geometric_pattern(&grid).unwrap();
            let num: f64 = a.intensity.iter().zip(&g.intensity).map(|(x, y)| (x - y).powi(2)).sum();
            let den: f64 = g.intensity.iter().map(|y| y * y).sum();
            (num / den).sqrt()
        };
        assert!(dev(500.0) > dev(1000.0));
        assert!(dev(1000.0) > dev(2000.0));
    }

    #[test]
    fn c3_zero_matches_bar_convention_away_from_forward() {
        use crate::bar_amplitude::{BeamState, Particle};
        use crate::grating::pattern;
        let s = spec(0.0, 0.0, 1000.0);
        let grid: Vec<f64> = (0..=100).map(|i| i as f64 * 0.005).collect();
        let aperture = relative_peak_heights(&s.atomic_pattern(&grid).unwrap(), 1).unwrap();
        let mut g = s.geometry;
        g.slit_width = s.effective_slit_width();
        let beam = BeamState::new(4.0026, 1000.0, true).unwrap();
        let bars = relative_peak_heights(&pattern(&g, &beam, Particle::Point, &grid).unwrap(), 1).unwrap();
        for ((n, a), (_, b)) in aperture.iter().zip(&bars).skip(1) {
            assert!((a - b).abs() < 1e-10 * a.max(1e-12), "n={n}: {a} vs {b}");
        }
    }
}
