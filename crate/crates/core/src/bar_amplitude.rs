//! Single-bar transition amplitudes for point particles and dimers, and the
//! effective bar width that makes a point particle mimic a dimer at small
//! momentum transfer.
//!
//! With `c = 2v/(2π)²` and bar width `a`, the point amplitude is
//! `−i c sin(K₂a/2)/K₂`. The dimer amplitude adds a form-factor weighted copy of
//! it and a correction from the transverse marginal `g(x₂)` on `[0, a]`:
//!
//! ```text
//! t_mol = −i c a sinc(K₂a/2) F(K₂/2) + i c ∫₀^a g(x)(a−x) sinc(K₂(a−x)/2) dx
//! ```
//!
//! Both terms are written through `sinc`, so `K₂ = 0` needs no special case.

use num_complex::Complex;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::num::{sinc, Real};
use crate::quadrature::{self, Tolerance};
use crate::wavefunction::{DimerModel, TRANSVERSE_FLOOR_NM};

/// Relative error estimate above which the bar-correction integral is rejected.
pub const MAX_RELATIVE_ERROR: f64 = 1e-7;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BeamState<T> {
    /// Total mass `M` in amu.
    pub total_mass: T,
    /// `v = P/M` in m/s.
    pub velocity: T,
    /// Divide the overall factor `2v/(2π)²` out of every amplitude.
    pub normalized: bool,
}

impl<T: Real> BeamState<T> {
    pub fn new(total_mass: T, velocity: T, normalized: bool) -> Result<Self> {
        if !(total_mass > T::zero()) {
            return Err(Error::domain(format!("total mass must be positive, got {total_mass} amu")));
        }
        if !(velocity > T::zero()) {
            return Err(Error::domain(format!("velocity must be positive, got {velocity} m/s")));
        }
        Ok(BeamState {
            total_mass,
            velocity,
            normalized,
        })
    }

    /// `P/ħ` in nm⁻¹.
    pub fn total_wavenumber(&self) -> T {
        crate::units::beam_wavenumber(self.total_mass, self.velocity)
    }

    /// `2v/(2π)²`, or 1 in normalized mode.
    pub fn prefactor(&self) -> T {
        if self.normalized {
            T::one()
        } else {
            T::lit(2.0) * self.velocity / (T::lit(4.0) * T::PI() * T::PI())
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BarSpec<T> {
    /// `a = d − s` in nm.
    pub width: T,
}

impl<T: Real> BarSpec<T> {
    pub fn new(width: T) -> Result<Self> {
        if !(width > T::zero()) || !width.is_finite() {
            return Err(Error::domain(format!("bar width must be positive, got {width} nm")));
        }
        Ok(BarSpec { width })
    }
}

pub type ComplexAmplitude<T> = Complex<T>;

/// What is being diffracted.
#[derive(Clone, Copy, Debug)]
pub enum Particle<'a, T> {
    Point,
    Dimer(&'a DimerModel<T>),
}

pub fn point_bar_amplitude<T: Real>(k2: T, bar: BarSpec<T>, beam: &BeamState<T>) -> ComplexAmplitude<T> {
    let a = bar.width;
    let half = T::lit(0.5);
    Complex::new(T::zero(), -beam.prefactor() * a * half * sinc(k2 * a * half))
}

/// `∫₀^a g(x)(a−x) sinc(K₂(a−x)/2) dx`.
pub fn bar_correction_integral<T: Real>(k2: T, bar: BarSpec<T>, model: &DimerModel<T>) -> Result<T> {
    let a = bar.width;
    let half = T::lit(0.5);
    let kernel = |x: T| (a - x) * sinc(k2 * (a - x) * half);
    let eps = T::lit(TRANSVERSE_FLOOR_NM).min(a);
    // [0, ε]: the kernel is flat there, the log singularity of g is integrated exactly.
    let head = kernel(eps * half) * model.transverse_mass_below(eps);
    if eps >= a {
        return Ok(head);
    }
    // [ε, a] in s = ln x, which removes the logarithmic endpoint behaviour.
    let tol = Tolerance::new(1e-9, 1e-9);
    let est = quadrature::adaptive(
        |s: T| {
            let x = s.exp();
            x * model.transverse_density(x) * kernel(x)
        },
        eps.ln(),
        a.ln(),
        tol,
        2000,
    );
    let value = head + est.value;
    let limit = T::lit(MAX_RELATIVE_ERROR).max(T::epsilon() * T::lit(200.0));
    let floor = a * T::lit(1e-12);
    if !est.converged && est.error > limit * value.abs().max(floor) {
        return Err(Error::numerical(
            format!("bar correction integral at K2={k2} nm^-1, a={a} nm"),
            (est.error / value.abs().max(floor)).to_f64_lossy(),
            limit.to_f64_lossy(),
        ));
    }
    Ok(value)
}

pub fn dimer_bar_amplitude<T: Real>(
    k2: T,
    bar: BarSpec<T>,
    beam: &BeamState<T>,
    model: &DimerModel<T>,
) -> Result<ComplexAmplitude<T>> {
    let a = bar.width;
    let half = T::lit(0.5);
    let c = beam.prefactor();
    let term1 = -c * a * sinc(k2 * a * half) * model.form_factor(k2 * half);
    let term2 = c * bar_correction_integral(k2, bar, model)?;
    Ok(Complex::new(T::zero(), term1 + term2))
}

pub fn bar_amplitude<T: Real>(
    k2: T,
    bar: BarSpec<T>,
    beam: &BeamState<T>,
    particle: Particle<'_, T>,
) -> Result<ComplexAmplitude<T>> {
    match particle {
        Particle::Point => Ok(point_bar_amplitude(k2, bar, beam)),
        Particle::Dimer(model) => dimer_bar_amplitude(k2, bar, beam, model),
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WidthFit<T> {
    /// Width increment `Δ` in nm; the matching point bar is `a + Δ`.
    pub delta: T,
    /// `√(objective / ∫|t_mol|⁴ dK₂)`.
    pub residual: T,
    pub samples: usize,
}

/// Least-squares `Δ` such that `|t_point(a+Δ)|²` matches `|t_mol(a)|²` on `[0, K₂max]`.
pub fn fit_effective_width<T: Real>(
    model: &DimerModel<T>,
    bar: BarSpec<T>,
    k2_max: T,
    samples: usize,
) -> Result<WidthFit<T>> {
    if !(k2_max > T::zero()) {
        return Err(Error::domain(format!("fit range must be positive, got {k2_max} nm^-1")));
    }
    // Simpson needs an odd count.
    let n = (samples.max(3)) | 1;
    let beam = BeamState {
        total_mass: T::one(),
        velocity: T::one(),
        normalized: true,
    };
    let step = k2_max / T::from_usize(n - 1).unwrap();
    let grid: Vec<T> = (0..n).map(|i| T::from_usize(i).unwrap() * step).collect();
    let target: Vec<T> = grid
        .par_iter()
        .map(|&k| dimer_bar_amplitude(k, bar, &beam, model).map(|t| t.norm_sqr()))
        .collect::<Result<_>>()?;

    let simpson = |f: &dyn Fn(usize) -> T| {
        let mut s = f(0) + f(n - 1);
        for i in 1..n - 1 {
            s = s + f(i) * if i % 2 == 1 { T::lit(4.0) } else { T::lit(2.0) };
        }
        s * step / T::lit(3.0)
    };
    let objective = |delta: T| {
        let widened = BarSpec { width: bar.width + delta };
        simpson(&|i| {
            let d = target[i] - point_bar_amplitude(grid[i], widened, &beam).norm_sqr();
            d * d
        })
    };

    let lo = -bar.width * T::lit(0.5);
    let hi = bar.width * T::lit(0.5);
    let scan = 200;
    let h = (hi - lo) / T::from_usize(scan).unwrap();
    let values: Vec<T> = (0..=scan).map(|i| objective(lo + h * T::from_usize(i).unwrap())).collect();
    let best = values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap_or(std::cmp::Ordering::Equal))
        .map(|(i, _)| i)
        .unwrap();
    if best == 0 || best == scan {
        let at = lo + h * T::from_usize(best).unwrap();
        return Err(Error::numerical(
            format!("effective-width minimizer hit the search boundary at Δ={at} nm"),
            at.to_f64_lossy(),
            hi.to_f64_lossy(),
        ));
    }
    let delta = golden_section(
        &objective,
        lo + h * T::from_usize(best - 1).unwrap(),
        lo + h * T::from_usize(best + 1).unwrap(),
    );
    let widened = bar.width + delta;
    if k2_max * widened * T::lit(0.5) >= T::PI() {
        return Err(Error::domain(format!(
            "fit range K2max={k2_max} nm^-1 reaches the first zero of the widened bar ({widened} nm)"
        )));
    }
    let norm = simpson(&|i| target[i] * target[i]);
    Ok(WidthFit {
        delta,
        residual: (objective(delta) / norm).sqrt(),
        samples: n,
    })
}

fn golden_section<T: Real>(f: &dyn Fn(T) -> T, mut a: T, mut b: T) -> T {
    let inv_phi = (T::lit(5.0).sqrt() - T::one()) * T::lit(0.5);
    let mut c = b - (b - a) * inv_phi;
    let mut d = a + (b - a) * inv_phi;
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() <= T::epsilon().sqrt() * T::lit(1e-3) * (T::one() + a.abs()) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - (b - a) * inv_phi;
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + (b - a) * inv_phi;
            fd = f(d);
        }
    }
    (a + b) * T::lit(0.5)
}

/// Reference evaluation of the dimer amplitude by nested three-dimensional
/// quadrature over the density, without going through `F(q)` or `g(x₂)`.
/// Slow; intended for tests.
pub mod oracle {
    use super::*;
    use std::f64::consts::PI;

    #[derive(Clone, Copy, Debug, PartialEq, Eq)]
    pub enum LateralAxis {
        X1,
        X2,
    }

    fn tol(rel: f64) -> Tolerance<f64> {
        Tolerance::new(1e-15, rel)
    }

    /// `Re ∫ d³x e^{i q x_lat} ρ(x)` in spherical coordinates about `x₃`.
    /// The imaginary part vanishes by parity and is not integrated; the angular
    /// integrals are folded onto one octant.
    pub fn fourier_density(model: &DimerModel<f64>, q: f64, axis: LateralAxis) -> f64 {
        let radius = model.support_radius();
        8.0 * quadrature::adaptive(
            |r| {
                let w = model.radial_weight(r);
                let theta = quadrature::adaptive(
                    |th: f64| {
                        let s = th.sin();
                        let phi = quadrature::adaptive(
                            |ph: f64| {
                                let lat = match axis {
                                    LateralAxis::X2 => s * ph.cos(),
                                    LateralAxis::X1 => s * ph.sin(),
                                };
                                (q * r * lat).cos()
                            },
                            0.0,
                            0.5 * PI,
                            tol(1e-10),
                            400,
                        );
                        s * phi.value
                    },
                    0.0,
                    0.5 * PI,
                    tol(1e-10),
                    400,
                );
                w * theta.value
            },
            0.0,
            radius,
            tol(1e-10),
            2000,
        )
        .value
    }

    /// `∫ d³x ρ(x) (a−x_lat) sinc(K₂(a−x_lat)/2)` over the slab `0 ≤ x_lat ≤ a`.
    ///
    /// Coordinates: `x_lat = a·e^{−s}`, perpendicular radius `x_lat·sinh u`, azimuth `ψ`.
    pub fn slab_integral(model: &DimerModel<f64>, k2: f64, width: f64, axis: LateralAxis) -> f64 {
        let radius = model.support_radius();
        quadrature::adaptive(
            |s: f64| {
                let x = width * (-s).exp();
                let u_max = (radius / x).max(1.0).acosh();
                let kernel = (width - x) * sinc(0.5 * k2 * (width - x));
                let perp = quadrature::adaptive(
                    |u: f64| {
                        let rho_perp = x * u.sinh();
                        let jac = x * x * u.sinh() * u.cosh();
                        let az = quadrature::adaptive(
                            |psi: f64| {
                                let (p1, p3) = (rho_perp * psi.cos(), rho_perp * psi.sin());
                                let (x1, x2, x3) = match axis {
                                    LateralAxis::X2 => (p1, x, p3),
                                    LateralAxis::X1 => (x, p1, p3),
                                };
                                model.density((x1 * x1 + x2 * x2 + x3 * x3).sqrt())
                            },
                            0.0,
                            2.0 * PI,
                            tol(1e-13),
                            50,
                        );
                        jac * az.value
                    },
                    0.0,
                    u_max,
                    tol(1e-12),
                    1000,
                );
                x * kernel * perp.value
            },
            0.0,
            45.0,
            tol(1e-11),
            2000,
        )
        .value
    }

    pub fn dimer_bar_amplitude_oracle(
        k2: f64,
        bar: BarSpec<f64>,
        beam: &BeamState<f64>,
        model: &DimerModel<f64>,
        axis: LateralAxis,
    ) -> ComplexAmplitude<f64> {
        let a = bar.width;
        let c = beam.prefactor();
        let term1 = -c * a * sinc(0.5 * k2 * a) * fourier_density(model, 0.5 * k2, axis);
        let term2 = c * slab_integral(model, k2, a, axis);
        Complex::new(0.0, term1 + term2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn beam() -> BeamState<f64> {
        BeamState::new(8.0052, 1000.0, false).unwrap()
    }

    fn he2() -> DimerModel<f64> {
        DimerModel::calibrated_to_x2(2.8).unwrap()
    }

    #[test]
    fn point_amplitude_zeros_and_limit() {
        let bar = BarSpec::new(25.0).unwrap();
        let b = beam();
        let c = b.prefactor();
        assert!(point_bar_amplitude(2.0 * PI / 25.0, bar, &b).norm() < 1e-14 * c * 12.5);
        let t0 = point_bar_amplitude(0.0, bar, &b);
        assert_eq!(t0, Complex::new(0.0, -c * 12.5));
        for n in [2, 4, 6] {
            let k = 2.0 * PI * n as f64 / 50.0;
            assert!(point_bar_amplitude(k, bar, &b).norm() < 1e-14 * c * 12.5);
        }
        let k: f64 = 0.37;
        let direct = -c * (k * 12.5).sin() / k;
        assert!((point_bar_amplitude(k, bar, &b).im - direct).abs() < 1e-14 * c);
    }

    #[test]
    fn invalid_inputs() {
        assert!(BarSpec::new(0.0).is_err());
        assert!(BeamState::new(0.0, 1.0, false).is_err());
        assert!(BeamState::new(1.0, -1.0, false).is_err());
        let m = he2();
        assert!(fit_effective_width(&m, BarSpec::new(25.0).unwrap(), 0.0, 101).is_err());
    }

    #[test]
    fn forward_value_from_marginal_mean() {
        // At K₂ = 0 the amplitude is −i c (a/2 + ⟨|x₂|⟩/2) up to the tail of g beyond a.
        let m = he2();
        let b = beam();
        let t = dimer_bar_amplitude(0.0, BarSpec::new(200.0).unwrap(), &b, &m).unwrap();
        let want = -b.prefactor() * (100.0 + 1.4);
        assert!((t.im - want).abs() < 1e-7 * want.abs(), "{} vs {want}", t.im);
    }

    #[test]
    fn even_order_reappears_for_dimer() {
        let m = he2();
        let b = beam();
        let bar = BarSpec::new(25.0).unwrap();
        let k = 4.0 * PI / 50.0;
        let t = dimer_bar_amplitude(k, bar, &b, &m).unwrap();
        assert!(t.norm_sqr() > 0.0);
        assert!(point_bar_amplitude(k, bar, &b).norm_sqr() < 1e-28 * t.norm_sqr().max(1.0));
    }

    #[test]
    fn parity_and_velocity_scaling() {
        let m = he2();
        let bar = BarSpec::new(25.0).unwrap();
        let b1 = beam();
        let b2 = BeamState::new(8.0052, 2000.0, false).unwrap();
        for k in [0.05, 0.3, 1.1] {
            let p = dimer_bar_amplitude(k, bar, &b1, &m).unwrap();
            let n = dimer_bar_amplitude(-k, bar, &b1, &m).unwrap();
            assert!((p - n).norm() < 1e-14 * p.norm());
            let q = dimer_bar_amplitude(k, bar, &b2, &m).unwrap();
            assert!((q - p * 2.0).norm() < 1e-13 * q.norm());
        }
    }

    #[test]
    fn point_limit_monotone_in_kappa() {
        let bar = BarSpec::new(25.0).unwrap();
        let b = BeamState::new(1.0, 1.0, true).unwrap();
        let ks: Vec<f64> = (1..=200).map(|i| i as f64 * 0.005).collect();
        let mut last = f64::INFINITY;
        for kappa in [0.5, 1.0, 5.0, 50.0] {
            let m = DimerModel::exponential(kappa, None).unwrap();
            let dev = ks
                .iter()
                .map(|&k| {
                    let p = point_bar_amplitude(k, bar, &b);
                    let d = dimer_bar_amplitude(k, bar, &b, &m).unwrap();
                    (d - p).norm() / p.norm().max(1e-300)
                })
                .filter(|x| x.is_finite())
                .fold(0.0, f64::max);
            assert!(dev < last, "κ={kappa}: {dev} !< {last}");
            last = dev;
        }
    }

    #[test]
    fn oracle_matches_at_a_few_points() {
        use oracle::*;
        let m = he2();
        let b = beam();
        let bar = BarSpec::new(25.0).unwrap();
        for k in [0.0, 0.4] {
            let fast = dimer_bar_amplitude(k, bar, &b, &m).unwrap();
            let slow = dimer_bar_amplitude_oracle(k, bar, &b, &m, LateralAxis::X2);
            assert!((fast - slow).norm() < 1e-6 * slow.norm(), "K={k}: {fast} vs {slow}");
        }
    }

    #[test]
    fn tabulated_model_amplitude_close_to_analytic() {
        let kappa = 1.0 / (4.0 * 2.8);
        let a = DimerModel::exponential(kappa, None).unwrap();
        let h = 0.01;
        let r: Vec<f64> = (1..=(40.0 / kappa / h) as usize).map(|i| i as f64 * h).collect();
        let rho = r.iter().map(|&r| a.density(r)).collect();
        let t = DimerModel::tabulated_normalized(r, rho, "copy").unwrap();
        let bar = BarSpec::new(25.0).unwrap();
        let b = beam();
        for k in [0.0, 0.2, 0.9] {
            let ta = dimer_bar_amplitude(k, bar, &b, &a).unwrap();
            let tt = dimer_bar_amplitude(k, bar, &b, &t).unwrap();
            assert!((ta - tt).norm() < 1e-4 * ta.norm(), "K={k}");
        }
    }

    #[test]
    fn width_fit_near_point_and_resolution() {
        let bar = BarSpec::new(25.0).unwrap();
        let near = DimerModel::<f64>::calibrated_to_x2(0.01).unwrap();
        let fit = fit_effective_width(&near, bar, 0.15, 201).unwrap();
        assert!(fit.delta.abs() < 0.05, "{:?}", fit);
        let m = he2();
        let f1 = fit_effective_width(&m, bar, 0.15, 101).unwrap();
        let f2 = fit_effective_width(&m, bar, 0.15, 201).unwrap();
        assert!((f1.delta - f2.delta).abs() < 0.1 * f2.delta.abs());
        assert!((f2.delta - 2.8).abs() < 0.5, "{:?}", f2);
    }
}
