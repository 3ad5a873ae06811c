//! Finite-dimensional checks of the resolvent and transition-operator
//! identities for a bound pair scattered by an external potential.
//!
//! Operators are dense complex matrices; the spectral parameter `z` stays off
//! the real axis so every resolvent exists.

use nalgebra::{DMatrix, RealField};
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::num::Real;

pub type CMatrix<T> = DMatrix<Complex<T>>;

/// Scalar usable both by the physics code and by nalgebra's complex LU.
pub trait AgsScalar: Real + RealField {}
impl<T: Real + RealField> AgsScalar for T {}

const MAX_CONDITION: f64 = 1e14;
const RESIDUAL_FLOOR: f64 = 1e-14;

#[derive(Clone, Debug, PartialEq)]
pub struct FiniteModel<T: AgsScalar> {
    pub h0: CMatrix<T>,
    pub v: CMatrix<T>,
    pub w: CMatrix<T>,
    /// Optional split `W = W₁ + W₂` into single-constituent parts.
    pub w_split: Option<(CMatrix<T>, CMatrix<T>)>,
    pub z: Complex<T>,
}

fn c<T: AgsScalar>(re: f64, im: f64) -> Complex<T> {
    Complex::new(T::lit(re), T::lit(im))
}

fn frob<T: AgsScalar>(m: &CMatrix<T>) -> T {
    m.norm()
}

fn hermitian_defect<T: AgsScalar>(m: &CMatrix<T>) -> T {
    let d = m - m.adjoint();
    let scale = RealField::max(frob(m), T::one());
    frob(&d) / scale
}

fn random_hermitian<T: AgsScalar>(rng: &mut ChaCha8Rng, dim: usize) -> CMatrix<T> {
    let scale = 1.0 / (2.0 * dim as f64).sqrt();
    let x = CMatrix::<T>::from_fn(dim, dim, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c(re * scale, im * scale)
    });
    (&x + x.adjoint()) * c(0.5, 0.0)
}

impl<T: AgsScalar> FiniteModel<T> {
    pub fn new(h0: CMatrix<T>, v: CMatrix<T>, w: CMatrix<T>, z: Complex<T>) -> Result<Self> {
        let model = FiniteModel {
            h0,
            v,
            w,
            w_split: None,
            z,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn with_split(h0: CMatrix<T>, v: CMatrix<T>, w1: CMatrix<T>, w2: CMatrix<T>, z: Complex<T>) -> Result<Self> {
        let w = &w1 + &w2;
        let mut model = Self::new(h0, v, w, z)?;
        if w1.shape() != model.w.shape() || w2.shape() != model.w.shape() {
            return Err(Error::Validation("W₁ and W₂ must match W in shape".into()));
        }
        model.w_split = Some((w1, w2));
        model.validate()?;
        Ok(model)
    }

    pub fn dim(&self) -> usize {
        self.h0.nrows()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.h0.nrows();
        for (name, m) in [("H0", &self.h0), ("V", &self.v), ("W", &self.w)] {
            if m.nrows() != n || m.ncols() != n {
                return Err(Error::Validation(format!("{name} is {}x{}, expected {n}x{n}", m.nrows(), m.ncols())));
            }
            let defect = hermitian_defect(m);
            if defect > T::lit(1e-12) {
                return Err(Error::Validation(format!("{name} is not Hermitian (defect {defect})")));
            }
        }
        if let Some((w1, w2)) = &self.w_split {
            for (name, m) in [("W1", w1), ("W2", w2)] {
                if hermitian_defect(m) > T::lit(1e-12) {
                    return Err(Error::Validation(format!("{name} is not Hermitian")));
                }
            }
        }
        if self.z.im == T::zero() {
            return Err(Error::domain("spectral parameter must have a nonzero imaginary part"));
        }
        Ok(())
    }

    /// Gaussian Hermitian `H₀`, `V`, `W₁`, `W₂` (entries of variance `1/dim`) from `seed`.
    pub fn random(seed: u64, dim: usize, z: Complex<T>) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h0 = random_hermitian(&mut rng, dim);
        let v = random_hermitian(&mut rng, dim);
        let w1 = random_hermitian(&mut rng, dim);
        let w2 = random_hermitian(&mut rng, dim);
        Self::with_split(h0, v, w1, w2, z)
    }

    /// Random model whose dimension (4–16) and `z = E + iη` (`E ∈ [−2, 2]`, `η ∈ [0.1, 2]`) also come from `seed`.
    pub fn random_suite_member(seed: u64) -> Result<Self> {
        let mut rng = Self::parameter_rng(seed);
        let dim = rng.random_range(4..=16);
        Self::random_with_dim(seed, dim)
    }

    /// Random model of fixed dimension with `z` drawn from `seed` as in [`Self::random_suite_member`].
    pub fn random_with_dim(seed: u64, dim: usize) -> Result<Self> {
        let mut rng = Self::parameter_rng(seed);
        let _dim: usize = rng.random_range(4..=16);
        let e: f64 = rng.random_range(-2.0..=2.0);
        let eta: f64 = rng.random_range(0.1..=2.0);
        Self::random(seed, dim, c(e, eta))
    }

    fn parameter_rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15)
    }

    /// `(λH₀, λV, λW, λz)`.
    pub fn scaled(&self, lambda: T) -> Self {
        let l = Complex::new(lambda, T::zero());
        FiniteModel {
            h0: &self.h0 * l,
            v: &self.v * l,
            w: &self.w * l,
            w_split: self.w_split.as_ref().map(|(a, b)| (a * l, b * l)),
            z: self.z * l,
        }
    }

    pub fn with_z(&self, z: Complex<T>) -> Self {
        FiniteModel { z, ..self.clone() }
    }

    /// Same model with `V → εV`.
    pub fn with_binding_scaled(&self, eps: T) -> Self {
        FiniteModel {
            v: &self.v * Complex::new(eps, T::zero()),
            ..self.clone()
        }
    }

    fn shifted(&self, h: &CMatrix<T>) -> CMatrix<T> {
        CMatrix::<T>::identity(self.dim(), self.dim()) * self.z - h
    }

    /// `G₀⁻¹ = z − H₀`.
    pub fn g0_inverse(&self) -> CMatrix<T> {
        self.shifted(&self.h0)
    }

    /// `G_V⁻¹ = z − H₀ − V`.
    pub fn gv_inverse(&self) -> CMatrix<T> {
        self.shifted(&(&self.h0 + &self.v))
    }

    /// `G_W⁻¹ = z − H₀ − W`.
    pub fn gw_inverse(&self) -> CMatrix<T> {
        self.shifted(&(&self.h0 + &self.w))
    }

    /// `G⁻¹ = z − H₀ − V − W`.
    pub fn g_inverse(&self) -> CMatrix<T> {
        self.shifted(&(&self.h0 + &self.v + &self.w))
    }
}

fn norm1<T: AgsScalar>(m: &CMatrix<T>) -> T {
    m.column_iter()
        .map(|col| col.iter().fold(T::zero(), |s, x| s + x.norm()))
        .fold(T::zero(), |a, b| RealField::max(a, b))
}

/// Inverse with a 1-norm condition-number guard. Returns the inverse and its condition number.
pub fn guarded_inverse<T: AgsScalar>(a: &CMatrix<T>, what: &str) -> Result<(CMatrix<T>, f64)> {
    let inv = a
        .clone()
        .lu()
        .try_inverse()
        .ok_or_else(|| Error::numerical(format!("{what} is singular"), f64::INFINITY, MAX_CONDITION))?;
    let cond = (norm1(a) * norm1(&inv)).to_f64_lossy();
    if !(cond <= MAX_CONDITION) {
        return Err(Error::numerical(format!("{what} is ill-conditioned"), cond, MAX_CONDITION));
    }
    Ok((inv, cond))
}

#[derive(Clone, Debug)]
pub struct Resolvents<T: AgsScalar> {
    pub g0: CMatrix<T>,
    pub g: CMatrix<T>,
    pub gv: CMatrix<T>,
    pub gw: CMatrix<T>,
    /// Largest 1-norm condition number among the four inversions.
    pub condition: f64,
}

pub fn resolvents<T: AgsScalar>(model: &FiniteModel<T>) -> Result<Resolvents<T>> {
    model.validate()?;
    let (g0, c0) = guarded_inverse(&model.g0_inverse(), "z - H0")?;
    let (g, c1) = guarded_inverse(&model.g_inverse(), "z - H0 - V - W")?;
    let (gv, c2) = guarded_inverse(&model.gv_inverse(), "z - H0 - V")?;
    let (gw, c3) = guarded_inverse(&model.gw_inverse(), "z - H0 - W")?;
    Ok(Resolvents {
        g0,
        g,
        gv,
        gw,
        condition: c0.max(c1).max(c2).max(c3),
    })
}

/// `T_X(z) = X + X (z − H₀ − X)⁻¹ X`.
pub fn t_matrix<T: AgsScalar>(h0: &CMatrix<T>, x: &CMatrix<T>, z: Complex<T>) -> Result<CMatrix<T>> {
    let n = h0.nrows();
    let shifted = CMatrix::<T>::identity(n, n) * z - h0 - x;
    let (gx, _) = guarded_inverse(&shifted, "z - H0 - X")?;
    Ok(x + x * gx * x)
}

/// `U_VV = G_V⁻¹ (G − G_V) G_V⁻¹`.
pub fn u_vv_from_definition<T: AgsScalar>(model: &FiniteModel<T>) -> Result<CMatrix<T>> {
    let r = resolvents(model)?;
    let gvi = model.gv_inverse();
    Ok(&gvi * (&r.g - &r.gv) * &gvi)
}

/// `U_WV = G_W⁻¹ G G_V⁻¹`.
pub fn u_wv_from_definition<T: AgsScalar>(model: &FiniteModel<T>) -> Result<CMatrix<T>> {
    let r = resolvents(model)?;
    Ok(model.gw_inverse() * &r.g * model.gv_inverse())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Identity {
    /// `G = G_V + G_V U_VV G_V`
    ResolventViaUvv,
    /// `G = G_W U_WV G_V`
    ResolventViaUwv,
    /// `U_VV = W G_W U_WV`
    UvvFromUwv,
    /// `T_W G₀ = W G_W`
    TwG0,
    /// `U_VV = T_W G₀ U_WV`
    FirstAgs,
    /// `U_WV = G₀⁻¹ + T_V G₀ U_VV`
    SecondAgs,
    /// `U_VV = T_W + T_W G₀ T_V G₀ U_VV`
    Decoupled,
    /// `G₀⁻¹ G G_V⁻¹ = G₀⁻¹ + (1 + T_V G₀) U_VV`
    Breakup,
    /// `T_X = X + X G₀ T_X` for `X ∈ {V, W}`
    LippmannSchwinger,
    /// `W = W₁ + W₂` when a split is stored
    AdditiveW,
}

impl Identity {
    pub fn formula(self) -> &'static str {
        match self {
            Identity::ResolventViaUvv => "G = G_V + G_V U_VV G_V",
            Identity::ResolventViaUwv => "G = G_W U_WV G_V",
            Identity::UvvFromUwv => "U_VV = W G_W U_WV",
            Identity::TwG0 => "T_W G0 = W G_W",
            Identity::FirstAgs => "U_VV = T_W G0 U_WV",
            Identity::SecondAgs => "U_WV = G0^-1 + T_V G0 U_VV",
            Identity::Decoupled => "U_VV = T_W + T_W G0 T_V G0 U_VV",
            Identity::Breakup => "G0^-1 G G_V^-1 = G0^-1 + (1 + T_V G0) U_VV",
            Identity::LippmannSchwinger => "T_X = X + X G0 T_X",
            Identity::AdditiveW => "W = W1 + W2",
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct IdentityResidual {
    pub identity: Identity,
    pub residual: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct IdentityReport {
    pub dim: usize,
    pub tolerance: f64,
    pub condition: f64,
    pub residuals: Vec<IdentityResidual>,
    /// `‖U_VV − T_W‖/‖U_VV‖`, reported but never failed on.
    pub truncation_gap: Option<f64>,
}

impl IdentityReport {
    pub fn all_passed(&self) -> bool {
        self.residuals.iter().all(|r| r.passed)
    }

    pub fn worst(&self) -> f64 {
        self.residuals.iter().map(|r| r.residual).fold(0.0, f64::max)
    }

    pub fn residual(&self, id: Identity) -> Option<f64> {
        self.residuals.iter().find(|r| r.identity == id).map(|r| r.residual)
    }
}

/// `‖lhs − rhs‖_F / max(‖rhs‖_F, 1e-14)`.
pub fn relative_residual<T: AgsScalar>(lhs: &CMatrix<T>, rhs: &CMatrix<T>) -> f64 {
    let num = frob(&(lhs - rhs)).to_f64_lossy();
    let den = frob(rhs).to_f64_lossy().max(RESIDUAL_FLOOR);
    num / den
}

pub fn verify_identities<T: AgsScalar>(model: &FiniteModel<T>, tol: f64) -> Result<IdentityReport> {
    let r = resolvents(model)?;
    let n = model.dim();
    let one = CMatrix::<T>::identity(n, n);
    let g0i = model.g0_inverse();
    let gvi = model.gv_inverse();
    let gwi = model.gw_inverse();
    let (w, v) = (&model.w, &model.v);

    let u_vv = &gvi * (&r.g - &r.gv) * &gvi;
    let u_wv = &gwi * &r.g * &gvi;
    let t_w = w + w * &r.gw * w;
    let t_v = v + v * &r.gv * v;

    let mut checks: Vec<(Identity, f64)> = vec![
        (Identity::ResolventViaUvv, relative_residual(&r.g, &(&r.gv + &r.gv * &u_vv * &r.gv))),
        (Identity::ResolventViaUwv, relative_residual(&r.g, &(&r.gw * &u_wv * &r.gv))),
        (Identity::UvvFromUwv, relative_residual(&u_vv, &(w * &r.gw * &u_wv))),
        (Identity::TwG0, relative_residual(&(&t_w * &r.g0), &(w * &r.gw))),
        (Identity::FirstAgs, relative_residual(&u_vv, &(&t_w * &r.g0 * &u_wv))),
        (Identity::SecondAgs, relative_residual(&u_wv, &(&g0i + &t_v * &r.g0 * &u_vv))),
        (
            Identity::Decoupled,
            relative_residual(&u_vv, &(&t_w + &t_w * &r.g0 * &t_v * &r.g0 * &u_vv)),
        ),
        (
            Identity::Breakup,
            relative_residual(&(&g0i * &r.g * &gvi), &(&g0i + (&one + &t_v * &r.g0) * &u_vv)),
        ),
        (
            Identity::LippmannSchwinger,
            relative_residual(&t_w, &(w + w * &r.g0 * &t_w)).max(relative_residual(&t_v, &(v + v * &r.g0 * &t_v))),
        ),
    ];
    if let Some((w1, w2)) = &model.w_split {
        checks.push((Identity::AdditiveW, relative_residual(w, &(w1 + w2))));
    }
    let norm_u = frob(&u_vv).to_f64_lossy();
    let truncation_gap = (norm_u > 0.0).then(|| frob(&(&u_vv - &t_w)).to_f64_lossy() / norm_u);
    Ok(IdentityReport {
        dim: n,
        tolerance: tol,
        condition: r.condition,
        residuals: checks
            .into_iter()
            .map(|(identity, residual)| IdentityResidual {
                identity,
                residual,
                passed: residual < tol,
            })
            .collect(),
        truncation_gap,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TruncationGap {
    /// `‖U_VV − T_W‖/‖U_VV‖`.
    pub lowest_order: f64,
    /// `‖U_VV − (T_W + T_W G₀ T_V G₀ T_W)‖/‖U_VV‖`.
    pub first_iteration: f64,
}

/// `None` when `U_VV = 0` and the relative gap is undefined.
pub fn truncation_gap<T: AgsScalar>(model: &FiniteModel<T>) -> Result<Option<TruncationGap>> {
    let r = resolvents(model)?;
    let gvi = model.gv_inverse();
    let u_vv = &gvi * (&r.g - &r.gv) * &gvi;
    let norm_u = frob(&u_vv).to_f64_lossy();
    if norm_u == 0.0 {
        return Ok(None);
    }
    let (w, v) = (&model.w, &model.v);
    let t_w = w + w * &r.gw * w;
    let t_v = v + v * &r.gv * v;
    let first = &t_w + &t_w * &r.g0 * &t_v * &r.g0 * &t_w;
    Ok(Some(TruncationGap {
        lowest_order: frob(&(&u_vv - &t_w)).to_f64_lossy() / norm_u,
        first_iteration: frob(&(&u_vv - &first)).to_f64_lossy() / norm_u,
    }))
}

/// Least-squares slope of `log y` against `log x`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = xs.iter().zip(ys).map(|(x, y)| (x.ln(), y.ln())).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}
