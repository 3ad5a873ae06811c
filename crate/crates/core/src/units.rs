//! Internal unit system.
//!
//! Lengths are nanometres, wavenumbers nm⁻¹, masses amu, binding energies µeV,
//! velocities m/s and surface constants meV·nm³. Momenta are always stored as
//! wavenumbers (ħ = 1); SI constants below are only used to build the
//! conversion factors.

use crate::error::{Error, Result};
use crate::num::Real;

/// CODATA 2018.
pub mod constants {
    pub const HBAR: f64 = 1.054_571_817e-34;
    pub const AMU_IN_KG: f64 = 1.660_539_066_60e-27;
    pub const EV_IN_J: f64 = 1.602_176_634e-19;
    pub const UEV_IN_J: f64 = EV_IN_J * 1e-6;
    pub const MEV_IN_J: f64 = EV_IN_J * 1e-3;
    pub const NM_IN_M: f64 = 1e-9;
    /// ⁴He atomic mass in amu.
    pub const HELIUM4_MASS: f64 = 4.002_603_254;
}

use constants::*;

/// `2·amu·µeV/ħ²` in nm⁻² per (amu·µeV).
const KAPPA_SQ_PER_AMU_UEV: f64 = 2.0 * AMU_IN_KG * UEV_IN_J / (HBAR * HBAR) * NM_IN_M * NM_IN_M;
/// `amu·(m/s)/ħ` in nm⁻¹.
const WAVENUMBER_PER_AMU_MS: f64 = AMU_IN_KG / HBAR * NM_IN_M;
/// `meV·nm / (ħ · 1 m/s)`, dimensionless.
const PHASE_PER_MEV_NM_MS: f64 = MEV_IN_J * NM_IN_M / HBAR;

pub fn micro_ev_to_joule<T: Real>(e: T) -> T {
    e * T::lit(UEV_IN_J)
}

pub fn joule_to_micro_ev<T: Real>(e: T) -> T {
    e / T::lit(UEV_IN_J)
}

pub fn amu_to_kg<T: Real>(m: T) -> T {
    m * T::lit(AMU_IN_KG)
}

pub fn kg_to_amu<T: Real>(m: T) -> T {
    m / T::lit(AMU_IN_KG)
}

pub fn nm_to_m<T: Real>(x: T) -> T {
    x * T::lit(NM_IN_M)
}

pub fn m_to_nm<T: Real>(x: T) -> T {
    x / T::lit(NM_IN_M)
}

/// Bound-state decay constant `κ = √(2μ|E_b|)/ħ` in nm⁻¹, with reduced mass
/// `μ = m/2` for two constituents of mass `m`.
pub fn kappa_from_binding<T: Real>(binding_energy: T, constituent_mass: T) -> Result<T> {
    if !(binding_energy >= T::zero()) {
        return Err(Error::domain(format!(
            "binding energy magnitude must be non-negative, got {binding_energy} µeV"
        )));
    }
    if !(constituent_mass > T::zero()) {
        return Err(Error::domain(format!(
            "constituent mass must be positive, got {constituent_mass} amu"
        )));
    }
    let reduced = constituent_mass * T::lit(0.5);
    Ok((reduced * binding_energy * T::lit(KAPPA_SQ_PER_AMU_UEV)).sqrt())
}

/// Inverse of [`kappa_from_binding`], in µeV.
pub fn binding_from_kappa<T: Real>(kappa: T, constituent_mass: T) -> T {
    kappa * kappa / (constituent_mass * T::lit(0.5) * T::lit(KAPPA_SQ_PER_AMU_UEV))
}

/// Total wavenumber `P/ħ = Mv/ħ` in nm⁻¹.
pub fn beam_wavenumber<T: Real>(total_mass: T, velocity: T) -> T {
    total_mass * velocity * T::lit(WAVENUMBER_PER_AMU_MS)
}

/// Eikonal phase per unit of `∫V dz` measured in meV·nm: `1/(ħv)`.
pub fn phase_per_mev_nm<T: Real>(velocity: T) -> T {
    T::lit(PHASE_PER_MEV_NM_MS) / velocity
}
