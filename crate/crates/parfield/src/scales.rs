//! Physical constants and the dimensionless scales of the parallel-field problem.
//!
//! Lengths are measured in units of the maximal cyclotron diameter
//! d = v0/ω_L and times in units of 1/ω_L.

use serde::Serialize;

use crate::classical::ScaledPoint;
use crate::error::{Error, Result};

/// Electron mass in kg (CODATA 2018).
pub const ELECTRON_MASS: f64 = 9.109_383_701_5e-31;
/// Elementary charge in C (exact).
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
/// Reduced Planck constant in J·s (exact in the 2018 SI).
pub const HBAR: f64 = 1.054_571_817e-34;

/// Field strengths, source energy and every derived scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FieldSetup {
    /// V/m
    pub electric_field: f64,
    /// T
    pub magnetic_field: f64,
    /// eV, as given.
    pub energy_ev: f64,
    /// J
    pub energy: f64,
    /// Larmor frequency eB/(2m), rad/s.
    pub omega_l: f64,
    /// E/(ħω_L)
    pub epsilon: f64,
    /// (2m/(ħ²e²ℰ²))^{1/3}, 1/J.
    pub beta: f64,
    /// Set for E <= 0; only the quantum module accepts such setups.
    pub quantum_only: bool,
    classical: Option<ClassicalScales>,
}

/// Scales that exist only for a positive source energy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassicalScales {
    /// Initial speed sqrt(2E/m), m/s.
    pub v0: f64,
    /// Maximal cyclotron diameter v0/ω_L, m.
    pub d: f64,
    /// Force ratio v0·B/ℰ.
    pub eta: f64,
}

/// A point in cylindrical coordinates, metres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhysicalPoint {
    pub rho: f64,
    pub z: f64,
}

impl PhysicalPoint {
    pub fn new(rho: f64, z: f64) -> Self {
        PhysicalPoint { rho, z }
    }
}

/// Builds a [`FieldSetup`] from ℰ (V/m), B (T) and E (eV).
///
/// A non-positive energy is accepted only with `quantum_only`.
pub fn derive_scales(
    electric_field: f64,
    magnetic_field: f64,
    energy_ev: f64,
    quantum_only: bool,
) -> Result<FieldSetup> {
    if !(electric_field > 0.0 && electric_field.is_finite()) {
        return Err(Error::Domain(format!("electric field must be positive, got {electric_field}")));
    }
    if !(magnetic_field > 0.0 && magnetic_field.is_finite()) {
        return Err(Error::Domain(format!("magnetic field must be positive, got {magnetic_field}")));
    }
    if !energy_ev.is_finite() {
        return Err(Error::Domain("energy must be finite".into()));
    }
    if energy_ev <= 0.0 && !quantum_only {
        return Err(Error::Domain(format!(
            "energy {energy_ev} eV is not positive; only quantum-only setups allow it"
        )));
    }
    let m = ELECTRON_MASS;
    let e = ELEMENTARY_CHARGE;
    let energy = energy_ev * e;
    let omega_l = e * magnetic_field / (2.0 * m);
    let epsilon = energy / (HBAR * omega_l);
    let beta = (2.0 * m / (HBAR * HBAR * e * e * electric_field * electric_field)).cbrt();
    let classical = (energy > 0.0).then(|| {
        let v0 = (2.0 * energy / m).sqrt();
        ClassicalScales { v0, d: v0 / omega_l, eta: v0 * magnetic_field / electric_field }
    });
    Ok(FieldSetup {
        electric_field,
        magnetic_field,
        energy_ev,
        energy,
        omega_l,
        epsilon,
        beta,
        quantum_only: quantum_only || energy <= 0.0,
        classical,
    })
}

impl FieldSetup {
    /// Classical scales, or a domain error for E <= 0.
    pub fn classical(&self) -> Result<ClassicalScales> {
        self.classical
            .ok_or_else(|| Error::Domain("classical scales undefined for E <= 0".into()))
    }

    pub fn eta(&self) -> Option<f64> {
        self.classical.map(|c| c.eta)
    }

    pub fn d(&self) -> Option<f64> {
        self.classical.map(|c| c.d)
    }

    pub fn v0(&self) -> Option<f64> {
        self.classical.map(|c| c.v0)
    }

    /// Free-electron wave number sqrt(2mE)/ħ, 1/m.
    pub fn wave_number(&self) -> Option<f64> {
        self.classical.map(|c| ELECTRON_MASS * c.v0 / HBAR)
    }

    /// Return time η/ω_L of the uphill closed orbit, s.
    pub fn uphill_return_time(&self) -> Option<f64> {
        self.eta().map(|eta| eta / self.omega_l)
    }
}

/// ρ = ρ̂/d, z = ẑ/d.
pub fn to_scaled(p: PhysicalPoint, setup: &FieldSetup) -> Result<ScaledPoint> {
    if p.rho < 0.0 {
        return Err(Error::Domain(format!("negative radius {}", p.rho)));
    }
    let d = setup.classical()?.d;
    Ok(ScaledPoint { rho: p.rho / d, z: p.z / d })
}

/// Inverse of [`to_scaled`].
pub fn from_scaled(p: ScaledPoint, setup: &FieldSetup) -> Result<PhysicalPoint> {
    if p.rho < 0.0 {
        return Err(Error::Domain(format!("negative radius {}", p.rho)));
    }
    let d = setup.classical()?.d;
    Ok(PhysicalPoint { rho: p.rho * d, z: p.z * d })
}

/// ζ = β·e·ℰ·ẑ.
pub fn scaled_z_quantum(z_hat: f64, setup: &FieldSetup) -> f64 {
    setup.beta * ELEMENTARY_CHARGE * setup.electric_field * z_hat
}

/// ζ from the classical scaled coordinate, 2(2ε²/η)^{1/3}·z.
pub fn scaled_z_from_classical(z: f64, setup: &FieldSetup) -> Result<f64> {
    let eta = setup.classical()?.eta;
    Ok(2.0 * (2.0 * setup.epsilon * setup.epsilon / eta).cbrt() * z)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moderate_field_scales() {
        let s = derive_scales(15.0, 0.02, 1e-4, false).unwrap();
        let c = s.classical().unwrap();
        assert!((c.eta - 7.908).abs() < 1e-3);
        assert!((s.epsilon - 86.38).abs() < 1e-2);
    }

    #[test]
    fn cyclotron_diameter_by_hand() {
        // v0 = sqrt(2·1e-4 eV/m), ω_L = eB/2m, evaluated step by step.
        let e_j: f64 = 1e-4 * 1.602_176_634e-19;
        let v0 = (2.0 * e_j / 9.109_383_701_5e-31_f64).sqrt();
        let wl = 1.602_176_634e-19 * 0.02 / (2.0 * 9.109_383_701_5e-31);
        let s = derive_scales(15.0, 0.02, 1e-4, false).unwrap();
        assert!((s.d().unwrap() / (v0 / wl) - 1.0).abs() < 1e-14);
        let p = to_scaled(PhysicalPoint::new(0.0, 30e-6), &s).unwrap();
        assert!((p.z - 30e-6 * wl / v0).abs() < 1e-12);
        assert_eq!(p.rho, 0.0);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(derive_scales(0.0, 0.02, 1e-4, false).is_err());
        assert!(derive_scales(15.0, -1.0, 1e-4, false).is_err());
        assert!(derive_scales(15.0, 0.02, -1e-4, false).is_err());
        let q = derive_scales(15.0, 0.02, -1e-4, true).unwrap();
        assert!(q.quantum_only && q.classical().is_err());
        assert!(q.epsilon < 0.0);
        let s = derive_scales(15.0, 0.02, 1e-4, false).unwrap();
        assert!(to_scaled(PhysicalPoint::new(-1e-6, 0.0), &s).is_err());
    }

    #[test]
    fn zeta_origin_and_sign() {
        let s = derive_scales(15.0, 0.02, 1e-4, false).unwrap();
        assert_eq!(scaled_z_quantum(0.0, &s), 0.0);
        let z = scaled_z_quantum(30e-6, &s);
        assert!(z.is_finite() && z > 0.0);
    }
}
