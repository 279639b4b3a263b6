//! Exact outgoing-wave Green function for a point source at the origin,
//! summed over Landau levels, and the currents it carries.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::classical::ser_complex;
use crate::error::{Error, Result};
use crate::profile::{DensityProfile, Method, ProfileRow};
use crate::scales::{scaled_z_quantum, FieldSetup, PhysicalPoint, ELECTRON_MASS, ELEMENTARY_CHARGE, HBAR};
use crate::specfun::{airy_exponent, airy_scaled, LaguerreFunctions};

pub const DEFAULT_TOLERANCE: f64 = 1e-10;
pub const MAX_TERMS: usize = 100_000;

/// sup Ai(x)·e^ξ over x >= 0, attained at the origin.
const AI_SCALED_MAX: f64 = 0.3551;
/// sup |Ci(x)|·e^-ξ over the real line.
const CI_SCALED_MAX: f64 = 1.04;
/// sup |Ai(x)| over x <= 0.
const AI_NEG_MAX: f64 = 0.5357;

/// One transverse level with μ = 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LandauTerm {
    pub n: usize,
    /// E_n, J
    pub energy: f64,
    /// E - E_n, J
    pub parallel_energy: f64,
    /// No classically allowed motion along z in this channel.
    pub suppressed: bool,
}

/// Transverse energy of the state (n, μ), J.
pub fn landau_energy(n: usize, mu: i64, setup: &FieldSetup) -> f64 {
    let q = if mu >= 0 { 2 * n as u64 + 1 } else { 2 * n as u64 + 2 * mu.unsigned_abs() + 1 };
    q as f64 * HBAR * setup.omega_l
}

pub fn landau_term(n: usize, setup: &FieldSetup) -> LandauTerm {
    let energy = landau_energy(n, 0, setup);
    let parallel_energy = setup.energy - energy;
    LandauTerm { n, energy, parallel_energy, suppressed: parallel_energy < 0.0 }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GreenValue {
    /// G, 1/(J·m³)
    #[serde(serialize_with = "ser_complex")]
    pub value: Complex64,
    /// ∂G/∂ẑ, 1/(J·m⁴)
    #[serde(serialize_with = "ser_complex")]
    pub dz: Complex64,
    pub terms_used: usize,
    pub tail_bound: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurrentValue {
    /// J, 1/s
    pub current: f64,
    /// J/|C|²
    pub per_source_strength: f64,
    pub terms_used: usize,
    pub tail_bound: f64,
}

// Ai(x_hi)·Ci(x_lo) for x_hi >= x_lo, optionally with either factor
// differentiated, formed from scaled values so that nothing overflows.
fn airy_product(x_hi: f64, x_lo: f64, d_hi: bool, d_lo: bool) -> Result<Complex64> {
    let a = airy_scaled(x_hi)?;
    let b = airy_scaled(x_lo)?;
    let (xh, xl) = (airy_exponent(x_hi), airy_exponent(x_lo));
    let ai_h = if d_hi { a.ai_prime } else { a.ai };
    let (bi_l, ai_l) = if d_lo { (b.bi_prime, b.ai_prime) } else { (b.bi, b.ai) };
    Ok(Complex64::new(bi_l * (xl - xh).exp(), ai_l * (-xl - xh).exp()) * ai_h)
}

/// Outgoing-wave Green function of the 1-D linear potential, 1/(J·m).
pub fn green_parallel(zeta: f64, zeta_p: f64, e_parallel: f64, setup: &FieldSetup) -> Result<Complex64> {
    let be = setup.beta * e_parallel;
    let u_lo = be + zeta.min(zeta_p);
    let u_hi = be + zeta.max(zeta_p);
    let scale = -std::f64::consts::PI * setup.beta * setup.beta * ELEMENTARY_CHARGE * setup.electric_field;
    Ok(airy_product(-u_lo, -u_hi, false, false)? * scale)
}

fn prefactor(setup: &FieldSetup) -> f64 {
    -ELECTRON_MASS * setup.magnetic_field / (setup.beta * HBAR.powi(3) * setup.electric_field)
}

/// Laguerre argument x = mω_L ρ̂²/ħ.
fn laguerre_argument(rho_hat: f64, setup: &FieldSetup) -> f64 {
    ELECTRON_MASS * setup.omega_l * rho_hat * rho_hat / HBAR
}

// Bound on Σ_{m >= n} |term_m| / (|P|·C) given the larger Airy argument
// a0 > 0 of term n, the step s between levels and the spread w = |ζ|.
// Uses ξ(a) - ξ(a - w) >= ½·min(a, w)·√a and monotonicity.
fn series_tail(a0: f64, s: f64, w: f64) -> f64 {
    let h = |a: f64| 0.5 * a.min(w) * a.sqrt();
    let c = 0.5 * w;
    let far = |a: f64| 2.0 / (c * c) * (1.0 + c * a.sqrt()) * (-c * a.sqrt()).exp();
    let integral = if a0 < w { (w - a0) * (-h(a0)).exp() + far(w) } else { far(a0) };
    (-h(a0)).exp() + integral / s
}

// Σ_{j>=0} e^{-k·ξ(a0 + j·s)} by convexity of ξ.
fn convex_tail(a0: f64, s: f64, k: f64) -> f64 {
    (-k * airy_exponent(a0)).exp() / (1.0 - (-k * a0.sqrt() * s).exp())
}

struct Levels {
    alpha0: f64,
    step: f64,
}

impl Levels {
    fn new(setup: &FieldSetup) -> Self {
        let hw = HBAR * setup.omega_l;
        Levels { alpha0: setup.beta * (hw - setup.energy), step: 2.0 * setup.beta * hw }
    }

    fn alpha(&self, n: usize) -> f64 {
        self.alpha0 + n as f64 * self.step
    }
}

/// G(ρ̂, ẑ; E) and ∂G/∂ẑ for ẑ ≠ 0.
pub fn green_function(p: PhysicalPoint, setup: &FieldSetup, tolerance: f64) -> Result<GreenValue> {
    if p.z == 0.0 {
        return Err(Error::Unsupported("the Landau series does not converge absolutely on the plane ẑ = 0".into()));
    }
    if !(p.rho >= 0.0) || !p.rho.is_finite() || !p.z.is_finite() {
        return Err(Error::Domain(format!("invalid point ({}, {})", p.rho, p.z)));
    }
    let pf = prefactor(setup);
    let kz = setup.beta * ELEMENTARY_CHARGE * setup.electric_field;
    let zeta = scaled_z_quantum(p.z, setup);
    let w = zeta.abs();
    let lv = Levels::new(setup);
    let mut sum = Complex64::new(0.0, 0.0);
    let mut dsum = Complex64::new(0.0, 0.0);
    let mut tail = f64::INFINITY;
    for (n, ell) in LaguerreFunctions::new(laguerre_argument(p.rho, setup)).take(MAX_TERMS).enumerate() {
        let alpha = lv.alpha(n);
        let a_hi = alpha - zeta.min(0.0);
        let a_lo = alpha - zeta.max(0.0);
        if ell != 0.0 {
            sum += airy_product(a_hi, a_lo, false, false)? * ell;
            dsum += airy_product(a_hi, a_lo, zeta < 0.0, zeta > 0.0)? * (-kz * ell);
        }
        let next = a_hi + lv.step;
        if next > 0.0 {
            tail = pf.abs() * AI_SCALED_MAX * CI_SCALED_MAX * series_tail(next, lv.step, w);
            // The derivative picks up at most a factor ~ kz·(1 + |arg|)^{1/4}.
            let dtail = tail * 2.0 * kz * (1.0 + next + w).powf(0.25);
            let (g, dg) = (sum * pf, dsum * pf);
            if tail <= tolerance * g.norm() && dtail <= tolerance * dg.norm() {
                return Ok(GreenValue { value: g, dz: dg, terms_used: n + 1, tail_bound: tail });
            }
        }
    }
    let g = sum * pf;
    Err(Error::Series { terms: MAX_TERMS, tail_bound: tail, partial: (g.re, g.im) })
}

/// Im G alone.  Converges everywhere, including the source plane ẑ = 0.
pub fn green_function_imag(p: PhysicalPoint, setup: &FieldSetup, tolerance: f64) -> Result<GreenValue> {
    if !(p.rho >= 0.0) || !p.rho.is_finite() || !p.z.is_finite() {
        return Err(Error::Domain(format!("invalid point ({}, {})", p.rho, p.z)));
    }
    let pf = prefactor(setup);
    let zeta = scaled_z_quantum(p.z, setup);
    let lv = Levels::new(setup);
    let mut sum = 0.0;
    let mut tail = f64::INFINITY;
    for (n, ell) in LaguerreFunctions::new(laguerre_argument(p.rho, setup)).take(MAX_TERMS).enumerate() {
        let alpha = lv.alpha(n);
        let a_hi = alpha - zeta.min(0.0);
        let a_lo = alpha - zeta.max(0.0);
        sum += ell * airy_product(a_hi, a_lo, false, false)?.im;
        let next = a_hi + lv.step;
        if next > 0.0 {
            tail = pf.abs() * AI_SCALED_MAX * AI_NEG_MAX.max(AI_SCALED_MAX) * convex_tail(next, lv.step, 1.0);
            if tail <= tolerance * (sum * pf).abs() {
                return Ok(GreenValue {
                    value: Complex64::new(0.0, sum * pf),
                    dz: Complex64::new(f64::NAN, f64::NAN),
                    terms_used: n + 1,
                    tail_bound: tail,
                });
            }
        }
    }
    Err(Error::Series { terms: MAX_TERMS, tail_bound: tail, partial: (0.0, sum * pf) })
}

/// Total current J(E) emitted by a source of strength |C|² (J²·m³·s... units
/// such that ψ = C·G is a density amplitude).
pub fn total_current(setup: &FieldSetup, source_strength: f64, tolerance: f64) -> Result<CurrentValue> {
    let lv = Levels::new(setup);
    let scale = 2.0 * ELECTRON_MASS * setup.magnetic_field / (setup.beta * HBAR.powi(4) * setup.electric_field);
    let mut sum = 0.0;
    let mut tail = f64::INFINITY;
    for n in 0..MAX_TERMS {
        let alpha = lv.alpha(n);
        let a = airy_scaled(alpha)?;
        sum += (a.ai * (-airy_exponent(alpha)).exp()).powi(2);
        let next = alpha + lv.step;
        if next > 0.0 {
            tail = AI_SCALED_MAX * AI_SCALED_MAX * convex_tail(next, lv.step, 2.0);
            if tail <= tolerance * sum {
                let per = scale * sum;
                return Ok(CurrentValue {
                    current: per * source_strength,
                    per_source_strength: per,
                    terms_used: n + 1,
                    tail_bound: scale * tail * source_strength,
                });
            }
        }
    }
    Err(Error::Series { terms: MAX_TERMS, tail_bound: scale * tail, partial: (scale * sum * source_strength, 0.0) })
}

/// |C|² that makes the total current equal `target_flux` (1/s).
pub fn source_strength_for_flux(setup: &FieldSetup, target_flux: f64, tolerance: f64) -> Result<f64> {
    Ok(target_flux / total_current(setup, 1.0, tolerance)?.per_source_strength)
}

/// Axial current density j_z = (ħ/m)|C|² Im(G*·∂G/∂ẑ), 1/(m²·s).
/// The vector potential of the axial field has no z component.
pub fn current_density(p: PhysicalPoint, setup: &FieldSetup, source_strength: f64, tolerance: f64) -> Result<f64> {
    let g = green_function(p, setup, tolerance)?;
    Ok(HBAR / ELECTRON_MASS * source_strength * (g.value.conj() * g.dz).im)
}

/// n(ρ̂) = 2πρ̂|C·G|² on a radial grid, normalized to the given total flux.
pub fn quantum_density_profile(
    z_hat: f64,
    rho_grid: &[f64],
    setup: &FieldSetup,
    target_flux: f64,
    tolerance: f64,
) -> Result<DensityProfile> {
    if z_hat == 0.0 {
        return Err(Error::Unsupported("quantum profile requested on the plane ẑ = 0".into()));
    }
    let c2 = source_strength_for_flux(setup, target_flux, tolerance)?;
    let rows = rho_grid
        .par_iter()
        .map(|&rho| {
            let g = green_function(PhysicalPoint::new(rho, z_hat), setup, tolerance)?;
            Ok(ProfileRow {
                rho,
                density: 2.0 * std::f64::consts::PI * rho * c2 * g.value.norm_sqr(),
                count: g.terms_used,
                flagged: false,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DensityProfile { z: z_hat, method: Method::Quantum, rows })
}
