//! Primitive semiclassical wavefunction built from the classical paths,
//! the Airy-pair uniform approximation across fold caustics, and the
//! matching densities and currents.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::classical::{
    d_c, d_fn, emission_angles, find_flight_times_eps, scaled_action, scaled_action_c, FlightTime, RootKind,
    ScaledPoint, TrajectorySolution,
};
use crate::error::{Error, Result};
use crate::profile::{DensityProfile, Method, ProfileRow};
use crate::quantum::total_current;
use crate::scales::{to_scaled, FieldSetup, PhysicalPoint, ELECTRON_MASS, HBAR};
use crate::specfun::airy;

/// Tunnelling paths with Im W/ħ above this are dropped from the sums.
pub const TUNNEL_DROP: f64 = 40.0;
/// Points closer to the axis than this many free wavelengths are flagged.
const AXIS_WAVELENGTHS: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WaveValue {
    /// ψ, m^(-3/2)
    #[serde(serialize_with = "crate::classical::ser_complex")]
    pub amplitude: Complex64,
    /// |ψ|², m^-3
    pub density: f64,
    pub method: Method,
    /// Paths (or Airy pairs for the uniform method) that contributed.
    pub paths: usize,
    /// Within about a wavelength of the axis, where focal lines spoil both
    /// approximations.
    pub near_axis: bool,
}

/// Airy-pair data of one cyclotron period.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AiryPairCoefficients {
    pub k: usize,
    pub u: f64,
    #[serde(serialize_with = "crate::classical::ser_complex")]
    pub gamma: Complex64,
    #[serde(serialize_with = "crate::classical::ser_complex")]
    pub delta: Complex64,
}

/// Emission rate J0 = |C|²·mk/(πħ³) of a free isotropic source whose
/// field-dressed current equals `target_flux`.
pub fn source_rate(setup: &FieldSetup, target_flux: f64, tolerance: f64) -> Result<f64> {
    let k = setup.classical()?.v0 * ELECTRON_MASS / HBAR;
    let per_c2 = total_current(setup, 1.0, tolerance)?.per_source_strength;
    Ok(target_flux / per_c2 * ELECTRON_MASS * k / (PI * HBAR.powi(3)))
}

/// ω_L²·J0/(4π·v0³): classical density per unit of 1/|T sin²T D|, m^-3.
fn density_scale(setup: &FieldSetup, rate: f64) -> Result<f64> {
    let v0 = setup.classical()?.v0;
    Ok(setup.omega_l * setup.omega_l * rate / (4.0 * PI * v0.powi(3)))
}

/// Classical density of the real path with flight time `t`, m^-3.
pub fn classical_density(t: f64, p: ScaledPoint, setup: &FieldSetup, rate: f64) -> Result<f64> {
    let eta = setup.classical()?.eta;
    let s = t.sin();
    if s.abs() <= 4.0 * f64::EPSILON * t {
        return Err(Error::Divergence(format!("focal line at T = {t}")));
    }
    let g = (t * s * s * d_fn(p.rho, p.z, eta, t)).abs();
    if g == 0.0 || !g.is_finite() {
        return Err(Error::Divergence(format!("caustic at T = {t}")));
    }
    Ok(density_scale(setup, rate)? / g)
}

/// μ = 2k-2 for the early and 2k-1 for the late path of cycle k.
pub fn maslov_index(ft: &FlightTime) -> Result<u32> {
    let k = ft.cycle as u32;
    match ft.kind {
        RootKind::Early => Ok(2 * k - 2),
        RootKind::Late => Ok(2 * k - 1),
        RootKind::Tunneling => Err(Error::Unsupported("Maslov index of a tunnelling path".into())),
        RootKind::Axis => Err(Error::Unsupported("Maslov index of an on-axis path".into())),
    }
}

// One term of the primitive sum: ψ_α = -amp·e^{i(W - πμ/2)}.
#[derive(Debug, Clone, Copy)]
struct PathTerm {
    flight: FlightTime,
    amp: Complex64,
    action: Complex64,
    mu: u32,
    v_z: f64,
}

impl PathTerm {
    fn psi(&self) -> Complex64 {
        -self.amp * (Complex64::i() * (self.action - 0.5 * PI * self.mu as f64)).exp()
    }
}

fn path_terms(p: ScaledPoint, setup: &FieldSetup, rate: f64, tunneling: bool) -> Result<Vec<PathTerm>> {
    let cl = setup.classical()?;
    let eta = cl.eta;
    if p.rho == 0.0 {
        return Err(Error::Divergence("density diverges on the axis".into()));
    }
    let scale = density_scale(setup, rate)?;
    let mut out = Vec::new();
    for ft in find_flight_times_eps(p, eta, tunneling, setup.epsilon)? {
        match ft.kind {
            RootKind::Early | RootKind::Late => {
                let t = ft.real();
                let rho = classical_density(t, p, setup, rate)?;
                out.push(PathTerm {
                    flight: ft,
                    amp: rho.sqrt().into(),
                    action: (setup.epsilon * scaled_action(p.rho, p.z, eta, t)).into(),
                    mu: maslov_index(&ft)?,
                    v_z: cl.v0 * (p.z / t + t / eta),
                });
            }
            RootKind::Tunneling => {
                let t = ft.value;
                let w = setup.epsilon * scaled_action_c(p.rho, p.z, eta, t);
                if w.im > TUNNEL_DROP {
                    continue;
                }
                let s = t.sin();
                let g = t * s * s * d_c(p.rho, p.z, eta, t);
                let mut b = (scale / g).sqrt();
                if (b * Complex64::from_polar(1.0, 0.25 * PI)).re < 0.0 {
                    b = -b;
                }
                out.push(PathTerm {
                    flight: ft,
                    amp: b,
                    action: w,
                    mu: 2 * (ft.cycle as u32 - 1),
                    v_z: f64::NAN,
                });
            }
            RootKind::Axis => return Err(Error::Divergence("density diverges on the axis".into())),
        }
    }
    Ok(out)
}

/// All contributing paths to `p` with densities, actions and Maslov indices.
pub fn trajectories(p: PhysicalPoint, setup: &FieldSetup, rate: f64, tunneling: bool) -> Result<Vec<TrajectorySolution>> {
    let sp = to_scaled(p, setup)?;
    let eta = setup.classical()?.eta;
    path_terms(sp, setup, rate, tunneling)?
        .into_iter()
        .map(|pt| {
            let (theta_p, phi_p) = if pt.flight.kind == RootKind::Tunneling {
                (f64::NAN, f64::NAN)
            } else {
                emission_angles(sp, pt.flight.real(), eta)?
            };
            Ok(TrajectorySolution {
                flight_time: pt.flight,
                theta_p,
                phi_p,
                action: pt.action,
                maslov: pt.mu,
                density: pt.amp.norm_sqr(),
                v_z: pt.v_z,
            })
        })
        .collect()
}

fn near_axis(p: PhysicalPoint, setup: &FieldSetup) -> bool {
    let k = setup.wave_number().unwrap_or(f64::INFINITY);
    p.rho < AXIS_WAVELENGTHS * 2.0 * PI / k
}

fn wave(amplitude: Complex64, method: Method, paths: usize, p: PhysicalPoint, setup: &FieldSetup) -> WaveValue {
    WaveValue { amplitude, density: amplitude.norm_sqr(), method, paths, near_axis: near_axis(p, setup) }
}

/// Primitive semiclassical ψ at `p`; `rate` is the source emission rate J0.
pub fn semiclassical_wavefunction(p: PhysicalPoint, setup: &FieldSetup, rate: f64, tunneling: bool) -> Result<WaveValue> {
    let terms = path_terms(to_scaled(p, setup)?, setup, rate, tunneling)?;
    let psi = terms.iter().map(PathTerm::psi).sum();
    Ok(wave(psi, Method::Semiclassical, terms.len(), p, setup))
}

/// Incoherent sum Σρ_α of the real paths, m^-3.
pub fn classical_total_density(p: PhysicalPoint, setup: &FieldSetup, rate: f64) -> Result<f64> {
    let terms = path_terms(to_scaled(p, setup)?, setup, rate, false)?;
    Ok(terms.iter().map(|t| t.amp.norm_sqr()).sum())
}

/// Axial current density with interference terms, 1/(m²·s).  Tunnelling
/// paths carry no real velocity and are left out.
pub fn semiclassical_current(p: PhysicalPoint, setup: &FieldSetup, rate: f64) -> Result<f64> {
    let terms = path_terms(to_scaled(p, setup)?, setup, rate, false)?;
    let (a, b) = terms.iter().fold((Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)), |(a, b), t| {
        let psi = t.psi();
        (a + psi, b + psi * t.v_z)
    });
    Ok((a.conj() * b).re)
}

/// Airy-pair coefficients of every cycle that has a real pair or a retained
/// tunnelling root at `p`.
pub fn pair_coefficients(p: PhysicalPoint, setup: &FieldSetup, rate: f64) -> Result<Vec<AiryPairCoefficients>> {
    let terms = path_terms(to_scaled(p, setup)?, setup, rate, true)?;
    let mut out = Vec::new();
    let mut i = 0;
    while i < terms.len() {
        let t = &terms[i];
        let k = t.flight.cycle;
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let sp = PI.sqrt() * sign;
        if t.flight.kind == RootKind::Tunneling {
            // The conjugate root plays the role of the second path: a = -i·b̄,
            // and ΔW = 2i·Im W maps to u = (3·Im W/2)^(2/3) > 0.
            let b = t.amp;
            let a = -Complex64::i() * b.conj();
            let u = (1.5 * t.action.im).powf(2.0 / 3.0);
            let ph = Complex64::from_polar(1.0, t.action.re);
            out.push(AiryPairCoefficients {
                k,
                u,
                gamma: ph * (a + b) * (sp * u.powf(0.25)),
                delta: ph * (a - b) * (sp * u.powf(-0.25)),
            });
            i += 1;
            continue;
        }
        let late = terms.get(i + 1).filter(|l| l.flight.cycle == k && l.flight.kind == RootKind::Late);
        let (early, late) = match (t.flight.kind, late) {
            (RootKind::Early, Some(l)) => (t, l),
            _ => return Err(Error::Domain(format!("unpaired path in cycle {k}"))),
        };
        let dw = action_difference(to_scaled(p, setup)?, early.flight.real(), late.flight.real(), setup)?
            .unwrap_or(late.action.re - early.action.re);
        let wbar = 0.5 * (late.action.re + early.action.re);
        let u = -(0.75 * dw).powf(2.0 / 3.0);
        let (a, b) = (late.amp.re, early.amp.re);
        out.push(AiryPairCoefficients {
            k,
            u,
            gamma: Complex64::from_polar(sp * u.abs().powf(0.25) * (a + b), wbar - 0.25 * PI),
            delta: Complex64::from_polar(sp * u.abs().powf(-0.25) * (a - b), wbar + 0.25 * PI),
        });
        i += 2;
    }
    Ok(out)
}

// ΔW/ħ between the late and early paths for close pairs, from
// ∂W̃/∂T = 1 - ε(T); the plain difference of the two actions loses most
// digits next to a fold.
fn action_difference(p: ScaledPoint, t1: f64, t2: f64, setup: &FieldSetup) -> Result<Option<f64>> {
    if t2 - t1 > 0.05 {
        return Ok(None);
    }
    let eta = setup.classical()?.eta;
    let (mid, half) = (0.5 * (t1 + t2), 0.5 * (t2 - t1));
    let sum: f64 = gauss_legendre_20()
        .iter()
        .map(|&(x, w)| w * (1.0 - crate::classical::eps(p.rho, p.z, eta, mid + half * x)))
        .sum();
    Ok(Some(setup.epsilon * half * sum))
}

fn gauss_legendre_20() -> &'static [(f64, f64)] {
    static NODES: std::sync::OnceLock<Vec<(f64, f64)>> = std::sync::OnceLock::new();
    NODES.get_or_init(|| {
        let n = 20;
        (1..=n)
            .map(|i| {
                let mut x = (PI * (i as f64 - 0.25) / (n as f64 + 0.5)).cos();
                let mut dp = 0.0;
                for _ in 0..100 {
                    let (mut p0, mut p1) = (1.0, x);
                    for j in 2..=n {
                        let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
                        p0 = p1;
                        p1 = p2;
                    }
                    dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                    let dx = p1 / dp;
                    x -= dx;
                    if dx.abs() < 1e-16 {
                        break;
                    }
                }
                (x, 2.0 / ((1.0 - x * x) * dp * dp))
            })
            .collect()
    })
}

/// Uniform ψ = Σ_k γ_k·Ai(u_k) + δ_k·Ai′(u_k).
pub fn uniform_wavefunction(p: PhysicalPoint, setup: &FieldSetup, rate: f64) -> Result<WaveValue> {
    let pairs = pair_coefficients(p, setup, rate)?;
    let mut psi = Complex64::new(0.0, 0.0);
    for c in &pairs {
        let a = airy(c.u)?;
        psi += c.gamma * a.ai + c.delta * a.ai_prime;
    }
    Ok(wave(psi, Method::Uniform, pairs.len(), p, setup))
}

/// Radial extent (m) over which u_k changes by one near a fold of cycle
/// `k` at radius `rc` (m) on the plane `z_hat`.
pub fn airy_length(rc: f64, z_hat: f64, k: usize, setup: &FieldSetup) -> Result<f64> {
    let d = setup.classical()?.d;
    let h = 1e-4 * d;
    for r in [rc - h, rc + h] {
        if r <= 0.0 {
            continue;
        }
        let pairs = pair_coefficients(PhysicalPoint::new(r, z_hat), setup, 1.0)?;
        if let Some(c) = pairs.iter().find(|c| c.k == k && c.u < 0.0) {
            return Ok(h / c.u.abs());
        }
    }
    Err(Error::Domain(format!("no real pair of cycle {k} next to ρ̂ = {rc}")))
}

/// Local fringe width 2π/|∂ΔW_k/∂ρ̂| of cycle k at `p`, m.
pub fn fringe_width(p: PhysicalPoint, k: usize, setup: &FieldSetup) -> Result<f64> {
    let h = 1e-6 * setup.classical()?.d;
    let dw = |r: f64| -> Result<f64> {
        let c = pair_coefficients(PhysicalPoint::new(r, p.z), setup, 1.0)?
            .into_iter()
            .find(|c| c.k == k && c.u < 0.0)
            .ok_or_else(|| Error::Domain(format!("no real pair of cycle {k} at ρ̂ = {r}")))?;
        Ok(4.0 / 3.0 * (-c.u).powf(1.5))
    };
    let slope = (dw(p.rho + h)? - dw(p.rho - h)?) / (2.0 * h);
    Ok(2.0 * PI / slope.abs())
}

/// n(ρ̂) = 2πρ̂·ρ(ρ̂) for one of the classical, semiclassical (with
/// tunnelling) or uniform methods, normalized to `target_flux`.
///
/// Rows where the method diverges (axis, caustic) hold NaN and are flagged.
pub fn semiclassical_density_profile(
    z_hat: f64,
    rho_grid: &[f64],
    setup: &FieldSetup,
    method: Method,
    target_flux: f64,
    tolerance: f64,
) -> Result<DensityProfile> {
    let rate = source_rate(setup, target_flux, tolerance)?;
    let rows = rho_grid
        .par_iter()
        .map(|&rho| {
            let p = PhysicalPoint::new(rho, z_hat);
            let value = match method {
                Method::Classical => {
                    let sp = to_scaled(p, setup)?;
                    path_terms(sp, setup, rate, false).map(|t| (t.iter().map(|t| t.amp.norm_sqr()).sum(), t.len(), false))
                }
                Method::Semiclassical => {
                    semiclassical_wavefunction(p, setup, rate, true).map(|w| (w.density, w.paths, w.near_axis))
                }
                Method::Uniform => uniform_wavefunction(p, setup, rate).map(|w| (w.density, w.paths, w.near_axis)),
                Method::Quantum => return Err(Error::Unsupported("quantum profiles live in the quantum module".into())),
            };
            match value {
                Ok((dens, count, flag)) => Ok(ProfileRow {
                    rho,
                    density: 2.0 * PI * rho * dens,
                    count,
                    flagged: flag || near_axis(p, setup),
                }),
                Err(Error::Divergence(_)) => Ok(ProfileRow { rho, density: f64::NAN, count: 0, flagged: true }),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DensityProfile { z: z_hat, method, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::caustics::{caustic_point, Branch};
    use crate::scales::derive_scales;

    fn moderate() -> FieldSetup {
        derive_scales(15.0, 0.02, 1e-4, false).unwrap()
    }

    fn ft(cycle: usize, kind: RootKind) -> FlightTime {
        FlightTime { value: 1.0.into(), cycle, kind }
    }

    #[test]
    fn gauss_legendre_exact_for_degree_39() {
        let q = gauss_legendre_20();
        assert!((q.iter().map(|&(_, w)| w).sum::<f64>() - 2.0).abs() < 1e-14);
        let m38: f64 = q.iter().map(|&(x, w)| w * x.powi(38)).sum();
        assert!((m38 - 2.0 / 39.0).abs() < 1e-14);
    }

    #[test]
    fn close_pair_action_difference_matches_direct() {
        let s = moderate();
        let sp = to_scaled(PhysicalPoint::new(1.3e-6, 30e-6), &s).unwrap();
        let eta = s.eta().unwrap();
        let (tm, _) = crate::classical::cycle_minimum(sp, 2, eta);
        let (t1, t2) = (tm - 0.02, tm + 0.02);
        let direct = s.epsilon * (scaled_action(sp.rho, sp.z, eta, t2) - scaled_action(sp.rho, sp.z, eta, t1));
        let quad = action_difference(sp, t1, t2, &s).unwrap().unwrap();
        assert!((quad - direct).abs() < 1e-9 * direct.abs().max(1.0));
    }

    #[test]
    fn maslov_rule() {
        assert_eq!(maslov_index(&ft(1, RootKind::Early)).unwrap(), 0);
        assert_eq!(maslov_index(&ft(3, RootKind::Late)).unwrap(), 5);
        assert!(matches!(maslov_index(&ft(2, RootKind::Tunneling)), Err(Error::Unsupported(_))));
    }

    #[test]
    fn density_diverges_on_caustic_samples() {
        let s = moderate();
        let eta = s.eta().unwrap();
        let mut checked = 0;
        for i in 0..40 {
            let t = 0.3 + i as f64 * 0.07;
            for br in [Branch::Plus, Branch::Minus] {
                if let Ok(Some(c)) = caustic_point(t, br, eta) {
                    let d = d_fn(c.rho, c.z, eta, t);
                    let g = t * t.sin().powi(2) * d;
                    assert!(g.abs() < 1e-8 * t * t.sin().powi(2) * (c.z * c.z / t.powi(3) + t / (eta * eta)));
                    checked += 1;
                }
            }
        }
        assert!(checked >= 20);
    }

    #[test]
    fn primitive_density_is_the_coherent_sum() {
        let s = moderate();
        let p = PhysicalPoint::new(1.3e-6, 30e-6);
        let w = semiclassical_wavefunction(p, &s, 1.0, false).unwrap();
        let tr = trajectories(p, &s, 1.0, false).unwrap();
        let chi: Vec<f64> = tr.iter().map(|t| t.action.re - 0.5 * PI * t.maslov as f64).collect();
        let mut n = 0.0;
        for i in 0..tr.len() {
            n += tr[i].density;
            for j in 0..i {
                n += 2.0 * (tr[i].density * tr[j].density).sqrt() * (chi[i] - chi[j]).cos();
            }
        }
        assert!((n / w.density - 1.0).abs() < 1e-10);
        assert_eq!(w.paths, tr.len());
    }

    #[test]
    fn global_maslov_shift_leaves_density() {
        let s = moderate();
        let sp = to_scaled(PhysicalPoint::new(1.3e-6, 30e-6), &s).unwrap();
        let terms = path_terms(sp, &s, 1.0, false).unwrap();
        let base: Complex64 = terms.iter().map(PathTerm::psi).sum();
        for shift in 1..4 {
            let moved: Complex64 = terms.iter().map(|t| PathTerm { mu: t.mu + shift, ..*t }.psi()).sum();
            assert!((moved.norm_sqr() / base.norm_sqr() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn current_with_one_path_is_rho_v() {
        let s = moderate();
        let p = PhysicalPoint::new(1.3e-6, 30e-6);
        let sp = to_scaled(p, &s).unwrap();
        let terms = path_terms(sp, &s, 1.0, false).unwrap();
        let one = &terms[0];
        let a = one.psi();
        assert!(((a.conj() * a * one.v_z).re / (one.amp.norm_sqr() * one.v_z) - 1.0).abs() < 1e-12);
        let j = semiclassical_current(p, &s, 1.0).unwrap();
        assert!(j.is_finite());
    }

    #[test]
    fn uniform_is_continuous_through_the_fold() {
        let s = moderate();
        let eta = s.eta().unwrap();
        let d = s.d().unwrap();
        let c = caustic_point(2.5, Branch::Plus, eta).unwrap().unwrap();
        let z_hat = c.z * d;
        let rc = c.rho * d;
        let near = uniform_wavefunction(PhysicalPoint::new(rc * (1.0 - 1e-9), z_hat), &s, 1.0).unwrap();
        let near2 = uniform_wavefunction(PhysicalPoint::new(rc * (1.0 + 1e-9), z_hat), &s, 1.0).unwrap();
        assert!(near.density.is_finite());
        assert!((near.density / near2.density - 1.0).abs() < 1e-4);
    }

    #[test]
    fn uniform_reduces_to_primitive_pair_far_from_fold() {
        // Large |u| on every cycle: compare cycle by cycle.
        let s = moderate();
        let p = PhysicalPoint::new(1.3e-6, 30e-6);
        let sp = to_scaled(p, &s).unwrap();
        let terms = path_terms(sp, &s, 1.0, false).unwrap();
        for c in pair_coefficients(p, &s, 1.0).unwrap() {
            if c.u > -40.0 {
                continue;
            }
            let a = airy(c.u).unwrap();
            let uni = c.gamma * a.ai + c.delta * a.ai_prime;
            let prim: Complex64 = terms.iter().filter(|t| t.flight.cycle == c.k).map(PathTerm::psi).sum();
            let scale = terms.iter().filter(|t| t.flight.cycle == c.k).map(|t| t.amp.norm()).sum::<f64>();
            assert!((uni - prim).norm() < 1e-2 * scale, "k {} u {}", c.k, c.u);
        }
    }

    #[test]
    fn maslov_counting_oracle() {
        // Count zeros of the caustic condition along the path plus focal
        // crossings t = jπ, for random launches.
        use rand::{Rng, SeedableRng};
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        let eta = 7.908;
        let mut done = 0;
        while done < 50 {
            let theta: f64 = rng.random_range(0.05..PI - 0.05);
            let t_end: f64 = rng.random_range(0.1..12.0);
            let st = crate::classical::trajectory_state(theta, 0.0, t_end, eta);
            let p = ScaledPoint::new(st.s.norm(), st.z);
            if p.rho < 1e-6 || (t_end / PI).fract() < 1e-3 || (t_end / PI).fract() > 1.0 - 1e-3 {
                continue;
            }
            let roots = crate::classical::find_flight_times(p, eta, false).unwrap();
            let Some(hit) = roots.iter().find(|r| (r.real() - t_end).abs() < 1e-7) else {
                continue;
            };
            let (s2, c) = (theta.sin().powi(2), theta.cos());
            let f = |t: f64| s2 / t.tan() + 2.0 / eta * c + c * c / t;
            let n = 200_000;
            let mut count = 0u32;
            let mut prev = f(1e-9);
            for i in 1..=n {
                let t = t_end * i as f64 / n as f64;
                let cur = f(t);
                // A pole of cot (focal crossing) flips the sign from - to +.
                if prev.signum() != cur.signum() {
                    count += 1;
                }
                prev = cur;
            }
            assert_eq!(count, maslov_index(hit).unwrap(), "θ′ {theta} T {t_end}");
            done += 1;
        }
    }
}
