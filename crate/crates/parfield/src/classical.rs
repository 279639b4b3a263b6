//! Classical motion from a point source: closed-form trajectories, the
//! fixed-energy flight-time equation ε(T) = 1, reduced actions and the
//! closed orbits returning to the source.
//!
//! Everything here works in scaled units (lengths over d, times over 1/ω_L).

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::scales::FieldSetup;

/// Absolute tolerance on flight times.
pub const ROOT_TOL: f64 = 1e-12;
/// Maximum complex Newton iterations for tunnelling roots.
const NEWTON_MAX_ITER: usize = 100;
/// Tunnelling roots whose estimated suppression Im W/ħ exceeds this are
/// not searched for.
const TUNNEL_SKIP: f64 = 60.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScaledPoint {
    pub rho: f64,
    pub z: f64,
}

impl ScaledPoint {
    pub fn new(rho: f64, z: f64) -> Self {
        ScaledPoint { rho, z }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RootKind {
    Early,
    Late,
    Tunneling,
    /// On-axis root of an exactly degenerate (ρ = 0) point.
    Axis,
}

/// One solution of ε(T) = 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FlightTime {
    #[serde(serialize_with = "ser_complex")]
    pub value: Complex64,
    /// k with (k-1)π < Re T <= kπ.
    pub cycle: usize,
    pub kind: RootKind,
}

impl FlightTime {
    pub fn real(&self) -> f64 {
        self.value.re
    }
}

pub(crate) fn ser_complex<S: serde::Serializer>(c: &Complex64, s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeTuple;
    let mut t = s.serialize_tuple(2)?;
    t.serialize_element(&c.re)?;
    t.serialize_element(&c.im)?;
    t.end()
}

/// A classical (or tunnelling) path with everything the semiclassical
/// wavefunction needs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrajectorySolution {
    pub flight_time: FlightTime,
    /// rad; NaN for tunnelling paths.
    pub theta_p: f64,
    pub phi_p: f64,
    /// Reduced action W in units of ħ (complex for tunnelling paths).
    #[serde(serialize_with = "ser_complex")]
    pub action: Complex64,
    /// Undefined (zero) for tunnelling paths.
    pub maslov: u32,
    /// Classical density, m^-3 (tunnelling paths: |K/g| analogue).
    pub density: f64,
    /// Axial velocity at the endpoint, m/s.
    pub v_z: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum OrbitKind {
    Uphill,
    Snake,
    Balloon,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClosedOrbit {
    pub kind: OrbitKind,
    /// 0 for the uphill orbit.
    pub index: usize,
    /// Scaled return time.
    pub return_time: f64,
    /// Emission angle θ′, rad.
    pub emission_angle: f64,
    /// Reduced action at the source, J·s.
    pub action: f64,
}

impl ClosedOrbit {
    /// Radius at which the orbit, continued past the source, crosses the
    /// downstream plane z > 0.
    pub fn crossing_radius(&self, z: f64, eta: f64) -> Option<f64> {
        if z <= 0.0 {
            return None;
        }
        let c = self.emission_angle.cos();
        let t = 0.5 * eta * (-c + (c * c + 4.0 * z / eta).sqrt());
        Some(self.emission_angle.sin() * t.sin().abs())
    }
}

/// Position and velocity along a trajectory at scaled time t.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryState {
    /// x + iy
    pub s: Complex64,
    pub z: f64,
    pub s_dot: Complex64,
    pub z_dot: f64,
}

impl TrajectoryState {
    /// ½(|ṡ|² + ż²) - 2z/η, equal to ½ on every trajectory.
    pub fn scaled_energy(&self, eta: f64) -> f64 {
        0.5 * (self.s_dot.norm_sqr() + self.z_dot * self.z_dot) - 2.0 * self.z / eta
    }
}

/// Closed-form trajectory launched from the origin under (θ′, φ′).
pub fn trajectory_state(theta_p: f64, phi_p: f64, t: f64, eta: f64) -> TrajectoryState {
    let (st, ct) = theta_p.sin_cos();
    TrajectoryState {
        s: Complex64::from_polar(st * t.sin(), phi_p - t),
        z: t * t / eta + t * ct,
        s_dot: Complex64::from_polar(st, phi_p - 2.0 * t),
        z_dot: 2.0 * t / eta + ct,
    }
}

/// ε(T) = ρ²/sin²T + (z/T - T/η)².
#[inline]
pub fn eps(rho: f64, z: f64, eta: f64, t: f64) -> f64 {
    let s = t.sin();
    let q = z / t - t / eta;
    rho * rho / (s * s) + q * q
}

/// D(T) = -½ dε/dT = ρ²cosT/sin³T + z²/T³ - T/η².
#[inline]
pub fn d_fn(rho: f64, z: f64, eta: f64, t: f64) -> f64 {
    let (s, c) = t.sin_cos();
    rho * rho * c / (s * s * s) + z * z / (t * t * t) - t / (eta * eta)
}

/// d²ε/dT².
#[inline]
pub fn eps_second(rho: f64, z: f64, eta: f64, t: f64) -> f64 {
    let (s, c) = t.sin_cos();
    let s2 = s * s;
    2.0 * rho * rho * (s2 + 3.0 * c * c) / (s2 * s2) + 6.0 * z * z / t.powi(4) + 2.0 / (eta * eta)
}

pub(crate) fn eps_c(rho: f64, z: f64, eta: f64, t: Complex64) -> Complex64 {
    let s = t.sin();
    let q = z / t - t / eta;
    rho * rho / (s * s) + q * q
}

pub(crate) fn d_c(rho: f64, z: f64, eta: f64, t: Complex64) -> Complex64 {
    let s = t.sin();
    rho * rho * t.cos() / (s * s * s) + z * z / (t * t * t) - t / (eta * eta)
}

/// Scaled reduced action W̃(T); the physical action is (E/ω_L)·W̃.
#[inline]
pub fn scaled_action(rho: f64, z: f64, eta: f64, t: f64) -> f64 {
    let cot = if rho == 0.0 { 0.0 } else { rho * rho / t.tan() };
    cot + z * z / t + 2.0 * z * t / eta - t * t * t / (3.0 * eta * eta) + t
}

pub(crate) fn scaled_action_c(rho: f64, z: f64, eta: f64, t: Complex64) -> Complex64 {
    rho * rho * t.cos() / t.sin() + z * z / t + 2.0 * z * t / eta - t * t * t / (3.0 * eta * eta) + t
}

/// ε(T) and dε/dT at a real flight time.
pub fn energy_fraction(p: ScaledPoint, t: f64, eta: f64) -> Result<(f64, f64)> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("flight time must be positive, got {t}")));
    }
    if p.rho > 0.0 && t.sin().abs() <= 4.0 * f64::EPSILON * t {
        return Err(Error::Divergence(format!("pole of ε at T = {t}")));
    }
    Ok((eps(p.rho, p.z, eta, t), -2.0 * d_fn(p.rho, p.z, eta, t)))
}

/// Flight times T∓ of the downhill and uphill axis-parallel launches.
pub fn parallel_flight_times(z: f64, eta: f64) -> Result<(f64, f64)> {
    let disc = eta * eta + 4.0 * eta * z;
    if disc < 0.0 {
        return Err(Error::Domain(format!("no axis-parallel path reaches z = {z}")));
    }
    let q = disc.sqrt();
    Ok((0.5 * (q - eta).abs(), 0.5 * (q + eta)))
}

// Bisection to machine resolution on a bracketing interval.
pub(crate) fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> f64 {
    let flo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm > 0.0) == (flo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Minimum of ε in cycle k: (T_m, ε(T_m)).
pub fn cycle_minimum(p: ScaledPoint, k: usize, eta: f64) -> (f64, f64) {
    let (a, b) = cycle_bounds(p.rho, k);
    let tm = bisect(|t| d_fn(p.rho, p.z, eta, t), a, b);
    (tm, eps(p.rho, p.z, eta, tm))
}

fn cycle_bounds(rho: f64, k: usize) -> (f64, f64) {
    let delta = (rho * 1e-6).max(1e-13);
    let a = (k - 1) as f64 * PI;
    let b = k as f64 * PI;
    (a + delta, b - delta)
}

/// Largest cycle that can host a real root for this point.
fn last_cycle(z: f64, eta: f64) -> usize {
    let disc = (eta * eta + 4.0 * eta * z).max(0.0);
    let tp = 0.5 * (disc.sqrt() + eta);
    (tp / PI).ceil().max(1.0) as usize
}

/// All flight times to `p`, sorted by real part.
///
/// Off the axis each cycle contributes an early/late pair or, if
/// `include_tunneling`, one complex root when the pair is absent.  The
/// retained complex root is the member of the conjugate pair whose
/// continued action has a positive imaginary part.  On the axis (ρ = 0)
/// the degenerate times kπ inside [T₋, T₊] and T± themselves are returned.
pub fn find_flight_times(p: ScaledPoint, eta: f64, include_tunneling: bool) -> Result<Vec<FlightTime>> {
    find_flight_times_eps(p, eta, include_tunneling, f64::INFINITY)
}

/// As [`find_flight_times`], with ε = E/(ħω_L) used to skip tunnelling
/// roots that would be suppressed by more than e^-60.
pub fn find_flight_times_eps(
    p: ScaledPoint,
    eta: f64,
    include_tunneling: bool,
    epsilon: f64,
) -> Result<Vec<FlightTime>> {
    if p.rho < 0.0 || !p.rho.is_finite() || !p.z.is_finite() {
        return Err(Error::Domain(format!("invalid point ({}, {})", p.rho, p.z)));
    }
    if p.rho == 0.0 {
        return axis_roots(p.z, eta);
    }
    let mut out = Vec::new();
    let kmax = last_cycle(p.z, eta) + usize::from(include_tunneling);
    for k in 1..=kmax {
        let (a, b) = cycle_bounds(p.rho, k);
        let (tm, em) = cycle_minimum(p, k, eta);
        if em <= 1.0 && p.rho <= 1.0 {
            let g = |t: f64| eps(p.rho, p.z, eta, t) - 1.0;
            let t1 = bisect(g, a, tm);
            let t2 = bisect(g, tm, b);
            out.push(FlightTime { value: t1.into(), cycle: k, kind: RootKind::Early });
            out.push(FlightTime { value: t2.into(), cycle: k, kind: RootKind::Late });
        } else if include_tunneling {
            if let Some(t) = tunneling_root(p, k, eta, tm, em, epsilon)? {
                out.push(FlightTime { value: t, cycle: k, kind: RootKind::Tunneling });
            }
        }
    }
    out.sort_by(|x, y| x.value.re.total_cmp(&y.value.re));
    Ok(out)
}

fn axis_roots(z: f64, eta: f64) -> Result<Vec<FlightTime>> {
    let (tm, tp) = match parallel_flight_times(z, eta) {
        Ok(v) => v,
        Err(_) => return Ok(Vec::new()),
    };
    let cyc = |t: f64| ((t / PI).ceil().max(1.0)) as usize;
    let mut out = Vec::new();
    if tm > 0.0 {
        out.push(FlightTime { value: tm.into(), cycle: cyc(tm), kind: RootKind::Axis });
    }
    let mut k = 1usize;
    while (k as f64) * PI < tp {
        let t = k as f64 * PI;
        if t > tm {
            out.push(FlightTime { value: t.into(), cycle: k, kind: RootKind::Axis });
        }
        k += 1;
    }
    out.push(FlightTime { value: tp.into(), cycle: cyc(tp), kind: RootKind::Axis });
    Ok(out)
}

fn tunneling_root(
    p: ScaledPoint,
    k: usize,
    eta: f64,
    tm: f64,
    em: f64,
    epsilon: f64,
) -> Result<Option<Complex64>> {
    let (a, b) = ((k - 1) as f64 * PI, k as f64 * PI);
    let e2 = eps_second(p.rho, p.z, eta, tm);
    let width = (2.0 * (em - 1.0) / e2).sqrt();
    // Quadratic-model estimate of Im W/ħ.
    let suppression = epsilon * 2.0 / 3.0 * (em - 1.0) * width;
    if suppression > TUNNEL_SKIP {
        return Ok(None);
    }
    // Newton may settle on a root of a neighbouring cycle; the cycle then
    // has no complex root of its own.
    let mut settled = false;
    for scale in [1.0, 0.5, 2.0, 0.25] {
        let mut t = Complex64::new(tm, -width * scale);
        let mut converged = false;
        for _ in 0..NEWTON_MAX_ITER {
            let f = eps_c(p.rho, p.z, eta, t) - 1.0;
            let df = -2.0 * d_c(p.rho, p.z, eta, t);
            let dt = f / df;
            t -= dt;
            if !t.re.is_finite() || !t.im.is_finite() {
                break;
            }
            if dt.norm() < ROOT_TOL {
                converged = true;
                break;
            }
        }
        settled |= converged;
        if converged && t.re > a && t.re < b && t.im != 0.0 {
            if scaled_action_c(p.rho, p.z, eta, t).im < 0.0 {
                t = t.conj();
            }
            return Ok(Some(t));
        }
    }
    if settled {
        return Ok(None);
    }
    Err(Error::Convergence {
        cycle: k,
        detail: format!("no tunnelling root near T = {tm} at (ρ, z) = ({}, {})", p.rho, p.z),
    })
}

/// Maximal number of flight times near the axis at height z > 0,
/// N = 2(⌊η/π⌋ + n(z)).  n(z) is obtained by counting the cycles that
/// overlap [T₋, T₊].
pub fn count_on_axis(z: f64, eta: f64) -> Result<usize> {
    if !(z > 0.0) {
        return Err(Error::Domain(format!("axis count needs z > 0, got {z}")));
    }
    let (tm, tp) = parallel_flight_times(z, eta)?;
    let first = (tm / PI).floor() as usize + 1;
    let last = (tp / PI).ceil() as usize;
    let cycles = last + 1 - first;
    let n = cycles - (eta / PI).floor() as usize;
    Ok(2 * ((eta / PI).floor() as usize + n))
}

/// Reduced action W = (E/ω_L)·W̃(T), J·s.
pub fn reduced_action(p: ScaledPoint, t: f64, eta: f64, setup: &FieldSetup) -> Result<f64> {
    if p.rho > 0.0 && t.sin() == 0.0 {
        return Err(Error::Divergence(format!("action pole at T = {t}")));
    }
    Ok(setup.energy / setup.omega_l * scaled_action(p.rho, p.z, eta, t))
}

/// Emission angles (θ′, φ′) of the path reaching `p` (azimuth φ = 0) at T.
pub fn emission_angles(p: ScaledPoint, t: f64, eta: f64) -> Result<(f64, f64)> {
    let c = p.z / t - t / eta;
    if c.abs() > 1.0 + 1e-9 {
        return Err(Error::Domain(format!("cos θ′ = {c} outside [-1, 1] at T = {t}")));
    }
    Ok((c.clamp(-1.0, 1.0).acos(), t.rem_euclid(PI)))
}

/// Uphill orbit and the ⌊η/π⌋ magnetic closed orbits.
pub fn closed_orbits(eta: f64, setup: &FieldSetup) -> Vec<ClosedOrbit> {
    let scale = setup.energy / setup.omega_l;
    scaled_closed_orbits(eta)
        .into_iter()
        .map(|o| ClosedOrbit { action: scale * o.action, ..o })
        .collect()
}

/// As [`closed_orbits`] with the action in units of E/ω_L.
pub fn scaled_closed_orbits(eta: f64) -> Vec<ClosedOrbit> {
    let mut out = vec![ClosedOrbit {
        kind: OrbitKind::Uphill,
        index: 0,
        return_time: eta,
        emission_angle: PI,
        action: 2.0 * eta / 3.0,
    }];
    let mut k = 1usize;
    while (k as f64) * PI < eta {
        let tk = k as f64 * PI;
        out.push(ClosedOrbit {
            kind: if k % 2 == 1 { OrbitKind::Snake } else { OrbitKind::Balloon },
            index: k,
            return_time: tk,
            emission_angle: (-tk / eta).acos(),
            action: tk * (1.0 - tk * tk / (3.0 * eta * eta)),
        });
        k += 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scales::derive_scales;

    #[test]
    fn source_point_and_axis_launch() {
        let s = trajectory_state(0.7, 0.2, 0.0, 3.0);
        assert_eq!(s.s.norm(), 0.0);
        assert_eq!(s.z, 0.0);
        for &t in &[0.5, 2.0, 7.0] {
            let s = trajectory_state(0.0, 0.0, t, 3.0);
            assert!(s.s.norm() < 1e-15);
            assert!((s.z - (t * t / 3.0 + t)).abs() < 1e-12);
        }
    }

    #[test]
    fn energy_identity() {
        for &(th, ph) in &[(0.3, 1.0), (1.9, -0.4), (2.8, 2.2)] {
            for &t in &[0.3, 1.7, 9.2] {
                let s = trajectory_state(th, ph, t, 7.908);
                assert!((s.scaled_energy(7.908) - 0.5).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn free_fall_minimum_and_parallel_times() {
        let (eta, z): (f64, f64) = (11.0, 3.0);
        let tff = (eta * z).sqrt();
        let (e, _) = energy_fraction(ScaledPoint::new(0.0, z), tff, eta).unwrap();
        assert!(e.abs() < 1e-14);
        let (tm, tp) = parallel_flight_times(z, eta).unwrap();
        assert!((tp - tm - eta).abs() < 1e-12);
        for t in [tm, tp] {
            let (e, _) = energy_fraction(ScaledPoint::new(0.0, z), t, eta).unwrap();
            assert!((e - 1.0).abs() < 1e-12);
        }
        assert_eq!(parallel_flight_times(0.0, eta).unwrap(), (0.0, eta));
        assert!(parallel_flight_times(-3.0, eta).is_err());
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let p = ScaledPoint::new(0.4, 1.3);
        for &t in &[0.7, 2.0, 4.1, 8.3] {
            let (_, de) = energy_fraction(p, t, 5.0).unwrap();
            let h = 1e-6;
            let fd = (eps(p.rho, p.z, 5.0, t + h) - eps(p.rho, p.z, 5.0, t - h)) / (2.0 * h);
            assert!((de / fd - 1.0).abs() < 1e-6, "t={t}");
        }
    }

    #[test]
    fn pole_reported() {
        assert!(energy_fraction(ScaledPoint::new(0.3, 1.0), PI, 5.0).is_err());
        assert!(energy_fraction(ScaledPoint::new(0.3, 1.0), -1.0, 5.0).is_err());
    }

    #[test]
    fn outside_unit_radius_is_empty() {
        let r = find_flight_times(ScaledPoint::new(1.2, 0.5), 7.908, false).unwrap();
        assert!(r.is_empty());
    }

    #[test]
    fn roots_have_small_residual_and_signs() {
        let p = ScaledPoint::new(0.3, 3.0);
        let r = find_flight_times(p, 11.0, false).unwrap();
        assert!(!r.is_empty());
        for ft in &r {
            let t = ft.real();
            assert!((eps(p.rho, p.z, 11.0, t) - 1.0).abs() < 1e-10);
            let de = -2.0 * d_fn(p.rho, p.z, 11.0, t);
            match ft.kind {
                RootKind::Early => assert!(de < 0.0),
                RootKind::Late => assert!(de > 0.0),
                _ => unreachable!(),
            }
        }
    }

    #[test]
    fn closed_orbit_bookkeeping() {
        let s = derive_scales(15.0, 0.02, 1e-4, false).unwrap();
        let eta = s.eta().unwrap();
        let orbits = closed_orbits(eta, &s);
        let kinds: Vec<_> = orbits.iter().map(|o| o.kind).collect();
        assert_eq!(kinds, vec![OrbitKind::Uphill, OrbitKind::Snake, OrbitKind::Balloon]);
        assert_eq!(closed_orbits(1.5, &s).len(), 1);
        let snake = orbits[1];
        let st = trajectory_state(snake.emission_angle, 0.0, snake.return_time / 2.0, eta);
        // ρ̇ = sinθ′ cos t vanishes at t = π/2, and so does ż.
        assert!((snake.emission_angle.sin() * (snake.return_time / 2.0).cos()).abs() < 1e-15);
        assert!(st.z_dot.abs() < 1e-15);
        let end = trajectory_state(snake.emission_angle, 0.0, snake.return_time, eta);
        assert!(end.s.norm() < 1e-15 && end.z.abs() < 1e-14);
    }

    #[test]
    fn tunneling_root_decays() {
        let eta = 7.908;
        let p = ScaledPoint::new(0.95, 8.897);
        let r = find_flight_times_eps(p, eta, true, 86.38).unwrap();
        for ft in r.iter().filter(|f| f.kind == RootKind::Tunneling) {
            let w = scaled_action_c(p.rho, p.z, eta, ft.value);
            assert!(w.im > 0.0);
            assert!(ft.value.im < 0.0);
            let res = eps_c(p.rho, p.z, eta, ft.value) - 1.0;
            assert!(res.norm() < 1e-9);
        }
    }
}
