//! Caustic surfaces as curves in the (ρ, z) half-plane, parametrized by the
//! flight time t at which trajectories touch them.
//!
//! For each t there are at most two caustic points, the (+) and (−)
//! branches.  Curve k collects the times (k-1)π <= t <= kπ and is traced
//! from its highest point down to its lower cusp.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};

/// Half-width of the band in which η counts as one of its special values.
pub const SPECIAL_BAND: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Branch {
    Plus,
    Minus,
}

impl Branch {
    pub fn sign(self) -> f64 {
        match self {
            Branch::Plus => 1.0,
            Branch::Minus => -1.0,
        }
    }
}

/// A point on a caustic together with the touching time and angle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CausticSample {
    pub t: f64,
    pub branch: Branch,
    pub rho: f64,
    pub z: f64,
    pub cos_theta_p: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BranchReality {
    pub plus: bool,
    pub minus: bool,
}

impl BranchReality {
    pub fn get(&self, b: Branch) -> bool {
        match b {
            Branch::Plus => self.plus,
            Branch::Minus => self.minus,
        }
    }
}

/// Onion dome, conical lid or smooth dome, in late/early variants.  The
/// smooth domes come in three parametrization subtypes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum CausticType {
    Ol,
    Cl,
    Sl,
    Si,
    Se,
    Ce,
    Oe,
}

impl CausticType {
    pub fn label(self) -> &'static str {
        match self {
            CausticType::Ol => "Ol",
            CausticType::Cl => "Cl",
            CausticType::Sl => "Sl",
            CausticType::Si => "Si",
            CausticType::Se => "Se",
            CausticType::Ce => "Ce",
            CausticType::Oe => "Oe",
        }
    }

    /// Position in the sequence the types run through as η grows.
    pub fn rank(self) -> u8 {
        self as u8
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum IrregularKind {
    RadialMax,
    SnakeEndpoint,
    CausticTop,
    MinimalTime,
    CuspDown,
    CuspUp,
    Umbilic,
    Bifurcation,
    OrbitCreation,
}

/// Leading local relation δρ^rho_power ∼ coefficient · δz^z_power.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LocalLaw {
    pub rho_power: i32,
    pub z_power: i32,
    pub coefficient: f64,
}

impl LocalLaw {
    /// Exponent e in |δρ| ∝ |δz|^e.
    pub fn exponent(&self) -> f64 {
        self.z_power as f64 / self.rho_power as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IrregularPoint {
    pub kind: IrregularKind,
    pub t0: f64,
    pub z0: f64,
    pub rho0: f64,
    pub law: LocalLaw,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CausticCurve {
    pub cycle: usize,
    pub type_label: CausticType,
    pub samples: Vec<CausticSample>,
    pub irregulars: Vec<IrregularPoint>,
    /// z-range of the focal line at t = kπ that ends in this curve's lower cusp.
    pub focal_segment: Option<(f64, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SamplingControl {
    /// Largest allowed distance between neighbouring samples.
    pub chord: f64,
    pub max_samples: usize,
}

impl Default for SamplingControl {
    fn default() -> Self {
        SamplingControl { chord: 1e-3, max_samples: 1_000_000 }
    }
}

/// Result of fitting |δρ| = c·|δz|^e near an irregular point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LocalFit {
    pub exponent: f64,
    /// Coefficient in the form of the point's [`LocalLaw`].
    pub coefficient: f64,
    pub samples: usize,
}

/// Intersection of a caustic with a plane z = const.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CausticCrossing {
    pub cycle: usize,
    pub t: f64,
    pub branch: Branch,
    pub rho: f64,
}

fn a_fn(tau: f64, t: f64, eta: f64) -> f64 {
    tau * tau - eta * eta * tau / t + eta * eta
}

/// Larger root τ_> of A(τ, t) = 0, defined for t <= η/2.
pub fn tau_upper(t: f64, eta: f64) -> Option<f64> {
    let r = 1.0 - 4.0 * t * t / (eta * eta);
    (r >= 0.0).then(|| eta * eta / (2.0 * t) * (1.0 + r.sqrt()))
}

/// Which branches give a real caustic point at time t.
pub fn branch_reality(t: f64, eta: f64) -> BranchReality {
    let tau = t.tan();
    let half = 0.5 * eta;
    if tau < 0.0 {
        return BranchReality { plus: true, minus: t <= half };
    }
    if tau == 0.0 {
        return BranchReality { plus: true, minus: true };
    }
    if t > half {
        return BranchReality { plus: false, minus: true };
    }
    match tau_upper(t, eta) {
        Some(tu) if tau >= tu => BranchReality { plus: true, minus: true },
        _ if t == half => BranchReality { plus: false, minus: true },
        _ => BranchReality { plus: false, minus: false },
    }
}

// Caustic point without the reality check; A and ρ² are clamped at zero.
fn raw_point(t: f64, branch: Branch, eta: f64) -> (f64, f64) {
    let tau = t.tan();
    point_with_root(t, tau, a_fn(tau, t, eta).max(0.0).sqrt(), branch, eta)
}

fn point_with_root(t: f64, tau: f64, ra: f64, branch: Branch, eta: f64) -> (f64, f64) {
    let s = branch.sign();
    let z = match branch {
        Branch::Plus => t * t * (t + ra) / (eta * (t - tau)),
        // t - √A rationalized; finite through τ = t.
        Branch::Minus => t * t * (t + tau - eta * eta / t) / (eta * (t + ra)),
    };
    let b = (2.0 * t - eta * eta / t) * tau + eta * eta;
    let sin2 = t.sin().powi(2);
    let rho2 = if b * s >= 0.0 {
        let x = b + s * 2.0 * t * ra;
        -sin2 * t * tau * x / (eta * eta * (t - tau) * (t - tau))
    } else {
        -sin2 * tau * (eta * eta - 4.0 * t * t) / (t * (b - s * 2.0 * t * ra))
    };
    (z, rho2.max(0.0).sqrt())
}

fn sample(t: f64, branch: Branch, z: f64, rho: f64, eta: f64) -> CausticSample {
    CausticSample { t, branch, rho, z, cos_theta_p: z / t - t / eta }
}

/// Caustic point of `branch` at time t, or `None` if that branch is complex.
pub fn caustic_point(t: f64, branch: Branch, eta: f64) -> Result<Option<CausticSample>> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!("caustic time must be positive, got {t}")));
    }
    if !branch_reality(t, eta).get(branch) {
        return Ok(None);
    }
    let (z, rho) = raw_point(t, branch, eta);
    Ok(Some(sample(t, branch, z, rho, eta)))
}

/// Root of η = tan(η/2) in (2(k-1)π, (2k-1)π).
pub fn critical_eta(k: usize) -> f64 {
    assert!(k >= 1, "cycle index starts at 1");
    let lo = 2.0 * (k - 1) as f64 * PI + 1e-9;
    let hi = (2 * k - 1) as f64 * PI - 1e-9;
    crate::classical::bisect(|e| e - (0.5 * e).tan(), lo, hi)
}

/// Minimal caustic time t_min in cycle k, where tan t = τ_>(t).
pub fn minimal_time(k: usize, eta: f64) -> Option<f64> {
    let lo = (k - 1) as f64 * PI;
    let half = 0.5 * eta;
    if half <= lo {
        return None;
    }
    let h = (k as f64 - 0.5) * PI;
    let hi = if half < h { half } else { h - 1e-12 * h };
    let f = |t: f64| t.tan() - tau_upper(t, eta).unwrap_or(f64::INFINITY);
    if !(f(hi) > 0.0) {
        return None;
    }
    Some(crate::classical::bisect(f, lo + 1e-12, hi))
}

pub fn classify_caustic(k: usize, eta: f64) -> CausticType {
    let low = 2.0 * (k - 1) as f64 * PI;
    let mid = (2 * k - 1) as f64 * PI;
    let high = 2.0 * k as f64 * PI;
    if k >= 2 && (eta - low).abs() < SPECIAL_BAND {
        CausticType::Cl
    } else if eta < low {
        CausticType::Ol
    } else if (eta - high).abs() < SPECIAL_BAND {
        CausticType::Ce
    } else if eta > high {
        CausticType::Oe
    } else if eta <= critical_eta(k) + SPECIAL_BAND {
        CausticType::Sl
    } else if eta <= mid + SPECIAL_BAND {
        CausticType::Si
    } else {
        CausticType::Se
    }
}

fn cusp_law(j: usize, eta: f64, down: bool) -> LocalLaw {
    let jp = j as f64 * PI;
    let c = if down {
        -8.0 * eta * eta / (27.0 * jp * (eta + 2.0 * jp).powi(2))
    } else {
        8.0 * eta * eta / (27.0 * jp * (eta - 2.0 * jp).powi(2))
    };
    LocalLaw { rho_power: 2, z_power: 3, coefficient: c }
}

fn top_point(kind: IrregularKind, eta: f64, coefficient: f64) -> IrregularPoint {
    IrregularPoint {
        kind,
        t0: 0.5 * eta,
        z0: -0.25 * eta,
        rho0: 0.0,
        law: LocalLaw { rho_power: 2, z_power: 1, coefficient },
    }
}

fn umbilic(j: usize, eta: f64) -> IrregularPoint {
    IrregularPoint {
        kind: IrregularKind::Umbilic,
        t0: j as f64 * PI,
        z0: -0.25 * eta,
        rho0: 0.0,
        law: LocalLaw { rho_power: 1, z_power: 1, coefficient: 1.0 },
    }
}

fn cusp_up(j: usize, eta: f64) -> IrregularPoint {
    let jp = j as f64 * PI;
    IrregularPoint { kind: IrregularKind::CuspUp, t0: jp, z0: jp * (jp - eta) / eta, rho0: 0.0, law: cusp_law(j, eta, false) }
}

/// Irregular points of the parametrization that lie on curve k, ordered by t.
pub fn irregular_points(k: usize, eta: f64) -> Vec<IrregularPoint> {
    use CausticType::*;
    let ty = classify_caustic(k, eta);
    let h = (k as f64 - 0.5) * PI;
    let kp = k as f64 * PI;
    let mut out = Vec::new();
    match ty {
        Ol => out.push(cusp_up(k - 1, eta)),
        Cl => out.push(umbilic(k - 1, eta)),
        Sl | Si | Se => {
            let p = if ((2 * k - 1) as f64 * PI - eta).abs() < SPECIAL_BAND {
                top_point(IrregularKind::OrbitCreation, eta, 4.0 / eta)
            } else if ty == Sl && (eta - critical_eta(k)).abs() < SPECIAL_BAND {
                top_point(IrregularKind::Bifurcation, eta, 4.0 * eta * eta / (1.0 + eta * eta))
            } else {
                top_point(IrregularKind::CausticTop, eta, 4.0 / eta * (0.5 * eta).sin().powi(2))
            };
            out.push(p);
        }
        Ce | Oe => {}
    }
    if matches!(ty, Si | Se | Ce | Oe) {
        if let Some(t0) = minimal_time(k, eta) {
            let rho0 = (t0.sin().powi(2) - eta * eta * t0.cos().powi(2)).max(0.0).sqrt();
            out.push(IrregularPoint {
                kind: IrregularKind::MinimalTime,
                t0,
                z0: -eta * t0 * t0 / t0.tan().powi(2),
                rho0,
                law: LocalLaw { rho_power: 1, z_power: 1, coefficient: eta * (2.0 * t0).sin() / (2.0 * rho0 * t0) },
            });
        }
    }
    if matches!(ty, Se | Ce | Oe) {
        let rho0 = (eta * eta - 4.0 * h * h).max(0.0).sqrt() / eta;
        out.push(IrregularPoint {
            kind: IrregularKind::SnakeEndpoint,
            t0: h,
            z0: -h * h / eta,
            rho0,
            law: LocalLaw { rho_power: 1, z_power: 1, coefficient: 2.0 / (eta * rho0) },
        });
    }
    out.push(IrregularPoint {
        kind: IrregularKind::RadialMax,
        t0: h,
        z0: h * h / eta,
        rho0: 1.0,
        law: LocalLaw { rho_power: 1, z_power: 2, coefficient: -eta * eta / (2.0 * h * h * (eta * eta + 4.0)) },
    });
    match ty {
        Ce => out.push(umbilic(k, eta)),
        Oe => out.push(cusp_up(k, eta)),
        _ => {}
    }
    out.push(IrregularPoint {
        kind: IrregularKind::CuspDown,
        t0: kp,
        z0: kp * (kp + eta) / eta,
        rho0: 0.0,
        law: cusp_law(k, eta, true),
    });
    out.sort_by(|a, b| a.t0.total_cmp(&b.t0));
    out
}

/// Fits the local power law of the caustic near `point`.
pub fn local_expansion_check(point: &IrregularPoint, eta: f64) -> Result<LocalFit> {
    let probe = 1e-6;
    let mut best: Option<(f64, Branch, f64)> = None;
    for branch in [Branch::Minus, Branch::Plus] {
        for side in [-1.0, 1.0] {
            let t = point.t0 + side * probe;
            if t <= 0.0 || !branch_reality(t, eta).get(branch) {
                continue;
            }
            let (z, rho) = raw_point(t, branch, eta);
            let d = (z - point.z0).hypot(rho - point.rho0);
            if d.is_finite() && best.is_none_or(|(bd, _, _)| d < bd) {
                best = Some((d, branch, side));
            }
        }
    }
    let (_, branch, side) = best
        .filter(|(d, _, _)| *d < 1e-2)
        .ok_or_else(|| Error::Refinement(format!("no branch approaches the {:?} point", point.kind)))?;

    let n = 16;
    let mut pts = Vec::with_capacity(n);
    for j in 0..n {
        let dt = 1e-3 * 10f64.powf(-3.0 * j as f64 / (n - 1) as f64);
        let t = point.t0 + side * dt;
        if !branch_reality(t, eta).get(branch) {
            continue;
        }
        let (z, rho) = raw_point(t, branch, eta);
        let (dz, dr) = (z - point.z0, rho - point.rho0);
        if dz != 0.0 && dr != 0.0 && dz.is_finite() && dr.is_finite() {
            pts.push((dz, dr));
        }
    }
    if pts.len() < 4 {
        return Err(Error::Refinement(format!(
            "only {} usable samples near the {:?} point",
            pts.len(),
            point.kind
        )));
    }
    let xs: Vec<f64> = pts.iter().map(|p| p.0.abs().ln()).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.1.abs().ln()).collect();
    let m = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / m, ys.iter().sum::<f64>() / m);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let exponent = sxy / sxx;

    // Coefficient in table form from the innermost half of the samples.
    let (a, b) = (point.law.rho_power, point.law.z_power);
    let inner = &pts[pts.len() / 2..];
    let log_c = inner
        .iter()
        .map(|(dz, dr)| a as f64 * dr.abs().ln() - b as f64 * dz.abs().ln())
        .sum::<f64>()
        / inner.len() as f64;
    let (dz, dr) = inner[inner.len() - 1];
    let sign = dr.signum().powi(a) * dz.signum().powi(b);
    Ok(LocalFit { exponent, coefficient: sign * log_c.exp(), samples: pts.len() })
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Anchor {
    Free,
    Cusp,
    Top,
    MinTime,
    /// t = (k-½)π approached from the side where τ has the given sign.
    Seam { tau_positive: bool },
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    branch: Branch,
    t0: f64,
    t1: f64,
    a0: Anchor,
    a1: Anchor,
}

fn anchored(t: f64, branch: Branch, anchor: Anchor, eta: f64) -> (f64, f64) {
    match anchor {
        Anchor::Free => raw_point(t, branch, eta),
        // A vanishes there; rounding in t would otherwise leak in as √A.
        Anchor::MinTime => point_with_root(t, t.tan(), 0.0, branch, eta),
        Anchor::Cusp => (t * (t + branch.sign() * eta) / eta, 0.0),
        Anchor::Top => (-0.25 * eta, 0.0),
        Anchor::Seam { tau_positive } => {
            if (branch == Branch::Minus) == tau_positive {
                (t * t / eta, 1.0)
            } else {
                (-t * t / eta, (eta * eta - 4.0 * t * t).max(0.0).sqrt() / eta)
            }
        }
    }
}

fn itinerary(k: usize, eta: f64, ty: CausticType) -> Result<Vec<Segment>> {
    use Anchor::*;
    use Branch::*;
    use CausticType::*;
    let a = (k - 1) as f64 * PI;
    let h = (k as f64 - 0.5) * PI;
    let b = k as f64 * PI;
    let top = 0.5 * eta;
    let seg = |branch, t0, t1, a0, a1| Segment { branch, t0, t1, a0, a1 };
    let up = Seam { tau_positive: true };
    let dn = Seam { tau_positive: false };
    let tmin = || {
        minimal_time(k, eta)
            .ok_or_else(|| Error::Refinement(format!("no minimal time in cycle {k} for η = {eta}")))
    };
    Ok(match ty {
        Ol | Cl => vec![seg(Minus, a, h, Cusp, up), seg(Plus, h, b, dn, Cusp)],
        Sl => vec![seg(Minus, top, h, Top, up), seg(Plus, h, b, dn, Cusp)],
        Si => {
            let tm = tmin()?;
            vec![seg(Plus, top, tm, Top, MinTime), seg(Minus, tm, h, MinTime, up), seg(Plus, h, b, dn, Cusp)]
        }
        Se => {
            let tm = tmin()?;
            vec![
                seg(Minus, top, h, Top, dn),
                seg(Plus, h, tm, up, MinTime),
                seg(Minus, tm, h, MinTime, up),
                seg(Plus, h, b, dn, Cusp),
            ]
        }
        Ce | Oe => {
            let tm = tmin()?;
            vec![
                seg(Minus, b, h, Cusp, dn),
                seg(Plus, h, tm, up, MinTime),
                seg(Minus, tm, h, MinTime, up),
                seg(Plus, h, b, dn, Cusp),
            ]
        }
    })
}

fn sample_segment(s: &Segment, eta: f64, ctl: &SamplingControl, out: &mut Vec<CausticSample>) -> Result<()> {
    const MAX_DEPTH: u32 = 60;
    let point = |t: f64, anchor: Anchor| {
        let (z, rho) = anchored(t, s.branch, anchor, eta);
        sample(t, s.branch, z, rho, eta)
    };
    // A coarse uniform pass first, so that no feature hides between two
    // nearby endpoints.
    let n0 = 32;
    let mut coarse = Vec::with_capacity(n0 + 1);
    for i in 0..=n0 {
        let (t, anchor) = match i {
            0 => (s.t0, s.a0),
            i if i == n0 => (s.t1, s.a1),
            i => (s.t0 + (s.t1 - s.t0) * i as f64 / n0 as f64, Anchor::Free),
        };
        coarse.push(point(t, anchor));
    }
    out.push(coarse[0]);
    for w in coarse.windows(2) {
        let mut stack = vec![(w[0], w[1], 0u32)];
        while let Some((p, q, depth)) = stack.pop() {
            let gap = (q.z - p.z).hypot(q.rho - p.rho);
            if !gap.is_finite() {
                return Err(Error::Refinement(format!("non-finite caustic sample near t = {}", p.t)));
            }
            if gap <= ctl.chord {
                out.push(q);
                if out.len() > ctl.max_samples {
                    return Err(Error::Refinement(format!("more than {} samples", ctl.max_samples)));
                }
                continue;
            }
            if depth >= MAX_DEPTH {
                return Err(Error::Refinement(format!(
                    "gap {gap:e} between t = {} and t = {} does not close",
                    p.t, q.t
                )));
            }
            let m = point(0.5 * (p.t + q.t), Anchor::Free);
            stack.push((m, q, depth + 1));
            stack.push((p, m, depth + 1));
        }
    }
    Ok(())
}

/// Traces curve k following its branch itinerary, from the top to the lower cusp.
pub fn trace_caustic(k: usize, eta: f64, ctl: &SamplingControl) -> Result<CausticCurve> {
    if k == 0 || !(eta > 0.0) || !eta.is_finite() {
        return Err(Error::Domain(format!("invalid caustic index {k} or η = {eta}")));
    }
    let ty = classify_caustic(k, eta);
    let mut samples = Vec::new();
    for s in itinerary(k, eta, ty)? {
        sample_segment(&s, eta, ctl, &mut samples)?;
    }
    let kp = k as f64 * PI;
    Ok(CausticCurve {
        cycle: k,
        type_label: ty,
        samples,
        irregulars: irregular_points(k, eta),
        focal_segment: Some((kp * (kp - eta) / eta, kp * (kp + eta) / eta)),
    })
}

/// Curves 1..=kmax, traced in parallel.
pub fn trace_caustics(kmax: usize, eta: f64, ctl: &SamplingControl) -> Result<Vec<CausticCurve>> {
    (1..=kmax).into_par_iter().map(|k| trace_caustic(k, eta, ctl)).collect()
}

/// Highest and lowest z reached by curve k.
pub fn caustic_extent(k: usize, eta: f64) -> (f64, f64) {
    let kp = k as f64 * PI;
    let jp = (k - 1) as f64 * PI;
    let top = match classify_caustic(k, eta) {
        CausticType::Ol | CausticType::Cl => jp * (jp - eta) / eta,
        CausticType::Sl | CausticType::Si | CausticType::Se => -0.25 * eta,
        CausticType::Ce | CausticType::Oe => kp * (kp - eta) / eta,
    };
    (top, kp * (kp + eta) / eta)
}

impl CausticCurve {
    /// Radii at which the curve crosses the plane z, refined by bisection in t.
    pub fn crossings(&self, z: f64, eta: f64) -> Vec<CausticCrossing> {
        let mut out = Vec::new();
        for w in self.samples.windows(2) {
            let (p, q) = (w[0], w[1]);
            if p.branch != q.branch || p.t == q.t {
                continue;
            }
            let (fp, fq) = (p.z - z, q.z - z);
            if fp == 0.0 {
                out.push(CausticCrossing { cycle: self.cycle, t: p.t, branch: p.branch, rho: p.rho });
                continue;
            }
            if fp * fq >= 0.0 {
                continue;
            }
            let (mut lo, mut hi) = (p.t, q.t);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid == lo || mid == hi {
                    break;
                }
                let fm = raw_point(mid, p.branch, eta).0 - z;
                if (fm < 0.0) == (fp < 0.0) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let t = 0.5 * (lo + hi);
            out.push(CausticCrossing { cycle: self.cycle, t, branch: p.branch, rho: raw_point(t, p.branch, eta).1 });
        }
        out
    }
}

/// All caustic crossings of the plane z, sorted by radius.
pub fn caustic_radii(z: f64, eta: f64) -> Result<Vec<CausticCrossing>> {
    if !(eta > 0.0) || !eta.is_finite() || !z.is_finite() {
        return Err(Error::Domain(format!("invalid plane z = {z} or η = {eta}")));
    }
    let mut ks = Vec::new();
    let mut k = 1;
    loop {
        let (top, bottom) = caustic_extent(k, eta);
        if top > z && classify_caustic(k, eta) == CausticType::Ol {
            break;
        }
        if top <= z && z <= bottom {
            ks.push(k);
        }
        k += 1;
    }
    let per_curve: Vec<Vec<CausticCrossing>> = ks
        .into_par_iter()
        .map(|k| {
            let mut out = Vec::new();
            for seg in itinerary(k, eta, classify_caustic(k, eta))? {
                segment_crossings(&seg, k, z, eta, &mut out);
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let mut out: Vec<CausticCrossing> = per_curve.into_iter().flatten().collect();
    out.sort_by(|a, b| a.rho.total_cmp(&b.rho));
    Ok(out)
}

// Crossings of one segment with the plane: sign changes on a uniform grid
// in t, plus pairs hidden next to a local extremum of z(t).
fn segment_crossings(s: &Segment, k: usize, z: f64, eta: f64, out: &mut Vec<CausticCrossing>) {
    const N: usize = 2048;
    let zt = |t: f64| raw_point(t, s.branch, eta).0 - z;
    let ts: Vec<f64> = (0..=N).map(|i| s.t0 + (s.t1 - s.t0) * i as f64 / N as f64).collect();
    let fs: Vec<f64> = ts
        .iter()
        .enumerate()
        .map(|(i, &t)| match i {
            0 => anchored(t, s.branch, s.a0, eta).0 - z,
            i if i == N => anchored(t, s.branch, s.a1, eta).0 - z,
            _ => zt(t),
        })
        .collect();
    let mut push = |t: f64| {
        let (_, rho) = raw_point(t, s.branch, eta);
        if rho.is_finite() {
            out.push(CausticCrossing { cycle: k, t, branch: s.branch, rho });
        }
    };
    for i in 0..N {
        let (fa, fb) = (fs[i], fs[i + 1]);
        if fa == 0.0 && i > 0 {
            push(ts[i]);
        } else if fa * fb < 0.0 {
            push(crate::classical::bisect(zt, ts[i], ts[i + 1]));
        }
    }
    for i in 1..N {
        let (fa, fm, fb) = (fs[i - 1], fs[i], fs[i + 1]);
        if fa * fm <= 0.0 || fm * fb <= 0.0 || (fm - fa) * (fb - fm) >= 0.0 {
            continue;
        }
        // z has an extremum in (t_{i-1}, t_{i+1}) that may cross the plane.
        let toward = if fm > fa { -1.0 } else { 1.0 };
        let te = golden_extremum(|t| toward * zt(t), ts[i - 1], ts[i + 1]);
        if zt(te) * fm < 0.0 {
            push(crate::classical::bisect(zt, ts[i - 1], te));
            push(crate::classical::bisect(zt, te, ts[i + 1]));
        }
    }
}

// Minimizer of a unimodal f on [a, b].
fn golden_extremum<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64) -> f64 {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    for _ in 0..200 {
        if (b - a).abs() <= 1e-15 * b.abs().max(1.0) {
            break;
        }
        if f(c) < f(d) {
            b = d;
        } else {
            a = c;
        }
        c = b - g * (b - a);
        d = a + g * (b - a);
    }
    0.5 * (a + b)
}
