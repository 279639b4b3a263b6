//! Particle conservation checks: currents integrated over detector planes.

use std::f64::consts::PI;

use parfield::caustics::caustic_radii;
use parfield::quantum::{current_density, total_current, DEFAULT_TOLERANCE};
use parfield::semiclassics::{classical_total_density, trajectories};
use parfield::{derive_scales, FieldSetup, PhysicalPoint};

fn moderate() -> FieldSetup {
    derive_scales(15.0, 0.02, 1e-4, false).unwrap()
}

// 2π∫ f(ρ̂) ρ̂ dρ̂ between consecutive break points, with ρ = a + (b-a)(1-cos θ)/2
// so that inverse square-root edges become harmless.
fn plane_integral(breaks: &[f64], n: usize, f: &dyn Fn(f64) -> f64) -> f64 {
    let mut total = 0.0;
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        let mut s = 0.0;
        for i in 0..n {
            let th = PI * (i as f64 + 0.5) / n as f64;
            let r = a + 0.5 * (b - a) * (1.0 - th.cos());
            s += f(r) * r * 0.5 * (b - a) * th.sin();
        }
        total += s * PI / n as f64;
    }
    2.0 * PI * total
}

fn classical_breaks(z_hat: f64, s: &FieldSetup) -> Vec<f64> {
    let d = s.d().unwrap();
    let mut b: Vec<f64> = caustic_radii(z_hat / d, s.eta().unwrap()).unwrap().iter().map(|c| c.rho * d).collect();
    b.insert(0, 0.0);
    b
}

#[test]
fn classical_flux_equals_emission_rate() {
    let s = moderate();
    let z_hat = 30e-6;
    let breaks = classical_breaks(z_hat, &s);
    let flux = plane_integral(&breaks, 400, &|r| {
        trajectories(PhysicalPoint::new(r, z_hat), &s, 1.0, false)
            .map(|ts| ts.iter().map(|t| t.density * t.v_z).sum())
            .unwrap_or(0.0)
    });
    assert!((flux - 1.0).abs() < 1e-2, "{flux}");
    // The incoherent density is the same sum without velocities.
    let p = PhysicalPoint::new(1.3e-6, z_hat);
    let direct: f64 = trajectories(p, &s, 1.0, false).unwrap().iter().map(|t| t.density).sum();
    assert!((classical_total_density(p, &s, 1.0).unwrap() / direct - 1.0).abs() < 1e-14);
}

#[test]
fn quantum_flux_is_conserved_between_planes() {
    let s = moderate();
    let j = total_current(&s, 1.0, DEFAULT_TOLERANCE).unwrap().current;
    let r_max = 1.6 * s.d().unwrap();
    let flux = |z: f64| {
        plane_integral(&[0.0, r_max], 3000, &|r| {
            current_density(PhysicalPoint::new(r, z), &s, 1.0, DEFAULT_TOLERANCE).unwrap()
        })
    };
    let (f1, f2) = (flux(10e-6), flux(45e-6));
    assert!((f1 / j - 1.0).abs() < 1e-2, "{f1} {j}");
    assert!((f2 / j - 1.0).abs() < 1e-2, "{f2} {j}");
    // Uphill, everything that rises falls back: no net flux.
    let up = flux(-2e-6);
    assert!(up.abs() < 1e-3 * j, "{up}");
}
