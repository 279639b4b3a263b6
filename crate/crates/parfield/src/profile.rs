//! Radial density profiles n(ρ̂) = 2πρ̂|ψ|² shared by all methods.

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Classical,
    Semiclassical,
    Uniform,
    Quantum,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Classical => "classical",
            Method::Semiclassical => "semiclassical",
            Method::Uniform => "uniform",
            Method::Quantum => "quantum",
        }
    }

    pub fn parse(s: &str) -> Option<Method> {
        match s.trim().to_ascii_lowercase().as_str() {
            "classical" => Some(Method::Classical),
            "semiclassical" | "sc" => Some(Method::Semiclassical),
            "uniform" | "uni" => Some(Method::Uniform),
            "quantum" | "qm" => Some(Method::Quantum),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProfileRow {
    /// ρ̂, m
    pub rho: f64,
    /// n(ρ̂), m⁻¹ per unit flux normalization
    pub density: f64,
    /// Series terms (quantum) or contributing paths (semiclassical methods).
    pub count: usize,
    /// Set where the value is known to be unreliable (axis, caustic).
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityProfile {
    /// ẑ, m
    pub z: f64,
    pub method: Method,
    pub rows: Vec<ProfileRow>,
}

impl DensityProfile {
    pub fn rho(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.rho).collect()
    }

    pub fn density(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.density).collect()
    }
}
