//! Flat `key = value` scenario files with environment and flag overrides.
//!
//! Later sources win: file, then `PARFIELD_*` variables, then `--set` and
//! the dedicated flags.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use parfield::profile::Method;

use crate::CliError;

/// Every accepted key with its default, if any.
pub const KEYS: &[(&str, Option<&str>)] = &[
    ("fields.electric_v_per_m", None),
    ("fields.magnetic_t", None),
    ("fields.energy_ev", None),
    ("detector.z_m", None),
    ("profile.rho_min_m", Some("0")),
    ("profile.rho_max_m", None),
    ("profile.samples", Some("400")),
    ("profile.methods", Some("classical,semiclassical,uniform,quantum")),
    ("flux_norm", Some("1")),
    ("numerics.tolerance", Some("1e-10")),
    ("caustics.eta", None),
    ("caustics.k_min", Some("1")),
    ("caustics.k_max", Some("3")),
    ("caustics.chord", Some("1e-3")),
    ("cross_section.e_min_ev", None),
    ("cross_section.e_max_ev", None),
    ("cross_section.samples", Some("1000")),
];

/// Largest caustic index the tracer is asked for.
pub const MAX_CYCLE: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub enum Origin {
    Default,
    File { path: String, line: usize },
    Env(String),
    Flag,
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Origin::Default => write!(f, "default"),
            Origin::File { path, line } => write!(f, "{path}:{line}"),
            Origin::Env(var) => write!(f, "environment {var}"),
            Origin::Flag => write!(f, "command line"),
        }
    }
}

#[derive(Debug, Clone)]
struct Entry {
    value: String,
    origin: Origin,
}

#[derive(Debug, Clone, Default)]
pub struct Config {
    entries: BTreeMap<String, Entry>,
}

pub fn env_var(key: &str) -> String {
    format!("PARFIELD_{}", key.to_ascii_uppercase().replace('.', "_"))
}

fn known(key: &str) -> bool {
    KEYS.iter().any(|(k, _)| *k == key)
}

impl Config {
    pub fn with_defaults() -> Self {
        let mut c = Config::default();
        for (k, v) in KEYS {
            if let Some(v) = v {
                c.entries.insert(k.to_string(), Entry { value: v.to_string(), origin: Origin::Default });
            }
        }
        c
    }

    pub fn set(&mut self, key: &str, value: &str, origin: Origin) -> Result<(), CliError> {
        let key = key.trim();
        if !known(key) {
            return Err(CliError::Config(format!("{origin}: unknown key '{key}'")));
        }
        self.entries.insert(key.to_string(), Entry { value: value.trim().to_string(), origin });
        Ok(())
    }

    pub fn parse_text(&mut self, text: &str, path: &str) -> Result<(), CliError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let origin = Origin::File { path: path.to_string(), line: i + 1 };
            let Some((k, v)) = line.split_once('=') else {
                return Err(CliError::Config(format!("{origin}: expected 'key = value', got '{line}'")));
            };
            self.set(k, v, origin)?;
        }
        Ok(())
    }

    pub fn load_file(&mut self, path: &Path) -> Result<(), CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        self.parse_text(&text, &path.display().to_string())
    }

    pub fn apply_env(&mut self, lookup: impl Fn(&str) -> Option<String>) -> Result<(), CliError> {
        for (k, _) in KEYS {
            let var = env_var(k);
            if let Some(v) = lookup(&var) {
                self.set(k, &v, Origin::Env(var))?;
            }
        }
        Ok(())
    }

    /// `key=value` from the command line.
    pub fn apply_assignment(&mut self, s: &str) -> Result<(), CliError> {
        let Some((k, v)) = s.split_once('=') else {
            return Err(CliError::Config(format!("--set expects key=value, got '{s}'")));
        };
        self.set(k, v, Origin::Flag)
    }

    fn raw(&self, key: &str) -> Option<&Entry> {
        self.entries.get(key)
    }

    fn bad(&self, key: &str, what: &str) -> CliError {
        let e = &self.entries[key];
        CliError::Config(format!("{} ({}): {what}, got '{}'", key, e.origin, e.value))
    }

    pub fn opt_f64(&self, key: &str) -> Result<Option<f64>, CliError> {
        match self.raw(key) {
            None => Ok(None),
            Some(e) => match e.value.parse::<f64>() {
                Ok(x) if x.is_finite() => Ok(Some(x)),
                _ => Err(self.bad(key, "expected a finite number")),
            },
        }
    }

    pub fn f64(&self, key: &str) -> Result<f64, CliError> {
        self.opt_f64(key)?.ok_or_else(|| CliError::Config(format!("missing required key '{key}'")))
    }

    pub fn usize(&self, key: &str) -> Result<usize, CliError> {
        let e = self.raw(key).ok_or_else(|| CliError::Config(format!("missing required key '{key}'")))?;
        e.value.parse::<usize>().map_err(|_| self.bad(key, "expected a non-negative integer"))
    }

    pub fn methods(&self) -> Result<Vec<Method>, CliError> {
        let key = "profile.methods";
        let e = self.raw(key).ok_or_else(|| CliError::Config(format!("missing required key '{key}'")))?;
        let mut out = Vec::new();
        for part in e.value.split(',').filter(|p| !p.trim().is_empty()) {
            let m = Method::parse(part).ok_or_else(|| self.bad(key, "expected classical, semiclassical, uniform or quantum"))?;
            if !out.contains(&m) {
                out.push(m);
            }
        }
        if out.is_empty() {
            return Err(self.bad(key, "expected at least one method"));
        }
        out.sort();
        Ok(out)
    }

    pub fn tolerance(&self) -> Result<f64, CliError> {
        let t = self.f64("numerics.tolerance")?;
        if t > 0.0 {
            Ok(t)
        } else {
            Err(self.bad("numerics.tolerance", "expected a positive number"))
        }
    }

    /// Radial sample points, m.
    pub fn rho_grid(&self) -> Result<Vec<f64>, CliError> {
        let lo = self.f64("profile.rho_min_m")?;
        let hi = self.f64("profile.rho_max_m")?;
        let n = self.usize("profile.samples")?;
        if lo < 0.0 {
            return Err(self.bad("profile.rho_min_m", "expected a non-negative radius"));
        }
        if hi < lo {
            return Err(self.bad("profile.rho_max_m", "expected rho_max_m >= rho_min_m"));
        }
        if n == 0 {
            return Err(self.bad("profile.samples", "expected at least one sample"));
        }
        if hi == lo || n == 1 {
            return Ok(vec![lo]);
        }
        Ok((0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect())
    }

    /// Source energies for the cross-section sweep, eV.
    pub fn energy_grid(&self) -> Result<Vec<f64>, CliError> {
        let lo = self.f64("cross_section.e_min_ev")?;
        let hi = self.f64("cross_section.e_max_ev")?;
        let n = self.usize("cross_section.samples")?;
        if hi < lo {
            return Err(self.bad("cross_section.e_max_ev", "expected e_max_ev >= e_min_ev"));
        }
        if n == 0 {
            return Err(self.bad("cross_section.samples", "expected at least one sample"));
        }
        if hi == lo || n == 1 {
            return Ok(vec![lo]);
        }
        Ok((0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect())
    }

    pub fn cycle_range(&self) -> Result<(usize, usize), CliError> {
        let lo = self.usize("caustics.k_min")?;
        let hi = self.usize("caustics.k_max")?;
        if lo == 0 {
            return Err(self.bad("caustics.k_min", "expected a cycle index >= 1"));
        }
        if hi < lo {
            return Err(self.bad("caustics.k_max", "expected k_max >= k_min"));
        }
        if hi > MAX_CYCLE {
            return Err(self.bad("caustics.k_max", &format!("expected at most {MAX_CYCLE}")));
        }
        Ok((lo, hi))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn later_sources_win() {
        let mut c = Config::with_defaults();
        c.parse_text("fields.magnetic_t = 0.02 # tesla\n\nflux_norm=3\n", "a.cfg").unwrap();
        c.apply_env(|v| (v == "PARFIELD_FLUX_NORM").then(|| "5".to_string())).unwrap();
        assert_eq!(c.f64("fields.magnetic_t").unwrap(), 0.02);
        assert_eq!(c.f64("flux_norm").unwrap(), 5.0);
        c.apply_assignment("flux_norm=7").unwrap();
        assert_eq!(c.f64("flux_norm").unwrap(), 7.0);
    }

    #[test]
    fn diagnostics_name_key_and_line() {
        let mut c = Config::with_defaults();
        c.parse_text("\nfields.magnetic_t = abc\n", "a.cfg").unwrap();
        let msg = c.f64("fields.magnetic_t").unwrap_err().to_string();
        assert!(msg.contains("fields.magnetic_t") && msg.contains("a.cfg:2"), "{msg}");
        let msg = Config::default().parse_text("fields.typo = 1", "b.cfg").unwrap_err().to_string();
        assert!(msg.contains("fields.typo") && msg.contains("b.cfg:1"), "{msg}");
    }

    #[test]
    fn grids() {
        let mut c = Config::with_defaults();
        c.parse_text("profile.rho_min_m = 1e-6\nprofile.rho_max_m = 1e-6\n", "g").unwrap();
        assert_eq!(c.rho_grid().unwrap(), vec![1e-6]);
        c.parse_text("profile.rho_max_m = 3e-6\nprofile.samples = 3", "g").unwrap();
        let g = c.rho_grid().unwrap();
        assert_eq!(g.len(), 3);
        assert_eq!((g[0], g[2]), (1e-6, 3e-6));
        assert!((g[1] - 2e-6).abs() < 1e-21);
        c.parse_text("profile.rho_max_m = 0", "g").unwrap();
        assert!(c.rho_grid().is_err());
    }

    #[test]
    fn methods_sorted_and_deduplicated() {
        let mut c = Config::with_defaults();
        c.apply_assignment("profile.methods=quantum, uniform,quantum").unwrap();
        assert_eq!(c.methods().unwrap(), vec![Method::Uniform, Method::Quantum]);
        c.apply_assignment("profile.methods=wkb").unwrap();
        assert!(c.methods().is_err());
    }

    #[test]
    fn cycle_range_is_bounded() {
        let mut c = Config::with_defaults();
        c.apply_assignment("caustics.k_max=100000").unwrap();
        assert!(c.cycle_range().is_err());
    }
}
