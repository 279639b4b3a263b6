use std::path::{Path, PathBuf};

use parfield::caustics::{caustic_radii, trace_caustic, Branch, CausticCurve, SamplingControl};
use parfield::classical::{closed_orbits, scaled_closed_orbits, ClosedOrbit};
use parfield::profile::{DensityProfile, Method};
use parfield::quantum::{quantum_density_profile, total_current};
use parfield::semiclassics::semiclassical_density_profile;
use parfield::{derive_scales, FieldSetup};
use rayon::prelude::*;
use serde::ser::SerializeMap;
use serde::{Serialize, Serializer};

use crate::config::Config;
use crate::output::{ensure_dir, fmt17, nums, write_csv, write_json, Num};
use crate::CliError;

pub const PROFILE_HEADER: [&str; 4] = ["rho_m", "density_per_m", "count", "flagged"];
pub const CAUSTIC_HEADER: [&str; 4] = ["t", "branch", "rho", "z"];
pub const ORBIT_HEADER: [&str; 7] =
    ["kind", "index", "return_time", "return_time_s", "emission_angle_rad", "action_j_s", "crossing_rho_m"];
pub const CROSS_SECTION_HEADER: [&str; 4] = ["energy_ev", "current", "terms", "tail_bound"];

/// What a command wrote, plus the first per-method failure if any.
#[derive(Debug, Default)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub failure: Option<CliError>,
}

pub fn field_setup(c: &Config) -> Result<FieldSetup, CliError> {
    let e = c.f64("fields.electric_v_per_m")?;
    let b = c.f64("fields.magnetic_t")?;
    let en = c.f64("fields.energy_ev")?;
    derive_scales(e, b, en, en <= 0.0).map_err(|err| CliError::Config(format!("fields: {err}")))
}

/// Named scales in a fixed order; serializes as a JSON object.
pub struct Report(pub Vec<(&'static str, Option<f64>, &'static str)>);

impl Report {
    pub fn new(s: &FieldSetup) -> Self {
        Report(vec![
            ("electric_field", Some(s.electric_field), "V/m"),
            ("magnetic_field", Some(s.magnetic_field), "T"),
            ("energy_ev", Some(s.energy_ev), "eV"),
            ("energy_j", Some(s.energy), "J"),
            ("omega_l", Some(s.omega_l), "rad/s"),
            ("epsilon", Some(s.epsilon), ""),
            ("beta", Some(s.beta), "1/J"),
            ("eta", s.eta(), ""),
            ("d", s.d(), "m"),
            ("v0", s.v0(), "m/s"),
            ("wave_number", s.wave_number(), "1/m"),
        ])
    }

    pub fn text(&self) -> String {
        let mut out = String::new();
        for (name, v, unit) in &self.0 {
            let v = v.map(fmt17).unwrap_or_else(|| "undefined".into());
            out.push_str(format!("{name:<16}{v:>26}  {unit}").trim_end());
            out.push('\n');
        }
        out
    }
}

impl Serialize for Report {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut m = s.serialize_map(Some(self.0.len()))?;
        for (name, v, _) in &self.0 {
            m.serialize_entry(name, &v.map(Num))?;
        }
        m.end()
    }
}

pub fn scales(c: &Config, out: Option<&Path>, json: bool) -> Result<(String, Outcome), CliError> {
    let report = Report::new(&field_setup(c)?);
    let mut outcome = Outcome::default();
    if let Some(dir) = out {
        ensure_dir(dir)?;
        outcome.files.push(write_json(&dir.join("scales.json"), &report)?);
    }
    let text = if json {
        serde_json::to_string_pretty(&report).map_err(|e| CliError::Json(e.to_string()))? + "\n"
    } else {
        report.text()
    };
    Ok((text, outcome))
}

#[derive(Serialize)]
struct MethodSummary {
    method: &'static str,
    status: &'static str,
    file: Option<String>,
    rows: usize,
    min_count: Option<usize>,
    max_count: Option<usize>,
    flagged_rows: usize,
    error: Option<String>,
    exit_code: Option<u8>,
}

#[derive(Serialize)]
struct ProfileMeta {
    z_m: Num,
    flux_norm: Num,
    tolerance: Num,
    samples: usize,
    scales: Report,
    caustic_radii_m: Option<Vec<Num>>,
    caustic_error: Option<String>,
    methods: Vec<MethodSummary>,
}

fn profile_rows(p: &DensityProfile) -> impl Iterator<Item = Vec<String>> + '_ {
    p.rows.iter().map(|r| vec![fmt17(r.rho), fmt17(r.density), r.count.to_string(), u8::from(r.flagged).to_string()])
}

pub fn profile(c: &Config, dir: &Path) -> Result<Outcome, CliError> {
    let setup = field_setup(c)?;
    let z = c.f64("detector.z_m")?;
    let grid = c.rho_grid()?;
    let methods = c.methods()?;
    let tol = c.tolerance()?;
    let flux = c.f64("flux_norm")?;
    if flux <= 0.0 {
        return Err(CliError::Config(format!("flux_norm: expected a positive flux, got {flux}")));
    }
    ensure_dir(dir)?;

    let (radii, caustic_error) = match (setup.d(), setup.eta()) {
        (Some(d), Some(eta)) => match caustic_radii(z / d, eta) {
            Ok(v) => {
                let mut r: Vec<f64> = v.iter().map(|x| x.rho * d).collect();
                r.sort_by(f64::total_cmp);
                (Some(nums(r)), None)
            }
            Err(e) => (None, Some(e.to_string())),
        },
        _ => (None, Some("no classical motion for E <= 0".into())),
    };

    let mut outcome = Outcome::default();
    let mut summaries = Vec::new();
    for m in methods {
        let result = match m {
            Method::Quantum => quantum_density_profile(z, &grid, &setup, flux, tol),
            _ => semiclassical_density_profile(z, &grid, &setup, m, flux, tol),
        };
        match result {
            Ok(p) => {
                let name = format!("profile_{}.csv", m.name());
                outcome.files.push(write_csv(&dir.join(&name), &PROFILE_HEADER, profile_rows(&p))?);
                summaries.push(MethodSummary {
                    method: m.name(),
                    status: "ok",
                    file: Some(name),
                    rows: p.rows.len(),
                    min_count: p.rows.iter().map(|r| r.count).min(),
                    max_count: p.rows.iter().map(|r| r.count).max(),
                    flagged_rows: p.rows.iter().filter(|r| r.flagged).count(),
                    error: None,
                    exit_code: None,
                });
            }
            Err(e) => {
                let err = CliError::Method(m.name(), e);
                summaries.push(MethodSummary {
                    method: m.name(),
                    status: "error",
                    file: None,
                    rows: 0,
                    min_count: None,
                    max_count: None,
                    flagged_rows: 0,
                    error: Some(err.to_string()),
                    exit_code: Some(err.code()),
                });
                outcome.failure.get_or_insert(err);
            }
        }
    }
    let meta = ProfileMeta {
        z_m: Num(z),
        flux_norm: Num(flux),
        tolerance: Num(tol),
        samples: grid.len(),
        scales: Report::new(&setup),
        caustic_radii_m: radii,
        caustic_error,
        methods: summaries,
    };
    outcome.files.push(write_json(&dir.join("profile.json"), &meta)?);
    Ok(outcome)
}

#[derive(Serialize)]
struct IrregularOut {
    kind: String,
    t0: Num,
    rho0: Num,
    z0: Num,
    rho_power: i32,
    z_power: i32,
    coefficient: Num,
}

#[derive(Serialize)]
struct CurveOut {
    k: usize,
    #[serde(rename = "type")]
    type_label: &'static str,
    file: String,
    samples: usize,
    focal_segment: Option<[Num; 2]>,
    irregular_points: Vec<IrregularOut>,
}

#[derive(Serialize)]
struct OrbitOut {
    kind: String,
    index: usize,
    return_time: Num,
    emission_angle_rad: Num,
    scaled_action: Num,
}

#[derive(Serialize)]
struct CausticsMeta {
    eta: Num,
    d_m: Option<Num>,
    chord: Num,
    curves: Vec<CurveOut>,
    closed_orbits: Vec<OrbitOut>,
}

fn curve_out(c: &CausticCurve, file: String) -> CurveOut {
    CurveOut {
        k: c.cycle,
        type_label: c.type_label.label(),
        file,
        samples: c.samples.len(),
        focal_segment: c.focal_segment.map(|(a, b)| [Num(a), Num(b)]),
        irregular_points: c
            .irregulars
            .iter()
            .map(|p| IrregularOut {
                kind: format!("{:?}", p.kind),
                t0: Num(p.t0),
                rho0: Num(p.rho0),
                z0: Num(p.z0),
                rho_power: p.law.rho_power,
                z_power: p.law.z_power,
                coefficient: Num(p.law.coefficient),
            })
            .collect(),
    }
}

pub fn caustics(c: &Config, dir: &Path) -> Result<Outcome, CliError> {
    let (eta, d) = match c.opt_f64("caustics.eta")? {
        Some(eta) if eta > 0.0 => (eta, None),
        Some(eta) => return Err(CliError::Config(format!("caustics.eta: expected a positive value, got {eta}"))),
        None => {
            let s = field_setup(c)?;
            let cl = s.classical().map_err(|e| CliError::Config(format!("fields: {e}")))?;
            (cl.eta, Some(cl.d))
        }
    };
    let (k_min, k_max) = c.cycle_range()?;
    let chord = c.f64("caustics.chord")?;
    if chord <= 0.0 {
        return Err(CliError::Config(format!("caustics.chord: expected a positive value, got {chord}")));
    }
    let ctl = SamplingControl { chord, ..SamplingControl::default() };
    let curves = (k_min..=k_max)
        .into_par_iter()
        .map(|k| trace_caustic(k, eta, &ctl))
        .collect::<parfield::Result<Vec<_>>>()
        .map_err(CliError::Lib)?;

    ensure_dir(dir)?;
    let mut outcome = Outcome::default();
    let mut out_curves = Vec::new();
    for curve in &curves {
        let name = format!("caustic_k{}.csv", curve.cycle);
        let rows = curve.samples.iter().map(|s| {
            let b = match s.branch {
                Branch::Plus => "+",
                Branch::Minus => "-",
            };
            vec![fmt17(s.t), b.to_string(), fmt17(s.rho), fmt17(s.z)]
        });
        outcome.files.push(write_csv(&dir.join(&name), &CAUSTIC_HEADER, rows)?);
        out_curves.push(curve_out(curve, name));
    }
    let meta = CausticsMeta {
        eta: Num(eta),
        d_m: d.map(Num),
        chord: Num(chord),
        curves: out_curves,
        closed_orbits: scaled_closed_orbits(eta)
            .iter()
            .map(|o| OrbitOut {
                kind: format!("{:?}", o.kind),
                index: o.index,
                return_time: Num(o.return_time),
                emission_angle_rad: Num(o.emission_angle),
                scaled_action: Num(o.action),
            })
            .collect(),
    };
    outcome.files.push(write_json(&dir.join("caustics.json"), &meta)?);
    Ok(outcome)
}

fn orbit_row(o: &ClosedOrbit, setup: &FieldSetup, eta: f64, d: f64, z: Option<f64>) -> Vec<String> {
    let crossing = z.and_then(|z| o.crossing_radius(z / d, eta)).map(|r| fmt17(r * d)).unwrap_or_default();
    vec![
        format!("{:?}", o.kind),
        o.index.to_string(),
        fmt17(o.return_time),
        fmt17(o.return_time / setup.omega_l),
        fmt17(o.emission_angle),
        fmt17(o.action),
        crossing,
    ]
}

pub fn orbits(c: &Config, dir: &Path) -> Result<Outcome, CliError> {
    let setup = field_setup(c)?;
    let cl = setup.classical().map_err(|e| CliError::Config(format!("fields: {e}")))?;
    let z = c.opt_f64("detector.z_m")?;
    ensure_dir(dir)?;
    let rows: Vec<_> = closed_orbits(cl.eta, &setup).iter().map(|o| orbit_row(o, &setup, cl.eta, cl.d, z)).collect();
    Ok(Outcome { files: vec![write_csv(&dir.join("orbits.csv"), &ORBIT_HEADER, rows)?], failure: None })
}

#[derive(Serialize)]
struct CrossSectionMeta {
    electric_field: Num,
    magnetic_field: Num,
    source_strength: Num,
    tolerance: Num,
    samples: usize,
    max_terms: usize,
}

pub fn cross_section(c: &Config, dir: &Path) -> Result<Outcome, CliError> {
    let e_field = c.f64("fields.electric_v_per_m")?;
    let b_field = c.f64("fields.magnetic_t")?;
    let tol = c.tolerance()?;
    let energies = c.energy_grid()?;
    let rows = energies
        .par_iter()
        .map(|&en| {
            let s = derive_scales(e_field, b_field, en, true).map_err(|e| CliError::Config(format!("fields: {e}")))?;
            let j = total_current(&s, 1.0, tol).map_err(CliError::Lib)?;
            Ok((en, j))
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    ensure_dir(dir)?;
    let max_terms = rows.iter().map(|(_, j)| j.terms_used).max().unwrap_or(0);
    let csv_rows = rows
        .iter()
        .map(|(en, j)| vec![fmt17(*en), fmt17(j.current), j.terms_used.to_string(), fmt17(j.tail_bound)]);
    let mut files = vec![write_csv(&dir.join("cross_section.csv"), &CROSS_SECTION_HEADER, csv_rows)?];
    let meta = CrossSectionMeta {
        electric_field: Num(e_field),
        magnetic_field: Num(b_field),
        source_strength: Num(1.0),
        tolerance: Num(tol),
        samples: rows.len(),
        max_terms,
    };
    files.push(write_json(&dir.join("cross_section.json"), &meta)?);
    Ok(Outcome { files, failure: None })
}
