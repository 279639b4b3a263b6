use std::path::Path;
use std::process::{Command, Output};

use parfield::caustics::classify_caustic;
use parfield::scales::{ELECTRON_MASS, ELEMENTARY_CHARGE, HBAR};
use parfield::specfun::airy;
use serde_json::Value;

const MODERATE: &str = "\
# moderate field
fields.electric_v_per_m = 15
fields.magnetic_t = 0.02
fields.energy_ev = 1e-4
detector.z_m = 30e-6
profile.rho_min_m = 0.3e-6
profile.rho_max_m = 2.9e-6
profile.samples = 40
";

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_parfield"))
        .current_dir(dir)
        .args(args)
        .env_remove("PARFIELD_FLUX_NORM")
        .output()
        .unwrap()
}

fn setup(cfg: &str) -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("a.cfg"), cfg).unwrap();
    dir
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn read_csv(p: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(p).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect();
    (header, rows)
}

#[test]
fn scales_report_and_json_agree() {
    let dir = setup(MODERATE);
    let text = run(dir.path(), &["scales", "--config", "a.cfg"]);
    assert!(text.status.success());
    let text = String::from_utf8(text.stdout).unwrap();
    let json = run(dir.path(), &["scales", "--config", "a.cfg", "--json", "--out", "o"]);
    assert!(json.status.success());
    let v: Value = serde_json::from_slice(&json.stdout).unwrap();
    assert_eq!(v, read_json(&dir.path().join("o/scales.json")));
    let raw = std::fs::read_to_string(dir.path().join("o/scales.json")).unwrap();
    for line in text.lines() {
        let mut parts = line.split_whitespace();
        let (name, value) = (parts.next().unwrap(), parts.next().unwrap());
        if value == "undefined" {
            assert!(v[name].is_null());
        } else {
            // Same digits in both outputs.
            assert!(raw.contains(&format!("\"{name}\": {value}")), "{name} {value}");
        }
    }
    assert!((v["eta"].as_f64().unwrap() - 7.908).abs() < 1e-3);
    assert!((v["epsilon"].as_f64().unwrap() - 86.38).abs() < 1e-2);
}

#[test]
fn malformed_value_names_the_key() {
    let dir = setup(&MODERATE.replace("0.02", "0.0two"));
    let out = run(dir.path(), &["scales", "--config", "a.cfg"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("fields.magnetic_t") && err.contains("a.cfg:3"), "{err}");
    let out = run(dir.path(), &["scales", "--config", "a.cfg", "--set", "fields.bogus=1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn environment_overrides_file() {
    let dir = setup(MODERATE);
    let out = Command::new(env!("CARGO_BIN_EXE_parfield"))
        .current_dir(dir.path())
        .args(["scales", "--config", "a.cfg", "--json"])
        .env("PARFIELD_FIELDS_MAGNETIC_T", "0.5")
        .output()
        .unwrap();
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((v["eta"].as_f64().unwrap() - 197.7).abs() < 0.1);
}

#[test]
fn profile_outputs_are_deterministic_and_round_trip() {
    let dir = setup(MODERATE);
    let args = ["profile", "--config", "a.cfg", "--method", "quantum,uniform,classical,semiclassical", "--threads", "2"];
    assert!(run(dir.path(), &[&args[..], &["--out", "a"]].concat()).status.success());
    assert!(run(dir.path(), &[&args[..], &["--out", "b"]].concat()).status.success());
    for m in ["classical", "semiclassical", "uniform", "quantum"] {
        let name = format!("profile_{m}.csv");
        let a = std::fs::read(dir.path().join("a").join(&name)).unwrap();
        assert_eq!(a, std::fs::read(dir.path().join("b").join(&name)).unwrap(), "{m}");
        let (header, rows) = read_csv(&dir.path().join("a").join(&name));
        assert_eq!(header, ["rho_m", "density_per_m", "count", "flagged"]);
        assert_eq!(rows.len(), 40);
        for r in &rows {
            let rho: f64 = r[0].parse().unwrap();
            assert_eq!(r[0], format!("{rho:.16e}"));
            r[1].parse::<f64>().unwrap();
            r[2].parse::<usize>().unwrap();
        }
    }
    assert_eq!(
        std::fs::read(dir.path().join("a/profile.json")).unwrap(),
        std::fs::read(dir.path().join("b/profile.json")).unwrap()
    );
    let meta = read_json(&dir.path().join("a/profile.json"));
    let radii: Vec<f64> = meta["caustic_radii_m"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    assert_eq!(radii.len(), 4);
    assert!(radii.windows(2).all(|w| w[0] < w[1]));
    let q = meta["methods"].as_array().unwrap().iter().find(|m| m["method"] == "quantum").unwrap();
    assert!(q["min_count"].as_u64().unwrap() > 0);
}

#[test]
fn single_point_profile() {
    let dir = setup(&format!("{MODERATE}profile.rho_max_m = 0.3e-6\n"));
    let out = run(dir.path(), &["profile", "--config", "a.cfg", "--method", "uniform", "--out", "o"]);
    assert!(out.status.success());
    let (_, rows) = read_csv(&dir.path().join("o/profile_uniform.csv"));
    assert_eq!(rows.len(), 1);
}

#[test]
fn method_failure_does_not_stop_the_others() {
    let dir = setup(MODERATE);
    let out = run(
        dir.path(),
        &["profile", "--config", "a.cfg", "--set", "detector.z_m=0", "--method", "quantum,uniform", "--out", "o"],
    );
    assert_eq!(out.status.code(), Some(4));
    assert!(dir.path().join("o/profile_uniform.csv").exists());
    assert!(!dir.path().join("o/profile_quantum.csv").exists());
    let meta = read_json(&dir.path().join("o/profile.json"));
    let q = meta["methods"].as_array().unwrap().iter().find(|m| m["method"] == "quantum").unwrap();
    assert_eq!(q["status"], "error");
    assert_eq!(q["exit_code"], 4);
}

#[test]
fn caustic_sweep_matches_classification() {
    let dir = setup("caustics.k_max = 2\ncaustics.chord = 1e-2\n");
    for (i, eta) in [1.370, 2.331, 2.739, std::f64::consts::PI, 5.001, 2.0 * std::f64::consts::PI].iter().enumerate() {
        let out_dir = format!("c{i}");
        let eta_arg = format!("caustics.eta={eta}");
        let out = run(dir.path(), &["caustics", "--config", "a.cfg", "--set", &eta_arg, "--out", &out_dir]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let meta = read_json(&dir.path().join(&out_dir).join("caustics.json"));
        let curves = meta["curves"].as_array().unwrap();
        assert_eq!(curves.len(), 2);
        for c in curves {
            let k = c["k"].as_u64().unwrap() as usize;
            assert_eq!(c["type"], classify_caustic(k, *eta).label());
            let (header, rows) = read_csv(&dir.path().join(&out_dir).join(c["file"].as_str().unwrap()));
            assert_eq!(header, ["t", "branch", "rho", "z"]);
            assert_eq!(rows.len() as u64, c["samples"].as_u64().unwrap());
        }
        let umbilic = curves.iter().any(|c| c["irregular_points"].as_array().unwrap().iter().any(|p| p["kind"] == "Umbilic"));
        assert_eq!(umbilic, i == 5, "η {eta}");
        let orbits = meta["closed_orbits"].as_array().unwrap();
        assert_eq!(orbits.len(), 1 + (eta / std::f64::consts::PI - 1e-12).floor() as usize);
    }
}

#[test]
fn cycle_index_is_bounded() {
    let dir = setup("caustics.eta = 3\ncaustics.k_max = 20000\n");
    let out = run(dir.path(), &["caustics", "--config", "a.cfg", "--out", "o"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn snake_orbit_crossing() {
    let dir = setup(MODERATE);
    assert!(run(dir.path(), &["orbits", "--config", "a.cfg", "--out", "o"]).status.success());
    let (header, rows) = read_csv(&dir.path().join("o/orbits.csv"));
    assert_eq!(header[6], "crossing_rho_m");
    assert_eq!(rows.len(), 3);
    let snake = rows.iter().find(|r| r[0] == "Snake").unwrap();
    assert!((snake[6].parse::<f64>().unwrap() - 1.945e-6).abs() < 5e-9);
}

// Weak electric field: Airy width 1/β well below the Landau spacing.
#[test]
fn cross_section_peaks_follow_landau_thresholds() {
    let dir = setup(
        "fields.electric_v_per_m = 1\nfields.magnetic_t = 0.02\n\
         cross_section.e_min_ev = 0.5e-6\ncross_section.e_max_ev = 12e-6\ncross_section.samples = 1500\n",
    );
    let out = run(dir.path(), &["cross-section", "--config", "a.cfg", "--out", "o"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (header, rows) = read_csv(&dir.path().join("o/cross_section.csv"));
    assert_eq!(header, ["energy_ev", "current", "terms", "tail_bound"]);
    let e: Vec<f64> = rows.iter().map(|r| r[0].parse().unwrap()).collect();
    let j: Vec<f64> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    assert!(j.iter().all(|&x| x > 0.0));

    let b_field = 0.02;
    let hw_j = HBAR * ELEMENTARY_CHARGE * b_field / (2.0 * ELECTRON_MASS);
    let hw = hw_j / ELEMENTARY_CHARGE;
    let beta = (2.0 * ELECTRON_MASS / (HBAR * HBAR * ELEMENTARY_CHARGE * ELEMENTARY_CHARGE)).cbrt();
    let inv_beta = 1.0 / (beta * ELEMENTARY_CHARGE);

    // Oracle: J = 2mB/(βħ⁴ℰ)·Σ Ai(β((2n+1)ħω_L − E))² with ℰ = 1 V/m.
    let pref = 2.0 * ELECTRON_MASS * b_field / (beta * HBAR.powi(4));
    for (&en, &jj) in e.iter().zip(&j) {
        let mut sum = 0.0;
        for n in 0.. {
            let alpha = beta * ((2 * n + 1) as f64 * hw_j - en * ELEMENTARY_CHARGE);
            if alpha > 40.0 {
                break;
            }
            sum += airy(alpha).unwrap().ai.powi(2);
        }
        assert!((jj / (pref * sum) - 1.0).abs() < 1e-9, "E {en}");
    }

    let at = |x: f64| j[e.iter().enumerate().min_by(|a, b| (a.1 - x).abs().total_cmp(&(b.1 - x).abs())).unwrap().0];
    // Lowest threshold: nothing underneath, so the first maximum is the Ai² maximum at argument -1.01879.
    let first = (1..e.len() - 1).find(|&i| j[i] > j[i - 1] && j[i] >= j[i + 1]).unwrap();
    assert!((e[first] - (hw + 1.01879 * inv_beta)).abs() < 0.05 * inv_beta, "{}", e[first]);
    // Higher thresholds sit on the oscillating tails of the lower terms; each still switches on a clear rise.
    for n in 1..5 {
        let en = (2 * n + 1) as f64 * hw;
        assert!(at(en + 1.01879 * inv_beta) > 1.5 * at(en - inv_beta), "n {n}");
    }
    // Background grows: later threshold intervals carry more current on average.
    let mean = |lo: f64, hi: f64| {
        let v: Vec<f64> = e.iter().zip(&j).filter(|(x, _)| **x >= lo && **x < hi).map(|(_, y)| *y).collect();
        v.iter().sum::<f64>() / v.len() as f64
    };
    assert!(mean(7.0 * hw, 9.0 * hw) > mean(hw, 3.0 * hw));

    let below = setup("fields.electric_v_per_m = 1\nfields.magnetic_t = 0.02\ncross_section.e_min_ev = -1e-6\ncross_section.e_max_ev = -1e-6\n");
    assert!(run(below.path(), &["cross-section", "--config", "a.cfg", "--out", "o"]).status.success());
    let (_, rows) = read_csv(&below.path().join("o/cross_section.csv"));
    let jneg: f64 = rows[0][1].parse().unwrap();
    assert!(jneg > 0.0 && jneg < 1e-3 * j.iter().cloned().fold(0.0, f64::max));
}
