//! CSV tables and JSON sidecars. Every number goes out with 17 significant digits.

use std::path::{Path, PathBuf};

use serde::{Serialize, Serializer};
use serde_json::value::RawValue;

use crate::CliError;

pub fn fmt17(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        // "NaN", "inf", "-inf" all parse back with str::parse::<f64>.
        x.to_string()
    }
}

/// A float that serializes as a 17-digit JSON number, or null if not finite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Num(pub f64);

impl Serialize for Num {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if !self.0.is_finite() {
            return s.serialize_none();
        }
        RawValue::from_string(fmt17(self.0)).map_err(serde::ser::Error::custom)?.serialize(s)
    }
}

pub fn nums(xs: impl IntoIterator<Item = f64>) -> Vec<Num> {
    xs.into_iter().map(Num).collect()
}

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io(dir.to_path_buf(), e))
}

/// Writes a header and rows of already-formatted cells.
pub fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<PathBuf, CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::Csv(path.to_path_buf(), e))?;
    w.write_record(header).map_err(|e| CliError::Csv(path.to_path_buf(), e))?;
    for r in rows {
        w.write_record(&r).map_err(|e| CliError::Csv(path.to_path_buf(), e))?;
    }
    w.flush().map_err(|e| CliError::Io(path.to_path_buf(), e))?;
    Ok(path.to_path_buf())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<PathBuf, CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Json(e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| CliError::Io(path.to_path_buf(), e))?;
    Ok(path.to_path_buf())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for &x in &[7.908_012_345_678_9, 1e-300, -0.1, 1.0 / 3.0, 6.02214076e23] {
            let s = fmt17(x);
            assert_eq!(s.split('e').next().unwrap().trim_start_matches('-').replace('.', "").len(), 17);
            assert_eq!(s.parse::<f64>().unwrap(), x);
        }
        assert!(fmt17(f64::NAN).parse::<f64>().unwrap().is_nan());
    }

    #[test]
    fn json_numbers_match_text() {
        let v = serde_json::to_string(&vec![Num(0.1), Num(f64::NAN)]).unwrap();
        assert_eq!(v, format!("[{},null]", fmt17(0.1)));
        let back: Vec<Option<f64>> = serde_json::from_str(&v).unwrap();
        assert_eq!(back, vec![Some(0.1), None]);
    }
}
