//! File formats: one-column observation CSV, estimate CSV, and the 17-digit
//! decimal-text encoding used for reals in JSON.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::scaled::ScaledValue;

/// Formats a real with 17 significant digits.
pub fn fmt_real(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "NaN".to_string()
    } else if x > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

/// Serde adapter: writes `f64` as a 17-significant-digit string and accepts
/// either a string or a JSON number on input.
pub mod real {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&super::fmt_real(*x))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Either {
            Num(f64),
            Text(String),
        }
        match Either::deserialize(d)? {
            Either::Num(x) => Ok(x),
            Either::Text(s) => s.trim().parse::<f64>().map_err(de::Error::custom),
        }
    }
}

/// Same as [`real`] for `Vec<f64>`.
pub mod real_vec {
    use serde::ser::SerializeSeq;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(xs: &[f64], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(xs.len()))?;
        for x in xs {
            seq.serialize_element(&super::fmt_real(*x))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        #[derive(Deserialize)]
        struct Wrap(#[serde(with = "super::real")] f64);
        let v: Vec<Wrap> = Vec::deserialize(d)?;
        Ok(v.into_iter().map(|w| w.0).collect())
    }
}

fn malformed(path: &Path, reason: impl Into<String>) -> Error {
    Error::Malformed { path: path.display().to_string(), reason: reason.into() }
}

/// Reads a one-column CSV of observations. A non-numeric first row is
/// treated as a header.
pub fn read_observations(path: &Path) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path).map_err(|e| malformed(path, e.to_string()))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(false)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut out = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| malformed(path, e.to_string()))?;
        if record.len() != 1 {
            return Err(malformed(path, format!("line {}: expected one column, found {}", i + 1, record.len())));
        }
        let field = &record[0];
        match field.parse::<f64>() {
            Ok(x) if x.is_finite() => out.push(x),
            Ok(_) => return Err(malformed(path, format!("line {}: non-finite value {field:?}", i + 1))),
            Err(_) if i == 0 => continue,
            Err(_) => return Err(malformed(path, format!("line {}: not a number: {field:?}", i + 1))),
        }
    }
    if out.is_empty() {
        return Err(malformed(path, "no observations"));
    }
    Ok(out)
}

/// Writes a single-column CSV with a header row.
pub fn write_column(path: &Path, header: &str, values: &[f64]) -> Result<()> {
    let mut buf = String::with_capacity(values.len() * 26 + header.len() + 1);
    buf.push_str(header);
    buf.push('\n');
    for v in values {
        buf.push_str(&fmt_real(*v));
        buf.push('\n');
    }
    write_atomic(path, buf.as_bytes())
}

/// Writes estimates as CSV with columns `x, f_nh_mantissa, log_scale, f_nh`;
/// `f_nh` is left empty when it is not representable.
pub fn write_estimates(path: &Path, grid: &[f64], values: &[ScaledValue]) -> Result<()> {
    let mut buf = String::from("x,f_nh_mantissa,log_scale,f_nh\n");
    for (x, v) in grid.iter().zip(values) {
        let full = v.representable().map(fmt_real).unwrap_or_default();
        buf.push_str(&format!("{},{},{},{}\n", fmt_real(*x), fmt_real(v.mantissa), fmt_real(v.log_scale), full));
    }
    write_atomic(path, buf.as_bytes())
}

pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut file = fs::File::create(path)?;
    file.write_all(bytes)?;
    file.flush()?;
    Ok(())
}
