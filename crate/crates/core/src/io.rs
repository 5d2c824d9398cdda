//! Profile and dataset files.
//!
//! Two input formats are accepted:
//!
//! * CSV with one value per line. A non-numeric first line is treated as a
//!   header; blank lines and lines starting with `#` are skipped.
//! * A JSON array of numbers. Infinite levels are written as the strings
//!   `"inf"` or `"+inf"`.
//!
//! In both formats `inf`, `+inf` and `infinity` (any case) denote an
//! infinite privacy level.

use std::path::Path;

use serde_json::Value;

use crate::types::{Dataset, PrivacyProfile};
use crate::{Error, Result};

fn parse_number(token: &str) -> Option<f64> {
    let t = token.trim();
    match t.to_ascii_lowercase().as_str() {
        "inf" | "+inf" | "infinity" | "+infinity" => Some(f64::INFINITY),
        _ => t.parse::<f64>().ok(),
    }
}

/// Parses the contents of a values file. `path` only labels errors.
pub fn parse_values(text: &str, path: &str) -> Result<Vec<f64>> {
    if text.trim_start().starts_with('[') {
        return parse_json_values(text, path);
    }
    let mut out = Vec::new();
    let mut seen_content = false;
    for (k, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        match parse_number(line) {
            Some(v) => out.push(v),
            None if !seen_content => {}
            None => {
                return Err(Error::Parse {
                    path: path.to_string(),
                    line: k + 1,
                    message: format!("expected a number, found `{line}`"),
                })
            }
        }
        seen_content = true;
    }
    Ok(out)
}

fn parse_json_values(text: &str, path: &str) -> Result<Vec<f64>> {
    let parsed: Value = serde_json::from_str(text).map_err(|e| Error::Parse {
        path: path.to_string(),
        line: e.line(),
        message: e.to_string(),
    })?;
    let items = parsed.as_array().ok_or_else(|| Error::Parse {
        path: path.to_string(),
        line: 1,
        message: "expected a JSON array".into(),
    })?;
    items
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let num = match v {
                Value::Number(n) => n.as_f64(),
                Value::String(s) => parse_number(s),
                _ => None,
            };
            num.ok_or_else(|| Error::Parse {
                path: path.to_string(),
                line: 1,
                message: format!("array element {i} is not a number: {v}"),
            })
        })
        .collect()
}

pub fn read_values(path: &Path) -> Result<Vec<f64>> {
    let label = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: label.clone(),
        source,
    })?;
    parse_values(&text, &label)
}

pub fn read_profile(path: &Path) -> Result<PrivacyProfile> {
    PrivacyProfile::new(read_values(path)?)
}

pub fn read_dataset(path: &Path) -> Result<Dataset> {
    Dataset::new(read_values(path)?)
}

/// 17 significant digits; enough to round-trip every `f64`.
pub fn format_f64(x: f64) -> String {
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    format!("{x:.16e}")
}

/// JSON value for a float, writing infinities as the string `"inf"`.
pub fn json_f64(x: f64) -> Value {
    serde_json::Number::from_f64(x)
        .map(Value::Number)
        .unwrap_or_else(|| Value::String(format_f64(x)))
}

pub fn json_f64_vec(xs: &[f64]) -> Value {
    Value::Array(xs.iter().map(|&x| json_f64(x)).collect())
}

/// Writes values one per line under a single-word header.
pub fn values_csv(header: &str, xs: &[f64]) -> String {
    let mut out = String::with_capacity(24 * (xs.len() + 1));
    out.push_str(header);
    out.push('\n');
    for &x in xs {
        out.push_str(&format_f64(x));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_with_and_without_header() {
        assert_eq!(
            parse_values("eps\n0.1\n0.5\n", "p").unwrap(),
            vec![0.1, 0.5]
        );
        assert_eq!(
            parse_values("0.1\n\n+inf\nINF\n", "p").unwrap(),
            vec![0.1, f64::INFINITY, f64::INFINITY]
        );
    }

    #[test]
    fn malformed_csv_names_line() {
        let err = parse_values("eps\n0.1\nabc\n", "file.csv").unwrap_err();
        match err {
            Error::Parse { line, path, .. } => {
                assert_eq!(line, 3);
                assert_eq!(path, "file.csv");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn json_arrays() {
        assert_eq!(
            parse_values("[0.1, \"inf\", 2]", "p").unwrap(),
            vec![0.1, f64::INFINITY, 2.0]
        );
        assert!(parse_values("[0.1, true]", "p").is_err());
        assert!(parse_values("[0.1,", "p").is_err());
    }

    #[test]
    fn seventeen_digits_round_trip() {
        for x in [0.1, 1.0 / 3.0, 1e-300, 123456.789, -0.5] {
            let s = format_f64(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
        }
        assert_eq!(format_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(json_f64(f64::INFINITY), Value::String("inf".into()));
    }

    #[test]
    fn empty_file_yields_empty_profile_error() {
        let v = parse_values("", "p").unwrap();
        assert!(matches!(PrivacyProfile::new(v), Err(Error::EmptyProfile)));
    }
}
