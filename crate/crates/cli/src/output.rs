//! Number formatting and atomic file output.

use serde::Serialize;
use std::io::Write;
use std::path::Path;

use crate::error::CliError;

/// Shortest decimal that parses back to the same `f64` (at most 17 significant
/// digits). Plain notation for moderate magnitudes, exponent form otherwise.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let a = x.abs();
    if a == 0.0 || (1e-5..1e16).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

pub fn parse_f64(s: &str) -> Result<f64, CliError> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| CliError::Usage(format!("not a number: {s:?}")))
}

/// CSV text with a header row and LF line endings.
pub fn csv_text(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut s = header.join(",");
    s.push('\n');
    for r in rows {
        s.push_str(&r.join(","));
        s.push('\n');
    }
    s
}

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| CliError::Io(e.error))?;
    Ok(())
}

pub fn json_text<T: Serialize>(v: &T) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(v).map_err(|e| CliError::Internal(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// Writes to `path`, or to stdout when no path is given.
pub fn emit(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => write_atomic(p, text.as_bytes()),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn significant_digits(s: &str) -> usize {
        let mantissa: String = s.split('e').next().unwrap().chars().filter(|c| c.is_ascii_digit()).collect();
        mantissa.trim_start_matches('0').trim_end_matches('0').len()
    }

    #[test]
    fn round_trip_extremes() {
        for x in [0.0, -0.0, 1.0, 0.1, 1.0 / 3.0, 2.0f64.sqrt(), 1e-300, 5e-324, 1.7976931348623157e308, 123456.789, -2.5e-7, 1e16, 9.999999999999998e15] {
            let s = fmt_f64(x);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits(), "{s}");
            assert!(significant_digits(&s) <= 17, "{s}");
        }
        assert_eq!(fmt_f64(1e-300), "1e-300");
        assert_eq!(fmt_f64(0.25), "0.25");
    }

    #[test]
    fn csv_layout() {
        let t = csv_text(&["k", "R"], &[vec!["1".into(), "2".into()]]);
        assert_eq!(t, "k,R\n1,2\n");
    }
}
