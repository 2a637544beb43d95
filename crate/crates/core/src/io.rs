//! Plain-text output helpers: 17-significant-digit CSV and JSON files.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};

/// Scientific notation with 17 significant digits, exact for round trips.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.display().to_string(),
        source,
    }
}

pub fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    Ok(())
}

/// Writes a CSV file with an optional leading `# manifest_sha256=` line.
pub fn write_csv(
    path: &Path,
    manifest_hash: Option<&str>,
    header: &[&str],
    rows: impl IntoIterator<Item = Vec<f64>>,
) -> Result<()> {
    ensure_parent(path)?;
    let mut out = String::new();
    if let Some(hash) = manifest_hash {
        out.push_str(&format!("# manifest_sha256={hash}\n"));
    }
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|&v| fmt_f64(v)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    let mut f = fs::File::create(path).map_err(|e| io_err(path, e))?;
    f.write_all(out.as_bytes()).map_err(|e| io_err(path, e))
}

/// Reads a numeric CSV written by [`write_csv`]; returns header and rows.
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let fmt_err = |reason: String| Error::Format {
        path: path.display().to_string(),
        reason,
    };
    let mut lines = text
        .lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty());
    let header: Vec<String> = lines
        .next()
        .ok_or_else(|| fmt_err("missing header row".into()))?
        .split(',')
        .map(|s| s.trim().to_string())
        .collect();
    let mut rows = Vec::new();
    for (n, line) in lines.enumerate() {
        let row = line
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| fmt_err(format!("row {}: {e}", n + 1)))?;
        if row.len() != header.len() {
            return Err(fmt_err(format!(
                "row {} has {} cells, header has {}",
                n + 1,
                row.len(),
                header.len()
            )));
        }
        rows.push(row);
    }
    Ok((header, rows))
}

/// Serializes a value as pretty JSON. Floats keep full precision.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    ensure_parent(path)?;
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Format {
        path: path.display().to_string(),
        reason: e.to_string(),
    })?;
    fs::write(path, text + "\n").map_err(|e| io_err(path, e))
}

pub fn read_json(path: &Path) -> Result<serde_json::Value> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Format {
        path: path.display().to_string(),
        reason: e.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0] {
            let s = fmt_f64(v);
            assert_eq!(s.parse::<f64>().unwrap(), v);
            let mantissa = s.split('e').next().unwrap().trim_start_matches('-');
            assert_eq!(mantissa.chars().filter(|c| c.is_ascii_digit()).count(), 17);
        }
    }

    #[test]
    fn csv_round_trip_skips_manifest_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub/t.csv");
        write_csv(
            &p,
            Some("abc"),
            &["x", "y"],
            vec![vec![1.0, 0.1], vec![2.0, 1e-20]],
        )
        .unwrap();
        let text = fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("# manifest_sha256=abc\nx,y\n"));
        let (h, rows) = read_csv(&p).unwrap();
        assert_eq!(h, vec!["x", "y"]);
        assert_eq!(rows, vec![vec![1.0, 0.1], vec![2.0, 1e-20]]);
    }

    #[test]
    fn ragged_csv_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.csv");
        fs::write(&p, "x,y\n1,2\n3\n").unwrap();
        assert!(matches!(read_csv(&p), Err(Error::Format { .. })));
    }
}
