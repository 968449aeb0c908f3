//! Deterministic CSV serialization with `.meta.json` snapshots.

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use mqcavity_core::experiments::{ExperimentResult, Table};

use crate::config::Resolved;
use crate::error::CliError;

/// Significant digits of every number written to CSV.
pub const CSV_DIGITS: usize = 12;

/// `%g`-style rendering with `digits` significant digits: fixed notation for
/// decimal exponents in `[-5, digits)`, scientific otherwise, trailing zeros removed.
pub fn format_sig(v: f64, digits: usize) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let digits = digits.max(1);
    // exponent after rounding to `digits` significant digits
    let sci = format!("{:.*e}", digits - 1, v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -5 || exp >= digits as i32 {
        format!(
            "{}e{}{:02}",
            trim_zeros(mantissa),
            if exp < 0 { '-' } else { '+' },
            exp.abs()
        )
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{v:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("cannot write {}: {e}", path.display()))
}

fn write_rows(
    path: &Path,
    header: &[String],
    rows: impl Iterator<Item = Vec<String>>,
) -> Result<(), CliError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| io_err(path, e))?;
    }
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(|e| io_err(path, e))?;
    w.write_record(header).map_err(|e| io_err(path, e))?;
    for row in rows {
        w.write_record(&row).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

/// Writes `table` as CSV: a header of column names, then one line per row.
pub fn write_table(table: &Table, path: &Path) -> Result<(), CliError> {
    let header: Vec<String> = table.columns.iter().map(|c| c.name.clone()).collect();
    let rows = (0..table.len()).map(|i| {
        table
            .columns
            .iter()
            .map(|c| format_sig(c.values[i], CSV_DIGITS))
            .collect()
    });
    write_rows(path, &header, rows)
}

fn write_meta(csv_path: &Path, meta: &Value) -> Result<PathBuf, CliError> {
    let mut name = csv_path.as_os_str().to_owned();
    name.push(".meta.json");
    let path = PathBuf::from(name);
    let mut text = serde_json::to_string_pretty(meta).expect("metadata serializes");
    text.push('\n');
    fs::write(&path, text).map_err(|e| io_err(&path, e))?;
    Ok(path)
}

/// Writes every table of `result` plus a `<kind>_summary.csv` of its scalars and
/// invariant diagnostics; each CSV gets a sibling `.meta.json`. Returns the CSV paths.
pub fn write_result(
    result: &ExperimentResult,
    resolved: &Resolved,
) -> Result<Vec<PathBuf>, CliError> {
    let prefix = &resolved.config.output.prefix;
    let meta = |table: &str| {
        json!({
            "tool": env!("CARGO_PKG_NAME"),
            "version": env!("CARGO_PKG_VERSION"),
            "experiment": resolved.experiment.tag(),
            "table": table,
            "config": resolved.config,
            "driver": result.metadata,
            "invariants": result.invariants,
        })
    };
    let mut written = Vec::with_capacity(result.tables.len() + 1);
    for table in &result.tables {
        let path = PathBuf::from(format!("{prefix}{}.csv", table.name));
        write_table(table, &path)?;
        write_meta(&path, &meta(&table.name))?;
        written.push(path);
    }

    let inv = &result.invariants;
    let invariants = [
        ("invariant.runs", inv.runs as f64),
        ("invariant.max_norm_drift", inv.max_norm_drift),
        ("invariant.max_trace_drift", inv.max_trace_drift),
        ("invariant.max_hermiticity_dev", inv.max_hermiticity_dev),
        ("invariant.max_number_drift", inv.max_number_drift),
        (
            "invariant.positivity_warnings",
            inv.positivity_warnings as f64,
        ),
    ];
    let summary = format!("{}_summary", result.kind);
    let path = PathBuf::from(format!("{prefix}{summary}.csv"));
    let rows = result
        .scalars
        .iter()
        .map(|(n, v)| (n.as_str(), *v))
        .chain(invariants)
        .map(|(n, v)| vec![n.to_string(), format_sig(v, CSV_DIGITS)]);
    write_rows(&path, &["name".into(), "value".into()], rows)?;
    write_meta(&path, &meta(&summary))?;
    written.push(path);
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(format_sig(std::f64::consts::PI, 12), "3.14159265359");
        assert_eq!(format_sig(1.0, 12), "1");
        assert_eq!(format_sig(-0.25, 12), "-0.25");
        assert_eq!(format_sig(1.0 / 3.0 * 1e-7, 12), "3.33333333333e-08");
        assert_eq!(format_sig(123456789012345.0, 12), "1.23456789012e+14");
        assert_eq!(format_sig(0.0001, 12), "0.0001");
        assert_eq!(format_sig(f64::NAN, 12), "nan");
        assert_eq!(format_sig(999999999999.5, 12), "1e+12");
    }

    #[test]
    fn formatted_values_parse_back_to_twelve_digits() {
        for &v in &[4.80908729652601, 1e-300, -7.5e22, 0.000012345678901234] {
            let back: f64 = format_sig(v, 12).parse().unwrap();
            assert!(((back - v) / v).abs() < 5e-12, "{v} -> {back}");
        }
    }

    #[test]
    fn empty_table_is_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let t = Table::new("t").with("t_ns", vec![]).with("n_q1", vec![]);
        write_table(&t, &path).unwrap();
        assert_eq!(fs::read_to_string(path).unwrap(), "t_ns,n_q1\n");
    }

    #[test]
    fn rows_end_in_newline() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sub/t.csv");
        let t = Table::new("t")
            .with("a", vec![1.0, 0.5])
            .with("b", vec![2.0, 1e-9]);
        write_table(&t, &path).unwrap();
        assert_eq!(fs::read_to_string(path).unwrap(), "a,b\n1,2\n0.5,1e-09\n");
    }
}
