//! CSV/JSON helpers shared by the CLI and the reproduction targets.

use std::io::Write;

use serde::Serialize;

use crate::error::Result;

/// Version tag written in the first line of every CSV file.
pub const CSV_SCHEMA: &str = "fsard-csv/1";

/// Formats a number with 10 significant digits.
pub fn fmt_num(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let exp = x.abs().log10().floor() as i32;
    if !(-5..15).contains(&exp) {
        return format!("{x:.9e}");
    }
    let decimals = (9 - exp).max(0) as usize;
    let s = format!("{x:.decimals$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn escape(field: &str) -> String {
    if field.contains([',', '"', '\n']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

/// Writes a versioned CSV: a `#` header line carrying the schema tag, the
/// library version and a JSON metadata blob, then a column header and rows.
pub fn write_csv<W: Write, M: Serialize>(
    mut out: W,
    metadata: &M,
    columns: &[&str],
    rows: &[Vec<String>],
) -> Result<()> {
    let meta = serde_json::to_string(metadata).map_err(|e| crate::Error::Io(e.to_string()))?;
    writeln!(out, "# {CSV_SCHEMA} fsard {} {meta}", env!("CARGO_PKG_VERSION"))?;
    writeln!(out, "{}", columns.iter().map(|c| escape(c)).collect::<Vec<_>>().join(","))?;
    for row in rows {
        writeln!(out, "{}", row.iter().map(|c| escape(c)).collect::<Vec<_>>().join(","))?;
    }
    Ok(())
}

/// Builds rows from `(key, value)` records; columns come from the first one.
pub fn records_to_table(records: &[Vec<(&'static str, String)>]) -> (Vec<&'static str>, Vec<Vec<String>>) {
    let columns = records
        .first()
        .map(|r| r.iter().map(|(k, _)| *k).collect())
        .unwrap_or_default();
    let rows = records
        .iter()
        .map(|r| r.iter().map(|(_, v)| v.clone()).collect())
        .collect();
    (columns, rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ten_significant_digits() {
        assert_eq!(fmt_num(72.379848950018), "72.37984895");
        assert_eq!(fmt_num(0.5), "0.5");
        assert_eq!(fmt_num(1.0), "1");
        assert_eq!(fmt_num(123456.0), "123456");
        assert_eq!(fmt_num(1e-9), "1.000000000e-9");
        assert_eq!(fmt_num(f64::INFINITY), "inf");
    }

    #[test]
    fn csv_header_carries_metadata() {
        let mut buf = Vec::new();
        write_csv(&mut buf, &serde_json::json!({"k": 1}), &["a", "b"], &[vec!["1".into(), "x,y".into()]]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert!(lines[0].starts_with("# fsard-csv/1 fsard "));
        assert!(lines[0].ends_with("{\"k\":1}"));
        assert_eq!(lines[2], "1,\"x,y\"");
    }
}
