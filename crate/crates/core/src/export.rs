//! Plain-text numeric tables.

/// Formats with 17 significant digits, which round-trips every `f64`.
pub fn fmt_num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

/// Comma-separated table with a header row and `\n` line endings.
pub fn csv_table<S: AsRef<str>>(header: &[S], rows: &[Vec<f64>]) -> String {
    let mut out = header.iter().map(|h| h.as_ref()).collect::<Vec<_>>().join(",");
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| fmt_num(*v)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}
