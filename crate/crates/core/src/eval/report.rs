//! Plain-text result reporting: a record-per-line metrics format and a
//! flat TSV table suitable for plotting. Both are deterministic in field
//! order, and floats are printed with the shortest representation that
//! round-trips, so a written table re-parses to bit-identical values.

use crate::error::{Error, Result};
use crate::eval::AblationOutcome;
use std::fmt::Write as _;
use std::path::Path;

/// Write lines to `path`, one per element, LF-terminated.
pub fn write_lines(path: &Path, lines: &[String]) -> Result<()> {
    let mut text = String::new();
    for line in lines {
        text.push_str(line);
        text.push('\n');
    }
    std::fs::write(path, text)?;
    Ok(())
}

/// One metric per record: `name<TAB>value`. Values print with Rust's
/// shortest round-trip float format.
pub fn metrics_lines(metrics: &[(String, f64)]) -> Vec<String> {
    metrics
        .iter()
        .map(|(name, value)| format!("{name}\t{value}"))
        .collect()
}

/// Render a table as TSV: a header row of column names, then one row per
/// record. Row cells are the shortest round-trip float representations.
pub fn render_table(columns: &[&str], rows: &[(String, Vec<f64>)]) -> String {
    let mut out = String::from("variant");
    for col in columns {
        out.push('\t');
        out.push_str(col);
    }
    out.push('\n');
    for (label, values) in rows {
        out.push_str(label);
        for v in values {
            let _ = write!(out, "\t{v}");
        }
        out.push('\n');
    }
    out
}

/// Parse a table written by [`render_table`] back into the header and the
/// labelled rows. Every row must carry exactly as many values as there
/// are columns.
pub fn parse_table(text: &str) -> Result<(Vec<String>, Vec<(String, Vec<f64>)>)> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Data("table has no header row".to_string()))?;
    let mut fields = header.split('\t');
    let label_col = fields.next().unwrap_or("");
    if label_col != "variant" {
        return Err(Error::Data(format!(
            "table header must start with 'variant', got '{label_col}'"
        )));
    }
    let columns: Vec<String> = fields.map(str::to_string).collect();
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let mut cells = line.split('\t');
        let label = cells.next().unwrap_or("").to_string();
        let values: Vec<f64> = cells
            .map(|c| {
                c.parse::<f64>().map_err(|_| {
                    Error::Data(format!("row {}: '{c}' is not a number", i + 2))
                })
            })
            .collect::<Result<_>>()?;
        if values.len() != columns.len() {
            return Err(Error::Data(format!(
                "row {}: expected {} values, got {}",
                i + 2,
                columns.len(),
                values.len()
            )));
        }
        rows.push((label, values));
    }
    Ok((columns, rows))
}

/// The ablation ladder as a plottable table: one row per variant, columns
/// pairwise / top1 / top5.
pub fn ablation_table(outcome: &AblationOutcome) -> String {
    let rows: Vec<(String, Vec<f64>)> = outcome
        .rows
        .iter()
        .map(|r| (r.variant.clone(), vec![r.pairwise, r.top1, r.top5]))
        .collect();
    render_table(&["pairwise", "top1", "top5"], &rows)
}
