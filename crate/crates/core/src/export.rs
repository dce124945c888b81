//! Plain-text output formats: RFC-4180-style CSV with `#` manifest comment
//! lines, and line-oriented JSON for trajectory logs.

use std::io::Write;
use std::path::Path;

use crate::error::Result;

/// Quote a CSV field when it contains a delimiter, quote or newline.
fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Write a CSV file: `# key: value` manifest comments, a header row, then
/// data rows. Numeric columns should carry their unit in the header name
/// (e.g. `t_gamma0`, `k_over_pi_d`).
pub fn write_csv<P, I, R>(path: P, manifest: &[(String, String)], header: &[&str], rows: I) -> Result<()>
where
    P: AsRef<Path>,
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    for (k, v) in manifest {
        writeln!(f, "# {k}: {v}")?;
    }
    writeln!(
        f,
        "{}",
        header.iter().map(|h| csv_field(h)).collect::<Vec<_>>().join(",")
    )?;
    for row in rows {
        let line: Vec<String> = row.into_iter().map(|c| csv_field(&c)).collect();
        writeln!(f, "{}", line.join(","))?;
    }
    Ok(())
}

/// Format a float with full round-trip precision.
pub fn fmt(v: f64) -> String {
    format!("{v:.17e}")
}

/// A dense matrix with its grid, as CSV: first column is the row grid value,
/// remaining columns one per grid point.
pub fn write_matrix_csv<P: AsRef<Path>>(
    path: P,
    manifest: &[(String, String)],
    grid_name: &str,
    grid: &[f64],
    values: &ndarray::Array2<f64>,
) -> Result<()> {
    let mut header = vec![grid_name.to_string()];
    header.extend(grid.iter().map(|k| format!("{k:.12}")));
    let header_refs: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
    let rows = grid.iter().enumerate().map(|(i, &g)| {
        let mut row = vec![fmt(g)];
        row.extend(values.row(i).iter().map(|&v| fmt(v)));
        row
    });
    write_csv(path, manifest, &header_refs, rows)
}

/// One serialized trajectory, written as a single JSON line.
#[derive(Debug, serde::Serialize, serde::Deserialize)]
pub struct TrajectoryRecord {
    /// RNG stream index within the master seed
    pub stream: u64,
    pub master_seed: u64,
    /// sample times in 1/γ0
    pub times: Vec<f64>,
    /// one observable row per sample time
    pub observables: Vec<Vec<f64>>,
    /// (time, channel) jump log
    pub jumps: Vec<(f64, usize)>,
    /// time-integrated truncation-leak estimate
    pub top_leak: f64,
}

/// Append trajectory records as line-oriented JSON.
pub fn write_jsonl<P: AsRef<Path>>(path: P, records: &[TrajectoryRecord]) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    for r in records {
        let line = serde_json::to_string(r)
            .map_err(|e| crate::error::Error::InvalidArgument(e.to_string()))?;
        writeln!(f, "{line}")?;
    }
    Ok(())
}
