//! Plain-text export formats and atomic file writes.
//!
//! * CSV: header row, comma separated, `.` decimal point, numbers in
//!   shortest round-trip form, `NaN` for missing values.
//! * Density-matrix snapshots: a `dims d1 d2 …` line followed by one line per
//!   matrix row holding space-separated `re,im` entries.
//! * Wigner grids: first row `im\re,<Re α axis…>`, then one row per Im α
//!   value starting with that value.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hilbert::DensityState;
use crate::observables::wigner::WignerGrid;
use crate::quantum::Trajectory;

/// Writes `contents` to a sibling temporary file and renames it into place,
/// so readers never observe a partial file.
pub fn atomic_write(path: &Path, contents: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = Path::new(&tmp);
    fs::write(tmp, contents)?;
    fs::rename(tmp, path)?;
    Ok(())
}

pub fn format_number(v: f64) -> String {
    if v == 0.0 || !v.is_finite() || (1e-4..1e7).contains(&v.abs()) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

pub fn csv_table(header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        assert_eq!(row.len(), header.len(), "row width must match the header");
        let cells: Vec<String> = row.into_iter().map(format_number).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Parses a numeric CSV table into its header and rows.
pub fn parse_csv(text: &str) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut lines = text.lines();
    let header: Vec<String> = lines
        .next()
        .ok_or_else(|| Error::Parse("empty CSV".into()))?
        .split(',')
        .map(str::to_owned)
        .collect();
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|c| {
                c.parse::<f64>()
                    .map_err(|e| Error::Parse(format!("line {}: {c:?}: {e}", i + 2)))
            })
            .collect::<Result<Vec<f64>>>()?;
        if row.len() != header.len() {
            return Err(Error::Parse(format!(
                "line {}: {} fields, header has {}",
                i + 2,
                row.len(),
                header.len()
            )));
        }
        rows.push(row);
    }
    Ok((header, rows))
}

pub fn trajectory_csv(traj: &Trajectory) -> String {
    let mut header = vec!["time"];
    header.extend(traj.names());
    let rows = traj.times.iter().enumerate().map(|(k, t)| {
        let mut row = vec![*t];
        row.extend(traj.series.iter().map(|(_, s)| s[k]));
        row
    });
    csv_table(&header, rows)
}

pub fn snapshot_text(rho: &DensityState) -> String {
    let mut out = String::from("dims");
    for d in rho.dims() {
        write!(out, " {d}").unwrap();
    }
    out.push('\n');
    let m = rho.matrix();
    for r in 0..m.nrows() {
        let cells: Vec<String> = (0..m.ncols())
            .map(|c| format!("{:e},{:e}", m[(r, c)].re, m[(r, c)].im))
            .collect();
        out.push_str(&cells.join(" "));
        out.push('\n');
    }
    out
}

pub fn parse_snapshot(text: &str) -> Result<DensityState> {
    let mut lines = text.lines();
    let first = lines.next().ok_or_else(|| Error::Parse("empty snapshot".into()))?;
    let mut words = first.split_whitespace();
    if words.next() != Some("dims") {
        return Err(Error::Parse("snapshot must start with a dims line".into()));
    }
    let dims = words
        .map(|w| w.parse::<usize>().map_err(|e| Error::Parse(format!("dims: {e}"))))
        .collect::<Result<Vec<usize>>>()?;
    let n: usize = dims.iter().product();
    let mut entries = Vec::with_capacity(n * n);
    for line in lines.filter(|l| !l.is_empty()) {
        for cell in line.split_whitespace() {
            let (re, im) = cell
                .split_once(',')
                .ok_or_else(|| Error::Parse(format!("bad entry {cell:?}")))?;
            let parse = |s: &str| s.parse::<f64>().map_err(|e| Error::Parse(format!("{s:?}: {e}")));
            entries.push(Complex64::new(parse(re)?, parse(im)?));
        }
    }
    if entries.len() != n * n {
        return Err(Error::Parse(format!("expected {} entries, found {}", n * n, entries.len())));
    }
    DensityState::new(dims, DMatrix::from_row_slice(n, n, &entries))
}

pub fn wigner_csv(w: &WignerGrid) -> String {
    let mut out = String::from("im\\re");
    for x in &w.axis {
        write!(out, ",{}", format_number(*x)).unwrap();
    }
    out.push('\n');
    for (i, y) in w.axis.iter().enumerate() {
        out.push_str(&format_number(*y));
        for j in 0..w.axis.len() {
            write!(out, ",{}", format_number(w.values[(i, j)])).unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn profile_csv(header: [&str; 2], points: &[(f64, f64)]) -> String {
    csv_table(&header, points.iter().map(|(a, b)| vec![*a, *b]))
}
