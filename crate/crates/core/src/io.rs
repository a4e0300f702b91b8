//! CSV and edge-list input/output.
//!
//! Numbers are written with 17 significant digits so that a write/read round
//! trip reproduces every `f64` exactly.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::graphs::Graph;
use crate::opspace::Signal;

fn io_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Parse(format!("{}: {e}", path.display()))
}

fn os_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io { path: path.display().to_string(), source }
}

pub fn format_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn parse_f64(path: &Path, line: usize, s: &str) -> Result<f64> {
    s.trim().parse::<f64>().map_err(|e| io_err(path, format!("line {line}: `{s}`: {e}")))
}

/// Reads a headerless numeric CSV. All rows must have the same length.
pub fn read_matrix(path: &Path) -> Result<DMatrix<f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(File::open(path).map_err(|e| os_err(path, e))?);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| io_err(path, e))?;
        let row = rec.iter().map(|s| parse_f64(path, i + 1, s)).collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.is_empty() || ncols == 0 {
        return Err(io_err(path, "empty matrix"));
    }
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(io_err(path, "ragged rows"));
    }
    Ok(DMatrix::from_fn(rows.len(), ncols, |r, c| rows[r][c]))
}

pub fn write_matrix(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    let file = File::create(path).map_err(|e| os_err(path, e))?;
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(file);
    for r in 0..m.nrows() {
        w.write_record((0..m.ncols()).map(|c| format_f64(m[(r, c)]))).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| os_err(path, e))
}

/// Reads a signal stored either as one column or as one row.
pub fn read_signal(path: &Path) -> Result<Signal> {
    let m = read_matrix(path)?;
    if m.ncols() != 1 && m.nrows() != 1 {
        return Err(io_err(path, format!("expected a single row or column, got {}x{}", m.nrows(), m.ncols())));
    }
    Signal::new(m.iter().copied().collect())
}

/// Writes a signal as one value per line.
pub fn write_signal(path: &Path, f: &Signal) -> Result<()> {
    write_matrix(path, &DMatrix::from_column_slice(f.len(), 1, f.values()))
}

pub fn read_weights(path: &Path) -> Result<Vec<f64>> {
    Ok(read_matrix(path)?.iter().copied().collect())
}

/// Reads a whitespace- or comma-separated edge list `u v [w]`. Blank lines and
/// lines starting with `#` are skipped. `n` defaults to one more than the
/// largest vertex index.
pub fn read_edge_list(path: &Path, n: Option<usize>) -> Result<Graph> {
    let file = File::open(path).map_err(|e| os_err(path, e))?;
    let mut edges = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| os_err(path, e))?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let parts: Vec<&str> = t.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty()).collect();
        if !(2..=3).contains(&parts.len()) {
            return Err(io_err(path, format!("line {}: expected `u v [w]`", i + 1)));
        }
        let vertex = |s: &str| s.parse::<usize>().map_err(|e| io_err(path, format!("line {}: `{s}`: {e}", i + 1)));
        let (u, v) = (vertex(parts[0])?, vertex(parts[1])?);
        let w = match parts.get(2) {
            Some(s) => parse_f64(path, i + 1, s)?,
            None => 1.0,
        };
        edges.push((u, v, w));
    }
    let n = n.unwrap_or_else(|| edges.iter().map(|&(u, v, _)| u.max(v) + 1).max().unwrap_or(0));
    Graph::new(n, edges, false)
}

pub fn write_edge_list(path: &Path, g: &Graph) -> Result<()> {
    let mut file = File::create(path).map_err(|e| os_err(path, e))?;
    for e in g.edges() {
        let (u, v) = e.key();
        writeln!(file, "{u} {v} {}", format_f64(e.w)).map_err(|e| os_err(path, e))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs::grid_2d;

    #[test]
    fn matrix_round_trip_is_exact() {
        let dir = std::env::temp_dir().join(format!("probgsp-io-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let m = DMatrix::from_fn(3, 4, |r, c| (r as f64 + 0.1).powf(c as f64 + 0.3) / 7.0 - 1e-300);
        let p = dir.join("m.csv");
        write_matrix(&p, &m).unwrap();
        assert_eq!(read_matrix(&p).unwrap(), m);

        let g = grid_2d(3, 4);
        let q = dir.join("g.txt");
        write_edge_list(&q, &g).unwrap();
        let back = read_edge_list(&q, None).unwrap();
        assert_eq!(back.edge_count(), g.edge_count());
        assert_eq!(back.laplacian_matrix(), g.laplacian_matrix());
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
