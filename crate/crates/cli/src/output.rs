//! CSV emission. All numbers carry 17 significant digits.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;
use probgsp::io::format_f64;

use crate::{CliError, CliResult};

pub fn num(x: f64) -> String {
    format_f64(x)
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Invalid(format!("{}: {e}", path.display()))
}

/// Header row followed by data rows.
pub fn write_table(path: &Path, header: &[&str], rows: &[Vec<String>]) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    w.write_record(header).map_err(|e| io_err(path, e))?;
    for r in rows {
        w.write_record(r).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

/// Headerless numeric matrix, optionally preceded by a `# ...` comment line.
pub fn write_matrix(path: &Path, comment: Option<&str>, m: &DMatrix<f64>) -> CliResult<()> {
    let mut file = File::create(path).map_err(|e| io_err(path, e))?;
    if let Some(c) = comment {
        writeln!(file, "# {c}").map_err(|e| io_err(path, e))?;
    }
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(file);
    for r in 0..m.nrows() {
        w.write_record((0..m.ncols()).map(|c| num(m[(r, c)]))).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

/// One row per signal.
pub fn write_signals(path: &Path, signals: &[probgsp::Signal]) -> CliResult<()> {
    let n = signals.first().map_or(0, |s| s.len());
    let m = DMatrix::from_fn(signals.len(), n, |r, c| signals[r].values()[c]);
    write_matrix(path, None, &m)
}
