use std::fs::File;
use std::io::{self, Write};
use std::path::Path;

use modstab::{Error, Result};
use serde::Serialize;

/// A CSV number: 17 significant digits, so every `f64` round-trips exactly.
pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

pub fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(
            File::create(p)
                .map_err(|e| Error::Config(format!("cannot create {}: {e}", p.display())))?,
        ),
        None => Box::new(io::stdout().lock()),
    })
}

fn io_error(e: impl std::fmt::Display) -> Error {
    Error::Config(format!("write failed: {e}"))
}

pub fn write_json<T: Serialize>(path: Option<&Path>, value: &T) -> Result<()> {
    let mut w = sink(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(io_error)?;
    writeln!(w).map_err(io_error)
}

pub fn write_csv(path: Option<&Path>, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink(path)?);
    w.write_record(header).map_err(io_error)?;
    for row in rows {
        w.write_record(row).map_err(io_error)?;
    }
    w.flush().map_err(io_error)
}
