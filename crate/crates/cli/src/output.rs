//! CSV and JSON writers. CSV headers are the field names of the row types.
//! When writing to a file, a `<file>.meta.json` sidecar records the seed,
//! tolerance and grid used.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::Result;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Debug, Serialize)]
pub struct Meta {
    pub experiment: String,
    pub seed: u64,
    pub tol: f64,
    pub parameters: serde_json::Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub summary: Option<serde_json::Value>,
}

pub fn sidecar_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".meta.json");
    out.with_file_name(name)
}

fn sink(out: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

pub fn write_csv<T: Serialize, W: Write>(rows: &[T], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    for r in rows {
        wr.serialize(r)?;
    }
    wr.flush()?;
    Ok(())
}

/// Writes `rows` in `format` to `out` (stdout if `None`), plus the sidecar
/// when `out` is a file. JSON output embeds the metadata next to the rows.
pub fn write_table<T: Serialize>(rows: &[T], format: Format, out: Option<&Path>, meta: &Meta) -> Result<()> {
    let mut w = sink(out)?;
    match format {
        Format::Csv => write_csv(rows, &mut w)?,
        Format::Json => {
            let doc = serde_json::json!({ "meta": meta, "rows": rows });
            serde_json::to_writer_pretty(&mut w, &doc)?;
            writeln!(w)?;
        }
    }
    w.flush()?;
    if let Some(p) = out {
        let f = BufWriter::new(File::create(sidecar_path(p))?);
        serde_json::to_writer_pretty(f, meta)?;
    }
    Ok(())
}

/// Writes a JSON value to `out` or stdout.
pub fn write_json(value: &serde_json::Value, out: Option<&Path>) -> Result<()> {
    let mut w = sink(out)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}
