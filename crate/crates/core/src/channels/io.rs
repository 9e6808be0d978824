//! `{"dim_in", "dim_out", "choi": [[[re, im], ...], ...]}` interchange format.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::Channel;
use crate::error::{Error, Result};
use crate::matlin::{ComplexMatrix, HermitianOperator};

#[derive(Serialize, Deserialize)]
pub(crate) struct ChoiDoc {
    dim_in: usize,
    dim_out: usize,
    choi: Vec<Vec<[f64; 2]>>,
}

impl ChoiDoc {
    pub(crate) fn new(c: &Channel) -> Self {
        ChoiDoc { dim_in: c.dim_in(), dim_out: c.dim_out(), choi: complex_rows(c.choi().matrix()) }
    }
}

/// Row-major `[[re, im], ...]` nesting of a matrix.
pub(crate) fn complex_rows(m: &ComplexMatrix) -> Vec<Vec<[f64; 2]>> {
    (0..m.rows()).map(|r| (0..m.cols()).map(|k| [m[(r, k)].re, m[(r, k)].im]).collect()).collect()
}

pub fn write_choi<W: Write>(c: &Channel, w: W) -> Result<()> {
    serde_json::to_writer_pretty(w, &ChoiDoc::new(c))?;
    Ok(())
}

/// Parses a Choi document. The matrix must be Hermitian up to the default
/// asymmetry threshold.
pub fn read_choi<R: Read>(r: R) -> Result<Channel> {
    let doc: ChoiDoc = serde_json::from_reader(r).map_err(|e| Error::Parse(e.to_string()))?;
    let n = doc.dim_in * doc.dim_out;
    if doc.choi.len() != n || doc.choi.iter().any(|row| row.len() != n) {
        return Err(Error::Parse(format!(
            "choi must be {n}x{n} for dim_in = {}, dim_out = {}",
            doc.dim_in, doc.dim_out
        )));
    }
    let data = doc.choi.into_iter().flatten().map(|[re, im]| Complex64::new(re, im)).collect();
    let m = ComplexMatrix::from_vec(n, n, data)?;
    Channel::from_choi(doc.dim_in, doc.dim_out, HermitianOperator::new(m)?)
}

pub fn read_choi_file(path: impl AsRef<Path>) -> Result<Channel> {
    read_choi(BufReader::new(File::open(path)?))
}

pub fn write_choi_file(c: &Channel, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_choi(c, &mut w)?;
    w.flush()?;
    Ok(())
}
