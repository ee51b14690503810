//! Matrix file formats.
//!
//! * CSV: one matrix row per line, comma separated decimal literals, the same
//!   number of fields on every line, no header. Values are written with the
//!   shortest representation that parses back to the same `f64`.
//! * BLPM: the ASCII bytes `BLPM`, `rows` and `cols` as little-endian `u32`,
//!   then `rows * cols` little-endian `f64` values in column-major order.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

pub const BLPM_MAGIC: &[u8; 4] = b"BLPM";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MatrixFormat {
    Csv,
    Blpm,
}

impl MatrixFormat {
    /// `.blpm` files are binary, everything else is CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("blpm") => MatrixFormat::Blpm,
            _ => MatrixFormat::Csv,
        }
    }
}

pub fn read_matrix(path: &Path) -> Result<Matrix> {
    let file = BufReader::new(File::open(path)?);
    match MatrixFormat::from_path(path) {
        MatrixFormat::Csv => read_csv(file),
        MatrixFormat::Blpm => read_blpm(file),
    }
}

pub fn write_matrix(path: &Path, y: &Matrix) -> Result<()> {
    let mut file = BufWriter::new(File::create(path)?);
    match MatrixFormat::from_path(path) {
        MatrixFormat::Csv => write_csv(&mut file, y)?,
        MatrixFormat::Blpm => write_blpm(&mut file, y)?,
    }
    file.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(reader: R) -> Result<Matrix> {
    let mut csv = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (line, record) in csv.records().enumerate() {
        let record = record?;
        let row = record
            .iter()
            .map(|field| {
                field.parse::<f64>().map_err(|_| {
                    Error::Parse(format!("line {}: `{field}` is not a number", line + 1))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::Parse(format!(
                    "line {}: expected {} fields, found {}",
                    line + 1,
                    first.len(),
                    row.len()
                )));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Parse("empty matrix file".into()));
    }
    Matrix::from_rows(&rows).map_err(|e| Error::Parse(e.to_string()))
}

pub fn write_csv<W: Write>(writer: W, y: &Matrix) -> Result<()> {
    let mut csv = csv::WriterBuilder::new()
        .has_headers(false)
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(writer);
    for i in 0..y.rows() {
        csv.write_record(y.row(i).iter().map(|v| format!("{v:?}")))?;
    }
    csv.flush()?;
    Ok(())
}

pub fn read_blpm<R: Read>(mut reader: R) -> Result<Matrix> {
    let mut header = [0u8; 12];
    reader
        .read_exact(&mut header)
        .map_err(|_| Error::Parse("truncated BLPM header".into()))?;
    if &header[..4] != BLPM_MAGIC {
        return Err(Error::Parse("missing BLPM magic bytes".into()));
    }
    let rows = u32::from_le_bytes(header[4..8].try_into().unwrap()) as usize;
    let cols = u32::from_le_bytes(header[8..12].try_into().unwrap()) as usize;
    let count = rows
        .checked_mul(cols)
        .ok_or_else(|| Error::Parse("BLPM dimensions overflow".into()))?;
    let mut body = Vec::new();
    reader.read_to_end(&mut body)?;
    if body.len() != count * 8 {
        return Err(Error::Parse(format!(
            "BLPM body holds {} bytes, expected {} for {rows}x{cols}",
            body.len(),
            count * 8
        )));
    }
    let data = body
        .chunks_exact(8)
        .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
        .collect();
    Matrix::from_col_major(rows, cols, data).map_err(|e| Error::Parse(e.to_string()))
}

pub fn write_blpm<W: Write>(mut writer: W, y: &Matrix) -> Result<()> {
    let too_big = |d: usize| Error::InvalidParameter(format!("dimension {d} does not fit in u32"));
    let rows = u32::try_from(y.rows()).map_err(|_| too_big(y.rows()))?;
    let cols = u32::try_from(y.cols()).map_err(|_| too_big(y.cols()))?;
    writer.write_all(BLPM_MAGIC)?;
    writer.write_all(&rows.to_le_bytes())?;
    writer.write_all(&cols.to_le_bytes())?;
    for v in y.as_slice() {
        writer.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}
