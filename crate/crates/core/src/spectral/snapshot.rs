//! Snapshot files: one JSON header line followed by the raw coefficient
//! payload (float64 little-endian, complex interleaved, `(k1,k2,l)`
//! row-major in FFT index order).

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{SpectralField, TorusGrid};
use crate::error::{Error, Result};

pub const LAYOUT: &str = "row-major";
pub const DTYPE: &str = "float64 little-endian";
pub const ORDER: &str = "(k1,k2,l) complex interleaved";
pub const INDEX_ORDER: &str = "fft";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnapshotHeader {
    pub n_x1: usize,
    pub n_x2: usize,
    pub n_theta: usize,
    pub time: f64,
    pub parameters: BTreeMap<String, f64>,
    pub layout: String,
    pub dtype: String,
    pub order: String,
    /// Index `m` on an axis of length `n` stores wavenumber `m` for
    /// `m ≤ n/2` and `m − n` otherwise.
    pub index_order: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub header: SnapshotHeader,
    pub field: SpectralField,
}

impl SnapshotHeader {
    pub fn new(grid: TorusGrid, time: f64, parameters: BTreeMap<String, f64>) -> Self {
        Self {
            n_x1: grid.n_x1,
            n_x2: grid.n_x2,
            n_theta: grid.n_theta,
            time,
            parameters,
            layout: LAYOUT.into(),
            dtype: DTYPE.into(),
            order: ORDER.into(),
            index_order: INDEX_ORDER.into(),
        }
    }
}

pub fn write_snapshot<W: Write>(
    mut out: W,
    field: &SpectralField,
    time: f64,
    parameters: BTreeMap<String, f64>,
) -> Result<()> {
    let header = SnapshotHeader::new(field.grid(), time, parameters);
    let json = serde_json::to_string(&header).map_err(|e| Error::Format(e.to_string()))?;
    out.write_all(json.as_bytes())?;
    out.write_all(b"\n")?;
    let mut payload = Vec::with_capacity(field.coeffs().len() * 16);
    for c in field.coeffs() {
        payload.extend_from_slice(&c.re.to_le_bytes());
        payload.extend_from_slice(&c.im.to_le_bytes());
    }
    out.write_all(&payload)?;
    out.flush()?;
    Ok(())
}

pub fn read_snapshot<R: Read>(input: R) -> Result<Snapshot> {
    let mut reader = BufReader::new(input);
    let mut line = String::new();
    reader.read_line(&mut line)?;
    let header: SnapshotHeader =
        serde_json::from_str(line.trim_end()).map_err(|e| Error::Format(e.to_string()))?;
    if header.layout != LAYOUT || header.dtype != DTYPE || header.order != ORDER || header.index_order != INDEX_ORDER {
        return Err(Error::Format("unsupported layout/dtype/order".into()));
    }
    let grid = TorusGrid::new(header.n_x1, header.n_x2, header.n_theta)?;
    let mut payload = Vec::new();
    reader.read_to_end(&mut payload)?;
    if payload.len() != grid.len() * 16 {
        return Err(Error::Format(format!(
            "payload has {} bytes, expected {}",
            payload.len(),
            grid.len() * 16
        )));
    }
    let coeffs = payload
        .chunks_exact(16)
        .map(|b| {
            let re = f64::from_le_bytes(b[..8].try_into().unwrap());
            let im = f64::from_le_bytes(b[8..].try_into().unwrap());
            Complex64::new(re, im)
        })
        .collect();
    Ok(Snapshot { header, field: SpectralField::from_coeffs(grid, coeffs)? })
}

pub fn write_snapshot_file(path: &Path, field: &SpectralField, time: f64, parameters: BTreeMap<String, f64>) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_snapshot(std::io::BufWriter::new(file), field, time, parameters)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snapshot_round_trip_is_bit_exact() {
        let grid = TorusGrid::new(4, 6, 8).unwrap();
        let f = SpectralField::from_fn(grid, |a, b, t| (a - b).sin() * t.cos() + 0.1 / 3.0);
        let mut params = BTreeMap::new();
        params.insert("kappa".to_string(), 0.25);
        let mut buf = Vec::new();
        write_snapshot(&mut buf, &f, 1.5, params.clone()).unwrap();
        let first_line = buf.split(|&b| b == b'\n').next().unwrap();
        let v: serde_json::Value = serde_json::from_slice(first_line).unwrap();
        assert_eq!(v["layout"], "row-major");
        assert_eq!(v["dtype"], "float64 little-endian");
        assert_eq!(v["order"], "(k1,k2,l) complex interleaved");
        let snap = read_snapshot(buf.as_slice()).unwrap();
        assert_eq!(snap.field, f);
        assert_eq!(snap.header.time, 1.5);
        assert_eq!(snap.header.parameters, params);
    }

    #[test]
    fn truncated_payload_is_rejected() {
        let grid = TorusGrid::new(4, 4, 4).unwrap();
        let f = SpectralField::zeros(grid);
        let mut buf = Vec::new();
        write_snapshot(&mut buf, &f, 0.0, BTreeMap::new()).unwrap();
        buf.truncate(buf.len() - 3);
        assert!(matches!(read_snapshot(buf.as_slice()), Err(Error::Format(_))));
    }
}
