//! PCF1 field snapshots and run-log CSV.

use crate::error::{Error, Result};
use crate::euler::InvariantsReport;
use crate::fourier::{Grid2D, PhysicalField};
use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::Path;

const MAGIC: &[u8; 4] = b"PCF1";

/// `"PCF1"`, `n: u32`, `L: f64`, then `n*n` row-major `f64`, all little-endian.
pub fn encode_pcf1(f: &PhysicalField) -> Vec<u8> {
    let g = f.grid();
    let mut out = Vec::with_capacity(16 + 8 * g.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(g.n() as u32).to_le_bytes());
    out.extend_from_slice(&g.length().to_le_bytes());
    for v in f.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_pcf1(bytes: &[u8]) -> Result<PhysicalField> {
    if bytes.len() < 16 || &bytes[..4] != MAGIC {
        return Err(Error::Format("missing PCF1 header".into()));
    }
    let n = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes")) as usize;
    let length = f64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes"));
    let expected = n
        .checked_mul(n)
        .and_then(|m| m.checked_mul(8))
        .and_then(|m| m.checked_add(16))
        .ok_or_else(|| Error::Format(format!("grid size {n} overflows")))?;
    if bytes.len() != expected {
        return Err(Error::Format(format!("PCF1 body has {} bytes, expected {expected} for n = {n}", bytes.len())));
    }
    let grid = Grid2D::new(n, length)?;
    let values = bytes[16..].chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
    PhysicalField::new(grid, values)
}

pub fn write_pcf1(path: &Path, f: &PhysicalField) -> Result<()> {
    std::fs::File::create(path)?.write_all(&encode_pcf1(f))?;
    Ok(())
}

pub fn read_pcf1(path: &Path) -> Result<PhysicalField> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?
        .read_to_end(&mut bytes)?;
    decode_pcf1(&bytes)
}

/// One run-log line per recorded time.
#[derive(Debug, Clone, PartialEq)]
pub struct RunLogRow {
    pub invariants: InvariantsReport,
    pub det_drift: f64,
}

pub fn runlog_csv(rows: &[RunLogRow]) -> String {
    let mut s = String::from("t,energy,enstrophy,max_abs_omega,det_drift,near_band,adapted_norm\n");
    for r in rows {
        let i = &r.invariants;
        let adapted = i.adapted.map_or(String::from("nan"), |a| a.to_string());
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            i.t,
            i.energy,
            i.enstrophy,
            i.omega_max.max(-i.omega_min),
            r.det_drift,
            i.near_band_fraction,
            adapted
        );
    }
    s
}
