//! Portable binary dump of a weighted Galerkin matrix.
//!
//! Layout, all little-endian:
//!
//! | bytes | content |
//! |---|---|
//! | 8 | magic `RDSLABOP` |
//! | 4 | format version (`u32`, currently 1) |
//! | 4 | dimension `d` (`u32`) |
//! | 4 | box radius `K` (`u32`) |
//! | 8 | Sobolev index `s` (`f64`) |
//! | 32 | SHA-256 of the model and measure description |
//! | 8 | matrix order `n = (2K+1)^d` (`u64`) |
//! | 16·n² | entries, column-major, each `(re, im)` as two `f64` |

use std::io::{Read, Write};

use num_complex::Complex64;

use super::galerkin::FourierOperator;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"RDSLABOP";
pub const FORMAT_VERSION: u32 = 1;
/// Refuse to write dense dumps larger than this many bytes.
pub const MAX_EXPORT_BYTES: u64 = 1 << 31;

fn hash_bytes(hex: &str) -> [u8; 32] {
    let mut out = [0u8; 32];
    for (i, slot) in out.iter_mut().enumerate() {
        *slot = hex
            .get(2 * i..2 * i + 2)
            .and_then(|h| u8::from_str_radix(h, 16).ok())
            .unwrap_or(0);
    }
    out
}

/// Number of bytes `write_operator` will produce.
pub fn export_size(op: &FourierOperator) -> u64 {
    let n = op.len() as u64;
    68 + 16 * n * n
}

pub fn write_operator<W: Write>(op: &FourierOperator, s: f64, mut w: W) -> Result<u64> {
    let size = export_size(op);
    if size > MAX_EXPORT_BYTES {
        return Err(Error::BudgetExceeded {
            what: "operator export bytes".into(),
            required: size as u128,
            limit: MAX_EXPORT_BYTES as u128,
        });
    }
    w.write_all(MAGIC)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    w.write_all(&(op.lattice.dim as u32).to_le_bytes())?;
    w.write_all(&(op.radius() as u32).to_le_bytes())?;
    w.write_all(&s.to_le_bytes())?;
    w.write_all(&hash_bytes(&op.model_hash))?;
    w.write_all(&(op.len() as u64).to_le_bytes())?;
    let mut buf = Vec::with_capacity(16 * op.len());
    for z in op.dense_weighted(s).chunks(op.len()) {
        buf.clear();
        for e in z {
            buf.extend_from_slice(&e.re.to_le_bytes());
            buf.extend_from_slice(&e.im.to_le_bytes());
        }
        w.write_all(&buf)?;
    }
    w.flush()?;
    Ok(size)
}

/// A dump read back into memory.
#[derive(Clone, Debug, PartialEq)]
pub struct ExportedOperator {
    pub dim: u32,
    pub radius: u32,
    pub s: f64,
    pub model_hash: [u8; 32],
    pub order: u64,
    /// Column-major.
    pub entries: Vec<Complex64>,
}

pub fn read_operator<R: Read>(mut r: R) -> Result<ExportedOperator> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Config("not an operator dump".into()));
    }
    let mut u4 = [0u8; 4];
    let mut u8b = [0u8; 8];
    r.read_exact(&mut u4)?;
    let version = u32::from_le_bytes(u4);
    if version != FORMAT_VERSION {
        return Err(Error::Config(format!("unsupported operator dump version {version}")));
    }
    r.read_exact(&mut u4)?;
    let dim = u32::from_le_bytes(u4);
    r.read_exact(&mut u4)?;
    let radius = u32::from_le_bytes(u4);
    r.read_exact(&mut u8b)?;
    let s = f64::from_le_bytes(u8b);
    let mut model_hash = [0u8; 32];
    r.read_exact(&mut model_hash)?;
    r.read_exact(&mut u8b)?;
    let order = u64::from_le_bytes(u8b);
    if 16u64.saturating_mul(order).saturating_mul(order) > MAX_EXPORT_BYTES {
        return Err(Error::Config("operator dump is too large".into()));
    }
    let mut raw = vec![0u8; (16 * order * order) as usize];
    r.read_exact(&mut raw)?;
    let entries = raw
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().expect("8 bytes"));
            let im = f64::from_le_bytes(c[8..].try_into().expect("8 bytes"));
            Complex64::new(re, im)
        })
        .collect();
    Ok(ExportedOperator {
        dim,
        radius,
        s,
        model_hash,
        order,
        entries,
    })
}
