//! Mask files: a binary CSR container and a dense CSV grid for tiny masks.
//!
//! Binary layout, all integers little-endian u64: magic bytes `CSRM`,
//! version (1), length `L`, `nnz`, then `L + 1` offsets and `nnz` column
//! indices.

use crate::error::{Error, Result};
use crate::mask::CsrMask;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

const MAGIC: &[u8; 4] = b"CSRM";
const VERSION: u64 = 1;

/// Write a mask in the binary CSR container format.
pub fn write_csr_file(mask: &CsrMask, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(mask.len() as u64).to_le_bytes())?;
    w.write_all(&(mask.nnz() as u64).to_le_bytes())?;
    for &o in mask.offsets() {
        w.write_all(&(o as u64).to_le_bytes())?;
    }
    for &c in mask.cols() {
        w.write_all(&(c as u64).to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

/// Read a mask from the binary CSR container format, re-validating all
/// invariants.
pub fn read_csr_file(path: &Path) -> Result<CsrMask> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::MaskFile(format!(
            "{}: bad magic bytes, not a CSR mask file",
            path.display()
        )));
    }
    let version = read_u64(&mut r)?;
    if version != VERSION {
        return Err(Error::MaskFile(format!(
            "{}: unsupported version {version}",
            path.display()
        )));
    }
    let len = read_u64(&mut r)? as usize;
    let nnz = read_u64(&mut r)? as usize;
    let mut offsets = Vec::with_capacity(len + 1);
    for _ in 0..len + 1 {
        offsets.push(read_u64(&mut r)? as usize);
    }
    let mut cols = Vec::with_capacity(nnz);
    for _ in 0..nnz {
        cols.push(read_u64(&mut r)? as usize);
    }
    CsrMask::new(len, offsets, cols)
}

/// Read a square 0-1 grid from CSV: one row per line, comma-separated 0/1
/// entries.
pub fn read_dense_csv(path: &Path) -> Result<CsrMask> {
    let r = BufReader::new(File::open(path)?);
    let mut grid: Vec<Vec<u8>> = Vec::new();
    for (lineno, line) in r.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let row: Vec<u8> = trimmed
            .split(',')
            .map(|cell| match cell.trim() {
                "0" => Ok(0u8),
                "1" => Ok(1u8),
                other => Err(Error::MaskFile(format!(
                    "{}:{}: entry `{other}` is not 0 or 1",
                    path.display(),
                    lineno + 1
                ))),
            })
            .collect::<Result<_>>()?;
        grid.push(row);
    }
    crate::mask::dense_to_csr(&grid)
}

/// Load a mask file, sniffing the binary magic and falling back to the CSV
/// grid format.
pub fn load_mask_file(path: &Path) -> Result<CsrMask> {
    let mut head = [0u8; 4];
    let n = File::open(path)?.read(&mut head)?;
    if n == 4 && &head == MAGIC {
        read_csr_file(path)
    } else {
        read_dense_csv(path)
    }
}

fn read_u64(r: &mut impl Read) -> Result<u64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(u64::from_le_bytes(buf))
}
