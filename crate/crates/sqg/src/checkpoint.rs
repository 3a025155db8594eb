//! Binary checkpoint format, little-endian:
//! header {magic "SQGF", version u32, n u32, gamma f64, time f64} followed by
//! n·(n/2+1) complex f64 coefficients in row-major half-spectrum order
//! (full first axis, second axis truncated to k₂ ∈ [0, n/2]). The dropped
//! half is recovered from conjugate symmetry.

use crate::field::SpectralField;
use crate::grid::TorusGrid;
use crate::{Result, SqgError};
use rustfft::num_complex::Complex64;
use std::io::{Read, Write};
use std::path::Path;

const MAGIC: &[u8; 4] = b"SQGF";
const VERSION: u32 = 1;

pub struct Checkpoint {
    pub field: SpectralField,
    pub gamma: f64,
    pub time: f64,
}

pub fn write(path: &Path, field: &SpectralField, gamma: f64, time: f64) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    let n = field.grid().n();
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(n as u32).to_le_bytes())?;
    w.write_all(&gamma.to_le_bytes())?;
    w.write_all(&time.to_le_bytes())?;
    for i in 0..n {
        for j in 0..=n / 2 {
            let c = field.coeffs()[(i, j)];
            w.write_all(&c.re.to_le_bytes())?;
            w.write_all(&c.im.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read(path: &Path) -> Result<Checkpoint> {
    let mut r = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(SqgError::Checkpoint(format!(
            "bad magic {:?}, expected \"SQGF\"",
            magic
        )));
    }
    let version = read_u32(&mut r)?;
    if version != VERSION {
        return Err(SqgError::Checkpoint(format!(
            "unsupported version {version}"
        )));
    }
    let n = read_u32(&mut r)? as usize;
    let gamma = read_f64(&mut r)?;
    let time = read_f64(&mut r)?;
    let grid = TorusGrid::new(n)
        .map_err(|e| SqgError::Checkpoint(format!("invalid grid in header: {e}")))?;
    let mut field = SpectralField::zeros(grid);
    for i in 0..n {
        for j in 0..=n / 2 {
            let re = read_f64(&mut r)?;
            let im = read_f64(&mut r)?;
            let c = Complex64::new(re, im);
            field.coeffs_mut()[(i, j)] = c;
            // mirror into the dropped half
            let (im_i, im_j) = ((n - i) % n, (n - j) % n);
            if im_j > n / 2 {
                field.coeffs_mut()[(im_i, im_j)] = c.conj();
            }
        }
    }
    field.coeffs_mut()[(0, 0)] = Complex64::default();
    Ok(Checkpoint { field, gamma, time })
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64(r: &mut impl Read) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}
