//! Binary field files.
//!
//! Layout, all little-endian: an 8-byte magic, `n` as `u64`, then `f64`
//! header values, then the samples in row-major order. Ground states store
//! `L, R, m, multiplier, residual` and `n³` real samples; checkpoints store
//! `L, R, time, ε, center[3]` and `n³` interleaved complex samples.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::Field3;
use crate::ground_state::GroundState;
use crate::grid::Grid3;

const GROUND_MAGIC: &[u8; 8] = b"NSGS\0\0\0\x01";
const CHECKPOINT_MAGIC: &[u8; 8] = b"NSCK\0\0\0\x01";

/// Header of a ground-state file.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundHeader {
    pub n: usize,
    pub box_length: f64,
    pub truncation_radius: f64,
    pub mass: f64,
    pub multiplier: f64,
    pub residual: f64,
}

/// A saved evolution state.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub field: Field3,
    pub time: f64,
    pub eps: f64,
}

fn put(w: &mut impl Write, v: f64) -> Result<()> {
    Ok(w.write_all(&v.to_le_bytes())?)
}

fn get(r: &mut impl Read) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

fn read_n(r: &mut impl Read) -> Result<usize> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    let n = u64::from_le_bytes(b);
    if n > 4096 {
        return Err(Error::Format(format!("implausible grid size {n}")));
    }
    Ok(n as usize)
}

fn expect_magic(r: &mut impl Read, magic: &[u8; 8]) -> Result<()> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    if &b != magic {
        return Err(Error::Format("bad magic".into()));
    }
    Ok(())
}

fn expect_eof(r: &mut impl Read) -> Result<()> {
    let mut extra = [0u8; 1];
    match r.read(&mut extra)? {
        0 => Ok(()),
        _ => Err(Error::Format("trailing bytes".into())),
    }
}

pub fn write_ground_state(path: impl AsRef<Path>, state: &GroundState) -> Result<()> {
    let grid = state.grid();
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(GROUND_MAGIC)?;
    w.write_all(&(grid.n() as u64).to_le_bytes())?;
    for v in [grid.box_length(), grid.truncation_radius(), state.mass, state.multiplier, state.residual_l2] {
        put(&mut w, v)?;
    }
    for z in state.field.values() {
        put(&mut w, z.re)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads only the header of a ground-state file.
pub fn read_ground_header(path: impl AsRef<Path>) -> Result<GroundHeader> {
    let mut r = BufReader::new(File::open(path)?);
    ground_header(&mut r)
}

fn ground_header(r: &mut impl Read) -> Result<GroundHeader> {
    expect_magic(r, GROUND_MAGIC)?;
    let n = read_n(r)?;
    Ok(GroundHeader {
        n,
        box_length: get(r)?,
        truncation_radius: get(r)?,
        mass: get(r)?,
        multiplier: get(r)?,
        residual: get(r)?,
    })
}

/// Reads a ground state; the field is restored bit for bit and the
/// diagnostics are recomputed from it.
pub fn read_ground_state(path: impl AsRef<Path>) -> Result<GroundState> {
    let mut r = BufReader::new(File::open(path)?);
    let h = ground_header(&mut r)?;
    let grid = Grid3::with_truncation(h.n, h.box_length, h.truncation_radius)?;
    let mut values = Vec::with_capacity(grid.len());
    for _ in 0..grid.len() {
        values.push(Complex64::new(get(&mut r)?, 0.0));
    }
    expect_eof(&mut r)?;
    let state = GroundState::from_field(Field3::from_values(grid, values)?)?;
    if (state.mass - h.mass).abs() > 1e-12 * h.mass {
        return Err(Error::Format(format!("stored mass {} but samples give {}", h.mass, state.mass)));
    }
    Ok(state)
}

/// Loads a cached ground state computed on `grid`. `Ok(None)` when there
/// is no file; [`Error::CacheMismatch`] when the file is for another grid.
pub fn load_cached_ground_state(path: impl AsRef<Path>, grid: &Grid3) -> Result<Option<GroundState>> {
    let path = path.as_ref();
    if !path.exists() {
        return Ok(None);
    }
    let h = read_ground_header(path)?;
    if h.n != grid.n() || h.box_length != grid.box_length() || h.truncation_radius != grid.truncation_radius() {
        return Err(Error::CacheMismatch(format!(
            "file has n={}, L={}, R={}; requested n={}, L={}, R={}",
            h.n,
            h.box_length,
            h.truncation_radius,
            grid.n(),
            grid.box_length(),
            grid.truncation_radius()
        )));
    }
    read_ground_state(path).map(Some)
}

pub fn write_checkpoint(path: impl AsRef<Path>, ck: &Checkpoint) -> Result<()> {
    let grid = ck.field.grid();
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(CHECKPOINT_MAGIC)?;
    w.write_all(&(grid.n() as u64).to_le_bytes())?;
    let c = grid.center();
    for v in [grid.box_length(), grid.truncation_radius(), ck.time, ck.eps, c[0], c[1], c[2]] {
        put(&mut w, v)?;
    }
    for z in ck.field.values() {
        put(&mut w, z.re)?;
        put(&mut w, z.im)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_checkpoint(path: impl AsRef<Path>) -> Result<Checkpoint> {
    let mut r = BufReader::new(File::open(path)?);
    expect_magic(&mut r, CHECKPOINT_MAGIC)?;
    let n = read_n(&mut r)?;
    let (l, radius, time, eps) = (get(&mut r)?, get(&mut r)?, get(&mut r)?, get(&mut r)?);
    let center = [get(&mut r)?, get(&mut r)?, get(&mut r)?];
    let grid = Grid3::with_truncation(n, l, radius)?.recentered(center);
    let mut values = Vec::with_capacity(grid.len());
    for _ in 0..grid.len() {
        let re = get(&mut r)?;
        values.push(Complex64::new(re, get(&mut r)?));
    }
    expect_eof(&mut r)?;
    Ok(Checkpoint { field: Field3::from_values(grid, values)?, time, eps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ground_state::{compute_ground_state, GroundStateOptions};

    fn tmp(name: &str) -> std::path::PathBuf {
        let dir = std::env::temp_dir().join(format!("newton-soliton-io-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        dir.join(name)
    }

    #[test]
    fn ground_state_round_trip_is_bit_exact() {
        let grid = Grid3::new(16, 16.0).unwrap();
        let gs = compute_ground_state(grid, &GroundStateOptions::default()).unwrap().state;
        let path = tmp("gs.bin");
        write_ground_state(&path, &gs).unwrap();
        let back = read_ground_state(&path).unwrap();
        assert_eq!(back.field, gs.field);
        assert_eq!(back.mass, gs.mass);
        let bytes = std::fs::metadata(&path).unwrap().len();
        assert_eq!(bytes, 8 + 8 + 5 * 8 + 8 * 16u64.pow(3));
        let h = read_ground_header(&path).unwrap();
        assert_eq!((h.n, h.box_length, h.truncation_radius), (16, 16.0, 8.0));
        assert!(load_cached_ground_state(&path, &grid).unwrap().is_some());
        let other = Grid3::new(16, 18.0).unwrap();
        assert!(matches!(load_cached_ground_state(&path, &other), Err(Error::CacheMismatch(_))));
        assert!(load_cached_ground_state(tmp("missing.bin"), &grid).unwrap().is_none());
    }

    #[test]
    fn checkpoint_round_trip() {
        let grid = Grid3::new(8, 4.0).unwrap().recentered([1.0, -2.0, 0.5]);
        let field = Field3::from_fn(grid, |x| Complex64::new(x[0].sin(), x[1] * x[2]));
        let ck = Checkpoint { field, time: 3.25, eps: 0.2 };
        let path = tmp("ck.bin");
        write_checkpoint(&path, &ck).unwrap();
        assert_eq!(read_checkpoint(&path).unwrap(), ck);
        assert!(matches!(read_ground_state(&path), Err(Error::Format(_))));
    }

    #[test]
    fn truncated_files_are_rejected() {
        let path = tmp("short.bin");
        std::fs::write(&path, b"NSGS\0\0\0\x01\x02").unwrap();
        assert!(read_ground_state(&path).is_err());
    }
}
