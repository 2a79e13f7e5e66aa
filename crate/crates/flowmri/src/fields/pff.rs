//! Field file format used throughout the pipeline.
//!
//! One ASCII header line
//! `PFF1 <n1> <n2> <h1> <h2> <origin_x> <origin_y> <dtype>`
//! with dtype `f64` or `c128`, followed by the row-major little-endian
//! binary payload (16 bytes per value for c128: real then imaginary part).

use super::{ComplexImage, Grid, ScalarField};
use crate::error::{Error, Result};
use num_complex::Complex64;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

fn write_header(w: &mut impl Write, grid: &Grid, dtype: &str) -> Result<()> {
    writeln!(
        w,
        "PFF1 {} {} {} {} {} {} {}",
        grid.n1, grid.n2, grid.h1, grid.h2, grid.origin.0, grid.origin.1, dtype
    )?;
    Ok(())
}

fn read_header(r: &mut impl BufRead) -> Result<(Grid, String)> {
    let mut line = String::new();
    r.read_line(&mut line)?;
    let parts: Vec<&str> = line.split_whitespace().collect();
    if parts.len() != 8 || parts[0] != "PFF1" {
        return Err(Error::Format(format!("bad PFF header: {:?}", line.trim())));
    }
    let n1: usize = parts[1].parse().map_err(|_| Error::Format("bad n1".into()))?;
    let n2: usize = parts[2].parse().map_err(|_| Error::Format("bad n2".into()))?;
    let h1: f64 = parts[3].parse().map_err(|_| Error::Format("bad h1".into()))?;
    let h2: f64 = parts[4].parse().map_err(|_| Error::Format("bad h2".into()))?;
    let ox: f64 = parts[5].parse().map_err(|_| Error::Format("bad origin_x".into()))?;
    let oy: f64 = parts[6].parse().map_err(|_| Error::Format("bad origin_y".into()))?;
    let grid = Grid::new(n1, n2, h1, h2, (ox, oy))?;
    Ok((grid, parts[7].to_string()))
}

pub fn write_scalar_pff(path: impl AsRef<Path>, field: &ScalarField) -> Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    write_header(&mut w, &field.grid, "f64")?;
    for v in &field.values {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_scalar_pff(path: impl AsRef<Path>) -> Result<ScalarField> {
    let mut r = BufReader::new(std::fs::File::open(path)?);
    let (grid, dtype) = read_header(&mut r)?;
    if dtype != "f64" {
        return Err(Error::Format(format!("expected f64 payload, got {}", dtype)));
    }
    let mut buf = vec![0u8; grid.len() * 8];
    r.read_exact(&mut buf)?;
    let values = buf
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    ScalarField::new(grid, values)
}

pub fn write_complex_pff(path: impl AsRef<Path>, image: &ComplexImage) -> Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    write_header(&mut w, &image.grid, "c128")?;
    for v in &image.values {
        w.write_all(&v.re.to_le_bytes())?;
        w.write_all(&v.im.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_complex_pff(path: impl AsRef<Path>) -> Result<ComplexImage> {
    let mut r = BufReader::new(std::fs::File::open(path)?);
    let (grid, dtype) = read_header(&mut r)?;
    if dtype != "c128" {
        return Err(Error::Format(format!("expected c128 payload, got {}", dtype)));
    }
    let mut buf = vec![0u8; grid.len() * 16];
    r.read_exact(&mut buf)?;
    let values = buf
        .chunks_exact(16)
        .map(|c| {
            Complex64::new(
                f64::from_le_bytes(c[0..8].try_into().unwrap()),
                f64::from_le_bytes(c[8..16].try_into().unwrap()),
            )
        })
        .collect();
    ComplexImage::new(grid, values)
}
