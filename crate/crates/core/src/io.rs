//! Field serialization.
//!
//! Binary layout (little-endian): magic `b"FDKF"`, `u32` version (= 1), `u32` d,
//! `u32` n, `f64` L, `f64` t, then `n^d` `f64` values in row-major order
//! (first axis slowest). Node `j` on an axis sits at `x_j = -L + 2Lj/n`.

use crate::error::{Error, Result};
use crate::grid::{Field, Grid};
use std::io::{Read, Write};

pub const MAGIC: &[u8; 4] = b"FDKF";
pub const VERSION: u32 = 1;

pub fn write_field<W: Write>(field: &Field, mut w: W) -> Result<()> {
    let g = field.grid();
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(g.dim() as u32).to_le_bytes())?;
    w.write_all(&(g.n() as u32).to_le_bytes())?;
    w.write_all(&g.half_width().to_le_bytes())?;
    w.write_all(&field.time().to_le_bytes())?;
    let mut buf = Vec::with_capacity(8 * field.values().len());
    for v in field.values() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn field_to_bytes(field: &Field) -> Vec<u8> {
    let mut out = Vec::new();
    write_field(field, &mut out).expect("writing to memory");
    out
}

pub fn read_field<R: Read>(mut r: R) -> Result<Field> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format("bad magic, not a field file".into()));
    }
    let mut b4 = [0u8; 4];
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b4)?;
    let version = u32::from_le_bytes(b4);
    if version != VERSION {
        return Err(Error::Format(format!("unsupported field format version {version}")));
    }
    r.read_exact(&mut b4)?;
    let d = u32::from_le_bytes(b4) as usize;
    r.read_exact(&mut b4)?;
    let n = u32::from_le_bytes(b4) as usize;
    r.read_exact(&mut b8)?;
    let l = f64::from_le_bytes(b8);
    r.read_exact(&mut b8)?;
    let t = f64::from_le_bytes(b8);
    let grid = Grid::new(d, n, l)?;
    let mut raw = vec![0u8; 8 * grid.len()];
    r.read_exact(&mut raw)?;
    let values = raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    Field::new(grid, values, t)
}

/// CSV with a header: `x,value` for `d = 1`, `x,y,value` for `d = 2`.
pub fn field_to_csv(field: &Field) -> String {
    let g = field.grid();
    let mut s = String::new();
    s.push_str(if g.dim() == 1 { "x,value\n" } else { "x,y,value\n" });
    for (i, v) in field.values().iter().enumerate() {
        let c = g.coords(i);
        if g.dim() == 1 {
            s.push_str(&format!("{},{}\n", c[0], v));
        } else {
            s.push_str(&format!("{},{},{}\n", c[0], c[1], v));
        }
    }
    s
}
