//! NTF1 binary tensor format.
//!
//! Layout (all little-endian):
//!
//! ```text
//! b"NTF1" | m: u32 | d_1..d_m: u64 | d_1·…·d_m f64 values, row-major
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::tensor::DenseTensor;

pub const MAGIC: &[u8; 4] = b"NTF1";

pub fn write_ntf1<W: Write>(t: &DenseTensor, mut w: W) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&(t.ndim() as u32).to_le_bytes())?;
    for &d in t.shape() {
        w.write_all(&(d as u64).to_le_bytes())?;
    }
    for &v in t.data() {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_ntf1<R: Read>(mut r: R) -> Result<DenseTensor> {
    let mut magic = [0u8; 4];
    read_exact(&mut r, &mut magic, "magic")?;
    if &magic != MAGIC {
        return Err(Error::Format(format!("bad magic {magic:?}")));
    }
    let mut b4 = [0u8; 4];
    read_exact(&mut r, &mut b4, "mode count")?;
    let m = u32::from_le_bytes(b4) as usize;
    if m == 0 {
        return Err(Error::Format("mode count is zero".into()));
    }
    let mut shape = Vec::with_capacity(m);
    let mut b8 = [0u8; 8];
    for k in 0..m {
        read_exact(&mut r, &mut b8, "dimension")?;
        let d = u64::from_le_bytes(b8);
        if d == 0 {
            return Err(Error::Format(format!("dimension {k} is zero")));
        }
        shape.push(usize::try_from(d).map_err(|_| Error::Format(format!("dimension {d} too large")))?);
    }
    let len = shape
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| Error::Format("element count overflows".into()))?;
    let mut data = Vec::with_capacity(len);
    for _ in 0..len {
        read_exact(&mut r, &mut b8, "values")?;
        data.push(f64::from_le_bytes(b8));
    }
    let mut trailing = [0u8; 1];
    if r.read(&mut trailing)? != 0 {
        return Err(Error::Format("trailing bytes after values".into()));
    }
    DenseTensor::new(shape, data)
}

fn read_exact<R: Read>(r: &mut R, buf: &mut [u8], what: &str) -> Result<()> {
    r.read_exact(buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => Error::Format(format!("truncated while reading {what}")),
        _ => Error::from(e),
    })
}

pub fn save_ntf1(t: &DenseTensor, path: impl AsRef<Path>) -> Result<()> {
    write_ntf1(t, BufWriter::new(File::create(path)?))
}

pub fn load_ntf1(path: impl AsRef<Path>) -> Result<DenseTensor> {
    read_ntf1(BufReader::new(File::open(path)?))
}
