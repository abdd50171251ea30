//! Dataset persistence: a little-endian binary container and a CSV export
//! for vector datasets.
//!
//! Container layout, all integers little-endian:
//!
//! ```text
//! magic "PRGD" | version u32 | k u32 | ndims u32 | dims u32 × ndims |
//! count u64 | split u8 | seed u64 | samples f32 × (count·len) | labels u16 × count
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::data::{Dataset, Split};
use crate::error::{Error, Result};
use crate::shape::Shape;

const MAGIC: &[u8; 4] = b"PRGD";
const VERSION: u32 = 1;

pub fn save_dataset(ds: &Dataset, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(ds.num_classes as u32).to_le_bytes())?;
    let dims = ds.shape.dims();
    w.write_all(&(dims.len() as u32).to_le_bytes())?;
    for d in &dims {
        w.write_all(&(*d as u32).to_le_bytes())?;
    }
    w.write_all(&(ds.len() as u64).to_le_bytes())?;
    let split: u8 = match ds.split {
        Split::Train => 0,
        Split::Test => 1,
    };
    w.write_all(&[split])?;
    w.write_all(&ds.seed.to_le_bytes())?;
    for x in &ds.inputs {
        for &v in x {
            w.write_all(&(v as f32).to_le_bytes())?;
        }
    }
    for &y in &ds.labels {
        w.write_all(&y.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Malformed { format: "PRGD", line: 0, msg: msg.into() }
}

pub fn load_dataset(path: &Path) -> Result<Dataset> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(bad("bad magic"));
    }
    let version = read_u32(&mut r)?;
    if version != VERSION {
        return Err(bad(format!("unsupported version {version}")));
    }
    let k = read_u32(&mut r)? as usize;
    let ndims = read_u32(&mut r)? as usize;
    let mut dims = Vec::with_capacity(ndims);
    for _ in 0..ndims {
        dims.push(read_u32(&mut r)? as usize);
    }
    let shape = Shape::from_dims(&dims)?;
    let count = read_u64(&mut r)? as usize;
    let mut split_byte = [0u8; 1];
    r.read_exact(&mut split_byte)?;
    let split = match split_byte[0] {
        0 => Split::Train,
        1 => Split::Test,
        other => return Err(bad(format!("unknown split tag {other}"))),
    };
    let seed = read_u64(&mut r)?;
    let len = shape.len();
    let mut inputs = Vec::with_capacity(count);
    let mut buf = vec![0u8; len * 4];
    for _ in 0..count {
        r.read_exact(&mut buf)?;
        inputs.push(
            buf.chunks_exact(4)
                .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64)
                .collect(),
        );
    }
    let mut labels = Vec::with_capacity(count);
    let mut lb = [0u8; 2];
    for _ in 0..count {
        r.read_exact(&mut lb)?;
        labels.push(u16::from_le_bytes(lb));
    }
    Dataset::new(shape, k, inputs, labels, split, seed)
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

/// CSV export with columns `x0..x{d−1},label`; vector datasets only.
pub fn export_csv(ds: &Dataset) -> Result<String> {
    let Shape::Flat(d) = ds.shape else {
        return Err(Error::invalid("CSV export supports vector datasets only"));
    };
    let mut out = String::new();
    for i in 0..d {
        out.push_str(&format!("x{i},"));
    }
    out.push_str("label\n");
    for (x, y) in ds.inputs.iter().zip(&ds.labels) {
        for v in x {
            out.push_str(&format!("{v},"));
        }
        out.push_str(&format!("{y}\n"));
    }
    Ok(out)
}
