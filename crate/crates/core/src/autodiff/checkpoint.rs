//! Binary parameter checkpoints.
//!
//! Layout, all integers little-endian:
//!
//! | field          | encoding                                   |
//! |----------------|--------------------------------------------|
//! | magic          | 8 bytes, `ESNLICKP`                        |
//! | version        | `u32`, currently 1                         |
//! | config hash    | `u32` byte length, then UTF-8 bytes        |
//! | seed           | `u64`                                      |
//! | entry count    | `u32`                                      |
//! | per entry      | name (`u32` length + UTF-8), `u32` rank, `u64` per dimension, then `f64` data in row-major order |
//!
//! Entries appear in parameter insertion order, so a model rebuilt from the
//! same configuration writes byte-identical files.

use std::io::{Read, Write};

use super::{AutodiffError, ParameterStore, Tensor};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"ESNLICKP";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub config_hash: String,
    pub store: ParameterStore,
}

pub fn write_checkpoint(
    mut w: impl Write,
    config_hash: &str,
    store: &ParameterStore,
) -> Result<(), AutodiffError> {
    w.write_all(CHECKPOINT_MAGIC)?;
    w.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
    write_str(&mut w, config_hash)?;
    w.write_all(&store.seed().to_le_bytes())?;
    w.write_all(&(store.len() as u32).to_le_bytes())?;
    for (name, t) in store.iter() {
        write_str(&mut w, name)?;
        w.write_all(&(t.shape().len() as u32).to_le_bytes())?;
        for &d in t.shape() {
            w.write_all(&(d as u64).to_le_bytes())?;
        }
        for v in t.data() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_checkpoint(mut r: impl Read) -> Result<Checkpoint, AutodiffError> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != CHECKPOINT_MAGIC {
        return Err(AutodiffError::Checkpoint("bad magic".into()));
    }
    let version = read_u32(&mut r)?;
    if version != CHECKPOINT_VERSION {
        return Err(AutodiffError::Checkpoint(format!("unsupported version {version}")));
    }
    let config_hash = read_str(&mut r)?;
    let seed = read_u64(&mut r)?;
    let count = read_u32(&mut r)?;
    let mut store = ParameterStore::new(seed);
    for _ in 0..count {
        let name = read_str(&mut r)?;
        let rank = read_u32(&mut r)? as usize;
        let mut shape = Vec::with_capacity(rank);
        for _ in 0..rank {
            shape.push(read_u64(&mut r)? as usize);
        }
        let n: usize = shape.iter().product();
        let mut data = Vec::with_capacity(n);
        let mut buf = [0u8; 8];
        for _ in 0..n {
            r.read_exact(&mut buf)?;
            data.push(f64::from_le_bytes(buf));
        }
        store.insert(&name, Tensor::new(shape, data)?)?;
    }
    Ok(Checkpoint { config_hash, store })
}

fn write_str(w: &mut impl Write, s: &str) -> Result<(), AutodiffError> {
    w.write_all(&(s.len() as u32).to_le_bytes())?;
    w.write_all(s.as_bytes())?;
    Ok(())
}

fn read_u32(r: &mut impl Read) -> Result<u32, AutodiffError> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64(r: &mut impl Read) -> Result<u64, AutodiffError> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_str(r: &mut impl Read) -> Result<String, AutodiffError> {
    let len = read_u32(r)? as usize;
    let mut buf = vec![0u8; len];
    r.read_exact(&mut buf)?;
    String::from_utf8(buf).map_err(|e| AutodiffError::Checkpoint(e.to_string()))
}
