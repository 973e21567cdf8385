//! Binary checkpoint: magic, JSON header, little-endian `f64` parameters.
//!
//! Layout: `b"HVICKPT1"`, `u64` header length, header bytes, `u64`
//! parameter count, then the parameters. All integers are little-endian.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::network::{param_count, NetworkArch, NetworkError, ParamVector};

const MAGIC: &[u8; 8] = b"HVICKPT1";

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("header: {0}")]
    Header(#[from] serde_json::Error),
    #[error("not a checkpoint file")]
    BadMagic,
    #[error("parameter count {got} does not match architecture ({expected})")]
    CountMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Network(#[from] NetworkError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub arch: NetworkArch,
    pub problem: String,
    #[serde(default)]
    pub epoch: usize,
}

pub fn write_checkpoint(path: &Path, header: &CheckpointHeader, theta: &ParamVector) -> Result<(), CheckpointError> {
    let expected = param_count(&header.arch)?;
    if expected != theta.len() {
        return Err(CheckpointError::CountMismatch { expected, got: theta.len() });
    }
    let json = serde_json::to_vec(header)?;
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&(json.len() as u64).to_le_bytes())?;
    w.write_all(&json)?;
    w.write_all(&(theta.len() as u64).to_le_bytes())?;
    for v in theta.as_slice() {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

fn read_u64(r: &mut impl Read) -> Result<u64, CheckpointError> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

pub fn read_checkpoint(path: &Path) -> Result<(CheckpointHeader, ParamVector), CheckpointError> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(CheckpointError::BadMagic);
    }
    let len = read_u64(&mut r)? as usize;
    let mut json = vec![0u8; len];
    r.read_exact(&mut json)?;
    let header: CheckpointHeader = serde_json::from_slice(&json)?;
    let count = read_u64(&mut r)? as usize;
    let expected = param_count(&header.arch)?;
    if count != expected {
        return Err(CheckpointError::CountMismatch { expected, got: count });
    }
    let mut theta = Vec::with_capacity(count);
    for _ in 0..count {
        theta.push(f64::from_bits(read_u64(&mut r)?));
    }
    Ok((header, ParamVector(theta)))
}
