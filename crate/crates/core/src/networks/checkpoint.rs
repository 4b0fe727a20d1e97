//! Binary checkpoint container.
//!
//! Layout: the 8-byte magic `PHNCKPT\0`, a little-endian `u64` header length,
//! the UTF-8 JSON [`CheckpointHeader`], then `layout.len()` little-endian
//! `f64` values in layout order.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::params::{ParamLayout, ParamVector};
use crate::error::{Error, Result};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"PHNCKPT\0";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub format_version: u32,
    /// Echo of whatever spec/config produced the parameters.
    pub spec: serde_json::Value,
    pub seed: u64,
    pub steps: u64,
    pub layout: ParamLayout,
}

impl CheckpointHeader {
    pub fn new(spec: serde_json::Value, seed: u64, steps: u64, layout: ParamLayout) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            spec,
            seed,
            steps,
            layout,
        }
    }
}

pub fn write_checkpoint<W: Write>(mut w: W, header: &CheckpointHeader, params: &ParamVector) -> Result<()> {
    if &header.layout != params.layout() {
        return Err(Error::Checkpoint("header layout differs from parameter layout".into()));
    }
    let json = serde_json::to_vec(header)?;
    w.write_all(CHECKPOINT_MAGIC)?;
    w.write_all(&(json.len() as u64).to_le_bytes())?;
    w.write_all(&json)?;
    for v in params.data() {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_checkpoint<R: Read>(mut r: R) -> Result<(CheckpointHeader, ParamVector)> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)
        .map_err(|_| Error::Checkpoint("truncated file".into()))?;
    if &magic != CHECKPOINT_MAGIC {
        return Err(Error::Checkpoint("not a checkpoint file".into()));
    }
    let mut len = [0u8; 8];
    r.read_exact(&mut len)
        .map_err(|_| Error::Checkpoint("truncated header".into()))?;
    let len = u64::from_le_bytes(len);
    if len > 64 << 20 {
        return Err(Error::Checkpoint(format!("implausible header length {len}")));
    }
    let mut json = vec![0u8; len as usize];
    r.read_exact(&mut json)
        .map_err(|_| Error::Checkpoint("truncated header".into()))?;
    let header: CheckpointHeader = serde_json::from_slice(&json)?;
    if header.format_version != FORMAT_VERSION {
        return Err(Error::Checkpoint(format!(
            "unsupported format_version {} (expected {FORMAT_VERSION})",
            header.format_version
        )));
    }
    let n = header.layout.len();
    let mut data = Vec::with_capacity(n);
    let mut buf = [0u8; 8];
    for i in 0..n {
        r.read_exact(&mut buf)
            .map_err(|_| Error::Checkpoint(format!("expected {n} parameters, file ends after {i}")))?;
        data.push(f64::from_le_bytes(buf));
    }
    if r.read(&mut buf)? != 0 {
        return Err(Error::Checkpoint("trailing bytes after parameters".into()));
    }
    let params = ParamVector::new(header.layout.clone(), data)?;
    Ok((header, params))
}

pub fn save_checkpoint(path: &Path, header: &CheckpointHeader, params: &ParamVector) -> Result<()> {
    write_checkpoint(BufWriter::new(File::create(path)?), header, params)
}

pub fn load_checkpoint(path: &Path) -> Result<(CheckpointHeader, ParamVector)> {
    read_checkpoint(BufReader::new(File::open(path)?))
}
