//! On-disk formats for [`PathBundle`].
//!
//! Binary container:
//!
//! ```text
//! b"SPOUPTH1"                 8-byte magic
//! u64 LE                      header length H
//! H bytes                     UTF-8 JSON header
//! n_paths*grid_len*dim f64 LE payload, path-major then time then coordinate
//! ```

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::PathBundle;
use crate::error::{OuError, Result};

pub const MAGIC: &[u8; 8] = b"SPOUPTH1";
const FORMAT: &str = "sparse-ou-paths";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundleHeader {
    pub format: String,
    pub version: u32,
    pub n_paths: usize,
    pub dim: usize,
    pub grid_len: usize,
    pub terminal: f64,
    pub step: f64,
    pub seed: u64,
}

impl BundleHeader {
    pub fn of(bundle: &PathBundle) -> Self {
        Self {
            format: FORMAT.into(),
            version: VERSION,
            n_paths: bundle.n_paths(),
            dim: bundle.dim(),
            grid_len: bundle.grid_len(),
            terminal: bundle.terminal(),
            step: bundle.step(),
            seed: bundle.seed(),
        }
    }
}

pub fn write_bundle<W: Write>(bundle: &PathBundle, mut w: W) -> Result<()> {
    let header = serde_json::to_vec(&BundleHeader::of(bundle))?;
    w.write_all(MAGIC)?;
    w.write_all(&(header.len() as u64).to_le_bytes())?;
    w.write_all(&header)?;
    let mut buf = Vec::with_capacity(bundle.values().len() * 8);
    for v in bundle.values() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)?;
    w.flush()?;
    Ok(())
}

pub fn read_bundle<R: Read>(mut r: R) -> Result<PathBundle> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(OuError::invalid("not a path bundle (bad magic)"));
    }
    let mut len = [0u8; 8];
    r.read_exact(&mut len)?;
    let len = u64::from_le_bytes(len) as usize;
    if len > 1 << 20 {
        return Err(OuError::invalid("path bundle header too large"));
    }
    let mut header = vec![0u8; len];
    r.read_exact(&mut header)?;
    let header: BundleHeader = serde_json::from_slice(&header)?;
    if header.format != FORMAT || header.version != VERSION {
        return Err(OuError::invalid(format!(
            "unsupported bundle format {} v{}",
            header.format, header.version
        )));
    }
    let count = header
        .n_paths
        .checked_mul(header.grid_len)
        .and_then(|x| x.checked_mul(header.dim))
        .ok_or_else(|| OuError::invalid("bundle dimensions overflow"))?;
    let mut payload = Vec::new();
    r.read_to_end(&mut payload)?;
    if payload.len() != count * 8 {
        return Err(OuError::invalid(format!(
            "payload has {} bytes, header implies {}",
            payload.len(),
            count * 8
        )));
    }
    let values = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let bundle = PathBundle::from_parts(
        header.n_paths,
        header.dim,
        header.terminal,
        header.step,
        values,
        header.seed,
    )?;
    if bundle.grid_len() != header.grid_len {
        return Err(OuError::invalid("header grid_len disagrees with terminal/step"));
    }
    Ok(bundle)
}

pub fn save_bundle(bundle: &PathBundle, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_bundle(bundle, std::io::BufWriter::new(file))
}

pub fn load_bundle(path: &Path) -> Result<PathBundle> {
    let file = std::fs::File::open(path)?;
    read_bundle(std::io::BufReader::new(file))
}

/// Debug export: one row per (path, time) with columns
/// `path,time,x0,...,x{d-1}`.
pub fn write_csv<W: Write>(bundle: &PathBundle, mut w: W) -> Result<()> {
    let d = bundle.dim();
    let mut header = String::from("path,time");
    for j in 0..d {
        header.push_str(&format!(",x{j}"));
    }
    writeln!(w, "{header}")?;
    for i in 0..bundle.n_paths() {
        for k in 0..bundle.grid_len() {
            let t = k as f64 * bundle.step();
            write!(w, "{i},{t}")?;
            for x in bundle.state(i, k) {
                write!(w, ",{x}")?;
            }
            writeln!(w)?;
        }
    }
    w.flush()?;
    Ok(())
}
