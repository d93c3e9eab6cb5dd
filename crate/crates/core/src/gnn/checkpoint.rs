//! On-disk model format: a directory holding `weights.bin`, a flat container
//! of named little-endian f32 arrays, and `manifest.toml`.
//!
//! `weights.bin` layout: magic `EPGN`, u32 version, u32 array count, then per
//! array: u32 name length, UTF-8 name, u32 rank, rank × u32 dims, f32 data.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::params::{GnnParams, ModelConfig};

const MAGIC: &[u8; 4] = b"EPGN";
const VERSION: u32 = 1;
pub const WEIGHTS_FILE: &str = "weights.bin";
pub const MANIFEST_FILE: &str = "manifest.toml";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckpointMeta {
    pub model: ModelConfig,
    pub seed: u64,
    pub population: usize,
    pub n_areas: usize,
    pub scenario: String,
}

impl CheckpointMeta {
    /// Rejects use on a world of a different shape.
    pub fn check_compatible(&self, population: usize, n_areas: usize, layers: usize) -> Result<()> {
        if self.population != population {
            return Err(Error::config(
                "population",
                format!(
                    "checkpoint built for {} individuals, world has {population}",
                    self.population
                ),
            ));
        }
        if self.n_areas != n_areas {
            return Err(Error::config(
                "n_areas",
                format!(
                    "checkpoint built for {} areas, world has {n_areas}",
                    self.n_areas
                ),
            ));
        }
        if self.model.layers != layers {
            return Err(Error::config(
                "layers",
                format!(
                    "checkpoint has {} layers, config asks for {layers}",
                    self.model.layers
                ),
            ));
        }
        Ok(())
    }
}

fn format_err(path: &Path, reason: impl Into<String>) -> Error {
    Error::Format {
        path: path.display().to_string(),
        reason: reason.into(),
    }
}

pub fn save_checkpoint(dir: &Path, params: &GnnParams, meta: &CheckpointMeta) -> Result<()> {
    if meta.model != params.config {
        return Err(Error::contract(
            "checkpoint metadata disagrees with parameters",
        ));
    }
    fs::create_dir_all(dir)?;
    let tensors = params.tensors();
    let mut buf = Vec::new();
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&(tensors.len() as u32).to_le_bytes());
    for (name, shape, data) in &tensors {
        buf.extend_from_slice(&(name.len() as u32).to_le_bytes());
        buf.extend_from_slice(name.as_bytes());
        buf.extend_from_slice(&(shape.len() as u32).to_le_bytes());
        for d in shape {
            buf.extend_from_slice(&(*d as u32).to_le_bytes());
        }
        for x in *data {
            buf.extend_from_slice(&(*x as f32).to_le_bytes());
        }
    }
    fs::File::create(dir.join(WEIGHTS_FILE))?.write_all(&buf)?;
    let manifest = toml::to_string(meta).map_err(|e| Error::contract(e.to_string()))?;
    fs::write(dir.join(MANIFEST_FILE), manifest)?;
    Ok(())
}

struct Cursor<'a> {
    path: &'a Path,
    data: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|e| *e <= self.data.len());
        let end = end.ok_or_else(|| format_err(self.path, "truncated file"))?;
        let s = &self.data[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
}

pub fn load_checkpoint(dir: &Path) -> Result<(GnnParams, CheckpointMeta)> {
    let manifest_path = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&manifest_path)
        .map_err(|e| format_err(&manifest_path, format!("cannot read: {e}")))?;
    let meta: CheckpointMeta =
        toml::from_str(&text).map_err(|e| format_err(&manifest_path, e.to_string()))?;
    meta.model
        .validate()
        .map_err(|e| format_err(&manifest_path, e.to_string()))?;

    let path = dir.join(WEIGHTS_FILE);
    let mut bytes = Vec::new();
    fs::File::open(&path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| format_err(&path, format!("cannot read: {e}")))?;
    let mut cur = Cursor {
        path: &path,
        data: &bytes,
        pos: 0,
    };
    if cur.take(4)? != MAGIC {
        return Err(format_err(&path, "bad magic"));
    }
    let version = cur.u32()?;
    if version != VERSION {
        return Err(format_err(&path, format!("unsupported version {version}")));
    }
    let mut params = GnnParams::zeros(&meta.model);
    let expected: Vec<(String, Vec<usize>)> = params
        .tensors()
        .into_iter()
        .map(|(n, s, _)| (n, s))
        .collect();
    let count = cur.u32()? as usize;
    if count != expected.len() {
        return Err(format_err(
            &path,
            format!("{count} arrays, model expects {}", expected.len()),
        ));
    }
    for ((name, shape), dst) in expected.iter().zip(params.tensors_mut()) {
        let len = cur.u32()? as usize;
        let got = std::str::from_utf8(cur.take(len)?).map_err(|_| format_err(&path, "bad name"))?;
        if got != name {
            return Err(format_err(
                &path,
                format!("expected array {name}, found {got}"),
            ));
        }
        let rank = cur.u32()? as usize;
        let dims = (0..rank)
            .map(|_| cur.u32().map(|d| d as usize))
            .collect::<Result<Vec<_>>>()?;
        if &dims != shape {
            return Err(format_err(
                &path,
                format!("array {name} has shape {dims:?}, expected {shape:?}"),
            ));
        }
        for x in dst.iter_mut() {
            let v = f32::from_le_bytes(cur.take(4)?.try_into().unwrap());
            if !v.is_finite() {
                return Err(format_err(&path, format!("non-finite value in {name}")));
            }
            *x = v as f64;
        }
    }
    if cur.pos != bytes.len() {
        return Err(format_err(&path, "trailing bytes"));
    }
    Ok((params, meta))
}
