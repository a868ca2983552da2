//! Binary checkpoints: `b"CHMP"`, u32 version, u32 K, then K little-endian
//! f32 values. The model spec travels in a JSON side file.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

use super::{Model, ModelSpec, ParamVector};

pub const MAGIC: &[u8; 4] = b"CHMP";
pub const VERSION: u32 = 1;

pub fn write_checkpoint<W: Write>(mut w: W, params: &ParamVector) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    let k = u32::try_from(params.len()).map_err(|_| Error::input("too many parameters for checkpoint"))?;
    w.write_all(&k.to_le_bytes())?;
    for &v in params.as_slice() {
        w.write_all(&(v as f32).to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_checkpoint<R: Read>(mut r: R) -> Result<ParamVector> {
    let mut header = [0u8; 12];
    read_exact_at(&mut r, &mut header, 0)?;
    if &header[0..4] != MAGIC {
        return Err(Error::format(0, "bad checkpoint magic"));
    }
    let version = u32::from_le_bytes(header[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(Error::format(4, format!("unsupported checkpoint version {version}")));
    }
    let k = u32::from_le_bytes(header[8..12].try_into().unwrap()) as usize;
    let mut body = vec![0u8; k * 4];
    read_exact_at(&mut r, &mut body, 12)?;
    let values = body
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
        .collect();
    Ok(ParamVector::new(values))
}

fn read_exact_at<R: Read>(r: &mut R, buf: &mut [u8], offset: u64) -> Result<()> {
    r.read_exact(buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => Error::format(offset, "truncated checkpoint"),
        _ => Error::Io(e),
    })
}

fn spec_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

/// Writes `path` (binary parameters) and `path.json` (model spec).
pub fn save_checkpoint(model: &Model, path: &Path) -> Result<()> {
    write_checkpoint(BufWriter::new(File::create(path)?), &model.params)?;
    let spec = serde_json::to_vec_pretty(&model.spec)?;
    std::fs::write(spec_path(path), spec)?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<Model> {
    let params = read_checkpoint(BufReader::new(File::open(path)?))?;
    let spec: ModelSpec = serde_json::from_slice(&std::fs::read(spec_path(path))?)?;
    super::unflatten(&spec, params)
}
