use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{GnnModel, ModelConfig, Parameterized};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

const MAGIC: &[u8; 4] = b"LPGM";
const VERSION: u32 = 1;

fn write_bytes<W: Write>(w: &mut W, bytes: &[u8]) -> Result<()> {
    w.write_all(&(bytes.len() as u64).to_le_bytes())?;
    w.write_all(bytes)?;
    Ok(())
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(u64::from_le_bytes(buf))
}

fn read_bytes<R: Read>(r: &mut R) -> Result<Vec<u8>> {
    let len = read_u64(r)? as usize;
    let mut buf = vec![0u8; len];
    r.read_exact(&mut buf)?;
    Ok(buf)
}

/// Layout: magic, version u32, config JSON, schema digest, then
/// `(name, values as f64)` per parameter. Strings and blobs are
/// u64-length-prefixed; all integers little-endian.
pub fn write_checkpoint<T: Scalar, W: Write>(model: &GnnModel<T>, schema_digest: &str, mut w: W) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    write_bytes(&mut w, serde_json::to_string(&model.config)?.as_bytes())?;
    write_bytes(&mut w, schema_digest.as_bytes())?;
    let names = model.param_names();
    let params = model.params();
    w.write_all(&(params.len() as u64).to_le_bytes())?;
    for (name, values) in names.iter().zip(params) {
        write_bytes(&mut w, name.as_bytes())?;
        w.write_all(&(values.len() as u64).to_le_bytes())?;
        for v in values {
            w.write_all(&v.to_f64_lossy().to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads a checkpoint; with `expected_digest`, a schema mismatch is an error.
pub fn read_checkpoint<T: Scalar, R: Read>(mut r: R, expected_digest: Option<&str>) -> Result<(GnnModel<T>, String)> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format("not an LPGM checkpoint".into()));
    }
    let mut v = [0u8; 4];
    r.read_exact(&mut v)?;
    if u32::from_le_bytes(v) != VERSION {
        return Err(Error::Format(format!("unsupported checkpoint version {}", u32::from_le_bytes(v))));
    }
    let config: ModelConfig = serde_json::from_slice(&read_bytes(&mut r)?)?;
    let digest = String::from_utf8(read_bytes(&mut r)?).map_err(|e| Error::Format(e.to_string()))?;
    if let Some(expected) = expected_digest {
        if expected != digest {
            return Err(Error::DigestMismatch { expected: digest, found: expected.to_owned() });
        }
    }
    let mut model = GnnModel::new(config)?;
    let names = model.param_names();
    let count = read_u64(&mut r)? as usize;
    if count != names.len() {
        return Err(Error::Format(format!("checkpoint holds {count} tensors, model has {}", names.len())));
    }
    let mut values = Vec::with_capacity(count);
    for name in &names {
        let stored = String::from_utf8(read_bytes(&mut r)?).map_err(|e| Error::Format(e.to_string()))?;
        if &stored != name {
            return Err(Error::Format(format!("expected tensor {name:?}, found {stored:?}")));
        }
        let len = read_u64(&mut r)? as usize;
        let mut tensor = Vec::with_capacity(len);
        for _ in 0..len {
            let mut b = [0u8; 8];
            r.read_exact(&mut b)?;
            tensor.push(T::from_f64_lossy(f64::from_le_bytes(b)));
        }
        values.push(tensor);
    }
    model.restore(&values)?;
    Ok((model, digest))
}

pub fn save_checkpoint<T: Scalar>(model: &GnnModel<T>, schema_digest: &str, path: impl AsRef<Path>) -> Result<()> {
    write_checkpoint(model, schema_digest, BufWriter::new(File::create(path)?))
}

pub fn load_checkpoint<T: Scalar>(path: impl AsRef<Path>, expected_digest: Option<&str>) -> Result<(GnnModel<T>, String)> {
    read_checkpoint(BufReader::new(File::open(path)?), expected_digest)
}
