//! Binary checkpoint container: a JSON metadata block followed by named
//! little-endian `f32` tensors. The byte layout is described in
//! `docs/checkpoint-format.md`.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::AgentError;

pub const MAGIC: &[u8; 8] = b"UEDCKPT1";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct NamedTensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f32>,
}

impl NamedTensor {
    pub fn new(name: impl Into<String>, shape: Vec<usize>, data: Vec<f32>) -> Self {
        NamedTensor { name: name.into(), shape, data }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub metadata: serde_json::Value,
    pub tensors: Vec<NamedTensor>,
}

fn corrupt(msg: impl Into<String>) -> AgentError {
    AgentError::Checkpoint(msg.into())
}

fn read_exact<const N: usize>(r: &mut impl Read) -> Result<[u8; N], AgentError> {
    let mut b = [0u8; N];
    r.read_exact(&mut b).map_err(|e| corrupt(format!("truncated: {e}")))?;
    Ok(b)
}

impl Checkpoint {
    pub fn get(&self, name: &str) -> Option<&NamedTensor> {
        self.tensors.iter().find(|t| t.name == name)
    }

    pub fn write_to(&self, w: &mut impl Write) -> Result<(), AgentError> {
        w.write_all(MAGIC)?;
        w.write_all(&FORMAT_VERSION.to_le_bytes())?;
        let meta = serde_json::to_vec(&self.metadata).map_err(|e| corrupt(e.to_string()))?;
        w.write_all(&(meta.len() as u64).to_le_bytes())?;
        w.write_all(&meta)?;
        w.write_all(&(self.tensors.len() as u32).to_le_bytes())?;
        for t in &self.tensors {
            let expected: usize = t.shape.iter().product();
            if expected != t.data.len() {
                return Err(corrupt(format!("tensor {} has shape {:?} but {} values", t.name, t.shape, t.data.len())));
            }
            w.write_all(&(t.name.len() as u32).to_le_bytes())?;
            w.write_all(t.name.as_bytes())?;
            w.write_all(&(t.shape.len() as u32).to_le_bytes())?;
            for &d in &t.shape {
                w.write_all(&(d as u64).to_le_bytes())?;
            }
            let mut buf = Vec::with_capacity(4 * t.data.len());
            for &x in &t.data {
                buf.extend_from_slice(&x.to_le_bytes());
            }
            w.write_all(&buf)?;
        }
        Ok(())
    }

    pub fn read_from(r: &mut impl Read) -> Result<Checkpoint, AgentError> {
        if &read_exact::<8>(r)? != MAGIC {
            return Err(corrupt("bad magic"));
        }
        let version = u32::from_le_bytes(read_exact(r)?);
        if version != FORMAT_VERSION {
            return Err(corrupt(format!("unsupported format version {version}")));
        }
        let meta_len = u64::from_le_bytes(read_exact(r)?) as usize;
        let mut meta = Vec::new();
        r.take(meta_len as u64).read_to_end(&mut meta)?;
        if meta.len() != meta_len {
            return Err(corrupt("truncated metadata"));
        }
        let metadata = serde_json::from_slice(&meta).map_err(|e| corrupt(format!("metadata: {e}")))?;
        let count = u32::from_le_bytes(read_exact(r)?) as usize;
        let mut tensors = Vec::with_capacity(count.min(4096));
        for _ in 0..count {
            let name_len = u32::from_le_bytes(read_exact(r)?) as usize;
            let mut name = Vec::new();
            r.take(name_len as u64).read_to_end(&mut name)?;
            if name.len() != name_len {
                return Err(corrupt("truncated tensor name"));
            }
            let name = String::from_utf8(name).map_err(|_| corrupt("tensor name is not UTF-8"))?;
            let ndim = u32::from_le_bytes(read_exact(r)?) as usize;
            let mut shape = Vec::with_capacity(ndim.min(8));
            for _ in 0..ndim {
                shape.push(u64::from_le_bytes(read_exact(r)?) as usize);
            }
            let n: usize = shape.iter().product();
            let mut bytes = Vec::new();
            r.take(4 * n as u64).read_to_end(&mut bytes)?;
            if bytes.len() != 4 * n {
                return Err(corrupt(format!("truncated payload of {name}")));
            }
            let data = bytes.chunks_exact(4).map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]])).collect();
            tensors.push(NamedTensor { name, shape, data });
        }
        Ok(Checkpoint { metadata, tensors })
    }

    /// Writes to a temporary sibling and renames it into place.
    pub fn save(&self, path: &Path) -> Result<(), AgentError> {
        let tmp = path.with_extension("tmp");
        {
            let mut f = std::io::BufWriter::new(fs::File::create(&tmp)?);
            self.write_to(&mut f)?;
            f.flush()?;
        }
        fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Checkpoint, AgentError> {
        let mut f = std::io::BufReader::new(fs::File::open(path)?);
        Self::read_from(&mut f)
    }
}
