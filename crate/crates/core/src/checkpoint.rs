//! Binary parameter container.
//!
//! Layout (little endian): the 8-byte magic `WRSNCKPT`, a `u32` format
//! version, a `u32` block count, then per block a `u32` name length, the UTF-8
//! name, a `u32` rank, `rank` `u64` dimensions and the row-major `f32` values.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::nn::{ParamStore, Scalar};

pub const MAGIC: &[u8; 8] = b"WRSNCKPT";
pub const VERSION: u32 = 1;

/// One named tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorBlock {
    pub name: String,
    pub shape: Vec<usize>,
    pub values: Vec<f32>,
}

/// Flattens several parameter stores into named blocks `"{prefix}/{block}"`.
pub fn blocks_of<S: Scalar>(prefix: &str, p: &ParamStore<S>) -> Vec<TensorBlock> {
    p.blocks
        .iter()
        .map(|b| TensorBlock {
            name: format!("{prefix}/{}", b.name),
            shape: b.shape.clone(),
            values: p.values[b.range()].iter().map(|v| v.as_f64() as f32).collect(),
        })
        .collect()
}

/// Fills `p` from the blocks named `"{prefix}/..."`; every block of `p` must
/// be present with a matching shape.
pub fn load_into<S: Scalar>(prefix: &str, blocks: &[TensorBlock], p: &mut ParamStore<S>) -> Result<()> {
    for b in p.blocks.clone() {
        let name = format!("{prefix}/{}", b.name);
        let src = blocks
            .iter()
            .find(|t| t.name == name)
            .ok_or_else(|| Error::Checkpoint(format!("missing block `{name}`")))?;
        if src.shape != b.shape {
            return Err(Error::Checkpoint(format!(
                "block `{name}` has shape {:?}, expected {:?}",
                src.shape, b.shape
            )));
        }
        for (d, s) in p.values[b.range()].iter_mut().zip(&src.values) {
            *d = S::from_f64(*s as f64);
        }
    }
    Ok(())
}

pub fn encode(blocks: &[TensorBlock]) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(blocks.len() as u32).to_le_bytes());
    for b in blocks {
        out.extend_from_slice(&(b.name.len() as u32).to_le_bytes());
        out.extend_from_slice(b.name.as_bytes());
        out.extend_from_slice(&(b.shape.len() as u32).to_le_bytes());
        for &d in &b.shape {
            out.extend_from_slice(&(d as u64).to_le_bytes());
        }
        for v in &b.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| Error::Checkpoint(format!("truncated at byte {}", self.pos)))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

pub fn decode(buf: &[u8]) -> Result<Vec<TensorBlock>> {
    let mut c = Cursor { buf, pos: 0 };
    if c.take(8)? != MAGIC {
        return Err(Error::Checkpoint("bad magic".into()));
    }
    let version = c.u32()?;
    if version != VERSION {
        return Err(Error::Checkpoint(format!("unsupported version {version}")));
    }
    let n = c.u32()? as usize;
    let mut blocks = Vec::with_capacity(n.min(1024));
    for _ in 0..n {
        let len = c.u32()? as usize;
        let name = String::from_utf8(c.take(len)?.to_vec()).map_err(|e| Error::Checkpoint(e.to_string()))?;
        let rank = c.u32()? as usize;
        let shape = (0..rank).map(|_| c.u64().map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
        let count = shape
            .iter()
            .try_fold(1usize, |a, &d| a.checked_mul(d))
            .ok_or_else(|| Error::Checkpoint(format!("block `{name}` too large")))?;
        let bytes = c.take(count.checked_mul(4).ok_or_else(|| Error::Checkpoint("overflow".into()))?)?;
        let values = bytes
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().expect("4 bytes")))
            .collect();
        blocks.push(TensorBlock { name, shape, values });
    }
    if c.pos != buf.len() {
        return Err(Error::Checkpoint(format!("{} trailing bytes", buf.len() - c.pos)));
    }
    Ok(blocks)
}

pub fn write(path: &Path, blocks: &[TensorBlock]) -> Result<()> {
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&encode(blocks)).map_err(|e| Error::io(path, e))
}

pub fn read(path: &Path) -> Result<Vec<TensorBlock>> {
    let mut buf = Vec::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut buf))
        .map_err(|e| Error::io(path, e))?;
    decode(&buf)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Init;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut p = ParamStore::<f32>::default();
        p.add("a.weight", &[2, 3], Init::He { fan_in: 3 }, &mut rng);
        p.add("log_std", &[1], Init::Const(0.5), &mut rng);
        let bytes = encode(&blocks_of("actor0", &p));
        let back = decode(&bytes).unwrap();
        let mut q = p.clone();
        q.values.iter_mut().for_each(|v| *v = 0.0);
        load_into("actor0", &back, &mut q).unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn rejects_damage() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut p = ParamStore::<f32>::default();
        p.add("w", &[4], Init::Zeros, &mut rng);
        let bytes = encode(&blocks_of("c", &p));
        assert!(decode(&bytes[..bytes.len() - 1]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(decode(&bad).is_err());
        let mut q = ParamStore::<f32>::default();
        q.add("w", &[5], Init::Zeros, &mut rng);
        assert!(load_into("c", &decode(&bytes).unwrap(), &mut q).is_err());
    }
}
