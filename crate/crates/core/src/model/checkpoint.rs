//! Versioned binary checkpoints.
//!
//! Layout (all integers little-endian `u32`, floats little-endian):
//!
//! ```text
//! "CAMLP1" | version | precision bits (32|64)
//! channels samples kernel filters blocks channel_hidden time_hidden num_classes
//! slope:f64 norm_eps:f64 bn_momentum:f64
//! tensor count
//! per tensor: name length | name (utf-8) | rank | dims... | values in stored precision
//! ```
//!
//! Tensors are the trainable parameters followed by the batch-norm running
//! statistics, in model order.

use std::fs;
use std::path::Path;

use super::{CamlpNet, ModelConfig};
use crate::error::{Error, Result};
use crate::nn::Parameterized;
use crate::tensor::{Element, Precision};

pub const CHECKPOINT_MAGIC: &[u8; 6] = b"CAMLP1";
pub const CHECKPOINT_VERSION: u32 = 1;

pub fn write_checkpoint<T: Element>(net: &CamlpNet<T>) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(CHECKPOINT_MAGIC);
    put_u32(&mut out, CHECKPOINT_VERSION);
    put_u32(&mut out, T::PRECISION.bits());
    let c = net.config();
    for v in [c.channels, c.samples, c.kernel, c.filters, c.blocks, c.channel_hidden, c.time_hidden, c.num_classes] {
        put_u32(&mut out, v as u32);
    }
    for v in [c.slope, c.norm_eps, c.bn_momentum] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    let tensors: Vec<_> = net.parameters().into_iter().chain(net.buffers()).collect();
    put_u32(&mut out, tensors.len() as u32);
    for nt in tensors {
        put_u32(&mut out, nt.name.len() as u32);
        out.extend_from_slice(nt.name.as_bytes());
        put_u32(&mut out, nt.tensor.rank() as u32);
        for &d in nt.tensor.shape() {
            put_u32(&mut out, d as u32);
        }
        for &v in nt.tensor.data().iter() {
            v.write_le(&mut out);
        }
    }
    out
}

/// Decodes a checkpoint into a network of the stored precision `T`.
pub fn read_checkpoint<T: Element>(bytes: &[u8]) -> Result<CamlpNet<T>> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(6)? != CHECKPOINT_MAGIC {
        return Err(bad("missing CAMLP1 magic"));
    }
    let version = r.u32()?;
    if version != CHECKPOINT_VERSION {
        return Err(bad(format!("unsupported format version {version}")));
    }
    let bits = r.u32()?;
    match Precision::from_bits(bits) {
        Some(p) if p == T::PRECISION => {}
        Some(p) => {
            return Err(bad(format!(
                "checkpoint stores {}-bit values, requested {}-bit",
                p.bits(),
                T::PRECISION.bits()
            )))
        }
        None => return Err(bad(format!("unknown precision {bits}"))),
    }
    let mut dims = [0usize; 8];
    for d in &mut dims {
        *d = r.u32()? as usize;
    }
    let config = ModelConfig {
        channels: dims[0],
        samples: dims[1],
        kernel: dims[2],
        filters: dims[3],
        blocks: dims[4],
        channel_hidden: dims[5],
        time_hidden: dims[6],
        num_classes: dims[7],
        slope: r.f64()?,
        norm_eps: r.f64()?,
        bn_momentum: r.f64()?,
    };
    let net = CamlpNet::<T>::new(config, 0)?;
    let slots: Vec<_> = net.parameters().into_iter().chain(net.buffers()).collect();
    let count = r.u32()? as usize;
    if count != slots.len() {
        return Err(bad(format!("expected {} tensors, found {count}", slots.len())));
    }
    let width = (T::PRECISION.bits() / 8) as usize;
    for slot in slots {
        let len = r.u32()? as usize;
        let name = std::str::from_utf8(r.take(len)?).map_err(|_| bad("tensor name is not utf-8"))?;
        if name != slot.name {
            return Err(bad(format!("expected tensor `{}`, found `{name}`", slot.name)));
        }
        let rank = r.u32()? as usize;
        let shape = (0..rank).map(|_| r.u32().map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
        if shape != slot.tensor.shape() {
            return Err(bad(format!("tensor `{name}` has shape {shape:?}, expected {:?}", slot.tensor.shape())));
        }
        let raw = r.take(slot.tensor.numel() * width)?;
        let mut data = slot.tensor.data_mut();
        for (dst, chunk) in data.iter_mut().zip(raw.chunks_exact(width)) {
            *dst = T::read_le(chunk);
        }
    }
    if r.pos != bytes.len() {
        return Err(bad("trailing bytes after last tensor"));
    }
    Ok(net)
}

pub fn save_checkpoint<T: Element>(net: &CamlpNet<T>, path: &Path) -> Result<()> {
    fs::write(path, write_checkpoint(net))?;
    Ok(())
}

pub fn load_checkpoint<T: Element>(path: &Path) -> Result<CamlpNet<T>> {
    read_checkpoint(&fs::read(path)?)
}

fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Checkpoint(msg.into())
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or_else(|| bad("truncated checkpoint"))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}
