//! Binary network checkpoints.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! "FCNN"  magic, 4 bytes
//! u16     format version, currently 1
//! u16     layer count
//! per layer:
//!   u32   in_dim
//!   u32   out_dim
//!   u8    activation (0 identity, 1 relu, 2 sigmoid)
//!   f64   weights, out_dim * in_dim values, row-major
//!   f64   bias, out_dim values
//! ```
//!
//! Weights are stored as raw f64 bits, so write -> read is bit-exact.
//! The reader treats input as untrusted: dimensions are validated against
//! the remaining buffer length before any allocation.

use super::{Activation, DenseLayer, Mlp, NnError};
use std::fs;
use std::path::Path;

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"FCNN";
const VERSION: u16 = 1;

/// Upper bound on a single dimension; rejects absurd headers early.
const MAX_DIM: u32 = 1 << 20;

pub fn write_mlp(net: &Mlp) -> Result<Vec<u8>, NnError> {
    if net.layers.len() > u16::MAX as usize {
        return Err(NnError::Checkpoint("too many layers".into()));
    }
    let mut out = Vec::new();
    out.extend_from_slice(CHECKPOINT_MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(net.layers.len() as u16).to_le_bytes());
    for layer in &net.layers {
        out.extend_from_slice(&(layer.in_dim as u32).to_le_bytes());
        out.extend_from_slice(&(layer.out_dim as u32).to_le_bytes());
        out.push(layer.activation.id());
        for w in &layer.weights {
            out.extend_from_slice(&w.to_le_bytes());
        }
        for b in &layer.bias {
            out.extend_from_slice(&b.to_le_bytes());
        }
    }
    Ok(out)
}

pub fn read_mlp_from_slice(bytes: &[u8]) -> Result<Mlp, NnError> {
    let mut cur = Cursor { bytes, pos: 0 };
    let net = read_mlp_inner(&mut cur)?;
    if cur.pos != bytes.len() {
        return Err(NnError::Checkpoint(format!(
            "{} trailing bytes after last layer",
            bytes.len() - cur.pos
        )));
    }
    Ok(net)
}

/// Read one network from the cursor position, leaving the cursor just past
/// it. Container formats embed several checkpoints back to back.
pub(crate) fn read_mlp_inner(cur: &mut Cursor<'_>) -> Result<Mlp, NnError> {
    let magic = cur.take(4)?;
    if magic != CHECKPOINT_MAGIC {
        return Err(NnError::Checkpoint("bad magic, expected FCNN".into()));
    }
    let version = cur.u16()?;
    if version != VERSION {
        return Err(NnError::Checkpoint(format!(
            "unsupported version {version}, expected {VERSION}"
        )));
    }
    let layer_count = cur.u16()? as usize;
    let mut layers = Vec::with_capacity(layer_count.min(64));
    for i in 0..layer_count {
        let in_dim = cur.u32()?;
        let out_dim = cur.u32()?;
        if in_dim == 0 || out_dim == 0 || in_dim > MAX_DIM || out_dim > MAX_DIM {
            return Err(NnError::Checkpoint(format!(
                "layer {i}: dims {in_dim}x{out_dim} out of range"
            )));
        }
        let act_id = cur.u8()?;
        let activation = Activation::from_id(act_id)
            .ok_or_else(|| NnError::Checkpoint(format!("layer {i}: unknown activation {act_id}")))?;
        let n_weights = in_dim as u64 * out_dim as u64;
        // Length check before allocation: a forged header must not OOM us.
        let needed = (n_weights + out_dim as u64) * 8;
        if cur.remaining() < needed as usize {
            return Err(NnError::Checkpoint(format!(
                "layer {i}: truncated, need {needed} payload bytes, have {}",
                cur.remaining()
            )));
        }
        let weights = cur.f64s(n_weights as usize)?;
        let bias = cur.f64s(out_dim as usize)?;
        layers.push(DenseLayer {
            in_dim: in_dim as usize,
            out_dim: out_dim as usize,
            weights,
            bias,
            activation,
        });
    }
    Mlp::new(layers)
}

pub fn read_mlp(path: &Path) -> Result<Mlp, NnError> {
    read_mlp_from_slice(&fs::read(path)?)
}

pub(crate) struct Cursor<'a> {
    pub bytes: &'a [u8],
    pub pos: usize,
}

impl<'a> Cursor<'a> {
    pub fn new(bytes: &'a [u8]) -> Self {
        Cursor { bytes, pos: 0 }
    }

    pub fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }

    pub fn take(&mut self, n: usize) -> Result<&'a [u8], NnError> {
        if self.remaining() < n {
            return Err(NnError::Checkpoint(format!(
                "unexpected end of data at offset {}",
                self.pos
            )));
        }
        let slice = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(slice)
    }

    pub fn u8(&mut self) -> Result<u8, NnError> {
        Ok(self.take(1)?[0])
    }

    pub fn u16(&mut self) -> Result<u16, NnError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    pub fn u32(&mut self) -> Result<u32, NnError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub fn f64s(&mut self, n: usize) -> Result<Vec<f64>, NnError> {
        let raw = self.take(n * 8)?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_net() -> Mlp {
        Mlp::seeded(&[5, 7, 3], &[Activation::Relu, Activation::Sigmoid], 31)
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let net = sample_net();
        let bytes = write_mlp(&net).unwrap();
        let back = read_mlp_from_slice(&bytes).unwrap();
        assert_eq!(net, back);
        for (a, b) in net.layers.iter().zip(&back.layers) {
            for (x, y) in a.weights.iter().zip(&b.weights) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
    }

    #[test]
    fn rejects_bad_magic() {
        let mut bytes = write_mlp(&sample_net()).unwrap();
        bytes[0] = b'X';
        assert!(read_mlp_from_slice(&bytes).is_err());
    }

    #[test]
    fn rejects_unknown_version() {
        let mut bytes = write_mlp(&sample_net()).unwrap();
        bytes[4] = 9;
        assert!(read_mlp_from_slice(&bytes).is_err());
    }

    #[test]
    fn rejects_truncation_at_every_length() {
        let bytes = write_mlp(&sample_net()).unwrap();
        for cut in 0..bytes.len() {
            assert!(
                read_mlp_from_slice(&bytes[..cut]).is_err(),
                "prefix of {cut} bytes should not parse"
            );
        }
    }

    #[test]
    fn rejects_trailing_garbage() {
        let mut bytes = write_mlp(&sample_net()).unwrap();
        bytes.push(0);
        assert!(read_mlp_from_slice(&bytes).is_err());
    }

    #[test]
    fn rejects_unknown_activation() {
        let mut bytes = write_mlp(&sample_net()).unwrap();
        // First layer's activation byte sits after magic(4) version(2)
        // count(2) in(4) out(4).
        bytes[16] = 7;
        assert!(read_mlp_from_slice(&bytes).is_err());
    }

    #[test]
    fn forged_huge_dims_do_not_allocate() {
        let mut bytes = Vec::new();
        bytes.extend_from_slice(CHECKPOINT_MAGIC);
        bytes.extend_from_slice(&1u16.to_le_bytes());
        bytes.extend_from_slice(&1u16.to_le_bytes());
        bytes.extend_from_slice(&u32::MAX.to_le_bytes());
        bytes.extend_from_slice(&u32::MAX.to_le_bytes());
        bytes.push(0);
        assert!(read_mlp_from_slice(&bytes).is_err());
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("net.fcnn");
        let net = sample_net();
        fs::write(&path, write_mlp(&net).unwrap()).unwrap();
        assert_eq!(read_mlp(&path).unwrap(), net);
    }
}
