//! Parameter checkpoint file: a named-tensor container.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic   b"CCKP"
//! version u32 = 1
//! dtype   u32      element byte width (4 = f32, 8 = f64)
//! seed    u64      ParamStore rng seed
//! count   u64      number of tensors
//! entry*  name_len u32, name utf-8, rank u32 = 2, dims u32 x 2,
//!         payload raw little-endian values (rows*cols elements)
//! ```
//!
//! Values are written bit-for-bit; save/load round-trips exactly.

use std::io::{Read, Write};
use std::path::Path;

use super::{ParamStore, Result, Scalar, Tensor, TensorError};

const MAGIC: &[u8; 4] = b"CCKP";
const VERSION: u32 = 1;

impl<F: Scalar> ParamStore<F> {
    pub fn save_checkpoint(&self, path: &Path) -> Result<()> {
        let mut buf: Vec<u8> = Vec::new();
        buf.extend_from_slice(MAGIC);
        buf.extend_from_slice(&VERSION.to_le_bytes());
        buf.extend_from_slice(&F::DTYPE_CODE.to_le_bytes());
        buf.extend_from_slice(&self.rng_seed.to_le_bytes());
        buf.extend_from_slice(&(self.len() as u64).to_le_bytes());
        for (name, tensor) in self.iter() {
            buf.extend_from_slice(&(name.len() as u32).to_le_bytes());
            buf.extend_from_slice(name.as_bytes());
            buf.extend_from_slice(&2u32.to_le_bytes());
            buf.extend_from_slice(&(tensor.rows() as u32).to_le_bytes());
            buf.extend_from_slice(&(tensor.cols() as u32).to_le_bytes());
            for v in tensor.values() {
                v.write_le(&mut buf);
            }
        }
        let mut file = std::fs::File::create(path)?;
        file.write_all(&buf)?;
        Ok(())
    }

    pub fn load_checkpoint(path: &Path) -> Result<Self> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut bytes)?;
        let mut cur = Cursor { bytes: &bytes, pos: 0 };

        if cur.take(4)? != MAGIC {
            return Err(TensorError::CheckpointFormat("bad magic".into()));
        }
        let version = cur.u32()?;
        if version != VERSION {
            return Err(TensorError::CheckpointFormat(format!(
                "unsupported version {version}"
            )));
        }
        let dtype = cur.u32()?;
        if dtype != F::DTYPE_CODE {
            return Err(TensorError::CheckpointFormat(format!(
                "dtype width {dtype} does not match expected {}",
                F::DTYPE_CODE
            )));
        }
        let seed = cur.u64()?;
        let count = cur.u64()?;
        let mut store = ParamStore::new(seed);
        for _ in 0..count {
            let name_len = cur.u32()? as usize;
            let name = String::from_utf8(cur.take(name_len)?.to_vec())
                .map_err(|e| TensorError::CheckpointFormat(e.to_string()))?;
            let rank = cur.u32()?;
            if rank != 2 {
                return Err(TensorError::CheckpointFormat(format!(
                    "tensor `{name}` has rank {rank}, expected 2"
                )));
            }
            let rows = cur.u32()? as usize;
            let cols = cur.u32()? as usize;
            let payload = cur.take(rows * cols * F::BYTE_WIDTH)?;
            let values: Vec<F> = payload
                .chunks_exact(F::BYTE_WIDTH)
                .map(F::read_le)
                .collect();
            store.insert(name, Tensor::from_values(rows, cols, values)?);
        }
        if cur.pos != bytes.len() {
            return Err(TensorError::CheckpointFormat(
                "trailing bytes after last tensor".into(),
            ));
        }
        Ok(store)
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(TensorError::CheckpointFormat("truncated file".into()));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn u64(&mut self) -> Result<u64> {
        let b = self.take(8)?;
        Ok(u64::from_le_bytes([
            b[0], b[1], b[2], b[3], b[4], b[5], b[6], b[7],
        ]))
    }
}
