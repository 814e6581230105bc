//! Binary parameter container.
//!
//! Layout: the 8-byte magic `SPIKERL1`, then one record per parameter until
//! end of file:
//!
//! ```text
//! u32 LE   name length in bytes
//! [u8]     UTF-8 name
//! u32 LE   rank
//! u64 LE   dimension, repeated `rank` times
//! f64 LE   values, row-major, product(dims) of them
//! ```

use std::io::{Read, Write};

use super::params::ParamSet;
use super::tensor::Tensor;
use crate::{Error, Result, Scalar};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"SPIKERL1";

pub fn write_checkpoint<S: Scalar, W: Write>(params: &ParamSet<S>, mut out: W) -> Result<()> {
    out.write_all(CHECKPOINT_MAGIC)?;
    for (name, p) in params.iter() {
        let name_len = u32::try_from(name.len()).map_err(|_| Error::Checkpoint(format!("name too long: {name}")))?;
        out.write_all(&name_len.to_le_bytes())?;
        out.write_all(name.as_bytes())?;
        out.write_all(&(p.value.rank() as u32).to_le_bytes())?;
        for &d in p.value.shape() {
            out.write_all(&(d as u64).to_le_bytes())?;
        }
        for &x in p.value.data() {
            out.write_all(&x.as_f64().to_le_bytes())?;
        }
    }
    out.flush()?;
    Ok(())
}

fn read_exact_or<R: Read>(input: &mut R, buf: &mut [u8], what: &str) -> Result<()> {
    input
        .read_exact(buf)
        .map_err(|e| Error::Checkpoint(format!("truncated while reading {what}: {e}")))
}

pub fn read_checkpoint<S: Scalar, R: Read>(mut input: R) -> Result<ParamSet<S>> {
    let mut magic = [0u8; 8];
    read_exact_or(&mut input, &mut magic, "magic")?;
    if &magic != CHECKPOINT_MAGIC {
        return Err(Error::Checkpoint("missing SPIKERL1 magic".into()));
    }
    let mut params = ParamSet::new();
    loop {
        let mut len = [0u8; 4];
        // clean end of file is only allowed between records
        match input.read(&mut len[..1])? {
            0 => break,
            _ => read_exact_or(&mut input, &mut len[1..], "name length")?,
        }
        let mut name = vec![0u8; u32::from_le_bytes(len) as usize];
        read_exact_or(&mut input, &mut name, "name")?;
        let name = String::from_utf8(name).map_err(|_| Error::Checkpoint("name is not UTF-8".into()))?;
        let mut word = [0u8; 4];
        read_exact_or(&mut input, &mut word, "rank")?;
        let rank = u32::from_le_bytes(word) as usize;
        let mut shape = Vec::with_capacity(rank);
        for _ in 0..rank {
            let mut d = [0u8; 8];
            read_exact_or(&mut input, &mut d, "dimension")?;
            shape.push(u64::from_le_bytes(d) as usize);
        }
        let numel: usize = shape.iter().product();
        let mut data = Vec::with_capacity(numel);
        let mut v = [0u8; 8];
        for _ in 0..numel {
            read_exact_or(&mut input, &mut v, "payload")?;
            data.push(S::of(f64::from_le_bytes(v)));
        }
        if params.contains(&name) {
            return Err(Error::Checkpoint(format!("duplicate parameter `{name}`")));
        }
        params.insert(name, Tensor::new(shape, data)?);
    }
    Ok(params)
}
