//! Versioned binary checkpoints for trained parameters.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic   4 bytes  b"SFCW"
//! version u32      currently 1
//! kind    u8       0 = generator, 1 = evaluator
//! d       u32      feature width
//! m1      u32      residual block count
//! m2      u32      message-passing block count
//! count   u32      tensor count
//! per tensor:
//!   name_len u32, name bytes (utf-8)
//!   ndim     u32, dims u32 * ndim
//!   data     f64 little-endian, prod(dims) values
//! ```

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::learner::nets::{EvaluatorParams, GeneratorParams, NetConfig};

pub const CHECKPOINT_VERSION: u32 = 1;
const MAGIC: &[u8; 4] = b"SFCW";

/// A parameter bundle ready for serialization.
#[derive(Clone, Debug)]
pub enum CheckpointPayload {
    Generator(GeneratorParams),
    Evaluator(EvaluatorParams),
}

#[derive(Clone, Debug)]
pub struct Checkpoint {
    pub payload: CheckpointPayload,
}

impl Checkpoint {
    pub fn config(&self) -> NetConfig {
        match &self.payload {
            CheckpointPayload::Generator(g) => g.config,
            CheckpointPayload::Evaluator(e) => e.config,
        }
    }
}

fn write_u32(out: &mut impl Write, v: u32) -> std::io::Result<()> {
    out.write_all(&v.to_le_bytes())
}

fn write_tensors(
    out: &mut impl Write,
    tensors: &[(String, Vec<usize>, &[f64])],
) -> std::io::Result<()> {
    write_u32(out, tensors.len() as u32)?;
    for (name, dims, data) in tensors {
        write_u32(out, name.len() as u32)?;
        out.write_all(name.as_bytes())?;
        write_u32(out, dims.len() as u32)?;
        for &d in dims {
            write_u32(out, d as u32)?;
        }
        debug_assert_eq!(dims.iter().product::<usize>(), data.len());
        for v in *data {
            out.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn save_checkpoint(out: &mut impl Write, payload: &CheckpointPayload) -> Result<()> {
    let io_err = |e: std::io::Error| Error::InvalidInput(format!("checkpoint write: {e}"));
    out.write_all(MAGIC).map_err(io_err)?;
    write_u32(out, CHECKPOINT_VERSION).map_err(io_err)?;
    let (kind, cfg, tensors) = match payload {
        CheckpointPayload::Generator(g) => (0u8, g.config, g.named_tensors()),
        CheckpointPayload::Evaluator(e) => (1u8, e.config, e.named_tensors()),
    };
    out.write_all(&[kind]).map_err(io_err)?;
    write_u32(out, cfg.feature_width as u32).map_err(io_err)?;
    write_u32(out, cfg.residual_blocks as u32).map_err(io_err)?;
    write_u32(out, cfg.message_blocks as u32).map_err(io_err)?;
    write_tensors(out, &tensors).map_err(io_err)?;
    Ok(())
}

struct Reader<R: Read> {
    inner: R,
    offset: usize,
}

impl<R: Read> Reader<R> {
    fn bytes(&mut self, n: usize) -> Result<Vec<u8>> {
        let mut buf = vec![0u8; n];
        self.inner.read_exact(&mut buf).map_err(|_| {
            Error::InvalidInput(format!(
                "checkpoint truncated at byte offset {}",
                self.offset
            ))
        })?;
        self.offset += n;
        Ok(buf)
    }

    fn u32(&mut self) -> Result<u32> {
        let b = self.bytes(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let b = self.bytes(n * 8)?;
        Ok(b.chunks_exact(8)
            .map(|c| f64::from_le_bytes([c[0], c[1], c[2], c[3], c[4], c[5], c[6], c[7]]))
            .collect())
    }
}

pub fn load_checkpoint(input: &mut impl Read) -> Result<Checkpoint> {
    let mut r = Reader {
        inner: input,
        offset: 0,
    };
    let magic = r.bytes(4)?;
    if magic != MAGIC {
        return Err(Error::InvalidInput(format!(
            "bad checkpoint magic {magic:02x?}"
        )));
    }
    let version = r.u32()?;
    if version != CHECKPOINT_VERSION {
        return Err(Error::InvalidInput(format!(
            "unsupported checkpoint version {version}"
        )));
    }
    let kind = r.bytes(1)?[0];
    let cfg = NetConfig {
        feature_width: r.u32()? as usize,
        residual_blocks: r.u32()? as usize,
        message_blocks: r.u32()? as usize,
    };
    let count = r.u32()? as usize;
    let mut tensors = Vec::with_capacity(count);
    for _ in 0..count {
        let name_len = r.u32()? as usize;
        let name = String::from_utf8(r.bytes(name_len)?)
            .map_err(|_| Error::InvalidInput("checkpoint tensor name is not utf-8".into()))?;
        let ndim = r.u32()? as usize;
        let mut dims = Vec::with_capacity(ndim);
        for _ in 0..ndim {
            dims.push(r.u32()? as usize);
        }
        let len = dims.iter().product::<usize>();
        let data = r.f64s(len)?;
        tensors.push((name, dims, data));
    }

    let payload = match kind {
        0 => {
            let mut params = GeneratorParams::init(0, cfg);
            let expected = params_expected_names(&params);
            fill_params(&mut params.tensors_mut(), &expected, &tensors)?;
            CheckpointPayload::Generator(params)
        }
        1 => {
            let mut params = EvaluatorParams::init(0, cfg);
            let expected = eval_expected_names(&params);
            fill_params(&mut params.tensors_mut(), &expected, &tensors)?;
            CheckpointPayload::Evaluator(params)
        }
        other => {
            return Err(Error::InvalidInput(format!(
                "unknown checkpoint kind {other}"
            )))
        }
    };
    Ok(Checkpoint { payload })
}

fn params_expected_names(params: &GeneratorParams) -> Vec<(String, usize)> {
    params
        .named_tensors()
        .into_iter()
        .map(|(n, _, t)| (n, t.len()))
        .collect()
}

fn eval_expected_names(params: &EvaluatorParams) -> Vec<(String, usize)> {
    params
        .named_tensors()
        .into_iter()
        .map(|(n, _, t)| (n, t.len()))
        .collect()
}

fn fill_params(
    slots: &mut Vec<&mut Vec<f64>>,
    expected: &[(String, usize)],
    tensors: &[(String, Vec<usize>, Vec<f64>)],
) -> Result<()> {
    if tensors.len() != expected.len() {
        return Err(Error::InvalidInput(format!(
            "checkpoint has {} tensors, architecture needs {}",
            tensors.len(),
            expected.len()
        )));
    }
    for ((slot, (name, len)), (got_name, _, data)) in
        slots.iter_mut().zip(expected).zip(tensors)
    {
        if got_name != name || data.len() != *len {
            return Err(Error::InvalidInput(format!(
                "checkpoint tensor mismatch: expected {name} ({len} values), got {got_name} ({} values)",
                data.len()
            )));
        }
        slot.copy_from_slice(data);
    }
    Ok(())
}
