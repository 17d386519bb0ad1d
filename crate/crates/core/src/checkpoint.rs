//! Versioned binary model container.
//!
//! Layout (little-endian): magic `GLACECKP`, `u32` version, `u64` D, m, L,
//! `u8` mode, kind, symmetric, activation, `u64` seed, `u8` context flag,
//! then for each encoder (main, then context) its six tensors as a `u64`
//! length followed by row-major `f64` values. Round trips are bit-exact.

use std::fs;
use std::path::Path;

use crate::encoder::{EncoderParams, HiddenActivation, Kind, Mode, ModelParams};
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"GLACECKP";
pub const FORMAT_VERSION: u32 = 1;

pub fn to_bytes(model: &ModelParams) -> Vec<u8> {
    let main = &model.main;
    let mut out = Vec::with_capacity(64 + 8 * main.num_params() * 2);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    for d in [main.attr_dim, main.hidden_dim, main.embed_dim] {
        out.extend_from_slice(&(d as u64).to_le_bytes());
    }
    out.push(match model.mode {
        Mode::First => 1,
        Mode::Second => 2,
    });
    out.push(match model.kind {
        Kind::Glace => 1,
        Kind::Lace => 2,
    });
    out.push(model.symmetric as u8);
    out.push(match main.activation {
        HiddenActivation::Identity => 0,
        HiddenActivation::Relu => 1,
    });
    out.extend_from_slice(&model.seed.to_le_bytes());
    out.push(model.context.is_some() as u8);
    for enc in std::iter::once(main).chain(model.context.as_ref()) {
        for t in enc.tensors() {
            out.extend_from_slice(&(t.len() as u64).to_le_bytes());
            for v in t {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| Error::Checkpoint("truncated file".into()))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn tensor(&mut self, expected: usize) -> Result<Vec<f64>> {
        let len = self.u64()? as usize;
        if len != expected {
            return Err(Error::Checkpoint(format!("tensor has {len} entries, expected {expected}")));
        }
        let raw = self.take(len.checked_mul(8).ok_or_else(|| Error::Checkpoint("tensor too large".into()))?)?;
        Ok(raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
    }
}

pub fn from_bytes(buf: &[u8]) -> Result<ModelParams> {
    let mut r = Reader { buf, pos: 0 };
    if r.take(8)? != MAGIC {
        return Err(Error::Checkpoint("not a glace checkpoint".into()));
    }
    let version = r.u32()?;
    if version != FORMAT_VERSION {
        return Err(Error::Checkpoint(format!("unsupported format version {version}")));
    }
    let (d, m, l) = (r.u64()? as usize, r.u64()? as usize, r.u64()? as usize);
    let mode = match r.u8()? {
        1 => Mode::First,
        2 => Mode::Second,
        v => return Err(Error::Checkpoint(format!("bad mode tag {v}"))),
    };
    let kind = match r.u8()? {
        1 => Kind::Glace,
        2 => Kind::Lace,
        v => return Err(Error::Checkpoint(format!("bad kind tag {v}"))),
    };
    let symmetric = r.u8()? != 0;
    let activation = match r.u8()? {
        0 => HiddenActivation::Identity,
        1 => HiddenActivation::Relu,
        v => return Err(Error::Checkpoint(format!("bad activation tag {v}"))),
    };
    let seed = r.u64()?;
    let has_context = r.u8()? != 0;

    let read_encoder = |r: &mut Reader<'_>| -> Result<EncoderParams> {
        Ok(EncoderParams {
            attr_dim: d,
            hidden_dim: m,
            embed_dim: l,
            activation,
            w: r.tensor(d * m)?,
            b: r.tensor(m)?,
            w_mu: r.tensor(m * l)?,
            b_mu: r.tensor(l)?,
            w_sigma: r.tensor(m * l)?,
            b_sigma: r.tensor(l)?,
        })
    };
    let main = read_encoder(&mut r)?;
    let context = if has_context { Some(read_encoder(&mut r)?) } else { None };
    if r.pos != buf.len() {
        return Err(Error::Checkpoint(format!("{} trailing bytes", buf.len() - r.pos)));
    }
    let model = ModelParams { main, context, mode, kind, seed, symmetric };
    model.validate().map_err(|e| Error::Checkpoint(e.to_string()))?;
    Ok(model)
}

pub fn write_checkpoint(path: &Path, model: &ModelParams) -> Result<()> {
    fs::write(path, to_bytes(model)).map_err(|e| Error::io(path, e))
}

pub fn read_checkpoint(path: &Path) -> Result<ModelParams> {
    let buf = fs::read(path).map_err(|e| Error::io(path, e))?;
    from_bytes(&buf)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bit_exact_round_trip() {
        for (mode, kind) in [(Mode::First, Kind::Glace), (Mode::Second, Kind::Lace)] {
            let mut m = ModelParams::init(7, 4, 3, mode, kind, false, HiddenActivation::Relu, 99).unwrap();
            m.main.b[1] = -0.0;
            m.main.b_mu[0] = 1e-310;
            let bytes = to_bytes(&m);
            let back = from_bytes(&bytes).unwrap();
            assert_eq!(to_bytes(&back), bytes);
            assert_eq!(back, m);
        }
    }

    #[test]
    fn corrupt_input_rejected() {
        let m = ModelParams::init(3, 2, 2, Mode::First, Kind::Glace, true, HiddenActivation::Identity, 1).unwrap();
        let bytes = to_bytes(&m);
        assert!(from_bytes(&bytes[..bytes.len() - 1]).is_err());
        assert!(from_bytes(b"NOTACKPT").is_err());
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(from_bytes(&extra).is_err());
        let mut bad_version = bytes;
        bad_version[8] = 9;
        assert!(from_bytes(&bad_version).is_err());
    }
}
