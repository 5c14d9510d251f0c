//! Model checkpoints.
//!
//! Two encodings of the same content (dims, variant, vocab, every tensor):
//!
//! * JSON: `{"version": "rulefuse-v1", "params": {...}}`.
//! * Binary: the magic `rulefuse-v1\0`, then little-endian fields: variant
//!   code (u8), the five dims (u64 each), vocab size (u64) followed by each
//!   word as u32 byte length plus UTF-8 bytes, then each tensor in
//!   [`Weights::for_each`] order as u64 element count plus raw f64 bits.
//!   Floats round-trip bit for bit.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::params::{Dims, ModelParams, Variant, Vocab, Weights};
use crate::error::{Error, Result};

pub const VERSION: &str = "rulefuse-v1";
const MAGIC: &[u8; 12] = b"rulefuse-v1\0";

#[derive(Serialize, Deserialize)]
struct JsonCheckpoint {
    version: String,
    params: ModelParams,
}

pub fn to_json(params: &ModelParams) -> String {
    serde_json::to_string(&JsonCheckpoint {
        version: VERSION.to_string(),
        params: params.clone(),
    })
    .expect("model params serialize")
}

pub fn from_json(text: &str) -> Result<ModelParams> {
    let ck: JsonCheckpoint =
        serde_json::from_str(text).map_err(|e| Error::Checkpoint(e.to_string()))?;
    if ck.version != VERSION {
        return Err(Error::Checkpoint(format!("unsupported version {:?}", ck.version)));
    }
    let mut params = ck.params;
    params.vocab.rebuild_index();
    let expect = Weights::zeros(params.variant, &params.dims, params.vocab.len());
    let mut shapes = Vec::new();
    expect.for_each(|n, t| shapes.push((n.to_string(), t.len())));
    let mut i = 0;
    let mut bad = None;
    params.weights.for_each(|n, t| {
        if shapes.get(i).map(|(sn, l)| (sn.as_str(), *l)) != Some((n, t.len())) && bad.is_none() {
            bad = Some(n.to_string());
        }
        i += 1;
    });
    if let Some(name) = bad.or((i != shapes.len()).then(|| "layers".to_string())) {
        return Err(Error::Checkpoint(format!("tensor {name} has the wrong shape")));
    }
    Ok(params)
}

pub fn to_bytes(params: &ModelParams) -> Vec<u8> {
    let mut out = MAGIC.to_vec();
    out.push(params.variant.code());
    let d = &params.dims;
    for v in [d.embed, d.hidden, d.classes, d.rules, d.instance_width] {
        out.extend_from_slice(&(v as u64).to_le_bytes());
    }
    out.extend_from_slice(&(params.vocab.len() as u64).to_le_bytes());
    for w in params.vocab.words() {
        out.extend_from_slice(&(w.len() as u32).to_le_bytes());
        out.extend_from_slice(w.as_bytes());
    }
    params.weights.for_each(|_, t| {
        out.extend_from_slice(&(t.len() as u64).to_le_bytes());
        for x in t {
            out.extend_from_slice(&x.to_bits().to_le_bytes());
        }
    });
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    at: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .at
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| Error::Checkpoint(format!("truncated at byte {}", self.at)))?;
        let s = &self.buf[self.at..end];
        self.at = end;
        Ok(s)
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn usize(&mut self) -> Result<usize> {
        usize::try_from(self.u64()?).map_err(|_| Error::Checkpoint("size overflow".into()))
    }
}

pub fn from_bytes(buf: &[u8]) -> Result<ModelParams> {
    let mut r = Reader { buf, at: 0 };
    if r.take(MAGIC.len())? != MAGIC {
        return Err(Error::Checkpoint("bad magic".into()));
    }
    let code = r.take(1)?[0];
    let variant = Variant::from_code(code)
        .ok_or_else(|| Error::Checkpoint(format!("unknown variant code {code}")))?;
    let dims = Dims {
        embed: r.usize()?,
        hidden: r.usize()?,
        classes: r.usize()?,
        rules: r.usize()?,
        instance_width: r.usize()?,
    };
    let vocab_len = r.usize()?;
    let mut words = Vec::with_capacity(vocab_len.min(1 << 20));
    for _ in 0..vocab_len {
        let len = u32::from_le_bytes(r.take(4)?.try_into().unwrap()) as usize;
        let w = std::str::from_utf8(r.take(len)?)
            .map_err(|e| Error::Checkpoint(e.to_string()))?;
        words.push(w.to_string());
    }
    if words.first().map(String::as_str) != Some(Vocab::UNK) {
        return Err(Error::Checkpoint("vocab must start with the OOV token".into()));
    }
    let vocab = Vocab::from_words(words.iter().skip(1));
    if vocab.len() != vocab_len {
        return Err(Error::Checkpoint("duplicate vocab entries".into()));
    }
    let mut weights = Weights::zeros(variant, &dims, vocab_len);
    let mut failure = None;
    weights.for_each_mut(|name, t| {
        if failure.is_some() {
            return;
        }
        let res = (|| -> Result<()> {
            let len = r.usize()?;
            if len != t.len() {
                return Err(Error::Checkpoint(format!(
                    "tensor {name}: expected {} values, found {len}",
                    t.len()
                )));
            }
            for x in t.iter_mut() {
                *x = f64::from_bits(r.u64()?);
            }
            Ok(())
        })();
        failure = res.err();
    });
    if let Some(e) = failure {
        return Err(e);
    }
    if r.at != buf.len() {
        return Err(Error::Checkpoint("trailing bytes".into()));
    }
    Ok(ModelParams {
        variant,
        dims,
        vocab,
        weights,
    })
}

/// Writes JSON when the path ends in `.json`, binary otherwise.
pub fn save(params: &ModelParams, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = if path.extension().is_some_and(|e| e == "json") {
        to_json(params).into_bytes()
    } else {
        to_bytes(params)
    };
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Reads either encoding, detected by the leading magic.
pub fn load(path: impl AsRef<Path>) -> Result<ModelParams> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.starts_with(MAGIC) {
        from_bytes(&bytes)
    } else {
        let text = std::str::from_utf8(&bytes).map_err(|e| Error::Checkpoint(e.to_string()))?;
        from_json(text)
    }
}
