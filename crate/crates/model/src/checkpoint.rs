//! Binary checkpoint container.
//!
//! Layout: magic `SGCK`, `u32` format version, `u32` header length, a JSON
//! header, the body, and a trailing `u32` CRC-32 of everything before it.
//! Integers are little-endian. The transformer body is its parameters as
//! `f32` in declaration order; the n-gram body is its count table.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sentgraph_core::{Encoding, Vocab};

use crate::error::{ModelError, Result};
use crate::lm::LanguageModel;
use crate::ngram::{Counts, NGramModel};
use crate::transformer::{TinyTransformer, TransformerConfig};

const MAGIC: &[u8; 4] = b"SGCK";
const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub enum AnyModel {
    NGram(NGramModel),
    Transformer(TinyTransformer<f32>),
}

impl AnyModel {
    pub fn as_lm(&self) -> &dyn LanguageModel {
        match self {
            AnyModel::NGram(m) => m,
            AnyModel::Transformer(m) => m,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            AnyModel::NGram(_) => "ngram",
            AnyModel::Transformer(_) => "transformer",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub vocab: Vocab,
    pub encoding: Encoding,
    pub seed: u64,
    pub model: AnyModel,
}

#[derive(Serialize, Deserialize)]
struct Header {
    model: String,
    vocab: Vocab,
    encoding: Encoding,
    seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    transformer: Option<TransformerConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ngram: Option<NGramHeader>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    tensors: Vec<(String, Vec<usize>)>,
}

#[derive(Serialize, Deserialize)]
struct NGramHeader {
    order: usize,
    delta: f64,
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut header = Header {
            model: self.model.kind_name().into(),
            vocab: self.vocab,
            encoding: self.encoding,
            seed: self.seed,
            transformer: None,
            ngram: None,
            tensors: Vec::new(),
        };
        let mut body = Vec::new();
        match &self.model {
            AnyModel::Transformer(m) => {
                header.transformer = Some(m.config);
                header.tensors = m.tensors().iter().map(|t| (t.name.clone(), t.shape.clone())).collect();
                for x in &m.params {
                    body.extend_from_slice(&x.to_le_bytes());
                }
            }
            AnyModel::NGram(m) => {
                header.ngram = Some(NGramHeader { order: m.order, delta: m.delta });
                body.extend_from_slice(&(m.table.len() as u64).to_le_bytes());
                for (ctx, counts) in &m.table {
                    body.extend_from_slice(&(ctx.len() as u32).to_le_bytes());
                    ctx.iter().for_each(|t| body.extend_from_slice(&t.to_le_bytes()));
                    body.extend_from_slice(&counts.total.to_le_bytes());
                    body.extend_from_slice(&(counts.next.len() as u32).to_le_bytes());
                    for (t, c) in &counts.next {
                        body.extend_from_slice(&t.to_le_bytes());
                        body.extend_from_slice(&c.to_le_bytes());
                    }
                }
            }
        }
        let json = serde_json::to_vec(&header).expect("header serializes");
        let mut out = Vec::with_capacity(16 + json.len() + body.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(json.len() as u32).to_le_bytes());
        out.extend_from_slice(&json);
        out.extend_from_slice(&body);
        let crc = crc32fast::hash(&out);
        out.extend_from_slice(&crc.to_le_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Checkpoint> {
        let bad = |m: &str| ModelError::Checkpoint(m.into());
        if bytes.len() < 16 || &bytes[..4] != MAGIC {
            return Err(bad("missing SGCK magic"));
        }
        let (content, tail) = bytes.split_at(bytes.len() - 4);
        if crc32fast::hash(content) != u32::from_le_bytes(tail.try_into().unwrap()) {
            return Err(bad("checksum mismatch"));
        }
        let mut r = Reader { buf: &content[4..] };
        let version = r.u32()?;
        if version != VERSION {
            return Err(ModelError::Checkpoint(format!("unsupported version {version}")));
        }
        let len = r.u32()? as usize;
        let header: Header =
            serde_json::from_slice(r.take(len)?).map_err(|e| ModelError::Checkpoint(format!("header: {e}")))?;
        let model = match header.model.as_str() {
            "transformer" => {
                let cfg = header.transformer.ok_or_else(|| bad("transformer header missing"))?;
                if cfg.vocab_size != header.vocab.size() {
                    return Err(bad("model vocabulary does not match the token vocabulary"));
                }
                let count = r.buf.len() / 4;
                let params = (0..count).map(|_| r.f32()).collect::<Result<Vec<_>>>()?;
                AnyModel::Transformer(TinyTransformer::from_params(cfg, params).map_err(ModelError::Checkpoint)?)
            }
            "ngram" => {
                let h = header.ngram.ok_or_else(|| bad("ngram header missing"))?;
                let mut m = NGramModel::new(h.order, header.vocab.size(), h.delta);
                let entries = r.u64()?;
                let mut table = BTreeMap::new();
                for _ in 0..entries {
                    let clen = r.u32()? as usize;
                    let ctx = (0..clen).map(|_| r.u32()).collect::<Result<Vec<_>>>()?;
                    let total = r.u64()?;
                    let nnext = r.u32()?;
                    let mut next = BTreeMap::new();
                    for _ in 0..nnext {
                        let t = r.u32()?;
                        next.insert(t, r.u64()?);
                    }
                    table.insert(ctx, Counts { total, next });
                }
                m.table = table;
                AnyModel::NGram(m)
            }
            other => return Err(ModelError::Checkpoint(format!("unknown model type `{other}`"))),
        };
        if !r.buf.is_empty() {
            return Err(bad("trailing bytes in body"));
        }
        Ok(Checkpoint { vocab: header.vocab, encoding: header.encoding, seed: header.seed, model })
    }
}

struct Reader<'a> {
    buf: &'a [u8],
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.buf.len() < n {
            return Err(ModelError::Checkpoint("truncated body".into()));
        }
        let (head, rest) = self.buf.split_at(n);
        self.buf = rest;
        Ok(head)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f32(&mut self) -> Result<f32> {
        Ok(f32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
}
