//! Binary checkpoint format.
//!
//! ```text
//! offset  size  content
//! 0       8     magic "CHRONOQA"
//! 8       4     format version, u32 little-endian (currently 1)
//! 12      8     header length H, u64 little-endian
//! 20      H     header, UTF-8 JSON (stage, config hash, seed, shapes, vocabulary)
//! 20+H    8N    parameters, f64 little-endian
//! ...     8N    first moments, f64 little-endian
//! ...     8N    second moments, f64 little-endian
//! ```
//!
//! `N` is the parameter count implied by the header's `vocab_size` and `dim`.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ModelParams, OptimizerState, Vocab};
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"CHRONOQA";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub stage: usize,
    pub config_hash: String,
    pub seed: u64,
    pub vocab: Vocab,
    pub params: ModelParams,
    pub optimizer: OptimizerState,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    stage: usize,
    config_hash: String,
    seed: u64,
    dim: usize,
    vocab_size: usize,
    oov_buckets: usize,
    optimizer_step: u64,
    tokens: Vec<String>,
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Vec<u8> {
        let header = Header {
            stage: self.stage,
            config_hash: self.config_hash.clone(),
            seed: self.seed,
            dim: self.params.dim,
            vocab_size: self.params.vocab_size,
            oov_buckets: self.vocab.oov_buckets(),
            optimizer_step: self.optimizer.step,
            tokens: self.vocab.tokens().to_vec(),
        };
        let header = serde_json::to_vec(&header).expect("header serializes");
        let n = self.params.data.len();
        let mut out = Vec::with_capacity(20 + header.len() + 24 * n);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&(header.len() as u64).to_le_bytes());
        out.extend_from_slice(&header);
        for block in [&self.params.data, &self.optimizer.m, &self.optimizer.v] {
            for x in block.iter() {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8], origin: &Path) -> Result<Self> {
        let bad = |message: String| Error::Checkpoint { path: origin.to_path_buf(), message };
        if bytes.len() < 20 || &bytes[..8] != MAGIC {
            return Err(bad("not a checkpoint (bad magic)".into()));
        }
        let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
        if version != FORMAT_VERSION {
            return Err(bad(format!("unsupported format version {version}")));
        }
        let hlen = u64::from_le_bytes(bytes[12..20].try_into().unwrap()) as usize;
        let body = bytes.get(20..).unwrap_or_default();
        let header: Header = serde_json::from_slice(body.get(..hlen).ok_or_else(|| bad("truncated header".into()))?)
            .map_err(|e| bad(format!("header: {e}")))?;
        let vocab = Vocab::from_tokens(header.tokens, header.oov_buckets)?;
        if vocab.len() != header.vocab_size {
            return Err(bad(format!("vocabulary has {} rows, header says {}", vocab.len(), header.vocab_size)));
        }
        let n = ModelParams::n_params(header.vocab_size, header.dim);
        let data = &body[hlen..];
        if data.len() != 24 * n {
            return Err(bad(format!("expected {} bytes of arrays, found {}", 24 * n, data.len())));
        }
        let read_block = |k: usize| -> Vec<f64> {
            data[8 * n * k..8 * n * (k + 1)]
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect()
        };
        Ok(Checkpoint {
            stage: header.stage,
            config_hash: header.config_hash,
            seed: header.seed,
            vocab,
            params: ModelParams::from_data(header.vocab_size, header.dim, read_block(0))?,
            optimizer: OptimizerState { step: header.optimizer_step, m: read_block(1), v: read_block(2) },
        })
    }

    /// Write atomically: a crash leaves either the old file or the new one.
    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        let tmp = path.with_extension("partial");
        fs::write(&tmp, self.to_bytes()).map_err(|e| Error::io(&tmp, e))?;
        fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes, path)
    }
}
