//! Binary checkpoint: the 8-byte magic `EFEMCKPT`, a little-endian `u32`
//! format version, a little-endian `u64` header length, a UTF-8 JSON header
//! and then, for every parameter in header order, its value, first moment
//! and second moment as row-major little-endian `f64`.

use std::fs;
use std::io::Write;
use std::path::Path;

use ndarray::Array2;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::network::{Network, NetworkConfig};
use super::params::{NetworkParameters, Param};
use crate::error::{Error, Result};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"EFEMCKPT";
pub const CHECKPOINT_VERSION: u32 = 1;

/// Exact position of a ChaCha8 stream.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngState {
    pub seed: [u8; 32],
    pub stream: u64,
    /// Word position, as a decimal string because it is 128-bit.
    pub word_pos: String,
}

impl RngState {
    pub fn capture(rng: &ChaCha8Rng) -> Self {
        Self {
            seed: rng.get_seed(),
            stream: rng.get_stream(),
            word_pos: rng.get_word_pos().to_string(),
        }
    }

    pub fn restore(&self) -> Result<ChaCha8Rng> {
        use rand::SeedableRng;
        let pos: u128 = self
            .word_pos
            .parse()
            .map_err(|_| Error::Config(format!("bad RNG word position {:?}", self.word_pos)))?;
        let mut rng = ChaCha8Rng::from_seed(self.seed);
        rng.set_stream(self.stream);
        rng.set_word_pos(pos);
        Ok(rng)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct ParamEntry {
    name: String,
    rows: usize,
    cols: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    network: NetworkConfig,
    step: u64,
    rng: Option<RngState>,
    meta: serde_json::Value,
    params: Vec<ParamEntry>,
}

/// Everything needed to resume training or run inference.
#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub network: Network,
    pub rng: Option<RngState>,
    /// Free-form run metadata (feature indices, normalisation, scores...).
    pub meta: serde_json::Value,
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Vec<u8> {
        let params = self.network.params();
        let header = Header {
            network: self.network.config().clone(),
            step: params.step,
            rng: self.rng.clone(),
            meta: self.meta.clone(),
            params: params
                .params
                .iter()
                .map(|p| ParamEntry {
                    name: p.name.clone(),
                    rows: p.value.nrows(),
                    cols: p.value.ncols(),
                })
                .collect(),
        };
        let json = serde_json::to_vec(&header).expect("header serialises");
        let mut out = Vec::with_capacity(json.len() + 20 + params.numel() * 24);
        out.extend_from_slice(CHECKPOINT_MAGIC);
        out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        out.extend_from_slice(&(json.len() as u64).to_le_bytes());
        out.extend_from_slice(&json);
        for p in &params.params {
            for arr in [&p.value, &p.m, &p.v] {
                for v in arr.iter() {
                    out.extend_from_slice(&v.to_le_bytes());
                }
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |msg: &str| Error::Config(format!("invalid checkpoint: {msg}"));
        if bytes.len() < 20 || &bytes[..8] != CHECKPOINT_MAGIC {
            return Err(bad("missing magic"));
        }
        let version = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes"));
        if version != CHECKPOINT_VERSION {
            return Err(bad(&format!("unsupported version {version}")));
        }
        let len = u64::from_le_bytes(bytes[12..20].try_into().expect("8 bytes")) as usize;
        let body = bytes.get(20..20 + len).ok_or_else(|| bad("truncated header"))?;
        let header: Header =
            serde_json::from_slice(body).map_err(|e| bad(&format!("header: {e}")))?;
        let mut cursor = 20 + len;
        let mut read_array = |rows: usize, cols: usize| -> Result<Array2<f64>> {
            let n = rows * cols;
            let chunk = bytes
                .get(cursor..cursor + 8 * n)
                .ok_or_else(|| bad("truncated payload"))?;
            cursor += 8 * n;
            let values = chunk
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
                .collect();
            Ok(Array2::from_shape_vec((rows, cols), values).expect("sized"))
        };
        let mut params = NetworkParameters {
            params: Vec::with_capacity(header.params.len()),
            step: header.step,
        };
        for entry in &header.params {
            let value = read_array(entry.rows, entry.cols)?;
            let m = read_array(entry.rows, entry.cols)?;
            let v = read_array(entry.rows, entry.cols)?;
            let mut p = Param::new(entry.name.clone(), value);
            p.m = m;
            p.v = v;
            params.params.push(p);
        }
        if cursor != bytes.len() {
            return Err(bad("trailing bytes"));
        }
        Ok(Checkpoint {
            network: Network::from_parts(header.network, params)?,
            rng: header.rng,
            meta: header.meta,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(&self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}
