//! JSON checkpoints.
//!
//! ```json
//! {
//!   "format": "wavenet-checkpoint-v1",
//!   "arch": { "mode": "modulation", "restore": "global-semantics" },
//!   "tensors": {
//!     "embed": { "shape": [V, d], "data": [ ...row-major f64... ] },
//!     "w_src": { "shape": [d, d], "data": [...] },
//!     ...
//!   },
//!   "meta": { ...free-form... }
//! }
//! ```
//!
//! Tensor names are those of [`ModelParams::tensors`]. Values are written
//! with shortest round-trip formatting, so load∘save is bit-exact.

use super::{Architecture, ModelParams};
use crate::error::{Error, Result};
use crate::tensor::Matrix;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

pub const FORMAT: &str = "wavenet-checkpoint-v1";

#[derive(Serialize, Deserialize)]
struct TensorEntry {
    shape: [usize; 2],
    data: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
pub struct Checkpoint {
    format: String,
    pub arch: Architecture,
    tensors: BTreeMap<String, TensorEntry>,
    #[serde(default)]
    pub meta: serde_json::Value,
}

impl Checkpoint {
    pub fn new(params: &ModelParams, arch: Architecture, meta: serde_json::Value) -> Self {
        let tensors = params
            .tensors()
            .into_iter()
            .map(|(name, m)| {
                (name.to_string(), TensorEntry { shape: [m.rows(), m.cols()], data: m.as_slice().to_vec() })
            })
            .collect();
        Self { format: FORMAT.into(), arch, tensors, meta }
    }

    pub fn params(&self) -> Result<ModelParams> {
        let get = |name: &str| -> Result<&TensorEntry> {
            self.tensors.get(name).ok_or_else(|| Error::Shape(format!("checkpoint has no tensor {name:?}")))
        };
        let embed = get("embed")?;
        let clf = get("clf_w")?;
        let mut params = ModelParams::zeros(embed.shape[0], embed.shape[1], clf.shape[1]);
        for (name, slot) in params.tensors_mut() {
            let entry = get(name)?;
            *slot = Matrix::from_vec(entry.shape[0], entry.shape[1], entry.data.clone())?;
        }
        params.validate()?;
        Ok(params)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::io::BufWriter::new(std::fs::File::create(path)?);
        serde_json::to_writer(file, self)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::io::BufReader::new(std::fs::File::open(path)?);
        let ck: Checkpoint = serde_json::from_reader(file)?;
        if ck.format != FORMAT {
            return Err(Error::Config(format!("unsupported checkpoint format {:?}", ck.format)));
        }
        Ok(ck)
    }
}
