//! Run manifests: the full record of parameters and inputs behind a map.
//!
//! A manifest is a JSON object of key/value pairs written next to every
//! output set. Feeding it back to `pixelate pixelate --manifest` repeats the run.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::ladder::ScaleMode;
use crate::pipeline::PixelationParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InputSource {
    Csv { path: String },
    AsciiPair { z_path: String, u_path: String },
}

impl InputSource {
    /// SHA-256 over the input file bytes, in order.
    pub fn digest(&self) -> Result<String> {
        let mut hasher = Sha256::new();
        let paths: Vec<&str> = match self {
            InputSource::Csv { path } => vec![path],
            InputSource::AsciiPair { z_path, u_path } => vec![z_path, u_path],
        };
        for p in paths {
            let bytes = fs::read(p).map_err(|e| Error::io(p, e))?;
            hasher.update(&bytes);
        }
        Ok(hex::encode(hasher.finalize()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub input: InputSource,
    pub input_digest: String,
    /// How uncertainty was obtained from the input columns.
    pub uncertainty_mode: String,
    pub num_sizes: usize,
    pub scale: ScaleMode,
    pub factor: u64,
    pub min_big: [usize; 2],
    pub zero_tol: f64,
    pub px_per_cell: usize,
    pub legend: bool,
    pub svg: bool,
    pub ladder: Vec<u64>,
    pub big_pixels: [usize; 2],
    pub degenerate: bool,
    pub out_prefix: String,
    pub outputs: Vec<String>,
    /// Digest of the input digest and every parameter above that affects output content.
    pub run_digest: String,
}

impl RunManifest {
    pub fn params(&self) -> PixelationParams {
        PixelationParams {
            num_sizes: self.num_sizes,
            scale: self.scale,
            factor: self.factor,
            min_big: (self.min_big[0], self.min_big[1]),
        }
    }

    pub fn compute_run_digest(&self) -> String {
        let key = format!(
            "{}|{}|{}|{}|{}|{}|{}|{}|{}|{}",
            self.input_digest,
            self.uncertainty_mode,
            self.num_sizes,
            self.scale,
            self.factor,
            self.min_big[0],
            self.min_big[1],
            self.zero_tol.to_bits(),
            self.px_per_cell,
            self.legend
        );
        hex::encode(Sha256::digest(key.as_bytes()))
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serialises");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::ParseError {
            line: e.line(),
            message: format!("manifest: {e}"),
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}
