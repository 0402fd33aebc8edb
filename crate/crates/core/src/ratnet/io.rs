//! Self-describing JSON weight files.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Arch, Head, Layer, NetParams, RationalCoeffs, DEFAULT_C_ENO};
use crate::error::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;

/// On-disk layout of a trained network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub format_version: u32,
    pub arch: Arch,
    pub c_eno: f64,
    pub feat: Vec<RationalCoeffs>,
    pub layers: Vec<Layer>,
    pub head: Head,
}

/// Validated parameters plus the inference-time ENO threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct NnModel {
    pub params: NetParams,
    pub c_eno: f64,
}

impl NnModel {
    pub fn new(params: NetParams) -> Self {
        Self {
            params,
            c_eno: DEFAULT_C_ENO,
        }
    }

    pub fn reconstruct(&self, s: [f64; 3]) -> f64 {
        super::nn_reconstruct(&self.params, s, self.c_eno)
    }

    pub fn to_file(&self) -> ModelFile {
        ModelFile {
            format_version: FORMAT_VERSION,
            arch: self.params.arch.clone(),
            c_eno: self.c_eno,
            feat: self.params.feat.clone(),
            layers: self.params.layers.clone(),
            head: self.params.head.clone(),
        }
    }

    pub fn from_file(file: ModelFile) -> Result<Self> {
        if file.format_version != FORMAT_VERSION {
            return Err(Error::InvalidField {
                field: "format_version".into(),
                reason: format!("unsupported version {}", file.format_version),
            });
        }
        if !(file.c_eno.is_finite() && file.c_eno > 0.0 && file.c_eno < 0.5) {
            return Err(Error::InvalidField {
                field: "c_eno".into(),
                reason: "must lie in (0, 0.5)".into(),
            });
        }
        let params = NetParams {
            arch: file.arch,
            feat: file.feat,
            layers: file.layers,
            head: file.head,
        };
        params.validate()?;
        Ok(Self {
            params,
            c_eno: file.c_eno,
        })
    }

    pub fn to_json(&self) -> String {
        crate::fmt::to_json_string(&self.to_file()).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        Self::from_file(file)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}
