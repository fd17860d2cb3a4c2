//! Sample batches and their on-disk forms: a binary columnar file with a
//! JSON header, and CSV export.

use super::model::ModelDescriptor;
use crate::error::{Error, Result};
use crate::io::atomic_write;
use serde::{Deserialize, Serialize};
use std::path::Path;

const MAGIC: &[u8; 8] = b"LGBATCH1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Acceptance rate after adaptation, averaged over chains.
    pub acceptance: f64,
    /// Sweeps per chain, burn-in included.
    pub sweeps: usize,
    pub burn_in: usize,
    pub thinning: usize,
    /// Largest integrated autocorrelation time over chains, in sweeps.
    pub autocorrelation: f64,
    pub chains: usize,
    /// Frozen per-cut step sizes, chain by chain.
    pub step_sizes: Vec<Vec<f64>>,
    pub warnings: Vec<String>,
}

impl Diagnostics {
    pub fn exact() -> Self {
        Diagnostics {
            acceptance: 1.0,
            sweeps: 0,
            burn_in: 0,
            thinning: 1,
            autocorrelation: 1.0,
            chains: 1,
            step_sizes: Vec::new(),
            warnings: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleBatch {
    pub descriptor: ModelDescriptor,
    pub seed: u64,
    /// n_samples configurations of length N, sorted within each cut.
    pub configs: Vec<Vec<f64>>,
    pub diagnostics: Diagnostics,
    /// Free-form record of how the batch was produced, kept in the header.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<serde_json::Value>,
}

#[derive(Serialize, Deserialize)]
struct Header {
    descriptor: ModelDescriptor,
    seed: u64,
    diagnostics: Diagnostics,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    provenance: Option<serde_json::Value>,
    n_samples: usize,
    n: usize,
    layout: String,
}

impl SampleBatch {
    pub fn len(&self) -> usize {
        self.configs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.configs.is_empty()
    }

    pub fn n(&self) -> usize {
        self.descriptor.n
    }

    /// Particles of cut h in config s, for constrained batches.
    pub fn cut_slice(&self, s: usize, h: usize) -> Option<&[f64]> {
        let counts = self.descriptor.counts.as_ref()?;
        let start: usize = counts[..h].iter().sum();
        Some(&self.configs[s][start..start + counts[h]])
    }

    /// Column k: particle k across all configs.
    pub fn column(&self, k: usize) -> Vec<f64> {
        self.configs.iter().map(|c| c[k]).collect()
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let n = self.n();
        if self.configs.iter().any(|c| c.len() != n) {
            return Err(Error::Data("configs differ in length".into()));
        }
        let header = serde_json::to_vec(&Header {
            descriptor: self.descriptor.clone(),
            seed: self.seed,
            diagnostics: self.diagnostics.clone(),
            provenance: self.provenance.clone(),
            n_samples: self.len(),
            n,
            layout: "columns f64le".into(),
        })?;
        let mut out = Vec::with_capacity(16 + header.len() + 8 * n * self.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(header.len() as u64).to_le_bytes());
        out.extend_from_slice(&header);
        for k in 0..n {
            for c in &self.configs {
                out.extend_from_slice(&c[k].to_le_bytes());
            }
        }
        Ok(out)
    }

    pub fn from_bytes(b: &[u8]) -> Result<Self> {
        if b.len() < 16 || &b[..8] != MAGIC {
            return Err(Error::Data("not a sample batch file".into()));
        }
        let hl = u64::from_le_bytes(b[8..16].try_into().unwrap()) as usize;
        let body = 16usize.checked_add(hl).filter(|&e| e <= b.len()).ok_or_else(|| Error::Data("truncated header".into()))?;
        let h: Header = serde_json::from_slice(&b[16..body])?;
        if h.n != h.descriptor.n {
            return Err(Error::Data("header N disagrees with descriptor".into()));
        }
        let data = &b[body..];
        if data.len() != 8 * h.n * h.n_samples {
            return Err(Error::Data(format!("expected {} data bytes, found {}", 8 * h.n * h.n_samples, data.len())));
        }
        let mut configs = vec![vec![0.0; h.n]; h.n_samples];
        for (idx, chunk) in data.chunks_exact(8).enumerate() {
            let (k, s) = (idx / h.n_samples, idx % h.n_samples);
            configs[s][k] = f64::from_le_bytes(chunk.try_into().unwrap());
        }
        Ok(SampleBatch { descriptor: h.descriptor, seed: h.seed, configs, diagnostics: h.diagnostics, provenance: h.provenance })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        atomic_write(path, &self.to_bytes()?)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }

    /// One row per config: `sample,lambda_0,...`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("sample");
        for k in 0..self.n() {
            s.push_str(&format!(",lambda_{k}"));
        }
        s.push('\n');
        for (i, c) in self.configs.iter().enumerate() {
            s.push_str(&i.to_string());
            for v in c {
                s.push(',');
                s.push_str(&format!("{v:?}"));
            }
            s.push('\n');
        }
        s
    }
}
