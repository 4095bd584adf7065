use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use gtkv_core::group_ring::Framing;
use gtkv_core::tensor_algebra::AlgebraContext;
use serde::{de::DeserializeOwned, Deserialize, Serialize};
use serde_json::Value;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    #[default]
    Json,
    Text,
}

/// Flags shared by every subcommand.
#[derive(Args, Debug, Clone, Default)]
pub struct Common {
    /// Genus g (generators x1..xg, y1..yg)
    #[arg(long, short = 'g')]
    pub genus: Option<usize>,
    /// Number of boundary generators z1..zn
    #[arg(long)]
    pub boundary: Option<usize>,
    /// Weight truncation D
    #[arg(long, short = 'd')]
    pub degree: Option<usize>,
    /// Framing values on alpha_1, beta_1, alpha_2, beta_2, ...
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub p: Option<Vec<i64>>,
    /// Framing values q_1..q_n on the boundary loops
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub q: Option<Vec<i64>>,
    /// Seed for randomized checks (falls back to GTKV_SEED)
    #[arg(long)]
    pub seed: Option<u64>,
    /// JSON config file; explicit flags take precedence
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Write the report here instead of stdout
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

/// Values a config file may set.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub genus: Option<usize>,
    pub boundary: Option<usize>,
    pub degree: Option<usize>,
    pub p: Option<Vec<i64>>,
    pub q: Option<Vec<i64>>,
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    pub branch: Option<u64>,
    pub n: Option<usize>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    pub genus: usize,
    pub boundary: usize,
    pub degree: usize,
    pub p: Vec<i64>,
    pub q: Vec<i64>,
    pub seed: u64,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub options: BTreeMap<String, Value>,
}

impl RunConfig {
    pub fn ctx(&self) -> AlgebraContext {
        AlgebraContext::new(self.genus, self.boundary, self.degree)
    }

    pub fn framing(&self) -> Result<Framing> {
        framing_from(self.ctx(), &self.p, &self.q)
    }

    pub fn set(&mut self, key: &str, v: impl Serialize) {
        self.options.insert(key.into(), serde_json::to_value(v).expect("plain value"));
    }
}

pub fn framing_from(ctx: AlgebraContext, p: &[i64], q: &[i64]) -> Result<Framing> {
    if p.len() != 2 * ctx.genus || q.len() != ctx.boundary {
        bail!("framing arrays must have sizes (2g, n) = ({}, {}), got ({}, {})", 2 * ctx.genus, ctx.boundary, p.len(), q.len());
    }
    let p_x = p.iter().step_by(2).copied().collect();
    let p_y = p.iter().skip(1).step_by(2).copied().collect();
    Ok(Framing::new(ctx, p_x, p_y, q.to_vec())?)
}

/// Interleaves `(p_x, p_y)` back into the flag layout.
pub fn p_flag(fr: &Framing) -> Vec<i64> {
    fr.p_x.iter().zip(&fr.p_y).flat_map(|(a, b)| [*a, *b]).collect()
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| anyhow::anyhow!("parse error in {} at line {}, column {}: {e}", path.display(), e.line(), e.column()))
}

pub struct Defaults {
    pub genus: usize,
    pub boundary: usize,
    pub degree: usize,
}

impl Default for Defaults {
    fn default() -> Self {
        Defaults { genus: 1, boundary: 0, degree: 4 }
    }
}

/// Flags, then the config file, then `GTKV_SEED`, then defaults.
pub fn resolve(c: &Common, d: Defaults) -> Result<(RunConfig, FileConfig)> {
    let file: FileConfig = match &c.config {
        Some(path) => read_json(path)?,
        None => FileConfig::default(),
    };
    let genus = c.genus.or(file.genus).unwrap_or(d.genus);
    let boundary = c.boundary.or(file.boundary).unwrap_or(d.boundary);
    let degree = c.degree.or(file.degree).unwrap_or(d.degree);
    if degree < 1 {
        bail!("degree must be at least 1");
    }
    let env_seed = match std::env::var("GTKV_SEED") {
        Ok(s) => Some(s.trim().parse::<u64>().with_context(|| format!("GTKV_SEED is not an unsigned integer: {s:?}"))?),
        Err(_) => None,
    };
    let seed = c.seed.or(file.seed).or(env_seed).unwrap_or(0);
    let p = c.p.clone().or_else(|| file.p.clone()).unwrap_or_else(|| vec![0; 2 * genus]);
    let q = c.q.clone().or_else(|| file.q.clone()).unwrap_or_else(|| vec![0; boundary]);
    let cfg = RunConfig { genus, boundary, degree, p, q, seed, options: BTreeMap::new() };
    cfg.framing()?;
    Ok((cfg, file))
}
