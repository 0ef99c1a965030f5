// SPDX-License-Identifier: Apache-2.0

//! Run manifest for `rtlfix loop`.
//!
//! ```toml
//! problem = "counter"
//! rtl = "listing1.v"
//! port_spec = "ports.json"
//! oracle = "python3 golden.py"   # or ["python3", "golden.py"]
//! seed = "seed.json"             # optional
//! config = "run.toml"            # optional
//! output_dir = "out/counter"
//! ```
//!
//! Relative paths are taken from the manifest's directory. Every referenced
//! input file must exist; the output directory is created.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use serde::Deserialize;

use rtlfix_core::oracle::ModelSpec;

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum OracleField {
    Line(String),
    Argv(Vec<String>),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Raw {
    problem: String,
    rtl: PathBuf,
    port_spec: PathBuf,
    #[serde(default)]
    oracle: Option<OracleField>,
    #[serde(default)]
    seed: Option<PathBuf>,
    #[serde(default)]
    config: Option<PathBuf>,
    output_dir: PathBuf,
}

#[derive(Debug, Clone)]
pub struct RunManifest {
    pub problem: String,
    pub rtl: PathBuf,
    pub port_spec: PathBuf,
    /// Command line of the golden model; None defers to the config.
    pub oracle: Option<Vec<String>>,
    pub seed: Option<PathBuf>,
    pub config: Option<PathBuf>,
    pub output_dir: PathBuf,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read manifest {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")), base)
            .with_context(|| format!("bad manifest {}", path.display()))
    }

    pub fn parse(text: &str, json: bool, base: &Path) -> Result<Self> {
        let raw: Raw = if json { serde_json::from_str(text)? } else { toml::from_str(text)? };
        if raw.problem.trim().is_empty() {
            bail!("empty problem id");
        }
        let oracle = match raw.oracle {
            None => None,
            Some(OracleField::Argv(v)) => Some(v),
            Some(OracleField::Line(s)) => Some(shlex::split(&s).ok_or_else(|| anyhow!("cannot split oracle command `{s}`"))?),
        };
        if oracle.as_ref().is_some_and(|v| v.is_empty()) {
            bail!("empty oracle command");
        }
        let resolve = |p: PathBuf| if p.is_absolute() { p } else { base.join(p) };
        let existing = |what: &str, p: PathBuf| -> Result<PathBuf> {
            let p = resolve(p);
            if !p.is_file() {
                bail!("{what} {} does not exist", p.display());
            }
            Ok(p)
        };
        Ok(RunManifest {
            problem: raw.problem,
            rtl: existing("rtl", raw.rtl)?,
            port_spec: existing("port_spec", raw.port_spec)?,
            oracle,
            seed: raw.seed.map(|p| existing("seed", p)).transpose()?,
            config: raw.config.map(|p| existing("config", p)).transpose()?,
            output_dir: resolve(raw.output_dir),
        })
    }

    /// The manifest's oracle, else the config's. The oracle's own timeout
    /// and settings come from the config when both are present.
    pub fn oracle_spec(&self, config: Option<&ModelSpec>) -> Result<ModelSpec> {
        match (&self.oracle, config) {
            (Some(cmd), Some(c)) => Ok(ModelSpec { command: cmd.clone(), ..c.clone() }),
            (Some(cmd), None) => Ok(ModelSpec::new(cmd)),
            (None, Some(c)) => Ok(c.clone()),
            (None, None) => bail!("no oracle in the manifest or the config"),
        }
    }
}
