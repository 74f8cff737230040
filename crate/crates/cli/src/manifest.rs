//! Run manifests: enough to re-execute a command and check its outputs.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use cogload::config::RunConfig;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const TOOL: &str = "cogload";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    /// Arguments after the program name, exactly as given.
    pub argv: Vec<String>,
    pub config: RunConfig,
    pub seeds: BTreeMap<String, u64>,
    /// sha256 per input file.
    pub inputs: BTreeMap<String, String>,
    /// sha256 per output file.
    pub outputs: BTreeMap<String, String>,
}

/// What a command read and wrote.
#[derive(Debug, Default)]
pub struct Record {
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub seeds: BTreeMap<String, u64>,
    /// The manifest is written next to this path.
    pub primary: Option<PathBuf>,
}

impl Record {
    pub fn output(primary: &Path) -> Self {
        Self { outputs: vec![primary.to_path_buf()], primary: Some(primary.to_path_buf()), ..Self::default() }
    }

    pub fn input(mut self, path: &Path) -> Self {
        self.inputs.push(path.to_path_buf());
        self
    }

    pub fn seed(mut self, name: &str, seed: u64) -> Self {
        self.seeds.insert(name.to_string(), seed);
        self
    }
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect())
}

/// Digests of a file, or of every file in a directory (not recursive).
pub fn digests(path: &Path) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    if path.is_dir() {
        let mut entries: Vec<PathBuf> = fs::read_dir(path)?.map(|e| e.map(|e| e.path())).collect::<Result<_, _>>()?;
        entries.sort();
        for p in entries.into_iter().filter(|p| p.is_file()) {
            out.insert(p.to_string_lossy().into_owned(), sha256_file(&p)?);
        }
    } else {
        out.insert(path.to_string_lossy().into_owned(), sha256_file(path)?);
    }
    Ok(out)
}

pub fn manifest_path(primary: &Path) -> PathBuf {
    let mut name = primary.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    primary.with_file_name(name)
}

pub fn write(record: &Record, argv: &[String], config: &RunConfig) -> Result<Option<PathBuf>> {
    let Some(primary) = &record.primary else { return Ok(None) };
    let mut inputs = BTreeMap::new();
    for p in &record.inputs {
        inputs.extend(digests(p)?);
    }
    let mut outputs = BTreeMap::new();
    for p in &record.outputs {
        outputs.extend(digests(p)?);
    }
    let m = Manifest {
        tool: TOOL.into(),
        version: env!("CARGO_PKG_VERSION").into(),
        argv: argv.to_vec(),
        config: config.clone(),
        seeds: record.seeds.clone(),
        inputs,
        outputs,
    };
    let path = manifest_path(primary);
    let text = serde_json::to_string_pretty(&m)? + "\n";
    cogload::io::write_atomic(&path, text.as_bytes())?;
    Ok(Some(path))
}

pub fn load(path: &Path) -> Result<Manifest> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let m: Manifest = serde_json::from_str(&text).with_context(|| format!("parsing manifest {}", path.display()))?;
    if m.tool != TOOL {
        bail!("manifest was written by `{}`, not {TOOL}", m.tool);
    }
    Ok(m)
}

/// Entries of `expected` whose file is missing or hashes differently.
pub fn mismatches(expected: &BTreeMap<String, String>) -> Vec<String> {
    expected
        .iter()
        .filter(|(p, digest)| sha256_file(Path::new(p)).ok().as_ref() != Some(*digest))
        .map(|(p, _)| p.clone())
        .collect()
}
