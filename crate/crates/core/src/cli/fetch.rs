//! Dataset download hints and integrity checks.
//!
//! Nothing is downloaded here. `fetch` prints where each benchmark lives and,
//! with `--verify`, hashes and parses the files already present. Expected
//! hashes are read from a `SHA256SUMS` file in the data directory (the
//! `sha256sum` output format); without one the computed hashes are reported
//! for pinning.

use super::CliError;
use crate::data::{read_libsvm_file, NamedDataset, ParseOptions};
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

/// Environment variable naming the data directory.
pub const DATA_DIR_ENV: &str = "SSARAH_DATA_DIR";

/// `$SSARAH_DATA_DIR`, or `data` when unset.
pub fn data_dir() -> PathBuf {
    std::env::var_os(DATA_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("data"))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FetchEntry {
    pub dataset: NamedDataset,
    pub url: String,
    pub path: PathBuf,
    pub present: bool,
    pub sha256: Option<String>,
    /// `None` when no expected hash is pinned.
    pub sha256_matches: Option<bool>,
    pub samples: Option<usize>,
    pub dimension: Option<usize>,
    /// Present, parsed to the published sizes, and hash-consistent where pinned.
    pub ok: bool,
}

pub fn sha256_file(path: &Path) -> Result<String, CliError> {
    let mut file = fs::File::open(path)?;
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let k = file.read(&mut buf)?;
        if k == 0 {
            break;
        }
        hasher.update(&buf[..k]);
    }
    Ok(hasher.finalize().iter().map(|b| format!("{b:02x}")).collect())
}

fn pinned_hashes(dir: &Path) -> Result<BTreeMap<String, String>, CliError> {
    let path = dir.join("SHA256SUMS");
    if !path.exists() {
        return Ok(BTreeMap::new());
    }
    let text = fs::read_to_string(&path)?;
    let mut map = BTreeMap::new();
    for (k, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (hash, name) = line
            .split_once(char::is_whitespace)
            .ok_or_else(|| CliError::Data(format!("{}:{}: expected `<sha256>  <file>`", path.display(), k + 1)))?;
        map.insert(
            name.trim().trim_start_matches('*').to_string(),
            hash.to_ascii_lowercase(),
        );
    }
    Ok(map)
}

/// Lists the benchmark datasets; with `verify`, hashes and parses every file
/// found in `dir` and checks the published sample count and dimension.
pub fn cmd_fetch(dir: &Path, verify: bool) -> Result<Vec<FetchEntry>, CliError> {
    let pinned = if verify { pinned_hashes(dir)? } else { BTreeMap::new() };
    let mut entries = Vec::new();
    for dataset in NamedDataset::ALL {
        let path = dir.join(dataset.name());
        let present = path.is_file();
        let mut entry = FetchEntry {
            dataset,
            url: dataset.url(),
            path: path.clone(),
            present,
            sha256: None,
            sha256_matches: None,
            samples: None,
            dimension: None,
            ok: false,
        };
        if verify && present {
            let hash = sha256_file(&path)?;
            entry.sha256_matches = pinned.get(dataset.name()).map(|h| *h == hash);
            entry.sha256 = Some(hash);
            match read_libsvm_file(&path, ParseOptions::default()) {
                Ok(ds) => {
                    entry.samples = Some(ds.num_samples());
                    entry.dimension = Some(ds.max_index());
                }
                Err(e) => log::warn!("{}: {e}", path.display()),
            }
            entry.ok = entry.samples == Some(dataset.samples())
                && entry.dimension == Some(dataset.dimension())
                && entry.sha256_matches != Some(false);
        }
        entries.push(entry);
    }
    Ok(entries)
}
