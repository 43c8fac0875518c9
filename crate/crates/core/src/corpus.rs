//! The built-in example: a continuous built-in test that monitors two
//! thermistors, with its temperature acquisition and hardware access.
//!
//! Sources, domain configuration and scenarios are embedded at build time
//! from the `corpus/` directory and loaded through the regular frontend.
//! Contract variants of the temperature check share the implementation in
//! `cbit_check.mc`:
//!
//! - `cbit.mc`: corrected cold-temperature clause (the default entry)
//! - `cbit_uncorrected.mc`: the original clause, which does not hold
//! - `cbit_covered.mc`: the working condition specified in every case
//!
//! The error-count predicates are implemented as written: with a threshold
//! of `cnt <= 2` and a post-increment, `EC_TEMP` is first reported on the
//! fourth consecutive discrepancy.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frontend::typed::TypedProgram;
use crate::frontend::{load_program, resolve_with_sources, LoadError};
use crate::semantics::Value;
use crate::verifier::{DomainConfig, Scenario, VerifyError};

macro_rules! assets {
    ($($path:literal),* $(,)?) => {
        &[$(($path, include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/../../corpus/", $path)))),*]
    };
}

/// Embedded corpus files by path relative to the corpus root.
pub const ASSETS: &[(&str, &str)] = assets![
    "manifest.json",
    "defs.mc",
    "hw.mc",
    "acq.mc",
    "cbit_wc.mc",
    "cbit_check.mc",
    "cbit.mc",
    "cbit_uncorrected.mc",
    "cbit_covered.mc",
    "variants/cbit_wc_assigns_ghost.mc",
    "variants/cbit_wc_assigns_qualified.mc",
    "domains.json",
    "scenarios/four_discrepancies.json",
    "scenarios/discrepancy_then_ok.json",
    "scenarios/empty.json",
];

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("no corpus asset `{0}`")]
    MissingAsset(String),
    #[error(transparent)]
    Load(#[from] LoadError),
    #[error("{path}: {source}")]
    Json {
        path: String,
        source: serde_json::Error,
    },
    #[error("{path}: {source}")]
    Config { path: String, source: VerifyError },
    #[error("manifest does not match the sources: {0}")]
    Manifest(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestFunction {
    pub name: String,
    pub hardware: bool,
    /// Expected number of obligations; absent for hardware functions.
    pub obligations: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub entry: String,
    pub files: Vec<String>,
    pub functions: Vec<ManifestFunction>,
    pub constants: BTreeMap<String, i64>,
}

#[derive(Debug, Clone)]
pub struct Corpus {
    pub program: TypedProgram,
    pub manifest: CorpusManifest,
    pub domains: DomainConfig,
    pub scenarios: Vec<Scenario>,
}

pub fn asset(path: &str) -> Option<&'static str> {
    ASSETS
        .iter()
        .find(|(p, _)| *p == path)
        .map(|(_, text)| *text)
}

fn asset_or_err(path: &str) -> Result<&'static str, CorpusError> {
    asset(path).ok_or_else(|| CorpusError::MissingAsset(path.into()))
}

/// Loads `entry` and its imports from the embedded assets.
pub fn load_entry(entry: &str) -> Result<TypedProgram, CorpusError> {
    let (program, sources) = load_program(Path::new(entry), |p| {
        let key = p.to_string_lossy().replace('\\', "/");
        asset(&key).map(str::to_string).ok_or_else(|| {
            std::io::Error::new(std::io::ErrorKind::NotFound, "no such corpus asset")
        })
    })?;
    Ok(resolve_with_sources(&program, sources).map_err(LoadError::from)?)
}

pub fn manifest() -> Result<CorpusManifest, CorpusError> {
    serde_json::from_str(asset_or_err("manifest.json")?).map_err(|source| CorpusError::Json {
        path: "manifest.json".into(),
        source,
    })
}

pub fn default_domains() -> Result<DomainConfig, CorpusError> {
    DomainConfig::from_json(asset_or_err("domains.json")?).map_err(|source| CorpusError::Config {
        path: "domains.json".into(),
        source,
    })
}

/// Loads the manifest entry with the default domains and all scenarios,
/// and checks the program against the manifest.
pub fn load_corpus() -> Result<Corpus, CorpusError> {
    let manifest = manifest()?;
    let program = load_entry(&manifest.entry)?;

    let mut expected: Vec<(&str, bool)> = manifest
        .functions
        .iter()
        .map(|f| (f.name.as_str(), f.hardware))
        .collect();
    let mut found: Vec<(&str, bool)> = program
        .functions
        .iter()
        .map(|f| (f.name.as_str(), f.hardware))
        .collect();
    expected.sort();
    found.sort();
    if expected != found {
        return Err(CorpusError::Manifest(format!(
            "listed {expected:?}, parsed {found:?}"
        )));
    }
    for (name, value) in &manifest.constants {
        let actual = program.constant(name).map(|c| &c.value);
        if actual != Some(&Value::Int(*value)) {
            return Err(CorpusError::Manifest(format!(
                "constant {name} is {actual:?}, listed as {value}"
            )));
        }
    }

    let mut scenarios = Vec::new();
    for path in manifest
        .files
        .iter()
        .filter(|p| p.starts_with("scenarios/"))
    {
        let s = Scenario::from_json(asset_or_err(path)?).map_err(|source| CorpusError::Config {
            path: path.clone(),
            source,
        })?;
        scenarios.push(s);
    }
    Ok(Corpus {
        program,
        manifest,
        domains: default_domains()?,
        scenarios,
    })
}
