//! Versioned JSON grid documents.
//!
//! The schema is strict: unknown fields anywhere in the document are
//! rejected, and `version` must be present and supported.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::error::Category;
use thiserror::Error;

use crate::grid_model::{
    validate, Bus, ConverterSource, ExternalGrid, Line, Network, Switch, Transformer2W,
    Transformer3W, Violation,
};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridFile {
    pub version: u32,
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub buses: Vec<Bus>,
    #[serde(default)]
    pub external_grids: Vec<ExternalGrid>,
    #[serde(default)]
    pub lines: Vec<Line>,
    #[serde(default)]
    pub transformers2w: Vec<Transformer2W>,
    #[serde(default)]
    pub transformers3w: Vec<Transformer3W>,
    #[serde(default)]
    pub converter_sources: Vec<ConverterSource>,
    #[serde(default)]
    pub switches: Vec<Switch>,
}

impl From<Network> for GridFile {
    fn from(n: Network) -> Self {
        GridFile {
            version: FORMAT_VERSION,
            name: n.name,
            buses: n.buses,
            external_grids: n.external_grids,
            lines: n.lines,
            transformers2w: n.transformers2w,
            transformers3w: n.transformers3w,
            converter_sources: n.converter_sources,
            switches: n.switches,
        }
    }
}

impl From<GridFile> for Network {
    fn from(f: GridFile) -> Self {
        Network {
            name: f.name,
            buses: f.buses,
            external_grids: f.external_grids,
            lines: f.lines,
            transformers2w: f.transformers2w,
            transformers3w: f.transformers3w,
            converter_sources: f.converter_sources,
            switches: f.switches,
        }
    }
}

#[derive(Debug, Error)]
pub enum GridFileError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("malformed grid document: {0}")]
    Parse(serde_json::Error),
    #[error("grid document does not match the schema: {0}")]
    Schema(serde_json::Error),
    #[error("unsupported grid format version {found} (expected {FORMAT_VERSION})")]
    UnsupportedVersion { found: u32 },
    #[error("grid failed validation:\n{}", format_violations(.0))]
    Validation(Vec<Violation>),
}

fn format_violations(v: &[Violation]) -> String {
    v.iter().map(|v| format!("  {v}")).collect::<Vec<_>>().join("\n")
}

/// Parse and validate a grid document held in memory.
pub fn parse_network(text: &str) -> Result<Network, GridFileError> {
    let file: GridFile = serde_json::from_str(text).map_err(|e| match e.classify() {
        Category::Data => GridFileError::Schema(e),
        _ => GridFileError::Parse(e),
    })?;
    if file.version != FORMAT_VERSION {
        return Err(GridFileError::UnsupportedVersion { found: file.version });
    }
    let network = Network::from(file);
    let violations = validate(&network);
    if !violations.is_empty() {
        return Err(GridFileError::Validation(violations));
    }
    Ok(network)
}

pub fn load_network(path: impl AsRef<Path>) -> Result<Network, GridFileError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| GridFileError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_network(&text)
}

pub fn to_json(network: &Network) -> String {
    serde_json::to_string_pretty(&GridFile::from(network.clone())).expect("grid serializes")
}

pub fn save_network(network: &Network, path: impl AsRef<Path>) -> std::io::Result<()> {
    let mut text = to_json(network);
    text.push('\n');
    fs::write(path, text)
}
