//! Filesystem plumbing: deterministic directory listings, XML file loading
//! and the on-disk layout of stores, cubes, indexes and views.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use xmlcube_core::joinindex::IndexDocument;
use xmlcube_core::store::XCubeStore;
use xmlcube_core::xml::{self, Element};

/// Errors split by exit code: usage mistakes exit 1, data problems exit 2.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
        }
    }

    pub fn data(context: &str, err: impl fmt::Display) -> CliError {
        CliError::Data(format!("{context}: {err}"))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "usage error: {msg}"),
            CliError::Data(msg) => write!(f, "error: {msg}"),
        }
    }
}

impl std::error::Error for CliError {}

/// Regular files of a directory in name order, so every run sees the same
/// input sequence.
pub fn read_dir_sorted(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let entries = fs::read_dir(dir)
        .map_err(|e| CliError::data(&format!("cannot read directory '{}'", dir.display()), e))?;
    let mut files = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| CliError::data("directory entry", e))?;
        let path = entry.path();
        if path.is_file() {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

pub fn read_to_string(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path)
        .map_err(|e| CliError::data(&format!("cannot read '{}'", path.display()), e))
}

pub fn load_xml(path: &Path) -> Result<Element, CliError> {
    let text = read_to_string(path)?;
    xml::parse(&text).map_err(|e| CliError::data(&format!("'{}'", path.display()), e))
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)
            .map_err(|e| CliError::data(&format!("cannot create '{}'", parent.display()), e))?;
    }
    fs::write(path, contents)
        .map_err(|e| CliError::data(&format!("cannot write '{}'", path.display()), e))
}

/// The two warehouse files inside a store directory.
pub const DIMENSIONS_FILE: &str = "Dimensions.xml";
pub const FACTS_FILE: &str = "Facts.xml";
/// The join index file name.
pub const INDEX_FILE: &str = "Index.xml";

pub fn write_store(dir: &Path, store: &XCubeStore) -> Result<(), CliError> {
    let (dimensions, facts) = store.to_documents();
    write_file(&dir.join(DIMENSIONS_FILE), &dimensions)?;
    write_file(&dir.join(FACTS_FILE), &facts)
}

pub fn read_store(dir: &Path) -> Result<XCubeStore, CliError> {
    let dimensions = read_to_string(&dir.join(DIMENSIONS_FILE))?;
    let facts = read_to_string(&dir.join(FACTS_FILE))?;
    XCubeStore::from_documents(&dimensions, &facts)
        .map_err(|e| CliError::data(&format!("store '{}'", dir.display()), e))
}

pub fn write_index(path: &Path, index: &IndexDocument) -> Result<(), CliError> {
    write_file(path, &index.to_document())
}

pub fn read_index(path: &Path, store: &XCubeStore) -> Result<IndexDocument, CliError> {
    let text = read_to_string(path)?;
    IndexDocument::from_document(&text, store)
        .map_err(|e| CliError::data(&format!("index '{}'", path.display()), e))
}

/// Store directory resolution: an explicit flag wins, otherwise
/// `$XMLCUBE_DATA/store`.
pub fn resolve_store_dir(flag: Option<PathBuf>) -> Result<PathBuf, CliError> {
    if let Some(dir) = flag {
        return Ok(dir);
    }
    match std::env::var_os("XMLCUBE_DATA") {
        Some(base) => Ok(PathBuf::from(base).join("store")),
        None => Err(CliError::Usage(
            "no --store given and XMLCUBE_DATA is not set".to_string(),
        )),
    }
}
