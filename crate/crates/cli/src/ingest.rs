//! Descriptor generation for a directory of heterogeneous source files.
//!
//! Automatic characteristics stay filesystem-derivable: file name, byte
//! size, extension-derived media kind and modification time (seconds since
//! the Unix epoch). Everything richer comes from the annotation file.

use std::path::{Path, PathBuf};
use std::time::UNIX_EPOCH;

use xmlcube_core::descriptor::{
    media_kind_for_extension, parse_annotations, ComplexObjectDescriptor, Subdocument,
};
use xmlcube_core::hash;

use crate::io::{self, CliError};

/// Outcome of describing a source tree: descriptors in object-id order plus
/// per-file failures.
pub struct Described {
    pub descriptors: Vec<ComplexObjectDescriptor>,
    pub errors: Vec<(String, String)>,
}

/// Describes every regular file under `src` (recursively).
///
/// Object identifiers are the `/`-separated paths relative to `src`, which
/// keeps output independent of where the tree is mounted. Unreadable files
/// are recorded and skipped.
pub fn describe_dir(src: &Path, annotations: Option<&Path>) -> Result<Described, CliError> {
    let mut annotation_map: Vec<(String, Vec<(String, String)>)> = Vec::new();
    if let Some(path) = annotations {
        let doc = io::load_xml(path)?;
        annotation_map = parse_annotations(&doc)
            .map_err(|e| CliError::data(&format!("annotations '{}'", path.display()), e))?;
    }

    let mut files = Vec::new();
    walk(src, &mut files)?;
    files.sort();

    let mut described = Described {
        descriptors: Vec::new(),
        errors: Vec::new(),
    };
    for path in files {
        let object_id = relative_id(src, &path);
        match describe_file(&path, &object_id, &annotation_map) {
            Ok(descriptor) => described.descriptors.push(descriptor),
            Err(reason) => described.errors.push((object_id, reason)),
        }
    }
    Ok(described)
}

fn walk(dir: &Path, out: &mut Vec<PathBuf>) -> Result<(), CliError> {
    let entries = std::fs::read_dir(dir)
        .map_err(|e| CliError::data(&format!("cannot read directory '{}'", dir.display()), e))?;
    for entry in entries {
        let entry = entry.map_err(|e| CliError::data("directory entry", e))?;
        let path = entry.path();
        if path.is_dir() {
            walk(&path, out)?;
        } else if path.is_file() {
            out.push(path);
        }
    }
    Ok(())
}

fn relative_id(base: &Path, path: &Path) -> String {
    let relative = path.strip_prefix(base).unwrap_or(path);
    let parts: Vec<String> = relative
        .components()
        .map(|c| c.as_os_str().to_string_lossy().into_owned())
        .collect();
    parts.join("/")
}

fn describe_file(
    path: &Path,
    object_id: &str,
    annotations: &[(String, Vec<(String, String)>)],
) -> Result<ComplexObjectDescriptor, String> {
    let metadata = std::fs::metadata(path).map_err(|e| e.to_string())?;
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let kind = path
        .extension()
        .map(|e| media_kind_for_extension(&e.to_string_lossy()))
        .unwrap_or("other");
    let mut characteristics = vec![
        ("name".to_string(), name),
        ("size".to_string(), metadata.len().to_string()),
    ];
    if let Ok(modified) = metadata.modified() {
        if let Ok(since_epoch) = modified.duration_since(UNIX_EPOCH) {
            characteristics.push(("modified".to_string(), since_epoch.as_secs().to_string()));
        }
    }
    let specific = annotations
        .iter()
        .find(|(id, _)| id == object_id)
        .map(|(_, pairs)| pairs.clone())
        .unwrap_or_default();
    let descriptor = ComplexObjectDescriptor {
        object_id: object_id.to_string(),
        subdocuments: vec![Subdocument {
            source: object_id.to_string(),
            kind: kind.to_string(),
            characteristics,
        }],
        specific,
    };
    descriptor.validate().map_err(|e| e.to_string())?;
    Ok(descriptor)
}

/// Stable file name for a descriptor inside the output directory.
pub fn descriptor_file_name(descriptor: &ComplexObjectDescriptor) -> String {
    format!(
        "obj-{}.xml",
        hash::hex16(hash::fnv1a_64(descriptor.object_id.as_bytes()))
    )
}

/// Writes one descriptor document per object; returns the files written.
pub fn write_descriptors(
    out: &Path,
    descriptors: &[ComplexObjectDescriptor],
) -> Result<Vec<PathBuf>, CliError> {
    let mut written = Vec::new();
    for descriptor in descriptors {
        let path = out.join(descriptor_file_name(descriptor));
        io::write_file(&path, &descriptor.to_xml().to_document_string())?;
        written.push(path);
    }
    Ok(written)
}
