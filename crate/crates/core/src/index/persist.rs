//! On-disk layout: `manifest.json`, `components.jsonl`, `postings.json` and
//! `signatures.json`, UTF-8 with LF newlines and lexicographically sorted keys.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

use super::{io_err, CorpusIndex, IndexError, IndexManifest, Posting, FORMAT_VERSION};
use crate::model::{ComponentId, ComponentRecord};

const MANIFEST: &str = "manifest.json";
const COMPONENTS: &str = "components.jsonl";
const POSTINGS: &str = "postings.json";
const SIGNATURES: &str = "signatures.json";

/// Compact JSON with object keys sorted, independent of map implementation.
fn canonical_json<T: Serialize>(value: &T) -> String {
    fn write(v: &Value, out: &mut String) {
        match v {
            Value::Object(map) => {
                let mut keys: Vec<&String> = map.keys().collect();
                keys.sort();
                out.push('{');
                for (i, k) in keys.into_iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    out.push_str(&Value::String(k.clone()).to_string());
                    out.push(':');
                    write(&map[k], out);
                }
                out.push('}');
            }
            Value::Array(items) => {
                out.push('[');
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    write(item, out);
                }
                out.push(']');
            }
            scalar => out.push_str(&scalar.to_string()),
        }
    }
    let value = serde_json::to_value(value).expect("index values serialize");
    let mut out = String::new();
    write(&value, &mut out);
    out
}

/// Writes the index into `dir`, replacing any previous contents atomically: the
/// files are written to a sibling temporary directory that is then renamed.
pub fn persist(ix: &CorpusIndex, dir: &Path) -> Result<(), IndexError> {
    let parent = match dir.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => std::env::current_dir().map_err(io_err(dir))?,
    };
    fs::create_dir_all(&parent).map_err(io_err(&parent))?;
    let staging = tempfile::Builder::new()
        .prefix(".index-staging-")
        .tempdir_in(&parent)
        .map_err(io_err(&parent))?;

    let write = |name: &str, body: String| -> Result<(), IndexError> {
        let path = staging.path().join(name);
        fs::write(&path, body).map_err(io_err(path))
    };
    write(MANIFEST, canonical_json(&ix.manifest) + "\n")?;
    let mut lines = String::new();
    for record in ix.components.values() {
        lines.push_str(&canonical_json(record));
        lines.push('\n');
    }
    write(COMPONENTS, lines)?;
    write(POSTINGS, canonical_json(&ix.postings) + "\n")?;
    write(SIGNATURES, canonical_json(&ix.signature_index) + "\n")?;

    let staged = staging.keep();
    let backup = if dir.exists() {
        let backup = parent.join(format!(
            ".index-old-{}",
            staged.file_name().and_then(|n| n.to_str()).unwrap_or("x")
        ));
        fs::rename(dir, &backup).map_err(io_err(dir))?;
        Some(backup)
    } else {
        None
    };
    if let Err(e) = fs::rename(&staged, dir) {
        if let Some(b) = &backup {
            let _ = fs::rename(b, dir);
        }
        let _ = fs::remove_dir_all(&staged);
        return Err(io_err(dir)(e));
    }
    if let Some(b) = backup {
        fs::remove_dir_all(&b).map_err(io_err(b))?;
    }
    Ok(())
}

fn read_json<T: DeserializeOwned>(dir: &Path, name: &str) -> Result<T, IndexError> {
    let path = dir.join(name);
    let text = fs::read_to_string(&path).map_err(io_err(&path))?;
    serde_json::from_str(&text).map_err(|e| IndexError::Corrupt {
        file: name.to_string(),
        message: e.to_string(),
    })
}

/// Reads an index written by [`persist`].
pub fn load(dir: &Path) -> Result<CorpusIndex, IndexError> {
    let raw: Value = read_json(dir, MANIFEST)?;
    let found = raw
        .get("formatVersion")
        .and_then(Value::as_u64)
        .ok_or_else(|| IndexError::Corrupt {
            file: MANIFEST.to_string(),
            message: "missing formatVersion".into(),
        })?;
    if found != u64::from(FORMAT_VERSION) {
        return Err(IndexError::FormatVersionMismatch {
            found: u32::try_from(found).unwrap_or(u32::MAX),
            expected: FORMAT_VERSION,
        });
    }
    let manifest: IndexManifest = serde_json::from_value(raw).map_err(|e| IndexError::Corrupt {
        file: MANIFEST.to_string(),
        message: e.to_string(),
    })?;

    let path = dir.join(COMPONENTS);
    let text = fs::read_to_string(&path).map_err(io_err(&path))?;
    let mut components = BTreeMap::new();
    for (n, line) in text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
    {
        let record: ComponentRecord =
            serde_json::from_str(line).map_err(|e| IndexError::Corrupt {
                file: COMPONENTS.to_string(),
                message: format!("line {}: {e}", n + 1),
            })?;
        components.insert(record.id.clone(), record);
    }
    if components.len() != manifest.component_count {
        return Err(IndexError::Corrupt {
            file: COMPONENTS.to_string(),
            message: format!(
                "{} components stored, manifest says {}",
                components.len(),
                manifest.component_count
            ),
        });
    }
    let postings: BTreeMap<String, Vec<Posting>> = read_json(dir, POSTINGS)?;
    let signature_index: BTreeMap<String, Vec<ComponentId>> = read_json(dir, SIGNATURES)?;
    for id in postings
        .values()
        .flatten()
        .map(|p| &p.id)
        .chain(signature_index.values().flatten())
    {
        if !components.contains_key(id) {
            return Err(IndexError::Corrupt {
                file: POSTINGS.to_string(),
                message: format!("unknown component id {id}"),
            });
        }
    }
    Ok(CorpusIndex {
        manifest,
        components,
        postings,
        signature_index,
    })
}
