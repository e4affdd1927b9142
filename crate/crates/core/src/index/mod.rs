//! Inverted lexical index plus signature index over a component corpus.

mod persist;
mod search;

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;
use walkdir::WalkDir;

use crate::analysis::HASH_ALGORITHM;
use crate::extract::{extract_components, ExtractError};
use crate::lexer::{is_keyword, lex, TokenKind};
use crate::model::{ComponentId, ComponentKind, ComponentRecord};
use crate::mql::MQL_VERSION;
use crate::tokenize::tokenize_identifier;
use crate::SUBJECT_LANGUAGE;

pub use persist::{load, persist};
pub use search::{search_keyword, search_mql};

pub const FORMAT_VERSION: u32 = 1;

/// File extensions read as subject-language sources.
pub const SOURCE_EXTENSIONS: &[&str] = &["h", "hh", "hpp", "hxx", "ipp", "cc", "cpp", "cxx", "c++"];

pub fn is_source_file(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| SOURCE_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()))
}

#[derive(Debug, Error)]
pub enum IndexError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("no components could be extracted from {0}")]
    EmptyCorpus(PathBuf),
    #[error("index format version {found} is not supported (expected {expected})")]
    FormatVersionMismatch { found: u32, expected: u32 },
    #[error("corrupt index file {file}: {message}")]
    Corrupt { file: String, message: String },
    #[error("invalid search constraints: {0}")]
    InvalidConstraints(String),
}

pub(crate) fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> IndexError {
    let path = path.into();
    move |source| IndexError::Io { path, source }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Field {
    Name,
    Methods,
    Text,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Posting {
    pub id: ComponentId,
    pub field: Field,
    pub term_frequency: u32,
}

/// Ranking constants. Stored in the manifest so a loaded index ranks the way it was built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ScoringConfig {
    pub name_weight: f64,
    pub methods_weight: f64,
    pub text_weight: f64,
    pub interface_blend: f64,
    pub lexical_blend: f64,
}

impl Default for ScoringConfig {
    fn default() -> Self {
        Self {
            name_weight: 3.0,
            methods_weight: 2.0,
            text_weight: 1.0,
            interface_blend: 0.6,
            lexical_blend: 0.4,
        }
    }
}

impl ScoringConfig {
    pub fn weight(&self, field: Field) -> f64 {
        match field {
            Field::Name => self.name_weight,
            Field::Methods => self.methods_weight,
            Field::Text => self.text_weight,
        }
    }
}

/// A corpus file that could not be parsed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SkippedFile {
    pub path: String,
    pub line: usize,
    pub column: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct IndexManifest {
    pub format_version: u32,
    pub corpus_root: String,
    pub component_count: usize,
    pub hash_algorithm: String,
    pub created_at: String,
    pub subject_language: String,
    pub mql_version: u32,
    pub scoring: ScoringConfig,
    pub skipped: Vec<SkippedFile>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusIndex {
    pub manifest: IndexManifest,
    pub components: BTreeMap<ComponentId, ComponentRecord>,
    /// term -> postings sorted by (id, field).
    pub postings: BTreeMap<String, Vec<Posting>>,
    /// lowercased class simple name -> sorted ids.
    pub signature_index: BTreeMap<String, Vec<ComponentId>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SearchHit {
    pub id: ComponentId,
    pub score: f64,
    pub lexical_score: f64,
    pub interface_score: f64,
    pub matched_terms: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct SearchConstraints {
    pub dedupe: bool,
    pub exclude_kinds: BTreeSet<ComponentKind>,
    pub max_results: usize,
    pub path_prefix: Option<String>,
}

impl Default for SearchConstraints {
    fn default() -> Self {
        Self {
            dedupe: false,
            exclude_kinds: BTreeSet::new(),
            max_results: 50,
            path_prefix: None,
        }
    }
}

impl SearchConstraints {
    pub fn validate(&self) -> Result<(), IndexError> {
        if self.max_results == 0 {
            return Err(IndexError::InvalidConstraints(
                "maxResults must be at least 1".into(),
            ));
        }
        Ok(())
    }

    pub(crate) fn admits(&self, record: &ComponentRecord) -> bool {
        !self.exclude_kinds.contains(&record.interface.kind)
            && self
                .path_prefix
                .as_deref()
                .is_none_or(|p| record.path.starts_with(p))
    }
}

/// Terms of each field for one component.
pub(crate) fn field_terms(record: &ComponentRecord) -> BTreeMap<Field, Vec<String>> {
    let mut out = BTreeMap::new();
    out.insert(
        Field::Name,
        tokenize_identifier(&record.interface.class_name.simple),
    );
    let methods: Vec<String> = record
        .interface
        .plain_methods()
        .flat_map(|m| tokenize_identifier(&m.name))
        .collect();
    out.insert(Field::Methods, methods);
    let text = lex(&record.declaration())
        .map(|tokens| {
            tokens
                .iter()
                .filter(|t| t.kind == TokenKind::Ident && !is_keyword(&t.text))
                .flat_map(|t| tokenize_identifier(&t.text))
                .collect()
        })
        .unwrap_or_default();
    out.insert(Field::Text, text);
    out
}

fn created_at() -> String {
    let secs = std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|v| v.trim().parse::<i64>().ok())
        .unwrap_or(0);
    chrono::DateTime::from_timestamp(secs, 0)
        .unwrap_or_default()
        .to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

impl CorpusIndex {
    /// Assembles an index from records. Ids already taken are replaced by
    /// location-derived ones, in input order.
    pub fn from_records(
        corpus_root: &str,
        records: Vec<ComponentRecord>,
        skipped: Vec<SkippedFile>,
        scoring: ScoringConfig,
    ) -> Self {
        let mut components = BTreeMap::new();
        for mut record in records {
            if components.contains_key(&record.id) {
                record.id = ComponentId::disambiguated(
                    &record.content_hash,
                    &record.path,
                    &record.interface.class_name.full_name(),
                );
            }
            components.insert(record.id.clone(), record);
        }

        let mut postings: BTreeMap<String, Vec<Posting>> = BTreeMap::new();
        let mut signature_index: BTreeMap<String, Vec<ComponentId>> = BTreeMap::new();
        for (id, record) in &components {
            for (field, terms) in field_terms(record) {
                let mut tf: BTreeMap<String, u32> = BTreeMap::new();
                for t in terms {
                    *tf.entry(t).or_default() += 1;
                }
                for (term, n) in tf {
                    postings.entry(term).or_default().push(Posting {
                        id: id.clone(),
                        field,
                        term_frequency: n,
                    });
                }
            }
            signature_index
                .entry(record.interface.class_name.simple.to_lowercase())
                .or_default()
                .push(id.clone());
        }
        for list in postings.values_mut() {
            list.sort_by(|a, b| (&a.id, a.field).cmp(&(&b.id, b.field)));
        }

        CorpusIndex {
            manifest: IndexManifest {
                format_version: FORMAT_VERSION,
                corpus_root: corpus_root.to_string(),
                component_count: components.len(),
                hash_algorithm: HASH_ALGORITHM.to_string(),
                created_at: created_at(),
                subject_language: SUBJECT_LANGUAGE.to_string(),
                mql_version: MQL_VERSION,
                scoring,
                skipped,
            },
            components,
            postings,
            signature_index,
        }
    }

    pub fn get(&self, id: &ComponentId) -> Option<&ComponentRecord> {
        self.components.get(id)
    }

    /// Number of distinct components containing `term`.
    pub fn document_frequency(&self, term: &str) -> usize {
        self.postings.get(term).map_or(0, |list| {
            let mut n = 0;
            let mut last: Option<&ComponentId> = None;
            for p in list {
                if last != Some(&p.id) {
                    n += 1;
                    last = Some(&p.id);
                }
            }
            n
        })
    }

    pub fn idf(&self, term: &str) -> f64 {
        let df = self.document_frequency(term);
        if df == 0 {
            return 0.0;
        }
        (1.0 + self.components.len() as f64 / df as f64).ln()
    }
}

/// Indexes every subject-language file under `corpus_root` with default scoring.
pub fn build_index(corpus_root: &Path) -> Result<CorpusIndex, IndexError> {
    build_index_with(corpus_root, ScoringConfig::default())
}

pub fn build_index_with(
    corpus_root: &Path,
    scoring: ScoringConfig,
) -> Result<CorpusIndex, IndexError> {
    std::fs::read_dir(corpus_root).map_err(io_err(corpus_root))?;
    let mut records = Vec::new();
    let mut skipped = Vec::new();
    let walker = WalkDir::new(corpus_root)
        .sort_by_file_name()
        .follow_links(false);
    for entry in walker {
        let entry = entry.map_err(|e| {
            let path = e
                .path()
                .map(Path::to_path_buf)
                .unwrap_or_else(|| corpus_root.to_path_buf());
            IndexError::Io {
                path,
                source: e
                    .into_io_error()
                    .unwrap_or_else(|| std::io::Error::other("walk error")),
            }
        })?;
        if !entry.file_type().is_file() || !is_source_file(entry.path()) {
            continue;
        }
        let rel = relative_path(corpus_root, entry.path());
        let bytes = std::fs::read(entry.path()).map_err(io_err(entry.path()))?;
        let Ok(text) = String::from_utf8(bytes) else {
            skipped.push(SkippedFile {
                path: rel,
                line: 1,
                column: 1,
                message: "not valid UTF-8".into(),
            });
            continue;
        };
        match extract_components(&text, &rel) {
            Ok(found) => records.extend(found),
            Err(ExtractError::UnparsableSource {
                line,
                column,
                message,
            }) => skipped.push(SkippedFile {
                path: rel,
                line,
                column,
                message,
            }),
            Err(other) => skipped.push(SkippedFile {
                path: rel,
                line: 1,
                column: 1,
                message: other.to_string(),
            }),
        }
    }
    if records.is_empty() {
        return Err(IndexError::EmptyCorpus(corpus_root.to_path_buf()));
    }
    let root_label = corpus_root.to_string_lossy().into_owned();
    Ok(CorpusIndex::from_records(
        &root_label,
        records,
        skipped,
        scoring,
    ))
}

fn relative_path(root: &Path, path: &Path) -> String {
    let rel = path.strip_prefix(root).unwrap_or(path);
    rel.components()
        .map(|c| c.as_os_str().to_string_lossy().into_owned())
        .collect::<Vec<_>>()
        .join("/")
}
