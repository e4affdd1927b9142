//! Interface-driven search over C++ component corpora, with test-based
//! filtering of the retrieved candidates.
//!
//! The pipeline pieces are split by concern:
//!
//! - [`model`]: domain values (type names, signatures, interfaces, records)
//! - [`extract`]: tolerant parsing of classes and of test sources
//! - [`mql`]: the interface query language
//! - [`index`]: inverted + signature index, ranking, persistence
//! - [`harvest`]: test-driven search with sandboxed execution
//! - [`analysis`]: metrics and group pictures
//! - [`workspace`]: the proactive agent, missing types, dependency resolution

pub mod analysis;
pub mod extract;
pub mod harvest;
pub mod index;
pub mod lexer;
pub mod model;
pub mod mql;
pub mod tokenize;
pub mod workspace;

pub use model::{
    canonicalize_signature, interface_fingerprint, CanonicalSignature, ComponentId, ComponentKind,
    ComponentRecord, InterfaceSpec, MethodSignature, ReturnType, TypeName,
};
pub use tokenize::tokenize_identifier;

/// Label recorded in index manifests for the language this build parses and executes.
pub const SUBJECT_LANGUAGE: &str = "cpp";
