//! Domain values shared across the crate.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analysis::MetricsReport;

/// Content-derived identifier of an indexed component.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ComponentId(String);

impl ComponentId {
    /// Number of leading hex characters of the content hash used as the base id.
    pub const PREFIX_LEN: usize = 16;

    pub fn new(value: impl Into<String>) -> Self {
        Self(value.into())
    }

    /// Base id for a content hash (its first 16 hex characters).
    pub fn from_content_hash(hash: &str) -> Self {
        Self(hash.chars().take(Self::PREFIX_LEN).collect())
    }

    /// Id with a suffix derived from the component's location, used when the base
    /// id is already taken by another component.
    pub fn disambiguated(hash: &str, path: &str, class_name: &str) -> Self {
        let location = sha256_hex(format!("{path}#{class_name}").as_bytes());
        Self(format!(
            "{}-{}",
            &hash[..Self::PREFIX_LEN.min(hash.len())],
            &location[..8]
        ))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ComponentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A possibly qualified type name. The qualifier is stored dot-separated
/// (`std::string` is `{qualifier: "std", simple: "string"}`).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TypeName {
    pub simple: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qualifier: Option<String>,
}

impl TypeName {
    pub fn simple(name: impl Into<String>) -> Self {
        Self {
            simple: name.into(),
            qualifier: None,
        }
    }

    pub fn qualified(qualifier: impl Into<String>, name: impl Into<String>) -> Self {
        let qualifier = qualifier.into();
        Self {
            simple: name.into(),
            qualifier: if qualifier.is_empty() {
                None
            } else {
                Some(qualifier)
            },
        }
    }

    /// Parses either `a.b.C` or `a::b::C`.
    pub fn parse(text: &str) -> Self {
        let normalized = text.trim().replace("::", ".");
        match normalized.rsplit_once('.') {
            Some((q, s)) => Self::qualified(q.trim_start_matches('.'), s),
            None => Self::simple(normalized),
        }
    }

    /// Dotted full name (`std.string`).
    pub fn full_name(&self) -> String {
        match &self.qualifier {
            Some(q) => format!("{q}.{}", self.simple),
            None => self.simple.clone(),
        }
    }

    /// Spelling in the subject language (`std::string`).
    pub fn to_cpp(&self) -> String {
        match &self.qualifier {
            Some(q) => format!("{}::{}", q.replace('.', "::"), self.simple),
            None => self.simple.clone(),
        }
    }
}

impl fmt::Display for TypeName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_cpp())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ReturnType {
    Void,
    Unknown,
    Type(TypeName),
}

impl ReturnType {
    /// Lowercased simple name used for matching; `*` for unknown.
    pub fn canonical(&self) -> String {
        match self {
            ReturnType::Void => "void".to_string(),
            ReturnType::Unknown => "*".to_string(),
            ReturnType::Type(t) => t.simple.to_lowercase(),
        }
    }
}

impl fmt::Display for ReturnType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ReturnType::Void => f.write_str("void"),
            ReturnType::Unknown => f.write_str("?"),
            ReturnType::Type(t) => t.fmt(f),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MethodSignature {
    pub name: String,
    pub params: Vec<TypeName>,
    pub returns: ReturnType,
    #[serde(default)]
    pub is_constructor: bool,
}

impl MethodSignature {
    pub fn method(name: impl Into<String>, params: Vec<TypeName>, returns: ReturnType) -> Self {
        Self {
            name: name.into(),
            params,
            returns,
            is_constructor: false,
        }
    }

    pub fn constructor(class: &TypeName, params: Vec<TypeName>) -> Self {
        Self {
            name: class.simple.clone(),
            params,
            returns: ReturnType::Type(class.clone()),
            is_constructor: true,
        }
    }

    /// True when both have the same name and parameter list.
    pub fn same_shape(&self, other: &MethodSignature) -> bool {
        self.name == other.name && self.params == other.params
    }
}

impl fmt::Display for MethodSignature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let params: Vec<String> = self.params.iter().map(TypeName::to_cpp).collect();
        write!(f, "{}({})", self.name, params.join(","))?;
        if !self.is_constructor {
            write!(f, ":{}", self.returns)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ComponentKind {
    #[serde(alias = "class")]
    Class,
    #[serde(alias = "interface")]
    Interface,
    #[serde(alias = "test")]
    Test,
}

impl ComponentKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ComponentKind::Class => "class",
            ComponentKind::Interface => "interface",
            ComponentKind::Test => "test",
        }
    }
}

impl FromStr for ComponentKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "class" => Ok(ComponentKind::Class),
            "interface" => Ok(ComponentKind::Interface),
            "test" => Ok(ComponentKind::Test),
            other => Err(format!("unknown component kind `{other}`")),
        }
    }
}

impl fmt::Display for ComponentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The interface-defining part of a component.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct InterfaceSpec {
    pub class_name: TypeName,
    pub methods: Vec<MethodSignature>,
    pub kind: ComponentKind,
}

impl InterfaceSpec {
    pub fn new(class_name: TypeName, kind: ComponentKind) -> Self {
        Self {
            class_name,
            methods: Vec::new(),
            kind,
        }
    }

    /// Adds a signature unless one with the same name and parameters exists.
    /// Returns whether it was added.
    pub fn push_method(&mut self, sig: MethodSignature) -> bool {
        if self.methods.iter().any(|m| m.same_shape(&sig)) {
            return false;
        }
        self.methods.push(sig);
        true
    }

    pub fn constructors(&self) -> impl Iterator<Item = &MethodSignature> {
        self.methods.iter().filter(|m| m.is_constructor)
    }

    pub fn plain_methods(&self) -> impl Iterator<Item = &MethodSignature> {
        self.methods.iter().filter(|m| !m.is_constructor)
    }
}

/// 1-based inclusive line range of a declaration inside its file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SourceSpan {
    pub start_line: usize,
    pub end_line: usize,
}

/// One indexed code unit. `source` is the full text of the file that declares it;
/// `span` locates the type declaration inside that file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ComponentRecord {
    pub id: ComponentId,
    pub interface: InterfaceSpec,
    pub source: String,
    pub path: String,
    pub span: SourceSpan,
    pub metrics: MetricsReport,
    pub content_hash: String,
}

impl ComponentRecord {
    /// The text of the type declaration alone.
    pub fn declaration(&self) -> String {
        self.source
            .lines()
            .skip(self.span.start_line.saturating_sub(1))
            .take(self.span.end_line + 1 - self.span.start_line.max(1))
            .collect::<Vec<_>>()
            .join("\n")
    }

    /// Key under which byte-identical copies of the same declaration collapse.
    pub fn dedupe_key(&self) -> (&str, &str) {
        (&self.content_hash, &self.interface.class_name.simple)
    }
}

/// Case-folded, qualifier-free form of a signature used for matching.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CanonicalSignature {
    pub name: String,
    pub arity: usize,
    pub param_simple: Vec<String>,
    pub return_simple: String,
}

impl CanonicalSignature {
    /// A method signature whose canonical form is `self`.
    pub fn to_signature(&self) -> MethodSignature {
        let returns = match self.return_simple.as_str() {
            "*" => ReturnType::Unknown,
            "void" => ReturnType::Void,
            other => ReturnType::Type(TypeName::simple(other)),
        };
        MethodSignature::method(
            self.name.clone(),
            self.param_simple.iter().map(TypeName::simple).collect(),
            returns,
        )
    }
}

impl fmt::Display for CanonicalSignature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}({}):{}",
            self.name,
            self.param_simple.join(","),
            self.return_simple
        )
    }
}

pub fn canonicalize_signature(sig: &MethodSignature) -> CanonicalSignature {
    CanonicalSignature {
        name: sig.name.to_lowercase(),
        arity: sig.params.len(),
        param_simple: sig.params.iter().map(|p| p.simple.to_lowercase()).collect(),
        return_simple: sig.returns.canonical(),
    }
}

/// Digest of an interface that ignores method order, bodies and comments.
pub fn interface_fingerprint(iface: &InterfaceSpec) -> String {
    let mut lines: Vec<String> = iface
        .methods
        .iter()
        .map(|m| canonicalize_signature(m).to_string())
        .collect();
    lines.sort();
    let mut text = iface.class_name.simple.to_lowercase();
    for line in lines {
        text.push('\n');
        text.push_str(&line);
    }
    sha256_hex(text.as_bytes())
}

pub(crate) fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Canonical signature set of an interface, constructors excluded.
pub fn canonical_method_set(iface: &InterfaceSpec) -> BTreeSet<CanonicalSignature> {
    iface.plain_methods().map(canonicalize_signature).collect()
}
