//! The interface query language.
//!
//! ```text
//! query   := namePat [ "(" method { ";" method } ")" ] { filter }
//! method  := namePat "(" [ typePat { "," typePat } [ "," "..." ] | "..." ] ")" [ ":" typePat ]
//! filter  := key ":" word            key ∈ {kind, lang, path}
//! namePat := typePat := [A-Za-z0-9_*]+
//! ```
//!
//! Whitespace is insignificant between tokens. A method without `:` matches any
//! return type.

mod matcher;
mod parser;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

pub use matcher::{glob_match, match_interface, type_compatible, MatchResult, MethodPair};
pub use parser::{parse_mql, SyntaxError};

/// Version of the query grammar, recorded in index manifests.
pub const MQL_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterKey {
    Kind,
    Lang,
    Path,
}

impl FilterKey {
    pub const ALL: [FilterKey; 3] = [FilterKey::Kind, FilterKey::Lang, FilterKey::Path];

    pub fn as_str(&self) -> &'static str {
        match self {
            FilterKey::Kind => "kind",
            FilterKey::Lang => "lang",
            FilterKey::Path => "path",
        }
    }

    pub fn from_word(word: &str) -> Option<Self> {
        FilterKey::ALL.into_iter().find(|k| k.as_str() == word)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ParamPattern {
    Type(String),
    /// Any number of further parameters; only valid in last position.
    Ellipsis,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ReturnPattern {
    Any,
    Type(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MethodPattern {
    pub name: String,
    pub params: Vec<ParamPattern>,
    pub returns: ReturnPattern,
}

impl MethodPattern {
    pub fn new(name: impl Into<String>, params: Vec<ParamPattern>, returns: ReturnPattern) -> Self {
        Self {
            name: name.into(),
            params,
            returns,
        }
    }

    pub fn has_ellipsis(&self) -> bool {
        matches!(self.params.last(), Some(ParamPattern::Ellipsis))
    }

    /// Parameters before any trailing ellipsis.
    pub fn fixed_params(&self) -> impl Iterator<Item = &str> {
        self.params.iter().filter_map(|p| match p {
            ParamPattern::Type(t) => Some(t.as_str()),
            ParamPattern::Ellipsis => None,
        })
    }
}

impl fmt::Display for MethodPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let params: Vec<&str> = self
            .params
            .iter()
            .map(|p| match p {
                ParamPattern::Type(t) => t.as_str(),
                ParamPattern::Ellipsis => "...",
            })
            .collect();
        write!(f, "{}({})", self.name, params.join(","))?;
        if let ReturnPattern::Type(t) = &self.returns {
            write!(f, ":{t}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MqlQuery {
    pub class_name: String,
    pub methods: Vec<MethodPattern>,
    #[serde(default)]
    pub filters: BTreeMap<FilterKey, String>,
}

impl MqlQuery {
    pub fn new(class_name: impl Into<String>) -> Self {
        Self {
            class_name: class_name.into(),
            methods: Vec::new(),
            filters: BTreeMap::new(),
        }
    }

    pub fn with_method(mut self, m: MethodPattern) -> Self {
        self.methods.push(m);
        self
    }

    pub fn with_filter(mut self, key: FilterKey, value: impl Into<String>) -> Self {
        self.filters.insert(key, value.into());
        self
    }
}

/// Canonical single-line rendering; `parse_mql(&print_mql(q)) == Ok(q)`.
pub fn print_mql(q: &MqlQuery) -> String {
    q.to_string()
}

impl fmt::Display for MqlQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.class_name)?;
        if !self.methods.is_empty() {
            let methods: Vec<String> = self.methods.iter().map(ToString::to_string).collect();
            write!(f, "({})", methods.join("; "))?;
        }
        for (k, v) in &self.filters {
            write!(f, " {}:{v}", k.as_str())?;
        }
        Ok(())
    }
}
