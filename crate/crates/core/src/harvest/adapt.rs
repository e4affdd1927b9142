use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lexer::{lex, matching_close, Token, TokenKind};
use crate::model::ReturnType;
use crate::model::{ComponentRecord, InterfaceSpec, MethodSignature};
use crate::mql::{MethodPattern, MqlQuery, ParamPattern, ReturnPattern};

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE", tag = "kind")]
pub enum AdaptError {
    #[error(
        "renaming to `{name}` would collide with an identifier already declared in the candidate"
    )]
    Collision { name: String },
    #[error("candidate has no constructor taking {arity} argument(s)")]
    MissingConstructor { arity: usize },
    #[error("candidate source cannot be tokenized: {message}")]
    Unparsable { message: String },
}

/// The query a search for `iface` runs: class simple name, one pattern per
/// non-constructor method, unknown returns left open.
pub fn query_from_interface(iface: &InterfaceSpec) -> MqlQuery {
    let mut q = MqlQuery::new(iface.class_name.simple.clone());
    for m in iface.plain_methods() {
        q.methods.push(method_pattern(m));
    }
    q
}

fn method_pattern(m: &MethodSignature) -> MethodPattern {
    MethodPattern::new(
        m.name.clone(),
        m.params
            .iter()
            .map(|p| ParamPattern::Type(p.simple.clone()))
            .collect(),
        match &m.returns {
            ReturnType::Unknown => ReturnPattern::Any,
            ReturnType::Void => ReturnPattern::Type("void".into()),
            ReturnType::Type(t) => ReturnPattern::Type(t.simple.clone()),
        },
    )
}

/// Rewrites the candidate so that it declares `iface.class_name` at global scope.
///
/// Every occurrence of the candidate's class identifier is renamed, namespace
/// wrappers are removed together with `using namespace` directives and
/// qualifications naming them, and every constructor the test uses must exist
/// with the same number of arguments (a class without declared constructors
/// only offers the default one).
pub fn adapt_candidate(
    candidate: &ComponentRecord,
    iface: &InterfaceSpec,
) -> Result<String, AdaptError> {
    let source = &candidate.source;
    let tokens = lex(source).map_err(|e| AdaptError::Unparsable { message: e.message })?;
    let from = candidate.interface.class_name.simple.as_str();
    let to = iface.class_name.simple.as_str();

    if from != to
        && tokens
            .iter()
            .any(|t| t.kind == TokenKind::Ident && t.text == to)
    {
        return Err(AdaptError::Collision {
            name: to.to_string(),
        });
    }

    let offered: Vec<usize> = candidate
        .interface
        .constructors()
        .map(|c| c.params.len())
        .collect();
    for required in iface.constructors() {
        let arity = required.params.len();
        let copy = arity == 1 && required.params[0].simple == to;
        let ok = copy
            || if offered.is_empty() {
                arity == 0
            } else {
                offered.contains(&arity)
            };
        if !ok {
            return Err(AdaptError::MissingConstructor { arity });
        }
    }

    let mut edits: Vec<(usize, usize, String)> = Vec::new();
    let namespaces = namespace_edits(&tokens, &mut edits);
    for (i, t) in tokens.iter().enumerate() {
        if t.kind != TokenKind::Ident {
            continue;
        }
        if namespaces.contains(&t.text)
            && tokens.get(i + 1).is_some_and(|n| n.is("::"))
            && !(i > 0 && tokens[i - 1].is("::"))
            && !(i > 0 && tokens[i - 1].is("namespace"))
        {
            edits.push((t.start, tokens[i + 1].end, String::new()));
        } else if t.text == from && from != to {
            edits.push((t.start, t.end, to.to_string()));
        }
    }
    Ok(apply_edits(source, edits))
}

/// Records edits removing namespace blocks' braces and `using namespace` lines.
/// Returns the stripped namespace names.
fn namespace_edits(tokens: &[Token], edits: &mut Vec<(usize, usize, String)>) -> Vec<String> {
    let mut names = Vec::new();
    let mut i = 0;
    while i < tokens.len() {
        let t = &tokens[i];
        if !(t.is_ident() && t.text == "namespace") {
            i += 1;
            continue;
        }
        if i > 0 && tokens[i - 1].is("using") {
            let end = (i..tokens.len())
                .find(|&j| tokens[j].is(";"))
                .unwrap_or(tokens.len() - 1);
            edits.push((tokens[i - 1].start, tokens[end].end, String::new()));
            i = end + 1;
            continue;
        }
        let mut j = i + 1;
        while tokens.get(j).is_some_and(|t| t.is_ident() || t.is("::")) {
            if tokens[j].is_ident() {
                names.push(tokens[j].text.clone());
            }
            j += 1;
        }
        if tokens.get(j).is_some_and(|t| t.is("{")) {
            if let Some(close) = matching_close(tokens, j) {
                edits.push((t.start, tokens[j].end, String::new()));
                edits.push((tokens[close].start, tokens[close].end, String::new()));
            }
        }
        i = j + 1;
    }
    names
}

pub(crate) fn apply_edits(source: &str, mut edits: Vec<(usize, usize, String)>) -> String {
    edits.sort_by_key(|e| std::cmp::Reverse(e.0));
    let mut out = source.to_string();
    for (start, end, text) in edits {
        out.replace_range(start..end, &text);
    }
    out
}
