//! Watching a project for interface changes, finding unresolved types, and
//! resolving them against an index.

mod agent;
mod resolve;

use std::collections::{BTreeSet, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::extract::types::{is_builtin_type, parse_type};
use crate::extract::{find_type_decls, lex_source, ExtractError, TypeDecl};
use crate::lexer::{matching_close, split_top_level_commas, Token, TokenKind};
use crate::model::{interface_fingerprint, sha256_hex, InterfaceSpec, TypeName};

pub use agent::{watch_project, AgentConfig, AgentEvent, AgentHandle, Recommendation, Trigger};
pub use resolve::{
    resolve_dependencies, Heuristic, ResolutionPlan, ResolutionStep, ResolvedBy, DEFAULT_DEPTH_CAP,
};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ChangeDetection {
    pub changed: bool,
    pub new_fingerprint: Option<String>,
    /// Interface of the first type declared in the source.
    pub interface: Option<InterfaceSpec>,
}

/// Fingerprint over every type declared in the file, plus the first type's interface.
fn file_fingerprint(source: &str) -> Option<(String, InterfaceSpec)> {
    let tokens = lex_source(source).ok()?;
    let decls = find_type_decls(&tokens).ok()?;
    let first = decls.first()?.interface.clone();
    let mut prints: Vec<String> = decls
        .iter()
        .map(|d| interface_fingerprint(&d.interface))
        .collect();
    prints.sort();
    Some((sha256_hex(prints.join("\n").as_bytes()), first))
}

/// Whether `new_source` changes the interface-defining part relative to `old_fingerprint`.
/// Unparsable sources never count as a change; the old fingerprint is kept.
pub fn detect_significant_change(
    old_fingerprint: Option<&str>,
    new_source: &str,
) -> ChangeDetection {
    match file_fingerprint(new_source) {
        Some((fp, iface)) => ChangeDetection {
            changed: old_fingerprint != Some(fp.as_str()),
            new_fingerprint: Some(fp),
            interface: Some(iface),
        },
        None => ChangeDetection {
            changed: false,
            new_fingerprint: old_fingerprint.map(str::to_string),
            interface: None,
        },
    }
}

/// A member invoked on a value of some type.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MemberUse {
    pub name: String,
    pub arity: usize,
}

const DECL_PREFIX_WORDS: &[&str] = &[
    "static",
    "virtual",
    "inline",
    "explicit",
    "constexpr",
    "mutable",
    "extern",
    "const",
    "volatile",
    "typename",
    "friend",
];

fn starts_declaration(tokens: &[Token], i: usize) -> bool {
    match i.checked_sub(1).map(|p| &tokens[p]) {
        None => true,
        Some(prev) if prev.kind == TokenKind::Directive => true,
        Some(prev) if prev.kind == TokenKind::Punct => {
            matches!(prev.text.as_str(), ";" | "{" | "}" | "(" | "," | ":")
        }
        Some(prev) => prev.is_ident() && DECL_PREFIX_WORDS.contains(&prev.text.as_str()),
    }
}

fn is_macro_like(name: &str) -> bool {
    name.len() > 1
        && name
            .chars()
            .all(|c| c.is_ascii_uppercase() || c.is_ascii_digit() || c == '_')
}

struct Scan {
    /// Referenced type names in first-occurrence order.
    types: Vec<TypeName>,
    /// Declared variables and their types.
    variables: HashMap<String, TypeName>,
}

fn scan_references(tokens: &[Token]) -> Scan {
    let mut types = Vec::new();
    let mut variables = HashMap::new();
    let mut seen = HashSet::new();
    let mut push = |t: TypeName, types: &mut Vec<TypeName>| {
        if seen.insert(t.full_name()) {
            types.push(t);
        }
    };
    for i in 0..tokens.len() {
        let t = &tokens[i];
        if t.kind == TokenKind::Directive {
            continue;
        }
        let prev = i.checked_sub(1).map(|p| &tokens[p]);
        if prev.is_some_and(|p| p.is("new")) {
            if let Some((ty, _)) = parse_type(tokens, i) {
                for n in ty.all_names() {
                    push(n, &mut types);
                }
            }
            continue;
        }
        if !(t.is_ident() || t.is("::")) {
            continue;
        }
        if starts_declaration(tokens, i) {
            if let Some((ty, next)) = parse_type(tokens, i) {
                if tokens
                    .get(next)
                    .is_some_and(|n| n.is_ident() && !crate::lexer::is_keyword(&n.text))
                    || tokens.get(next).is_some_and(|n| n.is("operator"))
                {
                    for n in ty.all_names() {
                        push(n, &mut types);
                    }
                    variables.insert(tokens[next].text.clone(), ty.name.clone());
                    continue;
                }
            }
        }
        let after_member = prev.is_some_and(|p| p.is(".") || p.is("->") || p.is("::"));
        if t.is_ident()
            && !after_member
            && t.text.starts_with(|c: char| c.is_ascii_uppercase())
            && !is_macro_like(&t.text)
            && tokens
                .get(i + 1)
                .is_some_and(|n| n.is("(") || n.is("{") || n.is("::"))
        {
            push(TypeName::simple(t.text.clone()), &mut types);
        }
    }
    Scan { types, variables }
}

/// Names declared by the source itself: types (nested included), template
/// parameters, namespaces and member functions.
fn declared_names(tokens: &[Token], decls: &[TypeDecl]) -> HashSet<String> {
    let mut names = HashSet::new();
    for d in decls {
        names.insert(d.interface.class_name.simple.clone());
        names.extend(d.nested.iter().cloned());
        names.extend(d.interface.methods.iter().map(|m| m.name.clone()));
    }
    for (i, t) in tokens.iter().enumerate() {
        let next = tokens.get(i + 1);
        if (t.is("namespace")
            || t.is("typename")
            || t.is("class")
            || t.is("struct")
            || t.is("enum")
            || t.is("using"))
            && next.is_some_and(|n| n.is_ident())
        {
            names.insert(next.map(|n| n.text.clone()).unwrap_or_default());
        }
        // Free function definitions: `Type name(...) {`
        if t.is_ident() && next.is_some_and(|n| n.is("(")) && i > 0 && tokens[i - 1].is_ident() {
            if let Some(close) = matching_close(tokens, i + 1) {
                if tokens
                    .get(close + 1)
                    .is_some_and(|n| n.is("{") || n.is("const"))
                {
                    names.insert(t.text.clone());
                }
            }
        }
    }
    names
}

fn referenced_types(source: &str) -> Result<Vec<TypeName>, ExtractError> {
    let tokens = lex_source(source)?;
    let decls = find_type_decls(&tokens)?;
    let declared = declared_names(&tokens, &decls);
    Ok(scan_references(&tokens)
        .types
        .into_iter()
        .filter(|t| !is_builtin_type(t) && !declared.contains(&t.simple) && t.simple != "auto")
        .collect())
}

/// Types the source refers to that neither it, the workspace nor the language provides.
pub fn find_missing_types(
    source: &str,
    workspace_types: &BTreeSet<TypeName>,
) -> Result<Vec<TypeName>, ExtractError> {
    let known: HashSet<&str> = workspace_types.iter().map(|t| t.simple.as_str()).collect();
    Ok(referenced_types(source)?
        .into_iter()
        .filter(|t| !known.contains(t.simple.as_str()))
        .collect())
}

/// Members invoked on values of type `type_simple`, through variables declared
/// with that type or through `Type::member(...)`, in first-occurrence order.
pub fn invoked_members(source: &str, type_simple: &str) -> Result<Vec<MemberUse>, ExtractError> {
    let tokens = lex_source(source)?;
    let scan = scan_references(&tokens);
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for i in 0..tokens.len().saturating_sub(3) {
        let recv = &tokens[i];
        if !recv.is_ident() || (i > 0 && (tokens[i - 1].is(".") || tokens[i - 1].is("->"))) {
            continue;
        }
        let typed = if tokens[i + 1].is("::") {
            recv.text == type_simple
        } else if tokens[i + 1].is(".") || tokens[i + 1].is("->") {
            scan.variables
                .get(&recv.text)
                .is_some_and(|t| t.simple == type_simple)
        } else {
            false
        };
        if !typed || !tokens[i + 2].is_ident() || !tokens[i + 3].is("(") {
            continue;
        }
        let Some(close) = matching_close(&tokens, i + 3) else {
            continue;
        };
        let arity = if close == i + 4 {
            0
        } else {
            split_top_level_commas(&tokens, i + 4, close).len()
        };
        let m = MemberUse {
            name: tokens[i + 2].text.clone(),
            arity,
        };
        if seen.insert(m.clone()) {
            out.push(m);
        }
    }
    Ok(out)
}

/// Simple names of every type declared in `source`, nested ones included.
pub fn declared_types(source: &str) -> Vec<TypeName> {
    let Ok(tokens) = lex_source(source) else {
        return Vec::new();
    };
    let Ok(decls) = find_type_decls(&tokens) else {
        return Vec::new();
    };
    let mut out = Vec::new();
    for d in decls {
        out.push(d.interface.class_name.clone());
        out.extend(d.nested.into_iter().map(TypeName::simple));
    }
    out
}
