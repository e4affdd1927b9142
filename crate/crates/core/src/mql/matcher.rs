use serde::{Deserialize, Serialize};

use super::{MethodPattern, MqlQuery, ReturnPattern};
use crate::model::{InterfaceSpec, MethodSignature, ReturnType, TypeName};

/// One queried method paired with the candidate method it was assigned to.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MethodPair {
    /// Index into the query's method list.
    pub query_index: usize,
    /// Index into the candidate interface's method list.
    pub candidate_index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MatchResult {
    pub matched: bool,
    pub score: f64,
    pub mapping: Vec<MethodPair>,
}

/// Case-insensitive glob where `*` matches any (possibly empty) run of characters.
pub fn glob_match(pattern: &str, text: &str) -> bool {
    let p: Vec<char> = pattern.chars().flat_map(char::to_lowercase).collect();
    let t: Vec<char> = text.chars().flat_map(char::to_lowercase).collect();
    let (mut pi, mut ti) = (0, 0);
    let mut backtrack: Option<(usize, usize)> = None;
    while ti < t.len() {
        if pi < p.len() && p[pi] == '*' {
            backtrack = Some((pi, ti));
            pi += 1;
        } else if pi < p.len() && p[pi] == t[ti] {
            pi += 1;
            ti += 1;
        } else if let Some((bp, bt)) = backtrack {
            pi = bp + 1;
            ti = bt + 1;
            backtrack = Some((bp, bt + 1));
        } else {
            return false;
        }
    }
    p[pi..].iter().all(|c| *c == '*')
}

/// Whether a type pattern accepts a candidate type. Only simple names are
/// compared; a wildcard candidate type (unparseable in the source) accepts any pattern.
pub fn type_compatible(pattern: &str, ty: &TypeName) -> bool {
    ty.simple == "*" || glob_match(pattern, &ty.simple)
}

/// A candidate's references to its own class stand for the queried class,
/// since adaptation renames them.
struct SelfType<'a> {
    candidate: &'a str,
    queried: &'a str,
}

impl SelfType<'_> {
    fn accepts(&self, pattern: &str, ty: &TypeName) -> bool {
        type_compatible(pattern, ty)
            || (ty.simple.eq_ignore_ascii_case(self.candidate)
                && pattern.eq_ignore_ascii_case(self.queried))
    }
}

fn return_compatible(pattern: &ReturnPattern, returns: &ReturnType, this: &SelfType) -> bool {
    match (pattern, returns) {
        (ReturnPattern::Any, _) | (_, ReturnType::Unknown) => true,
        (ReturnPattern::Type(p), ReturnType::Void) => glob_match(p, "void"),
        (ReturnPattern::Type(p), ReturnType::Type(t)) => this.accepts(p, t),
    }
}

fn method_compatible(pattern: &MethodPattern, m: &MethodSignature, this: &SelfType) -> bool {
    if !glob_match(&pattern.name, &m.name) {
        return false;
    }
    let fixed: Vec<&str> = pattern.fixed_params().collect();
    let arity_ok = if pattern.has_ellipsis() {
        m.params.len() >= fixed.len()
    } else {
        m.params.len() == fixed.len()
    };
    arity_ok
        && fixed.iter().zip(&m.params).all(|(p, t)| this.accepts(p, t))
        && return_compatible(&pattern.returns, &m.returns, this)
}

/// Assigns queried methods to distinct candidate methods (constructors excluded).
///
/// Queried methods are placed in query order, each taking the first compatible
/// candidate in declaration order; when that candidate is taken, the earlier
/// assignment is moved along an alternating path if one exists. The size of
/// the assignment is therefore maximal and does not depend on method order.
pub fn match_interface(q: &MqlQuery, iface: &InterfaceSpec) -> MatchResult {
    if q.methods.is_empty() {
        let matched = glob_match(&q.class_name, &iface.class_name.simple);
        return MatchResult {
            matched,
            score: if matched { 1.0 } else { 0.0 },
            mapping: Vec::new(),
        };
    }

    let this = SelfType {
        candidate: &iface.class_name.simple,
        queried: &q.class_name,
    };
    let candidates: Vec<usize> = iface
        .methods
        .iter()
        .enumerate()
        .filter(|(_, m)| !m.is_constructor)
        .map(|(i, _)| i)
        .collect();
    let compatible: Vec<Vec<usize>> = q
        .methods
        .iter()
        .map(|p| {
            candidates
                .iter()
                .enumerate()
                .filter(|(_, ci)| method_compatible(p, &iface.methods[**ci], &this))
                .map(|(slot, _)| slot)
                .collect()
        })
        .collect();

    let mut owner: Vec<Option<usize>> = vec![None; candidates.len()];
    for qi in 0..q.methods.len() {
        let mut seen = vec![false; candidates.len()];
        augment(qi, &compatible, &mut owner, &mut seen);
    }

    let mut mapping: Vec<MethodPair> = owner
        .iter()
        .enumerate()
        .filter_map(|(slot, o)| {
            o.map(|qi| MethodPair {
                query_index: qi,
                candidate_index: candidates[slot],
            })
        })
        .collect();
    mapping.sort_by_key(|p| p.query_index);
    let score = mapping.len() as f64 / q.methods.len() as f64;
    MatchResult {
        matched: mapping.len() == q.methods.len(),
        score,
        mapping,
    }
}

fn augment(
    qi: usize,
    compatible: &[Vec<usize>],
    owner: &mut [Option<usize>],
    seen: &mut [bool],
) -> bool {
    for &slot in &compatible[qi] {
        if seen[slot] {
            continue;
        }
        seen[slot] = true;
        let free = match owner[slot] {
            None => true,
            Some(other) => augment(other, compatible, owner, seen),
        };
        if free {
            owner[slot] = Some(qi);
            return true;
        }
    }
    false
}
