//! Inferring the interface a test case exercises.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::types::{is_builtin_type, parse_type};
use super::{find_type_decls, lex_source, ExtractError};
use crate::lexer::{matching_close, split_top_level_commas, Token, TokenKind};
use crate::model::{ComponentKind, InterfaceSpec, MethodSignature, ReturnType, TypeName};

/// Marker comment naming the class under test explicitly.
pub const CUT_MARKER: &str = "//$ CUT: ";

fn marker_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"//\$ CUT: ([A-Za-z_][A-Za-z0-9_]*)").expect("valid regex"))
}

/// An executable test together with the interface it was found to exercise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TestCaseSpec {
    pub source: String,
    pub inferred_interface: InterfaceSpec,
    pub cut_name: TypeName,
    pub assertions: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum LiteralForm {
    Integer,
    Decimal,
    String,
    Boolean,
    Char,
    Null,
    Constructor,
    Variable,
}

/// One row of the argument type inference table. `inferred_type` is `None` for
/// forms whose type depends on context (constructed or declared type) or is unknown.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LiteralTypeRule {
    pub literal_form: LiteralForm,
    pub inferred_type: Option<TypeName>,
}

pub fn literal_rule(form: LiteralForm) -> LiteralTypeRule {
    let inferred_type = match form {
        LiteralForm::Integer => Some(TypeName::simple("int")),
        LiteralForm::Decimal => Some(TypeName::simple("double")),
        LiteralForm::String => Some(TypeName::qualified("std", "string")),
        LiteralForm::Boolean => Some(TypeName::simple("bool")),
        LiteralForm::Char => Some(TypeName::simple("char")),
        LiteralForm::Null | LiteralForm::Constructor | LiteralForm::Variable => None,
    };
    LiteralTypeRule {
        literal_form: form,
        inferred_type,
    }
}

/// Classifies a single-expression token run and infers its type through the
/// literal table. `variables` supplies declared types for the VARIABLE form.
/// Returns `None` for expressions outside the table (operators, calls).
pub fn classify_expression(
    tokens: &[Token],
    variables: &HashMap<String, TypeName>,
) -> Option<(LiteralForm, Option<TypeName>)> {
    let mut toks = tokens;
    if toks.len() >= 2 && (toks[0].is("-") || toks[0].is("+")) {
        toks = &toks[1..];
        if !matches!(toks[0].kind, TokenKind::Int | TokenKind::Float) {
            return None;
        }
    }
    let first = toks.first()?;
    let form = if toks.len() == 1 {
        match first.kind {
            TokenKind::Int => LiteralForm::Integer,
            TokenKind::Float => LiteralForm::Decimal,
            TokenKind::Str => LiteralForm::String,
            TokenKind::Char => LiteralForm::Char,
            TokenKind::Ident if first.is("true") || first.is("false") => LiteralForm::Boolean,
            TokenKind::Ident if first.is("nullptr") || first.is("NULL") => LiteralForm::Null,
            TokenKind::Ident => {
                return Some((LiteralForm::Variable, variables.get(&first.text).cloned()));
            }
            _ => return None,
        }
    } else if toks.iter().all(|t| t.kind == TokenKind::Str) {
        // adjacent string literal concatenation
        LiteralForm::String
    } else {
        return constructed_type(toks).map(|t| (LiteralForm::Constructor, Some(t)));
    };
    Some((form, literal_rule(form).inferred_type))
}

/// `new T(...)`, `T(...)` or `T{...}` spanning exactly `toks`.
fn constructed_type(toks: &[Token]) -> Option<TypeName> {
    let start = usize::from(toks.first()?.is("new"));
    let (ty, next) = parse_type(toks, start)?;
    if is_builtin_type(&ty.name) {
        return None;
    }
    match toks.get(next) {
        None if start == 1 => Some(ty.name),
        Some(t) if t.is("(") || t.is("{") => {
            let close = matching_close(toks, next)?;
            (close + 1 == toks.len()).then_some(ty.name)
        }
        _ => None,
    }
}

/// A constructor call site in the test.
struct CtorCall {
    ty: TypeName,
    args: Vec<(usize, usize)>,
}

/// A method invocation on a variable.
struct Call {
    receiver_type: TypeName,
    name: String,
    args: Vec<(usize, usize)>,
    receiver: usize,
    close: usize,
}

const STATEMENT_STARTS: &[&str] = &[";", "{", "}", "(", ":"];

fn at_statement_start(tokens: &[Token], i: usize) -> bool {
    i == 0
        || tokens[i - 1].kind == TokenKind::Directive
        || (tokens[i - 1].kind == TokenKind::Punct
            && STATEMENT_STARTS.contains(&tokens[i - 1].text.as_str()))
}

fn arg_ranges(tokens: &[Token], open: usize, close: usize) -> Vec<(usize, usize)> {
    if open + 1 >= close {
        return Vec::new();
    }
    split_top_level_commas(tokens, open + 1, close)
}

/// Infers the class under test and the interface the test exercises.
pub fn infer_interface_from_test(test_source: &str) -> Result<TestCaseSpec, ExtractError> {
    let tokens = lex_source(test_source)?;
    let marker = test_source
        .lines()
        .find_map(|l| marker_regex().captures(l).map(|c| c[1].to_string()));

    // Types and functions the test declares itself are never the CUT.
    let local_types: HashSet<String> = find_type_decls(&tokens)
        .map(|decls| {
            decls
                .into_iter()
                .map(|d| d.interface.class_name.simple)
                .collect()
        })
        .unwrap_or_default();

    let mut variables: HashMap<String, TypeName> = HashMap::new();
    let mut ctor_calls: Vec<CtorCall> = Vec::new();
    let mut i = 0;
    while i < tokens.len() {
        let t = &tokens[i];
        if t.is("new") {
            if let Some((ty, next)) = parse_type(&tokens, i + 1) {
                if !is_builtin_type(&ty.name) {
                    let args = match tokens.get(next) {
                        Some(n) if n.is("(") || n.is("{") => matching_close(&tokens, next)
                            .map(|c| arg_ranges(&tokens, next, c))
                            .unwrap_or_default(),
                        _ => Vec::new(),
                    };
                    ctor_calls.push(CtorCall { ty: ty.name, args });
                }
                i = next;
                continue;
            }
        }
        if t.is_ident() && at_statement_start(&tokens, i) {
            if let Some((ty, next)) = parse_type(&tokens, i) {
                if let Some(name) = tokens
                    .get(next)
                    .filter(|n| n.is_ident() && !crate::lexer::is_keyword(&n.text))
                {
                    let after = tokens.get(next + 1);
                    let declares = after.is_some_and(|a| {
                        [";", ",", "(", "{", "=", ")", "["].iter().any(|p| a.is(p))
                    });
                    if declares && !ty.is_void() {
                        let user_type = !is_builtin_type(&ty.name) && !ty.indirect;
                        let mut declared = ty.name.clone();
                        match after.map(|a| a.text.as_str()) {
                            Some(";") | Some(",")
                                if user_type && !local_types.contains(&ty.name.simple) =>
                            {
                                ctor_calls.push(CtorCall {
                                    ty: ty.name.clone(),
                                    args: Vec::new(),
                                });
                            }
                            Some("(") | Some("{") => {
                                let open = next + 1;
                                if let Some(close) = matching_close(&tokens, open) {
                                    let ends_statement = tokens
                                        .get(close + 1)
                                        .is_some_and(|n| n.is(";") || n.is(","));
                                    if ends_statement
                                        && user_type
                                        && !local_types.contains(&ty.name.simple)
                                    {
                                        ctor_calls.push(CtorCall {
                                            ty: ty.name.clone(),
                                            args: arg_ranges(&tokens, open, close),
                                        });
                                    }
                                    if !ends_statement {
                                        // a function definition: not a variable
                                        i = next + 1;
                                        continue;
                                    }
                                }
                            }
                            Some("=") if ty.is_auto() => {
                                let end = expression_end(&tokens, next + 2);
                                declared = classify_expression(&tokens[next + 2..end], &variables)
                                    .and_then(|(_, t)| t)
                                    .unwrap_or_else(|| TypeName::simple("auto"));
                            }
                            _ => {}
                        }
                        variables.insert(name.text.clone(), declared);
                        i = next + 1;
                        continue;
                    }
                }
            }
        }
        // Temporary construction `T(...)` in expression position.
        if t.is_ident()
            && !crate::lexer::is_keyword(&t.text)
            && tokens.get(i + 1).is_some_and(|n| n.is("("))
            && t.text.starts_with(|c: char| c.is_ascii_uppercase())
            && !local_types.contains(&t.text)
            && i > 0
            && !is_declaration_context(&tokens[i - 1])
        {
            let ty = TypeName::simple(t.text.clone());
            if !is_builtin_type(&ty) {
                let args = matching_close(&tokens, i + 1)
                    .map(|c| arg_ranges(&tokens, i + 1, c))
                    .unwrap_or_default();
                ctor_calls.push(CtorCall { ty, args });
            }
        }
        i += 1;
    }

    let cut = match marker {
        Some(name) => TypeName::simple(name),
        None => {
            let mut counts: BTreeMap<String, (usize, usize, TypeName)> = BTreeMap::new();
            for (order, call) in ctor_calls.iter().enumerate() {
                let entry =
                    counts
                        .entry(call.ty.full_name())
                        .or_insert((0, order, call.ty.clone()));
                entry.0 += 1;
            }
            let Some(max) = counts.values().map(|(n, _, _)| *n).max() else {
                return Err(ExtractError::NoClassUnderTest);
            };
            let mut top: Vec<&(usize, usize, TypeName)> =
                counts.values().filter(|(n, _, _)| *n == max).collect();
            if top.len() > 1 {
                top.sort_by_key(|(_, order, _)| *order);
                return Err(ExtractError::AmbiguousCut {
                    candidates: top.iter().map(|(_, _, t)| t.to_cpp()).collect(),
                });
            }
            top[0].2.clone()
        }
    };

    let asserts = assertion_sites(&tokens);
    if asserts.is_empty() {
        return Err(ExtractError::NoAssertions);
    }

    let mut iface = InterfaceSpec::new(cut.clone(), ComponentKind::Class);
    let mut ctor_arities: Vec<(usize, Vec<Option<TypeName>>)> = Vec::new();
    for call in ctor_calls.iter().filter(|c| c.ty.simple == cut.simple) {
        let inferred: Vec<Option<TypeName>> = call
            .args
            .iter()
            .map(|(s, e)| classify_expression(&tokens[*s..*e], &variables).and_then(|(_, t)| t))
            .collect();
        merge_by_arity(&mut ctor_arities, inferred);
    }
    for (_, params) in ctor_arities {
        iface.push_method(MethodSignature::constructor(&cut, wildcard_params(params)));
    }

    let calls = method_calls(&tokens, &variables);
    let mut methods: Vec<(String, Vec<Option<TypeName>>, ReturnType)> = Vec::new();
    for call in calls
        .iter()
        .filter(|c| c.receiver_type.simple == cut.simple)
    {
        let params: Vec<Option<TypeName>> = call
            .args
            .iter()
            .map(|(s, e)| classify_expression(&tokens[*s..*e], &variables).and_then(|(_, t)| t))
            .collect();
        let returns = infer_return(&tokens, call, &asserts, &variables);
        match methods
            .iter_mut()
            .find(|(n, p, _)| *n == call.name && p.len() == params.len())
        {
            Some((_, known, ret)) => {
                for (k, p) in known.iter_mut().zip(params) {
                    if k.is_none() {
                        *k = p;
                    }
                }
                if *ret == ReturnType::Unknown {
                    *ret = returns;
                }
            }
            None => methods.push((call.name.clone(), params, returns)),
        }
    }
    for (name, params, returns) in methods {
        iface.push_method(MethodSignature::method(
            name,
            wildcard_params(params),
            returns,
        ));
    }

    Ok(TestCaseSpec {
        source: test_source.to_string(),
        inferred_interface: iface,
        cut_name: cut,
        assertions: asserts.len(),
    })
}

fn is_declaration_context(prev: &Token) -> bool {
    matches!(
        prev.text.as_str(),
        "." | "->" | "::" | "~" | ">" | "*" | "&"
    ) || (prev.is_ident() && !matches!(prev.text.as_str(), "return" | "throw" | "new" | "case"))
}

fn merge_by_arity(list: &mut Vec<(usize, Vec<Option<TypeName>>)>, params: Vec<Option<TypeName>>) {
    match list.iter_mut().find(|(n, _)| *n == params.len()) {
        Some((_, known)) => {
            for (k, p) in known.iter_mut().zip(params) {
                if k.is_none() {
                    *k = p;
                }
            }
        }
        None => list.push((params.len(), params)),
    }
}

/// Unknown parameter types are represented by the wildcard type `*`.
fn wildcard_params(params: Vec<Option<TypeName>>) -> Vec<TypeName> {
    params
        .into_iter()
        .map(|p| p.unwrap_or_else(|| TypeName::simple("*")))
        .collect()
}

/// End of an expression starting at `from`: the first top-level `;`, `,` or closing bracket.
fn expression_end(tokens: &[Token], from: usize) -> usize {
    let mut i = from;
    while i < tokens.len() {
        let t = &tokens[i];
        if t.is("(") || t.is("[") || t.is("{") {
            match matching_close(tokens, i) {
                Some(c) => i = c + 1,
                None => return tokens.len(),
            }
            continue;
        }
        if t.is(";") || t.is(",") || t.is(")") || t.is("]") || t.is("}") {
            return i;
        }
        i += 1;
    }
    i
}

/// `(open, close)` paren indices of each `assert(...)`, in source order.
pub(crate) fn assertion_sites(tokens: &[Token]) -> Vec<(usize, usize)> {
    tokens
        .windows(2)
        .enumerate()
        .filter(|(_, w)| w[0].is("assert") && w[0].is_ident() && w[1].is("("))
        .filter_map(|(i, _)| matching_close(tokens, i + 1).map(|c| (i + 1, c)))
        .collect()
}

fn method_calls(tokens: &[Token], variables: &HashMap<String, TypeName>) -> Vec<Call> {
    let mut calls = Vec::new();
    for i in 0..tokens.len().saturating_sub(3) {
        let recv = &tokens[i];
        if !recv.is_ident() || (i > 0 && (tokens[i - 1].is(".") || tokens[i - 1].is("->"))) {
            continue;
        }
        let Some(ty) = variables.get(&recv.text) else {
            continue;
        };
        if !(tokens[i + 1].is(".") || tokens[i + 1].is("->")) {
            continue;
        }
        let name = &tokens[i + 2];
        if !name.is_ident() || !tokens[i + 3].is("(") {
            continue;
        }
        let Some(close) = matching_close(tokens, i + 3) else {
            continue;
        };
        calls.push(Call {
            receiver_type: ty.clone(),
            name: name.text.clone(),
            args: arg_ranges(tokens, i + 3, close),
            receiver: i,
            close,
        });
    }
    calls
}

const COMPARISONS: &[&str] = &["==", "!=", "<", ">", "<=", ">="];

/// Return type from the call's context: a declaration or assignment target, or
/// the other operand of a comparison inside an assertion. A call that is the
/// whole assertion condition returns `bool`.
fn infer_return(
    tokens: &[Token],
    call: &Call,
    asserts: &[(usize, usize)],
    variables: &HashMap<String, TypeName>,
) -> ReturnType {
    let (s, e) = (call.receiver, call.close);
    let whole_rhs = tokens.get(e + 1).is_some_and(|t| t.is(";"));
    if whole_rhs && s >= 2 && tokens[s - 1].is("=") && tokens[s - 2].is_ident() {
        if let Some(t) = variables.get(&tokens[s - 2].text) {
            if t.simple != "auto" {
                return ReturnType::Type(t.clone());
            }
        }
    }
    for &(open, close) in asserts {
        if !(open < s && e < close) {
            continue;
        }
        let (from, to) = (open + 1, close);
        let mut depth = 0isize;
        let mut split = None;
        for (k, t) in tokens.iter().enumerate().take(to).skip(from) {
            if t.is("(") || t.is("[") || t.is("{") {
                depth += 1;
            } else if t.is(")") || t.is("]") || t.is("}") {
                depth -= 1;
            } else if depth == 0
                && t.kind == TokenKind::Punct
                && COMPARISONS.contains(&t.text.as_str())
            {
                split = Some(k);
                break;
            }
        }
        match split {
            Some(k) => {
                let other = if s == from && e + 1 == k {
                    &tokens[k + 1..to]
                } else if s == k + 1 && e + 1 == to {
                    &tokens[from..k]
                } else {
                    return ReturnType::Unknown;
                };
                return classify_expression(other, variables)
                    .and_then(|(_, t)| t)
                    .map_or(ReturnType::Unknown, ReturnType::Type);
            }
            None => {
                let negated = s == from + 1 && tokens[from].is("!");
                if (s == from || negated) && e + 1 == to {
                    return ReturnType::Type(TypeName::simple("bool"));
                }
                return ReturnType::Unknown;
            }
        }
    }
    ReturnType::Unknown
}
