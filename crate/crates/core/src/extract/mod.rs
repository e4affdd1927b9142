//! Tolerant extraction of type declarations and their interfaces from C++ sources.
//!
//! This is not a compiler front end. It recognizes namespaces, class/struct
//! declarations (including templates), constructors and method headers, and
//! skips everything else by bracket matching. Out-of-class member definitions
//! contribute nothing beyond the in-class declaration they belong to.

mod test_case;
pub mod types;

use std::collections::HashSet;

use thiserror::Error;

use crate::analysis::{compute_metrics_tokens, content_hash};
use crate::lexer::{lex, matching_close, skip_angles, Token, TokenKind};
use crate::model::{
    ComponentId, ComponentKind, ComponentRecord, InterfaceSpec, MethodSignature, ReturnType,
    SourceSpan, TypeName,
};

pub(crate) use test_case::assertion_sites;
pub use test_case::{
    classify_expression, infer_interface_from_test, literal_rule, LiteralForm, LiteralTypeRule,
    TestCaseSpec, CUT_MARKER,
};
use types::{parse_params, parse_type, ParsedType};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExtractError {
    #[error("unparsable source at {line}:{column}: {message}")]
    UnparsableSource {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("no class under test: the test constructs no component type")]
    NoClassUnderTest,
    #[error("ambiguous class under test: {} are constructed equally often; add a `//$ CUT: <Name>` marker", .candidates.join(", "))]
    AmbiguousCut { candidates: Vec<String> },
    #[error("the test contains no assertions")]
    NoAssertions,
}

impl ExtractError {
    pub(crate) fn unparsable(line: usize, column: usize, message: impl Into<String>) -> Self {
        ExtractError::UnparsableSource {
            line,
            column,
            message: message.into(),
        }
    }
}

pub(crate) fn lex_source(source: &str) -> Result<Vec<Token>, ExtractError> {
    lex(source).map_err(|e| ExtractError::unparsable(e.line, e.col, e.message))
}

/// A type declaration found in a source file.
#[derive(Debug, Clone)]
pub(crate) struct TypeDecl {
    pub interface: InterfaceSpec,
    /// Token index of the first token (`template` or `class`/`struct`).
    pub first: usize,
    /// Token index of the last token (closing `}` or trailing `;`).
    pub last: usize,
    /// Names of types declared inside the body.
    pub nested: Vec<String>,
}

/// Extracts one record per top-level type declaration.
pub fn extract_components(source: &str, path: &str) -> Result<Vec<ComponentRecord>, ExtractError> {
    let tokens = lex_source(source)?;
    let decls = find_type_decls(&tokens)?;
    if decls.is_empty() {
        let (line, column) = tokens.first().map_or((1, 1), |t| (t.line, t.col));
        return Err(ExtractError::unparsable(
            line,
            column,
            "no type declaration found",
        ));
    }
    let hash = content_hash(source);
    let mut taken = HashSet::new();
    let mut records = Vec::with_capacity(decls.len());
    for decl in decls {
        let mut id = ComponentId::from_content_hash(&hash);
        if !taken.insert(id.clone()) {
            id = ComponentId::disambiguated(&hash, path, &decl.interface.class_name.full_name());
            taken.insert(id.clone());
        }
        let metrics = compute_metrics_tokens(source, &tokens[decl.first..=decl.last]);
        records.push(ComponentRecord {
            id,
            interface: decl.interface,
            source: source.to_string(),
            path: path.to_string(),
            span: SourceSpan {
                start_line: tokens[decl.first].line,
                end_line: tokens[decl.last].line,
            },
            metrics,
            content_hash: hash.clone(),
        });
    }
    Ok(records)
}

/// Finds all type declarations not nested in another type.
pub(crate) fn find_type_decls(tokens: &[Token]) -> Result<Vec<TypeDecl>, ExtractError> {
    let mut out = Vec::new();
    let mut namespaces = Vec::new();
    scan_scope(tokens, 0, tokens.len(), &mut namespaces, &mut out)?;
    Ok(out)
}

fn unbalanced(t: &Token) -> ExtractError {
    ExtractError::unparsable(t.line, t.col, format!("unbalanced `{}`", t.text))
}

fn close_of(tokens: &[Token], open: usize) -> Result<usize, ExtractError> {
    matching_close(tokens, open).ok_or_else(|| unbalanced(&tokens[open]))
}

fn scan_scope(
    tokens: &[Token],
    mut i: usize,
    end: usize,
    namespaces: &mut Vec<String>,
    out: &mut Vec<TypeDecl>,
) -> Result<(), ExtractError> {
    let mut template_start: Option<usize> = None;
    while i < end {
        let t = &tokens[i];
        if t.is("namespace") {
            let mut j = i + 1;
            let mut name = Vec::new();
            while j < end && (tokens[j].is_ident() || tokens[j].is("::")) {
                if tokens[j].is_ident() && tokens[j].text != "inline" {
                    name.push(tokens[j].text.clone());
                }
                j += 1;
            }
            if j < end && tokens[j].is("{") {
                let close = close_of(tokens, j)?;
                let pushed = name.len();
                namespaces.extend(name);
                scan_scope(tokens, j + 1, close, namespaces, out)?;
                namespaces.truncate(namespaces.len() - pushed);
                i = close + 1;
            } else {
                // namespace alias or stray keyword
                i = skip_to_semicolon(tokens, j, end)?;
            }
            template_start = None;
            continue;
        }
        if t.is("extern") && tokens.get(i + 1).is_some_and(|n| n.kind == TokenKind::Str) {
            if tokens.get(i + 2).is_some_and(|n| n.is("{")) {
                let close = close_of(tokens, i + 2)?;
                scan_scope(tokens, i + 3, close, namespaces, out)?;
                i = close + 1;
            } else {
                i += 2;
            }
            continue;
        }
        if t.is("template") && tokens.get(i + 1).is_some_and(|n| n.is("<")) {
            template_start = Some(i);
            i = skip_angles(tokens, i + 1);
            continue;
        }
        if t.is("class") || t.is("struct") {
            let start = template_start.take().unwrap_or(i);
            match parse_class(tokens, start, i, end, namespaces)? {
                ClassParse::Declaration(decl, next) => {
                    i = next;
                    out.push(*decl);
                }
                ClassParse::NotADeclaration(next) => i = next,
            }
            continue;
        }
        template_start = None;
        if t.is("{") {
            i = close_of(tokens, i)? + 1;
            continue;
        }
        if t.is("(") || t.is("[") {
            i = close_of(tokens, i)? + 1;
            continue;
        }
        if t.kind == TokenKind::Punct && matches!(t.text.as_str(), "}" | ")" | "]") {
            return Err(unbalanced(t));
        }
        i += 1;
    }
    Ok(())
}

fn skip_to_semicolon(tokens: &[Token], mut i: usize, end: usize) -> Result<usize, ExtractError> {
    while i < end {
        if tokens[i].is(";") {
            return Ok(i + 1);
        }
        if tokens[i].is("{") || tokens[i].is("(") || tokens[i].is("[") {
            i = close_of(tokens, i)?;
        }
        i += 1;
    }
    Ok(end)
}

enum ClassParse {
    Declaration(Box<TypeDecl>, usize),
    NotADeclaration(usize),
}

/// `at` points at the `class`/`struct` keyword.
fn parse_class(
    tokens: &[Token],
    first: usize,
    at: usize,
    end: usize,
    namespaces: &[String],
) -> Result<ClassParse, ExtractError> {
    let mut j = at + 1;
    // attributes such as [[nodiscard]]
    while j < end && tokens[j].is("[") {
        j = close_of(tokens, j)? + 1;
    }
    let Some(name_tok) = tokens.get(j).filter(|t| t.is_ident()) else {
        return Ok(ClassParse::NotADeclaration(skip_to_semicolon(
            tokens,
            at + 1,
            end,
        )?));
    };
    let name = name_tok.text.clone();
    j += 1;
    if tokens.get(j).is_some_and(|t| t.is("<")) {
        // explicit specialization: class Foo<int> { ... }
        j = skip_angles(tokens, j);
    }
    if tokens.get(j).is_some_and(|t| t.is("final")) {
        j += 1;
    }
    if tokens.get(j).is_some_and(|t| t.is(":")) {
        while j < end && !tokens[j].is("{") && !tokens[j].is(";") {
            if tokens[j].is("<") {
                j = skip_angles(tokens, j);
                continue;
            }
            j += 1;
        }
    }
    match tokens.get(j) {
        Some(t) if t.is("{") => {}
        Some(t) if t.is(";") => return Ok(ClassParse::NotADeclaration(j + 1)),
        // elaborated type specifier (`class Foo* make();`)
        _ => {
            return Ok(ClassParse::NotADeclaration(skip_to_semicolon(
                tokens, j, end,
            )?))
        }
    }
    let open = j;
    let close = close_of(tokens, open)?;
    let class_name = TypeName::qualified(namespaces.join("."), name);
    let (interface, nested) = parse_class_body(tokens, open, close, class_name)?;

    // trailing declarators up to `;`
    let mut last = close;
    let mut k = close + 1;
    while k < end {
        if tokens[k].is(";") {
            last = k;
            k += 1;
            break;
        }
        if tokens[k].is("{") || tokens[k].is("class") || tokens[k].is("struct") {
            break;
        }
        k += 1;
    }
    if last == close {
        k = close + 1;
    }
    Ok(ClassParse::Declaration(
        Box::new(TypeDecl {
            interface,
            first,
            last,
            nested,
        }),
        k,
    ))
}

const MEMBER_SPECIFIERS: &[&str] = &[
    "virtual",
    "static",
    "inline",
    "explicit",
    "constexpr",
    "consteval",
    "mutable",
    "extern",
];

fn parse_class_body(
    tokens: &[Token],
    open: usize,
    close: usize,
    class_name: TypeName,
) -> Result<(InterfaceSpec, Vec<String>), ExtractError> {
    let mut methods: Vec<(MethodSignature, bool)> = Vec::new();
    let mut nested = Vec::new();
    let mut has_assert = false;
    let mut i = open + 1;
    for w in tokens[open..close].windows(2) {
        if w[0].is("assert") && w[1].is("(") {
            has_assert = true;
        }
    }

    while i < close {
        let t = &tokens[i];
        if (t.is("public") || t.is("private") || t.is("protected"))
            && tokens.get(i + 1).is_some_and(|n| n.is(":"))
        {
            i += 2;
            continue;
        }
        if t.is(";") {
            i += 1;
            continue;
        }
        if t.kind == TokenKind::Directive {
            i += 1;
            continue;
        }
        if t.is("template") && tokens.get(i + 1).is_some_and(|n| n.is("<")) {
            i = skip_angles(tokens, i + 1);
            continue;
        }
        if t.is("class") || t.is("struct") || t.is("union") || t.is("enum") {
            let mut j = i + 1;
            if tokens
                .get(j)
                .is_some_and(|n| n.is("class") || n.is("struct"))
            {
                j += 1;
            }
            if let Some(n) = tokens.get(j).filter(|n| n.is_ident()) {
                nested.push(n.text.clone());
            }
            i = skip_member(tokens, i, close)?;
            continue;
        }
        if t.is("using") || t.is("typedef") || t.is("friend") || t.is("static_assert") {
            if t.is("using") || t.is("typedef") {
                if let Some(alias) = alias_name(tokens, i, close) {
                    nested.push(alias);
                }
            }
            i = skip_member(tokens, i, close)?;
            continue;
        }
        if t.is("~") {
            i = skip_member(tokens, i, close)?;
            continue;
        }

        let mut j = i;
        while tokens
            .get(j)
            .is_some_and(|t| t.is_ident() && MEMBER_SPECIFIERS.contains(&t.text.as_str()))
        {
            j += 1;
        }
        if j >= close {
            break;
        }

        // constructor
        if tokens[j].is(&class_name.simple) && tokens.get(j + 1).is_some_and(|n| n.is("(")) {
            let popen = j + 1;
            let pclose = close_of(tokens, popen)?;
            let params = parse_params(tokens, popen, pclose);
            let sig = MethodSignature::constructor(
                &TypeName::simple(class_name.simple.clone()),
                params.into_iter().map(|p| p.name).collect(),
            );
            methods.push((sig, false));
            i = skip_member(tokens, i, close)?;
            continue;
        }

        if let Some((ret, after)) = parse_type(tokens, j) {
            let name_tok = tokens.get(after);
            let is_method = name_tok.is_some_and(|n| n.is_ident() && !n.is("operator"))
                && tokens.get(after + 1).is_some_and(|n| n.is("("));
            if is_method {
                let name = tokens[after].text.clone();
                let popen = after + 1;
                let pclose = close_of(tokens, popen)?;
                let params = parse_params(tokens, popen, pclose);
                let (returns, pure) = method_tail(tokens, &ret, pclose, close);
                let sig = MethodSignature::method(
                    name,
                    params.into_iter().map(|p| p.name).collect(),
                    returns,
                );
                methods.push((sig, pure));
            }
        }
        i = skip_member(tokens, i, close)?;
    }

    let plain: Vec<&(MethodSignature, bool)> =
        methods.iter().filter(|(m, _)| !m.is_constructor).collect();
    let kind = if class_name.simple.ends_with("Test")
        || class_name.simple.ends_with("Tests")
        || has_assert
    {
        ComponentKind::Test
    } else if !plain.is_empty() && plain.iter().all(|(_, pure)| *pure) {
        ComponentKind::Interface
    } else {
        ComponentKind::Class
    };
    let mut iface = InterfaceSpec::new(class_name, kind);
    for (m, _) in methods {
        iface.push_method(m);
    }
    Ok((iface, nested))
}

fn alias_name(tokens: &[Token], i: usize, close: usize) -> Option<String> {
    if tokens[i].is("using") {
        let n = tokens.get(i + 1)?;
        if n.is_ident() && !n.is("namespace") && tokens.get(i + 2).is_some_and(|e| e.is("=")) {
            return Some(n.text.clone());
        }
        return None;
    }
    // typedef ... Name;
    let mut j = i + 1;
    let mut last_ident = None;
    while j < close && !tokens[j].is(";") {
        if tokens[j].is_ident() {
            last_ident = Some(tokens[j].text.clone());
        }
        j += 1;
    }
    last_ident
}

/// Return type (resolving trailing `-> T`) and pure-virtual flag for a method
/// whose parameter list closes at `pclose`.
fn method_tail(
    tokens: &[Token],
    ret: &ParsedType,
    pclose: usize,
    close: usize,
) -> (ReturnType, bool) {
    let mut returns = if ret.is_void() {
        ReturnType::Void
    } else if ret.is_auto() {
        ReturnType::Unknown
    } else {
        ReturnType::Type(ret.name.clone())
    };
    let mut pure = false;
    let mut k = pclose + 1;
    while k < close && !tokens[k].is("{") && !tokens[k].is(";") {
        if tokens[k].is("->") && ret.is_auto() {
            if let Some((t, next)) = parse_type(tokens, k + 1) {
                returns = if t.is_void() {
                    ReturnType::Void
                } else {
                    ReturnType::Type(t.name)
                };
                k = next;
                continue;
            }
        }
        if tokens[k].is("=") && tokens.get(k + 1).is_some_and(|n| n.text == "0") {
            pure = true;
        }
        if tokens[k].is("(") {
            if let Some(c) = matching_close(tokens, k) {
                k = c;
            }
        }
        k += 1;
    }
    (returns, pure)
}

/// Advances past one member declaration starting at `i`: up to a `;`, or past a
/// function body.
fn skip_member(tokens: &[Token], mut i: usize, close: usize) -> Result<usize, ExtractError> {
    let mut saw_params = false;
    let mut in_init_list = false;
    while i < close {
        let t = &tokens[i];
        if t.is(";") {
            return Ok(i + 1);
        }
        if t.is("(") || t.is("[") {
            i = close_of(tokens, i)? + 1;
            if t.is("(") {
                saw_params = true;
            }
            continue;
        }
        if t.is(":") && saw_params {
            in_init_list = true;
        }
        if t.is("{") {
            let c = close_of(tokens, i)?;
            // `member{init}` inside a constructor initializer list is not the body.
            let is_member_init = in_init_list
                && i > 0
                && tokens[i - 1].is_ident()
                && tokens.get(c + 1).is_some_and(|n| n.is(",") || n.is("{"));
            if saw_params && !is_member_init {
                let mut next = c + 1;
                if tokens.get(next).is_some_and(|n| n.is(";")) {
                    next += 1;
                }
                return Ok(next);
            }
            i = c + 1;
            continue;
        }
        i += 1;
    }
    Ok(close)
}

/// Removes line and block comments, leaving string and character literals intact.
///
/// A line comment is dropped up to (not including) its newline. A block comment
/// is dropped, leaving a single space only where it separated two non-blank
/// characters, or the newlines it spanned when it crossed lines, so line
/// numbering is preserved.
pub fn strip_comments(source: &str) -> String {
    let mut out = String::with_capacity(source.len());
    let chars: Vec<char> = source.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let next = chars.get(i + 1).copied();
        match c {
            '/' if next == Some('/') => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
            }
            '/' if next == Some('*') => {
                i += 2;
                let mut newlines = 0;
                while i < chars.len() && !(chars[i] == '*' && chars.get(i + 1) == Some(&'/')) {
                    if chars[i] == '\n' {
                        newlines += 1;
                    }
                    i += 1;
                }
                i = (i + 2).min(chars.len());
                if newlines == 0 {
                    let before = out.chars().next_back().is_some_and(|c| !c.is_whitespace());
                    let after = chars.get(i).is_some_and(|c| !c.is_whitespace());
                    if before && after {
                        out.push(' ');
                    }
                } else {
                    out.extend(std::iter::repeat_n('\n', newlines));
                }
            }
            '"' | '\'' => {
                let digit_separator = c == '\''
                    && i > 0
                    && chars[i - 1].is_ascii_hexdigit()
                    && next.is_some_and(|n| n.is_ascii_hexdigit());
                out.push(c);
                i += 1;
                if digit_separator {
                    continue;
                }
                while i < chars.len() && chars[i] != c && chars[i] != '\n' {
                    if chars[i] == '\\' && i + 1 < chars.len() {
                        out.push(chars[i]);
                        i += 1;
                    }
                    out.push(chars[i]);
                    i += 1;
                }
                if i < chars.len() && chars[i] == c {
                    out.push(c);
                    i += 1;
                }
            }
            _ => {
                out.push(c);
                i += 1;
            }
        }
    }
    out
}

/// Renders an interface as a C++ class with empty bodies. Interface-kind specs
/// render as pure virtual methods; unknown returns render as `auto`.
pub fn render_interface(iface: &InterfaceSpec) -> String {
    let mut out = format!("class {} {{\npublic:\n", iface.class_name.simple);
    for m in &iface.methods {
        let params: Vec<String> = m
            .params
            .iter()
            .enumerate()
            .map(|(i, p)| format!("{} arg{}", p.to_cpp(), i + 1))
            .collect();
        let params = params.join(", ");
        if m.is_constructor {
            out.push_str(&format!(
                "    {}({}) {{}}\n",
                iface.class_name.simple, params
            ));
            continue;
        }
        let ret = match &m.returns {
            ReturnType::Void => "void".to_string(),
            ReturnType::Unknown => "auto".to_string(),
            ReturnType::Type(t) => t.to_cpp(),
        };
        if iface.kind == ComponentKind::Interface {
            out.push_str(&format!("    virtual {ret} {}({params}) = 0;\n", m.name));
        } else {
            out.push_str(&format!("    {ret} {}({params}) {{}}\n", m.name));
        }
    }
    out.push_str("};\n");
    out
}
