//! Type-expression parsing over lexer tokens.

use crate::lexer::{skip_angles, split_top_level_commas, Token, TokenKind};
use crate::model::TypeName;

/// Builtin scalar keywords; multiword spellings (`unsigned long`) are folded into one name.
const BUILTIN_WORDS: &[&str] = &[
    "void", "bool", "char", "char8_t", "char16_t", "char32_t", "wchar_t", "short", "int", "long",
    "float", "double", "signed", "unsigned", "auto",
];

const SIZE_WORDS: &[&str] = &["short", "long", "signed", "unsigned"];

/// Library and typedef names treated as built-in even without a `std::` qualifier.
const LIBRARY_TYPES: &[&str] = &[
    "size_t",
    "ssize_t",
    "ptrdiff_t",
    "nullptr_t",
    "int8_t",
    "int16_t",
    "int32_t",
    "int64_t",
    "uint8_t",
    "uint16_t",
    "uint32_t",
    "uint64_t",
    "intptr_t",
    "uintptr_t",
    "string",
    "wstring",
    "string_view",
    "vector",
    "map",
    "multimap",
    "set",
    "multiset",
    "unordered_map",
    "unordered_set",
    "list",
    "deque",
    "queue",
    "priority_queue",
    "stack",
    "pair",
    "tuple",
    "array",
    "optional",
    "variant",
    "shared_ptr",
    "unique_ptr",
    "weak_ptr",
    "function",
    "ostream",
    "istream",
    "iostream",
    "stringstream",
    "ostringstream",
    "istringstream",
    "exception",
    "runtime_error",
    "logic_error",
    "invalid_argument",
    "out_of_range",
    "domain_error",
    "length_error",
    "overflow_error",
    "underflow_error",
    "range_error",
    "initializer_list",
    "complex",
];

/// Specifiers that may precede or follow a type without changing its name.
const CV_WORDS: &[&str] = &[
    "const",
    "volatile",
    "typename",
    "struct",
    "class",
    "enum",
    "mutable",
    "constexpr",
];

pub fn is_builtin_word(word: &str) -> bool {
    BUILTIN_WORDS.contains(&word)
}

/// Whether a type name refers to the language or its standard library rather
/// than to a user component.
pub fn is_builtin_type(name: &TypeName) -> bool {
    if let Some(q) = &name.qualifier {
        if q == "std" || q.starts_with("std.") {
            return true;
        }
    }
    let simple = name.simple.as_str();
    simple == "*"
        || LIBRARY_TYPES.contains(&simple)
        || BUILTIN_WORDS.contains(&simple)
        || simple.split('_').all(|w| BUILTIN_WORDS.contains(&w))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedType {
    pub name: TypeName,
    pub args: Vec<ParsedType>,
    pub indirect: bool,
}

impl ParsedType {
    pub fn is_void(&self) -> bool {
        self.name.qualifier.is_none() && self.name.simple == "void" && !self.indirect
    }

    pub fn is_auto(&self) -> bool {
        self.name.qualifier.is_none() && self.name.simple == "auto"
    }

    /// This type and every template argument type, outermost first.
    pub fn all_names(&self) -> Vec<TypeName> {
        let mut out = vec![self.name.clone()];
        for a in &self.args {
            out.extend(a.all_names());
        }
        out
    }
}

fn fold_builtin(words: &[&str]) -> String {
    let sized = words.iter().any(|w| SIZE_WORDS.contains(w));
    let kept: Vec<&str> = words
        .iter()
        .copied()
        .filter(|w| !(sized && *w == "int" && words.len() > 1))
        .collect();
    kept.join("_")
}

/// Parses a type starting at `i`. Returns the type and the index of the first
/// token after it (including trailing `*`, `&` and cv-qualifiers).
pub fn parse_type(tokens: &[Token], mut i: usize) -> Option<(ParsedType, usize)> {
    while tokens
        .get(i)
        .is_some_and(|t| t.is_ident() && CV_WORDS.contains(&t.text.as_str()))
    {
        i += 1;
    }
    let first = tokens.get(i)?;
    let (name, mut args, mut next);
    if first.is_ident() && is_builtin_word(&first.text) {
        let mut words = Vec::new();
        let mut j = i;
        while let Some(t) = tokens.get(j) {
            if t.is_ident() && is_builtin_word(&t.text) {
                words.push(t.text.as_str());
            } else if !(t.is_ident() && (t.text == "const" || t.text == "volatile")) {
                break;
            }
            j += 1;
        }
        name = TypeName::simple(fold_builtin(&words));
        args = Vec::new();
        next = j;
    } else {
        let mut j = i;
        if tokens.get(j).is_some_and(|t| t.is("::")) {
            j += 1;
        }
        let mut segments: Vec<String> = Vec::new();
        args = Vec::new();
        loop {
            let t = tokens.get(j)?;
            if !t.is_ident() || crate::lexer::is_keyword(&t.text) {
                return None;
            }
            segments.push(t.text.clone());
            j += 1;
            if tokens.get(j).is_some_and(|t| t.is("<")) {
                let close = skip_angles(tokens, j);
                args = parse_template_args(tokens, j + 1, close.saturating_sub(1));
                j = close;
            }
            if tokens.get(j).is_some_and(|t| t.is("::"))
                && tokens
                    .get(j + 1)
                    .is_some_and(|t| t.is_ident() && !crate::lexer::is_keyword(&t.text))
            {
                j += 1;
                continue;
            }
            break;
        }
        let simple = segments.pop()?;
        name = TypeName::qualified(segments.join("."), simple);
        next = j;
    }
    let mut indirect = false;
    while let Some(t) = tokens.get(next) {
        match t.text.as_str() {
            "*" | "&" | "&&" if t.kind == TokenKind::Punct => indirect = true,
            "const" | "volatile" if t.is_ident() => {}
            _ => break,
        }
        next += 1;
    }
    Some((
        ParsedType {
            name,
            args: std::mem::take(&mut args),
            indirect,
        },
        next,
    ))
}

fn parse_template_args(tokens: &[Token], from: usize, to: usize) -> Vec<ParsedType> {
    if from >= to {
        return Vec::new();
    }
    split_top_level_commas(tokens, from, to)
        .into_iter()
        .filter_map(|(s, e)| parse_type(&tokens[..e], s).map(|(t, _)| t))
        .collect()
}

/// Parameter types of a declaration whose parameter list spans `(open, close)`.
/// Unparseable parameters fall back to the wildcard type `*`.
pub fn parse_params(tokens: &[Token], open: usize, close: usize) -> Vec<ParsedType> {
    let inner = open + 1;
    if inner >= close {
        return Vec::new();
    }
    if close - inner == 1 && tokens[inner].is("void") {
        return Vec::new();
    }
    split_top_level_commas(tokens, inner, close)
        .into_iter()
        .filter(|(s, e)| !(e - s == 1 && tokens[*s].is("...")))
        .map(|(s, e)| {
            parse_type(&tokens[..e], s)
                .map(|(t, _)| t)
                .unwrap_or(ParsedType {
                    name: TypeName::simple("*"),
                    args: Vec::new(),
                    indirect: false,
                })
        })
        .collect()
}
