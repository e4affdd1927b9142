//! Tokenizer for the C++ subset the extractor, metrics and harness generator share.
//!
//! Comments are dropped, preprocessor lines become a single [`TokenKind::Directive`]
//! token, and every token carries its byte range and 1-based line/column.

use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenKind {
    Ident,
    Int,
    Float,
    Str,
    Char,
    Punct,
    Directive,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub text: String,
    pub line: usize,
    pub col: usize,
    pub start: usize,
    pub end: usize,
}

impl Token {
    pub fn is(&self, text: &str) -> bool {
        self.text == text && self.kind != TokenKind::Str && self.kind != TokenKind::Char
    }

    pub fn is_ident(&self) -> bool {
        self.kind == TokenKind::Ident
    }

    pub fn is_literal(&self) -> bool {
        matches!(
            self.kind,
            TokenKind::Int | TokenKind::Float | TokenKind::Str | TokenKind::Char
        ) || (self.kind == TokenKind::Ident
            && matches!(self.text.as_str(), "true" | "false" | "nullptr"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LexError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

impl fmt::Display for LexError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.col, self.message)
    }
}

impl std::error::Error for LexError {}

const PUNCT3: &[&str] = &["<<=", ">>=", "...", "->*", "<=>"];
const PUNCT2: &[&str] = &[
    "::", "->", "++", "--", "==", "!=", "<=", ">=", "&&", "||", "+=", "-=", "*=", "/=", "%=", "&=",
    "|=", "^=", "<<", ">>", ".*", "##",
];

const STRING_PREFIXES: &[&str] = &["u8", "L", "u", "U"];
const RAW_PREFIXES: &[&str] = &["R", "u8R", "LR", "uR", "UR"];

/// Keywords of the subject language. Identifiers in this set are never type or
/// variable names.
pub const KEYWORDS: &[&str] = &[
    "alignas",
    "alignof",
    "and",
    "asm",
    "auto",
    "bool",
    "break",
    "case",
    "catch",
    "char",
    "char16_t",
    "char32_t",
    "char8_t",
    "class",
    "const",
    "const_cast",
    "constexpr",
    "consteval",
    "continue",
    "decltype",
    "default",
    "delete",
    "do",
    "double",
    "dynamic_cast",
    "else",
    "enum",
    "explicit",
    "export",
    "extern",
    "false",
    "final",
    "float",
    "for",
    "friend",
    "goto",
    "if",
    "inline",
    "int",
    "long",
    "mutable",
    "namespace",
    "new",
    "noexcept",
    "not",
    "nullptr",
    "operator",
    "or",
    "override",
    "private",
    "protected",
    "public",
    "register",
    "reinterpret_cast",
    "return",
    "short",
    "signed",
    "sizeof",
    "static",
    "static_assert",
    "static_cast",
    "struct",
    "switch",
    "template",
    "this",
    "throw",
    "true",
    "try",
    "typedef",
    "typeid",
    "typename",
    "union",
    "unsigned",
    "using",
    "virtual",
    "void",
    "volatile",
    "wchar_t",
    "while",
];

pub fn is_keyword(word: &str) -> bool {
    KEYWORDS.contains(&word)
}

struct Cursor<'a> {
    src: &'a str,
    pos: usize,
    line: usize,
    col: usize,
}

impl<'a> Cursor<'a> {
    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn peek_at(&self, offset: usize) -> Option<char> {
        self.src[self.pos..].chars().nth(offset)
    }

    fn starts_with(&self, s: &str) -> bool {
        self.src[self.pos..].starts_with(s)
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn bump_n(&mut self, n: usize) {
        for _ in 0..n {
            self.bump();
        }
    }
}

/// Tokenizes `src`. Unterminated block comments run to end of input; unterminated
/// string or character literals are errors.
pub fn lex(src: &str) -> Result<Vec<Token>, LexError> {
    let mut cur = Cursor {
        src,
        pos: 0,
        line: 1,
        col: 1,
    };
    let mut tokens = Vec::new();
    let mut at_line_start = true;

    while let Some(c) = cur.peek() {
        if c == '\n' {
            cur.bump();
            at_line_start = true;
            continue;
        }
        if c.is_whitespace() {
            cur.bump();
            continue;
        }
        if cur.starts_with("//") {
            while let Some(c) = cur.peek() {
                if c == '\n' {
                    break;
                }
                cur.bump();
            }
            continue;
        }
        if cur.starts_with("/*") {
            cur.bump_n(2);
            while cur.peek().is_some() && !cur.starts_with("*/") {
                cur.bump();
            }
            if cur.starts_with("*/") {
                cur.bump_n(2);
            }
            continue;
        }

        let (start, line, col) = (cur.pos, cur.line, cur.col);
        let push = |tokens: &mut Vec<Token>, kind, cur: &Cursor| {
            tokens.push(Token {
                kind,
                text: src[start..cur.pos].to_string(),
                line,
                col,
                start,
                end: cur.pos,
            });
        };

        if c == '#' && at_line_start {
            // Directive runs to end of line, honouring backslash continuations.
            while let Some(c) = cur.peek() {
                if c == '\n' {
                    let prev = src[start..cur.pos].trim_end_matches([' ', '\t', '\r']);
                    if prev.ends_with('\\') {
                        cur.bump();
                        continue;
                    }
                    break;
                }
                if cur.starts_with("//") {
                    break;
                }
                cur.bump();
            }
            tokens.push(Token {
                kind: TokenKind::Directive,
                text: src[start..cur.pos].trim_end().to_string(),
                line,
                col,
                start,
                end: cur.pos,
            });
            continue;
        }
        at_line_start = false;

        if c.is_alphabetic() || c == '_' {
            while cur.peek().is_some_and(|c| c.is_alphanumeric() || c == '_') {
                cur.bump();
            }
            let word = &src[start..cur.pos];
            if cur.peek() == Some('"') && RAW_PREFIXES.contains(&word) {
                lex_raw_string(&mut cur, line, col)?;
                push(&mut tokens, TokenKind::Str, &cur);
            } else if cur.peek() == Some('"') && STRING_PREFIXES.contains(&word) {
                lex_quoted(&mut cur, '"', line, col)?;
                push(&mut tokens, TokenKind::Str, &cur);
            } else if cur.peek() == Some('\'') && STRING_PREFIXES.contains(&word) {
                lex_quoted(&mut cur, '\'', line, col)?;
                push(&mut tokens, TokenKind::Char, &cur);
            } else {
                push(&mut tokens, TokenKind::Ident, &cur);
            }
            continue;
        }

        if c.is_ascii_digit() || (c == '.' && cur.peek_at(1).is_some_and(|d| d.is_ascii_digit())) {
            let kind = lex_number(&mut cur);
            push(&mut tokens, kind, &cur);
            continue;
        }

        if c == '"' {
            lex_quoted(&mut cur, '"', line, col)?;
            push(&mut tokens, TokenKind::Str, &cur);
            continue;
        }
        if c == '\'' {
            lex_quoted(&mut cur, '\'', line, col)?;
            push(&mut tokens, TokenKind::Char, &cur);
            continue;
        }

        let len = PUNCT3
            .iter()
            .chain(PUNCT2)
            .find(|p| cur.starts_with(p))
            .map_or(c.len_utf8(), |p| p.len());
        let target = cur.pos + len;
        while cur.pos < target {
            cur.bump();
        }
        push(&mut tokens, TokenKind::Punct, &cur);
    }
    Ok(tokens)
}

fn lex_quoted(cur: &mut Cursor, quote: char, line: usize, col: usize) -> Result<(), LexError> {
    cur.bump();
    loop {
        match cur.peek() {
            None | Some('\n') => {
                return Err(LexError {
                    line,
                    col,
                    message: if quote == '"' {
                        "unterminated string literal".into()
                    } else {
                        "unterminated character literal".into()
                    },
                })
            }
            Some('\\') => {
                cur.bump();
                cur.bump();
            }
            Some(c) if c == quote => {
                cur.bump();
                return Ok(());
            }
            Some(_) => {
                cur.bump();
            }
        }
    }
}

fn lex_raw_string(cur: &mut Cursor, line: usize, col: usize) -> Result<(), LexError> {
    cur.bump(); // opening quote
    let delim_start = cur.pos;
    while cur.peek().is_some_and(|c| c != '(' && c != '\n') {
        cur.bump();
    }
    let delim = cur.src[delim_start..cur.pos].to_string();
    let close = format!("){delim}\"");
    while cur.peek().is_some() {
        if cur.starts_with(&close) {
            cur.bump_n(close.chars().count());
            return Ok(());
        }
        cur.bump();
    }
    Err(LexError {
        line,
        col,
        message: "unterminated raw string literal".into(),
    })
}

fn lex_number(cur: &mut Cursor) -> TokenKind {
    let start = cur.pos;
    let hex = cur.starts_with("0x") || cur.starts_with("0X");
    let mut prev = '\0';
    while let Some(c) = cur.peek() {
        let exponent_sign = (c == '+' || c == '-')
            && if hex {
                matches!(prev, 'p' | 'P')
            } else {
                matches!(prev, 'e' | 'E')
            };
        if c.is_ascii_alphanumeric() || c == '.' || c == '\'' || c == '_' || exponent_sign {
            prev = c;
            cur.bump();
        } else {
            break;
        }
    }
    let text = &cur.src[start..cur.pos];
    let is_float = if hex {
        text.contains('.') || text.contains(['p', 'P'])
    } else {
        text.contains('.') || text.contains(['e', 'E']) || text.ends_with(['f', 'F'])
    };
    if is_float {
        TokenKind::Float
    } else {
        TokenKind::Int
    }
}

/// Index of the token closing the bracket opened at `open`, if any.
pub fn matching_close(tokens: &[Token], open: usize) -> Option<usize> {
    let (o, c) = match tokens.get(open)?.text.as_str() {
        "(" => ("(", ")"),
        "{" => ("{", "}"),
        "[" => ("[", "]"),
        _ => return None,
    };
    let mut depth = 0usize;
    for (i, t) in tokens.iter().enumerate().skip(open) {
        if t.kind != TokenKind::Punct {
            continue;
        }
        if t.text == o {
            depth += 1;
        } else if t.text == c {
            depth -= 1;
            if depth == 0 {
                return Some(i);
            }
        }
    }
    None
}

/// Index just past a template argument list opened by `<` at `open`.
pub fn skip_angles(tokens: &[Token], open: usize) -> usize {
    let mut depth: isize = 0;
    let mut i = open;
    while i < tokens.len() {
        let t = &tokens[i];
        match t.text.as_str() {
            "<" if t.kind == TokenKind::Punct => depth += 1,
            ">" if t.kind == TokenKind::Punct => depth -= 1,
            ">>" if t.kind == TokenKind::Punct => depth -= 2,
            "(" | "[" | "{" if t.kind == TokenKind::Punct => {
                if let Some(close) = matching_close(tokens, i) {
                    i = close;
                }
            }
            ";" | "}" if t.kind == TokenKind::Punct => return i,
            _ => {}
        }
        i += 1;
        if depth <= 0 {
            return i;
        }
    }
    i
}

/// Splits `tokens[from..to]` at commas that are not nested in brackets or
/// template argument lists.
pub fn split_top_level_commas(tokens: &[Token], from: usize, to: usize) -> Vec<(usize, usize)> {
    let mut parts = Vec::new();
    let mut depth = 0isize;
    let mut angle = 0isize;
    let mut start = from;
    for i in from..to {
        let t = &tokens[i];
        if t.kind != TokenKind::Punct {
            continue;
        }
        match t.text.as_str() {
            "(" | "[" | "{" => depth += 1,
            ")" | "]" | "}" => depth -= 1,
            "<" if depth == 0
                && i > from
                && tokens[i - 1].is_ident()
                && looks_like_template(tokens, i, to) =>
            {
                angle += 1
            }
            ">" if angle > 0 => angle -= 1,
            ">>" if angle > 0 => angle = (angle - 2).max(0),
            "," if depth == 0 && angle == 0 => {
                parts.push((start, i));
                start = i + 1;
            }
            _ => {}
        }
    }
    if start < to || !parts.is_empty() {
        parts.push((start, to));
    }
    parts
}

/// Heuristic: `<` at `at` opens template arguments when a matching `>` follows
/// before any token that cannot appear inside a type.
fn looks_like_template(tokens: &[Token], at: usize, to: usize) -> bool {
    let mut depth = 0;
    for t in &tokens[at..to] {
        match t.text.as_str() {
            "<" => depth += 1,
            ">" => {
                depth -= 1;
                if depth == 0 {
                    return true;
                }
            }
            ">>" => {
                depth -= 2;
                if depth <= 0 {
                    return true;
                }
            }
            "::" | "," | "*" | "&" => {}
            _ if t.is_ident() || t.kind == TokenKind::Int => {}
            _ => return false,
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    fn texts(src: &str) -> Vec<String> {
        lex(src).unwrap().into_iter().map(|t| t.text).collect()
    }

    #[test]
    fn lexes_operators_longest_first() {
        assert_eq!(
            texts("a<<=b->c::d"),
            vec!["a", "<<=", "b", "->", "c", "::", "d"]
        );
        assert_eq!(texts("x && !y || z"), vec!["x", "&&", "!", "y", "||", "z"]);
    }

    #[test]
    fn skips_comments_and_keeps_positions() {
        let toks = lex("int x; // c\n/* a\n b */ y").unwrap();
        let y = toks.last().unwrap();
        assert_eq!(y.text, "y");
        assert_eq!((y.line, y.col), (3, 7));
    }

    #[test]
    fn classifies_literals() {
        let toks = lex(r#"1 1.5 2e3 0x1F 3.0f "s\"q" 'c' R"(raw "x")""#).unwrap();
        let kinds: Vec<TokenKind> = toks.iter().map(|t| t.kind).collect();
        assert_eq!(
            kinds,
            vec![
                TokenKind::Int,
                TokenKind::Float,
                TokenKind::Float,
                TokenKind::Int,
                TokenKind::Float,
                TokenKind::Str,
                TokenKind::Char,
                TokenKind::Str
            ]
        );
    }

    #[test]
    fn directives_are_single_tokens() {
        let toks = lex("#include <vector>\n#define X \\\n  1\nint y;").unwrap();
        assert_eq!(toks[0].kind, TokenKind::Directive);
        assert_eq!(toks[0].text, "#include <vector>");
        assert_eq!(toks[1].kind, TokenKind::Directive);
        assert_eq!(toks[2].text, "int");
    }

    #[test]
    fn unterminated_string_is_an_error() {
        let err = lex("int a;\ns = \"oops;\n").unwrap_err();
        assert_eq!((err.line, err.col), (2, 5));
    }

    #[test]
    fn splits_commas_outside_templates() {
        let toks = lex("std::map<int, double> m, int k").unwrap();
        let parts = split_top_level_commas(&toks, 0, toks.len());
        assert_eq!(parts.len(), 2);
    }
}
