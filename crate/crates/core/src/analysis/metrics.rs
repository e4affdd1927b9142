//! LOC, cyclomatic complexity and Halstead measures.
//!
//! Token classification for Halstead:
//! - operators: statement/expression keywords (`if`, `return`, `new`, ...),
//!   arithmetic, bitwise, logical, relational and assignment symbols, `?`, and
//!   the name of a function at a call site;
//! - operands: every other identifier and every literal;
//! - neither: declaration-only keywords (types, specifiers, access labels) and
//!   punctuation `; , ( ) { } [ ] . -> :: : #`, plus preprocessor lines.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::extract::{strip_comments, ExtractError};
use crate::lexer::{lex, Token, TokenKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Halstead {
    pub n1: usize,
    pub n2: usize,
    #[serde(rename = "N1")]
    pub total_operators: usize,
    #[serde(rename = "N2")]
    pub total_operands: usize,
    pub vocabulary: usize,
    pub length: usize,
    pub volume: f64,
    pub difficulty: f64,
    pub effort: f64,
}

impl Halstead {
    pub fn from_counts(
        n1: usize,
        n2: usize,
        total_operators: usize,
        total_operands: usize,
    ) -> Self {
        let vocabulary = n1 + n2;
        let length = total_operators + total_operands;
        let volume = if vocabulary > 0 {
            length as f64 * (vocabulary as f64).log2()
        } else {
            0.0
        };
        let difficulty = if n2 > 0 {
            (n1 as f64 / 2.0) * (total_operands as f64 / n2 as f64)
        } else {
            0.0
        };
        Halstead {
            n1,
            n2,
            total_operators,
            total_operands,
            vocabulary,
            length,
            volume,
            difficulty,
            effort: difficulty * volume,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub loc: usize,
    pub cyclomatic: usize,
    pub halstead: Halstead,
}

const DECISION_KEYWORDS: &[&str] = &["if", "for", "while", "case", "catch"];
const DECISION_SYMBOLS: &[&str] = &["&&", "||", "?"];

const OPERATOR_KEYWORDS: &[&str] = &[
    "if",
    "else",
    "for",
    "while",
    "do",
    "switch",
    "case",
    "default",
    "break",
    "continue",
    "return",
    "goto",
    "new",
    "delete",
    "throw",
    "try",
    "catch",
    "sizeof",
    "alignof",
    "typeid",
    "static_cast",
    "dynamic_cast",
    "const_cast",
    "reinterpret_cast",
    "co_return",
    "co_await",
    "co_yield",
    "and",
    "or",
    "not",
];

/// Literal-valued keywords count as operands.
const OPERAND_KEYWORDS: &[&str] = &["true", "false", "nullptr", "this"];

const NEUTRAL_PUNCT: &[&str] = &[
    ";", ",", "(", ")", "{", "}", "[", "]", ".", "->", "::", ":", "#",
];

fn is_call_site(tokens: &[Token], i: usize) -> bool {
    if !tokens.get(i + 1).is_some_and(|n| n.is("(")) {
        return false;
    }
    match i.checked_sub(1).map(|p| &tokens[p]) {
        None => true,
        Some(prev) => {
            if prev.is(".") || prev.is("->") || prev.is("::") {
                return true;
            }
            if prev.kind == TokenKind::Ident {
                // `return f(x)`, `new T(x)` are calls; `int f(x)` declares.
                return OPERATOR_KEYWORDS.contains(&prev.text.as_str());
            }
            if prev.kind == TokenKind::Punct {
                return !matches!(prev.text.as_str(), ">" | "*" | "&" | "&&" | "~");
            }
            true
        }
    }
}

/// Metrics over already-lexed tokens; `source` supplies the lines for LOC.
pub fn compute_metrics_tokens(source: &str, tokens: &[Token]) -> MetricsReport {
    let stripped = strip_comments(source);
    let loc = match (tokens.first(), tokens.last()) {
        (Some(first), Some(last)) => stripped
            .lines()
            .skip(first.line - 1)
            .take(last.line + 1 - first.line)
            .filter(|l| !l.trim().is_empty())
            .count(),
        _ => 0,
    };

    let mut decisions = 0;
    let mut operators = HashSet::new();
    let mut operands = HashSet::new();
    let (mut total_operators, mut total_operands) = (0, 0);

    for (i, t) in tokens.iter().enumerate() {
        match t.kind {
            TokenKind::Directive => continue,
            TokenKind::Int | TokenKind::Float | TokenKind::Str | TokenKind::Char => {
                operands.insert(t.text.clone());
                total_operands += 1;
            }
            TokenKind::Ident => {
                let word = t.text.as_str();
                if DECISION_KEYWORDS.contains(&word) {
                    decisions += 1;
                }
                if OPERATOR_KEYWORDS.contains(&word) {
                    operators.insert(t.text.clone());
                    total_operators += 1;
                } else if OPERAND_KEYWORDS.contains(&word) {
                    operands.insert(t.text.clone());
                    total_operands += 1;
                } else if crate::lexer::is_keyword(word) {
                    // declaration-only keyword
                } else if is_call_site(tokens, i) {
                    operators.insert(format!("{word}()"));
                    total_operators += 1;
                } else {
                    operands.insert(t.text.clone());
                    total_operands += 1;
                }
            }
            TokenKind::Punct => {
                let sym = t.text.as_str();
                if DECISION_SYMBOLS.contains(&sym) {
                    decisions += 1;
                }
                if !NEUTRAL_PUNCT.contains(&sym) {
                    operators.insert(t.text.clone());
                    total_operators += 1;
                }
            }
        }
    }

    MetricsReport {
        loc,
        cyclomatic: 1 + decisions,
        halstead: Halstead::from_counts(
            operators.len(),
            operands.len(),
            total_operators,
            total_operands,
        ),
    }
}

/// LOC, cyclomatic complexity and Halstead measures of a source fragment.
pub fn compute_metrics(source: &str) -> Result<MetricsReport, ExtractError> {
    let tokens = lex(source).map_err(|e| ExtractError::UnparsableSource {
        line: e.line,
        column: e.col,
        message: e.message,
    })?;
    let mut report = compute_metrics_tokens(source, &tokens);
    // LOC covers the whole fragment, including lines holding only directives.
    report.loc = strip_comments(source)
        .lines()
        .filter(|l| !l.trim().is_empty())
        .count();
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_method_has_cyclomatic_one() {
        let m = compute_metrics("void f() {}").unwrap();
        assert_eq!(m.cyclomatic, 1);
        assert_eq!(m.loc, 1);
    }

    #[test]
    fn if_with_and_is_three() {
        let m = compute_metrics(
            "int f(int a, int b) {\n  if (a > 0 && b > 0) {\n    return 1;\n  }\n  return 0;\n}",
        )
        .unwrap();
        assert_eq!(m.cyclomatic, 3);
        assert_eq!(m.loc, 6);
    }

    #[test]
    fn halstead_assignment() {
        let m = compute_metrics("a = b + c").unwrap();
        let h = &m.halstead;
        assert_eq!(
            (h.n1, h.total_operators, h.n2, h.total_operands),
            (2, 2, 3, 3)
        );
        assert_eq!((h.vocabulary, h.length), (5, 5));
        assert!((h.volume - 5.0 * 5f64.log2()).abs() < 1e-9);
        assert!((h.difficulty - 1.0).abs() < 1e-9);
    }

    #[test]
    fn empty_source_has_zero_volume() {
        let m = compute_metrics("").unwrap();
        assert_eq!(m.loc, 0);
        assert_eq!(m.halstead.volume, 0.0);
        assert_eq!(m.halstead.difficulty, 0.0);
    }

    #[test]
    fn unterminated_string_is_unparsable() {
        assert!(compute_metrics("s = \"abc").is_err());
    }

    #[test]
    fn comments_do_not_change_metrics() {
        let plain = "int f(int x) {\n  return x > 1 ? x : 0;\n}\n";
        let commented =
            "// doc\nint f(int x) { /* body */\n  return x > 1 ? x : 0; // ternary\n}\n";
        let a = compute_metrics(plain).unwrap();
        let b = compute_metrics(commented).unwrap();
        assert_eq!(a, b);
    }
}
