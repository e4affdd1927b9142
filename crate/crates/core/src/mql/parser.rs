use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{FilterKey, MethodPattern, MqlQuery, ParamPattern, ReturnPattern};
use crate::model::ComponentKind;

/// A parse failure with its position and the tokens that would have been accepted.
#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
#[error("syntax error at {line}:{column}: expected {}, found {found}", expected_list(.expected))]
pub struct SyntaxError {
    /// Byte offset into the query text.
    pub offset: usize,
    /// 1-based line.
    pub line: usize,
    /// 1-based column, counted in characters.
    pub column: usize,
    pub expected: Vec<String>,
    pub found: String,
}

fn expected_list(expected: &[String]) -> String {
    match expected {
        [] => "nothing".to_string(),
        [one] => one.clone(),
        _ => format!("one of {}", expected.join(", ")),
    }
}

fn is_pattern_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '*'
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if !c.is_whitespace() {
                break;
            }
            self.pos += c.len_utf8();
        }
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn at(&self, s: &str) -> bool {
        self.src[self.pos..].starts_with(s)
    }

    fn error(&self, expected: &[&str]) -> SyntaxError {
        let before = &self.src[..self.pos];
        let line = before.matches('\n').count() + 1;
        let line_start = before.rfind('\n').map_or(0, |i| i + 1);
        let column = self.src[line_start..self.pos].chars().count() + 1;
        let found = match self.peek() {
            None => "end of input".to_string(),
            Some(_) if self.at("...") => "`...`".to_string(),
            Some(c) if is_pattern_char(c) => {
                let word: String = self.src[self.pos..]
                    .chars()
                    .take_while(|c| is_pattern_char(*c))
                    .collect();
                format!("`{word}`")
            }
            Some(c) => format!("`{c}`"),
        };
        SyntaxError {
            offset: self.pos,
            line,
            column,
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found,
        }
    }

    fn expect(&mut self, token: &str, expected: &[&str]) -> Result<(), SyntaxError> {
        self.skip_ws();
        if self.at(token) {
            self.pos += token.len();
            Ok(())
        } else {
            Err(self.error(expected))
        }
    }

    fn pattern(&mut self, what: &str) -> Result<String, SyntaxError> {
        self.skip_ws();
        let start = self.pos;
        while self.peek().is_some_and(is_pattern_char) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.error(&[what]));
        }
        Ok(self.src[start..self.pos].to_string())
    }

    fn query(&mut self) -> Result<MqlQuery, SyntaxError> {
        let class_name = self.pattern("class name pattern")?;
        let mut methods = Vec::new();
        self.skip_ws();
        if self.at("(") {
            self.pos += 1;
            loop {
                methods.push(self.method()?);
                self.skip_ws();
                if self.at(";") {
                    self.pos += 1;
                } else if self.at(")") {
                    self.pos += 1;
                    break;
                } else {
                    return Err(self.error(&["`:`", "`;`", "`)`"]));
                }
            }
        }
        let mut filters = BTreeMap::new();
        loop {
            self.skip_ws();
            if self.peek().is_none() {
                break;
            }
            let expected_keys: &[&str] = if methods.is_empty() && filters.is_empty() {
                &["`(`", "`kind`", "`lang`", "`path`", "end of input"]
            } else {
                &["`kind`", "`lang`", "`path`", "end of input"]
            };
            let word: String = self.src[self.pos..]
                .chars()
                .take_while(|c| c.is_ascii_alphabetic())
                .collect();
            let Some(key) = FilterKey::from_word(&word) else {
                return Err(self.error(expected_keys));
            };
            if filters.contains_key(&key) {
                return Err(SyntaxError {
                    expected: vec!["a filter key not given before".to_string()],
                    ..self.error(&[])
                });
            }
            self.pos += word.len();
            self.expect(":", &["`:`"])?;
            self.skip_ws();
            let value_start = self.pos;
            while self.peek().is_some_and(|c| !c.is_whitespace()) {
                self.pos += self.peek().map_or(1, char::len_utf8);
            }
            let value = &self.src[value_start..self.pos];
            if value.is_empty() {
                self.pos = value_start;
                return Err(self.error(&["filter value"]));
            }
            if key == FilterKey::Kind && value.parse::<ComponentKind>().is_err() {
                self.pos = value_start;
                return Err(self.error(&["`class`", "`interface`", "`test`"]));
            }
            filters.insert(key, value.to_string());
        }
        Ok(MqlQuery {
            class_name,
            methods,
            filters,
        })
    }

    fn method(&mut self) -> Result<MethodPattern, SyntaxError> {
        let name = self.pattern("method name pattern")?;
        self.expect("(", &["`(`"])?;
        let mut params = Vec::new();
        self.skip_ws();
        if self.at(")") {
            self.pos += 1;
        } else {
            loop {
                self.skip_ws();
                if self.at("...") {
                    self.pos += 3;
                    params.push(ParamPattern::Ellipsis);
                    self.expect(")", &["`)`"])?;
                    break;
                }
                let expected: &[&str] = if params.is_empty() {
                    &["type pattern", "`...`", "`)`"]
                } else {
                    &["type pattern", "`...`"]
                };
                if !self.peek().is_some_and(is_pattern_char) {
                    return Err(self.error(expected));
                }
                params.push(ParamPattern::Type(self.pattern("type pattern")?));
                self.skip_ws();
                if self.at(",") {
                    self.pos += 1;
                } else if self.at(")") {
                    self.pos += 1;
                    break;
                } else {
                    return Err(self.error(&["`,`", "`)`"]));
                }
            }
        }
        self.skip_ws();
        let returns = if self.at(":") {
            self.pos += 1;
            ReturnPattern::Type(self.pattern("return type pattern")?)
        } else {
            ReturnPattern::Any
        };
        Ok(MethodPattern {
            name,
            params,
            returns,
        })
    }
}

/// Parses a query. Whitespace between tokens is ignored.
pub fn parse_mql(text: &str) -> Result<MqlQuery, SyntaxError> {
    let mut p = Parser { src: text, pos: 0 };
    p.query()
}

impl fmt::Display for ParamPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamPattern::Type(t) => f.write_str(t),
            ParamPattern::Ellipsis => f.write_str("..."),
        }
    }
}
