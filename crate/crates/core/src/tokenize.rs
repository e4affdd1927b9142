//! Identifier splitting for indexing.

#[derive(Clone, Copy, PartialEq, Eq)]
enum CharClass {
    Upper,
    Lower,
    Digit,
}

fn class_of(c: char) -> Option<CharClass> {
    if c.is_numeric() {
        Some(CharClass::Digit)
    } else if c.is_uppercase() {
        Some(CharClass::Upper)
    } else if c.is_alphanumeric() {
        Some(CharClass::Lower)
    } else {
        None
    }
}

/// Char-wise lowercase; keeps token concatenation consistent with the input.
fn fold(s: &str) -> String {
    s.chars().flat_map(char::to_lowercase).collect()
}

/// Splits an identifier into lowercase tokens at camelCase, acronym,
/// underscore/punctuation and letter/digit boundaries.
///
/// `HTTP_Server2Impl` becomes `["http", "server", "2", "impl"]`.
pub fn tokenize_identifier(name: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    for word in name.split(|c: char| !c.is_alphanumeric()) {
        let chars: Vec<char> = word.chars().collect();
        let mut start = 0;
        for i in 1..chars.len() {
            let (Some(prev), Some(cur)) = (class_of(chars[i - 1]), class_of(chars[i])) else {
                continue;
            };
            let boundary = match (prev, cur) {
                (CharClass::Lower, CharClass::Upper) => true,
                (CharClass::Digit, CharClass::Upper | CharClass::Lower) => true,
                (CharClass::Upper | CharClass::Lower, CharClass::Digit) => true,
                // "HTTPServer": split before the last capital of an acronym run.
                (CharClass::Upper, CharClass::Upper) => chars
                    .get(i + 1)
                    .is_some_and(|&n| class_of(n) == Some(CharClass::Lower)),
                _ => false,
            };
            if boundary {
                tokens.push(fold(&chars[start..i].iter().collect::<String>()));
                start = i;
            }
        }
        if start < chars.len() {
            tokens.push(fold(&chars[start..].iter().collect::<String>()));
        }
    }
    tokens
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn splits_camel_case() {
        assert_eq!(tokenize_identifier("getDegree"), vec!["get", "degree"]);
    }

    #[test]
    fn splits_acronyms_underscores_and_digits() {
        assert_eq!(
            tokenize_identifier("HTTP_Server2Impl"),
            vec!["http", "server", "2", "impl"]
        );
        assert_eq!(
            tokenize_identifier("parseXMLFile"),
            vec!["parse", "xml", "file"]
        );
        assert_eq!(tokenize_identifier("matrix2D"), vec!["matrix", "2", "d"]);
    }

    #[test]
    fn single_and_empty() {
        assert_eq!(tokenize_identifier("x"), vec!["x"]);
        assert!(tokenize_identifier("").is_empty());
        assert!(tokenize_identifier("__").is_empty());
    }

    proptest! {
        #[test]
        fn concatenation_matches_input_without_separators(s in "\\PC{0,24}") {
            let tokens = tokenize_identifier(&s);
            prop_assert!(tokens.iter().all(|t| !t.is_empty()));
            let joined: String = tokens.concat();
            let expected: String = fold(&s.chars().filter(|c| c.is_alphanumeric()).collect::<String>());
            prop_assert_eq!(joined, expected);
        }

        #[test]
        fn tokens_are_lowercase(s in "[A-Za-z0-9_]{0,24}") {
            for t in tokenize_identifier(&s) {
                prop_assert_eq!(t.to_lowercase(), t);
            }
        }
    }
}
