use crate::extract::assertion_sites;
use crate::extract::{find_type_decls, TestCaseSpec};
use crate::harvest::adapt::apply_edits;
use crate::lexer::{lex, Token, TokenKind};

pub const HARNESS_FILE: &str = "harness.cpp";
pub const CANDIDATE_FILE: &str = "candidate.hpp";
pub const EXECUTABLE: &str = "harness";

const PRELUDE: &str = r#"#include <cstdio>
#include <exception>

static int harvest_failures = 0;

static void harvest_check(int n, bool ok) {
    std::printf("%s %d\n", ok ? "ASSERT_OK" : "ASSERT_FAIL", n);
    std::fflush(stdout);
    if (!ok) {
        ++harvest_failures;
    }
}

#include "candidate.hpp"
"#;

fn is_local_include(t: &Token) -> bool {
    let rest = t.text.trim_start_matches('#').trim_start();
    rest.strip_prefix("include")
        .is_some_and(|r| r.trim_start().starts_with('"'))
}

fn is_test_name(name: &str) -> bool {
    name.to_ascii_lowercase().starts_with("test")
}

/// Free functions `void test...()` defined at file scope.
fn free_test_functions(tokens: &[Token]) -> Vec<String> {
    let mut depth = 0usize;
    let mut out = Vec::new();
    for (i, t) in tokens.iter().enumerate() {
        if t.kind == TokenKind::Punct {
            match t.text.as_str() {
                "{" => depth += 1,
                "}" => depth = depth.saturating_sub(1),
                _ => {}
            }
            continue;
        }
        if depth == 0
            && t.is("void")
            && tokens
                .get(i + 1)
                .is_some_and(|n| n.is_ident() && is_test_name(&n.text))
            && tokens.get(i + 2).is_some_and(|n| n.is("("))
            && tokens.get(i + 3).is_some_and(|n| n.is(")"))
            && tokens.get(i + 4).is_some_and(|n| n.is("{"))
        {
            out.push(tokens[i + 1].text.clone());
        }
    }
    out
}

/// A self-contained program running the test against `candidate.hpp`.
///
/// Each `assert(cond)` becomes a numbered check printing `ASSERT_OK <n>` or
/// `ASSERT_FAIL <n>`. `main` runs every zero-argument `test*` method of each
/// class declared in the test (on a fresh instance) and every free `test*`
/// function; a test with neither is run as one block of statements. The
/// program exits 0 iff every check passed, and 2 on an uncaught exception.
pub fn generate_harness(test: &TestCaseSpec) -> String {
    let source = &test.source;
    let tokens = lex(source).unwrap_or_default();

    let mut calls: Vec<String> = Vec::new();
    if let Ok(decls) = find_type_decls(&tokens) {
        for d in decls
            .iter()
            .filter(|d| d.interface.class_name != test.cut_name)
        {
            let class = d.interface.class_name.to_cpp();
            for m in d.interface.plain_methods() {
                if m.params.is_empty() && is_test_name(&m.name) {
                    calls.push(format!(
                        "        {{ {class} harvest_t; harvest_t.{}(); }}",
                        m.name
                    ));
                }
            }
        }
    }
    for f in free_test_functions(&tokens) {
        calls.push(format!("        {f}();"));
    }
    let wrap = calls.is_empty();

    let mut edits: Vec<(usize, usize, String)> = Vec::new();
    let mut hoisted = Vec::new();
    for t in tokens.iter().filter(|t| t.kind == TokenKind::Directive) {
        if is_local_include(t) {
            edits.push((t.start, t.end, String::new()));
        } else if wrap {
            hoisted.push(t.text.clone());
            edits.push((t.start, t.end, String::new()));
        }
    }
    for (n, (open, close)) in assertion_sites(&tokens).into_iter().enumerate() {
        let assert_tok = &tokens[open - 1];
        edits.push((
            assert_tok.start,
            tokens[open].end,
            format!("harvest_check({}, static_cast<bool>(", n + 1),
        ));
        edits.push((tokens[close].start, tokens[close].end, "))".to_string()));
    }
    let body = apply_edits(source, edits);

    let mut out = String::from(PRELUDE);
    for h in &hoisted {
        out.push_str(h);
        out.push('\n');
    }
    out.push('\n');
    if wrap {
        out.push_str("static void harvest_body() {\n");
        out.push_str(&body);
        out.push_str("\n}\n");
        calls.push("        harvest_body();".to_string());
    } else {
        out.push_str(&body);
        out.push('\n');
    }
    out.push_str("\nint main() {\n    try {\n");
    for c in &calls {
        out.push_str(c);
        out.push('\n');
    }
    out.push_str(
        "    } catch (const std::exception& e) {\n        std::fprintf(stderr, \"uncaught exception: %s\\n\", e.what());\n        return 2;\n    } catch (...) {\n        std::fprintf(stderr, \"uncaught exception\\n\");\n        return 2;\n    }\n    return harvest_failures == 0 ? 0 : 1;\n}\n",
    );
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extract::infer_interface_from_test;

    #[test]
    fn rewrites_assertions_in_order() {
        let spec = infer_interface_from_test(
            "#include \"Calc.hpp\"\n#include <string>\nclass CalcTest {\npublic:\n    void testAdd() {\n        Calc c;\n        assert(c.add(1, 2) == 3);\n        assert(c.add(2, 2) == 4);\n    }\n    void helper(int x) {}\n};\n",
        )
        .unwrap();
        let h = generate_harness(&spec);
        assert!(h.contains("harvest_check(1, static_cast<bool>(c.add(1, 2) == 3));"));
        assert!(h.contains("harvest_check(2, static_cast<bool>(c.add(2, 2) == 4));"));
        assert!(!h.contains("Calc.hpp"));
        assert!(h.contains("#include <string>"));
        assert!(h.contains("{ CalcTest harvest_t; harvest_t.testAdd(); }"));
        assert!(!h.contains("helper();"));
    }

    #[test]
    fn statement_tests_are_wrapped() {
        let spec = infer_interface_from_test(
            "#include <vector>\nStack s;\ns.push(1);\nassert(s.pop() == 1);\n",
        )
        .unwrap();
        let h = generate_harness(&spec);
        assert!(h.contains("static void harvest_body() {"));
        assert!(h.contains("harvest_body();"));
        let body_at = h.find("harvest_body() {").unwrap();
        assert!(h.find("#include <vector>").unwrap() < body_at);
    }

    #[test]
    fn free_test_functions_are_called() {
        let spec = infer_interface_from_test(
            "void testPush() { Stack s; s.push(1); assert(s.size() == 1); }\n",
        )
        .unwrap();
        let h = generate_harness(&spec);
        assert!(h.contains("        testPush();"));
        assert!(!h.contains("harvest_body"));
    }
}
