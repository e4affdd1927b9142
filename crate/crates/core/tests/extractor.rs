mod common;

use codeharvest_core::extract::{
    extract_components, infer_interface_from_test, render_interface, strip_comments, ExtractError,
};
use codeharvest_core::{ComponentKind, InterfaceSpec, MethodSignature, ReturnType, TypeName};
use common::fixture_text;
use proptest::prelude::*;

fn shown(methods: &[MethodSignature]) -> Vec<String> {
    methods.iter().map(|m| m.to_string()).collect()
}

#[test]
fn matrix_test_fixture_infers_its_interface() {
    let spec = infer_interface_from_test(&fixture_text("matrix_test.cpp")).unwrap();
    assert_eq!(spec.cut_name, TypeName::simple("Matrix"));
    assert_eq!(spec.inferred_interface.class_name, spec.cut_name);
    assert_eq!(spec.assertions, 7);
    // m.set(0, 1, 2.5): int, int, decimal; no assignment target, so unknown return.
    // m.get(0, 1) == 2.5: asserted against a decimal literal.
    // m.rows() == 2: asserted against an integer literal.
    // Matrix c = a.add(b): assigned to a Matrix, argument is a Matrix variable.
    assert_eq!(
        shown(&spec.inferred_interface.methods),
        vec![
            "Matrix(int,int)",
            "set(int,int,double):?",
            "get(int,int):double",
            "rows():int",
            "cols():int",
            "add(Matrix):Matrix",
        ]
    );
}

#[test]
fn matrix_corpus_files_extract() {
    let dense =
        extract_components(&fixture_text("matrix/dense/Matrix.hpp"), "dense/Matrix.hpp").unwrap();
    assert_eq!(dense.len(), 1);
    assert_eq!(
        shown(&dense[0].interface.methods),
        vec![
            "Matrix(int,int)",
            "rows():int",
            "cols():int",
            "get(int,int):double",
            "set(int,int,double):void",
            "add(Matrix):Matrix",
        ]
    );
    let grid = extract_components(
        &fixture_text("matrix/grid/Matrix2D.hpp"),
        "grid/Matrix2D.hpp",
    )
    .unwrap();
    assert_eq!(
        grid[0].interface.class_name,
        TypeName::qualified("grid", "Matrix2D")
    );

    let test = extract_components(
        &fixture_text("matrix/util/StackTest.cpp"),
        "util/StackTest.cpp",
    )
    .unwrap();
    assert_eq!(test[0].interface.kind, ComponentKind::Test);
    let shape =
        extract_components(&fixture_text("matrix/shapes/Shape.hpp"), "shapes/Shape.hpp").unwrap();
    assert_eq!(shape[0].interface.kind, ComponentKind::Interface);
}

#[test]
fn unparsable_inputs_carry_a_position() {
    assert!(matches!(
        extract_components("", "e.hpp"),
        Err(ExtractError::UnparsableSource { .. })
    ));
    match extract_components(&fixture_text("matrix/broken/scratch.hpp"), "scratch.hpp") {
        Err(ExtractError::UnparsableSource { line, column, .. }) => {
            assert_eq!((line, column), (2, 34));
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn two_classes_give_two_records() {
    let src = "class A { public: int f(); };\nclass B { public: void g(int x); };\n";
    let records = extract_components(src, "ab.hpp").unwrap();
    assert_eq!(records.len(), 2);
    assert_ne!(records[0].id, records[1].id);
}

#[test]
fn ambiguous_and_missing_cut() {
    let err = infer_interface_from_test("Person p; Address a; assert(p.ok());").unwrap_err();
    assert!(matches!(err, ExtractError::AmbiguousCut { .. }));
    let err = infer_interface_from_test("int x = 2; assert(x == 2);").unwrap_err();
    assert_eq!(err, ExtractError::NoClassUnderTest);
}

#[test]
fn strip_comments_examples() {
    assert_eq!(strip_comments("int x; // c"), "int x; ");
    assert_eq!(
        strip_comments("s = \"// not a comment\";"),
        "s = \"// not a comment\";"
    );
    assert_eq!(strip_comments("/* a */ y /* b */"), " y ");
    assert_eq!(strip_comments("x /* open"), "x ");
}

const NAMES: &[&str] = &[
    "size", "getValue", "push", "add", "isEmpty", "toString", "reset", "merge",
];
const TYPES: &[&str] = &[
    "int",
    "double",
    "bool",
    "char",
    "Matrix",
    "Point",
    "std::string",
    "long",
];

fn arb_method() -> impl Strategy<Value = MethodSignature> {
    (
        prop::sample::select(NAMES),
        prop::collection::vec(prop::sample::select(TYPES), 0..4),
        prop::option::of(prop::sample::select(TYPES)),
    )
        .prop_map(|(name, params, ret)| {
            MethodSignature::method(
                name,
                params.into_iter().map(TypeName::parse).collect(),
                ret.map_or(ReturnType::Void, |t| ReturnType::Type(TypeName::parse(t))),
            )
        })
}

fn arb_interface() -> impl Strategy<Value = InterfaceSpec> {
    (
        prop::sample::select(vec!["Widget", "Gadget", "Stack2"]),
        prop::collection::vec(
            prop::collection::vec(prop::sample::select(TYPES), 0..3),
            0..3,
        ),
        prop::collection::vec(arb_method(), 0..8),
    )
        .prop_map(|(name, ctors, methods)| {
            let class = TypeName::simple(name);
            let mut iface = InterfaceSpec::new(class.clone(), ComponentKind::Class);
            for c in ctors {
                iface.push_method(MethodSignature::constructor(
                    &class,
                    c.into_iter().map(TypeName::parse).collect(),
                ));
            }
            for m in methods {
                iface.push_method(m);
            }
            iface
        })
}

proptest! {
    #[test]
    fn rendered_classes_extract_to_the_same_interface(iface in arb_interface()) {
        let src = render_interface(&iface);
        let records = extract_components(&src, "gen.hpp").unwrap();
        prop_assert_eq!(records.len(), 1);
        prop_assert_eq!(&records[0].interface, &iface);
    }

    #[test]
    fn strip_comments_is_idempotent(src in "[a-z /*\"\\n]{0,60}") {
        let once = strip_comments(&src);
        prop_assert_eq!(strip_comments(&once), once.clone());
    }

    #[test]
    fn inferred_methods_are_invoked_on_the_cut(
        calls in prop::collection::vec((prop::sample::select(NAMES), 0usize..3), 1..6),
        other in prop::collection::vec(prop::sample::select(NAMES), 0..4),
    ) {
        let mut src = String::from("//$ CUT: Widget\nWidget w;\nHelper h;\n");
        for (name, arity) in &calls {
            let args: Vec<String> = (0..*arity).map(|i| i.to_string()).collect();
            src.push_str(&format!("w.{name}({});\n", args.join(", ")));
        }
        for name in &other {
            src.push_str(&format!("h.{name}Elsewhere();\n"));
        }
        src.push_str("assert(w.size() >= 0);\n");
        let spec = infer_interface_from_test(&src).unwrap();
        for m in spec.inferred_interface.plain_methods() {
            let invoked = m.name == "size" || calls.iter().any(|(n, a)| *n == m.name && *a == m.params.len());
            prop_assert!(invoked, "{} was never invoked on w", m);
        }
    }
}
