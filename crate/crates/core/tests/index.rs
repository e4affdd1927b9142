mod common;

use std::collections::BTreeSet;

use codeharvest_core::harvest::query_from_interface;
use codeharvest_core::index::{
    build_index, load, persist, search_keyword, search_mql, CorpusIndex, IndexError,
    SearchConstraints, SearchHit, FORMAT_VERSION,
};
use codeharvest_core::mql::parse_mql;
use codeharvest_core::{ComponentKind, SUBJECT_LANGUAGE};
use common::{dir_bytes, fixtures, id_at, index_of};
use proptest::prelude::*;

fn terms(words: &[&str]) -> Vec<String> {
    words.iter().map(|w| w.to_string()).collect()
}

fn assert_sorted(hits: &[SearchHit]) {
    for w in hits.windows(2) {
        assert!(
            w[0].score > w[1].score || (w[0].score == w[1].score && w[0].id < w[1].id),
            "{:?} before {:?}",
            w[0],
            w[1]
        );
    }
}

#[test]
fn keyword_scores_match_hand_computation() {
    let ix = index_of("keyword");
    assert_eq!(ix.components.len(), 3);
    let matrix = id_at(&ix, "Matrix.hpp");
    let util = id_at(&ix, "MatrixUtil.hpp");
    let stack = id_at(&ix, "Stack.hpp");

    // "matrix" occurs in 2 of 3 components, both times in the class name.
    let idf = (1.0f64 + 3.0 / 2.0).ln();
    let hits = search_keyword(&ix, &terms(&["matrix"]), &SearchConstraints::default()).unwrap();
    let ids: Vec<_> = hits.iter().map(|h| h.id.clone()).collect();
    assert_eq!(ids, vec![matrix.clone(), util.clone()]);
    for h in &hits {
        assert!((h.score - 3.0 * idf).abs() < 1e-12);
        assert_eq!(h.lexical_score, h.score);
        assert_eq!(h.matched_terms, vec!["matrix".to_string()]);
    }
    assert!(!ids.contains(&stack));

    // "size": a method of Stack, only a field name inside Matrix.
    let hits = search_keyword(&ix, &terms(&["size"]), &SearchConstraints::default()).unwrap();
    assert_eq!(hits.len(), 2);
    assert_eq!(hits[0].id, stack);
    assert!((hits[0].score - 2.0 * idf).abs() < 1e-12);
    assert_eq!(hits[1].id, matrix);
    assert!((hits[1].score - idf).abs() < 1e-12);

    assert!(
        search_keyword(&ix, &terms(&["zebra"]), &SearchConstraints::default())
            .unwrap()
            .is_empty()
    );
}

#[test]
fn dedupe_collapses_identical_copies() {
    let ix = index_of("dupes");
    assert_eq!(ix.components.len(), 4);
    let all = search_keyword(&ix, &terms(&["stack"]), &SearchConstraints::default()).unwrap();
    assert_eq!(all.len(), 3);
    let c = SearchConstraints {
        dedupe: true,
        ..SearchConstraints::default()
    };
    let hits = search_keyword(&ix, &terms(&["stack"]), &c).unwrap();
    assert_eq!(hits.len(), 1);
    let hits = search_mql(&ix, &parse_mql("*(push(int):void; pop():int)").unwrap(), &c).unwrap();
    let paths: BTreeSet<&str> = hits
        .iter()
        .map(|h| ix.components[&h.id].path.as_str())
        .collect();
    assert_eq!(hits.len(), 2);
    assert!(paths.contains("Queue.hpp"));
}

#[test]
fn unparsable_files_are_skipped_and_recorded() {
    let ix = index_of("matrix");
    assert_eq!(ix.components.len(), 8);
    assert_eq!(ix.manifest.component_count, 8);
    assert_eq!(ix.manifest.skipped.len(), 1);
    assert_eq!(ix.manifest.skipped[0].path, "broken/scratch.hpp");
    assert_eq!(ix.manifest.subject_language, SUBJECT_LANGUAGE);
    assert_eq!(ix.manifest.format_version, FORMAT_VERSION);
}

#[test]
fn empty_corpus_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("notes.txt"), "class NotSource {};").unwrap();
    assert!(matches!(
        build_index(dir.path()),
        Err(IndexError::EmptyCorpus(_))
    ));
    assert!(matches!(
        build_index(&dir.path().join("missing")),
        Err(IndexError::Io { .. })
    ));
}

#[test]
fn test_components_are_found_through_the_kind_complement() {
    let ix = index_of("matrix");
    let not_tests = SearchConstraints {
        exclude_kinds: BTreeSet::from([ComponentKind::Class, ComponentKind::Interface]),
        ..SearchConstraints::default()
    };
    let hits = search_keyword(&ix, &terms(&["push", "pop"]), &not_tests).unwrap();
    assert_eq!(hits.len(), 1);
    assert_eq!(
        ix.components[&hits[0].id].interface.kind,
        ComponentKind::Test
    );
}

#[test]
fn interface_search_ranks_the_full_match_first() {
    let ix = index_of("keyword");
    let q = parse_mql("Matrix(dimension():int)").unwrap();
    let hits = search_mql(&ix, &q, &SearchConstraints::default()).unwrap();
    assert_eq!(hits[0].id, id_at(&ix, "Matrix.hpp"));
    assert_eq!(hits[0].interface_score, 1.0);

    // One full match and one name-only match in the Matrix corpus.
    let ix = index_of("matrix");
    let q = parse_mql("Matrix(get(int,int):double)").unwrap();
    let hits = search_mql(&ix, &q, &SearchConstraints::default()).unwrap();
    assert_sorted(&hits);
    let sparse = hits
        .iter()
        .find(|h| h.id == id_at(&ix, "sparse/Matrix.hpp"))
        .unwrap();
    assert_eq!(sparse.interface_score, 0.0);
    assert_eq!(hits[0].interface_score, 1.0);
    let max_lexical = hits.iter().map(|h| h.lexical_score).fold(0.0, f64::max);
    for h in &hits {
        let expected = 0.6 * h.interface_score + 0.4 * h.lexical_score / max_lexical;
        assert!((h.score - expected).abs() < 1e-12);
    }

    assert!(search_mql(
        &ix,
        &parse_mql("Zebra(stripe():int)").unwrap(),
        &SearchConstraints::default()
    )
    .unwrap()
    .is_empty());
}

#[test]
fn excluding_interfaces_removes_them() {
    let ix = index_of("matrix");
    let q = parse_mql("*(add(...))").unwrap();
    let all = search_mql(&ix, &q, &SearchConstraints::default()).unwrap();
    let shape = id_at(&ix, "shapes/Shape.hpp");
    assert!(all.iter().any(|h| h.id == shape));
    let c = SearchConstraints {
        exclude_kinds: BTreeSet::from([ComponentKind::Interface]),
        ..SearchConstraints::default()
    };
    let filtered = search_mql(&ix, &q, &c).unwrap();
    assert!(filtered.iter().all(|h| h.id != shape));
    assert_eq!(filtered.len(), all.len() - 1);
}

#[test]
fn query_filters_restrict_results() {
    let ix = index_of("matrix");
    let hits = |text: &str| {
        search_mql(
            &ix,
            &parse_mql(text).unwrap(),
            &SearchConstraints::default(),
        )
        .unwrap()
    };
    assert_eq!(hits("Matrix path:dense").len(), 1);
    assert_eq!(hits("* kind:test").len(), 1);
    assert_eq!(hits("Matrix lang:c*").len(), 4);
    assert!(hits("Matrix lang:java").is_empty());
}

fn all_fixture_indexes() -> Vec<CorpusIndex> {
    ["matrix", "polynomial", "keyword", "dupes", "deps/corpus"]
        .iter()
        .map(|d| index_of(d))
        .collect()
}

#[test]
fn every_component_finds_itself_by_its_interface() {
    for ix in all_fixture_indexes() {
        for (id, record) in &ix.components {
            let q = query_from_interface(&record.interface);
            let hits = search_mql(&ix, &q, &SearchConstraints::default()).unwrap();
            let hit = hits.iter().find(|h| &h.id == id);
            assert!(
                hit.is_some_and(|h| h.interface_score == 1.0),
                "{} not found by {q}",
                record.path
            );
            for h in &hits {
                assert!(ix.components.contains_key(&h.id));
            }
        }
    }
}

#[test]
fn builds_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    persist(&index_of("matrix"), a.path()).unwrap();
    persist(&index_of("matrix"), b.path()).unwrap();
    let (da, db) = (dir_bytes(a.path()), dir_bytes(b.path()));
    assert_eq!(
        da.keys().collect::<Vec<_>>(),
        vec![
            "components.jsonl",
            "manifest.json",
            "postings.json",
            "signatures.json"
        ]
    );
    assert_eq!(da, db);
    // persisting again over an existing index gives the same bytes
    persist(&index_of("matrix"), a.path()).unwrap();
    assert_eq!(dir_bytes(a.path()), db);
    for bytes in da.values() {
        let text = std::str::from_utf8(bytes).unwrap();
        assert!(!text.contains('\r'));
        assert!(text.ends_with('\n'));
    }
}

#[test]
fn persisted_files_follow_the_layout() {
    let dir = tempfile::tempdir().unwrap();
    let ix = index_of("matrix");
    persist(&ix, dir.path()).unwrap();
    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("manifest.json")).unwrap()).unwrap();
    for key in [
        "formatVersion",
        "corpusRoot",
        "componentCount",
        "hashAlgorithm",
        "createdAt",
        "subjectLanguage",
    ] {
        assert!(manifest.get(key).is_some(), "manifest lacks {key}");
    }
    let lines = std::fs::read_to_string(dir.path().join("components.jsonl")).unwrap();
    let ids: Vec<String> = lines
        .lines()
        .map(|l| {
            serde_json::from_str::<serde_json::Value>(l).unwrap()["id"]
                .as_str()
                .unwrap()
                .to_string()
        })
        .collect();
    let mut sorted = ids.clone();
    sorted.sort();
    assert_eq!(ids, sorted);
    assert_eq!(ids.len(), ix.components.len());
}

#[test]
fn load_inverts_persist() {
    for ix in all_fixture_indexes() {
        let dir = tempfile::tempdir().unwrap();
        persist(&ix, dir.path()).unwrap();
        assert_eq!(load(dir.path()).unwrap(), ix);
    }
}

#[test]
fn newer_format_versions_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    persist(&index_of("keyword"), dir.path()).unwrap();
    let path = dir.path().join("manifest.json");
    let mut manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(&path).unwrap()).unwrap();
    manifest["formatVersion"] = serde_json::json!(FORMAT_VERSION + 1);
    std::fs::write(&path, serde_json::to_string(&manifest).unwrap()).unwrap();
    assert!(matches!(
        load(dir.path()),
        Err(IndexError::FormatVersionMismatch { found, expected }) if found == FORMAT_VERSION + 1 && expected == FORMAT_VERSION
    ));
}

#[test]
fn postings_are_consistent() {
    for ix in all_fixture_indexes() {
        for (term, list) in &ix.postings {
            let ids: Vec<_> = list.iter().map(|p| &p.id).collect();
            let mut sorted = ids.clone();
            sorted.sort();
            assert_eq!(ids, sorted, "{term}");
            let distinct: BTreeSet<_> = ids.iter().collect();
            assert_eq!(ix.document_frequency(term), distinct.len());
            assert!(ids.iter().all(|id| ix.components.contains_key(id)));
        }
    }
}

fn arb_constraints() -> impl Strategy<Value = SearchConstraints> {
    (
        any::<bool>(),
        prop::collection::btree_set(
            prop::sample::select(vec![
                ComponentKind::Class,
                ComponentKind::Interface,
                ComponentKind::Test,
            ]),
            0..3,
        ),
        1usize..10,
        prop::option::of(prop::sample::select(vec!["dense", "util", "s", "grid/"])),
    )
        .prop_map(
            |(dedupe, exclude_kinds, max_results, prefix)| SearchConstraints {
                dedupe,
                exclude_kinds,
                max_results,
                path_prefix: prefix.map(str::to_string),
            },
        )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn adding_a_constraint_never_adds_hits(
        c in arb_constraints(),
        extra_kind in prop::sample::select(vec![ComponentKind::Class, ComponentKind::Interface, ComponentKind::Test]),
        words in prop::collection::vec(prop::sample::select(vec!["matrix", "add", "get", "stack", "push", "area", "size"]), 1..4),
    ) {
        let ix = index_of("matrix");
        let unbounded = SearchConstraints { max_results: 1000, ..c.clone() };
        let base: BTreeSet<_> = search_keyword(&ix, &terms(&words), &unbounded).unwrap().into_iter().map(|h| h.id).collect();
        let mut tighter = unbounded.clone();
        tighter.exclude_kinds.insert(extra_kind);
        let fewer: BTreeSet<_> = search_keyword(&ix, &terms(&words), &tighter).unwrap().into_iter().map(|h| h.id).collect();
        prop_assert!(fewer.is_subset(&base));
        let deduped = SearchConstraints { dedupe: true, ..unbounded.clone() };
        let d: BTreeSet<_> = search_keyword(&ix, &terms(&words), &deduped).unwrap().into_iter().map(|h| h.id).collect();
        prop_assert!(d.is_subset(&base));
        let capped = search_keyword(&ix, &terms(&words), &c).unwrap();
        prop_assert!(capped.len() <= c.max_results);
        assert_sorted(&capped);
    }
}

#[test]
fn zero_max_results_is_rejected() {
    let ix = index_of("keyword");
    let c = SearchConstraints {
        max_results: 0,
        ..SearchConstraints::default()
    };
    assert!(matches!(
        search_keyword(&ix, &terms(&["matrix"]), &c),
        Err(IndexError::InvalidConstraints(_))
    ));
    let _ = fixtures();
}
