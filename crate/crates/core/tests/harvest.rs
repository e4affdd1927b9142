mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use codeharvest_core::extract::{extract_components, infer_interface_from_test, ExtractError};
use codeharvest_core::harvest::{
    evaluate_candidate, generate_harness, query_from_interface, run_harvest, CandidateOutcome,
    EntrySpec, ExecutionBackend, ExecutionRequest, HarvestConfig, HarvestError, ProcessBackend,
    RunStatus, ScriptedBackend, ScriptedRun, Verdict, OUTPUT_CAP,
};
use codeharvest_core::mql::print_mql;
use codeharvest_core::ComponentId;
use common::{brute_force_passing, fixture_text, fixtures, gxx_available, id_at, index_of};

fn scripted() -> ScriptedBackend {
    ScriptedBackend::from_file(&fixtures().join("matrix_transcript.json")).unwrap()
}

fn ids(v: &[ComponentId]) -> BTreeSet<ComponentId> {
    v.iter().cloned().collect()
}

macro_rules! require_gxx {
    () => {
        if !gxx_available() {
            eprintln!("g++ not found; skipping toolchain test");
            return;
        }
    };
}

#[test]
fn scripted_matrix_harvest_returns_the_correct_variants() {
    let started = Instant::now();
    let ix = index_of("matrix");
    let test = fixture_text("matrix_test.cpp");
    let res = run_harvest(&test, &ix, &HarvestConfig::default(), &scripted()).unwrap();
    let expected = BTreeSet::from([
        id_at(&ix, "dense/Matrix.hpp"),
        id_at(&ix, "grid/Matrix2D.hpp"),
    ]);
    assert_eq!(ids(&res.passing), expected);
    assert!(started.elapsed() < Duration::from_secs(5));

    let verdicts: BTreeMap<String, Verdict> = res
        .outcomes
        .iter()
        .map(|o| (ix.components[&o.id].path.clone(), o.verdict))
        .collect();
    assert_eq!(
        verdicts,
        BTreeMap::from([
            ("dense/Matrix.hpp".to_string(), Verdict::Pass),
            ("grid/Matrix2D.hpp".to_string(), Verdict::Pass),
            ("flipped/Matrix.hpp".to_string(), Verdict::Fail),
            ("minus/Matrix.hpp".to_string(), Verdict::Fail),
            ("sparse/Matrix.hpp".to_string(), Verdict::AdaptError),
        ])
    );
    // every candidate exactly once, passing in outcome order
    let outcome_ids: Vec<_> = res.outcomes.iter().map(|o| o.id.clone()).collect();
    assert_eq!(ids(&outcome_ids).len(), outcome_ids.len());
    let in_order: Vec<_> = res
        .outcomes
        .iter()
        .filter(|o| o.verdict == Verdict::Pass)
        .map(|o| o.id.clone())
        .collect();
    assert_eq!(in_order, res.passing);
    assert_eq!(
        print_mql(&res.query),
        "Matrix(set(int,int,double); get(int,int):double; rows():int; cols():int; add(Matrix):Matrix)"
    );
}

#[test]
fn scripted_harvest_matches_the_scripted_oracle() {
    let ix = index_of("matrix");
    let test = fixture_text("matrix_test.cpp");
    let cfg = HarvestConfig::default();
    let res = run_harvest(&test, &ix, &cfg, &scripted()).unwrap();
    assert_eq!(
        ids(&res.passing),
        ids(&brute_force_passing(&ix, &test, &cfg, &scripted()))
    );
}

#[test]
fn failing_transcript_passes_nothing() {
    let ix = index_of("matrix");
    let transcript = ix
        .components
        .keys()
        .map(|id| {
            (
                id.to_string(),
                ScriptedRun {
                    exit_status: RunStatus::Nonzero,
                    stdout: String::new(),
                    stderr: "boom".into(),
                    duration_ms: 3,
                    stage: Default::default(),
                },
            )
        })
        .collect();
    let res = run_harvest(
        &fixture_text("matrix_test.cpp"),
        &ix,
        &HarvestConfig::default(),
        &ScriptedBackend::new(transcript),
    )
    .unwrap();
    assert!(res.passing.is_empty());
    assert_eq!(res.outcomes.len(), 5);
    assert!(res
        .outcomes
        .iter()
        .all(|o| matches!(o.verdict, Verdict::RuntimeError | Verdict::AdaptError)));
}

#[test]
fn outcomes_do_not_depend_on_parallelism() {
    let ix = index_of("matrix");
    let test = fixture_text("matrix_test.cpp");
    let run = |parallelism| {
        let cfg = HarvestConfig {
            parallelism,
            ..HarvestConfig::default()
        };
        run_harvest(&test, &ix, &cfg, &scripted()).unwrap()
    };
    let one = run(1);
    let eight = run(8);
    assert_eq!(one.outcomes, eight.outcomes);
    assert_eq!(one.passing, eight.passing);
}

#[test]
fn cut_errors_propagate() {
    let ix = index_of("matrix");
    let err = run_harvest(
        "int x = 1; assert(x == 1);",
        &ix,
        &HarvestConfig::default(),
        &scripted(),
    )
    .unwrap_err();
    assert!(matches!(
        err,
        HarvestError::Extract(ExtractError::NoClassUnderTest)
    ));
    let err = run_harvest(
        "A a; B b; assert(a.f());",
        &ix,
        &HarvestConfig::default(),
        &scripted(),
    )
    .unwrap_err();
    assert!(matches!(
        err,
        HarvestError::Extract(ExtractError::AmbiguousCut { .. })
    ));
}

#[test]
fn missing_toolchain_is_reported() {
    let backend = ProcessBackend {
        compiler: "/nonexistent/bin/g++".into(),
        flags: Vec::new(),
    };
    assert!(backend.check_available().is_err());
    let ix = index_of("matrix");
    let err = run_harvest(
        &fixture_text("matrix_test.cpp"),
        &ix,
        &HarvestConfig::default(),
        &backend,
    )
    .unwrap_err();
    assert!(matches!(err, HarvestError::BackendUnavailable(_)));

    let dir = tempfile::tempdir().unwrap();
    let result = backend.execute(&ExecutionRequest {
        label: "x".into(),
        work_dir: dir.path().to_path_buf(),
        sources: BTreeMap::from([("main.cpp".to_string(), "int main() {}".to_string())]),
        entry: EntrySpec {
            main_source: "main.cpp".into(),
            executable: "main".into(),
        },
        timeout: Duration::from_secs(5),
    });
    assert_eq!(result.exit_status, RunStatus::ToolMissing);
}

#[test]
fn invalid_config_is_rejected() {
    let ix = index_of("matrix");
    let cfg = HarvestConfig {
        max_candidates: 0,
        ..HarvestConfig::default()
    };
    let err = run_harvest(&fixture_text("matrix_test.cpp"), &ix, &cfg, &scripted()).unwrap_err();
    assert!(matches!(err, HarvestError::InvalidConfig(_)));
}

#[test]
fn real_toolchain_precision() {
    require_gxx!();
    let started = Instant::now();
    let ix = index_of("matrix");
    let test = fixture_text("matrix_test.cpp");
    let cfg = HarvestConfig::default();
    let backend = ProcessBackend::default();
    let res = run_harvest(&test, &ix, &cfg, &backend).unwrap();
    let expected = BTreeSet::from([
        id_at(&ix, "dense/Matrix.hpp"),
        id_at(&ix, "grid/Matrix2D.hpp"),
    ]);
    assert_eq!(ids(&res.passing), expected);
    assert_eq!(
        ids(&brute_force_passing(&ix, &test, &cfg, &backend)),
        expected
    );

    // every passing candidate passes again on its own
    let spec = infer_interface_from_test(&test).unwrap();
    let query = query_from_interface(&spec.inferred_interface);
    let harness = generate_harness(&spec);
    for id in &res.passing {
        let again = evaluate_candidate(&ix.components[id], &spec, &query, &harness, &cfg, &backend);
        assert_eq!(again.verdict, Verdict::Pass, "{id}: {}", again.log);
    }
    assert!(started.elapsed() < Duration::from_secs(120));
}

#[test]
fn transcript_agrees_with_the_real_toolchain() {
    require_gxx!();
    let ix = index_of("matrix");
    let test = fixture_text("matrix_test.cpp");
    let cfg = HarvestConfig::default();
    let real = run_harvest(&test, &ix, &cfg, &ProcessBackend::default()).unwrap();
    let canned = run_harvest(&test, &ix, &cfg, &scripted()).unwrap();
    let verdicts = |r: &codeharvest_core::harvest::HarvestResult| -> Vec<(ComponentId, Verdict)> {
        r.outcomes
            .iter()
            .map(|o| (o.id.clone(), o.verdict))
            .collect()
    };
    assert_eq!(verdicts(&real), verdicts(&canned));
}

/// Builds and runs `test` against the single class in `candidate`.
fn run_one(candidate: &str, test: &str, cfg: &HarvestConfig) -> CandidateOutcome {
    let record = extract_components(candidate, "candidate.hpp")
        .unwrap()
        .remove(0);
    let spec = infer_interface_from_test(test).unwrap();
    let query = query_from_interface(&spec.inferred_interface);
    evaluate_candidate(
        &record,
        &spec,
        &query,
        &generate_harness(&spec),
        cfg,
        &ProcessBackend::default(),
    )
}

const COUNTER: &str = r#"
class Counter {
public:
    void inc() { ++n; }
    int value() const { return n; }
private:
    int n = 0;
};
"#;

#[test]
fn harness_protocol_all_pass() {
    require_gxx!();
    let test = "Counter c;\nassert(c.value() == 0);\nc.inc();\nassert(c.value() == 1);\nc.inc();\nassert(c.value() == 2);\n";
    let out = run_one(COUNTER, test, &HarvestConfig::default());
    assert_eq!(out.verdict, Verdict::Pass, "{}", out.log);
    assert_eq!(
        out.log
            .lines()
            .filter(|l| l.starts_with("ASSERT_OK "))
            .count(),
        3
    );
}

#[test]
fn harness_protocol_second_assertion_fails() {
    require_gxx!();
    let test =
        "Counter c;\nassert(c.value() == 0);\nassert(c.value() == 5);\nassert(c.value() == 0);\n";
    let out = run_one(COUNTER, test, &HarvestConfig::default());
    assert_eq!(out.verdict, Verdict::Fail, "{}", out.log);
    assert!(out.log.lines().any(|l| l == "ASSERT_FAIL 2"), "{}", out.log);
}

#[test]
fn throwing_before_any_assertion_is_a_runtime_error() {
    require_gxx!();
    let candidate = "#include <stdexcept>\nclass Counter {\npublic:\n    int value() const { throw std::runtime_error(\"no\"); }\n};\n";
    let out = run_one(
        candidate,
        "Counter c;\nassert(c.value() == 0);\n",
        &HarvestConfig::default(),
    );
    assert_eq!(out.verdict, Verdict::RuntimeError, "{}", out.log);
    assert!(!out.log.contains("ASSERT_"));
}

#[test]
fn broken_candidate_is_a_compile_error() {
    require_gxx!();
    let candidate =
        "class Counter {\npublic:\n    int value() const { return missing_symbol + 1; }\n};\n";
    let out = run_one(
        candidate,
        "Counter c;\nassert(c.value() == 0);\n",
        &HarvestConfig::default(),
    );
    assert_eq!(out.verdict, Verdict::CompileError, "{}", out.log);
}

#[test]
fn endless_candidate_times_out() {
    require_gxx!();
    let candidate = "class Counter {\npublic:\n    int value() const {\n        volatile long spin = 0;\n        while (true) { ++spin; }\n        return 0;\n    }\n};\n";
    let cfg = HarvestConfig {
        per_candidate_timeout: 2.0,
        ..HarvestConfig::default()
    };
    let started = Instant::now();
    let out = run_one(candidate, "Counter c;\nassert(c.value() == 0);\n", &cfg);
    let elapsed = started.elapsed();
    assert_eq!(out.verdict, Verdict::Timeout, "{}", out.log);
    assert!(
        elapsed >= Duration::from_millis(1900) && elapsed < Duration::from_secs(5),
        "{elapsed:?}"
    );
}

#[test]
fn output_is_capped() {
    require_gxx!();
    let candidate = "#include <cstdio>\nclass Counter {\npublic:\n    int value() const {\n        for (int i = 0; i < 200000; ++i) std::puts(\"xxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxx\");\n        return 0;\n    }\n};\n";
    let record = extract_components(candidate, "c.hpp").unwrap().remove(0);
    let spec = infer_interface_from_test("Counter c;\nassert(c.value() == 0);\n").unwrap();
    let dir = tempfile::tempdir().unwrap();
    let backend = ProcessBackend::default();
    let result = backend.execute(&ExecutionRequest {
        label: "cap".into(),
        work_dir: dir.path().to_path_buf(),
        sources: BTreeMap::from([
            ("harness.cpp".to_string(), generate_harness(&spec)),
            ("candidate.hpp".to_string(), record.source.clone()),
        ]),
        entry: EntrySpec {
            main_source: "harness.cpp".into(),
            executable: "harness".into(),
        },
        timeout: Duration::from_secs(30),
    });
    assert_eq!(result.exit_status, RunStatus::Ok);
    assert!(result.stdout.len() <= OUTPUT_CAP);
    assert!(
        result.stdout.ends_with("[output truncated]\n"),
        "{}",
        result.stdout.len()
    );
}

#[test]
fn candidates_see_a_scrubbed_environment() {
    require_gxx!();
    let candidate = r#"#include <cstdlib>
#include <cstring>
#include <unistd.h>
class Probe {
public:
    bool inheritedCargo() const { return std::getenv("CARGO_MANIFEST_DIR") != nullptr; }
    bool homeIsWorkDir() const {
        char cwd[4096];
        const char* home = std::getenv("HOME");
        return getcwd(cwd, sizeof cwd) && home && std::strcmp(cwd, home) == 0;
    }
};
"#;
    let test = "Probe p;\nassert(!p.inheritedCargo());\nassert(p.homeIsWorkDir());\n";
    assert!(std::env::var_os("CARGO_MANIFEST_DIR").is_some());
    let out = run_one(candidate, test, &HarvestConfig::default());
    assert_eq!(out.verdict, Verdict::Pass, "{}", out.log);
}

#[test]
fn work_dirs_are_removed_unless_kept() {
    require_gxx!();
    let root = tempfile::tempdir().unwrap();
    let cfg = HarvestConfig {
        work_root: Some(root.path().to_path_buf()),
        ..HarvestConfig::default()
    };
    let out = run_one(COUNTER, "Counter c;\nassert(c.value() == 0);\n", &cfg);
    assert_eq!(out.verdict, Verdict::Pass);
    assert_eq!(std::fs::read_dir(root.path()).unwrap().count(), 0);

    let keep = HarvestConfig {
        keep_work_dirs: true,
        ..cfg
    };
    run_one(COUNTER, "Counter c;\nassert(c.value() == 0);\n", &keep);
    let kept: Vec<_> = std::fs::read_dir(root.path())
        .unwrap()
        .filter_map(Result::ok)
        .collect();
    assert_eq!(kept.len(), 1);
    assert!(kept[0].path().join("harness.cpp").exists());
}
