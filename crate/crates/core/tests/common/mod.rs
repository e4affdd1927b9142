#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;

use codeharvest_core::extract::infer_interface_from_test;
use codeharvest_core::harvest::{
    evaluate_candidate, generate_harness, query_from_interface, ExecutionBackend, HarvestConfig,
    Verdict,
};
use codeharvest_core::index::{build_index, CorpusIndex};
use codeharvest_core::mql::match_interface;
use codeharvest_core::{ComponentId, ComponentKind};

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

pub fn fixture_text(rel: &str) -> String {
    std::fs::read_to_string(fixtures().join(rel)).unwrap_or_else(|e| panic!("{rel}: {e}"))
}

pub fn index_of(rel: &str) -> CorpusIndex {
    build_index(&fixtures().join(rel)).unwrap_or_else(|e| panic!("{rel}: {e}"))
}

pub fn id_at(ix: &CorpusIndex, path: &str) -> ComponentId {
    ix.components
        .values()
        .find(|r| r.path == path)
        .map(|r| r.id.clone())
        .unwrap_or_else(|| panic!("no component at {path}"))
}

pub fn gxx_available() -> bool {
    Command::new("g++")
        .arg("--version")
        .output()
        .is_ok_and(|o| o.status.success())
}

/// Runs the harness against every class in the index whose interface matches
/// the test's query, without going through the search.
pub fn brute_force_passing(
    ix: &CorpusIndex,
    test_source: &str,
    cfg: &HarvestConfig,
    backend: &dyn ExecutionBackend,
) -> Vec<ComponentId> {
    let test = infer_interface_from_test(test_source).expect("test parses");
    let query = query_from_interface(&test.inferred_interface);
    let harness = generate_harness(&test);
    ix.components
        .values()
        .filter(|r| r.interface.kind == ComponentKind::Class)
        .filter(|r| match_interface(&query, &r.interface).matched)
        .filter(|r| {
            evaluate_candidate(r, &test, &query, &harness, cfg, backend).verdict == Verdict::Pass
        })
        .map(|r| r.id.clone())
        .collect()
}

/// Relative path -> (bytes, modification time) for everything under `root`.
pub fn tree_snapshot(root: &Path) -> BTreeMap<String, (Vec<u8>, Option<std::time::SystemTime>)> {
    walkdir::WalkDir::new(root)
        .sort_by_file_name()
        .into_iter()
        .filter_map(Result::ok)
        .map(|e| {
            let rel = e
                .path()
                .strip_prefix(root)
                .unwrap()
                .to_string_lossy()
                .into_owned();
            let meta = e.metadata().ok();
            let bytes = if e.file_type().is_file() {
                std::fs::read(e.path()).unwrap_or_default()
            } else {
                Vec::new()
            };
            (rel, (bytes, meta.and_then(|m| m.modified().ok())))
        })
        .collect()
}

/// Every file under `dir`, as relative path -> bytes.
pub fn dir_bytes(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    walkdir::WalkDir::new(dir)
        .sort_by_file_name()
        .into_iter()
        .filter_map(Result::ok)
        .filter(|e| e.file_type().is_file())
        .map(|e| {
            let rel = e
                .path()
                .strip_prefix(dir)
                .unwrap()
                .to_string_lossy()
                .into_owned();
            (rel, std::fs::read(e.path()).unwrap())
        })
        .collect()
}
