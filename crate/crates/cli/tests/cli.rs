use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};
use std::time::{Duration, Instant};

use codeharvest_core::analysis::{compute_metrics, GroupPicture, MetricsReport};
use codeharvest_core::harvest::{run_harvest, HarvestConfig, HarvestResult, ScriptedBackend};
use codeharvest_core::index::{
    build_index, load, search_mql, IndexManifest, SearchConstraints, SearchHit,
};
use codeharvest_core::mql::parse_mql;
use codeharvest_core::workspace::Recommendation;

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures")
}

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_codeharvest"));
    c.env_remove("CODEHARVEST_INDEX");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

/// Builds an index of the fixture corpus `rel` with the CLI.
fn built(rel: &str) -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    let corpus = fixtures().join(rel);
    let o = run(&[
        "index",
        "build",
        "--corpus",
        corpus.to_str().unwrap(),
        "--index",
        dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    dir
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn index_build_writes_a_loadable_index() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = fixtures().join("matrix");
    let o = run(&[
        "--json",
        "index",
        "build",
        "--corpus",
        path(&corpus),
        "--index",
        path(dir.path()),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let manifest: IndexManifest = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(manifest.component_count, 8);
    assert_eq!(manifest.skipped.len(), 1);
    assert_eq!(load(dir.path()).unwrap(), build_index(&corpus).unwrap());

    let o = run(&[
        "index",
        "build",
        "--corpus",
        path(&corpus),
        "--index",
        path(dir.path()),
    ]);
    assert!(stdout(&o).starts_with("indexed 8 components"));
    assert!(
        stderr(&o).contains("broken/scratch.hpp:2:34"),
        "{}",
        stderr(&o)
    );
}

#[test]
fn search_json_is_the_library_result() {
    let ix = built("matrix");
    let text = "Matrix(add(Matrix):Matrix)";
    let args = [
        "search",
        "--index",
        path(ix.path()),
        "--mql",
        text,
        "--json",
    ];
    let o = run(&args);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).is_empty());
    let hits: Vec<SearchHit> = serde_json::from_str(&stdout(&o)).unwrap();
    let lib = search_mql(
        &load(ix.path()).unwrap(),
        &parse_mql(text).unwrap(),
        &SearchConstraints::default(),
    )
    .unwrap();
    assert_eq!(hits, lib);
    assert!(!hits.is_empty());
    assert_eq!(run(&args).stdout, o.stdout);

    let o = run(&[
        "search",
        "--index",
        path(ix.path()),
        "--terms",
        "add",
        "--exclude-kind",
        "interface",
        "--json",
    ]);
    let hits: Vec<SearchHit> = serde_json::from_str(&stdout(&o)).unwrap();
    let index = load(ix.path()).unwrap();
    assert!(!hits.is_empty());
    assert!(hits
        .iter()
        .all(|h| index.components[&h.id].path != "shapes/Shape.hpp"));
}

#[test]
fn index_directory_comes_from_the_environment() {
    let ix = built("keyword");
    let o = bin()
        .args(["search", "--terms", "matrix"])
        .env("CODEHARVEST_INDEX", ix.path())
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o).lines().count(), 2);
}

#[test]
fn syntax_errors_exit_1_with_a_diagnostic() {
    let ix = built("keyword");
    let o = run(&[
        "search",
        "--index",
        path(ix.path()),
        "--mql",
        "Matrix(add(",
        "--json",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(o.stdout.is_empty());
    let err = stderr(&o);
    assert!(err.contains("syntax error at 1:12"), "{err}");
    assert!(
        err.contains("Matrix(add(\n") && err.contains("           ^"),
        "{err}"
    );
}

#[test]
fn usage_errors_exit_2() {
    let ix = built("keyword");
    let ix = path(ix.path());
    for args in [
        vec!["search", "--index", ix],
        vec!["search", "--index", ix, "--mql", "A", "--terms", "a"],
        vec![
            "search",
            "--index",
            ix,
            "--terms",
            "a",
            "--max-results",
            "0",
        ],
        vec![
            "search",
            "--index",
            ix,
            "--terms",
            "a",
            "--exclude-kind",
            "enum",
        ],
        vec![
            "group-picture",
            "--index",
            ix,
            "--mql",
            "A",
            "--threshold",
            "1.5",
        ],
        vec![
            "harvest",
            "--index",
            ix,
            "--test",
            "t.cpp",
            "--backend",
            "docker",
        ],
        vec![
            "harvest",
            "--index",
            ix,
            "--test",
            "t.cpp",
            "--backend",
            "scripted:/nonexistent.json",
        ],
        vec![
            "harvest",
            "--index",
            ix,
            "--test",
            "t.cpp",
            "--parallelism",
            "0",
        ],
        vec!["metrics"],
        vec!["frobnicate"],
    ] {
        let o = run(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", stderr(&o));
        assert!(o.stdout.is_empty(), "{args:?}");
    }
    let sink_inside = tempfile::tempdir().unwrap();
    let o = run(&[
        "watch",
        "--index",
        ix,
        "--project",
        path(sink_inside.path()),
        "--sink",
        path(&sink_inside.path().join("recs.jsonl")),
    ]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn domain_errors_exit_1() {
    let missing = tempfile::tempdir().unwrap();
    let o = run(&[
        "search",
        "--index",
        path(&missing.path().join("none")),
        "--terms",
        "a",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("loading index"), "{}", stderr(&o));

    let ix = built("matrix");
    let test = missing.path().join("t.cpp");
    std::fs::write(&test, "int x = 1;\nassert(x == 1);\n").unwrap();
    let transcript = fixtures().join("matrix_transcript.json");
    let o = run(&[
        "harvest",
        "--index",
        path(ix.path()),
        "--test",
        path(&test),
        "--backend",
        &format!("scripted:{}", path(&transcript)),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("NoClassUnderTest"), "{}", stderr(&o));
}

#[test]
fn scripted_harvest_json_round_trips_and_is_deterministic() {
    let ix = built("matrix");
    let transcript = fixtures().join("matrix_transcript.json");
    let test = fixtures().join("matrix_test.cpp");
    let backend = format!("scripted:{}", path(&transcript));
    let args = [
        "harvest",
        "--index",
        path(ix.path()),
        "--test",
        path(&test),
        "--backend",
        &backend,
        "--json",
    ];
    let started = Instant::now();
    let o = run(&args);
    assert!(started.elapsed() < Duration::from_secs(5));
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).is_empty(), "{}", stderr(&o));
    let res: HarvestResult = serde_json::from_str(&stdout(&o)).unwrap();
    let lib = run_harvest(
        &std::fs::read_to_string(&test).unwrap(),
        &load(ix.path()).unwrap(),
        &HarvestConfig::default(),
        &ScriptedBackend::from_file(&transcript).unwrap(),
    )
    .unwrap();
    assert_eq!(res, lib);
    assert_eq!(res.passing.len(), 2);
    assert_eq!(run(&args).stdout, o.stdout);

    let human = run(&args[..args.len() - 1]);
    assert!(
        stdout(&human).contains("2 of 5 candidates pass"),
        "{}",
        stdout(&human)
    );
}

#[test]
fn metrics_of_a_file_and_a_component() {
    let file = fixtures().join("polynomial/coeffs/Polynomial.hpp");
    let o = run(&["metrics", "--file", path(&file), "--json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let m: MetricsReport = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(
        m,
        compute_metrics(&std::fs::read_to_string(&file).unwrap()).unwrap()
    );

    let ix = built("polynomial");
    let index = load(ix.path()).unwrap();
    let (id, record) = index.components.iter().next().unwrap();
    let o = run(&[
        "metrics",
        "--index",
        path(ix.path()),
        "--id",
        id.as_str(),
        "--json",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let m: MetricsReport = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(m, record.metrics);
    let o = run(&[
        "metrics",
        "--index",
        path(ix.path()),
        "--id",
        "0000000000000000",
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn polynomial_group_picture() {
    let ix = built("polynomial");
    let o = run(&[
        "group-picture",
        "--index",
        path(ix.path()),
        "--mql",
        "Polynomial",
        "--threshold",
        "0.5",
        "--json",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let gp: GroupPicture = serde_json::from_str(&stdout(&o)).unwrap();
    let shown: Vec<String> = gp
        .members
        .iter()
        .map(|m| m.display_signature.to_string())
        .collect();
    assert_eq!(
        shown,
        vec![
            "add(Polynomial):Polynomial",
            "toString():std::string",
            "getDegree():int"
        ]
    );

    let o = run(&[
        "group-picture",
        "--index",
        path(ix.path()),
        "--mql",
        "Polynomial",
    ]);
    let text = stdout(&o);
    assert!(text.contains("class Polynomial {"), "{text}");
    assert!(
        text.contains("Polynomial add(Polynomial arg1) {}"),
        "{text}"
    );

    let o = run(&[
        "group-picture",
        "--index",
        path(ix.path()),
        "--mql",
        "Zebra",
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn watch_prints_recommendations_as_jsonl() {
    let ix = built("matrix");
    let project = tempfile::tempdir().unwrap();
    let cud = project.path().join("Stack.hpp");
    std::fs::write(&cud, "class Stack {\npublic:\n    void push(int v);\n};\n").unwrap();
    let child = bin()
        .args([
            "watch",
            "--index",
            path(ix.path()),
            "--project",
            path(project.path()),
            "--debounce",
            "0.5",
            "--poll-ms",
            "100",
            "--duration",
            "3",
            "--json",
        ])
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    std::thread::sleep(Duration::from_millis(700));
    std::fs::write(
        &cud,
        "class Stack {\npublic:\n    void push(int v);\n    int pop();\n};\n",
    )
    .unwrap();
    let o = child.wait_with_output().unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let recs: Vec<Recommendation> = stdout(&o)
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(recs.len(), 1, "{}", stdout(&o));
    assert_eq!(recs[0].cud_path, "Stack.hpp");
    assert_eq!(
        recs[0].query.to_string(),
        "Stack(push(int):void; pop():int)"
    );
}

#[test]
fn serve_answers_http() {
    let ix = built("matrix");
    let mut child = bin()
        .args(["serve", "--index", path(ix.path()), "--addr", "127.0.0.1:0"])
        .stdout(Stdio::null())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    let mut line = String::new();
    BufReader::new(child.stderr.take().unwrap())
        .read_line(&mut line)
        .unwrap();
    let addr = line
        .trim()
        .strip_prefix("listening on http://")
        .unwrap_or_else(|| panic!("{line}"))
        .to_string();
    let mut s = std::net::TcpStream::connect(&addr).unwrap();
    s.write_all(b"GET /api/v1/health HTTP/1.1\r\nHost: x\r\nConnection: close\r\n\r\n")
        .unwrap();
    let mut response = String::new();
    s.read_to_string(&mut response).unwrap();
    child.kill().unwrap();
    child.wait().unwrap();
    assert!(response.starts_with("HTTP/1.1 200"), "{response}");
    assert!(response.contains("\"indexVersion\":1"), "{response}");
}
