//! `codeharvest`: build indexes, search them, harvest components with a test,
//! inspect metrics and group pictures, watch a project, or serve the HTTP API.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use codeharvest_core::analysis::{
    compute_metrics, group_picture, render_skeleton, GroupPicture, DEFAULT_THRESHOLD,
};
use codeharvest_core::harvest::{
    run_harvest, ExecutionBackend, HarvestConfig, ProcessBackend, ScriptedBackend,
};
use codeharvest_core::index::{
    build_index, load, persist, search_keyword, search_mql, CorpusIndex, SearchConstraints,
};
use codeharvest_core::mql::{parse_mql, SyntaxError};
use codeharvest_core::workspace::{watch_project, AgentConfig, AgentEvent};
use codeharvest_core::{ComponentId, ComponentKind};
use serde::Serialize;

#[derive(Parser)]
#[command(
    name = "codeharvest",
    version,
    about = "Interface-driven component search with test-based filtering"
)]
struct Cli {
    /// Print results as JSON instead of text.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Index management.
    Index {
        #[command(subcommand)]
        action: IndexAction,
    },
    /// Search an index by MQL query or keywords.
    Search(SearchArgs),
    /// Find components that pass a test.
    Harvest(HarvestArgs),
    /// Metrics of a source file or an indexed component.
    Metrics(MetricsArgs),
    /// Characteristic group picture of a set of components.
    GroupPicture(GroupPictureArgs),
    /// Watch a project and print search recommendations as its interfaces change.
    Watch(WatchArgs),
    /// Serve the HTTP API.
    Serve(ServeArgs),
}

#[derive(Subcommand)]
enum IndexAction {
    /// Index every source file under a corpus directory.
    Build {
        #[arg(long)]
        corpus: PathBuf,
        /// Output directory.
        #[arg(long, env = "CODEHARVEST_INDEX")]
        index: PathBuf,
    },
}

#[derive(Args)]
struct IndexArg {
    /// Index directory.
    #[arg(long, env = "CODEHARVEST_INDEX")]
    index: PathBuf,
}

#[derive(Args)]
struct ConstraintArgs {
    /// Collapse components with identical normalized source.
    #[arg(long)]
    dedupe: bool,
    /// Leave out a component kind (class, interface, test); repeatable.
    #[arg(long = "exclude-kind", value_parser = parse_kind)]
    exclude_kinds: Vec<ComponentKind>,
    #[arg(long, default_value_t = 50, value_parser = clap::value_parser!(u64).range(1..))]
    max_results: u64,
    /// Only components whose corpus path starts with this prefix.
    #[arg(long)]
    path_prefix: Option<String>,
}

impl ConstraintArgs {
    fn constraints(&self) -> SearchConstraints {
        SearchConstraints {
            dedupe: self.dedupe,
            exclude_kinds: self.exclude_kinds.iter().copied().collect(),
            max_results: self.max_results as usize,
            path_prefix: self.path_prefix.clone(),
        }
    }
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct QueryArgs {
    /// Interface query, e.g. "Stack(push(int):void; pop():int)".
    #[arg(long)]
    mql: Option<String>,
    /// Keywords.
    #[arg(long, num_args = 1..)]
    terms: Option<Vec<String>>,
}

#[derive(Args)]
struct SearchArgs {
    #[command(flatten)]
    index: IndexArg,
    #[command(flatten)]
    query: QueryArgs,
    #[command(flatten)]
    constraints: ConstraintArgs,
}

#[derive(Clone)]
enum BackendSpec {
    Real,
    Scripted(Arc<ScriptedBackend>),
}

impl BackendSpec {
    fn backend(&self) -> Arc<dyn ExecutionBackend> {
        match self {
            BackendSpec::Real => Arc::new(ProcessBackend::default()),
            BackendSpec::Scripted(b) => b.clone(),
        }
    }
}

fn parse_backend(s: &str) -> Result<BackendSpec, String> {
    match s.split_once(':') {
        None if s == "real" => Ok(BackendSpec::Real),
        Some(("scripted", file)) if !file.is_empty() => {
            ScriptedBackend::from_file(Path::new(file)).map(|b| BackendSpec::Scripted(Arc::new(b)))
        }
        _ => Err("expected `real` or `scripted:<transcript file>`".into()),
    }
}

fn parse_kind(s: &str) -> Result<ComponentKind, String> {
    match s.to_ascii_lowercase().as_str() {
        "class" => Ok(ComponentKind::Class),
        "interface" => Ok(ComponentKind::Interface),
        "test" => Ok(ComponentKind::Test),
        _ => Err("expected class, interface or test".into()),
    }
}

fn parse_fraction(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v <= 1.0 {
        Ok(v)
    } else {
        Err("must be in (0, 1]".into())
    }
}

fn parse_seconds(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err("must be a positive number of seconds".into())
    }
}

#[derive(Args)]
struct HarvestArgs {
    #[command(flatten)]
    index: IndexArg,
    /// Test source whose class under test is searched for.
    #[arg(long)]
    test: PathBuf,
    /// `real` (system C++ compiler) or `scripted:<transcript file>`.
    #[arg(long, default_value = "real", value_parser = parse_backend)]
    backend: BackendSpec,
    #[arg(long, default_value_t = 25, value_parser = clap::value_parser!(u64).range(1..))]
    max_candidates: u64,
    /// Seconds allowed for building and running one candidate.
    #[arg(long, default_value = "10", value_parser = parse_seconds)]
    timeout: f64,
    #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(u64).range(1..))]
    parallelism: u64,
    #[arg(long)]
    dedupe: bool,
    #[arg(long)]
    keep_work_dirs: bool,
    /// Parent directory for candidate work directories.
    #[arg(long)]
    work_root: Option<PathBuf>,
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct MetricsTarget {
    /// Source file to measure.
    #[arg(long)]
    file: Option<PathBuf>,
    /// Indexed component to report.
    #[arg(long, requires = "index")]
    id: Option<String>,
}

#[derive(Args)]
struct MetricsArgs {
    #[command(flatten)]
    target: MetricsTarget,
    #[arg(long, env = "CODEHARVEST_INDEX")]
    index: Option<PathBuf>,
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct Candidates {
    /// Use the hits of this query as candidates.
    #[arg(long)]
    mql: Option<String>,
    /// Candidate component ids.
    #[arg(long = "id", num_args = 1..)]
    ids: Option<Vec<String>>,
}

#[derive(Args)]
struct GroupPictureArgs {
    #[command(flatten)]
    index: IndexArg,
    #[command(flatten)]
    candidates: Candidates,
    /// Minimum share of candidates declaring a method.
    #[arg(long, default_value_t = DEFAULT_THRESHOLD, value_parser = parse_fraction)]
    threshold: f64,
}

#[derive(Args)]
struct WatchArgs {
    #[command(flatten)]
    index: IndexArg,
    /// Project directory to watch.
    #[arg(long)]
    project: PathBuf,
    /// Seconds a file must stay unchanged before it is analyzed.
    #[arg(long, default_value = "2", value_parser = parse_seconds)]
    debounce: f64,
    #[arg(long, default_value_t = 500, value_parser = clap::value_parser!(u64).range(1..))]
    poll_ms: u64,
    /// Also append recommendations to this JSONL file (outside the project).
    #[arg(long)]
    sink: Option<PathBuf>,
    /// Recommend components for types the project uses but does not declare.
    #[arg(long)]
    missing_types: bool,
    /// Stop after this many seconds instead of running until interrupted.
    #[arg(long, value_parser = parse_seconds)]
    duration: Option<f64>,
    #[command(flatten)]
    constraints: ConstraintArgs,
}

#[derive(Args)]
struct ServeArgs {
    #[command(flatten)]
    index: IndexArg,
    #[arg(long, default_value = "127.0.0.1:8080")]
    addr: String,
    /// Directory of static files served outside the API routes.
    #[arg(long = "static")]
    static_dir: Option<PathBuf>,
    #[arg(long, default_value = "real", value_parser = parse_backend)]
    backend: BackendSpec,
    /// Candidate executions allowed at once across all jobs.
    #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(u64).range(1..))]
    max_parallel: u64,
}

/// How a command failed: bad invocation (exit 2) or a domain error (exit 1).
enum Failure {
    Usage(String),
    Domain(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Domain(e)
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Domain(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Outcome {
    let json = cli.json;
    match cli.command {
        Command::Index {
            action: IndexAction::Build { corpus, index },
        } => index_build(&corpus, &index, json),
        Command::Search(a) => search(a, json),
        Command::Harvest(a) => harvest(a, json),
        Command::Metrics(a) => metrics(a, json),
        Command::GroupPicture(a) => group_picture_cmd(a, json),
        Command::Watch(a) => watch(a, json),
        Command::Serve(a) => serve(a),
    }
}

fn print_json<T: Serialize>(value: &T) -> Outcome {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value).context("writing output")?;
    writeln!(out).context("writing output")?;
    Ok(())
}

fn open_index(dir: &Path) -> Result<CorpusIndex, Failure> {
    load(dir)
        .with_context(|| format!("loading index {}", dir.display()))
        .map_err(Failure::Domain)
}

/// Renders a syntax error with a caret under the offending column.
fn syntax_failure(text: &str, e: &SyntaxError) -> Failure {
    let line = text.lines().nth(e.line.saturating_sub(1)).unwrap_or("");
    let caret = format!("{}^", " ".repeat(e.column.saturating_sub(1)));
    Failure::Domain(anyhow!("{e}\n  {line}\n  {caret}"))
}

fn parse_query(text: &str) -> Result<codeharvest_core::mql::MqlQuery, Failure> {
    parse_mql(text).map_err(|e| syntax_failure(text, &e))
}

fn index_build(corpus: &Path, index: &Path, json: bool) -> Outcome {
    let ix = build_index(corpus).with_context(|| format!("indexing {}", corpus.display()))?;
    persist(&ix, index).with_context(|| format!("writing {}", index.display()))?;
    if json {
        return print_json(&ix.manifest);
    }
    for s in &ix.manifest.skipped {
        eprintln!("skipped {}:{}:{}: {}", s.path, s.line, s.column, s.message);
    }
    println!(
        "indexed {} components from {} into {}",
        ix.components.len(),
        corpus.display(),
        index.display()
    );
    Ok(())
}

fn search(a: SearchArgs, json: bool) -> Outcome {
    let constraints = a.constraints.constraints();
    let query = a.query.mql.as_deref().map(parse_query).transpose()?;
    let ix = open_index(&a.index.index)?;
    let hits = match (query, a.query.terms) {
        (Some(q), _) => search_mql(&ix, &q, &constraints),
        (None, Some(terms)) => search_keyword(&ix, &terms, &constraints),
        (None, None) => return Err(Failure::Usage("give --mql or --terms".into())),
    }
    .context("searching")?;
    if json {
        return print_json(&hits);
    }
    if hits.is_empty() {
        println!("no components");
    }
    for h in &hits {
        let r = &ix.components[&h.id];
        println!(
            "{:>8.4}  {:>5.3}  {}  {}  {}",
            h.score,
            h.interface_score,
            h.id,
            r.interface.class_name.full_name(),
            r.path
        );
    }
    Ok(())
}

fn harvest(a: HarvestArgs, json: bool) -> Outcome {
    let cfg = HarvestConfig {
        max_candidates: a.max_candidates as usize,
        per_candidate_timeout: a.timeout,
        parallelism: a.parallelism as usize,
        keep_work_dirs: a.keep_work_dirs,
        dedupe: a.dedupe,
        work_root: a.work_root,
    };
    cfg.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    let test = std::fs::read_to_string(&a.test)
        .with_context(|| format!("reading {}", a.test.display()))?;
    let ix = open_index(&a.index.index)?;
    let backend = a.backend.backend();
    let res = run_harvest(&test, &ix, &cfg, &backend)
        .map_err(|e| anyhow!("{}: {e}", codeharvest_service::harvest_error_code(&e)))?;
    if json {
        return print_json(&res);
    }
    println!("query: {}", res.query);
    for o in &res.outcomes {
        let path = ix.get(&o.id).map_or("", |r| r.path.as_str());
        println!(
            "{:<14} {}  {}  {}ms",
            format!("{:?}", o.verdict),
            o.id,
            path,
            o.duration_ms
        );
    }
    println!(
        "{} of {} candidates pass",
        res.passing.len(),
        res.outcomes.len()
    );
    Ok(())
}

fn metrics(a: MetricsArgs, json: bool) -> Outcome {
    let report = match (a.target.file, a.target.id, a.index) {
        (Some(file), _, _) => {
            let src = std::fs::read_to_string(&file)
                .with_context(|| format!("reading {}", file.display()))?;
            compute_metrics(&src).with_context(|| file.display().to_string())?
        }
        (None, Some(id), Some(index)) => {
            let ix = open_index(&index)?;
            ix.get(&ComponentId::new(id.clone()))
                .ok_or_else(|| anyhow!("no component {id} in {}", index.display()))?
                .metrics
                .clone()
        }
        _ => return Err(Failure::Usage("give --file, or --id with --index".into())),
    };
    if json {
        return print_json(&report);
    }
    let h = &report.halstead;
    println!("loc          {}", report.loc);
    println!("cyclomatic   {}", report.cyclomatic);
    println!(
        "operators    {} distinct, {} total",
        h.n1, h.total_operators
    );
    println!("operands     {} distinct, {} total", h.n2, h.total_operands);
    println!("volume       {:.3}", h.volume);
    println!("difficulty   {:.3}", h.difficulty);
    println!("effort       {:.3}", h.effort);
    Ok(())
}

fn group_picture_cmd(a: GroupPictureArgs, json: bool) -> Outcome {
    let query = a.candidates.mql.as_deref().map(parse_query).transpose()?;
    let ix = open_index(&a.index.index)?;
    let ids: Vec<ComponentId> = match (&query, a.candidates.ids) {
        (Some(q), _) => search_mql(&ix, q, &SearchConstraints::default())
            .context("searching")?
            .into_iter()
            .map(|h| h.id)
            .collect(),
        (None, Some(ids)) => ids.into_iter().map(ComponentId::new).collect(),
        (None, None) => return Err(Failure::Usage("give --mql or --id".into())),
    };
    let mut candidates = Vec::new();
    for id in &ids {
        let r = ix.get(id).ok_or_else(|| anyhow!("no component {id}"))?;
        candidates.push(r.interface.clone());
    }
    if candidates.is_empty() {
        return Err(anyhow!("no candidates").into());
    }
    let name = codeharvest_service::group_class_name(query.as_ref(), &candidates)
        .expect("candidates are not empty");
    let gp: GroupPicture = group_picture(&candidates, a.threshold, name);
    if json {
        return print_json(&gp);
    }
    for m in &gp.members {
        println!("{:>5.2}  {}", m.support, m.display_signature);
    }
    println!();
    print!("{}", render_skeleton(&gp));
    Ok(())
}

fn watch(a: WatchArgs, json: bool) -> Outcome {
    let cfg = AgentConfig {
        debounce: Duration::from_secs_f64(a.debounce),
        poll_interval: Duration::from_millis(a.poll_ms),
        recommendation_sink: a.sink,
        constraints: a.constraints.constraints(),
        missing_types: a.missing_types,
        ..AgentConfig::new(&a.project)
    };
    if let Err(e) = cfg.validate() {
        return Err(Failure::Usage(e));
    }
    let ix = open_index(&a.index.index)?;
    let handle = watch_project(cfg, Arc::new(ix)).map_err(|e| anyhow!(e))?;
    eprintln!("watching {}", a.project.display());
    let deadline = a
        .duration
        .map(|s| Instant::now() + Duration::from_secs_f64(s));
    loop {
        let wait = match deadline {
            Some(d) => match d.checked_duration_since(Instant::now()) {
                Some(left) => left.min(Duration::from_millis(250)),
                None => break,
            },
            None => Duration::from_millis(250),
        };
        match handle.recv_timeout(wait) {
            Some(AgentEvent::Recommendation(rec)) => {
                let mut out = std::io::stdout().lock();
                if json {
                    serde_json::to_writer(&mut out, &rec).context("writing output")?;
                    writeln!(out).context("writing output")?;
                } else {
                    writeln!(
                        out,
                        "{:?} {}: {} ({} hits)",
                        rec.trigger,
                        rec.cud_path,
                        rec.query,
                        rec.hits.len()
                    )
                    .context("writing output")?;
                    for h in rec.hits.iter().take(5) {
                        writeln!(out, "    {:>8.4}  {}", h.score, h.id)
                            .context("writing output")?;
                    }
                }
                out.flush().context("writing output")?;
            }
            Some(AgentEvent::Error { message }) => return Err(anyhow!(message).into()),
            None => {}
        }
    }
    Ok(())
}

fn serve(a: ServeArgs) -> Outcome {
    let backend = a.backend.backend();
    let st = codeharvest_service::AppState::open(&a.index.index, backend, a.max_parallel as usize)
        .with_context(|| format!("opening {}", a.index.index.display()))?;
    let runtime = tokio::runtime::Runtime::new().context("starting runtime")?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind(&a.addr)
            .await
            .with_context(|| format!("binding {}", a.addr))?;
        let addr = listener.local_addr().context("reading bound address")?;
        eprintln!("listening on http://{addr}");
        let app = codeharvest_service::router(Arc::new(st), a.static_dir.as_deref());
        codeharvest_service::serve(listener, app)
            .await
            .context("serving")?;
        Ok::<(), anyhow::Error>(())
    })?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeSet;

    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn backend_specs() {
        assert!(matches!(parse_backend("real"), Ok(BackendSpec::Real)));
        assert!(parse_backend("scripted:").is_err());
        assert!(parse_backend("docker").is_err());
        assert!(parse_backend("scripted:/nonexistent.json").is_err());
    }

    #[test]
    fn fractions_and_kinds() {
        assert_eq!(parse_fraction("0.5"), Ok(0.5));
        assert!(parse_fraction("0").is_err());
        assert!(parse_fraction("1.5").is_err());
        assert_eq!(parse_kind("INTERFACE"), Ok(ComponentKind::Interface));
        assert!(parse_kind("enum").is_err());
        let set: BTreeSet<ComponentKind> = ["class", "test"]
            .iter()
            .map(|k| parse_kind(k).unwrap())
            .collect();
        assert_eq!(set.len(), 2);
    }
}
