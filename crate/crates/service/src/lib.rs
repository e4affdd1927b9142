//! HTTP/JSON facade over a loaded corpus index: search, asynchronous harvest
//! jobs, component details and group pictures.

pub mod error;
pub mod jobs;

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path as UrlPath, State};
use axum::http::StatusCode;
use axum::routing::{get, post};
use axum::{Json, Router};
use codeharvest_core::analysis::{
    group_picture, render_skeleton, GroupPicture, MetricsReport, DEFAULT_THRESHOLD,
};
use codeharvest_core::extract::ExtractError;
use codeharvest_core::harvest::{
    run_harvest_observed, ExecutionBackend, HarvestConfig, HarvestError, HarvestObserver,
    HarvestPhase, LimitedBackend,
};
use codeharvest_core::index::{
    load, search_keyword, search_mql, CorpusIndex, IndexError, SearchConstraints, SearchHit,
};
use codeharvest_core::mql::{parse_mql, MqlQuery};
use codeharvest_core::{ComponentId, ComponentKind, ComponentRecord, InterfaceSpec, TypeName};
use serde::{Deserialize, Serialize};
use tower_http::services::ServeDir;

pub use error::{ApiError, ErrorBody, Position};
pub use jobs::{JobRecord, JobState, JobStore, Progress, StoreError, JOBS_FILE, RESTART_MARKER};

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error(transparent)]
    Index(#[from] IndexError),
    #[error(transparent)]
    Store(#[from] StoreError),
}

/// Everything a request handler needs. The index is shared read-only; the
/// backend is shared by all jobs, so its permit count caps parallelism globally.
pub struct AppState {
    pub index: Arc<CorpusIndex>,
    pub jobs: Arc<JobStore>,
    pub backend: Arc<dyn ExecutionBackend>,
    pub harvest_defaults: HarvestConfig,
}

impl AppState {
    /// Loads the index in `index_dir` and opens its job store.
    pub fn open(
        index_dir: &Path,
        backend: Arc<dyn ExecutionBackend>,
        max_parallel: usize,
    ) -> Result<Self, ServiceError> {
        let index = load(index_dir)?;
        let jobs = JobStore::open(index_dir)?;
        Ok(Self::new(index, jobs, backend, max_parallel))
    }

    pub fn new(
        index: CorpusIndex,
        jobs: JobStore,
        backend: Arc<dyn ExecutionBackend>,
        max_parallel: usize,
    ) -> Self {
        Self {
            index: Arc::new(index),
            jobs: Arc::new(jobs),
            backend: Arc::new(LimitedBackend::new(backend, max_parallel)),
            harvest_defaults: HarvestConfig::default(),
        }
    }
}

type Shared = Arc<AppState>;

pub fn router(state: Shared, static_dir: Option<&Path>) -> Router {
    let api = Router::new()
        .route("/api/v1/health", get(health))
        .route("/api/v1/search", post(search))
        .route("/api/v1/harvest", post(submit_harvest))
        .route("/api/v1/harvest/{job_id}", get(harvest_status))
        .route("/api/v1/components/{id}", get(component))
        .route("/api/v1/group-picture", post(group_picture_handler))
        .with_state(state);
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api.fallback(|| async { ApiError::not_found("no such route") }),
    }
}

pub async fn serve(listener: tokio::net::TcpListener, app: Router) -> std::io::Result<()> {
    axum::serve(listener, app).await
}

fn body<T>(payload: Result<Json<T>, JsonRejection>) -> Result<T, ApiError> {
    payload
        .map(|Json(v)| v)
        .map_err(|e| ApiError::new(e.status(), "BAD_REQUEST", e.body_text()))
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Health {
    pub status: String,
    pub index_version: u32,
    pub components: usize,
}

async fn health(State(st): State<Shared>) -> Json<Health> {
    Json(Health {
        status: "ok".into(),
        index_version: st.index.manifest.format_version,
        components: st.index.components.len(),
    })
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum Terms {
    List(Vec<String>),
    Text(String),
}

impl Terms {
    fn into_vec(self) -> Vec<String> {
        match self {
            Terms::List(v) => v,
            Terms::Text(s) => s.split_whitespace().map(str::to_string).collect(),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct SearchRequest {
    pub mql: Option<String>,
    pub terms: Option<Terms>,
    #[serde(default)]
    pub constraints: SearchConstraints,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MetricsSummary {
    pub loc: usize,
    pub cyclomatic: usize,
    pub halstead_volume: f64,
}

impl From<&MetricsReport> for MetricsSummary {
    fn from(m: &MetricsReport) -> Self {
        Self {
            loc: m.loc,
            cyclomatic: m.cyclomatic,
            halstead_volume: m.halstead.volume,
        }
    }
}

/// A search hit with enough of its component to list it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct HitView {
    #[serde(flatten)]
    pub hit: SearchHit,
    pub class_name: String,
    pub kind: ComponentKind,
    pub path: String,
    pub metrics: MetricsSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResponse {
    pub hits: Vec<HitView>,
}

fn invalid(e: IndexError) -> ApiError {
    ApiError::unprocessable(e.to_string())
}

async fn search(
    State(st): State<Shared>,
    payload: Result<Json<SearchRequest>, JsonRejection>,
) -> Result<Json<SearchResponse>, ApiError> {
    let req = body(payload)?;
    let hits = match (req.mql, req.terms) {
        (Some(text), None) => {
            let q = parse_mql(&text)?;
            search_mql(&st.index, &q, &req.constraints).map_err(invalid)?
        }
        (None, Some(terms)) => {
            search_keyword(&st.index, &terms.into_vec(), &req.constraints).map_err(invalid)?
        }
        _ => {
            return Err(ApiError::unprocessable(
                "give exactly one of `mql` and `terms`",
            ))
        }
    };
    let hits = hits
        .into_iter()
        .filter_map(|hit| {
            let r = st.index.get(&hit.id)?;
            Some(HitView {
                class_name: r.interface.class_name.full_name(),
                kind: r.interface.kind,
                path: r.path.clone(),
                metrics: (&r.metrics).into(),
                hit,
            })
        })
        .collect();
    Ok(Json(SearchResponse { hits }))
}

/// Per-job settings a client may change.
#[derive(Debug, Default, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct HarvestOverrides {
    pub max_candidates: Option<usize>,
    pub per_candidate_timeout: Option<f64>,
    pub parallelism: Option<usize>,
    pub dedupe: Option<bool>,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct HarvestRequest {
    pub test_source: String,
    #[serde(default)]
    pub config: HarvestOverrides,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Submitted {
    pub job_id: String,
}

/// Stable name of a harvest failure, used as the prefix of a job's error.
pub fn harvest_error_code(e: &HarvestError) -> &'static str {
    match e {
        HarvestError::Extract(ExtractError::UnparsableSource { .. }) => "UnparsableSource",
        HarvestError::Extract(ExtractError::NoClassUnderTest) => "NoClassUnderTest",
        HarvestError::Extract(ExtractError::AmbiguousCut { .. }) => "AmbiguousCut",
        HarvestError::Extract(ExtractError::NoAssertions) => "NoAssertions",
        HarvestError::BackendUnavailable(_) => "BackendUnavailable",
        HarvestError::Index(_) => "IndexError",
        HarvestError::InvalidConfig(_) => "InvalidConfig",
    }
}

struct JobObserver<'a> {
    jobs: &'a JobStore,
    job_id: &'a str,
}

impl HarvestObserver for JobObserver<'_> {
    fn phase(&self, phase: HarvestPhase) {
        if let Err(e) = self.jobs.transition(self.job_id, phase.into()) {
            eprintln!("job {}: {e}", self.job_id);
        }
    }

    fn progress(&self, tested: usize, total: usize) {
        self.jobs.set_progress(self.job_id, tested, total);
    }
}

fn run_job(st: &AppState, job_id: &str, test_source: &str, cfg: &HarvestConfig) {
    let observer = JobObserver {
        jobs: &st.jobs,
        job_id,
    };
    let outcome = run_harvest_observed(test_source, &st.index, cfg, &st.backend, &observer)
        .map_err(|e| format!("{}: {e}", harvest_error_code(&e)));
    if let Err(e) = st.jobs.finish(job_id, outcome) {
        eprintln!("job {job_id}: {e}");
    }
}

async fn submit_harvest(
    State(st): State<Shared>,
    payload: Result<Json<HarvestRequest>, JsonRejection>,
) -> Result<(StatusCode, Json<Submitted>), ApiError> {
    let req = body(payload)?;
    if req.test_source.trim().is_empty() {
        return Err(ApiError::unprocessable("`testSource` must not be empty"));
    }
    let d = &st.harvest_defaults;
    let o = req.config;
    let cfg = HarvestConfig {
        max_candidates: o.max_candidates.unwrap_or(d.max_candidates),
        per_candidate_timeout: o.per_candidate_timeout.unwrap_or(d.per_candidate_timeout),
        parallelism: o.parallelism.unwrap_or(d.parallelism),
        dedupe: o.dedupe.unwrap_or(d.dedupe),
        ..d.clone()
    };
    cfg.validate()
        .map_err(|e| ApiError::unprocessable(e.to_string()))?;
    let job = st
        .jobs
        .submit()
        .map_err(|e| ApiError::internal(e.to_string()))?;
    let job_id = job.job_id.clone();
    let worker = st.clone();
    tokio::task::spawn_blocking(move || run_job(&worker, &job.job_id, &req.test_source, &cfg));
    Ok((StatusCode::ACCEPTED, Json(Submitted { job_id })))
}

async fn harvest_status(
    State(st): State<Shared>,
    UrlPath(job_id): UrlPath<String>,
) -> Result<Json<JobRecord>, ApiError> {
    st.jobs
        .get(&job_id)
        .map(Json)
        .ok_or_else(|| ApiError::not_found(format!("no job {job_id}")))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentView {
    pub record: ComponentRecord,
    pub metrics: MetricsReport,
}

async fn component(
    State(st): State<Shared>,
    UrlPath(id): UrlPath<String>,
) -> Result<Json<ComponentView>, ApiError> {
    let r = st
        .index
        .get(&ComponentId::new(id.clone()))
        .ok_or_else(|| ApiError::not_found(format!("no component {id}")))?;
    Ok(Json(ComponentView {
        record: r.clone(),
        metrics: r.metrics.clone(),
    }))
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct GroupPictureRequest {
    pub mql: Option<String>,
    pub ids: Option<Vec<ComponentId>>,
    pub threshold: Option<f64>,
    #[serde(default)]
    pub constraints: SearchConstraints,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GroupPictureResponse {
    pub group_picture: GroupPicture,
    pub skeleton: String,
}

/// The class name most of the candidates share; ties go to the least name.
pub fn dominant_class_name(candidates: &[InterfaceSpec]) -> Option<TypeName> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for c in candidates {
        *counts.entry(c.class_name.simple.as_str()).or_default() += 1;
    }
    let best = counts.values().copied().max()?;
    counts
        .into_iter()
        .find(|&(_, n)| n == best)
        .map(|(name, _)| TypeName::simple(name))
}

/// Name for the group picture of a query's hits: the query's class name
/// unless it is a pattern.
pub fn group_class_name(
    query: Option<&MqlQuery>,
    candidates: &[InterfaceSpec],
) -> Option<TypeName> {
    match query {
        Some(q) if !q.class_name.contains('*') => Some(TypeName::simple(q.class_name.clone())),
        _ => dominant_class_name(candidates),
    }
}

async fn group_picture_handler(
    State(st): State<Shared>,
    payload: Result<Json<GroupPictureRequest>, JsonRejection>,
) -> Result<Json<GroupPictureResponse>, ApiError> {
    let req = body(payload)?;
    let threshold = req.threshold.unwrap_or(DEFAULT_THRESHOLD);
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(ApiError::unprocessable("`threshold` must be in (0, 1]"));
    }
    let (query, ids) = match (req.mql, req.ids) {
        (Some(text), None) => {
            let q = parse_mql(&text)?;
            let hits = search_mql(&st.index, &q, &req.constraints).map_err(invalid)?;
            (Some(q), hits.into_iter().map(|h| h.id).collect())
        }
        (None, Some(ids)) => (None, ids),
        _ => {
            return Err(ApiError::unprocessable(
                "give exactly one of `mql` and `ids`",
            ))
        }
    };
    let mut candidates = Vec::with_capacity(ids.len());
    for id in &ids {
        let r = st
            .index
            .get(id)
            .ok_or_else(|| ApiError::not_found(format!("no component {id}")))?;
        candidates.push(r.interface.clone());
    }
    if candidates.is_empty() {
        return Err(ApiError::unprocessable("the candidate set is empty"));
    }
    let name = group_class_name(query.as_ref(), &candidates).expect("candidates are not empty");
    let gp = group_picture(&candidates, threshold, name);
    let skeleton = render_skeleton(&gp);
    Ok(Json(GroupPictureResponse {
        group_picture: gp,
        skeleton,
    }))
}
