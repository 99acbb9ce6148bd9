//! Local HTTP service behind the interactive flag-and-refit workflow.
//!
//! Sessions live in memory. Requests on one session run one at a time;
//! different sessions run concurrently. Every response body is a pure
//! function of the session's table and the requests made on it, so
//! replaying a request log against a fresh server reproduces the bodies.

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use cellca::diagnostics::{decompose_inertia, outlier_report};
use cellca::io::{read_table_str, render_map, MapKind, MapOptions, ReadOptions, SolutionDocument};
use cellca::reconstitution::{parse_cell_label, InitRule};
use cellca::{
    fit_ca, fit_supplementary, reconstitute, CaSolution, CellSet, ContingencyTable, Error,
    NegativePolicy, ReconstitutionConfig, ReconstitutionResult, SupplementarySolution,
    SupplementarySpec,
};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use tokio::sync::Mutex;
use tower_http::services::ServeDir;

const DEFAULT_TOP_N: usize = 5;

struct Session {
    table: ContingencyTable,
    cells: CellSet,
    config: ReconstitutionConfig,
    fit: CaSolution,
    base_document: String,
    reconstitution: Option<ReconstitutionResult>,
    supplementary: Option<SupplementarySolution>,
}

#[derive(Default)]
pub struct AppState {
    sessions: std::sync::Mutex<HashMap<String, Arc<Mutex<Session>>>>,
    next_id: AtomicU64,
}

impl AppState {
    fn session(&self, id: &str) -> Result<Arc<Mutex<Session>>, ApiError> {
        self.sessions
            .lock()
            .expect("session map lock")
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::UnknownSession(id.to_string()))
    }
}

enum ApiError {
    UnknownSession(String),
    BadRequest(Value),
    Compute(Error),
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        if e.is_input_error() {
            ApiError::BadRequest(e.payload())
        } else {
            ApiError::Compute(e)
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, body) = match self {
            ApiError::UnknownSession(id) => (
                StatusCode::NOT_FOUND,
                json!({ "error": "UnknownSession", "message": format!("no session `{id}`") }),
            ),
            ApiError::BadRequest(v) => (StatusCode::BAD_REQUEST, v),
            ApiError::Compute(e) => (StatusCode::UNPROCESSABLE_ENTITY, e.payload()),
        };
        (status, json_body(&body)).into_response()
    }
}

fn json_body(v: &impl Serialize) -> ([(header::HeaderName, &'static str); 1], String) {
    (
        [(header::CONTENT_TYPE, "application/json")],
        serde_json::to_string_pretty(v).expect("response serializes"),
    )
}

fn document_body(doc: String) -> Response {
    ([(header::CONTENT_TYPE, "application/json")], doc).into_response()
}

fn parse_json<T: for<'de> Deserialize<'de>>(body: &Bytes) -> Result<T, ApiError> {
    let text = if body.iter().all(|b| b.is_ascii_whitespace()) {
        &b"{}"[..]
    } else {
        &body[..]
    };
    serde_json::from_slice(text).map_err(|e| {
        ApiError::BadRequest(
            Error::Parse {
                line: e.line(),
                column: e.column(),
                message: e.to_string(),
            }
            .payload(),
        )
    })
}

/// Runs `f` on the locked session off the async runtime.
async fn with_session<T: Send + 'static>(
    state: &AppState,
    id: &str,
    f: impl FnOnce(&mut Session) -> Result<T, ApiError> + Send + 'static,
) -> Result<T, ApiError> {
    let session = state.session(id)?;
    let mut guard = session.lock_owned().await;
    tokio::task::spawn_blocking(move || f(&mut guard))
        .await
        .expect("session task panicked")
}

#[derive(Deserialize)]
struct UploadQuery {
    #[serde(default)]
    drop_empty: bool,
    top: Option<usize>,
}

async fn create_session(
    State(state): State<Arc<AppState>>,
    Query(q): Query<UploadQuery>,
    body: Bytes,
) -> Result<Response, ApiError> {
    let text = std::str::from_utf8(&body).map_err(|e| {
        ApiError::BadRequest(
            Error::Parse {
                line: 0,
                column: 0,
                message: format!("body is not UTF-8: {e}"),
            }
            .payload(),
        )
    })?;
    let opts = ReadOptions {
        drop_empty: q.drop_empty,
    };
    // a table that cannot be built is a bad upload, whatever the reason
    let table = read_table_str(text, &opts).map_err(|e| ApiError::BadRequest(e.payload()))?;
    let top = q.top.unwrap_or(DEFAULT_TOP_N);
    let session = tokio::task::spawn_blocking(move || -> Result<Session, Error> {
        let fit = fit_ca(&table)?;
        let report = outlier_report(&decompose_inertia(&table, &fit)?, top);
        let base_document = SolutionDocument::new(&table, &fit)
            .with_diagnostics(report)
            .to_json();
        Ok(Session {
            cells: CellSet::empty(),
            config: ReconstitutionConfig::default(),
            table,
            fit,
            base_document,
            reconstitution: None,
            supplementary: None,
        })
    })
    .await
    .expect("fit task panicked")?;

    let id = format!("s{}", state.next_id.fetch_add(1, Ordering::Relaxed) + 1);
    let body = format!(
        "{{\n  \"session\": {},\n  \"solution\": {}\n}}",
        serde_json::to_string(&id).expect("id serializes"),
        session.base_document.replace('\n', "\n  ")
    );
    state
        .sessions
        .lock()
        .expect("session map lock")
        .insert(id, Arc::new(Mutex::new(session)));
    Ok((StatusCode::CREATED, document_body(body)).into_response())
}

async fn get_solution(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> Result<Response, ApiError> {
    let doc = with_session(&state, &id, |s| Ok(s.base_document.clone())).await?;
    Ok(document_body(doc))
}

/// A cell given either as `"ROW:COL"` or as `{"row": .., "col": ..}`.
#[derive(Deserialize)]
#[serde(untagged)]
enum CellRef {
    Spec(String),
    Labels { row: String, col: String },
}

impl CellRef {
    fn resolve(&self, t: &ContingencyTable) -> Result<(usize, usize), Error> {
        match self {
            CellRef::Spec(s) => parse_cell_label(t, s),
            CellRef::Labels { row, col } => Ok((t.row_index(row)?, t.col_index(col)?)),
        }
    }
}

#[derive(Serialize)]
struct CellLabel<'a> {
    row: &'a str,
    col: &'a str,
}

fn cells_json(t: &ContingencyTable, cells: &CellSet) -> Value {
    let list: Vec<CellLabel> = cells
        .cells()
        .iter()
        .map(|&(i, j)| CellLabel {
            row: &t.row_labels()[i],
            col: &t.col_labels()[j],
        })
        .collect();
    json!({ "cells": list })
}

#[derive(Deserialize, Default)]
struct CellsBody {
    #[serde(default)]
    add: Vec<CellRef>,
    #[serde(default)]
    remove: Vec<CellRef>,
    #[serde(default)]
    clear: bool,
}

async fn update_cells(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Response, ApiError> {
    let req: CellsBody = parse_json(&body)?;
    let v = with_session(&state, &id, move |s| {
        let t = &s.table;
        let add = req
            .add
            .iter()
            .map(|c| c.resolve(t))
            .collect::<Result<Vec<_>, _>>()?;
        let remove = req
            .remove
            .iter()
            .map(|c| c.resolve(t))
            .collect::<Result<Vec<_>, _>>()?;
        let mut next: Vec<(usize, usize)> = if req.clear {
            Vec::new()
        } else {
            s.cells.cells().to_vec()
        };
        next.retain(|c| !remove.contains(c));
        for c in add {
            if !next.contains(&c) {
                next.push(c);
            }
        }
        s.cells = CellSet::new(t, next)?;
        Ok(cells_json(t, &s.cells))
    })
    .await?;
    Ok(json_body(&v).into_response())
}

#[derive(Deserialize, Default)]
struct ReconstituteBody {
    order: Option<usize>,
    tolerance: Option<f64>,
    max_iterations: Option<usize>,
    negative_policy: Option<String>,
    init: Option<InitRule>,
    /// Replaces the session's cells when present.
    cells: Option<Vec<CellRef>>,
}

async fn run_reconstitution(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Response, ApiError> {
    let req: ReconstituteBody = parse_json(&body)?;
    let doc = with_session(&state, &id, move |s| {
        let mut cfg = s.config;
        if let Some(o) = req.order {
            cfg.order = o;
        }
        if let Some(t) = req.tolerance {
            cfg.tolerance = t;
        }
        if let Some(m) = req.max_iterations {
            cfg.max_iterations = m;
        }
        if let Some(p) = &req.negative_policy {
            cfg.negative_policy = p.parse::<NegativePolicy>()?;
        }
        if let Some(i) = req.init {
            cfg.init = i;
        }
        cfg.validate(s.table.n_rows(), s.table.n_cols())?;
        if let Some(list) = &req.cells {
            let idx = list
                .iter()
                .map(|c| c.resolve(&s.table))
                .collect::<Result<Vec<_>, _>>()?;
            s.cells = CellSet::new(&s.table, idx)?;
        }
        s.config = cfg;
        let res = reconstitute(&s.table, &s.cells, &cfg)?;
        let doc = SolutionDocument::from_reconstitution(&res).to_json();
        s.reconstitution = Some(res);
        Ok(doc)
    })
    .await?;
    Ok(document_body(doc))
}

#[derive(Deserialize, Default)]
struct SupplementaryBody {
    sup_rows: Option<Vec<String>>,
    sup_cols: Option<Vec<String>>,
}

async fn run_supplementary(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Response, ApiError> {
    let req: SupplementaryBody = parse_json(&body)?;
    let doc = with_session(&state, &id, move |s| {
        // without an explicit spec, the flagged cells' rows and columns
        let spec = match (req.sup_rows, req.sup_cols) {
            (None, None) => {
                let mut rows: Vec<String> = Vec::new();
                let mut cols: Vec<String> = Vec::new();
                for &(i, j) in s.cells.cells() {
                    let (r, c) = (&s.table.row_labels()[i], &s.table.col_labels()[j]);
                    if !rows.contains(r) {
                        rows.push(r.clone());
                    }
                    if !cols.contains(c) {
                        cols.push(c.clone());
                    }
                }
                SupplementarySpec::new(rows, cols)
            }
            (r, c) => SupplementarySpec::new(r.unwrap_or_default(), c.unwrap_or_default()),
        };
        let sup = fit_supplementary(&s.table, &spec)?;
        let doc = SolutionDocument::from_supplementary(&sup).to_json();
        s.supplementary = Some(sup);
        Ok(doc)
    })
    .await?;
    Ok(document_body(doc))
}

#[derive(Deserialize)]
struct MapQuery {
    kind: Option<String>,
    dims: Option<String>,
    /// `base`, `reconstitution` or `supplementary`.
    view: Option<String>,
}

fn parse_dims(s: &str) -> Result<(usize, usize), Error> {
    let bad = || Error::InvalidConfig(format!("dims `{s}` is not of the form A,B"));
    let (a, b) = s.split_once(',').ok_or_else(bad)?;
    Ok((
        a.trim().parse().map_err(|_| bad())?,
        b.trim().parse().map_err(|_| bad())?,
    ))
}

async fn get_map(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    Query(q): Query<MapQuery>,
) -> Result<Response, ApiError> {
    let svg = with_session(&state, &id, move |s| {
        let kind: MapKind = q.kind.as_deref().unwrap_or("symmetric").parse()?;
        let dims = q
            .dims
            .as_deref()
            .map(parse_dims)
            .transpose()?
            .unwrap_or((1, 2));
        let missing =
            |what: &str| Error::InvalidConfig(format!("no {what} result in this session yet"));
        let svg = match q.view.as_deref().unwrap_or("base") {
            "base" => render_map(&s.table, &s.fit, kind, dims, &MapOptions::default())?,
            "reconstitution" => {
                let r = s
                    .reconstitution
                    .as_ref()
                    .ok_or_else(|| missing("reconstitution"))?;
                render_map(&r.table, &r.solution, kind, dims, &MapOptions::default())?
            }
            "supplementary" => {
                let sup = s
                    .supplementary
                    .as_ref()
                    .ok_or_else(|| missing("supplementary"))?;
                let opts = MapOptions {
                    supplementary: Some(sup),
                    ..Default::default()
                };
                render_map(&sup.reduced, &sup.base, kind, dims, &opts)?
            }
            other => return Err(Error::InvalidConfig(format!("unknown view `{other}`")).into()),
        };
        Ok(svg)
    })
    .await?;
    Ok(([(header::CONTENT_TYPE, "image/svg+xml")], svg).into_response())
}

async fn delete_session(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> Result<StatusCode, ApiError> {
    state
        .sessions
        .lock()
        .expect("session map lock")
        .remove(&id)
        .map(|_| StatusCode::NO_CONTENT)
        .ok_or(ApiError::UnknownSession(id))
}

/// The API routes, plus static files from `static_dir` for any other path.
pub fn router(static_dir: Option<PathBuf>) -> Router {
    let state = Arc::new(AppState::default());
    let api = Router::new()
        .route("/session", post(create_session))
        .route("/session/{id}", axum::routing::delete(delete_session))
        .route("/session/{id}/solution", get(get_solution))
        .route("/session/{id}/cells", post(update_cells))
        .route("/session/{id}/reconstitute", post(run_reconstitution))
        .route("/session/{id}/supplementary", post(run_supplementary))
        .route("/session/{id}/map", get(get_map))
        .with_state(state);
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}

/// Serves on `addr` until the process is stopped.
pub async fn serve(addr: SocketAddr, static_dir: Option<PathBuf>) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(static_dir)).await
}
