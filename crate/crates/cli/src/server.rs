//! HTTP+JSON API over the store, checker, wizard, brainstorming and glossary.
//!
//! Diagram bodies use the `.cpd.json` document format. Errors are returned as
//! `{"error": {"code": ..., "message": ..., "field"?: ...}}`.

use std::future::Future;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderValue, Method, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::{SecondsFormat, Utc};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tower_http::cors::{AllowOrigin, Any, CorsLayer};

use cpd_core::glossary::Glossary;
use cpd_core::layout::{layout, to_dot, to_svg, LayoutConfig};
use cpd_core::llm::{Gateway, GatewayError};
use cpd_core::model::{self, FormatError};
use cpd_core::recommend::{self, RecommendError, SuggestionRequest, SuggestionResult};
use cpd_core::store::{Store, StoreError};
use cpd_core::{check, report, Diagnostic, ElementKind, Point};

#[derive(Clone)]
pub struct AppState {
    pub store: Arc<Store>,
    pub gateway: Arc<dyn Gateway>,
    pub glossary: Arc<Glossary>,
}

impl AppState {
    pub fn new(store: Store, gateway: Arc<dyn Gateway>, glossary: Glossary) -> Self {
        Self {
            store: Arc::new(store),
            gateway,
            glossary: Arc::new(glossary),
        }
    }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
    field: Option<String>,
    retry_after: Option<u64>,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self {
            status,
            code,
            message: message.into(),
            field: None,
            retry_after: None,
        }
    }

    fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "bad_request", message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let mut error = json!({ "code": self.code, "message": self.message });
        if let Some(field) = self.field {
            error["field"] = Value::String(field);
        }
        let mut response = (self.status, Json(json!({ "error": error }))).into_response();
        if let Some(secs) = self.retry_after {
            response.headers_mut().insert(header::RETRY_AFTER, HeaderValue::from(secs));
        }
        response
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        let status = match &e {
            StoreError::NotFound { .. } => StatusCode::NOT_FOUND,
            StoreError::Conflict { .. } => StatusCode::CONFLICT,
            StoreError::InvalidId(_) => StatusCode::BAD_REQUEST,
            StoreError::Io { .. } | StoreError::Corrupt { .. } | StoreError::CorruptSession { .. } => {
                tracing::error!(error = %e, "store failure");
                StatusCode::INTERNAL_SERVER_ERROR
            }
        };
        let code = match &e {
            StoreError::NotFound { .. } => "not_found",
            StoreError::Conflict { .. } => "conflict",
            StoreError::InvalidId(_) => "invalid_id",
            _ => "store",
        };
        ApiError::new(status, code, e.to_string())
    }
}

impl From<FormatError> for ApiError {
    fn from(e: FormatError) -> Self {
        match &e {
            FormatError::Parse { .. } => ApiError::new(StatusCode::BAD_REQUEST, "parse", e.to_string()),
            FormatError::Schema { field, .. } => ApiError {
                field: Some(field.clone()),
                ..ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "schema", e.to_string())
            },
        }
    }
}

impl From<GatewayError> for ApiError {
    fn from(e: GatewayError) -> Self {
        let (status, code) = match &e {
            GatewayError::Auth { .. } => (StatusCode::BAD_GATEWAY, "gateway_auth"),
            GatewayError::Timeout(_) => (StatusCode::GATEWAY_TIMEOUT, "gateway_timeout"),
            GatewayError::RateLimited { .. } => (StatusCode::TOO_MANY_REQUESTS, "gateway_rate_limited"),
            GatewayError::Transport(_) => (StatusCode::BAD_GATEWAY, "gateway_transport"),
            GatewayError::Api { .. } => (StatusCode::BAD_GATEWAY, "gateway_api"),
            GatewayError::MalformedResponse(_) => (StatusCode::BAD_GATEWAY, "gateway_malformed"),
            GatewayError::NotConfigured(_) => (StatusCode::SERVICE_UNAVAILABLE, "gateway_not_configured"),
        };
        let retry_after = match &e {
            GatewayError::RateLimited { retry_after } => retry_after.map(|d| d.as_secs()),
            _ => None,
        };
        ApiError {
            retry_after,
            ..ApiError::new(status, code, e.to_string())
        }
    }
}

impl From<RecommendError> for ApiError {
    fn from(e: RecommendError) -> Self {
        match e {
            RecommendError::Gateway(g) => g.into(),
            RecommendError::EmptyLabel => ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "empty_label", e.to_string()),
            RecommendError::NoContext => ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "no_context", e.to_string()),
            RecommendError::InvalidRequest(_) => {
                ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_request", e.to_string())
            }
            RecommendError::SessionComplete | RecommendError::SessionIncomplete(_) => {
                ApiError::new(StatusCode::CONFLICT, "session_state", e.to_string())
            }
            RecommendError::UnparsableOutput { .. } => {
                ApiError::new(StatusCode::BAD_GATEWAY, "unparsable_output", e.to_string())
            }
        }
    }
}

type ApiResult<T> = Result<T, ApiError>;

fn parse_json<T: DeserializeOwned>(body: &Bytes) -> ApiResult<T> {
    let text = if body.iter().all(u8::is_ascii_whitespace) {
        b"{}".as_slice()
    } else {
        body.as_ref()
    };
    serde_json::from_slice(text).map_err(|e| match e.classify() {
        serde_json::error::Category::Data => ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_body", e.to_string()),
        _ => ApiError::new(StatusCode::BAD_REQUEST, "parse", e.to_string()),
    })
}

fn diagram_response(status: StatusCode, diagram: &cpd_core::Diagram) -> Response {
    (
        status,
        [(header::CONTENT_TYPE, "application/json")],
        model::serialize(diagram),
    )
        .into_response()
}

/// Reads a diagram body. A missing `id`, `created` or `modified` is
/// filled in; everything else must follow the document format.
fn diagram_from_body(body: &Bytes, path_id: Option<&str>) -> ApiResult<cpd_core::Diagram> {
    let text = std::str::from_utf8(body).map_err(|e| ApiError::bad_request(e.to_string()))?;
    let mut value: Value = serde_json::from_str(text).map_err(|e| {
        ApiError::from(FormatError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })
    })?;
    if let Value::Object(map) = &mut value {
        match (map.get("id"), path_id) {
            (None, Some(id)) => {
                map.insert("id".into(), Value::String(id.into()));
            }
            (None, None) => {
                map.insert("id".into(), Value::String(uuid::Uuid::new_v4().to_string()));
            }
            (Some(Value::String(body_id)), Some(id)) if body_id != id => {
                return Err(ApiError::bad_request(format!(
                    "body id {body_id:?} does not match path id {id:?}"
                )));
            }
            _ => {}
        }
        let now = Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true);
        for key in ["created", "modified"] {
            map.entry(key).or_insert_with(|| Value::String(now.clone()));
        }
    }
    Ok(model::from_value(value)?)
}

/// Runs blocking work (gateway calls, file IO) off the async workers.
async fn blocking<T, F>(f: F) -> ApiResult<T>
where
    F: FnOnce() -> ApiResult<T> + Send + 'static,
    T: Send + 'static,
{
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))?
}

// ---- diagrams ----

async fn list_diagrams(State(state): State<AppState>) -> Json<Value> {
    Json(json!(state.store.list_diagrams()))
}

async fn create_diagram(State(state): State<AppState>, body: Bytes) -> ApiResult<Response> {
    let diagram = diagram_from_body(&body, None)?;
    let store = state.store.clone();
    let saved = diagram.clone();
    blocking(move || Ok(store.create_diagram(&saved)?)).await?;
    let mut response = diagram_response(StatusCode::CREATED, &diagram);
    if let Ok(location) = HeaderValue::from_str(&format!("/diagrams/{}", diagram.id())) {
        response.headers_mut().insert(header::LOCATION, location);
    }
    Ok(response)
}

async fn get_diagram(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Response> {
    let store = state.store.clone();
    let diagram = blocking(move || Ok(store.get_diagram(&id)?)).await?;
    Ok(diagram_response(StatusCode::OK, &diagram))
}

async fn put_diagram(State(state): State<AppState>, Path(id): Path<String>, body: Bytes) -> ApiResult<Response> {
    let diagram = diagram_from_body(&body, Some(&id))?.touched();
    let store = state.store.clone();
    let saved = diagram.clone();
    let existed = blocking(move || {
        let existed = store.contains_diagram(&id);
        store.save_diagram(&saved)?;
        Ok(existed)
    })
    .await?;
    let status = if existed { StatusCode::OK } else { StatusCode::CREATED };
    Ok(diagram_response(status, &diagram))
}

async fn delete_diagram(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<StatusCode> {
    let store = state.store.clone();
    blocking(move || Ok(store.delete_diagram(&id)?)).await?;
    Ok(StatusCode::NO_CONTENT)
}

#[derive(Serialize)]
struct CheckResponse {
    diagnostics: Vec<Diagnostic>,
    report: String,
}

async fn check_diagram(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<CheckResponse>> {
    let store = state.store.clone();
    let diagram = blocking(move || Ok(store.get_diagram(&id)?)).await?;
    let diagnostics = check(&diagram);
    let report = report(&diagnostics);
    Ok(Json(CheckResponse { diagnostics, report }))
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct LayoutBody {
    #[serde(default)]
    anchor: Option<Point>,
    #[serde(default)]
    config: Option<LayoutConfig>,
}

async fn layout_diagram(State(state): State<AppState>, Path(id): Path<String>, body: Bytes) -> ApiResult<Response> {
    let body: LayoutBody = parse_json(&body)?;
    let anchor = body.anchor.unwrap_or_default();
    let config = body.config.unwrap_or_default();
    let store = state.store.clone();
    let diagram = blocking(move || {
        let updated = store.update_diagram(&id, |d| Ok::<_, StoreError>(layout(&d, anchor, &config).touched()))?;
        Ok(updated?)
    })
    .await?;
    Ok(diagram_response(StatusCode::OK, &diagram))
}

#[derive(Deserialize)]
struct ExportQuery {
    format: Option<String>,
}

async fn export_diagram(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(query): Query<ExportQuery>,
) -> ApiResult<Response> {
    let format = query.format.unwrap_or_default();
    if format != "dot" && format != "svg" {
        return Err(ApiError::bad_request("format must be dot or svg"));
    }
    let store = state.store.clone();
    let diagram = blocking(move || Ok(store.get_diagram(&id)?)).await?;
    Ok(match format.as_str() {
        "dot" => ([(header::CONTENT_TYPE, "text/vnd.graphviz; charset=utf-8")], to_dot(&diagram)).into_response(),
        _ => ([(header::CONTENT_TYPE, "image/svg+xml")], to_svg(&diagram)).into_response(),
    })
}

// ---- wizard ----

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct CreateSessionBody {
    #[serde(default)]
    distal_hint: Option<String>,
}

async fn create_session(State(state): State<AppState>, body: Bytes) -> ApiResult<Response> {
    let body: CreateSessionBody = parse_json(&body)?;
    let session = recommend::start_session(body.distal_hint);
    let store = state.store.clone();
    let saved = session.clone();
    blocking(move || Ok(store.save_session(&saved)?)).await?;
    Ok((StatusCode::CREATED, Json(session)).into_response())
}

async fn get_session(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Response> {
    let store = state.store.clone();
    let session = blocking(move || Ok(store.get_session(&id)?)).await?;
    Ok(Json(session).into_response())
}

async fn suggest_session(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<SuggestionResult>> {
    let AppState { store, gateway, glossary } = state;
    blocking(move || {
        let session = store.get_session(&id)?;
        let request = session.suggestion_request()?;
        let result = recommend::suggest_with(&glossary, &request, gateway.as_ref())?;
        let step = session.step();
        let candidates = result.candidates.clone();
        store
            .update_session(&id, move |current| {
                if current.step() != step {
                    // the session moved on while the model was thinking
                    return Ok(current);
                }
                current.with_suggestions(candidates)
            })?
            .map_err(ApiError::from)?;
        Ok(Json(result))
    })
    .await
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AcceptBody {
    label: String,
}

async fn accept_session(State(state): State<AppState>, Path(id): Path<String>, body: Bytes) -> ApiResult<Response> {
    let body: AcceptBody = parse_json(&body)?;
    let store = state.store.clone();
    let session = blocking(move || Ok(store.update_session(&id, |s| s.accept_entry(&body.label))??)).await?;
    Ok(Json(session).into_response())
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct MaterializeBody {
    #[serde(default)]
    anchor: Option<Point>,
    #[serde(default)]
    board_id: Option<String>,
}

async fn materialize_session(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult<Response> {
    let body: MaterializeBody = parse_json(&body)?;
    let store = state.store.clone();
    blocking(move || {
        let session = store.get_session(&id)?;
        let pathway = recommend::materialize(&session, body.anchor.unwrap_or_default())?;
        let (status, board) = match &body.board_id {
            Some(board_id) => {
                let merged = store.update_diagram(board_id, |board| board.merge(&pathway).map(|d| d.touched()))?;
                let merged = merged.map_err(|e| {
                    ApiError::new(StatusCode::CONFLICT, "merge", e.to_string())
                })?;
                (StatusCode::OK, merged)
            }
            None => {
                store.create_diagram(&pathway)?;
                (StatusCode::CREATED, pathway)
            }
        };
        let board_id = board.id().clone();
        store.update_session(&id, |s| Ok::<_, StoreError>(s.with_target_board(board_id)))??;
        Ok(diagram_response(status, &board))
    })
    .await
}

// ---- brainstorm ----

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Neighbour {
    kind: ElementKind,
    label: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BrainstormBody {
    target_kind: ElementKind,
    #[serde(default)]
    before: Option<Neighbour>,
    #[serde(default)]
    after: Option<Neighbour>,
}

async fn brainstorm(State(state): State<AppState>, body: Bytes) -> ApiResult<Json<SuggestionResult>> {
    let body: BrainstormBody = parse_json(&body)?;
    let request = SuggestionRequest::brainstorm(
        body.target_kind,
        body.before.map(|n| (n.kind, n.label)),
        body.after.map(|n| (n.kind, n.label)),
    );
    let AppState { gateway, glossary, .. } = state;
    blocking(move || Ok(Json(recommend::suggest_with(&glossary, &request, gateway.as_ref())?))).await
}

// ---- glossary ----

async fn glossary_all(State(state): State<AppState>) -> Json<Value> {
    Json(json!({
        "version": state.glossary.version(),
        "entries": state.glossary.entries(),
    }))
}

async fn glossary_entry(State(state): State<AppState>, Path(kind): Path<String>) -> ApiResult<Response> {
    let kind: ElementKind = kind
        .parse()
        .map_err(|e: cpd_core::model::UnknownKind| ApiError::new(StatusCode::NOT_FOUND, "not_found", e.to_string()))?;
    Ok(Json(state.glossary.define(kind).clone()).into_response())
}

async fn not_found() -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "not_found", "no such endpoint")
}

/// Which origins may call the API from a browser.
#[derive(Clone, Debug, Default)]
pub enum Cors {
    #[default]
    Disabled,
    Any,
    Origins(Vec<HeaderValue>),
}

impl Cors {
    pub fn from_origins(origins: &[String]) -> anyhow::Result<Self> {
        if origins.is_empty() {
            return Ok(Cors::Disabled);
        }
        if origins.iter().any(|o| o == "*") {
            return Ok(Cors::Any);
        }
        let values = origins
            .iter()
            .map(|o| HeaderValue::from_str(o).map_err(|_| anyhow::anyhow!("invalid CORS origin {o:?}")))
            .collect::<anyhow::Result<_>>()?;
        Ok(Cors::Origins(values))
    }
}

pub fn router(state: AppState, cors: Cors) -> Router {
    let router = Router::new()
        .route("/diagrams", get(list_diagrams).post(create_diagram))
        .route("/diagrams/{id}", get(get_diagram).put(put_diagram).delete(delete_diagram))
        .route("/diagrams/{id}/check", post(check_diagram))
        .route("/diagrams/{id}/layout", post(layout_diagram))
        .route("/diagrams/{id}/export", get(export_diagram))
        .route("/wizard/sessions", post(create_session))
        .route("/wizard/sessions/{id}", get(get_session))
        .route("/wizard/sessions/{id}/suggest", post(suggest_session))
        .route("/wizard/sessions/{id}/accept", post(accept_session))
        .route("/wizard/sessions/{id}/materialize", post(materialize_session))
        .route("/brainstorm", post(brainstorm))
        .route("/glossary", get(glossary_all))
        .route("/glossary/{kind}", get(glossary_entry))
        .fallback(not_found)
        .with_state(state);
    let origins = match cors {
        Cors::Disabled => return router,
        Cors::Any => AllowOrigin::from(Any),
        Cors::Origins(list) => AllowOrigin::list(list),
    };
    router.layer(
        CorsLayer::new()
            .allow_origin(origins)
            .allow_methods([Method::GET, Method::POST, Method::PUT, Method::DELETE])
            .allow_headers([header::CONTENT_TYPE])
            .expose_headers([header::LOCATION, header::RETRY_AFTER]),
    )
}

/// Serves until `shutdown` resolves, then drains in-flight requests.
pub async fn serve(
    listener: tokio::net::TcpListener,
    state: AppState,
    cors: Cors,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, router(state, cors))
        .with_graceful_shutdown(shutdown)
        .await
}

/// Resolves on Ctrl-C or SIGTERM.
pub async fn shutdown_signal() {
    let ctrl_c = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    #[cfg(unix)]
    let term = async {
        match tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            Ok(mut s) => {
                s.recv().await;
            }
            Err(_) => std::future::pending::<()>().await,
        }
    };
    #[cfg(not(unix))]
    let term = std::future::pending::<()>();
    tokio::select! {
        _ = ctrl_c => {},
        _ = term => {},
    }
    tracing::info!("shutting down");
}
