//! Read-only HTTP API over a built embedding tree and its training data.
//!
//! Routes:
//!
//! - `GET /api/tree`: tree topology without entity lists
//! - `GET /api/node/{id}/projection`: 2D PCA coordinates of a node's members
//! - `GET /api/node/{id}/entities`: sortable, filterable page of members
//! - `GET /api/node/{id}/diagnosis`: consistency report for a leaf
//! - `POST /api/infer`: cold-start placement of a feature assignment
//!
//! Every error is a JSON body `{"error": "..."}`. Requests made before a
//! session is loaded get `503`.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::{Arc, Mutex, RwLock};

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use embtree_core::analysis::{cold_start_embed, diagnose_leaf, FeatureAssignment};
use embtree_core::dataset::{FeatureKind, RawFeatureTable};
use embtree_core::projection::project;
use embtree_core::tree::NodeKind;
use embtree_core::{EmbeddingMatrix64, EmbeddingTree64, Error, TreeNode64};
use serde::Serialize;
use serde_json::{json, Map, Value};
use tower_http::cors::CorsLayer;

/// Page size when `limit` is not given.
pub const DEFAULT_PAGE_SIZE: usize = 100;

/// A loaded tree with the data it was trained on.
pub struct Session {
    tree: EmbeddingTree64,
    embeddings: EmbeddingMatrix64,
    features: RawFeatureTable,
    projections: Mutex<HashMap<usize, Arc<Vec<ProjectedPoint>>>>,
}

impl Session {
    /// Fails unless the data matches the tree's fingerprint.
    pub fn new(tree: EmbeddingTree64, embeddings: EmbeddingMatrix64, features: RawFeatureTable) -> embtree_core::Result<Self> {
        tree.verify_dataset(&embeddings, &features)?;
        Ok(Self { tree, embeddings, features, projections: Mutex::new(HashMap::new()) })
    }

    pub fn tree(&self) -> &EmbeddingTree64 {
        &self.tree
    }

    /// Cached 2D projection of a node's members, computed on first use.
    pub fn projection(&self, node_id: usize) -> Result<Arc<Vec<ProjectedPoint>>, ApiError> {
        if let Some(points) = self.projections.lock().expect("projection cache poisoned").get(&node_id) {
            return Ok(points.clone());
        }
        let node = self.node(node_id)?;
        let members = node.members();
        let rows: Vec<&[f64]> = members.iter().map(|&i| self.embeddings.row(i)).collect();
        let k = self.embeddings.dim().min(2);
        let pca = project(&rows, k).map_err(ApiError::from)?;
        let points = members
            .iter()
            .enumerate()
            .map(|(r, &i)| ProjectedPoint {
                entity_id: self.embeddings.ids()[i].clone(),
                x: pca.score(r, 0),
                y: if k == 2 { pca.score(r, 1) } else { 0.0 },
            })
            .collect();
        // Concurrent fills compute identical points; the first one is kept.
        let mut cache = self.projections.lock().expect("projection cache poisoned");
        Ok(cache.entry(node_id).or_insert_with(|| Arc::new(points)).clone())
    }

    fn node(&self, id: usize) -> Result<&TreeNode64, ApiError> {
        self.tree.node(id).ok_or_else(|| ApiError::not_found(format!("unknown node {id}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProjectedPoint {
    pub entity_id: String,
    pub x: f64,
    pub y: f64,
}

/// Shared server state. Starts empty until a session is loaded.
#[derive(Clone, Default)]
pub struct AppState {
    session: Arc<RwLock<Option<Arc<Session>>>>,
}

impl AppState {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn with_session(session: Session) -> Self {
        let state = Self::default();
        state.load(session);
        state
    }

    pub fn load(&self, session: Session) {
        *self.session.write().expect("session lock poisoned") = Some(Arc::new(session));
    }

    fn session(&self) -> Result<Arc<Session>, ApiError> {
        self.session
            .read()
            .expect("session lock poisoned")
            .clone()
            .ok_or_else(|| ApiError::new(StatusCode::SERVICE_UNAVAILABLE, "no tree loaded"))
    }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        Self { status, message: message.into() }
    }

    fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, message)
    }

    fn not_found(message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, message)
    }
}

impl From<Error> for ApiError {
    fn from(err: Error) -> Self {
        let status = match err {
            Error::UnknownNode(_) => StatusCode::NOT_FOUND,
            Error::NotALeaf(_) => StatusCode::BAD_REQUEST,
            Error::MissingFeature(_) | Error::InvalidFeatureValue { .. } | Error::LeafTooSmall { .. } => {
                StatusCode::UNPROCESSABLE_ENTITY
            }
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        Self::new(status, err.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "error": self.message }))).into_response()
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

/// All routes with permissive CORS.
pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/api/tree", get(tree_topology))
        .route("/api/node/:id/projection", get(node_projection))
        .route("/api/node/:id/entities", get(node_entities))
        .route("/api/node/:id/diagnosis", get(node_diagnosis))
        .route("/api/infer", post(infer))
        .fallback(|| async { ApiError::not_found("no such route") })
        .layer(CorsLayer::permissive())
        .with_state(state)
}

/// Binds `addr` and serves until the process is stopped.
pub async fn serve(state: AppState, addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(state)).await
}

fn parse_id(raw: &str) -> Result<usize, ApiError> {
    raw.parse().map_err(|_| ApiError::bad_request(format!("invalid node id {raw:?}")))
}

fn topology(tree: &EmbeddingTree64, node: &TreeNode64) -> Value {
    let split = node.split().map(|s| {
        let d = &tree.features[s.feature_index];
        json!({
            "feature": s.feature_index,
            "name": d.source,
            "predicate": d.predicate,
            "loglik": s.log_likelihood,
        })
    });
    let (left, right) = match &node.kind {
        NodeKind::Internal { left, right, .. } => (topology(tree, left), topology(tree, right)),
        NodeKind::Leaf { .. } => (Value::Null, Value::Null),
    };
    json!({
        "id": node.id,
        "kind": if node.is_leaf() { "leaf" } else { "internal" },
        "count": node.count,
        "depth": node.depth,
        "split": split,
        "left": left,
        "right": right,
    })
}

async fn tree_topology(State(state): State<AppState>) -> ApiResult<Value> {
    let session = state.session()?;
    let tree = &session.tree;
    Ok(Json(json!({
        "fingerprint": tree.fingerprint,
        "entity_count": tree.entity_count(),
        "dim": session.embeddings.dim(),
        "node_count": tree.node_count(),
        "leaf_count": tree.leaf_count(),
        "depth": tree.depth(),
        "features": tree.features,
        "root": topology(tree, &tree.root),
    })))
}

async fn node_projection(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Arc<Vec<ProjectedPoint>>> {
    let session = state.session()?;
    Ok(Json(session.projection(parse_id(&id)?)?))
}

async fn node_diagnosis(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Value> {
    let session = state.session()?;
    let report = diagnose_leaf(&session.tree, &session.embeddings, parse_id(&id)?)?;
    Ok(Json(serde_json::to_value(report).expect("report serializes")))
}

async fn infer(State(state): State<AppState>, body: Bytes) -> ApiResult<Value> {
    let session = state.session()?;
    let features: FeatureAssignment =
        serde_json::from_slice(&body).map_err(|e| ApiError::bad_request(format!("invalid feature assignment: {e}")))?;
    let result = cold_start_embed(&session.tree, &features)?;
    Ok(Json(serde_json::to_value(result).expect("result serializes")))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SortKey {
    Row,
    EntityId,
    Column(usize),
}

struct PageQuery {
    offset: usize,
    limit: usize,
    sort: SortKey,
    descending: bool,
    filter: Option<String>,
    embedding: bool,
}

fn parse_page_query(params: &HashMap<String, String>, table: &RawFeatureTable) -> Result<PageQuery, ApiError> {
    let number = |name: &str, default: usize| -> Result<usize, ApiError> {
        params.get(name).map_or(Ok(default), |v| {
            v.parse().map_err(|_| ApiError::bad_request(format!("{name} must be a non-negative integer, got {v:?}")))
        })
    };
    let sort = match params.get("sort_by").map(String::as_str) {
        None => SortKey::Row,
        Some("entity_id") => SortKey::EntityId,
        Some(name) => SortKey::Column(
            table
                .columns
                .iter()
                .position(|c| c.name == name)
                .ok_or_else(|| ApiError::bad_request(format!("cannot sort by unknown column {name:?}")))?,
        ),
    };
    let descending = match params.get("order").map(String::as_str) {
        None | Some("asc") => false,
        Some("desc") => true,
        Some(other) => return Err(ApiError::bad_request(format!("order must be asc or desc, got {other:?}"))),
    };
    let embedding = match params.get("embedding").map(String::as_str) {
        None | Some("false") => false,
        Some("true") => true,
        Some(other) => return Err(ApiError::bad_request(format!("embedding must be true or false, got {other:?}"))),
    };
    Ok(PageQuery {
        offset: number("offset", 0)?,
        limit: number("limit", DEFAULT_PAGE_SIZE)?,
        sort,
        descending,
        filter: params.get("filter").filter(|f| !f.is_empty()).cloned(),
        embedding,
    })
}

fn compare_rows(session: &Session, key: SortKey, a: usize, b: usize) -> Ordering {
    match key {
        SortKey::Row => a.cmp(&b),
        SortKey::EntityId => session.features.ids[a].cmp(&session.features.ids[b]),
        SortKey::Column(c) => {
            let column = &session.features.columns[c];
            match column.kind {
                FeatureKind::Numeric => column.numbers[a].total_cmp(&column.numbers[b]),
                FeatureKind::Categorical => column.cells[a].cmp(&column.cells[b]),
            }
        }
    }
}

fn row_json(session: &Session, row: usize, embedding: bool) -> Value {
    let mut out = Map::new();
    out.insert("entity_id".into(), json!(session.features.ids[row]));
    for column in &session.features.columns {
        let value = match column.kind {
            FeatureKind::Numeric => json!(column.numbers[row]),
            FeatureKind::Categorical => json!(column.cells[row]),
        };
        out.entry(column.name.clone()).or_insert(value);
    }
    if embedding {
        out.insert("embedding".into(), json!(session.embeddings.row(row)));
    }
    Value::Object(out)
}

async fn node_entities(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(params): Query<HashMap<String, String>>,
) -> ApiResult<Value> {
    let session = state.session()?;
    let node = session.node(parse_id(&id)?)?;
    let query = parse_page_query(&params, &session.features)?;
    let table = &session.features;

    let mut rows: Vec<usize> = node.members();
    if let Some(needle) = &query.filter {
        rows.retain(|&r| table.ids[r].contains(needle.as_str()) || table.columns.iter().any(|c| c.cells[r].contains(needle.as_str())));
    }
    // Stable in both directions: ties keep row order.
    rows.sort_by(|&a, &b| {
        let ord = compare_rows(&session, query.sort, a, b);
        if query.descending {
            ord.reverse()
        } else {
            ord
        }
    });
    let total = rows.len();
    let page: Vec<Value> = rows
        .into_iter()
        .skip(query.offset)
        .take(query.limit)
        .map(|r| row_json(&session, r, query.embedding))
        .collect();
    Ok(Json(json!({ "total": total, "rows": page })))
}
