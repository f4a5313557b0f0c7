//! Read-only JSON API over a loaded [`Dataset`].
//!
//! Every handler works on an `Arc` snapshot taken at the start of the
//! request, so a reload (see [`AppState::swap`]) never tears a response.

use std::{
    collections::BTreeSet,
    str::FromStr,
    sync::{Arc, RwLock},
};

use axum::{
    extract::{Path as UrlPath, RawQuery, State},
    http::{Method, StatusCode},
    response::{IntoResponse, Response},
    routing::get,
    Json, Router,
};
use refnet_core::{BinSpec, Cell, CorrelationMethod};
use serde_json::{json, Map, Value};
use tower_http::cors::{Any, CorsLayer};

use crate::dataset::{
    CorrelateQuery, CorrelateResponse, Dataset, DistributionQuery, Filters, DEFAULT_PERMUTATIONS, DEFAULT_SEED,
};

pub const DEFAULT_LIMIT: usize = 100;
pub const MAX_LIMIT: usize = 10_000;
pub const MAX_BINS: usize = 10_000;
pub const MAX_PERMUTATIONS: usize = 1_000_000;

const FILTERS: [&str; 4] = ["hsa", "year", "state", "region"];

#[derive(Clone)]
pub struct AppState {
    inner: Arc<RwLock<Arc<Dataset>>>,
}

impl AppState {
    pub fn new(data: Dataset) -> Self {
        Self {
            inner: Arc::new(RwLock::new(Arc::new(data))),
        }
    }

    pub fn snapshot(&self) -> Arc<Dataset> {
        match self.inner.read() {
            Ok(g) => Arc::clone(&g),
            Err(poisoned) => Arc::clone(&poisoned.into_inner()),
        }
    }

    /// Replaces the dataset. Requests already running keep the old one.
    pub fn swap(&self, data: Dataset) -> Arc<Dataset> {
        let mut g = match self.inner.write() {
            Ok(g) => g,
            Err(poisoned) => poisoned.into_inner(),
        };
        std::mem::replace(&mut *g, Arc::new(data))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApiError {
    pub status: StatusCode,
    pub message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        Self {
            status,
            message: message.into(),
        }
    }

    fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, message)
    }

    fn not_found(message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = json!({"error": {"status": self.status.as_u16(), "message": self.message}});
        (self.status, Json(body)).into_response()
    }
}

impl From<crate::Error> for ApiError {
    fn from(e: crate::Error) -> Self {
        use refnet_core::Error as Core;
        match &e {
            crate::Error::Core(Core::UnknownColumn(_) | Core::NotNumeric(_)) => {
                Self::new(StatusCode::UNPROCESSABLE_ENTITY, e.to_string())
            }
            crate::Error::Core(Core::InvalidConfig(_)) | crate::Error::Usage(_) => Self::bad_request(e.to_string()),
            _ => {
                log::error!("{e}");
                Self::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string())
            }
        }
    }
}

type ApiResult = Result<Json<Value>, ApiError>;

/// Query string split into pairs, checked against the names an endpoint
/// accepts. Empty values count as absent.
struct Params {
    pairs: Vec<(String, String)>,
}

impl Params {
    fn parse(raw: Option<String>, allowed: &[&str]) -> Result<Self, ApiError> {
        let mut pairs: Vec<(String, String)> = Vec::new();
        let mut seen = BTreeSet::new();
        for (k, v) in form_urlencoded::parse(raw.unwrap_or_default().as_bytes()) {
            if !allowed.contains(&k.as_ref()) {
                return Err(ApiError::bad_request(format!("unknown query parameter `{k}`")));
            }
            if !seen.insert(k.to_string()) {
                return Err(ApiError::bad_request(format!("query parameter `{k}` given more than once")));
            }
            if !v.trim().is_empty() {
                pairs.push((k.into_owned(), v.trim().to_string()));
            }
        }
        Ok(Self { pairs })
    }

    fn get(&self, name: &str) -> Option<&str> {
        self.pairs.iter().find(|(k, _)| k == name).map(|(_, v)| v.as_str())
    }

    fn required(&self, name: &str) -> Result<&str, ApiError> {
        self.get(name)
            .ok_or_else(|| ApiError::bad_request(format!("missing query parameter `{name}`")))
    }

    fn parsed<T: FromStr>(&self, name: &str) -> Result<Option<T>, ApiError> {
        self.get(name)
            .map(|v| {
                v.parse()
                    .map_err(|_| ApiError::bad_request(format!("invalid value `{v}` for `{name}`")))
            })
            .transpose()
    }

    fn list(&self, name: &str) -> Vec<String> {
        self.get(name)
            .map(|v| {
                v.split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(String::from)
                    .collect()
            })
            .unwrap_or_default()
    }

    fn filters(&self) -> Result<Filters, ApiError> {
        Ok(Filters {
            hsa: self.get("hsa").map(String::from),
            year: self.parsed("year")?,
            state: self.get("state").map(String::from),
            region: self.get("region").map(String::from),
        })
    }

    fn page(&self) -> Result<(usize, usize), ApiError> {
        let offset = self.parsed("offset")?.unwrap_or(0);
        let limit = self.parsed("limit")?.unwrap_or(DEFAULT_LIMIT);
        if limit == 0 || limit > MAX_LIMIT {
            return Err(ApiError::bad_request(format!("limit must be between 1 and {MAX_LIMIT}")));
        }
        Ok((offset, limit))
    }
}

fn allowed<'a>(extra: &[&'a str]) -> Vec<&'a str> {
    FILTERS.iter().copied().chain(extra.iter().copied()).collect()
}

/// Integral values are emitted as JSON integers, matching the CSV output.
pub fn cell_json(cell: &Cell) -> Value {
    match cell {
        Cell::Num(x) if x.fract() == 0.0 && x.abs() < 1e15 => json!(*x as i64),
        Cell::Num(x) => json!(x),
        Cell::Text(s) => json!(s),
        Cell::Absent => Value::Null,
    }
}

pub fn router(state: AppState) -> Router {
    let cors = CorsLayer::new()
        .allow_origin(Any)
        .allow_methods([Method::GET, Method::OPTIONS])
        .allow_headers(Any);
    Router::new()
        .route("/health", get(health))
        .route("/version", get(version))
        .route("/schema", get(schema))
        .route("/networks", get(networks))
        .route("/networks/{hsa}/{year}/graph", get(graph))
        .route("/features", get(features))
        .route("/distributions", get(distributions))
        .route("/correlate", get(correlate))
        .fallback(|| async { ApiError::not_found("no such endpoint") })
        .layer(cors)
        .with_state(state)
}

async fn health(RawQuery(q): RawQuery) -> ApiResult {
    Params::parse(q, &[])?;
    Ok(Json(json!({"status": "ok"})))
}

async fn version(State(s): State<AppState>, RawQuery(q): RawQuery) -> ApiResult {
    Params::parse(q, &[])?;
    Ok(Json(json!({
        "version": env!("CARGO_PKG_VERSION"),
        "dataset_version": s.snapshot().version,
    })))
}

async fn schema(State(s): State<AppState>, RawQuery(q): RawQuery) -> ApiResult {
    Params::parse(q, &[])?;
    let d = s.snapshot();
    let columns: Vec<Value> = d
        .columns()
        .iter()
        .map(|(name, ty)| json!({"name": name, "type": ty.as_str()}))
        .collect();
    Ok(Json(json!({
        "dataset_version": d.version,
        "columns": columns,
        "endpoints": response_schemas(),
    })))
}

async fn networks(State(s): State<AppState>, RawQuery(q): RawQuery) -> ApiResult {
    let p = Params::parse(q, &allowed(&["offset", "limit"]))?;
    let f = p.filters()?;
    let (offset, limit) = p.page()?;
    let d = s.snapshot();
    let matching: Vec<_> = d
        .networks
        .iter()
        .filter(|n| {
            let k = n.bundle.key();
            f.accepts(&k.hsa, k.year, &n.labels)
        })
        .collect();
    let items: Vec<Value> = matching
        .iter()
        .skip(offset)
        .take(limit)
        .map(|n| {
            let g = &n.bundle.graph;
            json!({
                "hsa": g.key().hsa,
                "year": g.key().year,
                "node_count": g.node_count(),
                "edge_count": g.edge_count(),
                "state": n.labels.state,
                "region": n.labels.region,
            })
        })
        .collect();
    Ok(Json(json!({
        "total": matching.len(),
        "offset": offset,
        "limit": limit,
        "items": items,
    })))
}

async fn graph(
    State(s): State<AppState>,
    UrlPath((hsa, year)): UrlPath<(String, String)>,
    RawQuery(q): RawQuery,
) -> ApiResult {
    Params::parse(q, &[])?;
    let year: i32 = year
        .parse()
        .map_err(|_| ApiError::bad_request(format!("invalid year `{year}`")))?;
    let d = s.snapshot();
    let n = d
        .network(&hsa, year)
        .ok_or_else(|| ApiError::not_found(format!("no network {hsa}/{year}")))?;
    let g = &n.bundle.graph;
    if n.nodes.len() != g.node_count() {
        return Err(crate::Error::Internal("node metrics were not loaded".to_string()).into());
    }
    let ids = g.node_ids();
    let nodes: Vec<Value> = n
        .nodes
        .iter()
        .zip(ids)
        .map(|(m, id)| {
            json!({
                "id": id.as_str(),
                "degree": m.degree,
                "degree_centrality": m.degree_centrality,
                "betweenness": m.betweenness,
                "frc": m.frc,
                "orc": m.orc,
            })
        })
        .collect();
    let report = n.bundle.report.as_ref();
    let edges: Vec<Value> = g
        .edges()
        .iter()
        .zip(g.weights())
        .enumerate()
        .map(|(k, (&(i, j), &w))| {
            let e = report.map(|r| r.edges[k]);
            json!({
                "source": ids[i].as_str(),
                "target": ids[j].as_str(),
                "weight": w,
                "frc": e.and_then(|e| e.frc),
                "orc": e.and_then(|e| e.orc),
            })
        })
        .collect();
    Ok(Json(json!({
        "hsa": hsa,
        "year": year,
        "state": n.labels.state,
        "region": n.labels.region,
        "nodes": nodes,
        "edges": edges,
    })))
}

async fn features(State(s): State<AppState>, RawQuery(q): RawQuery) -> ApiResult {
    let p = Params::parse(q, &allowed(&["offset", "limit", "columns"]))?;
    let f = p.filters()?;
    let (offset, limit) = p.page()?;
    let d = s.snapshot();
    let mut frame = d.filtered_frame(&f)?;
    let columns = p.list("columns");
    if !columns.is_empty() {
        let names: Vec<&str> = columns.iter().map(String::as_str).collect();
        frame = frame.project(&names).map_err(crate::Error::from)?;
    }
    let names: Vec<&str> = frame.column_names().collect();
    let rows: Vec<Value> = frame
        .rows()
        .iter()
        .skip(offset)
        .take(limit)
        .map(|row| {
            let obj: Map<String, Value> = names
                .iter()
                .zip(row)
                .map(|(n, c)| (n.to_string(), cell_json(c)))
                .collect();
            Value::Object(obj)
        })
        .collect();
    Ok(Json(json!({
        "total": frame.len(),
        "offset": offset,
        "limit": limit,
        "columns": names,
        "rows": rows,
    })))
}

async fn distributions(State(s): State<AppState>, RawQuery(q): RawQuery) -> ApiResult {
    let p = Params::parse(q, &allowed(&["metric", "group", "bins"]))?;
    let bins = p.parsed("bins")?.unwrap_or(BinSpec::default().bins);
    if bins == 0 || bins > MAX_BINS {
        return Err(ApiError::bad_request(format!("bins must be between 1 and {MAX_BINS}")));
    }
    let query = DistributionQuery {
        metric: p.required("metric")?.to_string(),
        group: p.get("group").map(String::from),
        bins: BinSpec { bins, range: None },
        filters: p.filters()?,
    };
    let d = s.snapshot();
    let out = tokio::task::spawn_blocking(move || d.distributions(&query))
        .await
        .map_err(|e| ApiError::from(crate::Error::Internal(e.to_string())))??;
    Ok(Json(to_value(&out)?))
}

async fn correlate(State(s): State<AppState>, RawQuery(q): RawQuery) -> ApiResult {
    let p = Params::parse(q, &allowed(&["x", "y", "method", "group", "permutations", "seed"]))?;
    let mut query = CorrelateQuery::new(p.required("x")?, p.required("y")?);
    query.method = p.parsed::<CorrelationMethod>("method")?.unwrap_or(CorrelationMethod::Pearson);
    query.group = p.list("group");
    query.permutations = p.parsed("permutations")?.unwrap_or(DEFAULT_PERMUTATIONS);
    if query.permutations > MAX_PERMUTATIONS {
        return Err(ApiError::bad_request(format!("permutations must be at most {MAX_PERMUTATIONS}")));
    }
    query.seed = p.parsed("seed")?.unwrap_or(DEFAULT_SEED);
    query.filters = p.filters()?;
    let d = s.snapshot();
    let out = tokio::task::spawn_blocking(move || CorrelateResponse::run(&d, &query))
        .await
        .map_err(|e| ApiError::from(crate::Error::Internal(e.to_string())))??;
    Ok(Json(to_value(&out)?))
}

fn to_value<T: serde::Serialize>(v: &T) -> Result<Value, ApiError> {
    serde_json::to_value(v).map_err(|e| crate::Error::Internal(e.to_string()).into())
}

/// JSON Schemas for each endpoint's success body, plus `error` for failures.
pub fn response_schemas() -> Value {
    let num = json!({"type": "number"});
    let opt_num = json!({"type": ["number", "null"]});
    let string = json!({"type": "string"});
    let count = json!({"type": "integer", "minimum": 0});
    let object = |required: &[&str], properties: Value| {
        json!({
            "type": "object",
            "required": required,
            "properties": properties,
            "additionalProperties": false,
        })
    };
    let array = |items: Value| json!({"type": "array", "items": items});
    let page = |items_key: &str, item: Value, extra: Option<(&str, Value)>| {
        let mut props = json!({
            "total": count,
            "offset": count,
            "limit": {"type": "integer", "minimum": 1, "maximum": MAX_LIMIT},
        });
        props[items_key] = array(item);
        let mut required = vec!["total", "offset", "limit", items_key];
        if let Some((k, v)) = extra {
            props[k] = v;
            required.push(k);
        }
        object(&required, props)
    };

    let health = object(&["status"], json!({"status": {"const": "ok"}}));
    let version = object(
        &["version", "dataset_version"],
        json!({"version": string, "dataset_version": string}),
    );
    let schema = object(
        &["dataset_version", "columns", "endpoints"],
        json!({
            "dataset_version": string,
            "columns": array(object(
                &["name", "type"],
                json!({"name": string, "type": {"enum": ["numeric", "text"]}}),
            )),
            "endpoints": {"type": "object"},
        }),
    );
    let network_item = object(
        &["hsa", "year", "node_count", "edge_count", "state", "region"],
        json!({
            "hsa": string,
            "year": {"type": "integer"},
            "node_count": count,
            "edge_count": count,
            "state": string,
            "region": string,
        }),
    );
    let networks = page("items", network_item, None);
    let node = object(
        &["id", "degree", "degree_centrality", "betweenness", "frc", "orc"],
        json!({
            "id": string,
            "degree": count,
            "degree_centrality": {"type": "number", "minimum": 0, "maximum": 1},
            "betweenness": {"type": "number", "minimum": 0, "maximum": 1},
            "frc": opt_num,
            "orc": {"type": ["number", "null"], "minimum": -2, "maximum": 1},
        }),
    );
    let edge = object(
        &["source", "target", "weight", "frc", "orc"],
        json!({
            "source": string,
            "target": string,
            "weight": {"type": "integer", "minimum": 1},
            "frc": opt_num,
            "orc": {"type": ["number", "null"], "minimum": -2, "maximum": 1},
        }),
    );
    let graph = object(
        &["hsa", "year", "state", "region", "nodes", "edges"],
        json!({
            "hsa": string,
            "year": {"type": "integer"},
            "state": string,
            "region": string,
            "nodes": array(node),
            "edges": array(edge),
        }),
    );
    let feature_row = json!({
        "type": "object",
        "additionalProperties": {"type": ["number", "string", "null"]},
    });
    let features = page("rows", feature_row, Some(("columns", array(string.clone()))));
    let summary = object(
        &[
            "group", "count", "mean", "min", "q1", "median", "q3", "max", "iqr", "whisker_low", "whisker_high",
            "bin_edges", "bin_counts",
        ],
        json!({
            "group": string,
            "count": count,
            "mean": num,
            "min": num,
            "q1": num,
            "median": num,
            "q3": num,
            "max": num,
            "iqr": num,
            "whisker_low": num,
            "whisker_high": num,
            "bin_edges": array(num.clone()),
            "bin_counts": array(count.clone()),
        }),
    );
    let distributions = object(
        &["metric", "group", "level", "groups"],
        json!({
            "metric": string,
            "group": {"type": ["string", "null"]},
            "level": {"enum": ["edge", "network"]},
            "groups": array(summary),
        }),
    );
    let method = json!({"enum": ["pearson", "spearman"]});
    let result = object(
        &["x", "y", "method", "coefficient", "n", "p_value", "permutations", "group"],
        json!({
            "x": string,
            "y": string,
            "method": method,
            "coefficient": {"type": ["number", "null"], "minimum": -1, "maximum": 1},
            "n": count,
            "p_value": {"type": ["number", "null"], "minimum": 0, "maximum": 1},
            "permutations": count,
            "group": {"type": "object", "additionalProperties": string},
        }),
    );
    let correlate = object(
        &["x", "y", "method", "group", "permutations", "seed", "results"],
        json!({
            "x": string,
            "y": string,
            "method": method,
            "group": array(string.clone()),
            "permutations": count,
            "seed": count,
            "results": array(result),
        }),
    );
    let error = object(
        &["error"],
        json!({"error": object(&["status", "message"], json!({"status": {"type": "integer"}, "message": string}))}),
    );
    json!({
        "/health": health,
        "/version": version,
        "/schema": schema,
        "/networks": networks,
        "/networks/{hsa}/{year}/graph": graph,
        "/features": features,
        "/distributions": distributions,
        "/correlate": correlate,
        "error": error,
    })
}

/// Binds `addr` and serves until Ctrl-C. `on_bound` receives the actual
/// address, which matters when the port is 0.
pub async fn serve(state: AppState, addr: &str, on_bound: impl FnOnce(std::net::SocketAddr)) -> crate::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .map_err(|e| crate::Error::Usage(format!("cannot bind {addr}: {e}")))?;
    let local = listener
        .local_addr()
        .map_err(|e| crate::Error::Internal(e.to_string()))?;
    on_bound(local);
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(|e| crate::Error::Internal(format!("server: {e}")))
}
