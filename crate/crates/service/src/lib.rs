//! HTTP interface for loading a model once and then querying beliefs,
//! requesting explanations and evaluating edited subgraphs.
//!
//! All payloads are JSON. Every response body carries `format_version`;
//! explanation documents use the same schema as the command-line tool.

mod error;
mod session;

use std::collections::{BTreeSet, VecDeque};
use std::net::SocketAddr;
use std::sync::Arc;
use std::time::{Duration, Instant};

use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{Path, Query, State};
use axum::routing::{get, post};
use axum::{Json, Router};
use bpexplain_core::io::{
    build_mrf, explain_documents, preset, DatasetSpec, ExplanationDocument, FORMAT_VERSION,
};
use bpexplain_core::{
    evaluate_candidate, run_bp, BpConfig, Edge, GelVariant, LabelDistribution, Method, MethodTag,
    NodeId, SearchConfig, Subgraph,
};
use serde::{Deserialize, Serialize};
use tokio::net::TcpListener;

pub use error::ApiError;
pub use session::{Session, SessionStore, DEFAULT_IDLE_TIMEOUT};

type ApiResult<T> = Result<Json<T>, ApiError>;

/// Builds the router over `store`.
pub fn app(store: Arc<SessionStore>) -> Router {
    Router::new()
        .route("/healthz", get(healthz))
        .route("/api/session", post(create_session))
        .route("/api/{sid}/belief", get(belief))
        .route("/api/{sid}/explain", post(explain))
        .route("/api/{sid}/whatif", post(whatif))
        .route("/api/{sid}/neighborhood", get(neighborhood))
        .with_state(store)
}

/// Serves on `listener` until the process ends, sweeping idle sessions once
/// a minute.
pub async fn serve(listener: TcpListener, idle_timeout: Duration) -> std::io::Result<()> {
    let store = Arc::new(SessionStore::new(idle_timeout));
    let sweeper = store.clone();
    tokio::spawn(async move {
        let mut tick = tokio::time::interval(Duration::from_secs(60));
        loop {
            tick.tick().await;
            let evicted = sweeper.evict_idle(Instant::now());
            if evicted > 0 {
                tracing::info!(evicted, "evicted idle sessions");
            }
        }
    });
    if let Ok(addr) = listener.local_addr() {
        tracing::info!(%addr, "listening");
    }
    axum::serve(listener, app(store)).await
}

/// Binds `addr` and serves.
pub async fn serve_on(addr: SocketAddr, idle_timeout: Duration) -> std::io::Result<()> {
    serve(TcpListener::bind(addr).await?, idle_timeout).await
}

async fn healthz() -> &'static str {
    "ok"
}

fn body<T>(payload: Result<Json<T>, JsonRejection>) -> Result<T, ApiError> {
    payload
        .map(|Json(t)| t)
        .map_err(|e| ApiError::BadRequest(e.body_text()))
}

fn query<T>(params: Result<Query<T>, QueryRejection>) -> Result<T, ApiError> {
    params
        .map(|Query(t)| t)
        .map_err(|e| ApiError::BadRequest(e.body_text()))
}

fn session(store: &SessionStore, sid: &str) -> Result<Arc<Session>, ApiError> {
    store
        .get(sid)
        .ok_or_else(|| ApiError::NotFound(format!("no session '{sid}'")))
}

fn require_node(s: &Session, node: NodeId) -> Result<(), ApiError> {
    if s.mrf.contains(node) {
        Ok(())
    } else {
        Err(ApiError::NotFound(format!(
            "node {node} is not in the model"
        )))
    }
}

async fn blocking<T: Send + 'static>(
    f: impl FnOnce() -> Result<T, ApiError> + Send + 'static,
) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::Internal(format!("worker failed: {e}")))?
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateSession {
    pub preset: Option<String>,
    pub spec: Option<DatasetSpec>,
    pub bp: Option<BpConfig>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphSummary {
    pub nodes: usize,
    pub edges: usize,
    pub classes: usize,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SessionCreated {
    pub format_version: u32,
    pub session: String,
    pub summary: GraphSummary,
    pub converged: bool,
    pub iterations: usize,
}

async fn create_session(
    State(store): State<Arc<SessionStore>>,
    payload: Result<Json<CreateSession>, JsonRejection>,
) -> ApiResult<SessionCreated> {
    let req = body(payload)?;
    let bp = req.bp.unwrap_or_default();
    bp.validate()?;
    let (mrf, full) = blocking(move || {
        let mrf = match (req.preset, req.spec) {
            (Some(name), None) => preset(&name)?,
            (None, Some(spec)) => build_mrf(&spec, &spec.load()?)?,
            _ => {
                return Err(ApiError::BadRequest(
                    "give exactly one of 'preset' or 'spec'".into(),
                ))
            }
        };
        let full = run_bp(&mrf, &bp)?;
        Ok((mrf, full))
    })
    .await?;
    let s = store.insert(mrf, full, bp);
    tracing::info!(session = %s.id, nodes = s.mrf.node_count(), "session created");
    Ok(Json(SessionCreated {
        format_version: FORMAT_VERSION,
        session: s.id.clone(),
        summary: GraphSummary {
            nodes: s.mrf.node_count(),
            edges: s.mrf.edge_count(),
            classes: s.mrf.class_count(),
        },
        converged: s.full.converged,
        iterations: s.full.iterations,
    }))
}

#[derive(Debug, Deserialize)]
pub struct NodeQuery {
    pub node: NodeId,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct BeliefReply {
    pub format_version: u32,
    pub node: NodeId,
    pub belief: LabelDistribution,
    pub prior: LabelDistribution,
}

async fn belief(
    State(store): State<Arc<SessionStore>>,
    Path(sid): Path<String>,
    params: Result<Query<NodeQuery>, QueryRejection>,
) -> ApiResult<BeliefReply> {
    let q = query(params)?;
    let s = session(&store, &sid)?;
    require_node(&s, q.node)?;
    Ok(Json(BeliefReply {
        format_version: FORMAT_VERSION,
        node: q.node,
        belief: s.full.belief(q.node).map_err(ApiError::lookup)?.clone(),
        prior: s.mrf.prior_of(q.node).map_err(ApiError::lookup)?.clone(),
    }))
}

fn default_capacity() -> usize {
    5
}

fn default_beam() -> usize {
    1
}

fn yes() -> bool {
    true
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplainRequest {
    pub target: NodeId,
    #[serde(default)]
    pub method: Option<Method>,
    #[serde(default = "default_capacity", alias = "C")]
    pub capacity: usize,
    #[serde(default = "default_beam", alias = "k")]
    pub beam_width: usize,
    #[serde(default, alias = "pruning_rate")]
    pub prune: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub gel_variant: GelVariant,
    /// Also return the union of the beam.
    #[serde(default = "yes")]
    pub combine: bool,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Candidate {
    pub rank: usize,
    pub size: usize,
    pub objective: f64,
    pub document: ExplanationDocument,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ExplainReply {
    pub format_version: u32,
    pub target: NodeId,
    pub bp_invocations: usize,
    pub candidates: Vec<Candidate>,
    pub comb: Option<Candidate>,
}

fn candidate(rank: usize, document: ExplanationDocument) -> Candidate {
    Candidate {
        rank,
        size: document.size,
        objective: document.objective,
        document,
    }
}

async fn explain(
    State(store): State<Arc<SessionStore>>,
    Path(sid): Path<String>,
    payload: Result<Json<ExplainRequest>, JsonRejection>,
) -> ApiResult<ExplainReply> {
    let req = body(payload)?;
    let s = session(&store, &sid)?;
    require_node(&s, req.target)?;
    let config = SearchConfig {
        capacity: req.capacity,
        beam_width: req.beam_width,
        method: req.method.unwrap_or(Method::Geg),
        gel_variant: req.gel_variant,
        pruning_rate: req.prune,
        seed: req.seed,
        bp: s.bp,
    };
    config.validate()?;
    let _turn = s.explain_lock.lock().await;
    let worker = s.clone();
    let out = blocking(move || {
        Ok(explain_documents(
            &worker.mrf,
            &worker.full,
            req.target,
            &config,
            req.combine,
        )?)
    })
    .await?;
    Ok(Json(ExplainReply {
        format_version: FORMAT_VERSION,
        target: req.target,
        bp_invocations: out.bp_invocations,
        candidates: out
            .candidates
            .into_iter()
            .enumerate()
            .map(|(i, d)| candidate(i + 1, d))
            .collect(),
        comb: out.comb.map(|d| candidate(0, d)),
    }))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WhatIfRequest {
    pub target: NodeId,
    pub nodes: Vec<NodeId>,
    #[serde(default)]
    pub edges: Vec<Edge>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct WhatIfReply {
    pub format_version: u32,
    pub target: NodeId,
    pub size: usize,
    pub is_tree: bool,
    pub full_belief: LabelDistribution,
    pub belief_on_subgraph: LabelDistribution,
    pub objective: f64,
}

/// Checks an edited subgraph; every problem with the edit is a 400.
fn edited_subgraph(s: &Session, req: WhatIfRequest) -> Result<Subgraph, ApiError> {
    let mut nodes = Vec::with_capacity(req.nodes.len());
    let mut seen = BTreeSet::new();
    for n in req.nodes {
        if !seen.insert(n) {
            return Err(ApiError::BadRequest(format!("node {n} is listed twice")));
        }
        nodes.push(n);
    }
    let mut edges: Vec<Edge> = req
        .edges
        .iter()
        .map(|&(a, b)| bpexplain_core::normalize_edge(a, b))
        .collect();
    edges.sort_unstable();
    if edges.windows(2).any(|w| w[0] == w[1]) {
        return Err(ApiError::BadRequest("an edge is listed twice".into()));
    }
    let sub = Subgraph {
        target: req.target,
        nodes,
        edges,
        closed_endpoints: Vec::new(),
    };
    sub.validate_against(&s.mrf)
        .map_err(|e| ApiError::BadRequest(e.to_string()))?;
    if !sub.is_connected() {
        return Err(ApiError::BadRequest(
            "the edited subgraph is disconnected".into(),
        ));
    }
    Ok(sub)
}

async fn whatif(
    State(store): State<Arc<SessionStore>>,
    Path(sid): Path<String>,
    payload: Result<Json<WhatIfRequest>, JsonRejection>,
) -> ApiResult<WhatIfReply> {
    let req = body(payload)?;
    let s = session(&store, &sid)?;
    let target = req.target;
    let sub = edited_subgraph(&s, req)?;
    blocking(move || {
        let full_belief = s.full.belief(target).map_err(ApiError::lookup)?.clone();
        let e = evaluate_candidate(&s.mrf, &full_belief, &sub, &s.bp, MethodTag::WhatIf)?;
        Ok(Json(WhatIfReply {
            format_version: FORMAT_VERSION,
            target,
            size: e.size(),
            is_tree: e.subgraph.is_tree(),
            full_belief,
            belief_on_subgraph: e.belief_on_subgraph,
            objective: e.objective,
        }))
    })
    .await
}

#[derive(Debug, Deserialize)]
pub struct NeighborhoodQuery {
    pub node: NodeId,
    #[serde(default = "default_radius")]
    pub radius: usize,
}

fn default_radius() -> usize {
    1
}

#[derive(Debug, Serialize, Deserialize)]
pub struct NeighborNode {
    pub node: NodeId,
    /// Hops from the center.
    pub distance: usize,
    pub prior: LabelDistribution,
    pub belief: LabelDistribution,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct NeighborhoodReply {
    pub format_version: u32,
    pub center: NodeId,
    pub radius: usize,
    pub nodes: Vec<NeighborNode>,
    /// Every model edge between two returned nodes.
    pub edges: Vec<Edge>,
}

async fn neighborhood(
    State(store): State<Arc<SessionStore>>,
    Path(sid): Path<String>,
    params: Result<Query<NeighborhoodQuery>, QueryRejection>,
) -> ApiResult<NeighborhoodReply> {
    let q = query(params)?;
    let s = session(&store, &sid)?;
    require_node(&s, q.node)?;
    let mrf = &s.mrf;
    let start = mrf.index_of(q.node).expect("checked above");
    let mut distance = vec![usize::MAX; mrf.node_count()];
    distance[start] = 0;
    let mut queue = VecDeque::from([start]);
    while let Some(u) = queue.pop_front() {
        if distance[u] == q.radius {
            continue;
        }
        for &v in mrf.neighbors(u) {
            if distance[v] == usize::MAX {
                distance[v] = distance[u] + 1;
                queue.push_back(v);
            }
        }
    }
    let inside = |i: usize| distance[i] != usize::MAX;
    let nodes = (0..mrf.node_count())
        .filter(|&i| inside(i))
        .map(|i| NeighborNode {
            node: mrf.id(i),
            distance: distance[i],
            prior: mrf.prior(i).clone(),
            belief: s
                .full
                .beliefs
                .get(mrf.id(i))
                .expect("every node has a belief")
                .clone(),
        })
        .collect();
    let edges = mrf
        .edges()
        .filter(|&(a, b)| inside(mrf.index_of(a).unwrap()) && inside(mrf.index_of(b).unwrap()))
        .collect();
    Ok(Json(NeighborhoodReply {
        format_version: FORMAT_VERSION,
        center: q.node,
        radius: q.radius,
        nodes,
        edges,
    }))
}
