//! The dataless federation endpoint: SERVICE blocks become bound joins
//! against remote SPARQL endpoints.

use std::collections::{HashMap, HashSet};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use axum::body::Bytes;
use axum::extract::State;
use axum::http::{header, HeaderMap, HeaderValue, Method, StatusCode, Uri};
use axum::response::{IntoResponse, Response};
use axum::routing::any;
use axum::Router;
use fedql_core::eval::{evaluate, QueryOutput, RemoteFailure, ServiceError, ServiceExecutor};
use fedql_core::rdf::{Graph, Term};
use fedql_core::sparql::{
    parse_query, parse_select_results, serialize_query, Binding, Element, GroupPattern, Query, ServicePattern,
    Solutions, ValuesTable, Variable,
};
use futures::future::{join_all, BoxFuture};
use serde::Serialize;

use crate::config::FederationConfig;
use crate::protocol::{output_response, read_request, HttpError, SPARQL_QUERY, SPARQL_RESULTS_JSON};

pub const REMOTE_CALLS_HEADER: &str = "x-fedql-remote-calls";

/// Sends one SELECT query to one endpoint and returns its solutions.
pub trait RemoteClient: Send + Sync {
    fn select(
        &self,
        endpoint: &str,
        query: String,
        timeout: Duration,
    ) -> BoxFuture<'static, Result<Solutions, RemoteFailure>>;
}

/// The HTTP client: POST `application/sparql-query`, one request per call.
#[derive(Clone)]
pub struct HttpRemoteClient {
    client: reqwest::Client,
}

impl HttpRemoteClient {
    pub fn new() -> Self {
        HttpRemoteClient {
            client: reqwest::Client::builder()
                .no_proxy()
                .build()
                .expect("static client configuration"),
        }
    }
}

impl Default for HttpRemoteClient {
    fn default() -> Self {
        Self::new()
    }
}

fn transport_failure(e: reqwest::Error) -> RemoteFailure {
    if e.is_timeout() {
        RemoteFailure::Timeout
    } else {
        RemoteFailure::Unreachable(e.to_string())
    }
}

impl RemoteClient for HttpRemoteClient {
    fn select(
        &self,
        endpoint: &str,
        query: String,
        timeout: Duration,
    ) -> BoxFuture<'static, Result<Solutions, RemoteFailure>> {
        let request = self
            .client
            .post(endpoint)
            .header(header::CONTENT_TYPE, SPARQL_QUERY)
            .header(header::ACCEPT, SPARQL_RESULTS_JSON)
            .timeout(timeout)
            .body(query);
        Box::pin(async move {
            let response = request.send().await.map_err(transport_failure)?;
            let status = response.status();
            if !status.is_success() {
                return Err(RemoteFailure::Status(status.as_u16()));
            }
            let body = response.text().await.map_err(transport_failure)?;
            parse_select_results(&body).map_err(|e| RemoteFailure::Malformed(e.reason))
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum PlanStep {
    /// Patterns matched against the federator's empty graph.
    Local {
        patterns: usize,
    },
    Filter,
    Values {
        rows: usize,
    },
    Optional(Vec<PlanStep>),
    Service {
        endpoint: String,
        silent: bool,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExecutionPlan {
    pub steps: Vec<PlanStep>,
    pub warnings: Vec<String>,
}

/// The textual-order plan. Rejects disallowed endpoints before any I/O.
pub fn plan(query: &Query, cfg: &FederationConfig) -> Result<ExecutionPlan, ServiceError> {
    fn steps(group: &GroupPattern, cfg: &FederationConfig) -> Result<Vec<PlanStep>, ServiceError> {
        group
            .elements
            .iter()
            .map(|el| {
                Ok(match el {
                    Element::Triples(tps) => PlanStep::Local { patterns: tps.len() },
                    Element::Filter(_) => PlanStep::Filter,
                    Element::Values(v) => PlanStep::Values { rows: v.rows.len() },
                    Element::Optional(g) => PlanStep::Optional(steps(g, cfg)?),
                    Element::Service(s) => {
                        if !cfg.allows(&s.endpoint) {
                            return Err(ServiceError::NotAllowed {
                                endpoint: s.endpoint.clone(),
                            });
                        }
                        PlanStep::Service {
                            endpoint: s.endpoint.clone(),
                            silent: s.silent,
                        }
                    }
                })
            })
            .collect()
    }
    let steps = steps(&query.pattern, cfg)?;
    let mut warnings = query.warnings();
    if steps.iter().any(|s| matches!(s, PlanStep::Local { .. })) {
        warnings.push("top-level triple patterns are matched against the federator's empty graph".to_owned());
    }
    Ok(ExecutionPlan { steps, warnings })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ServiceMetric {
    pub endpoint: String,
    pub calls: usize,
    pub millis: f64,
    pub failed: bool,
}

/// Executes SERVICE elements as bound joins. One instance serves one query.
pub struct BoundJoinExecutor {
    cfg: FederationConfig,
    client: Arc<dyn RemoteClient>,
    runtime: tokio::runtime::Handle,
    calls: AtomicUsize,
    responses: AtomicUsize,
    metrics: Mutex<Vec<ServiceMetric>>,
}

/// The rows sharing one pattern of bound join variables.
struct MaskGroup {
    vars: Vec<Variable>,
    /// Distinct projections in first-seen order.
    keys: Vec<Vec<Term>>,
    /// Projection → incoming row indices.
    rows: HashMap<Vec<Term>, Vec<usize>>,
}

impl BoundJoinExecutor {
    pub fn new(cfg: FederationConfig, client: Arc<dyn RemoteClient>, runtime: tokio::runtime::Handle) -> Self {
        BoundJoinExecutor {
            cfg,
            client,
            runtime,
            calls: AtomicUsize::new(0),
            responses: AtomicUsize::new(0),
            metrics: Mutex::new(Vec::new()),
        }
    }

    /// Remote calls issued so far.
    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    pub fn metrics(&self) -> Vec<ServiceMetric> {
        self.metrics.lock().expect("metrics lock").clone()
    }

    fn groups(&self, service: &ServicePattern, incoming: &Solutions) -> Vec<MaskGroup> {
        let body_vars = service.body.variables();
        let join: Vec<&Variable> = body_vars
            .iter()
            .filter(|v| v.is_expressible() && !v.is_blank_derived())
            .filter(|v| incoming.rows.iter().any(|r| r.contains(v)))
            .collect();
        let mut groups: Vec<MaskGroup> = Vec::new();
        let mut by_mask: HashMap<Vec<Variable>, usize> = HashMap::new();
        'rows: for (i, row) in incoming.rows.iter().enumerate() {
            let vars: Vec<Variable> = join.iter().filter(|v| row.contains(v)).map(|v| (*v).clone()).collect();
            let mut key = Vec::with_capacity(vars.len());
            for v in &vars {
                let t = row.get(v).expect("mask variables are bound");
                if t.is_blank() {
                    // Blank nodes cannot be shipped; the row finds no partner.
                    continue 'rows;
                }
                key.push(t.clone());
            }
            let g = *by_mask.entry(vars.clone()).or_insert_with(|| {
                groups.push(MaskGroup {
                    vars,
                    keys: Vec::new(),
                    rows: HashMap::new(),
                });
                groups.len() - 1
            });
            let group = &mut groups[g];
            let slot = group.rows.entry(key.clone()).or_default();
            if slot.is_empty() {
                group.keys.push(key);
            }
            slot.push(i);
        }
        groups
    }

    fn render(body: &GroupPattern, vars: &[Variable], keys: &[Vec<Term>]) -> String {
        let mut elements = Vec::with_capacity(body.elements.len() + 1);
        if !vars.is_empty() {
            elements.push(Element::Values(ValuesTable {
                vars: vars.to_vec(),
                rows: keys.iter().map(|k| k.iter().cloned().map(Some).collect()).collect(),
            }));
        }
        elements.extend(body.elements.iter().cloned());
        serialize_query(&Query::select_all(GroupPattern::new(elements)))
    }

    /// Renames remote blank nodes so they never meet blanks from another response.
    fn scope_blanks(&self, mut solutions: Solutions) -> Solutions {
        let n = self.responses.fetch_add(1, Ordering::SeqCst);
        for row in &mut solutions.rows {
            let renamed: Vec<(Variable, Term)> = row
                .iter()
                .filter_map(|(v, t)| match t {
                    Term::BlankNode(label) => Some((v.clone(), Term::BlankNode(format!("r{n}x{label}")))),
                    _ => None,
                })
                .collect();
            for (v, t) in renamed {
                row.insert(v, t);
            }
        }
        solutions
    }

    fn bound_join(&self, service: &ServicePattern, incoming: &Solutions) -> Result<Solutions, ServiceError> {
        let endpoint = &service.endpoint;
        let chunk = self.cfg.chunk_size_for(endpoint).max(1);
        let timeout = self.cfg.timeout_for(endpoint);
        let groups = self.groups(service, incoming);

        // (group index, query text) per remote call.
        let mut requests = Vec::new();
        for (g, group) in groups.iter().enumerate() {
            if group.vars.is_empty() {
                requests.push((g, Self::render(&service.body, &[], &[])));
            } else {
                for keys in group.keys.chunks(chunk) {
                    requests.push((g, Self::render(&service.body, &group.vars, keys)));
                }
            }
        }
        let limit = self.cfg.max_remote_calls;
        if self.calls() + requests.len() > limit {
            return Err(ServiceError::BudgetExceeded { limit });
        }
        self.calls.fetch_add(requests.len(), Ordering::SeqCst);

        let started = Instant::now();
        let futures: Vec<_> = requests
            .iter()
            .map(|(_, q)| self.client.select(endpoint, q.clone(), timeout))
            .collect();
        let results = self.runtime.block_on(join_all(futures));
        let failed = results.iter().any(|r| r.is_err());
        self.metrics.lock().expect("metrics lock").push(ServiceMetric {
            endpoint: endpoint.clone(),
            calls: requests.len(),
            millis: started.elapsed().as_secs_f64() * 1000.0,
            failed,
        });

        // Per incoming row, the remote rows it joins with.
        let mut partners: Vec<Vec<Binding>> = vec![Vec::new(); incoming.len()];
        let mut out_vars = incoming.vars.clone();
        for ((g, _), result) in requests.iter().zip(results) {
            let remote = self.scope_blanks(result.map_err(|failure| ServiceError::Remote {
                endpoint: endpoint.clone(),
                failure,
            })?);
            out_vars.extend(remote.vars.iter().filter(|v| !incoming.vars.contains(v)).cloned());
            let group = &groups[*g];
            for m in remote.rows {
                let key: Option<Vec<Term>> = group.vars.iter().map(|v| m.get(v).cloned()).collect();
                match key {
                    Some(key) => {
                        for &i in group.rows.get(&key).into_iter().flatten() {
                            partners[i].push(m.clone());
                        }
                    }
                    // A remote row leaving a join variable unbound is compatible
                    // with every row of the group that agrees on the rest.
                    None => {
                        for &i in group.rows.values().flatten() {
                            if incoming.rows[i].compatible(&m) {
                                partners[i].push(m.clone());
                            }
                        }
                    }
                }
            }
        }
        let mut seen = HashSet::new();
        out_vars.retain(|v| seen.insert(v.clone()));
        let mut rows = Vec::new();
        for (row, ms) in incoming.rows.iter().zip(partners) {
            rows.extend(ms.iter().filter_map(|m| row.merge(m)));
        }
        Ok(Solutions::new(out_vars, rows))
    }
}

impl ServiceExecutor for BoundJoinExecutor {
    fn execute(&self, service: &ServicePattern, incoming: &Solutions) -> Result<Solutions, ServiceError> {
        if !self.cfg.allows(&service.endpoint) {
            return Err(ServiceError::NotAllowed {
                endpoint: service.endpoint.clone(),
            });
        }
        if incoming.is_empty() {
            return Ok(incoming.clone());
        }
        match self.bound_join(service, incoming) {
            Err(ServiceError::Remote { endpoint, failure }) if service.silent => {
                tracing::info!(%endpoint, %failure, "SILENT service failed; passing solutions through");
                Ok(incoming.clone())
            }
            other => other,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FederatedOutcome {
    pub output: QueryOutput,
    pub remote_calls: usize,
    pub metrics: Vec<ServiceMetric>,
    pub warnings: Vec<String>,
}

pub struct Federator {
    cfg: FederationConfig,
    client: Arc<dyn RemoteClient>,
}

impl Federator {
    pub fn new(cfg: FederationConfig, client: Arc<dyn RemoteClient>) -> Self {
        Federator { cfg, client }
    }

    pub fn with_http(cfg: FederationConfig) -> Self {
        Federator::new(cfg, Arc::new(HttpRemoteClient::new()))
    }

    pub fn config(&self) -> &FederationConfig {
        &self.cfg
    }

    /// Plans and evaluates a query. Must be called inside a tokio runtime;
    /// evaluation itself runs on the blocking pool.
    pub async fn eval_federated(&self, query: Query) -> Result<FederatedOutcome, ServiceError> {
        let planned = plan(&query, &self.cfg)?;
        let executor = BoundJoinExecutor::new(self.cfg.clone(), self.client.clone(), tokio::runtime::Handle::current());
        let (output, executor) = tokio::task::spawn_blocking(move || {
            let output = evaluate(&Graph::new(), &query, &executor);
            (output, executor)
        })
        .await
        .expect("federated evaluation panicked");
        Ok(FederatedOutcome {
            output: output?,
            remote_calls: executor.calls(),
            metrics: executor.metrics(),
            warnings: planned.warnings,
        })
    }

    /// Routes `/{route}/sparql`.
    pub fn router(self: Arc<Self>) -> Router {
        let path = format!("/{}/sparql", self.cfg.route);
        Router::new().route(&path, any(handle_http)).with_state(self)
    }
}

pub fn service_error_response(e: &ServiceError) -> HttpError {
    match e {
        ServiceError::NotAllowed { .. } => HttpError::bad_request("EndpointNotAllowed", e.to_string()),
        ServiceError::Remote { .. } => HttpError::new(StatusCode::BAD_GATEWAY, "RemoteError", e.to_string()),
        ServiceError::BudgetExceeded { .. } => {
            HttpError::new(StatusCode::UNPROCESSABLE_ENTITY, "QueryBudgetExceeded", e.to_string())
        }
        ServiceError::Unavailable { .. } => {
            HttpError::new(StatusCode::INTERNAL_SERVER_ERROR, "Internal", e.to_string())
        }
    }
}

#[derive(Serialize)]
struct MetricsLine<'a> {
    query_ms: f64,
    remote_calls: usize,
    services: &'a [ServiceMetric],
    warnings: &'a [String],
}

async fn handle_http(
    State(fed): State<Arc<Federator>>,
    method: Method,
    uri: Uri,
    headers: HeaderMap,
    body: Bytes,
) -> Response {
    let started = Instant::now();
    let query = match read_request(&method, &uri, &headers, &body).and_then(|r| Ok(parse_query(&r.query)?)) {
        Ok(q) => q,
        Err(e) => return e.into_response(),
    };
    match fed.eval_federated(query).await {
        Ok(outcome) => {
            let line = MetricsLine {
                query_ms: started.elapsed().as_secs_f64() * 1000.0,
                remote_calls: outcome.remote_calls,
                services: &outcome.metrics,
                warnings: &outcome.warnings,
            };
            tracing::info!(target: "fedql::metrics", "{}", serde_json::to_string(&line).expect("metrics serialize"));
            let mut response = output_response(&outcome.output);
            response
                .headers_mut()
                .insert(REMOTE_CALLS_HEADER, HeaderValue::from(outcome.remote_calls));
            response
        }
        Err(e) => {
            tracing::warn!(error = %e, "federated query failed");
            service_error_response(&e).into_response()
        }
    }
}
