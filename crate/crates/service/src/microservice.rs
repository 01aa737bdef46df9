//! SPARQL micro-services: one Web API function behind a SPARQL endpoint.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::State;
use axum::http::{HeaderMap, Method, StatusCode, Uri};
use axum::response::{IntoResponse, Response};
use axum::routing::any;
use axum::Router;
use fedql_core::eval::{evaluate, NoServices, QueryOutput};
use fedql_core::lift::{map_response, MappingError, MappingSpec};
use fedql_core::rdf::Graph;
use fedql_core::sparql::parse_query;
use serde_json::Value as Json;

use crate::cache::TtlCache;
use crate::config::{ConfigError, HttpMethod, ServiceConfig};
use crate::protocol::{output_response, read_request, HttpError, SparqlRequest};

pub struct MicroService {
    config: ServiceConfig,
    mapping: MappingSpec,
    client: reqwest::Client,
    cache: TtlCache<Arc<Graph>>,
    hits: AtomicU64,
}

impl MicroService {
    pub fn new(config: ServiceConfig, mapping: MappingSpec) -> Result<Self, ConfigError> {
        config.validate()?;
        let client = reqwest::Client::builder()
            .no_proxy()
            .timeout(config.timeout())
            .build()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(MicroService {
            config,
            mapping,
            client,
            cache: TtlCache::new(),
            hits: AtomicU64::new(0),
        })
    }

    /// Builds the service, loading its mapping from the configured directory.
    pub fn load(config: ServiceConfig) -> Result<Self, ConfigError> {
        let mapping = MappingSpec::load(&config.mapping).map_err(|e| ConfigError::Invalid(e.to_string()))?;
        MicroService::new(config, mapping)
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.config
    }

    /// Upstream request attempts so far.
    pub fn api_hits(&self) -> u64 {
        self.hits.load(Ordering::SeqCst)
    }

    /// Every non-`query` URL parameter is an API argument; declared
    /// defaults fill the gaps.
    pub fn extract_args(&self, params: &[(String, String)]) -> Result<BTreeMap<String, String>, HttpError> {
        let mut args: BTreeMap<String, String> = params.iter().cloned().collect();
        for p in &self.config.params {
            if args.contains_key(&p.name) {
                continue;
            }
            match &p.default {
                Some(d) => {
                    args.insert(p.name.clone(), d.clone());
                }
                None if p.required => {
                    return Err(HttpError::bad_request(
                        "MissingParam",
                        format!("missing required parameter '{}'", p.name),
                    ));
                }
                None => {}
            }
        }
        Ok(args)
    }

    pub async fn invoke_api(&self, args: &BTreeMap<String, String>) -> Result<Json, HttpError> {
        let url = self.config.render_url(args);
        let mut request = match self.config.method {
            HttpMethod::Get => self.client.get(&url),
            HttpMethod::Post => self.client.post(&url),
        };
        for (k, v) in &self.config.headers {
            request = request.header(k, v);
        }
        self.hits.fetch_add(1, Ordering::SeqCst);
        let upstream = |e: reqwest::Error| {
            if e.is_timeout() {
                HttpError::new(
                    StatusCode::GATEWAY_TIMEOUT,
                    "UpstreamTimeout",
                    format!("{url} timed out after {} ms", self.config.timeout_ms),
                )
            } else {
                HttpError::new(StatusCode::BAD_GATEWAY, "UpstreamUnreachable", format!("{url}: {e}"))
            }
        };
        let response = request.send().await.map_err(upstream)?;
        let status = response.status();
        if !status.is_success() {
            return Err(HttpError::new(
                StatusCode::BAD_GATEWAY,
                "UpstreamError",
                format!("{url} answered status {}", status.as_u16()),
            ));
        }
        let body = response.bytes().await.map_err(upstream)?;
        serde_json::from_slice(&body)
            .map_err(|e| HttpError::new(StatusCode::BAD_GATEWAY, "InvalidJson", format!("{url}: {e}")))
    }

    /// The mapped fragment for one argument set, cached when enabled.
    pub async fn fragment(&self, args: &BTreeMap<String, String>) -> Result<Arc<Graph>, HttpError> {
        let key = self.config.cache_key(args);
        if let Some(g) = self.cache.get(&key) {
            return Ok(g);
        }
        let doc = self.invoke_api(args).await?;
        let graph = Arc::new(map_response(&doc, &self.mapping, args).map_err(|e| match e {
            MappingError::MissingParam { name } => {
                HttpError::bad_request("MissingParam", format!("missing required parameter '{name}'"))
            }
            other => HttpError::new(StatusCode::INTERNAL_SERVER_ERROR, "MappingError", other.to_string()),
        })?);
        self.cache.put(key, graph.clone(), self.config.cache_ttl());
        Ok(graph)
    }

    pub async fn handle(&self, request: &SparqlRequest) -> Result<QueryOutput, HttpError> {
        let query = parse_query(&request.query)?;
        if query.pattern.contains_service() {
            return Err(HttpError::bad_request(
                "ServiceInLeaf",
                "micro-services do not evaluate SERVICE clauses",
            ));
        }
        let args = self.extract_args(&request.params)?;
        let graph = self.fragment(&args).await?;
        evaluate(&graph, &query, &NoServices)
            .map_err(|e| HttpError::new(StatusCode::INTERNAL_SERVER_ERROR, "Internal", e.to_string()))
    }

    /// Routes `/srv/{route}/sparql`.
    pub fn router(self: Arc<Self>) -> Router {
        let path = format!("/srv/{}/sparql", self.config.route);
        Router::new().route(&path, any(handle_http)).with_state(self)
    }
}

async fn handle_http(
    State(svc): State<Arc<MicroService>>,
    method: Method,
    uri: Uri,
    headers: HeaderMap,
    body: Bytes,
) -> Response {
    let result = async {
        let request = read_request(&method, &uri, &headers, &body)?;
        svc.handle(&request).await
    }
    .await;
    match result {
        Ok(out) => output_response(&out),
        Err(e) => {
            tracing::warn!(service = %svc.config.name, error = %e.error, detail = %e.detail, "request failed");
            e.into_response()
        }
    }
}
