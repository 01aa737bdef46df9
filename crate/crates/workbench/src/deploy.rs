//! Starting a complete local federation: the mock Web API, the
//! micro-services wrapping it, native graph endpoints and the federator.

use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use axum::Router;
use fedql_core::eval::{evaluate, strip_services, NoServices, QueryOutput};
use fedql_core::rdf::{Graph, Term, Triple};
use fedql_core::sparql::{parse_query, GroupPattern, Query};
use fedql_service::config::{HttpMethod, ParamSpec};
use fedql_service::{
    spawn_server, FederationConfig, Federator, MicroService, NativeEndpoint, RunningServer, ServiceConfig,
};
use serde::{Deserialize, Serialize};

use crate::mock_api::{MockApi, NETWORK_ROUTE};

/// Replaced in `api_url_template` by the mock API's base URL.
pub const API_PLACEHOLDER: &str = "{{api}}";

#[derive(Debug, thiserror::Error)]
pub enum DeployError {
    #[error("reading {path}: {reason}")]
    Io { path: String, reason: String },
    #[error("invalid deployment: {0}")]
    Invalid(String),
}

fn io_err(path: &Path, e: impl ToString) -> DeployError {
    DeployError::Io {
        path: path.display().to_string(),
        reason: e.to_string(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MockApiConfig {
    pub fixtures: PathBuf,
    #[serde(default = "ephemeral")]
    pub listen: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NativeConfig {
    pub route: String,
    pub file: PathBuf,
}

fn ephemeral() -> String {
    "127.0.0.1:0".to_owned()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeployConfig {
    /// Address for the micro-services, native endpoints and federator.
    #[serde(default = "ephemeral")]
    pub listen: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mock_api: Option<MockApiConfig>,
    #[serde(default)]
    pub services: Vec<ServiceConfig>,
    #[serde(default)]
    pub native: Vec<NativeConfig>,
    #[serde(default)]
    pub federation: FederationConfig,
}

/// The two network micro-services over the mock API.
pub fn standard_services(mapping_root: &Path, cache_ttl_s: u64, timeout_ms: u64) -> Vec<ServiceConfig> {
    ["functional", "physical"]
        .iter()
        .map(|t| ServiceConfig {
            name: format!("string-{t}"),
            route: format!("string-{t}"),
            api_url_template: format!(
                "{API_PLACEHOLDER}{NETWORK_ROUTE}?identifiers={{identifiers}}&species={{species}}&network_type={t}"
            ),
            method: HttpMethod::Get,
            params: vec![
                ParamSpec {
                    name: "identifiers".into(),
                    required: true,
                    default: None,
                },
                ParamSpec {
                    name: "species".into(),
                    required: true,
                    default: None,
                },
            ],
            mapping: mapping_root.join(format!("string-{t}")),
            timeout_ms,
            cache_ttl_s,
            headers: BTreeMap::new(),
        })
        .collect()
}

/// The mapping directories shipped with this crate.
pub fn bundled_mappings() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("mappings")
}

impl DeployConfig {
    /// The reference topology over a fixture directory.
    pub fn standard(fixtures: &Path) -> Self {
        DeployConfig {
            listen: ephemeral(),
            mock_api: Some(MockApiConfig {
                fixtures: fixtures.to_owned(),
                listen: ephemeral(),
            }),
            services: standard_services(&bundled_mappings(), 0, 10_000),
            native: vec![NativeConfig {
                route: "oma".into(),
                file: fixtures.join("oma.nt"),
            }],
            federation: FederationConfig::default(),
        }
    }

    /// Loads a deployment file; relative paths are taken from its directory.
    pub fn load(path: &Path) -> Result<Self, DeployError> {
        let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
        let mut cfg: DeployConfig = serde_json::from_str(&text).map_err(|e| io_err(path, e))?;
        let dir = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        };
        if let Some(api) = cfg.mock_api.as_mut() {
            resolve(&mut api.fixtures);
        }
        cfg.services.iter_mut().for_each(|s| resolve(&mut s.mapping));
        cfg.native.iter_mut().for_each(|n| resolve(&mut n.file));
        Ok(cfg)
    }

    pub fn with_cache_ttl(mut self, ttl_s: u64) -> Self {
        self.services.iter_mut().for_each(|s| s.cache_ttl_s = ttl_s);
        self
    }
}

fn parse_addr(text: &str) -> Result<SocketAddr, DeployError> {
    text.parse()
        .map_err(|_| DeployError::Invalid(format!("'{text}' is not a socket address")))
}

pub struct Deployment {
    api: Option<(RunningServer, Arc<MockApi>)>,
    api_base: Option<String>,
    server: RunningServer,
    services: Vec<Arc<MicroService>>,
    natives: Vec<Arc<NativeEndpoint>>,
    federation: FederationConfig,
}

impl Deployment {
    pub async fn start(cfg: DeployConfig) -> Result<Self, DeployError> {
        cfg.federation
            .validate()
            .map_err(|e| DeployError::Invalid(e.to_string()))?;
        let api = match &cfg.mock_api {
            Some(m) => {
                let mock = Arc::new(MockApi::load(&m.fixtures).map_err(|e| io_err(&m.fixtures, e))?);
                let server = spawn_server(mock.clone().router(), parse_addr(&m.listen)?)
                    .await
                    .map_err(|e| DeployError::Invalid(format!("binding {}: {e}", m.listen)))?;
                Some((server, mock))
            }
            None => None,
        };
        let api_base = api.as_ref().map(|(s, _)| s.url(""));

        let mut router = Router::new();
        let mut services = Vec::new();
        for mut s in cfg.services {
            if s.api_url_template.contains(API_PLACEHOLDER) {
                let base = api_base
                    .as_deref()
                    .ok_or_else(|| DeployError::Invalid(format!("service '{}' needs a mock_api", s.name)))?;
                s.api_url_template = s.api_url_template.replace(API_PLACEHOLDER, base);
            }
            let svc = Arc::new(MicroService::load(s).map_err(|e| DeployError::Invalid(e.to_string()))?);
            router = router.merge(svc.clone().router());
            services.push(svc);
        }
        let mut natives = Vec::new();
        for n in cfg.native {
            let text = std::fs::read_to_string(&n.file).map_err(|e| io_err(&n.file, e))?;
            let ep = Arc::new(NativeEndpoint::from_ntriples(n.route, &text).map_err(|e| io_err(&n.file, e))?);
            router = router.merge(ep.clone().router());
            natives.push(ep);
        }
        let federator = Arc::new(Federator::with_http(cfg.federation.clone()));
        router = router.merge(federator.router());
        let server = spawn_server(router, parse_addr(&cfg.listen)?)
            .await
            .map_err(|e| DeployError::Invalid(format!("binding {}: {e}", cfg.listen)))?;
        Ok(Deployment {
            api,
            api_base,
            server,
            services,
            natives,
            federation: cfg.federation,
        })
    }

    pub fn federator_url(&self) -> String {
        self.server.url(&format!("/{}/sparql", self.federation.route))
    }

    pub fn api_url(&self) -> Option<&str> {
        self.api_base.as_deref()
    }

    pub fn mock_api(&self) -> Option<&Arc<MockApi>> {
        self.api.as_ref().map(|(_, m)| m)
    }

    pub fn services(&self) -> &[Arc<MicroService>] {
        &self.services
    }

    /// Placeholder name → endpoint URL, for rendering workbench queries.
    pub fn endpoints(&self) -> BTreeMap<String, String> {
        let mut out = BTreeMap::new();
        for s in &self.services {
            let route = &s.config().route;
            out.insert(route.clone(), self.server.url(&format!("/srv/{route}/sparql")));
        }
        for n in &self.natives {
            out.insert(n.route().to_owned(), self.server.url(&format!("/{}/sparql", n.route())));
        }
        out.insert("federator".into(), self.federator_url());
        out
    }

    /// Stops the mock API, leaving every other endpoint running.
    pub async fn stop_api(&mut self) {
        if let Some((server, _)) = self.api.take() {
            server.shutdown().await;
        }
    }

    pub async fn shutdown(mut self) {
        self.stop_api().await;
        self.server.shutdown().await;
    }

    /// Waits until the endpoint server exits.
    pub async fn wait(self) -> std::io::Result<()> {
        let Deployment { api, server, .. } = self;
        let result = server.wait().await;
        drop(api);
        result
    }

    /// The full graph behind one SERVICE IRI, or `None` for endpoints not
    /// part of this deployment.
    pub async fn materialize(&self, endpoint: &str) -> Result<Option<Graph>, String> {
        let (path, query) = match endpoint.strip_prefix(&self.server.url("")) {
            Some(rest) => rest.split_once('?').unwrap_or((rest, "")),
            None => return Ok(None),
        };
        for n in &self.natives {
            if path == format!("/{}/sparql", n.route()) {
                return Ok(Some(n.graph().clone()));
            }
        }
        for s in &self.services {
            if path == format!("/srv/{}/sparql", s.config().route) {
                let params: Vec<(String, String)> = form_urlencoded::parse(query.as_bytes()).into_owned().collect();
                let args = s.extract_args(&params).map_err(|e| e.detail)?;
                return s
                    .fragment(&args)
                    .await
                    .map(|g| Some((*g).clone()))
                    .map_err(|e| e.detail);
            }
        }
        Ok(None)
    }

    /// Evaluates a federated query without the federator: every SERVICE
    /// frame is erased and the query runs over the union of the fully
    /// materialized sources it names. Blank nodes stay apart per source.
    pub async fn centralized(&self, query_text: &str) -> Result<QueryOutput, String> {
        let query: Query = parse_query(query_text).map_err(|e| e.to_string())?;
        let mut endpoints: Vec<String> = Vec::new();
        collect_endpoints(&query.pattern, &mut endpoints);
        let mut union = Graph::new();
        for (i, e) in endpoints.iter().enumerate() {
            if let Some(g) = self.materialize(e).await? {
                union.absorb(&scope_blanks(&g, i));
            }
        }
        evaluate(&union, &strip_services(&query), &NoServices).map_err(|e| e.to_string())
    }
}

fn collect_endpoints(group: &GroupPattern, out: &mut Vec<String>) {
    for s in group.services() {
        if !out.contains(&s.endpoint) {
            out.push(s.endpoint.clone());
        }
    }
}

fn scope_blanks(g: &Graph, source: usize) -> Graph {
    let fix = |t: &Term| match t {
        Term::BlankNode(l) => Term::BlankNode(format!("c{source}x{l}")),
        other => other.clone(),
    };
    g.iter()
        .map(|t| {
            Triple::new(fix(t.subject), t.predicate.clone(), fix(t.object)).expect("relabeling keeps triples valid")
        })
        .collect()
}
