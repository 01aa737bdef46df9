//! A SPARQL endpoint over a fixed, fully materialized graph.

use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::State;
use axum::http::{HeaderMap, Method, StatusCode, Uri};
use axum::response::{IntoResponse, Response};
use axum::routing::any;
use axum::Router;
use fedql_core::eval::{evaluate, NoServices, QueryOutput};
use fedql_core::rdf::{parse_ntriples, Graph, RdfError};
use fedql_core::sparql::parse_query;

use crate::protocol::{output_response, read_request, HttpError, SparqlRequest};

pub struct NativeEndpoint {
    route: String,
    graph: Arc<Graph>,
}

impl NativeEndpoint {
    pub fn new(route: impl Into<String>, graph: Graph) -> Self {
        NativeEndpoint {
            route: route.into(),
            graph: Arc::new(graph),
        }
    }

    pub fn from_ntriples(route: impl Into<String>, text: &str) -> Result<Self, RdfError> {
        Ok(NativeEndpoint::new(route, parse_ntriples(text)?))
    }

    pub fn route(&self) -> &str {
        &self.route
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn handle(&self, request: &SparqlRequest) -> Result<QueryOutput, HttpError> {
        let query = parse_query(&request.query)?;
        evaluate(&self.graph, &query, &NoServices)
            .map_err(|e| HttpError::bad_request("ServiceNotSupported", e.to_string()))
    }

    /// Routes `/{route}/sparql`.
    pub fn router(self: Arc<Self>) -> Router {
        let path = format!("/{}/sparql", self.route);
        Router::new().route(&path, any(handle_http)).with_state(self)
    }
}

async fn handle_http(
    State(ep): State<Arc<NativeEndpoint>>,
    method: Method,
    uri: Uri,
    headers: HeaderMap,
    body: Bytes,
) -> Response {
    let result = match read_request(&method, &uri, &headers, &body) {
        Ok(request) => tokio::task::spawn_blocking(move || ep.handle(&request))
            .await
            .unwrap_or_else(|e| {
                Err(HttpError::new(
                    StatusCode::INTERNAL_SERVER_ERROR,
                    "Internal",
                    e.to_string(),
                ))
            }),
        Err(e) => Err(e),
    };
    match result {
        Ok(out) => output_response(&out),
        Err(e) => e.into_response(),
    }
}
