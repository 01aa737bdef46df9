//! The SPARQL protocol surface shared by every endpoint kind.

use axum::body::Bytes;
use axum::http::{header, HeaderMap, HeaderValue, Method, StatusCode, Uri};
use axum::response::{IntoResponse, Response};
use fedql_core::eval::QueryOutput;
use fedql_core::rdf::serialize_ntriples;
use fedql_core::sparql::{serialize_boolean_result, serialize_select_results, ParseError};
use serde::Serialize;

pub const SPARQL_RESULTS_JSON: &str = "application/sparql-results+json";
pub const N_TRIPLES: &str = "application/n-triples";
pub const SPARQL_QUERY: &str = "application/sparql-query";
const FORM: &str = "application/x-www-form-urlencoded";

/// An error response: `{"error": ..., "detail": ...}` plus the position of
/// query syntax errors when known.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpError {
    pub status: StatusCode,
    pub error: String,
    pub detail: String,
    pub position: Option<(usize, usize)>,
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    error: &'a str,
    detail: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    line: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    col: Option<usize>,
}

impl HttpError {
    pub fn new(status: StatusCode, error: impl Into<String>, detail: impl Into<String>) -> Self {
        HttpError {
            status,
            error: error.into(),
            detail: detail.into(),
            position: None,
        }
    }

    pub fn bad_request(error: impl Into<String>, detail: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, error, detail)
    }

    pub fn body(&self) -> String {
        serde_json::to_string(&ErrorBody {
            error: &self.error,
            detail: &self.detail,
            line: self.position.map(|p| p.0),
            col: self.position.map(|p| p.1),
        })
        .expect("error bodies serialize")
    }
}

impl From<ParseError> for HttpError {
    fn from(e: ParseError) -> Self {
        let kind = match e {
            ParseError::Syntax { .. } => "QuerySyntax",
            ParseError::UnsupportedFeature { .. } => "UnsupportedFeature",
        };
        HttpError {
            position: Some(e.position()),
            ..HttpError::bad_request(kind, e.to_string())
        }
    }
}

impl IntoResponse for HttpError {
    fn into_response(self) -> Response {
        let body = self.body();
        (self.status, [(header::CONTENT_TYPE, "application/json")], body).into_response()
    }
}

/// A decoded SPARQL request: the query text and the remaining URL parameters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparqlRequest {
    pub query: String,
    pub params: Vec<(String, String)>,
}

/// Reads `query` from the URL (GET) or the body (POST, either
/// `application/sparql-query` or form-encoded). Every other URL parameter
/// is returned in `params`.
pub fn read_request(method: &Method, uri: &Uri, headers: &HeaderMap, body: &Bytes) -> Result<SparqlRequest, HttpError> {
    let mut query = None;
    let mut params = Vec::new();
    for (k, v) in form_urlencoded::parse(uri.query().unwrap_or("").as_bytes()) {
        if k == "query" {
            query = Some(v.into_owned());
        } else {
            params.push((k.into_owned(), v.into_owned()));
        }
    }
    if method == Method::POST {
        let content_type = headers
            .get(header::CONTENT_TYPE)
            .and_then(|v| v.to_str().ok())
            .unwrap_or(SPARQL_QUERY);
        let text = std::str::from_utf8(body).map_err(|_| HttpError::bad_request("BadRequest", "body is not UTF-8"))?;
        if content_type.starts_with(FORM) {
            if let Some((_, q)) = form_urlencoded::parse(text.as_bytes()).find(|(k, _)| k == "query") {
                query = Some(q.into_owned());
            }
        } else if content_type.starts_with(SPARQL_QUERY) {
            query = Some(text.to_owned());
        } else {
            return Err(HttpError::new(
                StatusCode::UNSUPPORTED_MEDIA_TYPE,
                "UnsupportedMediaType",
                format!("POST body must be {SPARQL_QUERY} or {FORM}"),
            ));
        }
    } else if method != Method::GET {
        return Err(HttpError::new(
            StatusCode::METHOD_NOT_ALLOWED,
            "MethodNotAllowed",
            method.to_string(),
        ));
    }
    let query = query.ok_or_else(|| HttpError::bad_request("MissingQuery", "no 'query' parameter or body"))?;
    Ok(SparqlRequest { query, params })
}

/// Serializes an evaluation result: results JSON for SELECT/ASK and
/// canonical N-Triples for CONSTRUCT. Those are the only two formats, so
/// the Accept header never changes the outcome.
pub fn output_response(output: &QueryOutput) -> Response {
    let (content_type, body) = match output {
        QueryOutput::Solutions(s) => (SPARQL_RESULTS_JSON, serialize_select_results(s)),
        QueryOutput::Boolean(b) => (SPARQL_RESULTS_JSON, serialize_boolean_result(*b)),
        QueryOutput::Graph(g) => (N_TRIPLES, serialize_ntriples(g)),
    };
    let mut response = (StatusCode::OK, body).into_response();
    response
        .headers_mut()
        .insert(header::CONTENT_TYPE, HeaderValue::from_static(content_type));
    response
}
