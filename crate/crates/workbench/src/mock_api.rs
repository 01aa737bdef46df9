//! A stand-in for the protein-network Web API, serving fixture documents.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use axum::extract::{Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};

use crate::fixtures::{FixtureSet, NETWORK_TYPES};

pub const NETWORK_ROUTE: &str = "/api/network";

/// (network type, species, identifiers) → document bytes.
type Key = (String, String, String);

#[derive(Default)]
pub struct MockApi {
    docs: HashMap<Key, String>,
    hits: Mutex<BTreeMap<String, u64>>,
    delay_ms: AtomicU64,
}

impl MockApi {
    pub fn from_fixtures(f: &FixtureSet) -> Self {
        let mut docs = HashMap::new();
        for t in NETWORK_TYPES {
            for g in &f.genes {
                if let Some(doc) = f.network_doc(&g.protein, t) {
                    docs.insert(
                        (t.to_owned(), g.species.to_string(), g.protein.clone()),
                        format!("{doc}\n"),
                    );
                }
            }
        }
        MockApi {
            docs,
            ..MockApi::default()
        }
    }

    /// Loads `string/{type}/{species}_{identifiers}.json` files.
    pub fn load(fixture_dir: &Path) -> std::io::Result<Self> {
        let mut docs = HashMap::new();
        for t in NETWORK_TYPES {
            let dir = fixture_dir.join("string").join(t);
            if !dir.is_dir() {
                continue;
            }
            for entry in std::fs::read_dir(&dir)? {
                let path = entry?.path();
                let Some(stem) = path
                    .file_name()
                    .and_then(|n| n.to_str())
                    .and_then(|n| n.strip_suffix(".json"))
                else {
                    continue;
                };
                if let Some((species, ids)) = stem.split_once('_') {
                    docs.insert(
                        (t.to_owned(), species.to_owned(), ids.to_owned()),
                        std::fs::read_to_string(&path)?,
                    );
                }
            }
        }
        Ok(MockApi {
            docs,
            ..MockApi::default()
        })
    }

    pub fn documents(&self) -> usize {
        self.docs.len()
    }

    pub fn hits(&self, route: &str) -> u64 {
        self.hits.lock().expect("hits lock").get(route).copied().unwrap_or(0)
    }

    /// Delays every subsequent network response.
    pub fn set_delay(&self, delay: Duration) {
        self.delay_ms.store(delay.as_millis() as u64, Ordering::SeqCst);
    }

    fn count(&self, route: &str) {
        *self
            .hits
            .lock()
            .expect("hits lock")
            .entry(route.to_owned())
            .or_insert(0) += 1;
    }

    pub fn router(self: Arc<Self>) -> Router {
        Router::new()
            .route(NETWORK_ROUTE, get(network))
            .route("/_hits", get(hits))
            .route("/_delay", post(delay))
            .with_state(self)
    }
}

async fn network(State(api): State<Arc<MockApi>>, Query(params): Query<HashMap<String, String>>) -> Response {
    api.count(NETWORK_ROUTE);
    let delay = api.delay_ms.load(Ordering::SeqCst);
    if delay > 0 {
        tokio::time::sleep(Duration::from_millis(delay)).await;
    }
    let get = |k: &str| params.get(k).cloned().unwrap_or_default();
    let network_type = params
        .get("network_type")
        .cloned()
        .unwrap_or_else(|| "functional".to_owned());
    let body = api
        .docs
        .get(&(network_type, get("species"), get("identifiers")))
        .cloned()
        .unwrap_or_else(|| "[]".to_owned());
    ([(header::CONTENT_TYPE, "application/json")], body).into_response()
}

async fn hits(State(api): State<Arc<MockApi>>) -> Json<BTreeMap<String, u64>> {
    Json(api.hits.lock().expect("hits lock").clone())
}

async fn delay(State(api): State<Arc<MockApi>>, Query(params): Query<HashMap<String, String>>) -> StatusCode {
    match params.get("ms").and_then(|v| v.parse::<u64>().ok()) {
        Some(ms) => {
            api.set_delay(Duration::from_millis(ms));
            StatusCode::NO_CONTENT
        }
        None => StatusCode::BAD_REQUEST,
    }
}
