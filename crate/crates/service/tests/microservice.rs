use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use axum::extract::{RawQuery, State};
use axum::http::StatusCode;
use axum::routing::get;
use axum::Router;
use fedql_core::lift::MappingSpec;
use fedql_core::rdf::{isomorphic, parse_ntriples, serialize_ntriples};
use fedql_core::sparql::{parse_results, parse_select_results, QueryResults};
use fedql_service::config::{load_services, ServiceConfig};
use fedql_service::{spawn_local, MicroService, RunningServer};
use serde_json::{json, Value};

const MAPPING: &str = r#"
PREFIX b: <http://api/#>
PREFIX s: <http://s/>
CONSTRUCT { ?na s:id ?x . ?nb s:id ?y . ?na s:interactsWith ?nb . ?na s:taxon ?sp }
WHERE {
  ?doc b:edges ?e . ?e b:a ?x . ?e b:b ?y .
  ?doc b:nodes ?na . ?na b:id ?x . ?doc b:nodes ?nb . ?nb b:id ?y .
}"#;

const SIDECAR: &str = r#"{"base": "http://api/#", "root": "http://api/doc", "param_vars": {"species": "sp"}}"#;

const PAIRS: &str = "PREFIX s: <http://s/> SELECT ?a ?b WHERE { ?na s:interactsWith ?nb . ?na s:id ?a . ?nb s:id ?b }";

#[derive(Default)]
struct Upstream {
    hits: AtomicUsize,
    uris: Mutex<Vec<String>>,
}

fn network_doc(identifiers: &str) -> Value {
    let partners: Vec<String> = (1..=3).map(|i| format!("{identifiers}.P{i}")).collect();
    let mut nodes = vec![json!({"id": identifiers})];
    nodes.extend(partners.iter().map(|p| json!({"id": p})));
    let edges: Vec<Value> = partners
        .iter()
        .map(|p| json!({"a": identifiers, "b": p, "score": 0.9}))
        .collect();
    json!({"nodes": nodes, "edges": edges})
}

async fn upstream() -> (RunningServer, Arc<Upstream>) {
    let state = Arc::new(Upstream::default());
    let router = Router::new()
        .route(
            "/api/network",
            get(|State(s): State<Arc<Upstream>>, RawQuery(q): RawQuery| async move {
                s.hits.fetch_add(1, Ordering::SeqCst);
                let q = q.unwrap_or_default();
                s.uris.lock().unwrap().push(q.clone());
                let ids = form_pairs(&q).remove("identifiers").unwrap_or_default();
                network_doc(&ids).to_string()
            }),
        )
        .route(
            "/api/fail",
            get(|| async { (StatusCode::INTERNAL_SERVER_ERROR, "boom") }),
        )
        .route("/api/garbage", get(|| async { "{not json" }))
        .route(
            "/api/slow",
            get(|| async {
                tokio::time::sleep(Duration::from_secs(3)).await;
                "{}"
            }),
        )
        .with_state(state.clone());
    (spawn_local(router).await.unwrap(), state)
}

fn form_pairs(q: &str) -> BTreeMap<String, String> {
    q.split('&')
        .filter_map(|kv| kv.split_once('='))
        .map(|(k, v)| (k.to_owned(), v.replace("%20", " ")))
        .collect()
}

fn config(base: &str, path: &str, ttl: u64) -> ServiceConfig {
    serde_json::from_value(json!({
        "name": "network",
        "route": "network",
        "api_url_template": format!("{base}{path}?identifiers={{identifiers}}&species={{species}}"),
        "params": [{"name": "identifiers", "required": true}, {"name": "species", "default": "4565"}],
        "mapping": "unused",
        "timeout_ms": 400,
        "cache_ttl_s": ttl
    }))
    .unwrap()
}

async fn deploy(upstream: &RunningServer, path: &str, ttl: u64) -> (RunningServer, Arc<MicroService>) {
    let spec = MappingSpec::from_parts(MAPPING, SIDECAR).unwrap();
    let svc = Arc::new(MicroService::new(config(&upstream.url(""), path, ttl), spec).unwrap());
    (spawn_local(svc.clone().router()).await.unwrap(), svc)
}

fn client() -> reqwest::Client {
    reqwest::Client::builder().no_proxy().build().unwrap()
}

async fn get_query(server: &RunningServer, query: &str, args: &str) -> (StatusCode, String) {
    let url = format!(
        "{}?query={}{args}",
        server.url("/srv/network/sparql"),
        percent_encoding::utf8_percent_encode(query, percent_encoding::NON_ALPHANUMERIC)
    );
    let r = client().get(url).send().await.unwrap();
    (
        StatusCode::from_u16(r.status().as_u16()).unwrap(),
        r.text().await.unwrap(),
    )
}

#[tokio::test(flavor = "multi_thread")]
async fn select_over_the_fragment() {
    let (up, state) = upstream().await;
    let (srv, _) = deploy(&up, "/api/network", 0).await;
    let (status, body) = get_query(&srv, PAIRS, "&identifiers=OS01G0700900&species=4530").await;
    assert_eq!(status, StatusCode::OK, "{body}");
    let rows = parse_select_results(&body).unwrap();
    assert_eq!(rows.len(), 3);
    assert_eq!(
        state.uris.lock().unwrap().as_slice(),
        ["identifiers=OS01G0700900&species=4530".to_owned()]
    );
}

#[tokio::test(flavor = "multi_thread")]
async fn post_body_and_ask() {
    let (up, _) = upstream().await;
    let (srv, _) = deploy(&up, "/api/network", 0).await;
    let r = client()
        .post(srv.url("/srv/network/sparql?identifiers=X"))
        .header("content-type", "application/sparql-query")
        .body("PREFIX s: <http://s/> ASK { ?a s:interactsWith ?b }")
        .send()
        .await
        .unwrap();
    assert_eq!(r.status().as_u16(), 200);
    assert_eq!(
        parse_results(&r.text().await.unwrap()).unwrap(),
        QueryResults::Boolean(true)
    );
}

#[test]
fn argument_extraction() {
    let spec = MappingSpec::from_parts(MAPPING, SIDECAR).unwrap();
    let svc = MicroService::new(config("http://h", "/api", 0), spec).unwrap();
    let p = |pairs: &[(&str, &str)]| {
        pairs
            .iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect::<Vec<_>>()
    };
    let args = svc
        .extract_args(&p(&[("identifiers", "OS01G0700900"), ("species", "4530")]))
        .unwrap();
    assert_eq!(args["identifiers"], "OS01G0700900");
    assert_eq!(args["species"], "4530");
    let args = svc.extract_args(&p(&[("identifiers", "A")])).unwrap();
    assert_eq!(args["species"], "4565");
    let err = svc.extract_args(&[]).unwrap_err();
    assert_eq!(
        (err.status, err.error.as_str()),
        (StatusCode::BAD_REQUEST, "MissingParam")
    );
    assert!(err.detail.contains("identifiers"));
}

#[tokio::test(flavor = "multi_thread")]
async fn missing_parameter_is_400_naming_it() {
    let (up, state) = upstream().await;
    let (srv, _) = deploy(&up, "/api/network", 0).await;
    let (status, body) = get_query(&srv, PAIRS, "").await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let body: Value = serde_json::from_str(&body).unwrap();
    assert_eq!(body["error"], "MissingParam");
    assert!(body["detail"].as_str().unwrap().contains("identifiers"));
    assert_eq!(state.hits.load(Ordering::SeqCst), 0);
}

#[tokio::test(flavor = "multi_thread")]
async fn rejects_service_and_bad_syntax() {
    let (up, _) = upstream().await;
    let (srv, _) = deploy(&up, "/api/network", 0).await;
    let (status, body) = get_query(
        &srv,
        "SELECT * WHERE { SERVICE <http://x/> { ?s ?p ?o } }",
        "&identifiers=A",
    )
    .await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert!(body.contains("ServiceInLeaf"));
    let (status, body) = get_query(&srv, "SELECT * WHERE {", "&identifiers=A").await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert!(body.contains("QuerySyntax"));
}

#[tokio::test(flavor = "multi_thread")]
async fn construct_echo_returns_the_fragment() {
    let (up, _) = upstream().await;
    let (srv, svc) = deploy(&up, "/api/network", 0).await;
    let echo = "PREFIX s: <http://s/> CONSTRUCT { ?s ?p ?o } WHERE { ?s ?p ?o }";
    let (status, first) = get_query(&srv, echo, "&identifiers=A&species=4530").await;
    assert_eq!(status, StatusCode::OK);
    let (_, second) = get_query(&srv, echo, "&identifiers=A&species=4530").await;
    assert_eq!(first, second);
    let mut args = BTreeMap::new();
    args.insert("identifiers".to_owned(), "A".to_owned());
    args.insert("species".to_owned(), "4530".to_owned());
    let fragment = svc.fragment(&args).await.unwrap();
    let echoed = parse_ntriples(&first).unwrap();
    assert!(isomorphic(&echoed, &fragment));
    assert_eq!(first, serialize_ntriples(&fragment));
    // 3 edges, 4 identified nodes, and the source node's taxon.
    assert_eq!(echoed.len(), 3 + 4 + 1);
}

#[tokio::test(flavor = "multi_thread")]
async fn cache_hits_and_bypass() {
    let (up, state) = upstream().await;
    let (srv, svc) = deploy(&up, "/api/network", 60).await;
    let (_, a) = get_query(&srv, PAIRS, "&identifiers=A").await;
    let (_, b) = get_query(&srv, PAIRS, "&identifiers=A").await;
    assert_eq!(a, b);
    assert_eq!((state.hits.load(Ordering::SeqCst), svc.api_hits()), (1, 1));
    // A different argument set is a different key.
    get_query(&srv, PAIRS, "&identifiers=B").await;
    assert_eq!(svc.api_hits(), 2);

    let (up, state) = upstream().await;
    let (srv, svc) = deploy(&up, "/api/network", 0).await;
    let (_, c) = get_query(&srv, PAIRS, "&identifiers=A").await;
    let (_, d) = get_query(&srv, PAIRS, "&identifiers=A").await;
    assert_eq!(c, d);
    assert_eq!(a, c);
    assert_eq!((state.hits.load(Ordering::SeqCst), svc.api_hits()), (2, 2));
}

#[tokio::test(flavor = "multi_thread")]
async fn upstream_failures() {
    let (up, _) = upstream().await;
    let (srv, svc) = deploy(&up, "/api/fail", 0).await;
    let (status, body) = get_query(&srv, PAIRS, "&identifiers=A").await;
    assert_eq!(status, StatusCode::BAD_GATEWAY);
    assert!(body.contains("UpstreamError") && body.contains("500"), "{body}");
    assert_eq!(svc.api_hits(), 1);

    let (srv, _) = deploy(&up, "/api/garbage", 0).await;
    let (status, body) = get_query(&srv, PAIRS, "&identifiers=A").await;
    assert_eq!(status, StatusCode::BAD_GATEWAY);
    assert!(body.contains("InvalidJson"));

    let (srv, _) = deploy(&up, "/api/slow", 0).await;
    let started = Instant::now();
    let (status, body) = get_query(&srv, PAIRS, "&identifiers=A").await;
    let elapsed = started.elapsed();
    assert_eq!(status, StatusCode::GATEWAY_TIMEOUT);
    assert!(body.contains("UpstreamTimeout"));
    assert!(
        elapsed >= Duration::from_millis(400) && elapsed < Duration::from_millis(900),
        "{elapsed:?}"
    );
}

#[tokio::test(flavor = "multi_thread")]
async fn unreachable_upstream_is_502() {
    let (up, _) = upstream().await;
    let (srv, svc) = deploy(&up, "/api/network", 0).await;
    up.shutdown().await;
    let (status, _) = get_query(&srv, PAIRS, "&identifiers=A").await;
    assert_eq!(status, StatusCode::BAD_GATEWAY);
    assert_eq!(svc.api_hits(), 1);
}

#[test]
fn deployment_file_resolves_mapping_dirs() {
    let dir = std::env::temp_dir().join(format!("fedql-deploy-{}", std::process::id()));
    std::fs::create_dir_all(dir.join("maps/net")).unwrap();
    std::fs::write(dir.join("maps/net/mapping.rq"), MAPPING).unwrap();
    std::fs::write(dir.join("maps/net/mapping.json"), SIDECAR).unwrap();
    let mut cfg = serde_json::to_value(config("http://h", "/api", 0)).unwrap();
    cfg["mapping"] = json!("maps/net");
    let mut twin = cfg.clone();
    std::fs::write(dir.join("deploy.json"), json!({"services": [cfg.clone()]}).to_string()).unwrap();
    let loaded = load_services(&dir.join("deploy.json")).unwrap();
    assert_eq!(loaded[0].mapping, dir.join("maps/net"));
    assert!(MicroService::load(loaded[0].clone()).is_ok());
    twin["name"] = json!("other");
    std::fs::write(dir.join("dup.json"), json!({"services": [cfg, twin]}).to_string()).unwrap();
    assert!(load_services(&dir.join("dup.json")).is_err());
    std::fs::remove_dir_all(&dir).unwrap();
}
