use std::process::Command;
use std::sync::Arc;

use fedql_core::rdf::{isomorphic, parse_ntriples};
use fedql_service::{spawn_local, NativeEndpoint};
use fedql_workbench::bench::{response_rows, timed_query, BenchConfig};
use fedql_workbench::deploy::{DeployConfig, Deployment};
use fedql_workbench::fixtures::{gen_fixtures, network_path, FixtureSet, RICE, TARGET_PROTEIN};
use fedql_workbench::mock_api::MockApi;
use fedql_workbench::oracle::expected;

fn fixtures() -> FixtureSet {
    gen_fixtures(42, 200, 500).unwrap()
}

fn client() -> reqwest::Client {
    reqwest::Client::builder().no_proxy().build().unwrap()
}

#[tokio::test(flavor = "multi_thread")]
async fn native_endpoint_over_the_ortholog_graph() {
    let f = fixtures();
    let graph = f.oma_graph();
    let ep = Arc::new(NativeEndpoint::new("oma", graph.clone()));
    let server = spawn_local(ep.router()).await.unwrap();
    let url = server.url("/oma/sparql");
    let c = client();

    let (_, ct, body) = timed_query(&c, &url, "SELECT ?s ?p ?o WHERE { ?s ?p ?o }")
        .await
        .unwrap();
    assert_eq!(response_rows(&ct, &body).unwrap().len(), graph.len());

    let lookup = "PREFIX orth: <http://example.org/orth#>\nSELECT ?ortholog WHERE { ?g orth:label \"OMT2\" ; orth:hasOrtholog ?ortholog }";
    let (_, ct, body) = timed_query(&c, &url, lookup).await.unwrap();
    assert_eq!(response_rows(&ct, &body).unwrap(), expected(&f)["Q7"].rows);

    let (_, ct, body) = timed_query(&c, &url, "CONSTRUCT { ?s ?p ?o } WHERE { ?s ?p ?o }")
        .await
        .unwrap();
    assert!(ct.starts_with("application/n-triples"));
    assert!(isomorphic(&parse_ntriples(&body).unwrap(), &graph));
    server.shutdown().await;
}

#[tokio::test(flavor = "multi_thread")]
async fn mock_api_serves_fixture_files() {
    let dir = tempfile::tempdir().unwrap();
    fixtures().write(dir.path()).unwrap();
    let api = Arc::new(MockApi::load(dir.path()).unwrap());
    assert!(api.documents() > 0);
    let server = spawn_local(api.clone().router()).await.unwrap();
    let c = client();
    let get = |q: String| {
        let c = c.clone();
        let url = server.url(&q);
        async move {
            let r = c.get(url).send().await.unwrap();
            (r.status().as_u16(), r.text().await.unwrap())
        }
    };

    let file = std::fs::read_to_string(dir.path().join(network_path("functional", RICE, TARGET_PROTEIN))).unwrap();
    let known = format!("/api/network?identifiers={TARGET_PROTEIN}&species={RICE}&network_type=functional");
    assert_eq!(get(known.clone()).await, (200, file));
    assert_eq!(
        get("/api/network?identifiers=NOPE&species=4530".into()).await,
        (200, "[]".into())
    );
    assert_eq!(get(known).await.0, 200);
    assert_eq!(api.hits("/api/network"), 3);
    let (status, hits) = get("/_hits".into()).await;
    assert_eq!(status, 200);
    assert_eq!(
        serde_json::from_str::<serde_json::Value>(&hits).unwrap()["/api/network"],
        3
    );
    assert_eq!(get("/api/other".into()).await.0, 404);
    server.shutdown().await;
}

#[tokio::test(flavor = "multi_thread")]
async fn in_memory_and_file_backed_mocks_agree() {
    let dir = tempfile::tempdir().unwrap();
    let f = fixtures();
    f.write(dir.path()).unwrap();
    assert_eq!(
        MockApi::from_fixtures(&f).documents(),
        MockApi::load(dir.path()).unwrap().documents()
    );
}

#[test]
fn shipped_configuration_files_load() {
    let root = std::path::Path::new(env!("CARGO_MANIFEST_DIR"));
    let deploy = DeployConfig::load(&root.join("deploy.json")).unwrap();
    assert_eq!(deploy.services.len(), 2);
    assert!(deploy.services.iter().all(|s| s.mapping.join("mapping.rq").is_file()));
    let bench = BenchConfig::load(&root.join("bench.json")).unwrap();
    assert_eq!(bench.queries.len(), 8);
    assert!(bench.queries.iter().all(|q| q.file.is_file()));
    DeployConfig::load(&bench.deploy).unwrap();
}

#[tokio::test(flavor = "multi_thread")]
async fn cli_query_and_exit_codes() {
    let exe = env!("CARGO_BIN_EXE_fedql");
    let dir = tempfile::tempdir().unwrap();
    fixtures().write(dir.path()).unwrap();
    let deployment = Deployment::start(DeployConfig::standard(dir.path())).await.unwrap();
    let q = dir.path().join("q.rq");
    std::fs::write(&q, "ASK { ?s ?p ?o }").unwrap();
    let oma = deployment.endpoints()["oma"].clone();

    let run = |args: Vec<String>| {
        tokio::task::spawn_blocking(move || Command::new(exe).args(args).env("NO_PROXY", "*").output().unwrap())
    };
    let ok = run(vec![
        "query".into(),
        "--endpoint".into(),
        oma,
        "--file".into(),
        q.display().to_string(),
    ])
    .await
    .unwrap();
    assert_eq!(ok.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&ok.stdout).contains("\"boolean\":true"));

    let dead = run(vec![
        "query".into(),
        "--endpoint".into(),
        "http://127.0.0.1:9/x/sparql".into(),
        "--file".into(),
        q.display().to_string(),
    ])
    .await
    .unwrap();
    assert_eq!(dead.status.code(), Some(3));

    let usage = run(vec!["query".into(), "--endpoint".into()]).await.unwrap();
    assert_eq!(usage.status.code(), Some(1));
    let help = run(vec!["--help".into()]).await.unwrap();
    assert_eq!(help.status.code(), Some(0));
    deployment.shutdown().await;
}
