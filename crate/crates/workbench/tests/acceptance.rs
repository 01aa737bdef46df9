//! End-to-end acceptance suite. Runs without the libtest harness so that
//! every criterion prints exactly one PASS/FAIL line, in order, whatever
//! the capture settings.

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use fedql_core::eval::{eval_select, NoServices, QueryOutput};
use fedql_core::lift::{lift_json, LiftConfig};
use fedql_core::rdf::{isomorphic, parse_ntriples, serialize_ntriples};
use fedql_core::sparql::{
    parse_query, parse_results, parse_select_results, serialize_boolean_result, serialize_query,
    serialize_select_results, Element, GroupPattern, QueryResults,
};
use fedql_core::testkit::{
    brute_select, lift_count, ntriples_fixture, random_eval_query, random_graph, random_json, random_query,
    random_solutions, same_multiset,
};
use fedql_workbench::bench::{bench_run, response_rows, BenchReport, DEFAULT_REPETITIONS, LATENCY_TARGET};
use fedql_workbench::deploy::{bundled_mappings, standard_services, DeployConfig, Deployment};
use fedql_workbench::fixtures::{
    gen_fixtures, DEFAULT_GENES, DEFAULT_INTERACTIONS, DEFAULT_SEED, RICE, TARGET_PROTEIN,
};
use fedql_workbench::mock_api::NETWORK_ROUTE;
use fedql_workbench::oracle::{expected, rows_of, triple_rows, Expected, Row};
use fedql_workbench::queries::{render, QUERIES};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tokio::runtime::Runtime;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn(&Env) -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

struct Env {
    rt: Runtime,
    dir: tempfile::TempDir,
    expected: BTreeMap<String, Expected>,
    http: reqwest::Client,
}

impl Env {
    fn new() -> Self {
        let fixtures = gen_fixtures(DEFAULT_SEED, DEFAULT_GENES, DEFAULT_INTERACTIONS).expect("default fixtures");
        let dir = tempfile::tempdir().expect("temporary directory");
        fixtures.write(dir.path()).expect("writing fixtures");
        Env {
            rt: Runtime::new().expect("tokio runtime"),
            expected: expected(&fixtures),
            dir,
            http: reqwest::Client::builder().no_proxy().build().expect("http client"),
        }
    }

    fn fixture_dir(&self) -> &Path {
        self.dir.path()
    }

    fn standard(&self) -> DeployConfig {
        DeployConfig::standard(self.fixture_dir())
    }

    fn start(&self, cfg: DeployConfig) -> Result<Deployment, String> {
        self.rt.block_on(Deployment::start(cfg)).map_err(|e| e.to_string())
    }

    /// (status, body, elapsed) of one SPARQL POST.
    fn post(&self, url: &str, query: &str) -> Result<(u16, String, String, Duration), String> {
        self.rt.block_on(async {
            let started = Instant::now();
            let r = self
                .http
                .post(url)
                .header("content-type", "application/sparql-query")
                .body(query.to_owned())
                .send()
                .await
                .map_err(|e| format!("{url}: {e}"))?;
            let status = r.status().as_u16();
            let ct = r
                .headers()
                .get("content-type")
                .and_then(|v| v.to_str().ok())
                .unwrap_or("")
                .to_owned();
            let body = r.text().await.map_err(|e| e.to_string())?;
            Ok((status, ct, body, started.elapsed()))
        })
    }

    fn rows(&self, url: &str, query: &str) -> Result<Vec<Row>, String> {
        let (status, ct, body, _) = self.post(url, query)?;
        ensure!(status == 200, "HTTP {status}: {body}");
        response_rows(&ct, &body)
    }

    fn rendered(&self, d: &Deployment) -> Result<Vec<(String, String)>, String> {
        let endpoints = d.endpoints();
        QUERIES
            .iter()
            .map(|q| render(q.template, &endpoints).map(|t| (q.name.to_owned(), t)))
            .collect()
    }

    fn bench(&self, d: &Deployment, repetitions: usize) -> Result<BenchReport, String> {
        let queries = self.rendered(d)?;
        self.rt
            .block_on(bench_run(&d.federator_url(), &queries, &self.expected, repetitions))
            .map_err(|e| e.to_string())
    }

    fn shutdown(&self, d: Deployment) {
        self.rt.block_on(d.shutdown());
    }
}

fn output_rows(out: &QueryOutput) -> Vec<Row> {
    match out {
        QueryOutput::Solutions(s) => rows_of(s),
        QueryOutput::Graph(g) => triple_rows(g),
        QueryOutput::Boolean(b) => {
            if *b {
                vec![Row::new()]
            } else {
                Vec::new()
            }
        }
    }
}

fn has(group: &GroupPattern, pred: &dyn Fn(&Element) -> bool) -> bool {
    group.elements.iter().any(|e| {
        pred(e)
            || match e {
                Element::Optional(g) => has(g, pred),
                Element::Service(s) => has(&s.body, pred),
                _ => false,
            }
    })
}

fn c1_oracle_equivalence(_: &Env) -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let cases = 250;
    let (mut nonempty, mut optional, mut filter, mut values) = (0, 0, 0, 0);
    for case in 0..cases {
        let g = random_graph(&mut rng, 60);
        let q = random_eval_query(&mut rng);
        let got = eval_select(&g, &q, &NoServices).map_err(|e| format!("case {case}: {e}"))?;
        let want = brute_select(&g, &q);
        ensure!(
            same_multiset(&got, &want),
            "case {case}: engine {} rows, oracle {} rows\n{}",
            got.len(),
            want.len(),
            serialize_query(&q)
        );
        nonempty += usize::from(!want.is_empty());
        optional += usize::from(has(&q.pattern, &|e| matches!(e, Element::Optional(_))));
        filter += usize::from(has(&q.pattern, &|e| matches!(e, Element::Filter(_))));
        values += usize::from(has(&q.pattern, &|e| matches!(e, Element::Values(_))));
    }
    let elapsed = started.elapsed();
    ensure!(elapsed < Duration::from_secs(60), "took {elapsed:.1?}");
    Ok(format!(
        "{cases}/{cases} cases agree ({nonempty} non-empty; {optional} OPTIONAL, {filter} FILTER, {values} VALUES) in {elapsed:.2?}"
    ))
}

fn c2_centralized_equivalence(env: &Env) -> Outcome {
    let mut per_chunk: Vec<BTreeMap<String, Vec<Row>>> = Vec::new();
    for chunk in [1, 7, 50] {
        let mut cfg = env.standard();
        cfg.federation.chunk_size = chunk;
        ensure!(cfg.services.len() == 2 && cfg.native.len() == 1, "unexpected topology");
        let d = env.start(cfg)?;
        let mut results = BTreeMap::new();
        let check = (|| {
            for (name, text) in env.rendered(&d)? {
                let federated = env
                    .rows(&d.federator_url(), &text)
                    .map_err(|e| format!("{name} chunk {chunk}: {e}"))?;
                let central = env
                    .rt
                    .block_on(d.centralized(&text))
                    .map_err(|e| format!("{name}: {e}"))?;
                let central = output_rows(&central);
                ensure!(
                    federated == central,
                    "{name} chunk {chunk}: federated {} rows, centralized {} rows",
                    federated.len(),
                    central.len()
                );
                results.insert(name, federated);
            }
            Ok(())
        })();
        env.shutdown(d);
        check?;
        per_chunk.push(results);
    }
    ensure!(
        per_chunk.windows(2).all(|w| w[0] == w[1]),
        "results differ across chunk sizes"
    );
    let counts: Vec<String> = per_chunk[0].iter().map(|(n, r)| format!("{n}={}", r.len())).collect();
    Ok(format!(
        "8 queries identical at chunk sizes 1/7/50 ({})",
        counts.join(" ")
    ))
}

fn c3_q8_and_q2(env: &Env) -> Outcome {
    let d = env.start(env.standard())?;
    let report = env.bench(&d, DEFAULT_REPETITIONS);
    env.shutdown(d);
    let report = report?;
    let row = |n: &str| report.rows.iter().find(|r| r.query == n).ok_or(format!("{n} missing"));
    let (q8, q2) = (row("Q8")?, row("Q2")?);
    for (r, want) in [(q8, 10), (q2, 0)] {
        ensure!(
            r.repetitions == DEFAULT_REPETITIONS,
            "{} ran {} times",
            r.query,
            r.repetitions
        );
        ensure!(
            r.count == want && r.stable && r.verified,
            "{}: {} rows (stable {}, verified {})",
            r.query,
            r.count,
            r.stable,
            r.verified
        );
    }
    Ok(format!(
        "Q8 = {} rows and Q2 = {} rows on all {DEFAULT_REPETITIONS} runs",
        q8.count, q2.count
    ))
}

fn c4_bench_protocol(env: &Env) -> Outcome {
    // Cache-off accounting in-process: every run costs the same upstream hits.
    let d = env.start(env.standard().with_cache_ttl(0))?;
    let api = d.mock_api().expect("standard topology has a mock API").clone();
    let hits = (|| {
        env.bench(&d, 1)?;
        let once = api.hits(NETWORK_ROUTE);
        let report = env.bench(&d, DEFAULT_REPETITIONS)?;
        Ok::<_, String>((once, api.hits(NETWORK_ROUTE), report))
    })();
    env.shutdown(d);
    let (once, total, report) = hits?;
    ensure!(once > 0, "no upstream calls");
    ensure!(
        total == once * (1 + DEFAULT_REPETITIONS as u64),
        "{total} upstream hits after 1 + {DEFAULT_REPETITIONS} runs of {once}: responses were cached"
    );
    ensure!(
        report.mismatches().is_empty(),
        "mismatches in-process:\n{}",
        report.to_table()
    );

    // The CLI itself.
    let work = tempfile::tempdir().map_err(|e| e.to_string())?;
    let deploy_path = work.path().join("deploy.json");
    let cfg = env.standard().with_cache_ttl(60);
    std::fs::write(&deploy_path, serde_json::to_string_pretty(&cfg).unwrap()).map_err(|e| e.to_string())?;
    let bench_path = work.path().join("bench.json");
    std::fs::write(&bench_path, r#"{"deploy": "deploy.json"}"#).map_err(|e| e.to_string())?;
    let tsv = work.path().join("report.tsv");
    let out = Command::new(env!("CARGO_BIN_EXE_fedql"))
        .args(["bench", "--config"])
        .arg(&bench_path)
        .args(["--repeat", "10", "--tsv"])
        .arg(&tsv)
        .env("RUST_LOG", "warn")
        .env("NO_PROXY", "*")
        .output()
        .map_err(|e| e.to_string())?;
    let stdout = String::from_utf8_lossy(&out.stdout);
    ensure!(
        out.status.code() == Some(0),
        "exit {:?}\n{stdout}{}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    let header = stdout.lines().next().unwrap_or("");
    let cols: Vec<&str> = header.split_whitespace().collect();
    ensure!(
        cols.starts_with(&["Query", "Mean(s)", "Std", "Results"]),
        "table header {header:?}"
    );
    let text = std::fs::read_to_string(&tsv).map_err(|e| e.to_string())?;
    let mut lines = text.lines();
    ensure!(
        lines
            .next()
            .is_some_and(|h| h.starts_with("Query\tMean(s)\tStd\tResults")),
        "TSV header"
    );
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split('\t').collect()).collect();
    ensure!(rows.len() == 8, "{} TSV rows", rows.len());
    for r in &rows {
        ensure!(r[4] == "10", "{} ran {} times", r[0], r[4]);
        ensure!(
            !r[5].contains("MISMATCH") && !r[5].contains("nondeterministic"),
            "{} flagged {}",
            r[0],
            r[5]
        );
        let mean: f64 = r[1].parse().map_err(|_| format!("mean {:?}", r[1]))?;
        let std: f64 = r[2].parse().map_err(|_| format!("std {:?}", r[2]))?;
        ensure!(mean >= 0.0 && std >= 0.0, "{}: mean {mean} std {std}", r[0]);
        ensure!(
            r[3] == env.expected[r[0]].count.to_string(),
            "{}: {} results",
            r[0],
            r[3]
        );
    }
    Ok(format!(
        "fedql bench: 8 queries x 10 runs, counts stable and verified; cache off costs {once} upstream hits per run"
    ))
}

fn c5_latency(env: &Env) -> Outcome {
    let d = env.start(env.standard())?;
    let report = env.bench(&d, DEFAULT_REPETITIONS);
    env.shutdown(d);
    let report = report?;
    for r in &report.rows {
        ensure!(
            r.min_s <= r.mean_s && r.mean_s <= r.max_s,
            "{}: mean outside [min, max]",
            r.query
        );
        ensure!(
            r.flags().contains(&"slow") == (r.mean_s >= LATENCY_TARGET.as_secs_f64()),
            "{}: slow flag inconsistent",
            r.query
        );
    }
    let worst = report
        .rows
        .iter()
        .max_by(|a, b| a.mean_s.total_cmp(&b.mean_s))
        .ok_or("empty report")?;
    let slow: Vec<&str> = report
        .rows
        .iter()
        .filter(|r| r.slow())
        .map(|r| r.query.as_str())
        .collect();
    Ok(if slow.is_empty() {
        format!(
            "all means under {LATENCY_TARGET:?}; slowest {} at {:.4} s",
            worst.query, worst.mean_s
        )
    } else {
        format!("flagged (not failed): {} over {LATENCY_TARGET:?}", slow.join(", "))
    })
}

fn c6_cache(env: &Env) -> Outcome {
    let query = "CONSTRUCT { ?s ?p ?o } WHERE { ?s ?p ?o }";
    let mut results = Vec::new();
    for ttl in [60, 0] {
        let d = env.start(env.standard().with_cache_ttl(ttl))?;
        let url = format!(
            "{}?identifiers={TARGET_PROTEIN}&species={RICE}",
            d.endpoints()["string-functional"]
        );
        let pair = (|| {
            let a = env.post(&url, query)?;
            let b = env.post(&url, query)?;
            ensure!(a.0 == 200 && b.0 == 200, "HTTP {} / {}", a.0, b.0);
            Ok((a.2, b.2))
        })();
        let hits = d.mock_api().map(|m| m.hits(NETWORK_ROUTE));
        env.shutdown(d);
        let (a, b) = pair?;
        ensure!(!a.is_empty() && a == b, "ttl {ttl}: responses differ");
        results.push(hits);
    }
    ensure!(results == [Some(1), Some(2)], "upstream hits {results:?}, want [1, 2]");
    Ok("ttl 60 s: identical bodies, 1 upstream hit; cache disabled: 2 hits".into())
}

fn c7_round_trips(_: &Env) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let g = ntriples_fixture(&mut rng, 50);
    let back = parse_ntriples(&serialize_ntriples(&g)).map_err(|e| e.to_string())?;
    ensure!(
        g.len() == 50 && isomorphic(&g, &back),
        "N-Triples fixture did not round-trip"
    );
    for i in 0..100 {
        let q = random_query(&mut rng);
        let text = serialize_query(&q);
        let parsed = parse_query(&text).map_err(|e| format!("query {i}: {e}\n{text}"))?;
        ensure!(parsed == q, "query {i} changed:\n{text}");
    }
    for i in 0..100 {
        let s = random_solutions(&mut rng);
        let parsed = parse_select_results(&serialize_select_results(&s)).map_err(|e| format!("results {i}: {e}"))?;
        ensure!(parsed == s, "results {i} changed");
    }
    for b in [true, false] {
        ensure!(
            parse_results(&serialize_boolean_result(b)).ok() == Some(QueryResults::Boolean(b)),
            "boolean {b} changed"
        );
    }
    Ok("50-triple N-Triples, 100 query ASTs, 100 result sequences and both booleans round-trip".into())
}

fn c8_lifting_law(_: &Env) -> Outcome {
    let cfg =
        LiftConfig::new("http://example.org/json/doc#", "http://example.org/json/doc").map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(88);
    let mut triples = 0;
    for i in 0..50 {
        let doc = random_json(&mut rng, 4);
        let a = lift_json(&doc, &cfg);
        ensure!(
            a.len() == lift_count(&doc),
            "document {i}: {} triples, rules give {}\n{doc}",
            a.len(),
            lift_count(&doc)
        );
        let b = lift_json(&doc, &cfg);
        ensure!(
            serialize_ntriples(&a) == serialize_ntriples(&b),
            "document {i}: lifting is not deterministic"
        );
        triples += a.len();
    }
    Ok(format!(
        "50 documents ({triples} triples) match the rule count and lift identically twice"
    ))
}

const OMA_PART: &str = r#"PREFIX orth: <http://example.org/orth#>
PREFIX sdb: <http://example.org/string#>
SELECT * WHERE {
  SERVICE <{{oma}}> {
    ?gene orth:label "OMT2" ; orth:hasOrtholog ?ortholog .
    ?ortholog orth:organism <http://example.org/taxonomy/4530> ; orth:hasProteinId ?protein .
  }
"#;

const STRING_PART: &str = r#"  SERVICE <{{string-functional}}?identifiers=OS01G0700900&species=4530> {
    ?e sdb:participantA ?a ; sdb:participantB ?b ; sdb:score ?score .
    ?a sdb:identifier ?protein .
    ?b sdb:identifier ?partner .
  }
"#;

fn failure_queries(d: &Deployment) -> Result<(String, String, String), String> {
    let e = d.endpoints();
    let seed = render(&format!("{OMA_PART}}}"), &e)?;
    let strict = render(&format!("{OMA_PART}{STRING_PART}}}"), &e)?;
    let silent = render(
        &format!("{OMA_PART}{}}}", STRING_PART.replacen("SERVICE", "SERVICE SILENT", 1)),
        &e,
    )?;
    Ok((seed, strict, silent))
}

fn c9_failures(env: &Env) -> Outcome {
    // Stopped upstream.
    let mut d = env.start(env.standard())?;
    let stopped = (|| {
        let (seed, strict, silent) = failure_queries(&d)?;
        let url = d.federator_url();
        let incoming = env.rows(&url, &seed)?;
        ensure!(!incoming.is_empty(), "seed pattern is empty");
        ensure!(env.rows(&url, &strict)?.len() == 10, "live join is not 10 rows");
        env.rt.block_on(d.stop_api());
        let (status, _, body, _) = env.post(&url, &strict)?;
        ensure!(
            status == 502 && body.contains("string-functional"),
            "non-SILENT: HTTP {status}: {body}"
        );
        ensure!(
            env.rows(&url, &silent)? == incoming,
            "SILENT changed the incoming solutions"
        );
        Ok(incoming.len())
    })();
    env.rt.block_on(d.shutdown());
    let incoming = stopped?;

    // Upstream slower than the micro-service timeout.
    let timeout_ms = 500;
    let limit = Duration::from_millis(timeout_ms + 500);
    let mut cfg = env.standard();
    cfg.services = standard_services(&bundled_mappings(), 0, timeout_ms);
    let d = env.start(cfg)?;
    let slow_service = (|| {
        d.mock_api()
            .expect("mock API")
            .set_delay(Duration::from_millis(3 * timeout_ms));
        let (_, strict, _) = failure_queries(&d)?;
        let direct = format!(
            "{}?identifiers={TARGET_PROTEIN}&species={RICE}",
            d.endpoints()["string-functional"]
        );
        let (status, _, body, took) = env.post(&direct, "ASK { ?s ?p ?o }")?;
        ensure!(
            status == 504 && body.contains("UpstreamTimeout"),
            "micro-service: HTTP {status}: {body}"
        );
        ensure!(took < limit, "micro-service timeout took {took:?}");
        let (status, _, body, took) = env.post(&d.federator_url(), &strict)?;
        ensure!(
            status == 502,
            "federator over a timed-out service: HTTP {status}: {body}"
        );
        ensure!(took < limit, "federated timeout took {took:?}");
        Ok(took)
    })();
    env.shutdown(d);
    slow_service?;

    // Remote endpoint slower than the federator's own timeout.
    let mut cfg = env.standard();
    cfg.federation.timeout_ms = timeout_ms;
    let d = env.start(cfg)?;
    let slow_remote = (|| {
        d.mock_api()
            .expect("mock API")
            .set_delay(Duration::from_millis(3 * timeout_ms));
        let (_, strict, _) = failure_queries(&d)?;
        let (status, _, body, took) = env.post(&d.federator_url(), &strict)?;
        ensure!(
            status == 502 && body.contains("timed out"),
            "federator timeout: HTTP {status}: {body}"
        );
        ensure!(took < limit, "federator timeout took {took:?}");
        Ok(took)
    })();
    env.shutdown(d);
    let took = slow_remote?;
    Ok(format!(
        "stopped upstream: 502 / SILENT returns the {incoming} incoming row(s) unchanged; {timeout_ms} ms timeouts fire (federator in {took:.0?})"
    ))
}

fn main() -> ExitCode {
    let env = Env::new();
    let criteria: [Criterion; 9] = [
        ("evaluator oracle equivalence", c1_oracle_equivalence),
        ("centralized equivalence", c2_centralized_equivalence),
        ("Q8 / Q2 reproduction", c3_q8_and_q2),
        ("benchmark protocol", c4_bench_protocol),
        ("latency soft target", c5_latency),
        ("cache correctness", c6_cache),
        ("round-trip suites", c7_round_trips),
        ("lifting law", c8_lifting_law),
        ("failure semantics", c9_failures),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(|| check(&env))).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match outcome {
            Ok(detail) => println!("criterion {} ({name}): PASS - {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {} ({name}): FAIL - {why}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
