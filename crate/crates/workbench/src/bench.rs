//! Repeated end-to-end timing of the workbench queries against a federator.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use fedql_core::rdf::parse_ntriples;
use fedql_core::sparql::{parse_results, QueryResults};
use serde::{Deserialize, Serialize};

use crate::deploy::{DeployConfig, Deployment};
use crate::oracle::{rows_of, triple_rows, Expected, Row};
use crate::queries::{render, QUERIES};

/// Means above this are flagged; they do not fail the run.
pub const LATENCY_TARGET: Duration = Duration::from_secs(1);
pub const DEFAULT_REPETITIONS: usize = 10;

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("bench configuration: {0}")]
    Config(String),
    #[error("{query}: {reason}")]
    Transport { query: String, reason: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryFile {
    pub name: String,
    pub file: PathBuf,
}

/// A bench file. The deployment is started in-process so that the cache
/// setting is under the bench's control.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub deploy: PathBuf,
    /// Query templates; empty means the eight bundled queries.
    #[serde(default)]
    pub queries: Vec<QueryFile>,
    /// Defaults to `expected.json` in the deployment's fixture directory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected: Option<PathBuf>,
}

impl BenchConfig {
    pub fn load(path: &Path) -> Result<Self, BenchError> {
        let err = |e: &dyn std::fmt::Display| BenchError::Config(format!("{}: {e}", path.display()));
        let text = std::fs::read_to_string(path).map_err(|e| err(&e))?;
        let mut cfg: BenchConfig = serde_json::from_str(&text).map_err(|e| err(&e))?;
        let dir = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        };
        resolve(&mut cfg.deploy);
        cfg.queries.iter_mut().for_each(|q| resolve(&mut q.file));
        if let Some(e) = cfg.expected.as_mut() {
            resolve(e);
        }
        Ok(cfg)
    }
}

pub fn load_expected(path: &Path) -> Result<BTreeMap<String, Expected>, BenchError> {
    let err = |e: &dyn std::fmt::Display| BenchError::Config(format!("{}: {e}", path.display()));
    let text = std::fs::read_to_string(path).map_err(|e| err(&e))?;
    serde_json::from_str(&text).map_err(|e| err(&e))
}

/// Starts the configured deployment (cache TTL forced to 0 unless `cache`),
/// runs the bench and shuts everything down again.
pub async fn run_configured(cfg: &BenchConfig, repetitions: usize, cache: bool) -> Result<BenchReport, BenchError> {
    let mut deploy = DeployConfig::load(&cfg.deploy).map_err(|e| BenchError::Config(e.to_string()))?;
    if !cache {
        deploy = deploy.with_cache_ttl(0);
    }
    let expected_path = match (&cfg.expected, &deploy.mock_api) {
        (Some(p), _) => p.clone(),
        (None, Some(api)) => api.fixtures.join("expected.json"),
        (None, None) => return Err(BenchError::Config("no expected results configured".into())),
    };
    let expected = load_expected(&expected_path)?;
    let templates: Vec<(String, String)> = if cfg.queries.is_empty() {
        QUERIES
            .iter()
            .map(|q| (q.name.to_owned(), q.template.to_owned()))
            .collect()
    } else {
        cfg.queries
            .iter()
            .map(|q| {
                std::fs::read_to_string(&q.file)
                    .map(|t| (q.name.clone(), t))
                    .map_err(|e| BenchError::Config(format!("{}: {e}", q.file.display())))
            })
            .collect::<Result<_, _>>()?
    };
    let deployment = Deployment::start(deploy)
        .await
        .map_err(|e| BenchError::Config(e.to_string()))?;
    let endpoints = deployment.endpoints();
    let rendered = templates
        .into_iter()
        .map(|(name, t)| {
            render(&t, &endpoints)
                .map(|q| (name.clone(), q))
                .map_err(|e| BenchError::Config(format!("{name}: {e}")))
        })
        .collect::<Result<Vec<_>, _>>();
    let report = match rendered {
        Ok(queries) => bench_run(&deployment.federator_url(), &queries, &expected, repetitions).await,
        Err(e) => Err(e),
    };
    deployment.shutdown().await;
    report
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub query: String,
    pub mean_s: f64,
    pub std_s: f64,
    pub min_s: f64,
    pub max_s: f64,
    /// Result count of the first run.
    pub count: usize,
    pub repetitions: usize,
    /// Every run returned the same rows.
    pub stable: bool,
    pub expected: Option<usize>,
    /// Rows equal the oracle's on every run.
    pub verified: bool,
}

impl BenchRow {
    pub fn slow(&self) -> bool {
        self.mean_s >= LATENCY_TARGET.as_secs_f64()
    }

    pub fn flags(&self) -> Vec<&'static str> {
        let mut f = Vec::new();
        if self.repetitions == 1 {
            f.push("n=1");
        }
        if !self.stable {
            f.push("nondeterministic");
        }
        if !self.verified {
            f.push("MISMATCH");
        }
        if self.slow() {
            f.push("slow");
        }
        f
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
}

/// Mean and sample (n−1) standard deviation; the deviation of a single run is 0.
pub fn mean_std(samples: &[f64]) -> (f64, f64) {
    let n = samples.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

impl BenchReport {
    pub fn mismatches(&self) -> Vec<&BenchRow> {
        self.rows.iter().filter(|r| !r.verified || !r.stable).collect()
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("Query\tMean(s)\tStd\tResults\tRuns\tFlags\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{}\t{:.4}\t{:.4}\t{}\t{}\t{}",
                r.query,
                r.mean_s,
                r.std_s,
                r.count,
                r.repetitions,
                r.flags().join(",")
            );
        }
        out
    }

    pub fn to_table(&self) -> String {
        let mut out = format!(
            "{:<6} {:>9} {:>9} {:>8}  {}\n",
            "Query", "Mean(s)", "Std", "Results", "Flags"
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:<6} {:>9.4} {:>9.4} {:>8}  {}",
                r.query,
                r.mean_s,
                r.std_s,
                r.count,
                r.flags().join(",")
            );
        }
        out
    }
}

/// The rows of one response, in the oracle's shape.
pub fn response_rows(content_type: &str, body: &str) -> Result<Vec<Row>, String> {
    if content_type.starts_with("application/n-triples") {
        let g = parse_ntriples(body).map_err(|e| e.to_string())?;
        return Ok(triple_rows(&g));
    }
    match parse_results(body).map_err(|e| e.to_string())? {
        QueryResults::Solutions(s) => Ok(rows_of(&s)),
        QueryResults::Boolean(b) => Ok(if b { vec![Row::new()] } else { Vec::new() }),
    }
}

/// POSTs a query and returns (elapsed, content type, body). Elapsed spans
/// from sending the request to reading the whole body.
pub async fn timed_query(
    client: &reqwest::Client,
    endpoint: &str,
    query: &str,
) -> Result<(Duration, String, String), String> {
    let started = Instant::now();
    let response = client
        .post(endpoint)
        .header("content-type", "application/sparql-query")
        .body(query.to_owned())
        .send()
        .await
        .map_err(|e| e.to_string())?;
    let status = response.status();
    let content_type = response
        .headers()
        .get("content-type")
        .and_then(|v| v.to_str().ok())
        .unwrap_or("")
        .to_owned();
    let body = response.text().await.map_err(|e| e.to_string())?;
    let elapsed = started.elapsed();
    if !status.is_success() {
        return Err(format!("HTTP {}: {body}", status.as_u16()));
    }
    Ok((elapsed, content_type, body))
}

/// Runs each query `repetitions` times, strictly one after another.
pub async fn bench_run(
    federator: &str,
    queries: &[(String, String)],
    expected: &BTreeMap<String, Expected>,
    repetitions: usize,
) -> Result<BenchReport, BenchError> {
    let client = reqwest::Client::builder()
        .no_proxy()
        .build()
        .expect("static client configuration");
    let mut report = BenchReport::default();
    for (name, text) in queries {
        let mut times = Vec::with_capacity(repetitions);
        let mut first: Option<Vec<Row>> = None;
        let mut stable = true;
        let want = expected.get(name);
        let mut verified = want.is_some();
        for _ in 0..repetitions.max(1) {
            let (elapsed, content_type, body) =
                timed_query(&client, federator, text)
                    .await
                    .map_err(|reason| BenchError::Transport {
                        query: name.clone(),
                        reason,
                    })?;
            let rows = response_rows(&content_type, &body).map_err(|reason| BenchError::Transport {
                query: name.clone(),
                reason,
            })?;
            times.push(elapsed.as_secs_f64());
            if let Some(w) = want {
                verified &= w.count == rows.len() && w.rows == rows;
            }
            match &first {
                Some(f) => stable &= *f == rows,
                None => first = Some(rows),
            }
        }
        let (mean_s, std_s) = mean_std(&times);
        report.rows.push(BenchRow {
            query: name.clone(),
            mean_s,
            std_s,
            min_s: times.iter().cloned().fold(f64::INFINITY, f64::min),
            max_s: times.iter().cloned().fold(0.0, f64::max),
            count: first.map(|r| r.len()).unwrap_or(0),
            repetitions: times.len(),
            stable,
            expected: want.map(|w| w.count),
            verified,
        });
    }
    Ok(report)
}
