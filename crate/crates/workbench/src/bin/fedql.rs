use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand};
use fedql_workbench::bench::{run_configured, BenchConfig, BenchError, DEFAULT_REPETITIONS};
use fedql_workbench::deploy::{DeployConfig, Deployment};
use fedql_workbench::fixtures::{gen_fixtures, DEFAULT_GENES, DEFAULT_INTERACTIONS, DEFAULT_SEED};

const USAGE: u8 = 1;
const MISMATCH: u8 = 2;
const TRANSPORT: u8 = 3;

#[derive(Parser)]
#[command(name = "fedql", version, about = "Federated SPARQL over Web API micro-services")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Start the micro-services, native endpoints, federator and mock API of a deployment file.
    Serve {
        #[arg(long)]
        config: PathBuf,
    },
    /// Write a deterministic fixture directory.
    GenFixtures {
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_GENES)]
        genes: usize,
        #[arg(long, default_value_t = DEFAULT_INTERACTIONS)]
        interactions: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Send one query to a SPARQL endpoint and print the response body.
    Query {
        #[arg(long)]
        endpoint: String,
        #[arg(long)]
        file: PathBuf,
        #[arg(long)]
        accept: Option<String>,
        #[arg(long, default_value_t = 30)]
        timeout_s: u64,
    },
    /// Time every configured query against an in-process deployment.
    Bench {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = DEFAULT_REPETITIONS)]
        repeat: usize,
        /// Keep the micro-service caches enabled.
        #[arg(long)]
        cache: bool,
        /// Also write the report as TSV.
        #[arg(long)]
        tsv: Option<PathBuf>,
    },
}

fn fail(code: u8, msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("fedql: {msg}");
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()))
        .with_writer(std::io::stderr)
        .init();
    let runtime = match tokio::runtime::Runtime::new() {
        Ok(r) => r,
        Err(e) => return fail(TRANSPORT, e),
    };
    runtime.block_on(run(cli.command))
}

async fn run(command: Command) -> ExitCode {
    match command {
        Command::Serve { config } => serve(config).await,
        Command::GenFixtures {
            seed,
            genes,
            interactions,
            out,
        } => match gen_fixtures(seed, genes, interactions) {
            Ok(f) => match f.write(&out) {
                Ok(()) => {
                    println!(
                        "wrote {} genes, {} interactions to {}",
                        f.genes.len(),
                        f.interactions.len(),
                        out.display()
                    );
                    ExitCode::SUCCESS
                }
                Err(e) => fail(TRANSPORT, format!("{}: {e}", out.display())),
            },
            Err(e) => fail(USAGE, e),
        },
        Command::Query {
            endpoint,
            file,
            accept,
            timeout_s,
        } => query(endpoint, file, accept, Duration::from_secs(timeout_s)).await,
        Command::Bench {
            config,
            repeat,
            cache,
            tsv,
        } => bench(config, repeat, cache, tsv).await,
    }
}

async fn serve(config: PathBuf) -> ExitCode {
    let cfg = match DeployConfig::load(&config) {
        Ok(c) => c,
        Err(e) => return fail(USAGE, e),
    };
    let deployment = match Deployment::start(cfg).await {
        Ok(d) => d,
        Err(e) => return fail(TRANSPORT, e),
    };
    if let Some(api) = deployment.api_url() {
        println!("mock-api\t{api}");
    }
    for (name, url) in deployment.endpoints() {
        println!("{name}\t{url}");
    }
    tokio::select! {
        result = deployment.wait() => match result {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => fail(TRANSPORT, e),
        },
        _ = tokio::signal::ctrl_c() => ExitCode::SUCCESS,
    }
}

async fn query(endpoint: String, file: PathBuf, accept: Option<String>, timeout: Duration) -> ExitCode {
    let text = match std::fs::read_to_string(&file) {
        Ok(t) => t,
        Err(e) => return fail(USAGE, format!("{}: {e}", file.display())),
    };
    let client = match reqwest::Client::builder().no_proxy().timeout(timeout).build() {
        Ok(c) => c,
        Err(e) => return fail(TRANSPORT, e),
    };
    let mut request = client
        .post(&endpoint)
        .header("content-type", "application/sparql-query")
        .body(text);
    if let Some(a) = accept {
        request = request.header("accept", a);
    }
    let response = match request.send().await {
        Ok(r) => r,
        Err(e) => return fail(TRANSPORT, format!("{endpoint}: {e}")),
    };
    let status = response.status();
    match response.text().await {
        Ok(body) if status.is_success() => {
            print!("{body}");
            ExitCode::SUCCESS
        }
        Ok(body) => fail(TRANSPORT, format!("HTTP {}: {body}", status.as_u16())),
        Err(e) => fail(TRANSPORT, format!("{endpoint}: {e}")),
    }
}

async fn bench(config: PathBuf, repeat: usize, cache: bool, tsv: Option<PathBuf>) -> ExitCode {
    if repeat == 0 {
        return fail(USAGE, "--repeat must be at least 1");
    }
    let cfg = match BenchConfig::load(&config) {
        Ok(c) => c,
        Err(e) => return fail(USAGE, e),
    };
    let report = match run_configured(&cfg, repeat, cache).await {
        Ok(r) => r,
        Err(e @ BenchError::Config(_)) => return fail(USAGE, e),
        Err(e @ BenchError::Transport { .. }) => return fail(TRANSPORT, e),
    };
    print!("{}", report.to_table());
    if let Some(path) = tsv {
        if let Err(e) = std::fs::write(&path, report.to_tsv()) {
            return fail(TRANSPORT, format!("{}: {e}", path.display()));
        }
    }
    let bad = report.mismatches();
    if bad.is_empty() {
        ExitCode::SUCCESS
    } else {
        let names: Vec<&str> = bad.iter().map(|r| r.query.as_str()).collect();
        fail(
            MISMATCH,
            format!("results differ from the expected ones for {}", names.join(", ")),
        )
    }
}
