//! `narql`: ingest corpora, run and explain narrative queries, serve the API.

use std::fmt;
use std::fs;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use narql_core::api::{self, ApiError, ExplainRequest, QueryRequest, ResultEntry, ServiceConfig};
use narql_core::provenance::NO_SENTENCE;
use narql_core::{index, ingest, CountUnit, StatementStore, Vocabulary};
use narql_server::ServerConfig;

#[derive(Debug, Parser)]
#[command(name = "narql", version, about = "Context-aware narrative queries over document graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build an index directory from a document file and a vocabulary.
    Ingest {
        /// Line-delimited JSON document records.
        #[arg(long)]
        docs: PathBuf,
        /// Vocabulary JSON file.
        #[arg(long)]
        vocab: PathBuf,
        /// Output index directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a query and print ranked substitutions.
    Query {
        #[command(flatten)]
        target: Target,
        /// Print every result row with its supporting statements.
        #[arg(long)]
        raw_rows: bool,
        /// Print the JSON response body the HTTP service would return.
        #[arg(long)]
        json: bool,
        #[arg(long)]
        limit: Option<usize>,
        #[arg(long)]
        offset: Option<usize>,
        /// Rank and count by distinct documents (default) or by result rows.
        #[arg(long, value_enum, default_value_t = Count::Documents)]
        count: Count,
        query: String,
    },
    /// Show the sentences behind the rows matching a substitution.
    Explain {
        #[command(flatten)]
        target: Target,
        /// Substitution to explain, e.g. `X=ChAdOx1 nCov-19,Y=4.01`.
        #[arg(long)]
        pick: String,
        #[arg(long)]
        json: bool,
        query: String,
    },
    /// Serve the HTTP API over an index.
    Serve {
        #[arg(long, env = "NARQL_INDEX")]
        index: PathBuf,
        #[arg(long, env = "NARQL_PORT", default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: std::net::IpAddr,
        #[arg(long)]
        similarity_threshold: Option<f64>,
        /// Allowed CORS origin; repeatable. Any origin when omitted.
        #[arg(long = "cors-origin")]
        cors_origins: Vec<String>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "UPPER")]
enum Policy {
    Global,
    Document,
    Group,
    Similarity,
}

impl Policy {
    fn name(self) -> &'static str {
        match self {
            Policy::Global => "GLOBAL",
            Policy::Document => "DOCUMENT",
            Policy::Group => "GROUP",
            Policy::Similarity => "SIMILARITY",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Count {
    Documents,
    Rows,
}

#[derive(Debug, Args)]
struct Target {
    #[arg(long, env = "NARQL_INDEX")]
    index: PathBuf,
    #[arg(long, value_enum, ignore_case = true)]
    policy: Policy,
    /// Keyword Jaccard threshold for the SIMILARITY policy.
    #[arg(long)]
    similarity_threshold: Option<f64>,
}

enum Failure {
    Usage(String),
    Data(String),
    Query { error: ApiError, json: bool },
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Data(_) => 3,
            Failure::Query { .. } => 4,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) | Failure::Data(m) => f.write_str(m),
            Failure::Query { error, .. } => {
                write!(f, "{error}")?;
                if let Some(candidates) = &error.error.candidates {
                    for c in candidates {
                        write!(f, "\n  candidate: {} ({}, {})", c.id, c.name, c.ty)?;
                    }
                }
                Ok(())
            }
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

fn load(dir: &Path) -> Result<StatementStore, Failure> {
    index::load(dir).map_err(|e| Failure::Data(format!("cannot load index {}: {e}", dir.display())))
}

fn query_failure(json: bool) -> impl Fn(ApiError) -> Failure {
    move |error| {
        // request-shape problems are usage errors, everything else is the query's fault
        if error.code() == "InvalidPolicy" || error.code() == "InvalidRequest" {
            Failure::Usage(error.error.message)
        } else {
            Failure::Query { error, json }
        }
    }
}

fn run_ingest(docs: &Path, vocab: &Path, out: &Path) -> Result<(), Failure> {
    let vocab = Vocabulary::from_json(&read(vocab)?).map_err(|e| Failure::Data(format!("{}: {e}", vocab.display())))?;
    let (store, report) = ingest(&read(docs)?, vocab).map_err(|e| Failure::Data(e.to_string()))?;
    if report.documents == 0 {
        for m in &report.malformed {
            eprintln!("malformed record at {m}");
        }
        return Err(Failure::Data(format!("no documents ingested from {}", docs.display())));
    }
    index::save(&store, out).map_err(|e| Failure::Data(e.to_string()))?;
    println!("{report}");
    if report.unlinkable > 0 {
        println!("{} statements mention entities missing from the vocabulary", report.unlinkable);
    }
    for m in &report.malformed {
        println!("  {m}");
    }
    Ok(())
}

fn run_query(target: &Target, req: QueryRequest, json: bool) -> Result<(), Failure> {
    let store = load(&target.index)?;
    let resp = api::run_query(&store, &req, &ServiceConfig::default()).map_err(query_failure(json))?;
    if json {
        println!("{}", api::to_json(&resp));
        return Ok(());
    }
    if let Some(found) = resp.ask {
        println!("{found}");
        return Ok(());
    }
    let results = resp.results.unwrap_or_default();
    for entry in &results {
        match entry {
            ResultEntry::Aggregated { display, .. } => println!("{display}"),
            ResultEntry::Row { display, support, .. } => {
                let sources: Vec<String> = support
                    .iter()
                    .map(|s| {
                        let sentence = s.sentence.as_ref().map_or("-", |x| x.as_str());
                        format!("{}#{} [{}]", s.doc, sentence, s.group)
                    })
                    .collect();
                println!("{display}\t{}", sources.join("; "));
            }
        }
    }
    let total = resp.total.unwrap_or(0);
    if total > results.len() {
        eprintln!("showing {} of {total} results", results.len());
    }
    Ok(())
}

fn run_explain(target: &Target, req: ExplainRequest, json: bool) -> Result<(), Failure> {
    let store = load(&target.index)?;
    let resp = api::run_explain(&store, &req, &ServiceConfig::default()).map_err(query_failure(json))?;
    if json {
        println!("{}", api::to_json(&resp));
        return Ok(());
    }
    for (i, row) in resp.rows.iter().enumerate() {
        if i > 0 {
            println!();
        }
        println!("{}", row.display);
        for c in &row.clauses {
            println!("  {}", c.clause);
            println!("    {} [{}]", c.doc_title, c.doc);
            println!("    {}", c.sentence_text.as_deref().unwrap_or(NO_SENTENCE));
        }
    }
    Ok(())
}

fn run_serve(
    index_dir: &Path,
    addr: SocketAddr,
    similarity_threshold: Option<f64>,
    cors_origins: Vec<String>,
) -> Result<(), Failure> {
    let store = load(index_dir)?;
    let mut config = ServerConfig {
        cors_origins,
        ..ServerConfig::default()
    };
    if let Some(t) = similarity_threshold {
        if !(0.0..=1.0).contains(&t) {
            return Err(Failure::Usage(format!("similarity threshold {t} is outside [0, 1]")));
        }
        config.service.similarity_threshold = t;
    }
    let runtime = tokio::runtime::Runtime::new().map_err(|e| Failure::Data(e.to_string()))?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind(addr)
            .await
            .map_err(|e| Failure::Data(format!("cannot bind {addr}: {e}")))?;
        eprintln!(
            "serving {} documents, {} statements on http://{}",
            store.documents().len(),
            store.len(),
            listener.local_addr().map_or(addr, |a| a)
        );
        narql_server::serve(listener, store, config)
            .await
            .map_err(|e| Failure::Data(e.to_string()))
    })
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Ingest { docs, vocab, out } => run_ingest(&docs, &vocab, &out),
        Command::Query {
            target,
            raw_rows,
            json,
            limit,
            offset,
            count,
            query,
        } => {
            let req = QueryRequest {
                query,
                policy: target.policy.name().to_owned(),
                similarity_threshold: target.similarity_threshold,
                limit,
                offset,
                aggregate: !raw_rows,
                count: match count {
                    Count::Documents => CountUnit::Documents,
                    Count::Rows => CountUnit::Rows,
                },
            };
            run_query(&target, req, json)
        }
        Command::Explain {
            target,
            pick,
            json,
            query,
        } => {
            let pick = api::parse_pick(&pick).map_err(|e| Failure::Usage(e.error.message))?;
            let req = ExplainRequest {
                query,
                policy: target.policy.name().to_owned(),
                similarity_threshold: target.similarity_threshold,
                pick,
            };
            run_explain(&target, req, json)
        }
        Command::Serve {
            index,
            port,
            host,
            similarity_threshold,
            cors_origins,
        } => run_serve(&index, SocketAddr::new(host, port), similarity_threshold, cors_origins),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            match &failure {
                Failure::Query { error, json: true } => println!("{}", api::to_json(error)),
                _ => eprintln!("narql: {failure}"),
            }
            ExitCode::from(failure.code())
        }
    }
}
