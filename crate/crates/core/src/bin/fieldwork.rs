use std::fs::File;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use fieldwork::analytics::{read_costs, read_likert, read_quiz_scores, CostReport, QuizReport, SusReport};
use fieldwork::engine::Theme;
use fieldwork::service::{self, AppState, Script, ServiceConfig, SessionStore};

#[derive(Parser)]
#[command(name = "fieldwork", version, about = "Ethnographic fieldwork game: ingest, serve, play and analyze")]
struct Cli {
    /// TOML configuration file.
    #[arg(long, short, global = true, env = "FIELDWORK_CONFIG")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Chunk, embed and index a source text.
    Ingest {
        /// Source text; the configured or bundled corpus when omitted.
        source: Option<PathBuf>,
        /// Index file to write.
        #[arg(long, short)]
        out: PathBuf,
        /// Glossary file, `term<TAB>gloss` per line.
        #[arg(long)]
        glossary: Option<PathBuf>,
    },
    /// Serve the REST API.
    Serve {
        /// Address to bind, overriding the config.
        #[arg(long)]
        bind: Option<String>,
    },
    /// Play a scripted session headlessly and write its transcript.
    Play {
        script: PathBuf,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value = "headless")]
        id: String,
        #[arg(long)]
        theme: Option<Theme>,
        /// Transcript output; stdout when omitted.
        #[arg(long, short)]
        out: Option<PathBuf>,
        /// Print one line per script step to stderr.
        #[arg(long)]
        log: bool,
    },
    /// Evaluation arithmetic over study CSV files.
    Analyze {
        what: Analysis,
        csv: PathBuf,
        /// Print the JSON summary instead of the text report.
        #[arg(long)]
        json: bool,
        /// Restrict SUS scoring to these participant ids.
        #[arg(long, value_delimiter = ',')]
        participants: Vec<String>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Analysis {
    Sus,
    Quiz,
    Cost,
}

fn load_config(path: Option<&Path>) -> Result<ServiceConfig> {
    match path {
        Some(p) => Ok(ServiceConfig::load(p)?),
        None => Ok(ServiceConfig::default()),
    }
}

fn main() -> Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()))
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    let mut config = load_config(cli.config.as_deref())?;
    match cli.command {
        Command::Ingest { source, out, glossary } => {
            if source.is_some() {
                config.corpus.source = source;
            }
            if glossary.is_some() {
                config.corpus.glossary = glossary;
            }
            let c = service::components(&config)?;
            let index = service::ingest(&config, c.embedder.as_ref())?;
            service::write_atomic(&out, &index.to_bytes()).with_context(|| format!("writing {}", out.display()))?;
            println!(
                "indexed {} chunks and {} native terms with {} into {}",
                index.chunks().len(),
                index.lexicon().len(),
                index.embedder(),
                out.display()
            );
        }
        Command::Serve { bind } => {
            if let Some(bind) = bind {
                config.server.bind = bind;
            }
            // the blocking HTTP client must exist before the async runtime
            let engine = Arc::new(service::build_engine(&config)?);
            let store = SessionStore::open(&config.server.store_dir)
                .with_context(|| format!("opening session store {}", config.server.store_dir.display()))?;
            let state = AppState::new(engine, store);
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(async {
                let listener = tokio::net::TcpListener::bind(&config.server.bind)
                    .await
                    .with_context(|| format!("binding {}", config.server.bind))?;
                tracing::info!(addr = %listener.local_addr()?, "serving");
                let shutdown = async {
                    let _ = tokio::signal::ctrl_c().await;
                };
                service::serve(listener, state, shutdown).await?;
                anyhow::Ok(())
            })?;
        }
        Command::Play { script, seed, id, theme, out, log } => {
            let text = std::fs::read_to_string(&script).with_context(|| format!("reading {}", script.display()))?;
            let script = Script::parse(&text)?;
            config.server.image_dir = None;
            let engine = service::build_engine(&config)?;
            let report = service::play(&engine, &script, &id, seed, theme)?;
            if log {
                for line in report.log_lines() {
                    eprintln!("{line}");
                }
            }
            let transcript = report.session.transcript_json();
            match out {
                Some(path) => service::write_atomic(&path, transcript.as_bytes())?,
                None => print!("{transcript}"),
            }
        }
        Command::Analyze { what, csv, json, participants } => {
            let file = File::open(&csv).with_context(|| format!("opening {}", csv.display()))?;
            let (text, summary) = match what {
                Analysis::Sus => {
                    let mut m = read_likert(file)?;
                    if !participants.is_empty() {
                        let ids: Vec<&str> = participants.iter().map(String::as_str).collect();
                        m = m.subset(&ids);
                        if m.len() != ids.len() {
                            bail!("only {} of {} participants were found", m.len(), ids.len());
                        }
                    }
                    let r = SusReport::compute(&m)?;
                    (r.to_text(), serde_json::to_string_pretty(&r)?)
                }
                Analysis::Quiz => {
                    let r = QuizReport::compute(read_quiz_scores(file)?)?;
                    (r.to_text(), serde_json::to_string_pretty(&r)?)
                }
                Analysis::Cost => {
                    let r = CostReport::compute(&read_costs(file)?)?;
                    (r.to_text(), serde_json::to_string_pretty(&r)?)
                }
            };
            println!("{}", if json { summary } else { text });
        }
    }
    Ok(())
}
