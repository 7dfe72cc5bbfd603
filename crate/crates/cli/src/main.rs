use std::ffi::OsString;
use std::io::{BufRead, IsTerminal, Write};
use std::net::IpAddr;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand};
use isabel::render::{render_report, render_text};
use isabel::{AppState, ServiceConfig};
use isabel_core::{render_json, InteractionLog, KnowledgeGraph, LexiconConfig, Pipeline, PipelineConfig};

const EXIT_FINDINGS: u8 = 1;
const EXIT_LOAD: u8 = 2;
const EXIT_INPUT: u8 = 3;

#[derive(Parser)]
#[command(name = "isabel", version, about = "Link free-text requests to knowledge-graph packages")]
struct Cli {
    /// Knowledge-graph JSON document (bundled graph when omitted)
    #[arg(long, env = "ISABEL_KG", global = true)]
    kg: Option<PathBuf>,
    /// Lexicon JSON document (bundled English lexicon when omitted)
    #[arg(long, global = true)]
    lexicon: Option<PathBuf>,
    /// Append one JSON line per request to this file
    #[arg(long, global = true)]
    log: Option<PathBuf>,
    /// Minimum similarity for a link
    #[arg(long, global = true, default_value_t = PipelineConfig::default().threshold)]
    tau: f64,
    /// Candidates kept per mention
    #[arg(long, global = true, default_value_t = PipelineConfig::default().max_candidates)]
    k: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one request and print the result
    Link {
        #[arg(long)]
        json: bool,
        #[arg(allow_hyphen_values = true)]
        text: OsString,
    },
    /// Read requests line by line from standard input
    Repl {
        #[arg(long)]
        json: bool,
    },
    /// Serve the HTTP API
    Serve {
        #[arg(long, env = "ISABEL_PORT", default_value_t = isabel::config::DEFAULT_PORT,
              value_parser = clap::value_parser!(u16).range(1..))]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: IpAddr,
    },
    /// Check a knowledge graph and print its findings
    ValidateKg {
        #[arg(long)]
        json: bool,
    },
}

impl Cli {
    fn service_config(&self) -> ServiceConfig {
        ServiceConfig {
            kg_path: self.kg.clone(),
            lexicon_path: self.lexicon.clone(),
            log_path: self.log.clone(),
            pipeline: PipelineConfig {
                threshold: self.tau,
                max_candidates: self.k,
            },
            ..ServiceConfig::default()
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = cli.service_config();
    match cli.command {
        Command::Link { json, ref text } => link(&config, text, json),
        Command::Repl { json } => repl(&config, json),
        Command::Serve { port, host } => serve(ServiceConfig {
            port,
            listen: host,
            ..config
        }),
        Command::ValidateKg { json } => validate(&config, json),
    }
}

fn load(config: &ServiceConfig) -> Result<Pipeline, ExitCode> {
    config.load_pipeline().map_err(|e| {
        eprintln!("error: {e}");
        ExitCode::from(EXIT_LOAD)
    })
}

fn print_result(result: &isabel_core::PipelineResult, json: bool) {
    let out = if json { render_json(result) } else { render_text(result) };
    let mut stdout = std::io::stdout().lock();
    let _ = stdout.write_all(out.as_bytes());
    let _ = stdout.flush();
}

fn link(config: &ServiceConfig, text: &OsString, json: bool) -> ExitCode {
    let pipeline = match load(config) {
        Ok(p) => p,
        Err(code) => return code,
    };
    let Some(text) = text.to_str() else {
        eprintln!("error: [input] request text is not valid UTF-8");
        return ExitCode::from(EXIT_INPUT);
    };
    let log = config.log_path.clone().map(InteractionLog::new);
    match pipeline.run_logged(text, log.as_ref()) {
        Ok(result) => {
            print_result(&result, json);
            ExitCode::SUCCESS
        }
        Err(e) if e.is_input_error() => {
            eprintln!("error: [input] {e}");
            ExitCode::from(EXIT_INPUT)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn repl(config: &ServiceConfig, json: bool) -> ExitCode {
    let pipeline = match load(config) {
        Ok(p) => p,
        Err(code) => return code,
    };
    let log = config.log_path.clone().map(InteractionLog::new);
    let interactive = std::io::stdin().is_terminal();
    let mut stdin = std::io::stdin().lock();
    let mut line = Vec::new();
    loop {
        if interactive {
            eprint!("> ");
        }
        line.clear();
        match stdin.read_until(b'\n', &mut line) {
            Ok(0) => return ExitCode::SUCCESS,
            Ok(_) => {}
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::FAILURE;
            }
        }
        let Ok(text) = std::str::from_utf8(&line) else {
            eprintln!("error: [input] line is not valid UTF-8");
            continue;
        };
        let text = text.trim_end_matches(['\n', '\r']);
        if text.trim().is_empty() {
            continue;
        }
        match pipeline.run_logged(text, log.as_ref()) {
            Ok(result) => print_result(&result, json),
            Err(e) => eprintln!("error: {e}"),
        }
    }
}

fn serve(config: ServiceConfig) -> ExitCode {
    let runtime = match tokio::runtime::Runtime::new() {
        Ok(rt) => rt,
        Err(e) => {
            eprintln!("error: cannot start runtime: {e}");
            return ExitCode::from(EXIT_LOAD);
        }
    };
    runtime.block_on(async move {
        let addr = config.socket_addr();
        let state = Arc::new(AppState::new(config));
        if let Err(e) = state.reload() {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_LOAD);
        }
        let listener = match tokio::net::TcpListener::bind(addr).await {
            Ok(l) => l,
            Err(e) => {
                eprintln!("error: cannot bind {addr}: {e}");
                return ExitCode::from(EXIT_LOAD);
            }
        };
        if let Err(e) = isabel::service::reload_on_sighup(state.clone()) {
            eprintln!("warning: SIGHUP reload unavailable: {e}");
        }
        eprintln!("listening on http://{addr}");
        let shutdown = async {
            let _ = tokio::signal::ctrl_c().await;
        };
        match isabel::service::serve(listener, state, shutdown).await {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::FAILURE
            }
        }
    })
}

fn validate(config: &ServiceConfig, json: bool) -> ExitCode {
    let lexicon = match &config.lexicon_path {
        Some(path) => match std::fs::read(path).map_err(|e| e.to_string()).and_then(|b| {
            LexiconConfig::from_json(&b).map_err(|e| e.to_string())
        }) {
            Ok(l) => l,
            Err(e) => {
                eprintln!("error: [load] lexicon {}: {e}", path.display());
                return ExitCode::from(EXIT_LOAD);
            }
        },
        None => LexiconConfig::english(),
    };
    let document = match &config.kg_path {
        Some(path) => match std::fs::read(path) {
            Ok(b) => b,
            Err(e) => {
                eprintln!("error: [load] cannot read {}: {e}", path.display());
                return ExitCode::from(EXIT_LOAD);
            }
        },
        None => isabel_core::fixtures::KG_JSON.as_bytes().to_vec(),
    };
    let kg = match KnowledgeGraph::from_json(&document, &lexicon) {
        Ok(kg) => kg,
        Err(e) => {
            eprintln!("error: [load] knowledge graph: {e}");
            return ExitCode::from(EXIT_LOAD);
        }
    };
    let report = kg.validate(&lexicon);
    let out = if json {
        let mut s = serde_json::to_string_pretty(&report).expect("report serializes");
        s.push('\n');
        s
    } else {
        render_report(&report)
    };
    print!("{out}");
    if report.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_FINDINGS)
    }
}
