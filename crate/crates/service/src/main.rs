use std::collections::BTreeMap;
use std::error::Error;
use std::fs;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand};
use magfuse_core::command::{CommandTemplate, Scalar};
use magfuse_core::grammar::{load_grammar, save_grammar, validate_grammar, SynRole};
use magfuse_core::lexicon::MultimodalToken;
use magfuse_service::http::{router, StreamsPayload};
use magfuse_service::{Engine, ParseResponse, Store};

const NOT_PARSEABLE: u8 = 3;

#[derive(Parser)]
#[command(name = "magfuse", version, about = "Multimodal grammar fusion with a teach loop")]
struct Cli {
    /// Grammar file; created on the first commit, seed grammar until then.
    #[arg(long, global = true, env = "MAGFUSE_GRAMMAR", default_value = "magfuse.mag")]
    grammar_file: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a token file and print the attributed tree and frame.
    Parse { tokens: PathBuf },
    /// Teach an unparseable sentence and commit the resulting rules.
    Teach {
        tokens: PathBuf,
        /// Comma-separated `token=synrole` pairs.
        #[arg(long, default_value = "")]
        roles: String,
        /// Frame template as JSON or `action=..,object=..,name=value` pairs.
        #[arg(long)]
        meaning: String,
        /// Show the proposed delta and reject it.
        #[arg(long)]
        reject: bool,
    },
    /// Inspect or validate grammars.
    Grammar {
        #[command(subcommand)]
        action: GrammarCmd,
    },
    /// Run the HTTP service.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
    },
}

#[derive(Subcommand)]
enum GrammarCmd {
    /// Print the current grammar.
    Show,
    /// Validate a grammar file.
    Check { file: PathBuf },
    /// Write the current grammar to a file, or stdout without one.
    Export { out: Option<PathBuf> },
}

type Res<T> = Result<T, Box<dyn Error>>;

fn read_streams(path: &Path) -> Res<Vec<Vec<MultimodalToken>>> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let payload: StreamsPayload =
        serde_json::from_str(&text).map_err(|e| format!("{}: malformed tokens: {e}", path.display()))?;
    Ok(payload.into_streams())
}

fn parse_roles(spec: &str) -> Res<BTreeMap<String, SynRole>> {
    spec.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|pair| {
            let (k, v) = pair
                .split_once('=')
                .ok_or_else(|| format!("role `{pair}` is not token=synrole"))?;
            Ok((k.trim().to_string(), v.trim().parse::<SynRole>()?))
        })
        .collect()
}

fn parse_meaning(spec: &str) -> Res<CommandTemplate> {
    if spec.trim_start().starts_with('{') {
        return Ok(serde_json::from_str(spec)?);
    }
    let mut template: Option<CommandTemplate> = None;
    let mut object = None;
    let mut params = BTreeMap::new();
    for pair in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| format!("meaning field `{pair}` is not name=value"))?;
        let (k, v) = (k.trim(), v.trim());
        match k {
            "action" => template = Some(CommandTemplate::new(v)),
            "object" => object = Some(v.to_string()),
            _ => {
                let value = v.parse().map(Scalar::Int).unwrap_or_else(|_| Scalar::Text(v.into()));
                params.insert(k.to_string(), value);
            }
        }
    }
    let mut t = template.ok_or("meaning needs an action")?;
    t.object = object;
    t.params = params;
    Ok(t)
}

fn print_json(value: &impl serde::Serialize) -> Res<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn run(cli: Cli) -> Res<ExitCode> {
    let store = Store::new(&cli.grammar_file);
    match cli.command {
        Command::Parse { tokens } => {
            let engine = Engine::open(store)?;
            let resp = engine.parse(&read_streams(&tokens)?)?;
            print_json(&resp)?;
            Ok(match resp {
                ParseResponse::Parsed { .. } => ExitCode::SUCCESS,
                ParseResponse::NotParseable { .. } => ExitCode::from(NOT_PARSEABLE),
            })
        }
        Command::Teach {
            tokens,
            roles,
            meaning,
            reject,
        } => {
            let engine = Engine::open(store)?;
            let streams = read_streams(&tokens)?;
            let session = match engine.parse(&streams)? {
                ParseResponse::Parsed { .. } => return Err("sentence already parses; nothing to teach".into()),
                ParseResponse::NotParseable { session, .. } => session,
            };
            engine.teach_roles(session.id, parse_roles(&roles)?)?;
            let proposed = engine.teach_meaning(session.id, parse_meaning(&meaning)?)?;
            eprint!("{}", proposed.rendered_delta.as_deref().unwrap_or_default());
            let done = engine.teach_confirm(session.id, !reject)?;
            let reparsed = if reject { None } else { Some(engine.parse(&streams)?) };
            print_json(&serde_json::json!({
                "session": done,
                "reparse": reparsed,
            }))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Grammar { action } => match action {
            GrammarCmd::Show => {
                print!("{}", Engine::open(store)?.grammar_text());
                Ok(ExitCode::SUCCESS)
            }
            GrammarCmd::Check { file } => {
                let text = fs::read_to_string(&file).map_err(|e| format!("{}: {e}", file.display()))?;
                let g = load_grammar(&text).map_err(|e| format!("{}: {e}", file.display()))?;
                let report = validate_grammar(&g);
                if report.is_ok() {
                    println!(
                        "ok: {} productions, {} terminals, {} nonterminals",
                        g.productions.len(),
                        g.terminals.len(),
                        g.nonterminals.len()
                    );
                    Ok(ExitCode::SUCCESS)
                } else {
                    Err(report.to_string().into())
                }
            }
            GrammarCmd::Export { out } => {
                let text = save_grammar(&store.load_grammar()?);
                match out {
                    Some(path) => fs::write(&path, text).map_err(|e| format!("{}: {e}", path.display()))?,
                    None => print!("{text}"),
                }
                Ok(ExitCode::SUCCESS)
            }
        },
        Command::Serve { port, host } => {
            let engine = Arc::new(Engine::open(store)?);
            let addr: SocketAddr = format!("{host}:{port}").parse()?;
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(async move {
                let listener = tokio::net::TcpListener::bind(addr).await?;
                eprintln!("magfuse listening on http://{}", listener.local_addr()?);
                axum::serve(listener, router(engine))
                    .with_graceful_shutdown(async {
                        let _ = tokio::signal::ctrl_c().await;
                    })
                    .await
            })?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
