use std::io::{self, Write};
use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand};

use cpd_cli::commands::{self, ExportFormat};
use cpd_cli::server::{self, AppState, Cors};
use cpd_cli::{exit, gateway_for};
use cpd_core::glossary::Glossary;
use cpd_core::store::Store;
use cpd_core::ElementKind;

/// Author and check causal pathway diagrams.
#[derive(Parser)]
#[command(name = "cpd", version)]
struct Cli {
    /// Use the deterministic offline suggestion backend.
    #[arg(long, global = true)]
    mock: bool,
    /// Seed for --mock.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Glossary file to use instead of the bundled one.
    #[arg(long, global = true, env = "CPD_GLOSSARY")]
    glossary: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a diagram. Exits 0 if clean, 1 on errors, 2 if unreadable.
    Check {
        path: PathBuf,
        /// Print the diagnostics as JSON instead of the report.
        #[arg(long)]
        json: bool,
    },
    /// Export a diagram as Graphviz DOT or SVG.
    Export {
        path: PathBuf,
        #[arg(long, value_enum)]
        format: ExportFormat,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build a pathway step by step, starting from the distal outcome.
    Wizard {
        /// Write the diagram here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Pre-filled distal outcome.
        #[arg(long)]
        hint: Option<String>,
    },
    /// Suggest components that fit between two neighbours.
    Brainstorm {
        #[arg(long)]
        kind: ElementKind,
        /// Preceding component as KIND:LABEL.
        #[arg(long, value_parser = commands::parse_neighbour)]
        before: Option<(ElementKind, String)>,
        /// Following component as KIND:LABEL.
        #[arg(long, value_parser = commands::parse_neighbour)]
        after: Option<(ElementKind, String)>,
    },
    /// Run the HTTP service.
    Serve {
        #[arg(long, default_value = "cpd-store")]
        store: PathBuf,
        #[arg(long, default_value = "127.0.0.1")]
        host: std::net::IpAddr,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        /// Browser origin allowed to call the API; repeatable, `*` for any.
        #[arg(long = "cors-origin")]
        cors_origin: Vec<String>,
    },
}

fn load_glossary(path: Option<&PathBuf>) -> Result<Glossary, String> {
    match path {
        None => Ok(Glossary::bundled().clone()),
        Some(p) => Glossary::from_path(p).map_err(|e| format!("cannot load glossary {}: {e}", p.display())),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = run(cli);
    ExitCode::from(u8::try_from(code).unwrap_or(1))
}

fn run(cli: Cli) -> i32 {
    let stdout = io::stdout();
    let stderr = io::stderr();
    let glossary = match load_glossary(cli.glossary.as_ref()) {
        Ok(g) => g,
        Err(e) => {
            eprintln!("cpd: {e}");
            return exit::USAGE;
        }
    };
    match cli.command {
        Command::Check { path, json } => commands::check_file(&path, json, &mut stdout.lock(), &mut stderr.lock()),
        Command::Export { path, format, out } => {
            commands::export_file(&path, format, out.as_deref(), &mut stdout.lock(), &mut stderr.lock())
        }
        Command::Wizard { out, hint } => {
            let gateway = gateway_for(cli.mock, cli.seed);
            commands::wizard(
                &glossary,
                gateway.as_ref(),
                hint,
                &mut io::stdin().lock(),
                &mut stderr.lock(),
                out.as_deref(),
                &mut stdout.lock(),
            )
        }
        Command::Brainstorm { kind, before, after } => {
            let gateway = gateway_for(cli.mock, cli.seed);
            commands::brainstorm(
                &glossary,
                gateway.as_ref(),
                kind,
                before,
                after,
                &mut stdout.lock(),
                &mut stderr.lock(),
            )
        }
        Command::Serve {
            store,
            host,
            port,
            cors_origin,
        } => serve(store, SocketAddr::new(host, port), cors_origin, cli.mock, cli.seed, glossary),
    }
}

fn serve(root: PathBuf, addr: SocketAddr, origins: Vec<String>, mock: bool, seed: u64, glossary: Glossary) -> i32 {
    tracing_subscriber::fmt().with_writer(io::stderr).init();
    let cors = match Cors::from_origins(&origins) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("cpd: {e}");
            return exit::USAGE;
        }
    };
    let store = match Store::open(&root) {
        Ok(s) => s,
        Err(e) => {
            eprintln!(
                "cpd: cannot use store directory {}: {e}\nPass --store with a writable directory.",
                root.display()
            );
            return exit::FOUND_ERRORS;
        }
    };
    for skipped in store.skipped() {
        tracing::warn!(path = %skipped.display(), "not indexed");
    }
    // the blocking HTTP client must be built outside the async runtime
    let gateway: Arc<dyn cpd_core::llm::Gateway> = Arc::from(gateway_for(mock, seed));
    tracing::info!(backend = %gateway.backend_id(), "suggestion backend");
    let state = AppState::new(store, gateway, glossary);

    let runtime = match tokio::runtime::Runtime::new() {
        Ok(r) => r,
        Err(e) => {
            eprintln!("cpd: cannot start runtime: {e}");
            return exit::FOUND_ERRORS;
        }
    };
    runtime.block_on(async move {
        let listener = match tokio::net::TcpListener::bind(addr).await {
            Ok(l) => l,
            Err(e) => {
                eprintln!("cpd: cannot listen on {addr}: {e}\nPick another --port or stop the process using it.");
                return exit::FOUND_ERRORS;
            }
        };
        let local = listener.local_addr().map(|a| a.to_string()).unwrap_or_else(|_| addr.to_string());
        println!("listening on http://{local}");
        let _ = io::stdout().flush();
        match server::serve(listener, state, cors, server::shutdown_signal()).await {
            Ok(()) => exit::OK,
            Err(e) => {
                eprintln!("cpd: server error: {e}");
                exit::FOUND_ERRORS
            }
        }
    })
}
