use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use tracing::{error, info};
use tracing_subscriber::EnvFilter;

use fundchain_node::api;
use fundchain_node::{Node, NodeConfig};

/// Runs a fundchain node.
#[derive(Debug, Parser)]
#[command(name = "fundchain-node", version)]
struct Args {
    /// JSON config file. Without one the node starts with dev defaults:
    /// the well-known dev key is funded and acts as treasury.
    #[arg(long, env = "FUNDCHAIN_CONFIG")]
    config: Option<PathBuf>,
    /// Overrides the configured listen port.
    #[arg(long, env = "FUNDCHAIN_PORT")]
    port: Option<u16>,
    /// Overrides the configured data directory.
    #[arg(long, env = "FUNDCHAIN_DATA_DIR")]
    data_dir: Option<PathBuf>,
    /// Print the effective config as JSON and exit.
    #[arg(long)]
    print_config: bool,
}

fn load(args: &Args) -> Result<NodeConfig, String> {
    let mut cfg = match &args.config {
        Some(path) => NodeConfig::load(path).map_err(|e| e.to_string())?,
        None => NodeConfig::dev("fundchain-data"),
    };
    if let Some(port) = args.port {
        cfg.listen = SocketAddr::new(cfg.listen.ip(), port);
    }
    if let Some(dir) = &args.data_dir {
        cfg.data_dir = dir.clone();
    }
    cfg.rates = cfg.rates.with_env_override();
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}

#[tokio::main]
async fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()))
        .init();
    let args = Args::parse();
    let cfg = match load(&args) {
        Ok(cfg) => cfg,
        Err(e) => {
            error!("{e}");
            return ExitCode::FAILURE;
        }
    };
    if args.print_config {
        println!(
            "{}",
            serde_json::to_string_pretty(&cfg).expect("config serializes")
        );
        return ExitCode::SUCCESS;
    }

    let listen = cfg.listen;
    let node = match Node::start(cfg) {
        Ok(n) => n,
        Err(e) => {
            error!("failed to start: {e}");
            return ExitCode::FAILURE;
        }
    };
    let listener = match tokio::net::TcpListener::bind(listen).await {
        Ok(l) => l,
        Err(e) => {
            error!("cannot listen on {listen}: {e}");
            return ExitCode::FAILURE;
        }
    };
    info!(
        "listening on http://{}",
        listener.local_addr().map_or(listen, |a| a)
    );
    let stop = std::sync::Arc::new(tokio::sync::Notify::new());
    let signal = stop.clone();
    let shutdown = async move {
        let _ = tokio::signal::ctrl_c().await;
        info!("shutting down");
        signal.notify_one();
    };
    // Event-stream connections never finish on their own; give the rest a
    // grace period and then stop waiting for them.
    let served = tokio::select! {
        r = api::serve(node.handle(), listener, shutdown) => r,
        _ = async {
            stop.notified().await;
            tokio::time::sleep(std::time::Duration::from_secs(3)).await;
        } => Ok(()),
    };
    node.shutdown();
    match served {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            error!("server error: {e}");
            ExitCode::FAILURE
        }
    }
}
