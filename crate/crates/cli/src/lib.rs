//! Command-line front end for `mobss` and the explorer HTTP service.

use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mobss::explorer::Explorer;
use mobss::harness;

pub mod server;

pub const EXIT_OK: u8 = 0;
pub const EXIT_VALIDATION: u8 = 1;
pub const EXIT_RUNTIME: u8 = 2;

#[derive(Debug, Parser)]
#[command(name = "mobss", version, about = "Multi-objective blind source separation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one optimisation and write its artifact.
    Run {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "runs")]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Score an artifact against known sources.
    Evaluate {
        #[arg(long)]
        artifact: PathBuf,
        /// CSV with one column per source; defaults to the sources stored in the artifact.
        #[arg(long)]
        sources: Option<PathBuf>,
        #[arg(long, default_value = "evaluation")]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        order_by: usize,
    },
    /// Run the SNR sweep.
    Sweep {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "sweep")]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Export per-snapshot archive clouds of an artifact.
    Convergence {
        #[arg(long)]
        artifact: PathBuf,
        #[arg(long, default_value = "convergence")]
        out: PathBuf,
    },
    /// Serve a directory of artifacts over HTTP.
    Serve {
        #[arg(long, default_value = "runs")]
        dir: PathBuf,
        /// 0 picks a free port; the bound address is printed either way.
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: std::net::IpAddr,
    },
}

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    fn validation(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_VALIDATION,
            message: message.into(),
        }
    }

    fn runtime(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_RUNTIME,
            message: message.into(),
        }
    }
}

impl From<mobss::Error> for Failure {
    fn from(e: mobss::Error) -> Self {
        if e.is_validation() {
            Failure::validation(e.to_string())
        } else {
            Failure::runtime(e.to_string())
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::from(EXIT_OK),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

pub fn execute(command: Command) -> Result<(), Failure> {
    match command {
        Command::Run { config, out, seed } => {
            let (path, artifact) = harness::cmd_run(config.as_deref(), &out, seed)?;
            println!(
                "wrote {} ({} solutions, tau {:?})",
                path.display(),
                artifact.final_archive.len(),
                artifact.detected_tau
            );
        }
        Command::Evaluate {
            artifact,
            sources,
            out,
            order_by,
        } => {
            let report = harness::cmd_evaluate(&artifact, sources.as_deref(), &out, order_by)?;
            println!(
                "wrote {} (best member {}, worst member {})",
                out.join("report.json").display(),
                report.best_index,
                report.worst_index
            );
        }
        Command::Sweep { config, out, seed } => {
            let result = harness::cmd_sweep(config.as_deref(), &out, seed)?;
            println!(
                "wrote {} ({} cells, {} failed)",
                out.join("sweep.json").display(),
                result.cells.len(),
                result.failures.len()
            );
        }
        Command::Convergence { artifact, out } => {
            let path = harness::cmd_convergence(&artifact, &out)?;
            println!("wrote {}", path.display());
        }
        Command::Serve { dir, port, host } => serve(&dir, SocketAddr::new(host, port))?,
    }
    Ok(())
}

fn serve(dir: &Path, addr: SocketAddr) -> Result<(), Failure> {
    if !dir.is_dir() {
        return Err(Failure::validation(format!(
            "{}: not a readable directory",
            dir.display()
        )));
    }
    let explorer = Explorer::open(dir).map_err(|e| Failure::validation(e.to_string()))?;
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| Failure::runtime(format!("cannot start runtime: {e}")))?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind(addr)
            .await
            .map_err(|e| Failure::runtime(format!("cannot bind {addr}: {e}")))?;
        let local = listener
            .local_addr()
            .map_err(|e| Failure::runtime(e.to_string()))?;
        println!("serving {} on http://{local}", dir.display());
        axum::serve(listener, server::router(explorer))
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
            .map_err(|e| Failure::runtime(format!("server error: {e}")))
    })
}
