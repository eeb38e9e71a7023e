mod serve;

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use tpo_core::station::{
    replay, report_from_log, run_headless, Condition, ConfigSnapshot, Script, TrialLog,
    DEFAULT_HTTP_PORT, DEFAULT_TCP_PORT,
};

#[derive(Parser)]
#[command(
    name = "tpo",
    version,
    about = "Virtual-rope teleoperation: live sessions, headless runs, replay"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a live session: JSON-lines over TCP, WebSocket bridge and UI over HTTP.
    Serve {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides the condition in the config file.
        #[arg(long)]
        condition: Option<Condition>,
        /// TCP port for JSON-lines clients.
        #[arg(long, default_value_t = DEFAULT_TCP_PORT)]
        port: u16,
        /// HTTP port for `/ws` and the static UI.
        #[arg(long, default_value_t = DEFAULT_HTTP_PORT)]
        http_port: u16,
        #[arg(long, default_value = "ui/dist")]
        ui_dir: PathBuf,
        /// Trial log path.
        #[arg(long, default_value = "session.jsonl")]
        log: PathBuf,
        /// Stop after this many seconds of session time.
        #[arg(long)]
        duration: Option<f64>,
    },
    /// Run an operator script through the stack as fast as possible.
    Headless {
        #[arg(long)]
        script: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        condition: Option<Condition>,
        #[arg(long, default_value = "trial.jsonl")]
        out: PathBuf,
    },
    /// Re-run a trial log and compare every output frame.
    Replay {
        #[arg(long)]
        log: PathBuf,
        /// Replay under a different configuration instead of the logged one.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Print the trial report of a log as JSON.
    Report {
        #[arg(long)]
        log: PathBuf,
    },
}

fn load_config(path: Option<&Path>, condition: Option<Condition>) -> Result<ConfigSnapshot> {
    let config = match path {
        Some(p) => ConfigSnapshot::load(p).with_context(|| format!("loading {}", p.display()))?,
        None => ConfigSnapshot::shipped(Condition::C),
    };
    Ok(match condition {
        Some(c) => config.with_condition(c),
        None => config,
    })
}

/// Accepts a script path with or without its `.json` extension.
fn resolve_script(path: &Path) -> PathBuf {
    if path.exists() {
        return path.to_owned();
    }
    let mut with_ext = path.as_os_str().to_owned();
    with_ext.push(".json");
    PathBuf::from(with_ext)
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    tracing_subscriber::fmt()
        .with_writer(std::io::stderr)
        .init();
    match cli.command {
        Cmd::Serve {
            config,
            condition,
            port,
            http_port,
            ui_dir,
            log,
            duration,
        } => {
            let config = load_config(config.as_deref(), condition)?;
            let runtime = tokio::runtime::Runtime::new()?;
            runtime.block_on(serve::serve(serve::ServeOptions {
                config,
                tcp_port: port,
                http_port,
                ui_dir,
                log,
                duration,
            }))
        }
        Cmd::Headless {
            script,
            config,
            condition,
            out,
        } => {
            let config = load_config(config.as_deref(), condition)?;
            let path = resolve_script(&script);
            let text = std::fs::read_to_string(&path)
                .with_context(|| format!("reading {}", path.display()))?;
            let script = Script::parse(&text)?;
            let file = File::create(&out).with_context(|| format!("creating {}", out.display()))?;
            let started = Instant::now();
            let (summary, _) = run_headless(&config, &script, BufWriter::new(file))?;
            let wall = started.elapsed().as_secs_f64();
            print_json(&serde_json::json!({
                "log": out,
                "ticks": summary.ticks,
                "sim_time": summary.sim_time,
                "wall_time": wall,
                "report": summary.report,
            }))
        }
        Cmd::Replay { log, config } => {
            let trial = TrialLog::read(&log)?;
            let config = config.map(|p| load_config(Some(&p), None)).transpose()?;
            let report = replay(&trial, config.as_ref())?;
            print_json(&report)?;
            if !report.is_clean() {
                bail!(
                    "replay diverged: {} frame(s){}",
                    report.divergences.len(),
                    if report.config_mismatch {
                        ", configuration differs"
                    } else {
                        ""
                    }
                );
            }
            Ok(())
        }
        Cmd::Report { log } => {
            let trial = TrialLog::read(&log)?;
            print_json(&report_from_log(&trial)?)
        }
    }
}
