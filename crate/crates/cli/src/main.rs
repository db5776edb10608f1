use std::fs::{self, File};
use std::io::{self, BufWriter, IsTerminal};
use std::net::TcpListener;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use afeis_cli::commands::{self, ExperimentOverrides};
use afeis_cli::repl::Repl;
use afeis_cli::script::{run_frames, run_script};
use afeis_cli::server::Server;
use afeis_cli::{open_session, Exit, Failure};
use afeis_core::wire::Service;

#[derive(Parser)]
#[command(name = "afeis", version, about = "Gesture-driven robot programming sessions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Type gesture IDs or aliases and watch them parse and run.
    Repl {
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Run a script of gesture IDs or aliases.
    Run {
        script: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Treat the file as `timestamp_ms,gesture` frames and confirm them first.
        #[arg(long)]
        frames: bool,
    },
    /// Serve the live session over newline-delimited JSON on TCP.
    Serve {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides the port from the config.
        #[arg(long)]
        port: Option<u16>,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
    },
    /// Run a noisy-stream experiment and write per-cell results as CSV.
    Experiment {
        spec: PathBuf,
        /// Output file; stdout when omitted.
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trials: Option<u64>,
    },
    /// Check keymap files.
    ValidateKeymap {
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(exit) => ExitCode::from(exit.code()),
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.exit.code())
        }
    }
}

fn run(command: Command) -> Result<Exit, Failure> {
    match command {
        Command::Repl { config } => {
            let (_, session) = open_session(config.as_deref())?;
            let stdin = io::stdin();
            let prompt = stdin.is_terminal();
            Repl::new(session)
                .run(stdin.lock(), io::stdout().lock(), prompt)
                .map_err(Failure::invalid)?;
            Ok(Exit::Ok)
        }
        Command::Run {
            script,
            config,
            frames,
        } => {
            let (_, mut session) = open_session(config.as_deref())?;
            let text = fs::read_to_string(&script)
                .map_err(|e| Failure::config(format!("cannot read {}: {e}", script.display())))?;
            let report = if frames {
                run_frames(&mut session, &text)
            } else {
                run_script(&mut session, &text)
            };
            print!("{}", report.render());
            for d in &report.diagnostics {
                eprintln!("{}:{d}", script.display());
            }
            Ok(report.exit())
        }
        Command::Serve { config, port, host } => {
            let (cfg, session) = open_session(config.as_deref())?;
            let port = port.unwrap_or(cfg.port);
            let listener = TcpListener::bind((host.as_str(), port))
                .map_err(|e| Failure::config(format!("cannot listen on {host}:{port}: {e}")))?;
            eprintln!("listening on {}", listener.local_addr().map_err(Failure::config)?);
            Server::new(Service::new(cfg, session))
                .serve(&listener, None)
                .map_err(Failure::config)?;
            Ok(Exit::Ok)
        }
        Command::Experiment {
            spec,
            output,
            seed,
            trials,
        } => {
            let spec = commands::load_spec(&spec, &ExperimentOverrides { seed, trials })?;
            match output {
                Some(path) => {
                    let file = File::create(&path)
                        .map_err(|e| Failure::config(format!("cannot write {}: {e}", path.display())))?;
                    let rows = commands::experiment(&spec, BufWriter::new(file))?;
                    print!("{}", commands::summary(&rows));
                }
                None => {
                    commands::experiment(&spec, io::stdout().lock())?;
                }
            }
            Ok(Exit::Ok)
        }
        Command::ValidateKeymap { files } => {
            let mut exit = Exit::Ok;
            for f in files {
                match commands::validate_keymap(&f) {
                    Ok(report) => print!("{report}"),
                    Err(e) => {
                        eprintln!("{e}");
                        if exit == Exit::Ok || e.exit == Exit::Config {
                            exit = e.exit;
                        }
                    }
                }
            }
            Ok(exit)
        }
    }
}
