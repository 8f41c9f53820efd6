use calderon_cli::config::{Command, ExperimentConfig};
use calderon_cli::run::run;
use clap::Parser;
use std::path::PathBuf;
use std::process::ExitCode;

/// Local Calderón problem laboratory.
#[derive(Parser, Debug)]
#[command(name = "calderon", version)]
struct Cli {
    /// forward | dn-map | nd-map | singular | recover | sweep | verify
    command: String,
    /// Experiment configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides `out`).
    #[arg(long)]
    out: Option<String>,
    /// Worker threads.
    #[arg(long)]
    threads: Option<usize>,
    /// Mesh size (overrides `h_mesh`).
    #[arg(long = "h-mesh")]
    h_mesh: Option<f64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let fail = |msg: String, code: u8| {
        eprintln!("{msg}");
        ExitCode::from(code)
    };
    let command = match Command::parse(&cli.command) {
        Ok(c) => c,
        Err(e) => return fail(format!("config error: {e}"), 1),
    };
    let mut cfg = match &cli.config {
        Some(path) => match std::fs::read_to_string(path) {
            Ok(text) => match ExperimentConfig::parse(&text) {
                Ok(c) => c,
                Err(e) => return fail(format!("config error: {e}"), 1),
            },
            Err(e) => return fail(format!("config error: cannot read {}: {e}", path.display()), 1),
        },
        None if command == Command::Verify => ExperimentConfig::default(),
        None => return fail("config error: --config is required".into(), 1),
    };
    cfg.command = command;
    if let Some(o) = cli.out {
        cfg.out = o;
    }
    if let Some(h) = cli.h_mesh {
        cfg.h_mesh = h;
    }
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            return fail(format!("config error: {e}"), 1);
        }
    }
    match run(&cfg) {
        Ok(report) => {
            print!("{report}");
            ExitCode::SUCCESS
        }
        Err(e) => fail(e.to_string(), e.exit_code() as u8),
    }
}
