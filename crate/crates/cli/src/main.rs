use std::process::ExitCode;

use clap::Parser;
use hawkes_cli::files::{write_json, Manifest};
use hawkes_cli::{run, Cli, CliError, Outcome};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("could not size the thread pool: {e}");
        }
    }
    let seed = cli.seed.unwrap_or_else(rand::random);
    let result = std::fs::create_dir_all(&cli.out_dir)
        .map_err(|e| CliError::io(&cli.out_dir, e))
        .and_then(|_| run(&cli.command, &cli.out_dir, seed));
    let code = result.as_ref().err().map_or(0, CliError::exit_code);
    if let Err(e) = &result {
        eprintln!("error: {e}");
    }
    let (error, outcome) = match result {
        Ok(o) => (None, o),
        Err(e) => (Some(e.to_string()), Outcome::default()),
    };
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        command: cli.command.name().to_string(),
        argv,
        config: outcome.config,
        seeds: {
            let mut seeds = outcome.seeds;
            if !seeds.is_object() {
                seeds = serde_json::json!({});
            }
            seeds["master"] = seed.into();
            seeds
        },
        outputs: outcome.outputs,
        summary: outcome.summary,
        status: if code == 0 { "ok".into() } else { "error".into() },
        exit_code: code,
        error,
    };
    if cli.out_dir.is_dir() {
        if let Err(e) = write_json(&cli.out_dir.join("manifest.json"), &manifest) {
            eprintln!("error: {e}");
        }
    }
    ExitCode::from(code as u8)
}
