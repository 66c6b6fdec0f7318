use std::path::PathBuf;
use std::process::ExitCode;

use adrcm_cli::{run_to_dir, Config, ConfigError, Kind, RunError};
use clap::{Parser, ValueEnum};

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Verb {
    Grow,
    Palm,
    ClusteringSweep,
    EdgeLength,
    Degree,
    Heatmap,
    Oracle,
}

impl From<Verb> for Kind {
    fn from(v: Verb) -> Kind {
        match v {
            Verb::Grow => Kind::Grow,
            Verb::Palm => Kind::Palm,
            Verb::ClusteringSweep => Kind::ClusteringSweep,
            Verb::EdgeLength => Kind::EdgeLength,
            Verb::Degree => Kind::Degree,
            Verb::Heatmap => Kind::Heatmap,
            Verb::Oracle => Kind::Oracle,
        }
    }
}

/// Run an experiment and write CSV tables plus manifest.json.
///
/// Exit status: 0 on success, 2 on configuration errors, 3 on runtime failures.
#[derive(Debug, Parser)]
#[command(name = "adrcm", version)]
struct Cli {
    verb: Verb,

    /// TOML configuration file; every key has a default.
    #[arg(short, long)]
    config: Option<PathBuf>,

    /// Override a configuration key, e.g. `--set model.beta=0.7`.
    #[arg(short = 's', long = "set", value_name = "SECTION.KEY=VALUE")]
    overrides: Vec<String>,

    /// Output directory; defaults to `run.output`.
    #[arg(short, long)]
    out: Option<PathBuf>,

    /// Print the effective configuration and exit.
    #[arg(long)]
    print_config: bool,
}

fn load(cli: &Cli) -> Result<Config, ConfigError> {
    let text = match &cli.config {
        Some(path) => std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.display().to_string(),
            source,
        })?,
        None => String::new(),
    };
    let kind: Kind = cli.verb.into();
    let mut overrides = vec![format!("experiment.kind=\"{kind}\"")];
    overrides.extend(cli.overrides.iter().cloned());
    Config::parse(&text, &overrides)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = match load(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("adrcm: {e}");
            return ExitCode::from(2);
        }
    };
    if cli.print_config {
        print!("{}", config.to_toml());
        return ExitCode::SUCCESS;
    }
    let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from(&config.run.output));
    match run_to_dir(&config, &dir) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(RunError::Config(e)) => {
            eprintln!("adrcm: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("adrcm: {e}");
            ExitCode::from(3)
        }
    }
}
