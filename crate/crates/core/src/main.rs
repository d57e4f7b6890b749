use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use frameshrink::experiment::{self, ExperimentConfig, Mode};
use frameshrink::Error;

/// Tight-frame denoising experiments with CSV output.
#[derive(Debug, Parser)]
#[command(name = "frameshrink", version)]
struct Cli {
    /// denoise1d, denoise2d, sweep_sigma, sweep_lambda, compare or verify
    mode: Mode,
    /// key = value config file
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    sigma: Option<f64>,
    /// Fixed beta for every method (skips tuning)
    #[arg(long)]
    beta: Option<f64>,
    /// ADMM penalty parameter (must exceed 1/r)
    #[arg(long)]
    mu: Option<f64>,
    /// Output CSV path; stdout when absent
    #[arg(long)]
    out: Option<PathBuf>,
    /// Omit the timestamp line and zero wall-clock columns
    #[arg(long)]
    no_timestamp: bool,
    /// Extra config entries, e.g. --set trials=3
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl Cli {
    fn overrides(&self) -> Result<Vec<(String, String)>, Error> {
        let mut out = Vec::new();
        for item in &self.set {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got '{item}'")))?;
            out.push((k.trim().to_string(), v.trim().to_string()));
        }
        let flags = [
            ("seed", self.seed.map(|v| v.to_string())),
            ("sigma", self.sigma.map(|v| v.to_string())),
            ("beta", self.beta.map(|v| v.to_string())),
            ("mu", self.mu.map(|v| v.to_string())),
            ("out", self.out.as_ref().map(|p| p.display().to_string())),
            ("timestamp", self.no_timestamp.then(|| "false".to_string())),
        ];
        out.extend(
            flags
                .into_iter()
                .filter_map(|(k, v)| v.map(|v| (k.to_string(), v))),
        );
        Ok(out)
    }
}

fn run(cli: &Cli) -> Result<bool, Error> {
    let cfg = ExperimentConfig::load(cli.mode, cli.config.as_deref(), &cli.overrides()?)?;
    let output = experiment::run(&cfg)?;
    match &cfg.out {
        Some(path) => std::fs::write(path, &output.csv).map_err(|source| Error::Io {
            path: path.clone(),
            source,
        })?,
        None => print!("{}", output.csv),
    }
    Ok(output.success)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("frameshrink: some checks or runs failed; see the CSV");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("frameshrink: {e}");
            ExitCode::from(2)
        }
    }
}
