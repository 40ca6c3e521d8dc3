mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

/// Input or configuration problem; exits with status 2.
#[derive(Debug)]
pub struct Usage(pub String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

#[derive(Parser)]
#[command(name = "rbfpca", version, about = "Robust Bayesian functional principal component analysis")]
struct Cli {
    /// Worker threads; 1 runs the serial reference path.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Repeat for more log output.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Default)]
pub struct Common {
    /// TOML configuration; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub particles: Option<usize>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct ModelFlags {
    /// Dense (`t,<times>`) or sparse (`curve_id,t,y`) CSV.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// SN, ST or MM.
    #[arg(long)]
    pub variant: Option<String>,
    #[arg(long)]
    pub p: Option<usize>,
    #[arg(long)]
    pub k: Option<usize>,
    /// gauss3, gauss1, brownian_shift or product_shift.
    #[arg(long)]
    pub prior: Option<String>,
    /// Prior covariance surface as a CSV.
    #[arg(long, conflicts_with = "prior")]
    pub prior_file: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Fit one model and write the result, outlier, diagnostic and evidence files.
    Fit {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        model: ModelFlags,
        /// χ² level for the outlier table.
        #[arg(long)]
        level: Option<f64>,
    },
    /// Fit several variants on the same data and rank them by log evidence.
    Compare {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        model: ModelFlags,
        /// Comma-separated, e.g. SN,ST,MM.
        #[arg(long, value_delimiter = ',')]
        variants: Vec<String>,
    },
    /// Flag or rank curves of a saved fit by robust distance.
    Detect {
        #[command(flatten)]
        common: Common,
        /// fpca_result.json written by `fit`.
        #[arg(long)]
        result: PathBuf,
        #[arg(long)]
        level: Option<f64>,
        #[arg(long)]
        top_k: Option<usize>,
    },
    /// Generate a dataset and its truth record.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// I, II, III, IV or V.
        #[arg(long)]
        study: Option<String>,
    },
    /// Run replicates of a study and write a results table.
    Bench {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        study: Option<String>,
        #[arg(long)]
        replicates: Option<usize>,
        #[arg(long)]
        level: Option<f64>,
    },
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<Usage>() || cause.is::<toml::de::Error>() || cause.is::<serde_json::Error>() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<rbfpca::Error>() {
            use rbfpca::Error::*;
            return match e {
                Validation(_) | DimensionMismatch(_) | InsufficientData(_) | Parse(_) | Domain(_) => 2,
                _ => 1,
            };
        }
    }
    1
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    if let Some(t) = cli.threads {
        if t == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            log::warn!("thread pool already initialized: {e}");
        }
    }
    let serial = cli.threads == Some(1);
    let res = match cli.command {
        Command::Fit { common, model, level } => commands::fit(&common, &model, level, serial),
        Command::Compare { common, model, variants } => commands::compare(&common, &model, &variants, serial),
        Command::Detect { common, result, level, top_k } => commands::detect(&common, &result, level, top_k),
        Command::Simulate { common, study } => commands::simulate(&common, study.as_deref()),
        Command::Bench { common, study, replicates, level } => {
            commands::bench(&common, study.as_deref(), replicates, level, serial)
        }
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
