use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use metro_cli::commands::{
    cmd_bootstrap, cmd_demo_two_state, cmd_mle, cmd_run, cmd_run_compare, cmd_summarize,
    SummarizeArgs,
};
use metro_cli::config::{self, parse_config, RunConfig, DEFAULT_INCIDENCE};
use metro_cli::CliError;

/// Metropolis MCMC for case-control logistic models.
#[derive(Parser)]
#[command(name = "metro", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Metropolis chain and write chain/summary/trace artifacts.
    Run(Box<RunArgs>),
    /// Closed-form 2x2 maximum likelihood report.
    Mle(MleArgs),
    /// Stratified case-control bootstrap of the 2x2 MLE.
    Bootstrap(BootstrapArgs),
    /// Two-state Metropolis stationarity demonstration.
    DemoTwoState(TwoStateArgs),
    /// Recompute summaries from an emitted chain CSV.
    Summarize(SummarizeCliArgs),
}

/// Flags mirror the config-file keys and override the file.
#[derive(Args)]
struct RunArgs {
    /// Path to a `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    data: Option<PathBuf>,
    /// random-walk | guided | guided-adaptive
    #[arg(long)]
    variant: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    iterations: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    burnin: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    adapt_interval: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    seed: Option<String>,
    #[arg(long)]
    proposal_beta0: Option<String>,
    #[arg(long)]
    proposal_beta1: Option<String>,
    /// flat | normal(mean, variance)
    #[arg(long)]
    prior_beta0: Option<String>,
    #[arg(long)]
    prior_beta1: Option<String>,
    #[arg(long)]
    incidence: Option<String>,
    #[arg(long)]
    exposure_prevalence: Option<String>,
    /// anchored | per-draw
    #[arg(long)]
    offset_policy: Option<String>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Keep every k-th trace-plot point.
    #[arg(long, allow_hyphen_values = true)]
    thin: Option<String>,
    /// Trace-plot window `start:end` (1-based retained iterations).
    #[arg(long)]
    window: Option<String>,
    /// Run all three variants concurrently (seeds seed, seed+1, seed+2).
    #[arg(long)]
    compare: bool,
}

#[derive(Args)]
struct MleArgs {
    #[arg(long, default_value = "data/leukemia.csv")]
    data: PathBuf,
    #[arg(long, default_value_t = DEFAULT_INCIDENCE)]
    incidence: f64,
    #[arg(long)]
    exposure_prevalence: Option<f64>,
}

#[derive(Args)]
struct BootstrapArgs {
    #[arg(long, default_value = "data/leukemia.csv")]
    data: PathBuf,
    /// Number of bootstrap resamples.
    #[arg(long = "b", default_value_t = 1000)]
    b: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Args)]
struct TwoStateArgs {
    /// Mass of state b relative to state a.
    #[arg(long, default_value_t = 2.0)]
    ratio: f64,
    #[arg(long, default_value_t = 100_000)]
    steps: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Args)]
struct SummarizeCliArgs {
    /// Chain CSV produced by `run`.
    chain: PathBuf,
    /// Fixed risk-difference offset (as echoed in report.txt).
    #[arg(long)]
    offset: Option<f64>,
    /// anchored | per-draw; resolves the offset from --data.
    #[arg(long)]
    offset_policy: Option<String>,
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_INCIDENCE)]
    incidence: f64,
    #[arg(long)]
    exposure_prevalence: Option<f64>,
}

fn usage(key: &str, e: String) -> CliError {
    CliError::Usage(format!("--{key}: {e}"))
}

/// Applies command-line overrides on top of the config file (or defaults).
fn merged_run_config(args: &RunArgs) -> Result<RunConfig, CliError> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                CliError::Usage(format!("cannot read config {}: {e}", path.display()))
            })?;
            parse_config(&text)?
        }
        None => RunConfig::default(),
    };
    if let Some(v) = &args.data {
        cfg.data = v.clone();
    }
    if let Some(v) = &args.variant {
        cfg.variant = config::parse_variant(v).map_err(|e| usage("variant", e))?;
    }
    if let Some(v) = &args.iterations {
        cfg.iterations = config::parse_positive_int(v).map_err(|e| usage("iterations", e))?;
    }
    if let Some(v) = &args.burnin {
        cfg.burnin = config::parse_non_negative_int(v).map_err(|e| usage("burnin", e))?;
    }
    if let Some(v) = &args.adapt_interval {
        cfg.adapt_interval =
            config::parse_positive_int(v).map_err(|e| usage("adapt-interval", e))?;
    }
    if let Some(v) = &args.seed {
        cfg.seed = config::parse_seed(v).map_err(|e| usage("seed", e))?;
    }
    if let Some(v) = &args.proposal_beta0 {
        cfg.proposal_variances[0] =
            config::parse_positive_variance(v).map_err(|e| usage("proposal-beta0", e))?;
    }
    if let Some(v) = &args.proposal_beta1 {
        cfg.proposal_variances[1] =
            config::parse_positive_variance(v).map_err(|e| usage("proposal-beta1", e))?;
    }
    if let Some(v) = &args.prior_beta0 {
        cfg.priors[0] = config::parse_prior(v).map_err(|e| usage("prior-beta0", e))?;
    }
    if let Some(v) = &args.prior_beta1 {
        cfg.priors[1] = config::parse_prior(v).map_err(|e| usage("prior-beta1", e))?;
    }
    if let Some(v) = &args.incidence {
        cfg.incidence = config::parse_probability(v, true).map_err(|e| usage("incidence", e))?;
    }
    if let Some(v) = &args.exposure_prevalence {
        cfg.exposure_prevalence =
            Some(config::parse_probability(v, false).map_err(|e| usage("exposure-prevalence", e))?);
    }
    if let Some(v) = &args.offset_policy {
        cfg.offset_policy =
            config::parse_offset_policy(v).map_err(|e| usage("offset-policy", e))?;
    }
    if let Some(v) = &args.output_dir {
        cfg.output_dir = v.clone();
    }
    if let Some(v) = &args.thin {
        cfg.thin = config::parse_positive_int(v).map_err(|e| usage("thin", e))?;
    }
    if let Some(v) = &args.window {
        cfg.window = Some(config::parse_window(v).map_err(|e| usage("window", e))?);
    }
    Ok(cfg)
}

fn dispatch(cli: Cli) -> Result<String, CliError> {
    match cli.command {
        Command::Run(args) => {
            let cfg = merged_run_config(&args)?;
            if args.compare {
                cmd_run_compare(&cfg)
            } else {
                cmd_run(&cfg)
            }
        }
        Command::Mle(args) => cmd_mle(&args.data, args.incidence, args.exposure_prevalence),
        Command::Bootstrap(args) => cmd_bootstrap(&args.data, args.b, args.seed),
        Command::DemoTwoState(args) => cmd_demo_two_state(args.ratio, args.steps, args.seed),
        Command::Summarize(args) => {
            let offset_policy = args
                .offset_policy
                .as_deref()
                .map(config::parse_offset_policy)
                .transpose()
                .map_err(|e| usage("offset-policy", e))?;
            cmd_summarize(&SummarizeArgs {
                chain_path: &args.chain,
                offset: args.offset,
                offset_policy,
                data: args.data.as_deref(),
                incidence: args.incidence,
                exposure_prevalence: args.exposure_prevalence,
            })
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(output) => {
            print!("{output}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
