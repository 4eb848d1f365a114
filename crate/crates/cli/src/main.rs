mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

const SCHEMAS: &str = "\
File schemas:
  venue database     JSON lines, one venue per line
  corpus             JSON lines, header record with version 1
  model checkpoint   binary, magic DPNPARAM, format version 1
  SL metrics         CSV: epoch,train_loss,valid_loss,f1_dia_act,f1_query,f1_offer
  RL curve           CSV: dialogues,ser,success_rate,mean_return,mean_turns
  success table      CSV: ser,n,success_rate,std_error,mean_turns,mean_return
  service logs       JSON lines (sessions.jsonl, ratings.jsonl), version 1
  config files       flat `key = value` lines, `#` comments

Exit codes: 0 ok, 2 usage or configuration, 3 data or I/O, 4 numeric failure.";

#[derive(Debug, Parser)]
#[command(name = "dpn", version, about = "Neural dialogue policy: supervised pretraining, RL, evaluation and serving", after_help = SCHEMAS)]
pub struct Cli {
    /// Worker threads for rollouts and evaluation (default 1); results do not depend on it
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Ontology JSON file; the built-in restaurant ontology by default
    #[arg(long, global = true)]
    pub ontology: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic venue database
    GenDb(GenDb),
    /// Generate a labelled corpus by running the rule baseline against the simulator
    GenCorpus(GenCorpus),
    /// Supervised training on a corpus
    TrainSl(TrainSl),
    /// Reinforcement learning against the simulated user
    TrainRl(TrainRl),
    /// Offline RL on rated service dialogues whose rating matches the objective check
    TrainHuman(TrainHuman),
    /// Greedy task success at several error rates
    Eval(Eval),
    /// Weighted F-measures of every head on a corpus split
    EvalF1(EvalF1),
    /// Start the HTTP dialogue service
    Serve(Serve),
    /// Chat with a model in the terminal
    Chat(Chat),
}

#[derive(Debug, Args)]
pub struct GenDb {
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = dpn_core::db::DEFAULT_VENUES)]
    pub n: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct GenCorpus {
    #[arg(long)]
    pub db: PathBuf,
    #[arg(long, default_value_t = 720)]
    pub n: usize,
    /// Semantic error rate; overrides `ser` in the config file
    #[arg(long)]
    pub ser: Option<f64>,
    #[arg(long)]
    pub seed: u64,
    /// Error-model, user and baseline keys
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainSl {
    #[arg(long)]
    pub corpus: PathBuf,
    /// SL keys: learning_rate, adagrad_epsilon, max_epochs, patience, seed
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub max_epochs: Option<usize>,
    #[arg(long)]
    pub patience: Option<usize>,
    #[arg(long)]
    pub out_model: PathBuf,
    #[arg(long)]
    pub metrics: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainRl {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub db: PathBuf,
    #[arg(long)]
    pub ser: Option<f64>,
    #[arg(long)]
    pub dialogues: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// enac or reinforce
    #[arg(long)]
    pub algorithm: Option<String>,
    /// RL, error-model and user keys
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out_model: PathBuf,
    #[arg(long)]
    pub curve: PathBuf,
    /// gnuplot data file; defaults to the curve path with extension .dat
    #[arg(long)]
    pub plot: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainHuman {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub db: PathBuf,
    /// Directory holding sessions.jsonl and ratings.jsonl
    #[arg(long)]
    pub logs: PathBuf,
    #[arg(long, default_value_t = 100)]
    pub updates: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    /// RL keys
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out_model: PathBuf,
}

#[derive(Debug, Args)]
pub struct Eval {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub db: PathBuf,
    /// Comma-separated error rates
    #[arg(long, value_delimiter = ',', default_values_t = dpn_core::eval::DEFAULT_SERS)]
    pub ser_list: Vec<f64>,
    #[arg(long, default_value_t = 500)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Error-model and user keys
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// CSV output; the table is always printed
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalF1 {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub corpus: PathBuf,
    /// train, valid or test
    #[arg(long, default_value = "test")]
    pub split: String,
}

#[derive(Debug, Args)]
pub struct Serve {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub db: PathBuf,
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    /// Log directory for sessions.jsonl and ratings.jsonl
    #[arg(long)]
    pub log: PathBuf,
    /// Directory of static files (the chat client)
    #[arg(long)]
    pub static_dir: Option<PathBuf>,
    #[arg(long, default_value_t = 256)]
    pub capacity: usize,
    /// Bearer token required on rating requests
    #[arg(long, env = "DPN_RATING_TOKEN")]
    pub rating_token: Option<String>,
}

#[derive(Debug, Args)]
pub struct Chat {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub db: PathBuf,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] dpn_core::Error),
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        use dpn_core::Error as E;
        match self {
            CliError::Usage(_) | CliError::Core(E::Config(_)) => 2,
            CliError::Core(E::Numeric(_)) => 4,
            CliError::Core(_) => 3,
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
