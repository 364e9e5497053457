use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use mqchan::codec::{CodeOptions, StrongConverseOptions};
use mqchan::discrimination::SearchConfig;
use mqchan_cli::*;

#[derive(Parser)]
#[command(name = "mqchan", version, about = "Capacity tools for quantum channels with Markovian noise")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// Write the table here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Text,
}

#[derive(Args)]
struct Blocks {
    /// Block lengths, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    n: Vec<usize>,
    /// Use every block length from 1 to this value instead of --n.
    #[arg(long)]
    n_max: Option<usize>,
}

impl Blocks {
    fn list(&self) -> Vec<usize> {
        match self.n_max {
            Some(m) => (1..=m).collect(),
            None => self.n.clone(),
        }
    }
}

#[derive(Args)]
struct Coding {
    #[arg(long)]
    rate: f64,
    #[command(flatten)]
    blocks: Blocks,
    #[arg(long)]
    seed: u64,
    /// Number of consecutive seeds (codebooks) per block length.
    #[arg(long, default_value_t = 1)]
    seeds: usize,
    #[arg(long, default_value_t = 4)]
    restarts: usize,
    #[arg(long, value_enum, default_value_t = LetterEnsemble::Basis)]
    ensemble: LetterEnsemble,
    /// Probe blocks per branch pair in the preamble.
    #[arg(long, default_value_t = 4)]
    preamble_m: usize,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Largest block length at which capacity is optimized for the Fano column.
    #[arg(long, default_value_t = 3)]
    capacity_n: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum LetterEnsemble {
    Basis,
    Optimal,
}

impl Coding {
    fn to_args(&self) -> SimulateArgs {
        SimulateArgs {
            rate: self.rate,
            ns: self.blocks.list(),
            seed: self.seed,
            seeds: self.seeds,
            ensemble: match self.ensemble {
                LetterEnsemble::Basis => EnsembleChoice::Basis,
                LetterEnsemble::Optimal => EnsembleChoice::Optimal,
            },
            optimizer: optimizer_config(self.seed, self.restarts),
            code: CodeOptions {
                preamble_m: self.preamble_m,
                alpha: self.alpha,
                search: SearchConfig { seed: self.seed, ..SearchConfig::default() },
            },
            capacity_n: self.capacity_n,
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Communicating classes of the chain.
    Classes {
        #[arg(long)]
        spec: PathBuf,
    },
    /// Optimized per-class mean Holevo quantities.
    Capacity {
        #[arg(long)]
        spec: PathBuf,
        #[command(flatten)]
        blocks: Blocks,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 16)]
        restarts: usize,
    },
    /// Fidelity decay and Helstrom splits for every branch pair.
    Discriminate {
        #[arg(long)]
        spec: PathBuf,
        /// Largest number of probe blocks.
        #[arg(long, default_value_t = 6)]
        n_max: usize,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long)]
        seed: u64,
        /// Report preamble identification probabilities instead.
        #[arg(long)]
        identify: bool,
        /// Identification target is 1 − delta.
        #[arg(long, default_value_t = 0.1)]
        delta: f64,
    },
    /// Exact error of random codes.
    Simulate {
        #[arg(long)]
        spec: PathBuf,
        #[command(flatten)]
        coding: Coding,
    },
    /// Simulated error against the Fano lower bound (rate above capacity).
    Converse {
        #[arg(long)]
        spec: PathBuf,
        #[command(flatten)]
        coding: Coding,
    },
    /// Error of a two-map convex combination coded between the two capacities.
    StrongConverse {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        rate: f64,
        #[command(flatten)]
        blocks: Blocks,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 4)]
        restarts: usize,
        #[arg(long, default_value_t = 4)]
        preamble_m: usize,
    },
    /// Coverage of the typical set of a probability vector.
    Typical {
        #[arg(long, value_delimiter = ',', required = true)]
        probs: Vec<f64>,
        #[arg(long, default_value_t = 0.1)]
        eps: f64,
        #[arg(long, default_value_t = 0.2)]
        delta: f64,
        #[arg(long, default_value_t = 50)]
        n_max: usize,
    },
}

fn run(cli: &Cli) -> Result<Table> {
    match &cli.cmd {
        Cmd::Classes { spec } => Ok(cmd_classes(&load_channel_file(spec)?)),
        Cmd::Capacity { spec, blocks, seed, restarts } => {
            cmd_capacity(&load_channel_file(spec)?, &blocks.list(), &optimizer_config(*seed, *restarts))
        }
        Cmd::Discriminate { spec, n_max, alpha, seed, identify, delta } => {
            let ch = load_channel_file(spec)?;
            if *identify {
                cmd_identify(&ch, *n_max, *alpha, *delta, *seed)
            } else {
                cmd_discriminate(&ch, *n_max, *alpha, *seed)
            }
        }
        Cmd::Simulate { spec, coding } => cmd_simulate(&load_channel_file(spec)?, &coding.to_args()),
        Cmd::Converse { spec, coding } => cmd_converse(&load_channel_file(spec)?, &coding.to_args()),
        Cmd::StrongConverse { spec, rate, blocks, seed, restarts, preamble_m } => {
            let opts = StrongConverseOptions {
                code: CodeOptions {
                    preamble_m: *preamble_m,
                    search: SearchConfig { seed: *seed, ..SearchConfig::default() },
                    ..CodeOptions::default()
                },
                optimizer: optimizer_config(*seed, *restarts),
                seed: *seed,
                ..StrongConverseOptions::default()
            };
            cmd_strong_converse(&load_channel_file(spec)?, *rate, &blocks.list(), &opts)
        }
        Cmd::Typical { probs, eps, delta, n_max } => cmd_typical(probs, *eps, *delta, *n_max),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = run(&cli).and_then(|table| {
        let text = match cli.format {
            Format::Csv => table.to_csv(),
            Format::Text => table.to_text(),
        };
        match &cli.out {
            Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display())),
            None => {
                print!("{text}");
                Ok(())
            }
        }
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
