//! `gcn-kfac`: train GCNs on graph bundles and export metrics.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gcn_kfac::data::save_bundle;
use gcn_kfac::data::synthetic::{generate, SyntheticConfig};
use gcn_kfac::harness::{run_experiment, AggregateReport, Summary};
use gcn_kfac::kfac::{KfacMode, Weighting};
use gcn_kfac::{ExperimentConfig, KfacConfig, OptimizerConfig, SplitId};

#[derive(Parser)]
#[command(name = "gcn-kfac", version, about = "Graph convolutional networks with KFAC preconditioning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train on a bundle for several seeds and write per-run metrics.
    Train(TrainArgs),
    /// Write a synthetic citation-like bundle.
    Synth(SynthArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum OptimizerArg {
    Sgd,
    Adam,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum KfacArg {
    Off,
    /// Labeled nodes only.
    Eps,
    /// Labeled plus pseudo-labeled nodes on the lambda schedule.
    Gamma,
}

#[derive(Clone, Copy, ValueEnum)]
enum WeightingArg {
    Pooled,
    Cost,
}

#[derive(Args)]
struct TrainArgs {
    /// Bundle directory.
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long, default_value = "1", value_parser = parse_split)]
    split: SplitId,
    #[arg(long, value_enum, default_value = "adam")]
    optimizer: OptimizerArg,
    #[arg(long, value_enum, default_value = "off")]
    kfac: KfacArg,
    #[arg(long, default_value_t = 0.01)]
    epsilon: f64,
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    #[arg(long, default_value_t = 50)]
    update_every: usize,
    /// Factors are damped by epsilon^EXP.
    #[arg(long, default_value_t = -0.5, allow_hyphen_values = true)]
    damping_exponent: f64,
    #[arg(long, value_enum, default_value = "pooled")]
    weighting: WeightingArg,
    #[arg(long, default_value_t = 200)]
    epochs: usize,
    #[arg(long, default_value_t = 0.01)]
    lr: f64,
    #[arg(long, default_value_t = 64)]
    hidden: usize,
    #[arg(long, default_value_t = 0.5)]
    dropout: f64,
    /// Defaults to 5e-4 for Adam and 0 for SGD.
    #[arg(long)]
    weight_decay: Option<f64>,
    /// Apply weight decay to the first layer only.
    #[arg(long)]
    decay_first_layer_only: bool,
    /// SGD momentum.
    #[arg(long, default_value_t = 0.9)]
    momentum: f64,
    #[arg(long, value_delimiter = ',', default_value = "0,1,2,3,4,5,6,7,8,9")]
    seeds: Vec<u64>,
    /// Drop the bias column from every layer.
    #[arg(long)]
    no_bias: bool,
    /// Directory for run_<seed>.csv, curves.csv and report.json.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 600)]
    nodes: usize,
    #[arg(long, default_value_t = 4)]
    classes: usize,
    #[arg(long, default_value_t = 200)]
    features: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 5)]
    train_per_class: usize,
    #[arg(long, default_value_t = 150)]
    val: usize,
    #[arg(long, default_value_t = 250)]
    test: usize,
    #[arg(long, default_value_t = 4.0)]
    avg_degree: f64,
    /// Distinct words per node.
    #[arg(long, default_value_t = 12)]
    words: usize,
    /// Probability that an edge stays inside its class.
    #[arg(long, default_value_t = 0.8)]
    homophily: f64,
    /// Probability that a word comes from the node's class vocabulary.
    #[arg(long, default_value_t = 0.35)]
    topic_strength: f64,
    #[arg(long)]
    name: Option<String>,
}

fn parse_split(s: &str) -> Result<SplitId, String> {
    s.parse().map_err(|e: gcn_kfac::Error| e.to_string())
}

impl TrainArgs {
    fn to_config(&self) -> ExperimentConfig {
        let optimizer = match self.optimizer {
            OptimizerArg::Adam => OptimizerConfig::adam(),
            OptimizerArg::Sgd => OptimizerConfig { momentum: self.momentum, ..OptimizerConfig::sgd() },
        };
        let optimizer = OptimizerConfig {
            learning_rate: self.lr,
            weight_decay: self.weight_decay.unwrap_or(optimizer.weight_decay),
            decay_all_layers: !self.decay_first_layer_only,
            ..optimizer
        };
        let kfac = (self.kfac != KfacArg::Off).then(|| KfacConfig {
            epsilon: self.epsilon,
            gamma: self.gamma,
            mode: if self.kfac == KfacArg::Gamma {
                KfacMode::PseudoLabel
            } else {
                KfacMode::LabeledOnly
            },
            update_every: self.update_every,
            weighting: match self.weighting {
                WeightingArg::Pooled => Weighting::Pooled,
                WeightingArg::Cost => Weighting::CostConsistent,
            },
            damping_exponent: self.damping_exponent,
        });
        ExperimentConfig {
            kfac,
            epochs: self.epochs,
            hidden: self.hidden,
            dropout: self.dropout,
            bias: !self.no_bias,
            seeds: self.seeds.clone(),
            out: self.out.clone(),
            ..ExperimentConfig::new(&self.dataset, self.split, optimizer)
        }
    }
}

fn pct(s: &Summary) -> String {
    match s.half_width {
        Some(h) => format!("{:.2} ± {:.2}", 100.0 * s.mean, 100.0 * h),
        None => format!("{:.2}", 100.0 * s.mean),
    }
}

fn print_report(r: &AggregateReport) {
    println!(
        "{} on {} (split {}), {} run(s): test accuracy {}%, best val cost {:.4}, {:.0} ms/run",
        r.method,
        r.dataset,
        r.split,
        r.runs,
        pct(&r.test_accuracy),
        r.best_val_cost.mean,
        r.total_ms.mean
    );
}

fn run(cli: Cli) -> gcn_kfac::Result<()> {
    match cli.command {
        Command::Train(args) => {
            let report = run_experiment(&args.to_config())?;
            print_report(&report);
        }
        Command::Synth(args) => {
            let cfg = SyntheticConfig {
                nodes: args.nodes,
                classes: args.classes,
                features: args.features,
                seed: args.seed,
                train_per_class: args.train_per_class,
                val: args.val,
                test: args.test,
                avg_degree: args.avg_degree,
                words_per_node: args.words,
                homophily: args.homophily,
                topic_strength: args.topic_strength,
            };
            let mut bundle = generate(&cfg)?;
            if let Some(name) = args.name {
                bundle.dataset = name;
            }
            save_bundle(&bundle, &args.out)?;
            println!("wrote {} ({} nodes) to {}", bundle.dataset, bundle.n(), args.out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
