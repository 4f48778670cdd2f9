use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use maintlm::cli::{cmd_predict, cmd_regress, cmd_synth, cmd_train, CliError, RunConfig};
use maintlm::ingest::InputVariant;
use maintlm::synth::SynthSpec;
use maintlm::trainer::TrainConfig;

#[derive(Parser)]
#[command(
    name = "maintlm",
    about = "Predict software maintenance days with an LM-trained neural network",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

fn parse_variant(s: &str) -> Result<InputVariant, String> {
    InputVariant::parse(s).ok_or_else(|| format!("expected sum|enh|corr, got `{s}`"))
}

#[derive(Args)]
struct TrainerFlags {
    /// Initial LM damping.
    #[arg(long, default_value_t = 1e-3)]
    mu0: f64,
    /// Damping multiplier on rejected steps.
    #[arg(long, default_value_t = 10.0)]
    mu_inc: f64,
    /// Damping multiplier on accepted steps.
    #[arg(long, default_value_t = 0.1)]
    mu_dec: f64,
    /// Damping ceiling; training stops beyond it.
    #[arg(long, default_value_t = 1e10)]
    mu_max: f64,
    #[arg(long, default_value_t = 1000)]
    max_epochs: usize,
    /// Consecutive validation-MSE increases tolerated.
    #[arg(long, default_value_t = 6)]
    max_fail: usize,
    /// Gradient infinity-norm stopping threshold.
    #[arg(long, default_value_t = 1e-7)]
    min_grad: f64,
}

impl From<TrainerFlags> for TrainConfig {
    fn from(f: TrainerFlags) -> Self {
        Self {
            mu0: f.mu0,
            mu_inc: f.mu_inc,
            mu_dec: f.mu_dec,
            mu_max: f.mu_max,
            max_epochs: f.max_epochs,
            max_fail: f.max_fail,
            min_grad: f.min_grad,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Train the network and write model, traces, and diagnostic plots.
    Train {
        /// Change-log CSV input.
        #[arg(long, required_unless_present = "from_manifest")]
        input: Option<PathBuf>,
        /// Input variant: sum, enh, or corr.
        #[arg(long, value_parser = parse_variant, default_value = "sum")]
        variant: InputVariant,
        /// Hidden-layer neuron count.
        #[arg(long, default_value_t = 10)]
        hidden: usize,
        /// Seed for the 70/15/15 split.
        #[arg(long, default_value_t = 0)]
        seed_split: u64,
        /// Seed for weight initialization.
        #[arg(long, default_value_t = 0)]
        seed_init: u64,
        /// Error-histogram bin count.
        #[arg(long, default_value_t = 20)]
        bins: usize,
        /// Output directory.
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[command(flatten)]
        trainer: TrainerFlags,
        /// Reproduce a previous run from its manifest (overrides all flags).
        #[arg(long)]
        from_manifest: Option<PathBuf>,
    },
    /// OLS regression of days on counts, written as summary.csv.
    Regress {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_parser = parse_variant, default_value = "sum")]
        variant: InputVariant,
        #[arg(long, default_value_t = 20)]
        bins: usize,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Predict maintenance days for one input count.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        x: f64,
    },
    /// Generate a synthetic change log.
    Synth {
        #[arg(long, default_value_t = 56)]
        n: usize,
        #[arg(long, default_value_t = 5)]
        e_lo: u32,
        #[arg(long, default_value_t = 15)]
        e_hi: u32,
        #[arg(long, default_value_t = 5)]
        f_lo: u32,
        #[arg(long, default_value_t = 15)]
        f_hi: u32,
        #[arg(long, default_value_t = 2.0)]
        days_per_unit: f64,
        #[arg(long, default_value_t = 7.2)]
        noise_sigma: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write to this file instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Train {
            input,
            variant,
            hidden,
            seed_split,
            seed_init,
            bins,
            out,
            trainer,
            from_manifest,
        } => {
            let config = match from_manifest {
                Some(path) => RunConfig::from_manifest(&std::fs::read_to_string(path)?)?,
                None => RunConfig {
                    variant,
                    hidden,
                    split_seed: seed_split,
                    init_seed: seed_init,
                    bins,
                    train: trainer.into(),
                    ..RunConfig::new(
                        input.expect("clap enforces --input without --from-manifest"),
                        out,
                    )
                },
            };
            cmd_train(&config)?;
            Ok(())
        }
        Command::Regress { input, variant, bins, out } => {
            cmd_regress(&input, variant, &out, bins)
        }
        Command::Predict { model, x } => {
            let days = cmd_predict(&model, x)?;
            println!("{days}");
            Ok(())
        }
        Command::Synth {
            n,
            e_lo,
            e_hi,
            f_lo,
            f_hi,
            days_per_unit,
            noise_sigma,
            seed,
            out,
        } => {
            let spec = SynthSpec {
                n,
                e_range: (e_lo, e_hi),
                f_range: (f_lo, f_hi),
                days_per_unit,
                noise_sigma,
                seed,
            };
            let csv = cmd_synth(&spec, out.as_deref())?;
            if out.is_none() {
                print!("{csv}");
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
