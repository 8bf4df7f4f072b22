use clap::{Args, Parser, Subcommand};
use slow_elm::commands::{self, EvalSweeps};
use slow_elm::config::RunConfig;
use slow_elm::{model, Error};
use std::path::PathBuf;
use std::process::ExitCode;

/// Pose-invariant event-camera object recognition with slowness-selected
/// random projections.
#[derive(Parser)]
#[command(name = "selm", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Config file with one key=value per line ('#' comments allowed).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a single config key, e.g. --set n_hidden=3000. Repeatable;
    /// applied after --config.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<RunConfig, Error> {
        let mut config = RunConfig::default();
        if let Some(path) = &self.config {
            config.apply_file(path)?;
        }
        for kv in &self.sets {
            let (key, value) = kv.split_once('=').ok_or_else(|| {
                Error::Config(format!("--set expects KEY=VALUE, got '{kv}'"))
            })?;
            config.set(key.trim(), value.trim())?;
        }
        config.validate()?;
        Ok(config)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate the synthetic rotating-rig dataset suite.
    Synth {
        #[command(flatten)]
        config: ConfigArgs,
        /// Output dataset directory.
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Train a model on the train split of a dataset directory.
    Train {
        #[command(flatten)]
        config: ConfigArgs,
        /// Dataset directory containing manifest.json.
        #[arg(long)]
        data: PathBuf,
        /// Where to write the trained model.
        #[arg(long)]
        model: PathBuf,
        /// Optional training log path.
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Evaluate a trained model on the test split.
    Eval {
        #[command(flatten)]
        config: ConfigArgs,
        /// Dataset directory containing manifest.json.
        #[arg(long)]
        data: PathBuf,
        /// Trained model file.
        #[arg(long)]
        model: PathBuf,
        /// Directory for CSV reports.
        #[arg(long, short)]
        out: PathBuf,
        /// Skip the speed x distance accuracy grid.
        #[arg(long)]
        no_speed_distance: bool,
        /// Skip the projection-count sweep (slow/pca/identity/fast).
        #[arg(long)]
        no_projection_sweep: bool,
        /// Skip the multi-view span sweep.
        #[arg(long)]
        no_multiview: bool,
    },
    /// Benchmark inference throughput of a trained model.
    Bench {
        #[command(flatten)]
        config: ConfigArgs,
        /// Trained model file.
        #[arg(long)]
        model: PathBuf,
        /// Optional CSV output path (defaults to stdout only).
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Synth { config, out } => {
            let config = config.resolve()?;
            let manifest = commands::run_synth(&config, &out)?;
            println!(
                "wrote {} recordings ({} train / {} test) to {}",
                manifest.entries.len(),
                manifest.train_entries().count(),
                manifest.test_entries().count(),
                out.display()
            );
        }
        Command::Train {
            config,
            data,
            model,
            log,
        } => {
            let config = config.resolve()?;
            let outcome =
                commands::run_train(&config, &data, Some(&model), log.as_deref())?;
            println!("trained model written to {}", model.display());
            if let Some(r) = outcome.residuals {
                println!(
                    "constraint residuals: mean {:e}, var {:e}, corr {:e}",
                    r.max_abs_mean, r.max_var_deviation, r.max_abs_corr
                );
            }
        }
        Command::Eval {
            config,
            data,
            model,
            out,
            no_speed_distance,
            no_projection_sweep,
            no_multiview,
        } => {
            let config = config.resolve()?;
            let model = model::load_model(&model)?;
            let sweeps = EvalSweeps {
                speed_distance: !no_speed_distance,
                projection_count: !no_projection_sweep,
                multiview: !no_multiview,
            };
            let report = commands::run_eval(&model, &config, &data, Some(&out), sweeps)?;
            println!(
                "balanced single-sample object accuracy: {:.4} ({} samples)",
                report.overall_object_accuracy, report.balanced_samples
            );
            for (span, acc, n) in &report.multiview {
                println!("multi-view span {span:>5.0} deg: accuracy {acc:.4} ({n} decisions)");
            }
            println!("reports written to {}", out.display());
        }
        Command::Bench { config, model, out } => {
            let config = config.resolve()?;
            let model = model::load_model(&model)?;
            let report = commands::run_bench(&model, &config)?;
            let csv = report.to_csv();
            print!("{csv}");
            if let Some(path) = out {
                std::fs::write(&path, csv)?;
                println!("report written to {}", path.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error ({}): {e}", e.category());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
