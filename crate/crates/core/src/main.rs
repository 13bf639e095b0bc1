use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use srgan::dataset::{build_bundle, DEFAULT_NOISE_SIGMA, DEFAULT_TEST_SIZE};
use srgan::harness::{
    self, aggregate, emit_plot_data, format_report, loss_variant_study, mae_table, read_results,
    relative_errors, relative_table, run_sweep, variant_table, Preset, SweepConfig,
    MAE_PLOT_FILE, RELATIVE_PLOT_FILE, VARIANT_PLOT_FILE,
};
use srgan::losses::LossVariant;
use srgan::models::{save_checkpoint, CheckpointMeta};
use srgan::training::{train, Method, TrainConfig};

#[derive(Parser)]
#[command(name = "srgan", about = "Semi-supervised regression GAN experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train every method over labeled sizes and seeds, resuming completed trials.
    Sweep {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// `desk` (minutes per cell) or `full` (hours; alias `paper`)
        #[arg(long, default_value = "desk")]
        preset: String,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Compare the three SR-GAN loss variants at a single labeled size.
    Variants {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// `desk` (minutes per cell) or `full` (hours; alias `paper`)
        #[arg(long, default_value = "desk")]
        preset: String,
        #[arg(long, default_value_t = 500)]
        labeled: usize,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Train a single model and write its history and checkpoints.
    Train {
        #[arg(long)]
        method: Method,
        #[arg(long)]
        labeled: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 5_000)]
        unlabeled: usize,
        #[arg(long)]
        steps: Option<u64>,
        #[arg(long, default_value = "log")]
        variant: LossVariant,
    },
    /// Print aggregate tables for a sweep directory and write plot CSVs next to it.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
    },
}

fn sweep_config(
    preset: &str,
    config: Option<&Path>,
    out: &Path,
    workers: Option<usize>,
) -> Result<SweepConfig> {
    let mut cfg = SweepConfig::preset(preset.parse::<Preset>()?, out);
    if let Some(path) = config {
        cfg.apply_file(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        // the command line wins over the file
        cfg.out_dir = out.to_path_buf();
    }
    if let Some(w) = workers {
        cfg.workers = w;
    }
    Ok(cfg)
}

fn write_plots(dir: &Path, results: &[harness::ExperimentResult]) -> Result<()> {
    let cells = aggregate(results);
    let mae = mae_table(&cells);
    let mut tables = vec![(MAE_PLOT_FILE, &mae)];
    let rel;
    let with_baseline: Vec<_> = cells
        .iter()
        .filter(|c| {
            c.method == Method::Dnn || harness::find_cell(&cells, Method::Dnn, c.labeled_size).is_some()
        })
        .cloned()
        .collect();
    if let Ok(rows) = relative_errors(&with_baseline) {
        rel = relative_table(&cells, &rows);
        tables.push((RELATIVE_PLOT_FILE, &rel));
    }
    emit_plot_data(&dir.join("plots"), &tables)?;
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Sweep {
            config,
            out,
            preset,
            workers,
        } => {
            let cfg = sweep_config(&preset, config.as_deref(), &out, workers)?;
            let outcome = run_sweep(&cfg)?;
            print!("{}", format_report(&outcome.results));
            write_plots(&cfg.out_dir, &outcome.results)?;
            let failed = outcome.failed();
            eprintln!(
                "trained {} trial(s), {} failed, results in {}",
                outcome.trained,
                failed,
                cfg.results_path().display()
            );
            Ok(failed == 0)
        }
        Command::Variants {
            out,
            config,
            preset,
            labeled,
            workers,
        } => {
            let mut cfg = sweep_config(&preset, config.as_deref(), &out, workers)?;
            cfg.labeled_sizes = vec![labeled];
            let (rows, outcome) = loss_variant_study(&cfg, &LossVariant::ALL)?;
            println!("{:<8} {:>10}  per-seed", "variant", "mean_mae");
            for r in &rows {
                let seeds: Vec<String> =
                    r.per_seed.iter().map(|(s, m)| format!("{s}:{m:.4}")).collect();
                println!("{:<8} {:>10.4}  {}", r.variant, r.mean_mae, seeds.join(" "));
            }
            let table = variant_table(labeled, &rows);
            emit_plot_data(&out.join("plots"), &[(VARIANT_PLOT_FILE, &table)])?;
            Ok(outcome.failed() == 0 && rows.iter().all(|r| r.per_seed.len() as u64 == cfg.n_seeds))
        }
        Command::Train {
            method,
            labeled,
            seed,
            out,
            unlabeled,
            steps,
            variant,
        } => {
            fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
            let bundle =
                build_bundle(seed, labeled, unlabeled, DEFAULT_TEST_SIZE, DEFAULT_NOISE_SIGMA)?;
            let mut config = TrainConfig {
                method,
                seed,
                variant,
                ..SweepConfig::preset_train_config()
            };
            if let Some(s) = steps {
                config.steps = s;
                config.eval_interval = config.eval_interval.min(s);
            }
            let total = config.steps;
            let outcome = train(config, &bundle)?;
            outcome.history.write_csv(&out.join("history.csv"))?;
            save_checkpoint(
                &out.join("discriminator.ckpt"),
                outcome.discriminator.net(),
                &CheckpointMeta {
                    kind: "discriminator".into(),
                    seed,
                    step: total,
                },
            )?;
            if let Some(g) = &outcome.generator {
                save_checkpoint(
                    &out.join("generator.ckpt"),
                    g.net(),
                    &CheckpointMeta {
                        kind: "generator".into(),
                        seed,
                        step: total,
                    },
                )?;
            }
            println!(
                "{method} labeled={labeled} seed={seed} test_mae={:.6}",
                outcome.final_test_mae
            );
            Ok(true)
        }
        Command::Report { input } => {
            let path = input.join(harness::RESULTS_FILE);
            let results = read_results(&path)?;
            if results.is_empty() {
                bail!("no results in {}", path.display());
            }
            print!("{}", format_report(&results));
            write_plots(&input, &results)?;
            Ok(results.iter().all(|r| r.is_ok()))
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
