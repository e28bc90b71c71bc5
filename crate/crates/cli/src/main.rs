use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use relpose::io::write_csv;
use relpose::{ConstraintForm, InputMode, RefStrategy, TargetMode};
use relpose_cli::commands::{self, DISTRIBUTION_CSV, LOSS_CSV, VERIFY_CSV};
use relpose_cli::config::ExperimentConfig;
use relpose_cli::dataset::Dataset;

#[derive(Parser)]
#[command(
    name = "relpose",
    version,
    about = "Relative-offset pose encoding experiments"
)]
struct Cli {
    /// Experiment config (TOML). Flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the scene seed (synth-gen) or the noise seed (solve).
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct DatasetArg {
    /// Dataset directory. Defaults to `output.dataset_dir` from the config.
    #[arg(long)]
    dataset: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic scenes into a dataset directory.
    SynthGen {
        #[command(flatten)]
        dataset: DatasetArg,
        #[arg(long)]
        count: Option<u64>,
    },
    /// Write encodings and targets for every scene.
    Encode {
        #[command(flatten)]
        dataset: DatasetArg,
        #[arg(long)]
        strategy: Option<RefStrategy>,
        #[arg(long)]
        input_mode: Option<InputMode>,
        #[arg(long)]
        target_mode: Option<TargetMode>,
        /// Constraint form recorded for later `verify` runs.
        #[arg(long)]
        form: Option<ConstraintForm>,
        #[arg(long)]
        uv_offsets: bool,
    },
    /// Report constraint residuals of the encodings against ground truth.
    Verify {
        #[command(flatten)]
        dataset: DatasetArg,
        /// Defaults to the form recorded by `encode`.
        #[arg(long)]
        form: Option<ConstraintForm>,
        /// Exit nonzero when the max residual exceeds this.
        #[arg(long, default_value_t = 1e-9)]
        tolerance: f64,
        /// Per-scene residual CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Recover poses from encodings and perturbed oracle targets.
    Solve {
        #[command(flatten)]
        dataset: DatasetArg,
        #[arg(long)]
        sigma: Option<f64>,
        #[arg(long)]
        refine: Option<usize>,
    },
    /// Score predicted poses; writes results.csv and summary.toml.
    Eval {
        #[command(flatten)]
        dataset: DatasetArg,
    },
    /// Translation spread before and after reference subtraction, as CSV.
    DistReport {
        #[command(flatten)]
        dataset: DatasetArg,
        #[arg(long)]
        strategy: Option<RefStrategy>,
        /// Defaults to `<dataset>/distribution.csv`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Split the ADD loss of predicted poses into its parts, as CSV.
    LossDecompose {
        #[command(flatten)]
        dataset: DatasetArg,
        /// Defaults to `<dataset>/loss.csv`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn dataset_dir(arg: &DatasetArg, cfg: &ExperimentConfig) -> Result<PathBuf> {
    match (&arg.dataset, &cfg.output.dataset_dir) {
        (Some(d), _) | (None, Some(d)) => Ok(d.clone()),
        (None, None) => bail!("no dataset directory: pass --dataset or set output.dataset_dir"),
    }
}

fn open(arg: &DatasetArg, cfg: &ExperimentConfig) -> Result<Dataset> {
    Dataset::open(&dataset_dir(arg, cfg)?)
}

fn run(cli: Cli) -> Result<ExitCode> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    let has_config = cli.config.is_some();
    match cli.command {
        Command::SynthGen { dataset, count } => {
            if !has_config && dataset.dataset.is_none() {
                bail!("synth-gen needs --config or --dataset");
            }
            if let Some(n) = count {
                cfg.scene_count = n;
            }
            if let Some(s) = cli.seed {
                cfg.scene.seed = s;
            }
            let dir = dataset_dir(&dataset, &cfg)?;
            let manifest = commands::synth_gen(&cfg, &dir)?;
            println!("wrote {} scenes to {}", manifest.scene_count, dir.display());
        }
        Command::Encode {
            dataset,
            strategy,
            input_mode,
            target_mode,
            form,
            uv_offsets,
        } => {
            let ds = open(&dataset, &cfg)?;
            let mut s = cfg.encode;
            s.strategy = strategy.unwrap_or(s.strategy);
            s.input_mode = input_mode.unwrap_or(s.input_mode);
            s.target_mode = target_mode.unwrap_or(s.target_mode);
            s.form = form.unwrap_or(s.form);
            s.uv_offsets |= uv_offsets;
            let summary = commands::encode(&ds, &s)?;
            println!(
                "encoded {} scenes ({} pixels): strategy={} input={} target={}",
                summary.scenes, summary.pixels, s.strategy, s.input_mode, s.target_mode
            );
        }
        Command::Verify {
            dataset,
            form,
            tolerance,
            csv,
        } => {
            let ds = open(&dataset, &cfg)?;
            let form = match form {
                Some(f) => f,
                None => ds
                    .encode_settings()
                    .map(|s| s.form)
                    .unwrap_or(cfg.encode.form),
            };
            let report = commands::verify(&ds, form)?;
            if let Some(path) = csv {
                write_csv(&path, VERIFY_CSV, &report.rows)?;
            }
            println!(
                "form={} scenes={} max_residual={:e} rms_residual={:e}",
                report.form,
                report.rows.len(),
                report.max_residual,
                report.rms_residual
            );
            if report.max_residual.is_nan() || report.max_residual > tolerance {
                eprintln!(
                    "error: {} residual {:e} exceeds tolerance {:e}",
                    report.form, report.max_residual, tolerance
                );
                return Ok(ExitCode::from(2));
            }
        }
        Command::Solve {
            dataset,
            sigma,
            refine,
        } => {
            let ds = open(&dataset, &cfg)?;
            let mut s = cfg.solve;
            s.sigma = sigma.unwrap_or(s.sigma);
            s.refine_iterations = refine.unwrap_or(s.refine_iterations);
            s.seed = cli.seed.unwrap_or(s.seed);
            let rows = commands::solve(&ds, &s)?;
            let degenerate = rows.iter().filter(|r| r.residual_rms.is_none()).count();
            println!(
                "solved {} scenes ({} degenerate)",
                rows.len() - degenerate,
                degenerate
            );
        }
        Command::Eval { dataset } => {
            let ds = open(&dataset, &cfg)?;
            let (_, summary) = commands::eval(&ds, &cfg.metrics)?;
            let opt = |v: Option<f64>| v.map_or("n/a".to_string(), |x| format!("{x:e}"));
            println!(
                "scenes={} evaluated={} mean_add_s={} median_add={} accuracy={} auc={}",
                summary.scenes,
                summary.evaluated,
                opt(summary.mean_add_selective),
                opt(summary.median_add),
                summary.accuracy,
                summary.auc
            );
        }
        Command::DistReport {
            dataset,
            strategy,
            out,
        } => {
            let ds = open(&dataset, &cfg)?;
            let strategy = strategy.unwrap_or(cfg.encode.strategy);
            let rows = commands::dist_report(&ds, strategy)?;
            let path = out.unwrap_or_else(|| ds.root().join("distribution.csv"));
            write_csv(&path, DISTRIBUTION_CSV, &rows)?;
            for r in &rows {
                println!(
                    "{}: var(t)={:.3e} var(dt)={:.3e} ratio={:.1}",
                    r.axis, r.variance_t, r.variance_delta_t, r.reduction_ratio
                );
            }
        }
        Command::LossDecompose { dataset, out } => {
            let ds = open(&dataset, &cfg)?;
            let rows = commands::loss_decompose(&ds)?;
            let path = out.unwrap_or_else(|| ds.root().join("loss.csv"));
            write_csv(&path, LOSS_CSV, &rows)?;
            println!("decomposed {} poses into {}", rows.len(), display(&path));
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn display(p: &Path) -> String {
    p.display().to_string()
}

fn main() -> ExitCode {
    match run(Cli::parse()).context("relpose failed") {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
