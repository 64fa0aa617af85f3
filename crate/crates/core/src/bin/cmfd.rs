use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cmfd::pipeline::{self, checks, PipelineConfig};
use cmfd::ranking::TrainConfig;
use cmfd::Result;

#[derive(Parser)]
#[command(name = "cmfd", version, about = "Copy-move forgery detection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// key = value config file
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (0 uses every core)
    #[arg(long)]
    threads: Option<usize>,
    /// PatchMatch rounds
    #[arg(long)]
    iterations: Option<usize>,
    /// Softmax temperature
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long, value_parser = ["soft", "hard"])]
    mode: Option<String>,
    /// Output directory or file
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn config(&self) -> Result<PipelineConfig> {
        let mut cfg = match &self.config {
            Some(p) => PipelineConfig::from_file(p)?,
            None => PipelineConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.set_seed(s);
        }
        if let Some(t) = self.threads {
            cfg.threads = t;
        }
        if let Some(n) = self.iterations {
            cfg.set("iterations", &n.to_string())?;
        }
        if let Some(b) = self.beta {
            cfg.set("beta", &b.to_string())?;
        }
        if let Some(m) = &self.mode {
            cfg.set("mode", m)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn out_or(&self, default: &str) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from(default))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Detect copy-move regions in an image or a folder of images
    Detect {
        input: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Score predicted masks against ground truth
    Evaluate {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Write synthetic forgeries with ground-truth masks
    GenFixtures {
        #[arg(long, default_value_t = 20)]
        count: usize,
        #[arg(long, default_value_t = 448)]
        size: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Compare analytic gradients with central differences
    GradCheck {
        #[arg(long, default_value_t = 100)]
        points: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Train the source/target scorer on a fixture set
    TrainScorer {
        fixtures: PathBuf,
        #[arg(long, default_value_t = 200)]
        epochs: usize,
        #[arg(long, default_value_t = 1.0)]
        learning_rate: f64,
        #[command(flatten)]
        common: Common,
    },
}

fn write_json(path: Option<&Path>, value: &impl serde::Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match path {
        Some(p) => cmfd::imagecore::write_atomic(p, text.as_bytes()),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Detect { input, common } => {
            let cfg = common.config()?;
            let out = common.out_or("out");
            let images = pipeline::collect_images(&input)?;
            let results = pipeline::with_threads(cfg.threads, || pipeline::detect_batch(&images, &out, &cfg))?;
            let mut ok = true;
            for (path, r) in images.iter().zip(results) {
                match r {
                    Ok(rep) => println!(
                        "{}: {} copy-move pixels ({:.0} ms) -> {}",
                        path.display(),
                        rep.foreground_pixels,
                        rep.total_ms,
                        rep.outputs.report.display()
                    ),
                    Err(e) => {
                        eprintln!("{}: {e}", path.display());
                        ok = false;
                    }
                }
            }
            Ok(ok)
        }
        Command::Evaluate { pred, gt, common } => {
            let summary = pipeline::evaluate_dirs(&pred, &gt)?;
            write_json(common.out.as_deref(), &summary)?;
            Ok(true)
        }
        Command::GenFixtures { count, size, common } => {
            let cfg = common.config()?;
            let out = common.out_or("fixtures");
            let recs = pipeline::with_threads(cfg.threads, || pipeline::gen_fixtures(&out, count, cfg.seed, size, size))??;
            println!("wrote {} fixtures to {}", recs.len(), out.display());
            Ok(true)
        }
        Command::GradCheck { points, common } => {
            let cfg = common.config()?;
            let report = checks::run_grad_checks(points, cfg.seed)?;
            write_json(common.out.as_deref(), &report)?;
            Ok(report.worst() <= 1e-4)
        }
        Command::TrainScorer {
            fixtures,
            epochs,
            learning_rate,
            common,
        } => {
            let cfg = common.config()?;
            let tc = TrainConfig {
                learning_rate,
                epochs,
                ..TrainConfig::default()
            };
            let outcome = pipeline::with_threads(cfg.threads, || pipeline::train_on_fixtures(&fixtures, &tc))??;
            let out = common.out_or("scorer.tensor");
            outcome.params.save(&out)?;
            if let (Some(first), Some(last)) = (outcome.losses.first(), outcome.losses.last()) {
                println!("loss {first:.6} -> {last:.6} over {} epochs", outcome.losses.len());
            }
            println!("saved scorer to {}", out.display());
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
