use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use gnlab::commands;
use gnlab::output::OutDir;
use gnlab::{ExperimentConfig, HarnessError, HarnessResult};

#[derive(Parser)]
#[command(name = "gnlab", version, about = "NoiseGrad / FusionGrad attribution experiments")]
struct Cli {
    /// Experiment config (INI style); defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Number of test samples to explain and score.
    #[arg(long, global = true)]
    samples: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Train a model and save its checkpoint.
    Train,
    /// Write attributions for every enhancer.
    Explain,
    /// Pick noise levels and write the search traces.
    Calibrate,
    /// Score all enhancers on all metrics and write the comparison table.
    Compare,
    /// FusionGrad AUC over the (sigma_ng, sigma_sg) grid.
    Sweep,
    /// Two-dimensional toy figures.
    Toy,
    /// Ranking AUC against accuracy drop for NoiseGrad.
    HeuristicCurve,
    /// Trained-versus-randomized model check.
    Sanity,
    /// Activation maximization with a perturbed-model ensemble.
    Am,
}

fn load_config(cli: &Cli) -> HarnessResult<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(HarnessError::io(path))?;
            ExperimentConfig::parse(&text)?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.run.seed = s;
    }
    if let Some(o) = &cli.out {
        cfg.run.out = o.clone();
    }
    if let Some(t) = cli.threads {
        cfg.run.threads = Some(t);
    }
    if let Some(n) = cli.samples {
        cfg.run.samples = n;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn dispatch(command: Command, cfg: &ExperimentConfig, out: &mut OutDir) -> HarnessResult<()> {
    match command {
        Command::Train => {
            let r = commands::train(cfg, out)?;
            if let Some(acc) = r.final_test_accuracy() {
                println!("test accuracy {acc:.4}");
            }
        }
        Command::Explain => {
            let a = commands::explain(cfg, out)?;
            println!("explained {} samples", a.len());
        }
        Command::Calibrate => {
            let l = commands::calibrate_cmd(cfg, out)?;
            println!("sigma_sg {} sigma_ng {} fg ({}, {}) [{}]", l.sigma_sg, l.sigma_ng, l.fg_sigma_sg, l.fg_sigma_ng, l.fg_source);
        }
        Command::Compare => {
            let o = commands::compare(cfg, out)?;
            for r in &o.summary {
                let mark = if r.bold { "*" } else { " " };
                println!(
                    "{mark} {:<12} {:<9} {:.4} ± {:.4}",
                    r.metric.name(),
                    r.enhancer.name(),
                    r.report.mean,
                    r.report.std
                );
            }
        }
        Command::Sweep => {
            let s = commands::sweep(cfg, out)?;
            let (r, c) = s.argmax();
            println!(
                "best dAUC {:.4} at sigma_ng {} sigma_sg {}",
                s.d_auc[r][c], s.sigma_ng[c], s.sigma_sg[r]
            );
        }
        Command::Toy => {
            let t = commands::toy(cfg, out)?;
            println!(
                "toy test accuracy {:.4}; {} of 10 perturbed models flip the probe point",
                t.test_accuracy, t.flipped
            );
        }
        Command::HeuristicCurve => {
            let pts = commands::heuristic_curve(cfg, out)?;
            println!("{} curve points", pts.len());
        }
        Command::Sanity => {
            let r = commands::sanity(cfg, out)?;
            println!("mean spearman {:.4} ({} excluded)", r.mean_spearman, r.excluded);
        }
        Command::Am => {
            let r = commands::am(cfg, out)?;
            let t = &r.ensemble.objective_trace;
            println!("objective {:.4} -> {:.4}", t[0], t[t.len() - 1]);
        }
    }
    Ok(())
}

fn run(cli: &Cli) -> HarnessResult<()> {
    let cfg = load_config(cli)?;
    let mut out = OutDir::open(&cfg.run.out)?;
    let result = match cfg.run.threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| gnlab_core::Error::Parameter(format!("thread pool: {e}")))?;
            pool.install(|| dispatch(cli.command, &cfg, &mut out))
        }
        None => dispatch(cli.command, &cfg, &mut out),
    };
    // Files written before a failure still get hashed.
    let manifest = out.finish();
    result?;
    manifest?;
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
