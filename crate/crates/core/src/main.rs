use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use relaynet::harness::{self, POLICY_NAMES};
use relaynet::{load_config, RunConfig};

#[derive(Parser)]
#[command(
    name = "relaynet",
    version,
    about = "Jammed UAV relay network: CTDE training, evaluation and baselines"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML config; missing keys take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "runs/out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Train CTDE agents.
    Train {
        #[command(flatten)]
        common: Common,
        /// Overrides the number of environment steps.
        #[arg(long)]
        steps: Option<u64>,
        /// Train this many consecutive seeds in parallel, one subdirectory each.
        #[arg(long, default_value_t = 1)]
        seeds: u64,
    },
    /// Evaluate a policy greedily; `ctde` needs a checkpoint.
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "ctde")]
        policy: String,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long, default_value_t = 10)]
        episodes: usize,
    },
    /// Run a rule-based baseline.
    Baseline {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        policy: String,
        #[arg(long, default_value_t = 10)]
        episodes: usize,
    },
}

fn resolve(common: &Common) -> Result<(RunConfig, u64)> {
    let cfg = match &common.config {
        Some(p) => load_config(p).with_context(|| format!("loading {}", p.display()))?,
        None => RunConfig::default(),
    };
    let seed = common.seed.unwrap_or(cfg.seed);
    Ok((cfg, seed))
}

fn summarize(rows: &[harness::EpisodeMetrics], out: &Path) {
    if let Some(last) = rows.last() {
        let n = rows.len() as f64;
        let mean = |f: fn(&harness::EpisodeMetrics) -> f64| rows.iter().map(f).sum::<f64>() / n;
        println!(
            "{} episodes: reward {:.4}, throughput {:.4e} bit/s, collision penalty {:.4}, jammer distance {:.2} m (last episode {})",
            rows.len(),
            mean(|r| r.mean_global_reward),
            mean(|r| r.mean_throughput_bps),
            mean(|r| r.collision_penalty),
            mean(|r| r.mean_jammer_distance),
            last.episode,
        );
    }
    println!("wrote {}", out.display());
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Train {
            common,
            steps,
            seeds,
        } => {
            let (mut cfg, seed) = resolve(&common)?;
            if let Some(s) = steps {
                cfg.train.total_steps = s;
            }
            cfg.validate()?;
            if seeds == 0 {
                bail!("--seeds must be at least 1");
            }
            if seeds == 1 {
                let out = harness::run_train(&cfg, seed, &common.out)?;
                println!("{} updates", out.updates);
                summarize(&out.rows, &common.out);
            } else {
                let list: Vec<u64> = (0..seeds).map(|k| seed + k).collect();
                let outs = harness::run_train_seeds(&cfg, &list, &common.out)?;
                for (s, out) in list.iter().zip(&outs) {
                    println!("seed {s}:");
                    summarize(&out.rows, &harness::run::seed_dir(&common.out, *s));
                }
            }
        }
        Command::Eval {
            common,
            policy,
            checkpoint,
            episodes,
        } => {
            let (cfg, seed) = resolve(&common)?;
            let rows = harness::run_policy_eval(
                &cfg,
                &policy,
                checkpoint.as_deref(),
                episodes,
                seed,
                &common.out,
                "eval",
            )?;
            summarize(&rows, &common.out);
        }
        Command::Baseline {
            common,
            policy,
            episodes,
        } => {
            if policy == "ctde" {
                bail!("ctde is not a baseline; use `eval` with a checkpoint");
            }
            if !POLICY_NAMES.contains(&policy.as_str()) {
                bail!(
                    "unknown policy {policy:?}; expected one of {}",
                    POLICY_NAMES[..5].join(", ")
                );
            }
            let (cfg, seed) = resolve(&common)?;
            let rows = harness::run_policy_eval(
                &cfg,
                &policy,
                None,
                episodes,
                seed,
                &common.out,
                "baseline",
            )?;
            summarize(&rows, &common.out);
        }
    }
    Ok(())
}
