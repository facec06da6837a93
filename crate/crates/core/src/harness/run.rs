use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::thread;

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::trainer::{train, TrainEvent, TrainOutcome};

use super::checkpoint::save_checkpoint;
use super::eval::{load_policy, run_eval};
use super::metrics::{csv_line, export_metrics, EpisodeMetrics, CSV_HEADER};

pub const METRICS_FILE: &str = "metrics.csv";
pub const MANIFEST_FILE: &str = "manifest.toml";
pub const CHECKPOINT_FILE: &str = "checkpoint.bin";

pub fn periodic_checkpoint_name(step: u64) -> String {
    format!("checkpoint_{step:08}.bin")
}

/// Writes the resolved config with the effective seed. The file loads back
/// as a config; the header lines are TOML comments.
pub fn write_manifest(
    dir: &Path,
    mode: &str,
    policy: Option<&str>,
    cfg: &RunConfig,
    seed: u64,
) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut resolved = cfg.clone();
    resolved.seed = seed;
    let mut text = format!(
        "# relaynet {} run manifest\n# mode: {mode}\n",
        env!("CARGO_PKG_VERSION")
    );
    if let Some(p) = policy {
        text.push_str(&format!("# policy: {p}\n"));
    }
    text.push_str(&format!("# seed: {seed}\n\n"));
    text.push_str(&resolved.to_toml_string());
    fs::write(dir.join(MANIFEST_FILE), text)?;
    Ok(())
}

/// Trains one seed, streaming metrics rows to `out/metrics.csv`, saving
/// periodic checkpoints and the final one as `out/checkpoint.bin`.
pub fn run_train(cfg: &RunConfig, seed: u64, out: &Path) -> Result<TrainOutcome> {
    cfg.validate()?;
    write_manifest(out, "train", None, cfg, seed)?;
    let mut csv = BufWriter::new(fs::File::create(out.join(METRICS_FILE))?);
    writeln!(csv, "{CSV_HEADER}")?;
    let window = cfg.eval.smoothing_window.max(1);
    let mut recent: Vec<f64> = Vec::new();
    let outcome = train(cfg, seed, &mut |event| {
        match event {
            TrainEvent::Episode(row) => {
                recent.push(row.mean_global_reward);
                let tail = &recent[recent.len().saturating_sub(window)..];
                let smoothed = tail.iter().sum::<f64>() / tail.len() as f64;
                writeln!(csv, "{}", csv_line(row, smoothed))?;
                csv.flush()?;
            }
            TrainEvent::Checkpoint { step, agents } => {
                save_checkpoint(agents, &out.join(periodic_checkpoint_name(step)))?;
            }
        }
        Ok(())
    })?;
    csv.flush()?;
    save_checkpoint(&outcome.agents, &out.join(CHECKPOINT_FILE))?;
    Ok(outcome)
}

pub fn seed_dir(out: &Path, seed: u64) -> PathBuf {
    out.join(format!("seed_{seed}"))
}

/// Trains several seeds concurrently, one thread and one `seed_<n>`
/// directory each. Outcomes are returned in seed order.
pub fn run_train_seeds(cfg: &RunConfig, seeds: &[u64], out: &Path) -> Result<Vec<TrainOutcome>> {
    thread::scope(|s| {
        let handles: Vec<_> = seeds
            .iter()
            .map(|&seed| {
                let dir = seed_dir(out, seed);
                s.spawn(move || run_train(cfg, seed, &dir))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| {
                h.join()
                    .map_err(|_| Error::Domain("training thread panicked".into()))?
            })
            .collect()
    })
}

/// Evaluates a named policy and writes `out/metrics.csv` plus a manifest.
pub fn run_policy_eval(
    cfg: &RunConfig,
    policy: &str,
    checkpoint: Option<&Path>,
    episodes: usize,
    seed: u64,
    out: &Path,
    mode: &str,
) -> Result<Vec<EpisodeMetrics>> {
    let p = load_policy(policy, cfg, checkpoint)?;
    write_manifest(out, mode, Some(policy), cfg, seed)?;
    let rows = run_eval(cfg, p.as_ref(), episodes, seed)?;
    export_metrics(&rows, &out.join(METRICS_FILE), cfg.eval.smoothing_window)?;
    Ok(rows)
}
