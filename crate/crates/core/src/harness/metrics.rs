use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::env::StepOutcome;
use crate::error::Result;
use crate::rewards::RewardWeights;

/// Per-episode summary; one CSV row each.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeMetrics {
    pub episode: usize,
    /// Environment steps taken so far, this episode included.
    pub steps: u64,
    pub mean_global_reward: f64,
    pub mean_individual_reward: f64,
    /// Network throughput over bandwidth, averaged over the episode's steps.
    pub mean_throughput_norm: f64,
    /// Network throughput in bits/s, averaged over the episode's steps.
    pub mean_throughput_bps: f64,
    pub mean_coop_bonus: f64,
    /// Sum of the per-step collision penalty.
    pub collision_penalty: f64,
    pub mean_flight_penalty: f64,
    /// Mean UAV to jammer distance in meters, averaged over steps.
    pub mean_jammer_distance: f64,
    pub epsilon: f64,
    /// Reward weights in force at the end of the episode.
    pub weights: RewardWeights,
    /// Mean losses over the updates made during the episode (0 without updates).
    pub critic_loss: f64,
    pub actor_loss: f64,
}

impl EpisodeMetrics {
    /// Mean global reward recomputed from the component means under `w`.
    pub fn reward_under(&self, w: &RewardWeights, steps_per_episode: f64) -> f64 {
        w.w_thr * self.mean_throughput_norm + w.w_coop * self.mean_coop_bonus
            - w.w_col * self.collision_penalty / steps_per_episode
            - w.w_fly * self.mean_flight_penalty
    }
}

/// Running sums for the episode in progress.
#[derive(Debug, Clone, Default)]
pub struct EpisodeAccumulator {
    steps: usize,
    global_r: f64,
    individual_r: f64,
    thr_norm: f64,
    thr_bps: f64,
    coop: f64,
    p_col: f64,
    p_fly: f64,
    jammer_dist: f64,
    critic_loss: f64,
    actor_loss: f64,
    updates: usize,
}

impl EpisodeAccumulator {
    pub fn record(&mut self, out: &StepOutcome, jammer_distance: f64) {
        let r = &out.rewards;
        self.steps += 1;
        self.global_r += r.global_r;
        if !r.individual_r.is_empty() {
            self.individual_r += r.individual_r.iter().sum::<f64>() / r.individual_r.len() as f64;
        }
        self.thr_norm += r.throughput_norm;
        self.thr_bps += r.throughput_total;
        self.coop += r.coop_bonus;
        self.p_col += r.p_col;
        self.p_fly += r.p_fly;
        self.jammer_dist += jammer_distance;
    }

    pub fn record_losses(&mut self, critic: f64, actors: &[f64]) {
        self.updates += 1;
        self.critic_loss += critic;
        if !actors.is_empty() {
            self.actor_loss += actors.iter().sum::<f64>() / actors.len() as f64;
        }
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn finish(
        self,
        episode: usize,
        total_steps: u64,
        epsilon: f64,
        weights: RewardWeights,
    ) -> EpisodeMetrics {
        let n = self.steps.max(1) as f64;
        let u = self.updates.max(1) as f64;
        EpisodeMetrics {
            episode,
            steps: total_steps,
            mean_global_reward: self.global_r / n,
            mean_individual_reward: self.individual_r / n,
            mean_throughput_norm: self.thr_norm / n,
            mean_throughput_bps: self.thr_bps / n,
            mean_coop_bonus: self.coop / n,
            collision_penalty: self.p_col,
            mean_flight_penalty: self.p_fly / n,
            mean_jammer_distance: self.jammer_dist / n,
            epsilon,
            weights,
            critic_loss: self.critic_loss / u,
            actor_loss: self.actor_loss / u,
        }
    }
}

pub const CSV_HEADER: &str =
    "episode,steps,mean_global_reward,smoothed_global_reward,mean_individual_reward,\
mean_throughput_norm,mean_throughput_bps,mean_coop_bonus,collision_penalty,mean_flight_penalty,\
mean_jammer_distance,epsilon,w_thr,w_coop,w_col,w_fly,critic_loss,actor_loss";

/// Trailing moving average: entry i averages `xs[i+1−window ..= i]`, using
/// fewer values at the start.
pub fn moving_average(xs: &[f64], window: usize) -> Vec<f64> {
    let window = window.max(1);
    (0..xs.len())
        .map(|i| {
            let w = &xs[(i + 1).saturating_sub(window)..=i];
            w.iter().sum::<f64>() / w.len() as f64
        })
        .collect()
}

/// One CSV line (no newline) for `r` with its smoothed reward value.
pub fn csv_line(r: &EpisodeMetrics, smoothed: f64) -> String {
    let w = &r.weights;
    [
        r.episode.to_string(),
        r.steps.to_string(),
        r.mean_global_reward.to_string(),
        smoothed.to_string(),
        r.mean_individual_reward.to_string(),
        r.mean_throughput_norm.to_string(),
        r.mean_throughput_bps.to_string(),
        r.mean_coop_bonus.to_string(),
        r.collision_penalty.to_string(),
        r.mean_flight_penalty.to_string(),
        r.mean_jammer_distance.to_string(),
        r.epsilon.to_string(),
        w.w_thr.to_string(),
        w.w_coop.to_string(),
        w.w_col.to_string(),
        w.w_fly.to_string(),
        r.critic_loss.to_string(),
        r.actor_loss.to_string(),
    ]
    .join(",")
}

/// Renders rows as CSV text with the fixed header.
pub fn metrics_csv(rows: &[EpisodeMetrics], window: usize) -> String {
    let smoothed = moving_average(
        &rows
            .iter()
            .map(|r| r.mean_global_reward)
            .collect::<Vec<_>>(),
        window,
    );
    let mut s = String::with_capacity(64 + rows.len() * 256);
    s.push_str(CSV_HEADER);
    s.push('\n');
    for (r, sm) in rows.iter().zip(smoothed) {
        s.push_str(&csv_line(r, sm));
        s.push('\n');
    }
    s
}

pub fn export_metrics(rows: &[EpisodeMetrics], path: &Path, window: usize) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    let mut f = BufWriter::new(fs::File::create(path)?);
    f.write_all(metrics_csv(rows, window).as_bytes())?;
    f.flush()?;
    Ok(())
}
