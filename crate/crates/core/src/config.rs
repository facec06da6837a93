//! Run configuration.
//!
//! Every tunable of the simulator, reward model, learner and baselines lives
//! here. Config files are TOML; each section is optional and every missing key
//! falls back to its default. Unknown keys are rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::env::{Vec3, NUM_POWER_LEVELS};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub env: EnvConfig,
    pub reward: RewardConfig,
    pub net: NetConfig,
    pub replay: ReplayConfig,
    pub train: TrainConfig,
    pub baseline: BaselineConfig,
    pub eval: EvalConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvConfig {
    /// Side of the square ground area, meters.
    pub arena_side: f64,
    pub h_min: f64,
    pub h_max: f64,
    pub n_uavs: usize,
    pub n_pairs: usize,
    /// Jammer coordinates in grid cells; multiplied by `jammer_cell_size`.
    pub jammer_positions: Vec<[f64; 3]>,
    pub jammer_cell_size: f64,
    /// Jammer transmit power, watts.
    pub jammer_power: f64,
    /// Channel bandwidth, Hz.
    pub bandwidth: f64,
    /// UAV transmit power levels, watts (exactly three).
    pub power_levels: Vec<f64>,
    pub path_loss_exponent: f64,
    /// Thermal noise power, watts.
    pub noise_power: f64,
    /// Floor applied to link distances inside the rate model, meters.
    pub min_link_distance: f64,
    pub step_xy: f64,
    pub step_z: f64,
    /// Maximum ground-node speed, m/s (one step is one second).
    pub gcv_max_speed: f64,
    /// Steps between ground-node heading/speed redraws.
    pub gcv_turn_period: u64,
    pub k_nearest: usize,
    pub d_safe: f64,
    pub energy_hover: f64,
    pub energy_move: f64,
    pub energy_climb: f64,
    pub initial_energy: f64,
    pub episode_len: u64,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            arena_side: 120.0,
            h_min: 15.0,
            h_max: 35.0,
            n_uavs: 5,
            n_pairs: 5,
            jammer_positions: vec![[2.0, 2.0, 1.5], [8.0, 8.0, 1.5]],
            jammer_cell_size: 10.0,
            jammer_power: 0.5,
            bandwidth: 1.23e6,
            power_levels: vec![0.05, 0.12, 0.25],
            path_loss_exponent: 2.0,
            noise_power: 1e-10,
            min_link_distance: 1.0,
            step_xy: 10.0,
            step_z: 5.0,
            gcv_max_speed: 2.0,
            gcv_turn_period: 10,
            k_nearest: 3,
            d_safe: 5.0,
            energy_hover: 1.0,
            energy_move: 0.5,
            energy_climb: 0.5,
            initial_energy: 1e4,
            episode_len: 400,
        }
    }
}

impl EnvConfig {
    pub fn jammer_positions_m(&self) -> Vec<Vec3> {
        self.jammer_positions
            .iter()
            .map(|p| Vec3::new(p[0], p[1], p[2]) * self.jammer_cell_size)
            .collect()
    }

    pub fn obs_dim(&self) -> usize {
        5 + 5 * self.k_nearest
    }

    pub fn state_dim(&self) -> usize {
        5 * self.n_uavs + 4 * self.n_pairs
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RewardConfig {
    pub w_thr: f64,
    pub w_coop: f64,
    pub w_col: f64,
    pub w_fly: f64,
    pub weight_floor: f64,
    pub weight_ceiling: f64,
    pub a_thr: f64,
    pub a_assign: f64,
    pub a_col: f64,
    /// Preferred inter-UAV spacing, meters.
    pub d_ideal: f64,
    /// Width of the spacing kernel, meters.
    pub spacing_sigma: f64,
    /// Fraction of training after which the homeostatic adaptation starts.
    pub curriculum_start: f64,
    /// Target mean collision penalty per step.
    pub collision_target: f64,
    /// Window (steps) for the recent collision rate.
    pub collision_window: usize,
    pub homeostatic_shrink: f64,
    pub homeostatic_grow: f64,
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self {
            w_thr: 1.0,
            w_coop: 0.2,
            w_col: 2.0,
            w_fly: 0.05,
            weight_floor: 0.1,
            weight_ceiling: 5.0,
            a_thr: 1.0,
            a_assign: 0.1,
            a_col: 1.0,
            d_ideal: 30.0,
            spacing_sigma: 15.0,
            curriculum_start: 0.8,
            collision_target: 0.01,
            collision_window: 200,
            homeostatic_shrink: 0.99,
            homeostatic_grow: 1.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetConfig {
    pub actor_hidden: Vec<usize>,
    pub critic_hidden: Vec<usize>,
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    pub huber_delta: f64,
    pub grad_clip_norm: f64,
    pub norm_clip: f64,
    pub norm_eps: f64,
}

impl Default for NetConfig {
    fn default() -> Self {
        Self {
            actor_hidden: vec![128, 128],
            critic_hidden: vec![256, 256],
            actor_lr: 4e-4,
            critic_lr: 3e-4,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            huber_delta: 1.0,
            grad_clip_norm: 10.0,
            norm_clip: 10.0,
            norm_eps: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReplayConfig {
    pub capacity: usize,
    pub alpha: f64,
    pub beta_start: f64,
    pub beta_end: f64,
    pub eps_priority: f64,
}

impl Default for ReplayConfig {
    fn default() -> Self {
        Self {
            capacity: 100_000,
            alpha: 0.6,
            beta_start: 0.4,
            beta_end: 1.0,
            eps_priority: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub total_steps: u64,
    pub batch_size: usize,
    pub gamma: f64,
    pub tau: f64,
    pub target_update_period: u64,
    pub eps_start: f64,
    pub eps_final: f64,
    /// Fraction of training over which epsilon decays linearly.
    pub eps_decay_fraction: f64,
    /// Scale of the global advantage injected into actor targets.
    pub advantage_scale: f64,
    pub warmup: usize,
    /// Environment steps between gradient updates.
    pub update_every: u64,
    /// Steps between periodic checkpoints; 0 disables them.
    pub checkpoint_every: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            total_steps: 1_200_000,
            batch_size: 320,
            gamma: 0.95,
            tau: 0.010,
            target_update_period: 200,
            eps_start: 1.0,
            eps_final: 0.05,
            eps_decay_fraction: 0.8,
            advantage_scale: 0.5,
            warmup: 5_000,
            update_every: 1,
            checkpoint_every: 100_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineConfig {
    pub k_rep: f64,
    pub d_safe_rep: f64,
    pub k_sp: f64,
    pub s_sp: f64,
    pub cruise_altitude: f64,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self {
            k_rep: 2.0,
            d_safe_rep: 15.0,
            k_sp: 1.0,
            s_sp: 10.0,
            cruise_altitude: 25.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    /// Moving-average window (episodes) for the smoothed reward column.
    pub smoothing_window: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            smoothing_window: 50,
        }
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must be positive, got {v}")))
    }
}

fn nonnegative(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "{name} must be nonnegative, got {v}"
        )))
    }
}

fn unit_interval(name: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must lie in [0, 1], got {v}")))
    }
}

impl RunConfig {
    /// Parses a TOML config; an empty document yields the defaults.
    pub fn from_toml_str(text: &str) -> std::result::Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let e = &self.env;
        positive("env.arena_side", e.arena_side)?;
        positive("env.h_min", e.h_min)?;
        positive("env.h_max", e.h_max)?;
        if e.h_min >= e.h_max {
            return Err(Error::Config(format!(
                "env.h_min ({}) must be below env.h_max ({})",
                e.h_min, e.h_max
            )));
        }
        if e.n_uavs == 0 || e.n_pairs == 0 {
            return Err(Error::Config(
                "env.n_uavs and env.n_pairs must be positive".into(),
            ));
        }
        if e.k_nearest == 0 {
            return Err(Error::Config("env.k_nearest must be positive".into()));
        }
        if e.power_levels.is_empty() {
            return Err(Error::Config("env.power_levels is empty".into()));
        }
        if e.power_levels.len() != NUM_POWER_LEVELS {
            return Err(Error::Config(format!(
                "env.power_levels must hold exactly {NUM_POWER_LEVELS} levels, got {}",
                e.power_levels.len()
            )));
        }
        for &p in &e.power_levels {
            positive("env.power_levels entry", p)?;
        }
        positive("env.jammer_power", e.jammer_power)?;
        positive("env.jammer_cell_size", e.jammer_cell_size)?;
        positive("env.bandwidth", e.bandwidth)?;
        positive("env.path_loss_exponent", e.path_loss_exponent)?;
        positive("env.noise_power", e.noise_power)?;
        positive("env.min_link_distance", e.min_link_distance)?;
        positive("env.step_xy", e.step_xy)?;
        positive("env.step_z", e.step_z)?;
        nonnegative("env.gcv_max_speed", e.gcv_max_speed)?;
        if e.gcv_turn_period == 0 {
            return Err(Error::Config("env.gcv_turn_period must be positive".into()));
        }
        positive("env.d_safe", e.d_safe)?;
        nonnegative("env.energy_hover", e.energy_hover)?;
        nonnegative("env.energy_move", e.energy_move)?;
        nonnegative("env.energy_climb", e.energy_climb)?;
        positive("env.initial_energy", e.initial_energy)?;
        if e.episode_len == 0 {
            return Err(Error::Config("env.episode_len must be positive".into()));
        }
        for p in e.jammer_positions_m() {
            if !p.is_finite() {
                return Err(Error::Config("env.jammer_positions must be finite".into()));
            }
        }

        let r = &self.reward;
        for (name, v) in [
            ("reward.w_thr", r.w_thr),
            ("reward.w_coop", r.w_coop),
            ("reward.w_col", r.w_col),
            ("reward.w_fly", r.w_fly),
            ("reward.a_thr", r.a_thr),
            ("reward.a_assign", r.a_assign),
            ("reward.a_col", r.a_col),
            ("reward.collision_target", r.collision_target),
        ] {
            nonnegative(name, v)?;
        }
        nonnegative("reward.weight_floor", r.weight_floor)?;
        if r.weight_floor > r.weight_ceiling {
            return Err(Error::Config(
                "reward.weight_floor exceeds reward.weight_ceiling".into(),
            ));
        }
        positive("reward.spacing_sigma", r.spacing_sigma)?;
        nonnegative("reward.d_ideal", r.d_ideal)?;
        unit_interval("reward.curriculum_start", r.curriculum_start)?;
        if r.collision_window == 0 {
            return Err(Error::Config(
                "reward.collision_window must be positive".into(),
            ));
        }
        positive("reward.homeostatic_shrink", r.homeostatic_shrink)?;
        positive("reward.homeostatic_grow", r.homeostatic_grow)?;

        let n = &self.net;
        if n.actor_hidden.contains(&0) || n.critic_hidden.contains(&0) {
            return Err(Error::Config("hidden layer sizes must be positive".into()));
        }
        positive("net.actor_lr", n.actor_lr)?;
        positive("net.critic_lr", n.critic_lr)?;
        unit_interval("net.adam_beta1", n.adam_beta1)?;
        unit_interval("net.adam_beta2", n.adam_beta2)?;
        positive("net.adam_eps", n.adam_eps)?;
        positive("net.huber_delta", n.huber_delta)?;
        positive("net.grad_clip_norm", n.grad_clip_norm)?;
        positive("net.norm_clip", n.norm_clip)?;
        positive("net.norm_eps", n.norm_eps)?;

        let p = &self.replay;
        if p.capacity == 0 {
            return Err(Error::Config("replay.capacity must be positive".into()));
        }
        nonnegative("replay.alpha", p.alpha)?;
        nonnegative("replay.beta_start", p.beta_start)?;
        nonnegative("replay.beta_end", p.beta_end)?;
        positive("replay.eps_priority", p.eps_priority)?;

        let t = &self.train;
        if t.total_steps == 0 {
            return Err(Error::Config("train.total_steps must be positive".into()));
        }
        if t.batch_size == 0 {
            return Err(Error::Config("train.batch_size must be positive".into()));
        }
        if t.batch_size > p.capacity {
            return Err(Error::Config(format!(
                "train.batch_size ({}) exceeds replay.capacity ({})",
                t.batch_size, p.capacity
            )));
        }
        unit_interval("train.gamma", t.gamma)?;
        unit_interval("train.tau", t.tau)?;
        if t.target_update_period == 0 || t.update_every == 0 {
            return Err(Error::Config(
                "train.target_update_period and train.update_every must be positive".into(),
            ));
        }
        unit_interval("train.eps_start", t.eps_start)?;
        unit_interval("train.eps_final", t.eps_final)?;
        unit_interval("train.eps_decay_fraction", t.eps_decay_fraction)?;
        nonnegative("train.advantage_scale", t.advantage_scale)?;

        let b = &self.baseline;
        nonnegative("baseline.k_rep", b.k_rep)?;
        positive("baseline.d_safe_rep", b.d_safe_rep)?;
        nonnegative("baseline.k_sp", b.k_sp)?;
        positive("baseline.s_sp", b.s_sp)?;
        if b.cruise_altitude < e.h_min || b.cruise_altitude > e.h_max {
            return Err(Error::Config(
                "baseline.cruise_altitude outside altitude band".into(),
            ));
        }

        if self.eval.smoothing_window == 0 {
            return Err(Error::Config(
                "eval.smoothing_window must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Reads and validates a config file.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)?;
    let cfg = RunConfig::from_toml_str(&text).map_err(|source| Error::ConfigParse {
        path: path.to_path_buf(),
        source,
    })?;
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_defaults() {
        let cfg = RunConfig::from_toml_str("").unwrap();
        assert_eq!(cfg, RunConfig::default());
        assert_eq!(cfg.env.jammer_power, 0.5);
        cfg.validate().unwrap();
    }

    #[test]
    fn table_values_in_defaults() {
        let c = RunConfig::default();
        assert_eq!(c.env.arena_side, 120.0);
        assert_eq!((c.env.h_min, c.env.h_max), (15.0, 35.0));
        assert_eq!((c.env.n_uavs, c.env.n_pairs), (5, 5));
        assert_eq!(c.env.jammer_positions.len(), 2);
        assert_eq!(c.env.bandwidth, 1.23e6);
        assert_eq!(c.env.power_levels, vec![0.05, 0.12, 0.25]);
        assert_eq!(c.train.total_steps, 1_200_000);
        assert_eq!(c.train.gamma, 0.95);
        assert_eq!((c.net.actor_lr, c.net.critic_lr), (4e-4, 3e-4));
        assert_eq!(c.train.batch_size, 320);
        assert_eq!(c.train.tau, 0.010);
        assert_eq!(c.train.target_update_period, 200);
        assert_eq!(c.train.eps_final, 0.05);
        assert_eq!(c.reward.curriculum_start, 0.8);
    }

    #[test]
    fn single_override_changes_only_that_field() {
        let cfg = RunConfig::from_toml_str("[train]\ntotal_steps = 50000\n").unwrap();
        let mut expected = RunConfig::default();
        expected.train.total_steps = 50_000;
        assert_eq!(cfg, expected);
    }

    #[test]
    fn inverted_altitude_band_rejected() {
        let cfg = RunConfig::from_toml_str("[env]\nh_min = 40.0\nh_max = 35.0\n").unwrap();
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn unknown_key_rejected() {
        assert!(RunConfig::from_toml_str("[env]\nwarp_drive = true\n").is_err());
        assert!(RunConfig::from_toml_str("bogus = 1\n").is_err());
    }

    #[test]
    fn validation_failures() {
        let mut c = RunConfig::default();
        c.env.power_levels.clear();
        assert!(c.validate().is_err());

        let mut c = RunConfig::default();
        c.train.batch_size = c.replay.capacity + 1;
        assert!(c.validate().is_err());

        let mut c = RunConfig::default();
        c.env.arena_side = 0.0;
        assert!(c.validate().is_err());

        let mut c = RunConfig::default();
        c.env.n_uavs = 0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn toml_round_trip() {
        let mut c = RunConfig::default();
        c.seed = 17;
        c.env.n_uavs = 3;
        let back = RunConfig::from_toml_str(&c.to_toml_string()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn jammer_grid_scaled_to_meters() {
        let c = EnvConfig::default();
        let j = c.jammer_positions_m();
        assert_eq!(j[0], Vec3::new(20.0, 20.0, 15.0));
        assert_eq!(j[1], Vec3::new(80.0, 80.0, 15.0));
    }
}
