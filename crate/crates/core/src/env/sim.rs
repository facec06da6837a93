use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{
    apply_actions, evaluate_links, global_state, observe, safety_mask, step_gcvs, Action,
    ActionMask, LinkReport, World,
};
use crate::config::{EnvConfig, RewardConfig};
use crate::rewards::{compute_rewards, RewardBreakdown, RewardWeights};

/// Episodic wrapper around [`World`] owning the environment's random stream.
///
/// Only spawning and ground mobility consume the stream, so two environments
/// built from the same seed see identical ground traffic and spawn points no
/// matter what the UAVs do.
#[derive(Debug, Clone)]
pub struct Env {
    pub cfg: EnvConfig,
    pub reward_cfg: RewardConfig,
    world: World,
    rng: ChaCha8Rng,
}

#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub rewards: RewardBreakdown,
    pub links: LinkReport,
    /// True once the episode horizon is reached.
    pub done: bool,
}

impl Env {
    pub fn new(cfg: EnvConfig, reward_cfg: RewardConfig, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let world = World::spawn(&cfg, &mut rng);
        Self {
            cfg,
            reward_cfg,
            world,
            rng,
        }
    }

    pub fn world(&self) -> &World {
        &self.world
    }

    pub fn reset(&mut self) -> &World {
        self.world = World::spawn(&self.cfg, &mut self.rng);
        &self.world
    }

    pub fn n_agents(&self) -> usize {
        self.world.uavs.len()
    }

    pub fn observe(&self, agent: usize) -> Vec<f64> {
        observe(&self.world, agent, &self.cfg)
    }

    pub fn observe_all(&self) -> Vec<Vec<f64>> {
        (0..self.n_agents()).map(|i| self.observe(i)).collect()
    }

    pub fn global_state(&self) -> Vec<f64> {
        global_state(&self.world, &self.cfg)
    }

    pub fn mask(&self, agent: usize) -> ActionMask {
        safety_mask(&self.world, agent, &self.cfg)
    }

    /// Advances one step: UAVs move, ground nodes move, then links and
    /// rewards are evaluated on the resulting world.
    pub fn step(&mut self, actions: &[Action], weights: &RewardWeights) -> StepOutcome {
        apply_actions(&mut self.world, actions, &self.cfg);
        step_gcvs(&mut self.world, &mut self.rng, &self.cfg);
        let links = evaluate_links(&self.world, &self.cfg);
        let rewards = compute_rewards(
            &self.world,
            actions,
            &links,
            weights,
            &self.cfg,
            &self.reward_cfg,
        );
        StepOutcome {
            rewards,
            links,
            done: self.world.step_count >= self.cfg.episode_len,
        }
    }
}
