use std::collections::VecDeque;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::agents::CtdeAgents;
use super::targets::select_action;
use super::update::{update, Batch};
use crate::config::{ReplayConfig, RunConfig, TrainConfig};
use crate::env::{Action, Env};
use crate::error::{Error, Result};
use crate::harness::metrics::{EpisodeAccumulator, EpisodeMetrics};
use crate::replay::{PriorityBuffer, Transition};
use crate::rewards::{homeostatic_update, RewardWeights};

/// ε after `step` environment steps: linear from start to final over the
/// first `eps_decay_fraction` of training, constant afterwards.
pub fn epsilon_at(step: u64, cfg: &TrainConfig) -> f64 {
    let horizon = cfg.eps_decay_fraction * cfg.total_steps as f64;
    if horizon <= 0.0 {
        return cfg.eps_final;
    }
    let frac = step as f64 / horizon;
    if frac >= 1.0 {
        return cfg.eps_final;
    }
    cfg.eps_start + (cfg.eps_final - cfg.eps_start) * frac
}

/// Importance-sampling exponent, annealed linearly over the whole run.
pub fn beta_at(step: u64, total_steps: u64, cfg: &ReplayConfig) -> f64 {
    let frac = if total_steps == 0 {
        1.0
    } else {
        (step as f64 / total_steps as f64).min(1.0)
    };
    cfg.beta_start + (cfg.beta_end - cfg.beta_start) * frac
}

pub(crate) const LEARNER_STREAM: u64 = 1;
pub(crate) const REPLAY_STREAM: u64 = 2;

/// Seeded generator on a numbered ChaCha stream, so the learner, replay
/// sampling and evaluation never share random draws.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub enum TrainEvent<'a> {
    Episode(&'a EpisodeMetrics),
    Checkpoint { step: u64, agents: &'a CtdeAgents },
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub agents: CtdeAgents,
    /// One row per completed episode.
    pub rows: Vec<EpisodeMetrics>,
    pub updates: u64,
    pub final_weights: RewardWeights,
}

/// Runs the full learning loop for `cfg.train.total_steps` environment steps.
///
/// Each step observes, acts ε-greedily under the safety mask, advances the
/// environment and stores the transition. Once `warmup` transitions are
/// stored, every `update_every` steps one batch is drawn and the critic and
/// all actors take a step; target networks are blended every
/// `target_update_period` steps. Reward weights adapt at episode ends.
/// An episode cut short by the step budget produces no row.
pub fn train(
    cfg: &RunConfig,
    seed: u64,
    on_event: &mut dyn FnMut(TrainEvent<'_>) -> Result<()>,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    let tc = &cfg.train;
    let mut env = Env::new(cfg.env.clone(), cfg.reward.clone(), seed);
    let mut learner_rng = stream_rng(seed, LEARNER_STREAM);
    let mut replay_rng = stream_rng(seed, REPLAY_STREAM);
    let mut agents = CtdeAgents::new(&cfg.env, &cfg.net, &mut learner_rng);
    let mut buffer = PriorityBuffer::new(
        cfg.replay.capacity,
        cfg.replay.alpha,
        cfg.replay.eps_priority,
    );
    let mut weights = RewardWeights::from_config(&cfg.reward);
    let n = env.n_agents();

    let mut recent_collisions: VecDeque<bool> =
        VecDeque::with_capacity(cfg.reward.collision_window);
    let mut rows = Vec::new();
    let mut acc = EpisodeAccumulator::default();
    let mut updates = 0u64;

    let mut obs = env.observe_all();
    let mut state = env.global_state();
    for step in 0..tc.total_steps {
        let eps = epsilon_at(step, tc);
        for o in &obs {
            agents.obs_norm.observe(o);
        }
        agents.state_norm.observe(&state);

        let actions: Vec<usize> = (0..n)
            .map(|i| {
                let o = agents.obs_norm.apply(&obs[i]);
                select_action(&agents.actors[i], &o, eps, &env.mask(i), &mut learner_rng)
            })
            .collect();
        let decoded: Vec<Action> = actions
            .iter()
            .map(|&a| Action::decode(a).expect("valid action index"))
            .collect();
        let out = env.step(&decoded, &weights);
        let next_obs = env.observe_all();
        let next_state = env.global_state();
        acc.record(&out, env.world().mean_jammer_distance());

        if recent_collisions.len() == cfg.reward.collision_window.max(1) {
            recent_collisions.pop_front();
        }
        recent_collisions.push_back(out.rewards.p_col > 0.0);

        buffer.push(Transition {
            state: std::mem::take(&mut state),
            obs: std::mem::take(&mut obs),
            actions,
            global_reward: out.rewards.global_r,
            individual_rewards: out.rewards.individual_r.clone(),
            next_state: next_state.clone(),
            next_obs: next_obs.clone(),
            done: out.done,
        });

        let taken = step + 1;
        if buffer.len() >= tc.warmup.max(tc.batch_size) && step % tc.update_every.max(1) == 0 {
            let sample = buffer.sample(
                tc.batch_size,
                beta_at(step, tc.total_steps, &cfg.replay),
                &mut replay_rng,
            )?;
            let refs: Vec<_> = sample.indices.iter().map(|&i| buffer.get(i)).collect();
            let batch = Batch::from_transitions(&refs, sample.weights, &agents);
            let stats = update(&mut agents, &batch, tc.gamma, tc.advantage_scale, &cfg.net);
            if !stats.critic_loss.is_finite() {
                return Err(Error::NonFinite {
                    what: "critic loss",
                    step: taken,
                });
            }
            if stats.actor_losses.iter().any(|l| !l.is_finite()) {
                return Err(Error::NonFinite {
                    what: "actor loss",
                    step: taken,
                });
            }
            buffer.update_priorities(&sample.indices, &stats.priorities);
            acc.record_losses(stats.critic_loss, &stats.actor_losses);
            updates += 1;
        }

        if tc.target_update_period > 0 && taken % tc.target_update_period == 0 {
            agents.polyak_update(tc.tau);
        }

        if out.done {
            let rate = recent_collisions.iter().filter(|&&c| c).count() as f64
                / recent_collisions.len().max(1) as f64;
            weights = homeostatic_update(
                &weights,
                rate,
                taken as f64 / tc.total_steps as f64,
                &cfg.reward,
            );
            let row = std::mem::take(&mut acc).finish(rows.len(), taken, eps, weights);
            on_event(TrainEvent::Episode(&row))?;
            rows.push(row);
            env.reset();
            obs = env.observe_all();
            state = env.global_state();
        } else {
            obs = next_obs;
            state = next_state;
        }

        if tc.checkpoint_every > 0 && taken % tc.checkpoint_every == 0 && taken < tc.total_steps {
            on_event(TrainEvent::Checkpoint {
                step: taken,
                agents: &agents,
            })?;
        }
    }
    if !agents.is_finite() {
        return Err(Error::NonFinite {
            what: "network parameters",
            step: tc.total_steps,
        });
    }
    Ok(TrainOutcome {
        agents,
        rows,
        updates,
        final_weights: weights,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{EnvConfig, NetConfig};

    fn tiny(total_steps: u64, warmup: usize) -> RunConfig {
        let mut cfg = RunConfig::default();
        cfg.env = EnvConfig {
            n_uavs: 2,
            n_pairs: 2,
            jammer_positions: vec![[5.0, 5.0, 1.5]],
            episode_len: 50,
            ..EnvConfig::default()
        };
        cfg.net = NetConfig {
            actor_hidden: vec![16],
            critic_hidden: vec![16],
            ..NetConfig::default()
        };
        cfg.train.total_steps = total_steps;
        cfg.train.warmup = warmup;
        cfg.train.batch_size = 16;
        cfg.replay.capacity = 1000;
        cfg
    }

    #[test]
    fn epsilon_schedule() {
        let tc = TrainConfig {
            total_steps: 1000,
            ..TrainConfig::default()
        };
        assert_eq!(epsilon_at(0, &tc), 1.0);
        assert!((epsilon_at(400, &tc) - 0.525).abs() < 1e-12);
        assert_eq!(epsilon_at(800, &tc), 0.05);
        assert_eq!(epsilon_at(999, &tc), 0.05);
        for s in 0..1000 {
            let e = epsilon_at(s, &tc);
            assert!((0.05..=1.0).contains(&e));
        }
    }

    #[test]
    fn beta_schedule() {
        let rc = ReplayConfig::default();
        assert_eq!(beta_at(0, 100, &rc), 0.4);
        assert_eq!(beta_at(100, 100, &rc), 1.0);
        assert!((beta_at(50, 100, &rc) - 0.7).abs() < 1e-12);
    }

    #[test]
    fn warmup_gates_updates() {
        let cfg = tiny(150, 10_000);
        let out = train(&cfg, 3, &mut |_| Ok(())).unwrap();
        assert_eq!(out.updates, 0);
        let mut rng = stream_rng(3, LEARNER_STREAM);
        let fresh = CtdeAgents::new(&cfg.env, &cfg.net, &mut rng);
        assert_eq!(out.agents.actors, fresh.actors);
        assert_eq!(out.agents.critic, fresh.critic);
        assert_eq!(out.rows.len(), 3);
    }

    #[test]
    fn updates_start_after_warmup() {
        let cfg = tiny(150, 100);
        let out = train(&cfg, 3, &mut |_| Ok(())).unwrap();
        assert_eq!(out.updates, 51);
        assert_eq!(out.rows[0].critic_loss, 0.0);
        assert!(out.rows[2].critic_loss > 0.0);
    }

    #[test]
    fn seeded_runs_repeat() {
        let cfg = tiny(200, 60);
        let a = train(&cfg, 9, &mut |_| Ok(())).unwrap();
        let b = train(&cfg, 9, &mut |_| Ok(())).unwrap();
        assert_eq!(a.rows, b.rows);
        assert_eq!(a.agents, b.agents);
        let c = train(&cfg, 10, &mut |_| Ok(())).unwrap();
        assert_ne!(a.rows, c.rows);
    }

    #[test]
    fn events_and_checkpoints() {
        let mut cfg = tiny(200, 60);
        cfg.train.checkpoint_every = 75;
        let mut episodes = 0;
        let mut checkpoints = vec![];
        train(&cfg, 1, &mut |e| {
            match e {
                TrainEvent::Episode(_) => episodes += 1,
                TrainEvent::Checkpoint { step, .. } => checkpoints.push(step),
            }
            Ok(())
        })
        .unwrap();
        assert_eq!(episodes, 4);
        assert_eq!(checkpoints, vec![75, 150]);
    }
}
