use std::path::Path;

use crate::baselines::{
    GreedyCtde, Policy, PowerConstrained, RandomPolicy, SafeGreedy, SpacingCoop,
};
use crate::config::RunConfig;
use crate::env::Env;
use crate::error::{Error, Result};
use crate::rewards::RewardWeights;
use crate::trainer::CtdeAgents;

use super::checkpoint::load_checkpoint;
use super::metrics::{EpisodeAccumulator, EpisodeMetrics};

/// Names accepted by [`policy_by_name`].
pub const POLICY_NAMES: [&str; 6] = [
    "random",
    "safe_greedy",
    "spacing_coop",
    "safe_greedy_p1",
    "spacing_coop_p1",
    "ctde",
];

const EVAL_STREAM: u64 = 3;

/// Builds a named policy. `ctde` needs trained agents.
pub fn policy_by_name(
    name: &str,
    cfg: &RunConfig,
    agents: Option<CtdeAgents>,
) -> Result<Box<dyn Policy>> {
    let greedy = || SafeGreedy::from_config(&cfg.baseline, &cfg.env);
    let spacing = || SpacingCoop::from_config(&cfg.baseline, &cfg.env, &cfg.reward);
    Ok(match name {
        "random" => Box::new(RandomPolicy),
        "safe_greedy" => Box::new(greedy()),
        "spacing_coop" => Box::new(spacing()),
        "safe_greedy_p1" => Box::new(PowerConstrained(greedy())),
        "spacing_coop_p1" => Box::new(PowerConstrained(spacing())),
        "ctde" => {
            let agents =
                agents.ok_or_else(|| Error::Config("policy ctde requires a checkpoint".into()))?;
            if agents.n_agents() != cfg.env.n_uavs
                || agents.obs_norm.dim() != cfg.env.obs_dim()
                || agents.state_norm.dim() != cfg.env.state_dim()
            {
                return Err(Error::Checkpoint(
                    "checkpoint does not match the environment config".into(),
                ));
            }
            Box::new(GreedyCtde { agents })
        }
        other => {
            return Err(Error::Config(format!(
                "unknown policy {other:?}; expected one of {}",
                POLICY_NAMES.join(", ")
            )))
        }
    })
}

/// Loads the checkpoint if given and builds the named policy.
pub fn load_policy(
    name: &str,
    cfg: &RunConfig,
    checkpoint: Option<&Path>,
) -> Result<Box<dyn Policy>> {
    let agents = match checkpoint {
        Some(p) => Some(load_checkpoint(p, &cfg.net)?),
        None => None,
    };
    policy_by_name(name, cfg, agents)
}

/// Rolls `policy` out for `episodes` full episodes with the base reward
/// weights and no exploration. Environment randomness follows `seed` exactly
/// as in training, so equal seeds give equal ground traffic and spawns.
pub fn run_eval(
    cfg: &RunConfig,
    policy: &dyn Policy,
    episodes: usize,
    seed: u64,
) -> Result<Vec<EpisodeMetrics>> {
    run_eval_with(cfg, policy, episodes, seed, |_, _| {})
}

/// [`run_eval`] with a hook called after every step with the environment
/// and the actions just applied.
pub fn run_eval_with(
    cfg: &RunConfig,
    policy: &dyn Policy,
    episodes: usize,
    seed: u64,
    mut on_step: impl FnMut(&Env, &[crate::env::Action]),
) -> Result<Vec<EpisodeMetrics>> {
    cfg.validate()?;
    let mut env = Env::new(cfg.env.clone(), cfg.reward.clone(), seed);
    let mut rng = crate::trainer::stream_rng(seed, EVAL_STREAM);
    let weights = RewardWeights::from_config(&cfg.reward);
    let mut rows = Vec::with_capacity(episodes);
    let mut total = 0u64;
    for ep in 0..episodes {
        if ep > 0 {
            env.reset();
        }
        let mut acc = EpisodeAccumulator::default();
        loop {
            let actions: Vec<_> = (0..env.n_agents())
                .map(|i| {
                    let obs = env.observe(i);
                    let mask = env.mask(i);
                    let a = policy.act(env.world(), i, &obs, &mask, &mut rng);
                    debug_assert!(mask.allows(a.encode()));
                    a
                })
                .collect();
            let out = env.step(&actions, &weights);
            total += 1;
            acc.record(&out, env.world().mean_jammer_distance());
            on_step(&env, &actions);
            if out.done {
                break;
            }
        }
        rows.push(acc.finish(ep, total, 0.0, weights));
    }
    Ok(rows)
}
