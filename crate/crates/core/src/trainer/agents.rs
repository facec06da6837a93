use rand::Rng;

use crate::config::{EnvConfig, NetConfig};
use crate::env::NUM_ACTIONS;
use crate::nn::{Adam, AdamHyper, MlpNet, Normalizer};

/// Learner state: one Q-network actor per UAV, a shared state-value critic,
/// their target copies, input normalizers and optimizer states.
#[derive(Debug, Clone, PartialEq)]
pub struct CtdeAgents {
    pub actors: Vec<MlpNet>,
    pub actor_targets: Vec<MlpNet>,
    pub critic: MlpNet,
    pub critic_target: MlpNet,
    /// Shared by every actor.
    pub obs_norm: Normalizer,
    pub state_norm: Normalizer,
    pub actor_opts: Vec<Adam>,
    pub critic_opt: Adam,
}

fn sizes(input: usize, hidden: &[usize], output: usize) -> Vec<usize> {
    let mut s = Vec::with_capacity(hidden.len() + 2);
    s.push(input);
    s.extend_from_slice(hidden);
    s.push(output);
    s
}

pub(crate) fn actor_hyper(net: &NetConfig) -> AdamHyper {
    AdamHyper {
        lr: net.actor_lr,
        beta1: net.adam_beta1,
        beta2: net.adam_beta2,
        eps: net.adam_eps,
    }
}

pub(crate) fn critic_hyper(net: &NetConfig) -> AdamHyper {
    AdamHyper {
        lr: net.critic_lr,
        ..actor_hyper(net)
    }
}

impl CtdeAgents {
    /// Fresh randomly initialized agents; targets start as exact copies.
    pub fn new<R: Rng + ?Sized>(env: &EnvConfig, net: &NetConfig, rng: &mut R) -> Self {
        let actor_sizes = sizes(env.obs_dim(), &net.actor_hidden, NUM_ACTIONS);
        let critic_sizes = sizes(env.state_dim(), &net.critic_hidden, 1);
        let actors: Vec<MlpNet> = (0..env.n_uavs)
            .map(|_| MlpNet::new(&actor_sizes, rng))
            .collect();
        let critic = MlpNet::new(&critic_sizes, rng);
        Self::from_nets(
            actors.clone(),
            actors,
            critic.clone(),
            critic,
            Normalizer::new(env.obs_dim(), net.norm_eps, net.norm_clip),
            Normalizer::new(env.state_dim(), net.norm_eps, net.norm_clip),
            net,
        )
    }

    /// Assembles agents from existing networks with fresh optimizer state.
    pub fn from_nets(
        actors: Vec<MlpNet>,
        actor_targets: Vec<MlpNet>,
        critic: MlpNet,
        critic_target: MlpNet,
        obs_norm: Normalizer,
        state_norm: Normalizer,
        net: &NetConfig,
    ) -> Self {
        let actor_opts = actors
            .iter()
            .map(|a| Adam::new(a, actor_hyper(net)))
            .collect();
        let critic_opt = Adam::new(&critic, critic_hyper(net));
        Self {
            actors,
            actor_targets,
            critic,
            critic_target,
            obs_norm,
            state_norm,
            actor_opts,
            critic_opt,
        }
    }

    pub fn n_agents(&self) -> usize {
        self.actors.len()
    }

    /// Online Q-values of `agent` for a raw observation.
    pub fn q_values(&self, agent: usize, obs: &[f64]) -> Vec<f64> {
        self.actors[agent].forward(&self.obs_norm.apply(obs))
    }

    /// Online critic value of a raw global state.
    pub fn value(&self, state: &[f64]) -> f64 {
        self.critic.forward(&self.state_norm.apply(state))[0]
    }

    /// Target critic value of a raw global state.
    pub fn target_value(&self, state: &[f64]) -> f64 {
        self.critic_target.forward(&self.state_norm.apply(state))[0]
    }

    /// `θ' ← τθ + (1 − τ)θ'` for every actor and the critic.
    pub fn polyak_update(&mut self, tau: f64) {
        for (t, o) in self.actor_targets.iter_mut().zip(&self.actors) {
            t.soft_update_from(o, tau);
        }
        self.critic_target.soft_update_from(&self.critic, tau);
    }

    pub fn is_finite(&self) -> bool {
        self.actors
            .iter()
            .chain(&self.actor_targets)
            .all(MlpNet::is_finite)
            && self.critic.is_finite()
            && self.critic_target.is_finite()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn shapes() {
        let env = EnvConfig::default();
        let net = NetConfig::default();
        let a = CtdeAgents::new(&env, &net, &mut ChaCha8Rng::seed_from_u64(0));
        assert_eq!(a.n_agents(), 5);
        for (o, t) in a.actors.iter().zip(&a.actor_targets) {
            assert_eq!(o.sizes(), &[20, 128, 128, 21]);
            assert_eq!(o, t);
        }
        assert_eq!(a.critic.sizes(), &[45, 256, 256, 1]);
        assert_eq!(a.critic, a.critic_target);
        assert_eq!(a.critic_opt.hyper.lr, 3e-4);
        assert_eq!(a.actor_opts[0].hyper.lr, 4e-4);
    }

    #[test]
    fn actors_are_independent_draws() {
        let env = EnvConfig::default();
        let a = CtdeAgents::new(
            &env,
            &NetConfig::default(),
            &mut ChaCha8Rng::seed_from_u64(0),
        );
        assert_ne!(a.actors[0], a.actors[1]);
    }
}
