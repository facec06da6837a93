use rand::Rng;

use super::agents::CtdeAgents;
use crate::env::ActionMask;
use crate::nn::MlpNet;

/// Index of the largest entry, ties to the lowest index.
pub fn argmax(q: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in q.iter().enumerate().skip(1) {
        if v > q[best] {
            best = i;
        }
    }
    best
}

/// Argmax over the allowed entries only, ties to the lowest index.
pub fn masked_argmax(q: &[f64], mask: &ActionMask) -> usize {
    let mut best: Option<usize> = None;
    for a in mask.allowed() {
        if best.is_none_or(|b| q[a] > q[b]) {
            best = Some(a);
        }
    }
    best.expect("mask allows at least one action")
}

/// ε-greedy over the allowed actions: uniform with probability ε, masked
/// greedy otherwise. `obs` must already be normalized.
pub fn select_action<R: Rng + ?Sized>(
    actor: &MlpNet,
    obs: &[f64],
    eps: f64,
    mask: &ActionMask,
    rng: &mut R,
) -> usize {
    if eps > 0.0 && rng.random::<f64>() < eps {
        let allowed: Vec<usize> = mask.allowed().collect();
        return allowed[rng.random_range(0..allowed.len())];
    }
    masked_argmax(&actor.forward(obs), mask)
}

/// `r + γ·next` with the bootstrap dropped on terminal transitions.
pub fn bootstrap(reward: f64, next_value: f64, done: bool, gamma: f64) -> f64 {
    if done {
        reward
    } else {
        reward + gamma * next_value
    }
}

/// Double-DQN composite target for one agent. The next action is the argmax
/// of the online net over the full action set; the target net evaluates it.
/// `obs_next` must already be normalized.
#[allow(clippy::too_many_arguments)]
pub fn actor_target_value(
    individual_r: f64,
    adv: f64,
    obs_next: &[f64],
    done: bool,
    online: &MlpNet,
    target: &MlpNet,
    gamma: f64,
    lambda: f64,
) -> f64 {
    let base = individual_r + lambda * adv;
    if done {
        return base;
    }
    let a_star = argmax(&online.forward(obs_next));
    base + gamma * target.forward(obs_next)[a_star]
}

impl CtdeAgents {
    /// `y_v = R + γ·V'(s')` with the target critic.
    pub fn critic_target(&self, global_r: f64, s_next: &[f64], done: bool, gamma: f64) -> f64 {
        if done {
            return global_r;
        }
        bootstrap(global_r, self.target_value(s_next), done, gamma)
    }

    /// `A = y_v − V(s)` with the online critic as the baseline.
    pub fn advantage(
        &self,
        global_r: f64,
        s: &[f64],
        s_next: &[f64],
        done: bool,
        gamma: f64,
    ) -> f64 {
        self.critic_target(global_r, s_next, done, gamma) - self.value(s)
    }

    #[allow(clippy::too_many_arguments)]
    pub fn actor_target(
        &self,
        agent: usize,
        individual_r: f64,
        adv: f64,
        obs_next: &[f64],
        done: bool,
        gamma: f64,
        lambda: f64,
    ) -> f64 {
        actor_target_value(
            individual_r,
            adv,
            &self.obs_norm.apply(obs_next),
            done,
            &self.actors[agent],
            &self.actor_targets[agent],
            gamma,
            lambda,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::NUM_ACTIONS;
    use crate::nn::Layer;
    use ndarray::{Array1, Array2};
    use proptest::prelude::{prop_assert, prop_assert_eq, proptest};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// One-layer net returning `bias` regardless of input.
    fn constant_net(inputs: usize, bias: &[f64]) -> MlpNet {
        MlpNet::from_layers(vec![Layer {
            w: Array2::zeros((inputs, bias.len())),
            b: Array1::from(bias.to_vec()),
        }])
        .unwrap()
    }

    #[test]
    fn argmax_ties_go_low() {
        assert_eq!(argmax(&[1.0, 3.0, 3.0, 2.0]), 1);
        assert_eq!(argmax(&[0.0; 4]), 0);
        let mut m = ActionMask::all();
        m.0[1] = false;
        let mut q = vec![0.0; NUM_ACTIONS];
        q[1] = 9.0;
        q[4] = 2.0;
        q[7] = 2.0;
        assert_eq!(masked_argmax(&q, &m), 4);
    }

    #[test]
    fn single_allowed_action_is_forced() {
        let mut mask = ActionMask([false; NUM_ACTIONS]);
        mask.0[13] = true;
        let net = constant_net(2, &[5.0; NUM_ACTIONS]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for eps in [0.0, 0.5, 1.0] {
            assert_eq!(select_action(&net, &[0.0, 0.0], eps, &mask, &mut rng), 13);
        }
    }

    #[test]
    fn full_exploration_is_uniform_over_allowed() {
        let mut mask = ActionMask::all();
        for a in [0, 5, 6, 20] {
            mask.0[a] = false;
        }
        let net = constant_net(1, &[0.0; NUM_ACTIONS]);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut counts = [0usize; NUM_ACTIONS];
        let n = 100_000;
        for _ in 0..n {
            counts[select_action(&net, &[0.0], 1.0, &mask, &mut rng)] += 1;
        }
        let expect = 1.0 / mask.count() as f64;
        for a in 0..NUM_ACTIONS {
            let f = counts[a] as f64 / n as f64;
            if mask.allows(a) {
                assert!((f - expect).abs() < 0.02, "{a}: {f}");
            } else {
                assert_eq!(counts[a], 0);
            }
        }
    }

    #[test]
    fn bootstrap_cases() {
        assert_eq!(bootstrap(1.5, 10.0, true, 0.95), 1.5);
        assert_eq!(bootstrap(1.5, 10.0, false, 0.0), 1.5);
        assert_eq!(bootstrap(1.0, 2.0, false, 0.95), 2.9);
    }

    fn constant_agents(v_online: f64, v_target: f64) -> CtdeAgents {
        use crate::config::NetConfig;
        use crate::nn::Normalizer;
        let net = NetConfig::default();
        let actor = constant_net(3, &[0.0; NUM_ACTIONS]);
        CtdeAgents::from_nets(
            vec![actor.clone()],
            vec![actor],
            constant_net(2, &[v_online]),
            constant_net(2, &[v_target]),
            Normalizer::new(3, 1e-8, 10.0),
            Normalizer::new(2, 1e-8, 10.0),
            &net,
        )
    }

    #[test]
    fn critic_target_and_advantage_with_constant_nets() {
        let a = constant_agents(1.25, 4.0);
        let s = [0.3, -0.2];
        assert_eq!(a.critic_target(2.0, &s, false, 0.95), 2.0 + 0.95 * 4.0);
        assert_eq!(a.critic_target(2.0, &s, true, 0.95), 2.0);
        assert_eq!(
            a.advantage(2.0, &s, &s, false, 0.95),
            2.0 + 0.95 * 4.0 - 1.25
        );
        let zero = constant_agents(0.0, 4.0);
        assert_eq!(zero.advantage(2.0, &s, &s, true, 0.95), 2.0);
        let matched = constant_agents(5.8, 4.0);
        assert_eq!(matched.advantage(2.0, &s, &s, false, 0.95), 0.0);
    }

    #[test]
    fn actor_target_terminal_and_degenerate() {
        let online = constant_net(2, &[1.0, 4.0, 2.0, 0.0]);
        let target = constant_net(2, &[10.0, 20.0, 30.0, 40.0]);
        let o = [0.0, 0.0];
        assert_eq!(
            actor_target_value(1.0, 2.0, &o, true, &online, &target, 0.95, 0.5),
            2.0
        );
        assert_eq!(
            actor_target_value(1.0, 2.0, &o, false, &online, &target, 0.0, 0.0),
            1.0
        );
        // online picks index 1, target evaluates it at 20 rather than its own max 40
        assert_eq!(
            actor_target_value(1.0, 2.0, &o, false, &online, &target, 0.5, 0.5),
            1.0 + 1.0 + 10.0
        );
    }

    proptest! {
        #[test]
        fn masked_argmax_respects_mask(
            q in proptest::collection::vec(-5.0f64..5.0, NUM_ACTIONS),
            bits in proptest::collection::vec(proptest::bool::ANY, NUM_ACTIONS),
        ) {
            let mut mask = ActionMask([false; NUM_ACTIONS]);
            mask.0.copy_from_slice(&bits);
            mask.0[0] = true;
            let a = masked_argmax(&q, &mask);
            prop_assert!(mask.allows(a));
            for b in mask.allowed() {
                prop_assert!(q[b] <= q[a]);
            }
        }

        #[test]
        fn target_net_never_changes_selected_action(seed in 0u64..200) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let online = MlpNet::new(&[3, 6, 4], &mut rng);
            let t1 = MlpNet::new(&[3, 6, 4], &mut rng);
            let t2 = MlpNet::new(&[3, 6, 4], &mut rng);
            let o: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
            let a_star = argmax(&online.forward(&o));
            let y1 = actor_target_value(0.3, -0.1, &o, false, &online, &t1, 0.9, 0.5);
            let y2 = actor_target_value(0.3, -0.1, &o, false, &online, &t2, 0.9, 0.5);
            prop_assert_eq!(y1, 0.3 + 0.5 * -0.1 + 0.9 * t1.forward(&o)[a_star]);
            prop_assert_eq!(y2, 0.3 + 0.5 * -0.1 + 0.9 * t2.forward(&o)[a_star]);
        }
    }
}
