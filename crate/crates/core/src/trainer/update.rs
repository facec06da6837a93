use ndarray::{Array2, ArrayView2};

use super::agents::CtdeAgents;
use super::targets::{argmax, bootstrap};
use crate::config::NetConfig;
use crate::nn::{huber, ForwardCache, Gradients, MlpNet};
use crate::replay::TransitionRef;

/// A sampled minibatch with inputs already normalized.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub states: Array2<f64>,
    pub next_states: Array2<f64>,
    /// Per agent, one row per sample.
    pub obs: Vec<Array2<f64>>,
    pub next_obs: Vec<Array2<f64>>,
    /// Per agent, one taken action per sample.
    pub actions: Vec<Vec<usize>>,
    pub global_r: Vec<f64>,
    /// Per agent, one reward per sample.
    pub individual_r: Vec<Vec<f64>>,
    pub done: Vec<bool>,
    pub weights: Vec<f64>,
}

fn stack<'a>(rows: impl ExactSizeIterator<Item = &'a [f64]>, width: usize) -> Array2<f64> {
    let n = rows.len();
    let mut flat = Vec::with_capacity(n * width);
    for r in rows {
        assert_eq!(r.len(), width, "row width");
        flat.extend_from_slice(r);
    }
    Array2::from_shape_vec((n, width), flat).expect("stacked rows")
}

impl Batch {
    pub fn from_transitions(
        ts: &[TransitionRef<'_>],
        weights: Vec<f64>,
        agents: &CtdeAgents,
    ) -> Self {
        assert!(!ts.is_empty(), "empty batch");
        assert_eq!(ts.len(), weights.len(), "one weight per sample");
        let n_agents = agents.n_agents();
        let sd = agents.state_norm.dim();
        let od = agents.obs_norm.dim();
        let mut states = stack(ts.iter().map(|t| t.state), sd);
        let mut next_states = stack(ts.iter().map(|t| t.next_state), sd);
        agents.state_norm.apply_rows(&mut states);
        agents.state_norm.apply_rows(&mut next_states);
        let mut obs = Vec::with_capacity(n_agents);
        let mut next_obs = Vec::with_capacity(n_agents);
        for i in 0..n_agents {
            let mut o = stack(ts.iter().map(|t| t.obs(i)), od);
            let mut o2 = stack(ts.iter().map(|t| t.next_obs(i)), od);
            agents.obs_norm.apply_rows(&mut o);
            agents.obs_norm.apply_rows(&mut o2);
            obs.push(o);
            next_obs.push(o2);
        }
        Self {
            states,
            next_states,
            obs,
            next_obs,
            actions: (0..n_agents)
                .map(|i| ts.iter().map(|t| t.actions[i]).collect())
                .collect(),
            global_r: ts.iter().map(|t| t.global_reward).collect(),
            individual_r: (0..n_agents)
                .map(|i| ts.iter().map(|t| t.individual_rewards[i]).collect())
                .collect(),
            done: ts.iter().map(|t| t.done).collect(),
            weights,
        }
    }

    pub fn len(&self) -> usize {
        self.done.len()
    }

    pub fn is_empty(&self) -> bool {
        self.done.is_empty()
    }
}

/// Critic and actor targets for a batch, all computed before any update.
#[derive(Debug, Clone, PartialEq)]
pub struct Targets {
    pub y_v: Vec<f64>,
    /// Online critic value of the current state.
    pub v: Vec<f64>,
    pub adv: Vec<f64>,
    /// Per agent.
    pub y_q: Vec<Vec<f64>>,
}

fn column(a: &Array2<f64>, j: usize) -> Vec<f64> {
    a.column(j).to_vec()
}

pub fn compute_targets(agents: &CtdeAgents, batch: &Batch, gamma: f64, lambda: f64) -> Targets {
    let v = column(&agents.critic.forward_batch(batch.states.view()), 0);
    targets_given_value(agents, batch, v, gamma, lambda)
}

fn targets_given_value(
    agents: &CtdeAgents,
    batch: &Batch,
    v: Vec<f64>,
    gamma: f64,
    lambda: f64,
) -> Targets {
    let v_next = column(
        &agents.critic_target.forward_batch(batch.next_states.view()),
        0,
    );
    let y_v: Vec<f64> = (0..batch.len())
        .map(|j| bootstrap(batch.global_r[j], v_next[j], batch.done[j], gamma))
        .collect();
    let adv: Vec<f64> = y_v.iter().zip(&v).map(|(y, v)| y - v).collect();
    let y_q = (0..agents.n_agents())
        .map(|i| {
            let q_online = agents.actors[i].forward_batch(batch.next_obs[i].view());
            let q_target = agents.actor_targets[i].forward_batch(batch.next_obs[i].view());
            (0..batch.len())
                .map(|j| {
                    let base = batch.individual_r[i][j] + lambda * adv[j];
                    if batch.done[j] {
                        return base;
                    }
                    let a_star = argmax(q_online.row(j).as_slice().expect("row"));
                    base + gamma * q_target[[j, a_star]]
                })
                .collect()
        })
        .collect();
    Targets { y_v, v, adv, y_q }
}

/// Weighted Huber loss `mean_j w_j·H(y_j − V(s_j))`, its parameter gradient
/// and the residuals `y_j − V(s_j)`.
pub fn critic_loss_grad(
    critic: &MlpNet,
    states: ArrayView2<f64>,
    y_v: &[f64],
    weights: &[f64],
    delta: f64,
) -> (f64, Gradients, Vec<f64>) {
    let (out, cache) = critic.forward_train(states);
    critic_loss_grad_cached(critic, &out, &cache, y_v, weights, delta)
}

fn critic_loss_grad_cached(
    critic: &MlpNet,
    out: &Array2<f64>,
    cache: &ForwardCache,
    y_v: &[f64],
    weights: &[f64],
    delta: f64,
) -> (f64, Gradients, Vec<f64>) {
    let n = y_v.len() as f64;
    let mut g = Array2::zeros(out.raw_dim());
    let mut loss = 0.0;
    let mut residuals = Vec::with_capacity(y_v.len());
    for j in 0..y_v.len() {
        let r = y_v[j] - out[[j, 0]];
        let (l, dl) = huber(r, delta);
        loss += weights[j] * l / n;
        g[[j, 0]] = -weights[j] * dl / n;
        residuals.push(r);
    }
    let (grads, _) = critic.backward(cache, g.view());
    (loss, grads, residuals)
}

/// Weighted Huber loss on the taken action's Q-value. The output gradient is
/// nonzero only in the taken action's column.
pub fn actor_loss_grad(
    actor: &MlpNet,
    obs: ArrayView2<f64>,
    actions: &[usize],
    y_q: &[f64],
    weights: &[f64],
    delta: f64,
) -> (f64, Gradients, Vec<f64>) {
    let n = y_q.len() as f64;
    let (out, cache) = actor.forward_train(obs);
    let mut g = Array2::zeros(out.raw_dim());
    let mut loss = 0.0;
    let mut residuals = Vec::with_capacity(y_q.len());
    for j in 0..y_q.len() {
        let a = actions[j];
        let r = y_q[j] - out[[j, a]];
        let (l, dl) = huber(r, delta);
        loss += weights[j] * l / n;
        g[[j, a]] = -weights[j] * dl / n;
        residuals.push(r);
    }
    let (grads, _) = actor.backward(&cache, g.view());
    (loss, grads, residuals)
}

/// One clipped Adam step on the critic. Returns the pre-step loss and residuals.
pub fn critic_update(
    agents: &mut CtdeAgents,
    batch: &Batch,
    y_v: &[f64],
    net: &NetConfig,
) -> (f64, Vec<f64>) {
    assert!(!batch.is_empty(), "empty batch");
    let (loss, mut grads, res) = critic_loss_grad(
        &agents.critic,
        batch.states.view(),
        y_v,
        &batch.weights,
        net.huber_delta,
    );
    grads.clip_global_norm(net.grad_clip_norm);
    agents.critic_opt.step(&mut agents.critic, &grads);
    (loss, res)
}

/// One clipped Adam step on actor `agent`; other actors are untouched.
pub fn actor_update(
    agents: &mut CtdeAgents,
    agent: usize,
    batch: &Batch,
    y_q: &[f64],
    net: &NetConfig,
) -> (f64, Vec<f64>) {
    assert!(!batch.is_empty(), "empty batch");
    let (loss, mut grads, res) = actor_loss_grad(
        &agents.actors[agent],
        batch.obs[agent].view(),
        &batch.actions[agent],
        y_q,
        &batch.weights,
        net.huber_delta,
    );
    grads.clip_global_norm(net.grad_clip_norm);
    agents.actor_opts[agent].step(&mut agents.actors[agent], &grads);
    (loss, res)
}

/// Replay priority signal per sample: `|critic residual| + mean_i |actor_i residual|`.
/// The buffer adds its ε floor on top.
pub fn td_error_for_priority(critic_res: &[f64], actor_res: &[Vec<f64>]) -> Vec<f64> {
    let k = actor_res.len().max(1) as f64;
    critic_res
        .iter()
        .enumerate()
        .map(|(j, c)| c.abs() + actor_res.iter().map(|r| r[j].abs()).sum::<f64>() / k)
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct UpdateStats {
    pub critic_loss: f64,
    pub actor_losses: Vec<f64>,
    pub priorities: Vec<f64>,
}

/// Full learner step on one batch: targets from the pre-update networks,
/// then a critic step and one step per actor.
pub fn update(
    agents: &mut CtdeAgents,
    batch: &Batch,
    gamma: f64,
    lambda: f64,
    net: &NetConfig,
) -> UpdateStats {
    assert!(!batch.is_empty(), "empty batch");
    // one critic pass serves both the advantage baseline and the critic loss
    let (v_out, cache) = agents.critic.forward_train(batch.states.view());
    let targets = targets_given_value(agents, batch, column(&v_out, 0), gamma, lambda);
    let (critic_loss, mut grads, critic_res) = critic_loss_grad_cached(
        &agents.critic,
        &v_out,
        &cache,
        &targets.y_v,
        &batch.weights,
        net.huber_delta,
    );
    grads.clip_global_norm(net.grad_clip_norm);
    agents.critic_opt.step(&mut agents.critic, &grads);
    let mut actor_losses = Vec::with_capacity(agents.n_agents());
    let mut actor_res = Vec::with_capacity(agents.n_agents());
    for i in 0..agents.n_agents() {
        let (l, r) = actor_update(agents, i, batch, &targets.y_q[i], net);
        actor_losses.push(l);
        actor_res.push(r);
    }
    UpdateStats {
        critic_loss,
        actor_losses,
        priorities: td_error_for_priority(&critic_res, &actor_res),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::EnvConfig;
    use crate::env::NUM_ACTIONS;
    use crate::replay::Transition;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn small_env() -> EnvConfig {
        EnvConfig {
            n_uavs: 2,
            n_pairs: 2,
            ..EnvConfig::default()
        }
    }

    fn small_net() -> NetConfig {
        NetConfig {
            actor_hidden: vec![8],
            critic_hidden: vec![8],
            ..NetConfig::default()
        }
    }

    fn random_transition(env: &EnvConfig, rng: &mut ChaCha8Rng, done: bool) -> Transition {
        let mut v = |n: usize| {
            (0..n)
                .map(|_| rng.random_range(-1.0..1.0))
                .collect::<Vec<f64>>()
        };
        let state = v(env.state_dim());
        let next_state = v(env.state_dim());
        let obs = (0..env.n_uavs).map(|_| v(env.obs_dim())).collect();
        let next_obs = (0..env.n_uavs).map(|_| v(env.obs_dim())).collect();
        let individual_rewards = v(env.n_uavs);
        let global_reward = v(1)[0];
        Transition {
            state,
            obs,
            actions: (0..env.n_uavs)
                .map(|_| rng.random_range(0..NUM_ACTIONS))
                .collect(),
            global_reward,
            individual_rewards,
            next_state,
            next_obs,
            done,
        }
    }

    fn setup(seed: u64, n: usize) -> (CtdeAgents, Batch, Vec<Transition>) {
        let env = small_env();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let agents = CtdeAgents::new(&env, &small_net(), &mut rng);
        let ts: Vec<Transition> = (0..n)
            .map(|j| random_transition(&env, &mut rng, j % 3 == 0))
            .collect();
        let refs: Vec<TransitionRef> = ts.iter().map(Transition::view).collect();
        let w = (0..n).map(|_| rng.random_range(0.1..1.0)).collect();
        let batch = Batch::from_transitions(&refs, w, &agents);
        (agents, batch, ts)
    }

    #[test]
    fn batch_targets_match_single_sample_path() {
        let (agents, batch, ts) = setup(4, 9);
        let t = compute_targets(&agents, &batch, 0.95, 0.5);
        for (j, tr) in ts.iter().enumerate() {
            let y = agents.critic_target(tr.global_reward, &tr.next_state, tr.done, 0.95);
            assert_relative_eq!(t.y_v[j], y, max_relative = 1e-12);
            let a = agents.advantage(tr.global_reward, &tr.state, &tr.next_state, tr.done, 0.95);
            assert_relative_eq!(t.adv[j], a, max_relative = 1e-12, epsilon = 1e-12);
            for i in 0..2 {
                let yq = agents.actor_target(
                    i,
                    tr.individual_rewards[i],
                    a,
                    &tr.next_obs[i],
                    tr.done,
                    0.95,
                    0.5,
                );
                assert_relative_eq!(t.y_q[i][j], yq, max_relative = 1e-12, epsilon = 1e-12);
            }
            if tr.done {
                assert_eq!(t.y_v[j], tr.global_reward);
                assert_eq!(t.y_q[0][j], tr.individual_rewards[0] + 0.5 * t.adv[j]);
            }
        }
    }

    #[test]
    fn zero_weights_zero_gradient() {
        let (agents, batch, _) = setup(5, 6);
        let y = vec![3.0; 6];
        let w = vec![0.0; 6];
        let (loss, g, _) = critic_loss_grad(&agents.critic, batch.states.view(), &y, &w, 1.0);
        assert_eq!(loss, 0.0);
        assert_eq!(g.global_norm(), 0.0);
        let (loss, g, _) = actor_loss_grad(
            &agents.actors[0],
            batch.obs[0].view(),
            &batch.actions[0],
            &y,
            &w,
            1.0,
        );
        assert_eq!(loss, 0.0);
        assert_eq!(g.global_norm(), 0.0);
    }

    #[test]
    fn perfect_critic_has_zero_loss() {
        let (mut agents, batch, _) = setup(6, 5);
        let v = column(&agents.critic.forward_batch(batch.states.view()), 0);
        let before = agents.critic.clone();
        let (loss, res) = critic_update(&mut agents, &batch, &v, &NetConfig::default());
        assert_eq!(loss, 0.0);
        assert!(res.iter().all(|&r| r == 0.0));
        // zero gradient and zero moments leave the parameters in place
        assert_eq!(agents.critic, before);
    }

    #[test]
    fn single_sample_critic_loss_is_plain_huber() {
        let (agents, batch, _) = setup(7, 1);
        let v = agents.critic.forward_batch(batch.states.view())[[0, 0]];
        let (loss, _, res) =
            critic_loss_grad(&agents.critic, batch.states.view(), &[v + 2.5], &[1.0], 1.0);
        assert_relative_eq!(res[0], 2.5, max_relative = 1e-12);
        assert_relative_eq!(loss, huber(res[0], 1.0).0, max_relative = 1e-12);
    }

    #[test]
    fn actor_gradient_only_through_taken_action() {
        let (agents, batch, _) = setup(8, 1);
        let actor = &agents.actors[0];
        let a = batch.actions[0][0];
        let y = [0.7];
        let (_, g, _) = actor_loss_grad(actor, batch.obs[0].view(), &[a], &y, &[1.0], 1.0);
        // output-layer weight gradient vanishes on every other column
        let last = g.layers.last().unwrap();
        for col in 0..NUM_ACTIONS {
            let nz = last.w.column(col).iter().any(|&x| x != 0.0) || last.b[col] != 0.0;
            assert_eq!(nz, col == a, "column {col}");
        }
    }

    #[test]
    fn actor_gradient_matches_finite_differences() {
        let (agents, batch, _) = setup(9, 1);
        let a = batch.actions[1][0];
        let o = batch.obs[1].row(0).to_vec();
        let y = [agents.actors[1].forward(&o)[a] + 0.4];
        let loss_of = |net: &MlpNet| huber(y[0] - net.forward(&o)[a], 1.0).0;
        let (_, g, _) = actor_loss_grad(
            &agents.actors[1],
            batch.obs[1].view(),
            &[a],
            &y,
            &[1.0],
            1.0,
        );
        let h = 1e-6;
        let mut net = agents.actors[1].clone();
        for l in 0..net.layers().len() {
            for k in 0..net.layers()[l].b.len() {
                let orig = net.layers()[l].b[k];
                net.layers_mut()[l].b[k] = orig + h;
                let up = loss_of(&net);
                net.layers_mut()[l].b[k] = orig - h;
                let down = loss_of(&net);
                net.layers_mut()[l].b[k] = orig;
                let fd = (up - down) / (2.0 * h);
                assert!(
                    (fd - g.layers[l].b[k]).abs() < 1e-7,
                    "layer {l} bias {k}: {fd} vs {}",
                    g.layers[l].b[k]
                );
            }
        }
    }

    #[test]
    fn actor_update_isolated_per_agent() {
        let (mut agents, batch, _) = setup(10, 6);
        let t = compute_targets(&agents, &batch, 0.95, 0.5);
        let other = agents.actors[1].clone();
        let critic = agents.critic.clone();
        let before = agents.actors[0].clone();
        actor_update(&mut agents, 0, &batch, &t.y_q[0], &NetConfig::default());
        assert_eq!(agents.actors[1], other);
        assert_eq!(agents.critic, critic);
        assert_ne!(agents.actors[0], before);
    }

    #[test]
    fn fused_update_matches_composed_steps() {
        let (mut a, batch, _) = setup(12, 7);
        let mut b = a.clone();
        let net = NetConfig::default();
        let stats = update(&mut a, &batch, 0.95, 0.5, &net);
        let t = compute_targets(&b, &batch, 0.95, 0.5);
        let (cl, cr) = critic_update(&mut b, &batch, &t.y_v, &net);
        let mut ar = vec![];
        for i in 0..2 {
            ar.push(actor_update(&mut b, i, &batch, &t.y_q[i], &net).1);
        }
        assert_eq!(a, b);
        assert_eq!(stats.critic_loss, cl);
        assert_eq!(stats.priorities, td_error_for_priority(&cr, &ar));
    }

    #[test]
    fn priority_signal() {
        let c = [0.5, -1.0];
        let a = vec![vec![1.0, 0.0], vec![-3.0, 2.0]];
        assert_eq!(td_error_for_priority(&c, &a), vec![2.5, 2.0]);
        let c2: Vec<f64> = c.iter().map(|x| 2.0 * x).collect();
        let a2: Vec<Vec<f64>> = a
            .iter()
            .map(|r| r.iter().map(|x| 2.0 * x).collect())
            .collect();
        assert_eq!(td_error_for_priority(&c2, &a2), vec![5.0, 4.0]);
        assert_eq!(td_error_for_priority(&[0.0], &[vec![0.0]]), vec![0.0]);
    }

    #[test]
    fn update_reduces_loss_on_fixed_batch() {
        let (mut agents, batch, _) = setup(11, 16);
        let net = NetConfig {
            critic_lr: 1e-2,
            actor_lr: 1e-2,
            ..NetConfig::default()
        };
        agents.critic_opt.hyper.lr = net.critic_lr;
        let t = compute_targets(&agents, &batch, 0.0, 0.0);
        let (first, _) = critic_update(&mut agents, &batch, &t.y_v, &net);
        let mut last = first;
        for _ in 0..200 {
            last = critic_update(&mut agents, &batch, &t.y_v, &net).0;
        }
        assert!(last < 0.1 * first, "{first} -> {last}");
    }
}
