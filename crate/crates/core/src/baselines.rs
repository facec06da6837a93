//! Rule-based comparison policies and the common policy interface.

use rand::{Rng, RngCore};

use crate::config::{BaselineConfig, EnvConfig, RewardConfig};
use crate::env::{nearest_pairs, Action, ActionMask, Move, Vec3, World, NUM_POWER_LEVELS};
use crate::trainer::{masked_argmax, CtdeAgents};

/// Decentralized decision rule for one UAV.
pub trait Policy: Send + Sync {
    fn name(&self) -> String;

    /// Must return an action the mask allows.
    fn act(
        &self,
        world: &World,
        agent: usize,
        obs: &[f64],
        mask: &ActionMask,
        rng: &mut dyn RngCore,
    ) -> Action;
}

const MAX_POWER: usize = NUM_POWER_LEVELS - 1;

/// Uniform over the allowed composite actions.
#[derive(Debug, Clone, Copy, Default)]
pub struct RandomPolicy;

impl Policy for RandomPolicy {
    fn name(&self) -> String {
        "random".into()
    }

    fn act(
        &self,
        _world: &World,
        _agent: usize,
        _obs: &[f64],
        mask: &ActionMask,
        rng: &mut dyn RngCore,
    ) -> Action {
        let allowed: Vec<usize> = mask.allowed().collect();
        let a = allowed[rng.random_range(0..allowed.len())];
        Action::decode(a).expect("mask index")
    }
}

/// Settings shared by the two pursuit heuristics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PursuitParams {
    pub cruise_altitude: f64,
    /// Altitude error beyond which vertical primitives are considered.
    pub altitude_tolerance: f64,
}

impl PursuitParams {
    pub fn from_config(b: &BaselineConfig, env: &EnvConfig) -> Self {
        Self {
            cruise_altitude: b.cruise_altitude,
            altitude_tolerance: env.step_z / 2.0,
        }
    }

    fn allow_vertical(&self, pos: Vec3) -> bool {
        (pos.z - self.cruise_altitude).abs() > self.altitude_tolerance
    }
}

/// Unit vector from `agent` toward its closest pair's midpoint lifted to
/// cruise altitude. Zero when there are no pairs.
pub fn attraction(world: &World, agent: usize, p: &PursuitParams) -> Vec3 {
    let pos = world.uavs[agent].pos;
    match nearest_pairs(world, pos, 1).first() {
        Some(&n) => {
            let m = world.gcvs[n].midpoint();
            (Vec3::new(m.x, m.y, p.cruise_altitude) - pos).unit_or_zero()
        }
        None => Vec3::ZERO,
    }
}

/// Allowed primitive with the largest dot product with `v`, ties to the
/// lower index (Stay scores 0). Vertical primitives are skipped when
/// `allow_vertical` is false.
pub fn best_move(v: Vec3, mask: &ActionMask, allow_vertical: bool) -> Move {
    let mut best = Move::Stay;
    let mut best_score = 0.0;
    for mv in Move::ALL.into_iter().skip(1) {
        if !mask.move_allowed(mv) || (mv.is_vertical() && !allow_vertical) {
            continue;
        }
        let score = mv.direction().dot(v);
        if score > best_score {
            best = mv;
            best_score = score;
        }
    }
    best
}

/// Pursues the closest pair midpoint with inverse-square repulsion from
/// UAVs inside `d_safe_rep`; always transmits at maximum power.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SafeGreedy {
    pub pursuit: PursuitParams,
    pub k_rep: f64,
    pub d_safe_rep: f64,
}

impl SafeGreedy {
    pub fn from_config(b: &BaselineConfig, env: &EnvConfig) -> Self {
        Self {
            pursuit: PursuitParams::from_config(b, env),
            k_rep: b.k_rep,
            d_safe_rep: b.d_safe_rep,
        }
    }

    pub fn steering(&self, world: &World, agent: usize) -> Vec3 {
        let me = world.uavs[agent].pos;
        let mut v = attraction(world, agent, &self.pursuit);
        for (j, u) in world.uavs.iter().enumerate() {
            let d = me.dist(u.pos);
            if j != agent && d < self.d_safe_rep && d > 0.0 {
                v += (me - u.pos).unit_or_zero() * (self.k_rep * (self.d_safe_rep / d).powi(2));
            }
        }
        v
    }
}

impl Policy for SafeGreedy {
    fn name(&self) -> String {
        "safe_greedy".into()
    }

    fn act(
        &self,
        world: &World,
        agent: usize,
        _obs: &[f64],
        mask: &ActionMask,
        _rng: &mut dyn RngCore,
    ) -> Action {
        let vertical = self.pursuit.allow_vertical(world.uavs[agent].pos);
        Action::new(
            best_move(self.steering(world, agent), mask, vertical),
            MAX_POWER,
        )
    }
}

/// Pursuit with a tanh spacing term toward every other UAV: attractive
/// beyond `d_ideal`, repulsive inside it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpacingCoop {
    pub pursuit: PursuitParams,
    pub k_sp: f64,
    pub d_ideal: f64,
    pub s_sp: f64,
}

impl SpacingCoop {
    pub fn from_config(b: &BaselineConfig, env: &EnvConfig, reward: &RewardConfig) -> Self {
        Self {
            pursuit: PursuitParams::from_config(b, env),
            k_sp: b.k_sp,
            d_ideal: reward.d_ideal,
            s_sp: b.s_sp,
        }
    }

    pub fn steering(&self, world: &World, agent: usize) -> Vec3 {
        let me = world.uavs[agent].pos;
        let mut v = attraction(world, agent, &self.pursuit);
        for (j, u) in world.uavs.iter().enumerate() {
            if j != agent {
                let d = me.dist(u.pos);
                v += (u.pos - me).unit_or_zero()
                    * (self.k_sp * ((d - self.d_ideal) / self.s_sp).tanh());
            }
        }
        v
    }
}

impl Policy for SpacingCoop {
    fn name(&self) -> String {
        "spacing_coop".into()
    }

    fn act(
        &self,
        world: &World,
        agent: usize,
        _obs: &[f64],
        mask: &ActionMask,
        _rng: &mut dyn RngCore,
    ) -> Action {
        let vertical = self.pursuit.allow_vertical(world.uavs[agent].pos);
        Action::new(
            best_move(self.steering(world, agent), mask, vertical),
            MAX_POWER,
        )
    }
}

/// Wraps a policy and pins its transmit power to the lowest level.
pub struct PowerConstrained<P>(pub P);

impl<P: Policy> Policy for PowerConstrained<P> {
    fn name(&self) -> String {
        format!("{}_p1", self.0.name())
    }

    fn act(
        &self,
        world: &World,
        agent: usize,
        obs: &[f64],
        mask: &ActionMask,
        rng: &mut dyn RngCore,
    ) -> Action {
        let a = self.0.act(world, agent, obs, mask, rng);
        Action::new(a.mv, 0)
    }
}

/// Trained actors acting greedily on their own observations.
pub struct GreedyCtde {
    pub agents: CtdeAgents,
}

impl Policy for GreedyCtde {
    fn name(&self) -> String {
        "ctde".into()
    }

    fn act(
        &self,
        _world: &World,
        agent: usize,
        obs: &[f64],
        mask: &ActionMask,
        _rng: &mut dyn RngCore,
    ) -> Action {
        let q = self.agents.q_values(agent, obs);
        Action::decode(masked_argmax(&q, mask)).expect("mask index")
    }
}
