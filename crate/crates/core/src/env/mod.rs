//! The jammed relay network: entities, movement, channel model, observations.

mod channel;
mod dynamics;
mod mask;
mod observe;
mod sim;

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use rand::Rng;

use crate::config::EnvConfig;

pub use channel::{
    assign_gcvs, channel_gain, co_channel_interference, evaluate_links, jamming_interference,
    link_rate, pair_rate, sinr, LinkReport, PairRate,
};
pub use dynamics::{apply_actions, step_energy, step_gcvs};
pub use mask::{safety_mask, ActionMask};
pub use observe::{global_state, nearest_pairs, observe};
pub use sim::{Env, StepOutcome};

pub const NUM_MOVES: usize = 7;
pub const NUM_POWER_LEVELS: usize = 3;
pub const NUM_ACTIONS: usize = NUM_MOVES * NUM_POWER_LEVELS;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3 {
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn dist(self, o: Vec3) -> f64 {
        (self - o).norm()
    }

    /// Unit vector in the same direction, or zero for the zero vector.
    pub fn unit_or_zero(self) -> Vec3 {
        let n = self.norm();
        if n > 0.0 {
            self * (1.0 / n)
        } else {
            Vec3::ZERO
        }
    }

    pub fn midpoint(self, o: Vec3) -> Vec3 {
        (self + o) * 0.5
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for Vec3 {
    fn add_assign(&mut self, o: Vec3) {
        *self = *self + o;
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, k: f64) -> Vec3 {
        Vec3::new(self.x * k, self.y * k, self.z * k)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

/// Movement primitive. North is +y, East is +x, Up is +z.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Move {
    Stay,
    North,
    South,
    East,
    West,
    Up,
    Down,
}

impl Move {
    pub const ALL: [Move; NUM_MOVES] = [
        Move::Stay,
        Move::North,
        Move::South,
        Move::East,
        Move::West,
        Move::Up,
        Move::Down,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Move> {
        Move::ALL.get(i).copied()
    }

    /// Unit direction of the primitive (zero for Stay).
    pub fn direction(self) -> Vec3 {
        match self {
            Move::Stay => Vec3::ZERO,
            Move::North => Vec3::new(0.0, 1.0, 0.0),
            Move::South => Vec3::new(0.0, -1.0, 0.0),
            Move::East => Vec3::new(1.0, 0.0, 0.0),
            Move::West => Vec3::new(-1.0, 0.0, 0.0),
            Move::Up => Vec3::new(0.0, 0.0, 1.0),
            Move::Down => Vec3::new(0.0, 0.0, -1.0),
        }
    }

    pub fn displacement(self, step_xy: f64, step_z: f64) -> Vec3 {
        let d = self.direction();
        Vec3::new(d.x * step_xy, d.y * step_xy, d.z * step_z)
    }

    pub fn is_vertical(self) -> bool {
        matches!(self, Move::Up | Move::Down)
    }
}

/// A composite action: a movement primitive plus a transmit power level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Action {
    pub mv: Move,
    pub power_index: usize,
}

impl Action {
    pub fn new(mv: Move, power_index: usize) -> Self {
        debug_assert!(power_index < NUM_POWER_LEVELS);
        Self { mv, power_index }
    }

    pub fn stay() -> Self {
        Self::new(Move::Stay, 0)
    }

    pub fn encode(self) -> usize {
        NUM_POWER_LEVELS * self.mv.index() + self.power_index
    }

    pub fn decode(index: usize) -> Option<Action> {
        if index >= NUM_ACTIONS {
            return None;
        }
        let mv = Move::from_index(index / NUM_POWER_LEVELS)?;
        Some(Action::new(mv, index % NUM_POWER_LEVELS))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UavState {
    pub pos: Vec3,
    pub energy: f64,
    pub tau_stay: u32,
    pub power_index: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GcvPair {
    pub src_pos: Vec3,
    pub dst_pos: Vec3,
    pub src_vel: Vec3,
    pub dst_vel: Vec3,
}

impl GcvPair {
    pub fn midpoint(&self) -> Vec3 {
        self.src_pos.midpoint(self.dst_pos)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Jammer {
    pub pos: Vec3,
    pub power: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub side: f64,
    pub h_min: f64,
    pub h_max: f64,
}

impl Bounds {
    pub fn from_config(cfg: &EnvConfig) -> Self {
        Self {
            side: cfg.arena_side,
            h_min: cfg.h_min,
            h_max: cfg.h_max,
        }
    }

    pub fn contains(&self, p: Vec3) -> bool {
        (0.0..=self.side).contains(&p.x)
            && (0.0..=self.side).contains(&p.y)
            && (self.h_min..=self.h_max).contains(&p.z)
    }

    pub fn clamp(&self, p: Vec3) -> Vec3 {
        Vec3::new(
            p.x.clamp(0.0, self.side),
            p.y.clamp(0.0, self.side),
            p.z.clamp(self.h_min, self.h_max),
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct World {
    pub uavs: Vec<UavState>,
    pub gcvs: Vec<GcvPair>,
    pub jammers: Vec<Jammer>,
    pub bounds: Bounds,
    pub step_count: u64,
}

impl World {
    /// Draws a fresh episode: UAVs uniformly inside the flight volume with
    /// pairwise separation of at least `d_safe` (rejection sampled), ground
    /// nodes uniformly on the ground area with fresh velocities, jammers at
    /// their configured positions.
    pub fn spawn<R: Rng + ?Sized>(cfg: &EnvConfig, rng: &mut R) -> World {
        let bounds = Bounds::from_config(cfg);
        let mut uavs: Vec<UavState> = Vec::with_capacity(cfg.n_uavs);
        for _ in 0..cfg.n_uavs {
            let mut pos = random_air_point(&bounds, rng);
            for _ in 0..1000 {
                if uavs.iter().all(|u| u.pos.dist(pos) >= cfg.d_safe) {
                    break;
                }
                pos = random_air_point(&bounds, rng);
            }
            uavs.push(UavState {
                pos,
                energy: cfg.initial_energy,
                tau_stay: 0,
                power_index: 0,
            });
        }
        let gcvs = (0..cfg.n_pairs)
            .map(|_| GcvPair {
                src_pos: random_ground_point(&bounds, rng),
                dst_pos: random_ground_point(&bounds, rng),
                src_vel: dynamics::random_velocity(cfg.gcv_max_speed, rng),
                dst_vel: dynamics::random_velocity(cfg.gcv_max_speed, rng),
            })
            .collect();
        let jammers = cfg
            .jammer_positions_m()
            .into_iter()
            .map(|pos| Jammer {
                pos,
                power: cfg.jammer_power,
            })
            .collect();
        World {
            uavs,
            gcvs,
            jammers,
            bounds,
            step_count: 0,
        }
    }

    /// Mean 3D distance between UAVs and jammers (0 when there are no jammers).
    pub fn mean_jammer_distance(&self) -> f64 {
        let n = self.uavs.len() * self.jammers.len();
        if n == 0 {
            return 0.0;
        }
        let total: f64 = self
            .uavs
            .iter()
            .flat_map(|u| self.jammers.iter().map(move |j| u.pos.dist(j.pos)))
            .sum();
        total / n as f64
    }
}

fn random_air_point<R: Rng + ?Sized>(b: &Bounds, rng: &mut R) -> Vec3 {
    Vec3::new(
        rng.random_range(0.0..=b.side),
        rng.random_range(0.0..=b.side),
        rng.random_range(b.h_min..=b.h_max),
    )
}

fn random_ground_point<R: Rng + ?Sized>(b: &Bounds, rng: &mut R) -> Vec3 {
    Vec3::new(
        rng.random_range(0.0..=b.side),
        rng.random_range(0.0..=b.side),
        0.0,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::{prop_assert_eq, proptest};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn action_space_has_21_entries() {
        assert_eq!(NUM_ACTIONS, 21);
        assert_eq!(Action::new(Move::Down, 2).encode(), 20);
        assert_eq!(Action::new(Move::Stay, 0).encode(), 0);
        assert_eq!(Action::new(Move::North, 1).encode(), 4);
        assert!(Action::decode(21).is_none());
    }

    proptest! {
        #[test]
        fn encode_decode_round_trip(i in 0usize..NUM_ACTIONS) {
            let a = Action::decode(i).unwrap();
            prop_assert_eq!(a.encode(), i);
            prop_assert_eq!(Action::decode(a.encode()), Some(a));
        }
    }

    #[test]
    fn spawn_respects_invariants() {
        let cfg = EnvConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let w = World::spawn(&cfg, &mut rng);
            assert_eq!(w.uavs.len(), cfg.n_uavs);
            assert_eq!(w.gcvs.len(), cfg.n_pairs);
            assert_eq!(w.jammers.len(), 2);
            for u in &w.uavs {
                assert!(w.bounds.contains(u.pos));
            }
            for g in &w.gcvs {
                assert_eq!(g.src_pos.z, 0.0);
                assert_eq!(g.dst_pos.z, 0.0);
                assert_eq!(g.src_vel.z, 0.0);
            }
            for i in 0..w.uavs.len() {
                for j in i + 1..w.uavs.len() {
                    assert!(w.uavs[i].pos.dist(w.uavs[j].pos) >= cfg.d_safe);
                }
            }
        }
    }

    #[test]
    fn jammer_distance_matches_hand_geometry() {
        let cfg = EnvConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut w = World::spawn(&cfg, &mut rng);
        w.uavs.truncate(1);
        w.uavs[0].pos = Vec3::new(20.0, 20.0, 25.0);
        // distances: 10 to (20,20,15); sqrt(60^2+60^2+10^2) to (80,80,15)
        let expected = (10.0 + (3600.0f64 + 3600.0 + 100.0).sqrt()) / 2.0;
        assert_eq!(w.mean_jammer_distance(), expected);
    }
}
