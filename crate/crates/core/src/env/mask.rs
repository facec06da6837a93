use super::{Move, Vec3, World, NUM_ACTIONS, NUM_POWER_LEVELS};
use crate::config::EnvConfig;

/// Allowed composite actions for one agent at one step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ActionMask(pub [bool; NUM_ACTIONS]);

impl ActionMask {
    pub fn all() -> Self {
        Self([true; NUM_ACTIONS])
    }

    pub fn allows(&self, action: usize) -> bool {
        self.0[action]
    }

    pub fn allowed(&self) -> impl Iterator<Item = usize> + '_ {
        (0..NUM_ACTIONS).filter(|&a| self.0[a])
    }

    pub fn count(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    pub fn move_allowed(&self, mv: Move) -> bool {
        self.0[NUM_POWER_LEVELS * mv.index()]
    }
}

/// Smallest distance from `q` to the segment `[a, b]`.
fn segment_distance(a: Vec3, b: Vec3, q: Vec3) -> f64 {
    let ab = b - a;
    let len2 = ab.dot(ab);
    if len2 == 0.0 {
        return a.dist(q);
    }
    let t = ((q - a).dot(ab) / len2).clamp(0.0, 1.0);
    (a + ab * t).dist(q)
}

/// Whether moving `me → next` is safe with respect to a UAV at `other`.
/// The landing point must keep `d_safe`. From a clear start the whole path
/// must keep `d_safe` too, so a long step cannot hop through a neighbour;
/// from inside `d_safe` (left there by simultaneous moves) the move must not
/// close in, so a breached pair can always separate.
fn clear_of(me: Vec3, next: Vec3, other: Vec3, d_safe: f64) -> bool {
    if next.dist(other) < d_safe {
        return false;
    }
    if me.dist(other) >= d_safe {
        segment_distance(me, next, other) >= d_safe
    } else {
        (next - me).dot(me - other) >= 0.0
    }
}

/// One-step safety filter: a move is allowed iff the post-move position is
/// inside the flight volume and at least `d_safe` from every other UAV's
/// current position, without sweeping through or toward a neighbour on the
/// way (see `clear_of`). Stay is always allowed; the three power variants of
/// a move share its flag.
pub fn safety_mask(world: &World, agent: usize, cfg: &EnvConfig) -> ActionMask {
    let me = world.uavs[agent].pos;
    let mut mask = [false; NUM_ACTIONS];
    for mv in Move::ALL {
        let ok = mv == Move::Stay || {
            let next = me + mv.displacement(cfg.step_xy, cfg.step_z);
            world.bounds.contains(next)
                && world
                    .uavs
                    .iter()
                    .enumerate()
                    .all(|(j, u)| j == agent || clear_of(me, next, u.pos, cfg.d_safe))
        };
        let base = NUM_POWER_LEVELS * mv.index();
        mask[base..base + NUM_POWER_LEVELS].fill(ok);
    }
    ActionMask(mask)
}
