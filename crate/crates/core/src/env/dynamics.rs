use std::f64::consts::TAU;

use rand::Rng;

use super::{Action, Move, Vec3, World};
use crate::config::EnvConfig;

/// Energy drawn by one UAV for one step: hover cost, plus a movement surcharge
/// for any non-Stay primitive, plus a climb surcharge for Up.
pub fn step_energy(action: Action, cfg: &EnvConfig) -> f64 {
    let mut e = cfg.energy_hover;
    if action.mv != Move::Stay {
        e += cfg.energy_move;
    }
    if action.mv == Move::Up {
        e += cfg.energy_climb;
    }
    e
}

/// Moves every UAV by its primitive, clamps to the flight volume, updates
/// stationary time, battery and power level, and advances the clock.
pub fn apply_actions(world: &mut World, actions: &[Action], cfg: &EnvConfig) {
    assert_eq!(actions.len(), world.uavs.len(), "one action per UAV");
    let bounds = world.bounds;
    for (uav, &action) in world.uavs.iter_mut().zip(actions) {
        let target = uav.pos + action.mv.displacement(cfg.step_xy, cfg.step_z);
        uav.pos = bounds.clamp(target);
        if action.mv == Move::Stay {
            uav.tau_stay = uav.tau_stay.saturating_add(1);
        } else {
            uav.tau_stay = 0;
        }
        uav.energy = (uav.energy - step_energy(action, cfg)).max(0.0);
        uav.power_index = action.power_index;
    }
    world.step_count += 1;
}

pub(crate) fn random_velocity<R: Rng + ?Sized>(max_speed: f64, rng: &mut R) -> Vec3 {
    let heading = rng.random_range(0.0..TAU);
    let speed = if max_speed > 0.0 {
        rng.random_range(0.0..=max_speed)
    } else {
        0.0
    };
    Vec3::new(speed * heading.cos(), speed * heading.sin(), 0.0)
}

fn reflect(pos: &mut f64, vel: &mut f64, side: f64) {
    loop {
        if *pos < 0.0 {
            *pos = -*pos;
            *vel = -*vel;
        } else if *pos > side {
            *pos = 2.0 * side - *pos;
            *vel = -*vel;
        } else {
            break;
        }
    }
}

fn advance(pos: &mut Vec3, vel: &mut Vec3, side: f64) {
    pos.x += vel.x;
    pos.y += vel.y;
    reflect(&mut pos.x, &mut vel.x, side);
    reflect(&mut pos.y, &mut vel.y, side);
}

/// Random-walk ground mobility. Every `gcv_turn_period` steps each node draws
/// a fresh uniform heading and a speed uniform in `[0, gcv_max_speed]`; nodes
/// then advance one second and reflect off the ground-area edges.
pub fn step_gcvs<R: Rng + ?Sized>(world: &mut World, rng: &mut R, cfg: &EnvConfig) {
    let side = world.bounds.side;
    let redraw = world.step_count.is_multiple_of(cfg.gcv_turn_period);
    for g in world.gcvs.iter_mut() {
        if redraw {
            g.src_vel = random_velocity(cfg.gcv_max_speed, rng);
            g.dst_vel = random_velocity(cfg.gcv_max_speed, rng);
        }
        advance(&mut g.src_pos, &mut g.src_vel, side);
        advance(&mut g.dst_pos, &mut g.dst_vel, side);
    }
}
