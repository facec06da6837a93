use super::{UavState, Vec3, World};
use crate::config::EnvConfig;

fn own_features(u: &UavState, world: &World, cfg: &EnvConfig, out: &mut Vec<f64>) {
    let side = world.bounds.side;
    out.push(u.pos.x / side);
    out.push(u.pos.y / side);
    out.push(u.pos.z / world.bounds.h_max);
    out.push(u.energy / cfg.initial_energy);
    out.push((u.tau_stay as f64 / cfg.episode_len as f64).min(1.0));
}

/// Indices of the `k` pairs whose midpoints are closest to `pos`, nearest
/// first, ties broken by pair index.
pub fn nearest_pairs(world: &World, pos: Vec3, k: usize) -> Vec<usize> {
    let mut idx: Vec<(f64, usize)> = world
        .gcvs
        .iter()
        .enumerate()
        .map(|(n, g)| (g.midpoint().dist(pos), n))
        .collect();
    idx.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    idx.into_iter().take(k).map(|(_, n)| n).collect()
}

/// Local observation of `agent`, length `5 + 5K`.
///
/// Layout: own position (x/L, y/L, z/H_max), battery fraction, stationary
/// time over the episode length; then for each of the K nearest pairs the
/// midpoint offset divided by L and the gains to source and destination,
/// scaled by `H_min^α` so the closest reachable link maps to 1. Missing pairs
/// (K > N_C) are zero-padded.
pub fn observe(world: &World, agent: usize, cfg: &EnvConfig) -> Vec<f64> {
    let u = &world.uavs[agent];
    let side = world.bounds.side;
    let alpha = cfg.path_loss_exponent;
    let gain_scale = world.bounds.h_min.powf(alpha);
    let gain = |a: Vec3, b: Vec3| a.dist(b).max(cfg.min_link_distance).powf(-alpha) * gain_scale;

    let mut out = Vec::with_capacity(cfg.obs_dim());
    own_features(u, world, cfg, &mut out);
    let near = nearest_pairs(world, u.pos, cfg.k_nearest);
    for &n in &near {
        let g = &world.gcvs[n];
        let rel = g.midpoint() - u.pos;
        out.extend([rel.x / side, rel.y / side, rel.z / side]);
        out.push(gain(u.pos, g.src_pos));
        out.push(gain(u.pos, g.dst_pos));
    }
    out.resize(cfg.obs_dim(), 0.0);
    out
}

/// Centralized state, length `5·N_U + 4·N_C`: the own-features block of every
/// UAV in index order, then (src x, src y, dst x, dst y)/L of every pair.
pub fn global_state(world: &World, cfg: &EnvConfig) -> Vec<f64> {
    let side = world.bounds.side;
    let mut out = Vec::with_capacity(5 * world.uavs.len() + 4 * world.gcvs.len());
    for u in &world.uavs {
        own_features(u, world, cfg, &mut out);
    }
    for g in &world.gcvs {
        out.extend([
            g.src_pos.x / side,
            g.src_pos.y / side,
            g.dst_pos.x / side,
            g.dst_pos.y / side,
        ]);
    }
    out
}
