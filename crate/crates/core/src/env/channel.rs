//! Path-loss channel, interference, SINR and Shannon rates.

use super::{Jammer, Vec3, World};
use crate::config::EnvConfig;
use crate::error::{Error, Result};

/// Distance-based gain `d^-alpha`, with `d` floored at `floor` (0 disables the floor).
fn gain_with_floor(p_x: Vec3, p_y: Vec3, alpha: f64, floor: f64) -> Result<f64> {
    let d = p_x.dist(p_y);
    if d == 0.0 && floor <= 0.0 {
        return Err(Error::Domain(format!(
            "channel gain undefined for coincident points {p_x:?}"
        )));
    }
    Ok(d.max(floor).powf(-alpha))
}

/// Path-loss gain `‖p_x − p_y‖^−α`. Coincident points are a domain error.
pub fn channel_gain(p_x: Vec3, p_y: Vec3, alpha: f64) -> Result<f64> {
    gain_with_floor(p_x, p_y, alpha, 0.0)
}

fn jamming_with_floor(p_rx: Vec3, jammers: &[Jammer], alpha: f64, floor: f64) -> Result<f64> {
    jammers.iter().try_fold(0.0, |acc, j| {
        Ok(acc + j.power * gain_with_floor(j.pos, p_rx, alpha, floor)?)
    })
}

/// Total jamming power received at `p_rx`, watts.
pub fn jamming_interference(p_rx: Vec3, jammers: &[Jammer], alpha: f64) -> Result<f64> {
    jamming_with_floor(p_rx, jammers, alpha, 0.0)
}

fn co_channel_with_floor(
    rx: Vec3,
    active_tx: &[(Vec3, f64)],
    alpha: f64,
    floor: f64,
) -> Result<f64> {
    active_tx.iter().try_fold(0.0, |acc, &(pos, power)| {
        Ok(acc + power * gain_with_floor(pos, rx, alpha, floor)?)
    })
}

/// Interference at `rx` from friendly transmitters `(position, watts)`.
/// The caller excludes the intended transmitter.
pub fn co_channel_interference(rx: Vec3, active_tx: &[(Vec3, f64)], alpha: f64) -> Result<f64> {
    co_channel_with_floor(rx, active_tx, alpha, 0.0)
}

fn sinr_from_gain(power: f64, gain: f64, noise: f64, i_co: f64, i_jam: f64) -> Result<f64> {
    if noise.is_nan() || noise <= 0.0 {
        return Err(Error::Config(format!(
            "noise power must be positive, got {noise}"
        )));
    }
    Ok(power * gain / (noise + i_co + i_jam))
}

/// `P·G / (σ² + I_co + I_jam)`.
pub fn sinr(
    p_tx: Vec3,
    tx_power: f64,
    p_rx: Vec3,
    noise: f64,
    i_co: f64,
    i_jam: f64,
    alpha: f64,
) -> Result<f64> {
    if noise.is_nan() || noise <= 0.0 {
        return Err(Error::Config(format!(
            "noise power must be positive, got {noise}"
        )));
    }
    sinr_from_gain(
        tx_power,
        channel_gain(p_tx, p_rx, alpha)?,
        noise,
        i_co,
        i_jam,
    )
}

/// Shannon rate `W·log₂(1 + γ)` in bits/s.
pub fn link_rate(sinr: f64, bandwidth: f64) -> f64 {
    bandwidth * (1.0 + sinr).log2()
}

/// Two-hop rates for one ground pair, bits/s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairRate {
    pub relay: usize,
    pub uplink: f64,
    pub downlink: f64,
    /// Bottleneck `min(uplink, downlink)`.
    pub rate: f64,
}

/// Assigns every pair to the UAV nearest its (src, dst) midpoint; ties go to
/// the lower UAV index. Returns `relay[pair]`.
pub fn assign_gcvs(world: &World) -> Vec<usize> {
    world
        .gcvs
        .iter()
        .map(|g| {
            let mid = g.midpoint();
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for (i, u) in world.uavs.iter().enumerate() {
                let d = u.pos.dist(mid);
                if d < best_d {
                    best_d = d;
                    best = i;
                }
            }
            best
        })
        .collect()
}

/// Rate of `pair` relayed by `assignment[pair]`.
///
/// Both hops of a pair use the relay's chosen power level. Uplink interferers
/// are every other source node; downlink interferers are every other UAV
/// relaying at least one pair. Uplink and downlink occupy separate bands, so a
/// relay never interferes with its own reception. Link distances are floored
/// at `min_link_distance`.
pub fn pair_rate(world: &World, assignment: &[usize], pair: usize, cfg: &EnvConfig) -> PairRate {
    let alpha = cfg.path_loss_exponent;
    let floor = cfg.min_link_distance;
    let power_of = |uav: usize| cfg.power_levels[world.uavs[uav].power_index];
    let g = |a: Vec3, b: Vec3| {
        gain_with_floor(a, b, alpha, floor).expect("floored gain is always defined")
    };

    let relay = assignment[pair];
    let relay_pos = world.uavs[relay].pos;
    let power = power_of(relay);
    let gcv = &world.gcvs[pair];

    let up_interferers: Vec<(Vec3, f64)> = world
        .gcvs
        .iter()
        .enumerate()
        .filter(|&(m, _)| m != pair)
        .map(|(m, other)| (other.src_pos, power_of(assignment[m])))
        .collect();
    let up_co = co_channel_with_floor(relay_pos, &up_interferers, alpha, floor).unwrap();
    let up_jam = jamming_with_floor(relay_pos, &world.jammers, alpha, floor).unwrap();
    let up_sinr = sinr_from_gain(
        power,
        g(gcv.src_pos, relay_pos),
        cfg.noise_power,
        up_co,
        up_jam,
    )
    .expect("validated noise power");

    let mut transmitting = vec![false; world.uavs.len()];
    for &r in assignment {
        transmitting[r] = true;
    }
    let down_interferers: Vec<(Vec3, f64)> = world
        .uavs
        .iter()
        .enumerate()
        .filter(|&(u, _)| u != relay && transmitting[u])
        .map(|(u, s)| (s.pos, power_of(u)))
        .collect();
    let down_co = co_channel_with_floor(gcv.dst_pos, &down_interferers, alpha, floor).unwrap();
    let down_jam = jamming_with_floor(gcv.dst_pos, &world.jammers, alpha, floor).unwrap();
    let down_sinr = sinr_from_gain(
        power,
        g(relay_pos, gcv.dst_pos),
        cfg.noise_power,
        down_co,
        down_jam,
    )
    .expect("validated noise power");

    let uplink = link_rate(up_sinr, cfg.bandwidth);
    let downlink = link_rate(down_sinr, cfg.bandwidth);
    PairRate {
        relay,
        uplink,
        downlink,
        rate: uplink.min(downlink),
    }
}

/// Per-step link evaluation of the whole network.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkReport {
    pub assignment: Vec<usize>,
    pub pairs: Vec<PairRate>,
    /// Sum of the rates of the pairs each UAV relays, bits/s.
    pub per_uav: Vec<f64>,
    /// Network throughput, bits/s.
    pub total: f64,
}

pub fn evaluate_links(world: &World, cfg: &EnvConfig) -> LinkReport {
    let assignment = assign_gcvs(world);
    let pairs: Vec<PairRate> = (0..world.gcvs.len())
        .map(|n| pair_rate(world, &assignment, n, cfg))
        .collect();
    let mut per_uav = vec![0.0; world.uavs.len()];
    for p in &pairs {
        per_uav[p.relay] += p.rate;
    }
    let total = pairs.iter().map(|p| p.rate).sum();
    LinkReport {
        assignment,
        pairs,
        per_uav,
        total,
    }
}
