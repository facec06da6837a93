//! Global and individual rewards, penalty terms, and the homeostatic
//! curriculum over the global weights.
//!
//! Rates enter rewards divided by the channel bandwidth (spectral efficiency,
//! bits/s/Hz) so every term is O(1)–O(10).

use serde::{Deserialize, Serialize};

use crate::config::{EnvConfig, RewardConfig};
use crate::env::{step_energy, Action, LinkReport, World};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardWeights {
    pub w_thr: f64,
    pub w_coop: f64,
    pub w_col: f64,
    pub w_fly: f64,
}

impl RewardWeights {
    pub fn from_config(cfg: &RewardConfig) -> Self {
        Self {
            w_thr: cfg.w_thr,
            w_coop: cfg.w_coop,
            w_col: cfg.w_col,
            w_fly: cfg.w_fly,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndividualCoeffs {
    pub a_thr: f64,
    pub a_assign: f64,
    pub a_col: f64,
}

impl IndividualCoeffs {
    pub fn from_config(cfg: &RewardConfig) -> Self {
        Self {
            a_thr: cfg.a_thr,
            a_assign: cfg.a_assign,
            a_col: cfg.a_col,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RewardBreakdown {
    pub global_r: f64,
    pub individual_r: Vec<f64>,
    /// Network throughput, bits/s.
    pub throughput_total: f64,
    /// Network throughput over bandwidth, the value the weights multiply.
    pub throughput_norm: f64,
    pub coop_bonus: f64,
    pub p_col: f64,
    pub p_fly: f64,
    pub weights: RewardWeights,
}

/// Σ over unordered UAV pairs closer than `d_safe` of `1 − d/d_safe`.
pub fn collision_penalty(world: &World, d_safe: f64) -> f64 {
    let u = &world.uavs;
    let mut p = 0.0;
    for i in 0..u.len() {
        for j in i + 1..u.len() {
            let d = u[i].pos.dist(u[j].pos);
            if d < d_safe {
                p += 1.0 - d / d_safe;
            }
        }
    }
    p
}

/// Total flight energy spent by all UAVs this step.
pub fn flight_penalty(actions: &[Action], cfg: &EnvConfig) -> f64 {
    actions.iter().map(|&a| step_energy(a, cfg)).sum()
}

/// Number of pairs relayed by each UAV.
pub fn assignment_counts(assignment: &[usize], n_uavs: usize) -> Vec<usize> {
    let mut counts = vec![0; n_uavs];
    for &u in assignment {
        counts[u] += 1;
    }
    counts
}

fn population_variance(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n
}

/// Workload balance in [0, 1]: `1 − Var(counts)/Var_max`, where `Var_max` is
/// the variance when a single UAV relays every pair.
pub fn balance_term(assignment: &[usize], n_uavs: usize) -> f64 {
    let counts: Vec<f64> = assignment_counts(assignment, n_uavs)
        .into_iter()
        .map(|c| c as f64)
        .collect();
    let mut worst = vec![0.0; n_uavs];
    worst[0] = assignment.len() as f64;
    let var_max = population_variance(&worst);
    if var_max == 0.0 {
        return 1.0;
    }
    1.0 - population_variance(&counts) / var_max
}

/// Mean over UAV pairs of a Gaussian kernel around the ideal spacing.
pub fn spacing_term(world: &World, d_ideal: f64, sigma: f64) -> f64 {
    let u = &world.uavs;
    let mut total = 0.0;
    let mut n = 0usize;
    for i in 0..u.len() {
        for j in i + 1..u.len() {
            let d = u[i].pos.dist(u[j].pos);
            total += (-(d - d_ideal).powi(2) / (2.0 * sigma * sigma)).exp();
            n += 1;
        }
    }
    if n == 0 {
        1.0
    } else {
        total / n as f64
    }
}

/// `0.5·balance + 0.5·spacing`, in [0, 1].
pub fn cooperation_bonus(world: &World, assignment: &[usize], cfg: &RewardConfig) -> f64 {
    0.5 * balance_term(assignment, world.uavs.len())
        + 0.5 * spacing_term(world, cfg.d_ideal, cfg.spacing_sigma)
}

pub fn global_reward(throughput: f64, coop: f64, p_col: f64, p_fly: f64, w: &RewardWeights) -> f64 {
    w.w_thr * throughput + w.w_coop * coop - w.w_col * p_col - w.w_fly * p_fly
}

/// `a_thr·R_i + a_assign·B_assign(i) − a_col·P_col` with the shared collision penalty.
pub fn individual_reward(
    throughput: f64,
    assigned: usize,
    p_col: f64,
    c: &IndividualCoeffs,
) -> f64 {
    c.a_thr * throughput + c.a_assign * assigned as f64 - c.a_col * p_col
}

/// Full reward evaluation for a post-transition world.
pub fn compute_rewards(
    world: &World,
    actions: &[Action],
    links: &LinkReport,
    weights: &RewardWeights,
    env_cfg: &EnvConfig,
    cfg: &RewardConfig,
) -> RewardBreakdown {
    let bw = env_cfg.bandwidth;
    let p_col = collision_penalty(world, env_cfg.d_safe);
    let p_fly = flight_penalty(actions, env_cfg);
    let coop = cooperation_bonus(world, &links.assignment, cfg);
    let throughput_norm = links.total / bw;
    let counts = assignment_counts(&links.assignment, world.uavs.len());
    let coeffs = IndividualCoeffs::from_config(cfg);
    let individual_r = links
        .per_uav
        .iter()
        .zip(&counts)
        .map(|(&r, &c)| individual_reward(r / bw, c, p_col, &coeffs))
        .collect();
    RewardBreakdown {
        global_r: global_reward(throughput_norm, coop, p_col, p_fly, weights),
        individual_r,
        throughput_total: links.total,
        throughput_norm,
        coop_bonus: coop,
        p_col,
        p_fly,
        weights: *weights,
    }
}

/// Homeostatic weight adaptation. Before `curriculum_start` of training the
/// weights are returned unchanged. Afterwards, a recent collision rate below
/// target shifts emphasis from safety to throughput (w_col shrinks, w_thr
/// grows); a rate above target does the reverse. The two adapted weights stay
/// within `[weight_floor, weight_ceiling]`; w_coop and w_fly are not adapted.
pub fn homeostatic_update(
    w: &RewardWeights,
    recent_collision_rate: f64,
    progress: f64,
    cfg: &RewardConfig,
) -> RewardWeights {
    if progress < cfg.curriculum_start {
        return *w;
    }
    let clamp = |v: f64| v.clamp(cfg.weight_floor, cfg.weight_ceiling);
    let (col_factor, thr_factor) = if recent_collision_rate < cfg.collision_target {
        (cfg.homeostatic_shrink, cfg.homeostatic_grow)
    } else {
        (cfg.homeostatic_grow, cfg.homeostatic_shrink)
    };
    RewardWeights {
        w_thr: clamp(w.w_thr * thr_factor),
        w_coop: w.w_coop,
        w_col: clamp(w.w_col * col_factor),
        w_fly: w.w_fly,
    }
}
