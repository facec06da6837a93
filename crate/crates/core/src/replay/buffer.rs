use rand::Rng;

use super::sum_tree::SumTree;
use crate::error::{Error, Result};

/// One joint transition of the whole team.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: Vec<f64>,
    /// One observation per agent.
    pub obs: Vec<Vec<f64>>,
    /// Composite action index per agent.
    pub actions: Vec<usize>,
    pub global_reward: f64,
    pub individual_rewards: Vec<f64>,
    pub next_state: Vec<f64>,
    pub next_obs: Vec<Vec<f64>>,
    pub done: bool,
}

impl Transition {
    pub fn view(&self) -> TransitionRef<'_> {
        TransitionRef {
            state: &self.state,
            next_state: &self.next_state,
            obs: Rows::Nested(&self.obs),
            next_obs: Rows::Nested(&self.next_obs),
            actions: &self.actions,
            global_reward: self.global_reward,
            individual_rewards: &self.individual_rewards,
            done: self.done,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Rows<'a> {
    Nested(&'a [Vec<f64>]),
    Flat { data: &'a [f64], width: usize },
}

impl<'a> Rows<'a> {
    fn row(&self, i: usize) -> &'a [f64] {
        match *self {
            Rows::Nested(rows) => &rows[i],
            Rows::Flat { data, width } => &data[i * width..(i + 1) * width],
        }
    }
}

/// Borrowed view of a stored or owned transition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionRef<'a> {
    pub state: &'a [f64],
    pub next_state: &'a [f64],
    obs: Rows<'a>,
    next_obs: Rows<'a>,
    pub actions: &'a [usize],
    pub global_reward: f64,
    pub individual_rewards: &'a [f64],
    pub done: bool,
}

impl<'a> TransitionRef<'a> {
    pub fn obs(&self, agent: usize) -> &'a [f64] {
        self.obs.row(agent)
    }

    pub fn next_obs(&self, agent: usize) -> &'a [f64] {
        self.next_obs.row(agent)
    }

    pub fn to_owned(&self) -> Transition {
        let n = self.actions.len();
        Transition {
            state: self.state.to_vec(),
            obs: (0..n).map(|i| self.obs(i).to_vec()).collect(),
            actions: self.actions.to_vec(),
            global_reward: self.global_reward,
            individual_rewards: self.individual_rewards.to_vec(),
            next_state: self.next_state.to_vec(),
            next_obs: (0..n).map(|i| self.next_obs(i).to_vec()).collect(),
            done: self.done,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Shape {
    state: usize,
    agents: usize,
    obs: usize,
}

impl Shape {
    fn of(t: &Transition) -> Self {
        Self {
            state: t.state.len(),
            agents: t.actions.len(),
            obs: t.obs.first().map_or(0, Vec::len),
        }
    }

    fn stride(&self) -> usize {
        2 * self.state + 2 * self.agents * self.obs + 1 + self.agents
    }
}

/// Fixed-stride flat storage. Keeping every transition inside a few large
/// arrays avoids millions of small long-lived allocations, which otherwise
/// interleave with the per-update temporaries and fragment the heap.
#[derive(Debug, Clone, Default)]
struct Store {
    shape: Option<Shape>,
    reals: Vec<f64>,
    actions: Vec<usize>,
    done: Vec<bool>,
}

impl Store {
    fn len(&self) -> usize {
        self.done.len()
    }

    fn write(&mut self, slot: usize, t: &Transition) {
        let shape = *self.shape.get_or_insert_with(|| Shape::of(t));
        assert!(
            Shape::of(t) == shape
                && t.next_state.len() == shape.state
                && t.obs.len() == shape.agents
                && t.next_obs.len() == shape.agents
                && t.individual_rewards.len() == shape.agents
                && t.obs
                    .iter()
                    .chain(&t.next_obs)
                    .all(|o| o.len() == shape.obs),
            "transition shape differs from the buffer's"
        );
        let reals = t
            .state
            .iter()
            .chain(&t.next_state)
            .chain(t.obs.iter().flatten())
            .chain(t.next_obs.iter().flatten())
            .chain(std::iter::once(&t.global_reward))
            .chain(&t.individual_rewards)
            .copied();
        if slot == self.len() {
            self.reals.extend(reals);
            self.actions.extend_from_slice(&t.actions);
            self.done.push(t.done);
        } else {
            let stride = shape.stride();
            for (dst, v) in self.reals[slot * stride..(slot + 1) * stride]
                .iter_mut()
                .zip(reals)
            {
                *dst = v;
            }
            self.actions[slot * shape.agents..(slot + 1) * shape.agents]
                .copy_from_slice(&t.actions);
            self.done[slot] = t.done;
        }
    }

    fn get(&self, slot: usize) -> TransitionRef<'_> {
        assert!(slot < self.len(), "slot {slot} is empty");
        let sh = self.shape.expect("non-empty store has a shape");
        let r = &self.reals[slot * sh.stride()..(slot + 1) * sh.stride()];
        let (state, r) = r.split_at(sh.state);
        let (next_state, r) = r.split_at(sh.state);
        let (obs, r) = r.split_at(sh.agents * sh.obs);
        let (next_obs, r) = r.split_at(sh.agents * sh.obs);
        TransitionRef {
            state,
            next_state,
            obs: Rows::Flat {
                data: obs,
                width: sh.obs,
            },
            next_obs: Rows::Flat {
                data: next_obs,
                width: sh.obs,
            },
            actions: &self.actions[slot * sh.agents..(slot + 1) * sh.agents],
            global_reward: r[0],
            individual_rewards: &r[1..],
            done: self.done[slot],
        }
    }
}

/// Indices and normalized importance weights of a sampled batch.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub indices: Vec<usize>,
    pub weights: Vec<f64>,
}

/// Proportional prioritized replay over a ring buffer.
///
/// Raw priorities `|δ| + ε` are stored per slot; the sum tree holds `p^α`.
#[derive(Debug, Clone)]
pub struct PriorityBuffer {
    capacity: usize,
    data: Store,
    next: usize,
    priorities: Vec<f64>,
    tree: SumTree,
    alpha: f64,
    eps_priority: f64,
    max_priority: f64,
}

impl PriorityBuffer {
    pub fn new(capacity: usize, alpha: f64, eps_priority: f64) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        Self {
            capacity,
            data: Store::default(),
            next: 0,
            priorities: vec![0.0; capacity],
            tree: SumTree::new(capacity),
            alpha,
            eps_priority,
            max_priority: 1.0,
        }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.len() == 0
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn max_priority(&self) -> f64 {
        self.max_priority
    }

    /// Raw (pre-exponent) priority of slot `i`.
    pub fn priority(&self, i: usize) -> f64 {
        self.priorities[i]
    }

    pub fn total_mass(&self) -> f64 {
        self.tree.total()
    }

    /// `p_i^α / Σ p^α`.
    pub fn probability(&self, i: usize) -> f64 {
        self.tree.get(i) / self.tree.total()
    }

    pub fn get(&self, i: usize) -> TransitionRef<'_> {
        self.data.get(i)
    }

    fn set_priority(&mut self, slot: usize, p: f64) {
        self.priorities[slot] = p;
        self.tree.set(slot, p.powf(self.alpha));
    }

    /// Stores `t` with the largest priority seen so far, evicting the oldest
    /// transition once full. Returns the slot used.
    pub fn push(&mut self, t: Transition) -> usize {
        let slot = self.next;
        self.data.write(slot, &t);
        self.set_priority(slot, self.max_priority);
        self.next = (self.next + 1) % self.capacity;
        slot
    }

    /// Stratified proportional sampling: the total mass is split into `batch`
    /// equal segments and one index is drawn per segment. Weights are
    /// `(N·P(j))^−β` divided by the batch maximum.
    pub fn sample<R: Rng + ?Sized>(&self, batch: usize, beta: f64, rng: &mut R) -> Result<Sample> {
        if batch == 0 || batch > self.len() {
            return Err(Error::InsufficientSamples {
                size: self.len(),
                batch,
            });
        }
        let total = self.tree.total();
        let segment = total / batch as f64;
        let indices: Vec<usize> = (0..batch)
            .map(|k| {
                let u = (k as f64 + rng.random::<f64>()) * segment;
                self.tree.find(u).min(self.len() - 1)
            })
            .collect();
        let n = self.len() as f64;
        let raw: Vec<f64> = indices
            .iter()
            .map(|&i| (n * self.tree.get(i) / total).powf(-beta))
            .collect();
        let max = raw.iter().copied().fold(f64::MIN, f64::max);
        let weights = raw.iter().map(|w| w / max).collect();
        Ok(Sample { indices, weights })
    }

    /// Sets each slot's priority to `|δ| + ε` and tracks the running maximum.
    pub fn update_priorities(&mut self, indices: &[usize], td_errors: &[f64]) {
        assert_eq!(indices.len(), td_errors.len(), "one TD error per index");
        for (&i, &td) in indices.iter().zip(td_errors) {
            assert!(i < self.len(), "slot {i} is empty");
            let p = td.abs() + self.eps_priority;
            self.set_priority(i, p);
            if p > self.max_priority {
                self.max_priority = p;
            }
        }
    }
}
