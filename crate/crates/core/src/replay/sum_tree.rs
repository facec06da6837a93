/// Binary sum tree over a fixed number of leaves.
///
/// Internal nodes are recomputed from their children on every write rather
/// than adjusted by deltas, so the root never accumulates drift.
#[derive(Debug, Clone)]
pub struct SumTree {
    leaves: usize,
    base: usize,
    nodes: Vec<f64>,
}

impl SumTree {
    pub fn new(leaves: usize) -> Self {
        assert!(leaves > 0, "sum tree needs at least one leaf");
        let base = leaves.next_power_of_two();
        Self {
            leaves,
            base,
            nodes: vec![0.0; 2 * base],
        }
    }

    pub fn len(&self) -> usize {
        self.leaves
    }

    pub fn is_empty(&self) -> bool {
        self.leaves == 0
    }

    pub fn total(&self) -> f64 {
        self.nodes[1]
    }

    pub fn get(&self, i: usize) -> f64 {
        self.nodes[self.base + i]
    }

    pub fn set(&mut self, i: usize, value: f64) {
        assert!(i < self.leaves, "leaf {i} out of range");
        debug_assert!(value >= 0.0);
        let mut n = self.base + i;
        self.nodes[n] = value;
        while n > 1 {
            n /= 2;
            self.nodes[n] = self.nodes[2 * n] + self.nodes[2 * n + 1];
        }
    }

    /// Leaf whose cumulative interval contains `mass`, for `mass` in
    /// `[0, total)`. Never returns a zero-weight leaf while any leaf is positive.
    pub fn find(&self, mass: f64) -> usize {
        let mut n = 1;
        let mut u = mass.max(0.0);
        while n < self.base {
            let left = self.nodes[2 * n];
            let right = self.nodes[2 * n + 1];
            if u < left || right <= 0.0 {
                n *= 2;
            } else {
                u -= left;
                n = 2 * n + 1;
            }
        }
        (n - self.base).min(self.leaves - 1)
    }
}
