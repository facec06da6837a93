use ndarray::Array2;

/// Running per-dimension mean/variance (Welford) used to whiten inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct Normalizer {
    pub(crate) mean: Vec<f64>,
    pub(crate) m2: Vec<f64>,
    pub(crate) count: u64,
    pub eps: f64,
    pub clip: f64,
}

impl Normalizer {
    pub fn new(dim: usize, eps: f64, clip: f64) -> Self {
        Self {
            mean: vec![0.0; dim],
            m2: vec![0.0; dim],
            count: 0,
            eps,
            clip,
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    /// Population variance; 1 before any observation.
    pub fn variance(&self) -> Vec<f64> {
        if self.count == 0 {
            return vec![1.0; self.dim()];
        }
        self.m2
            .iter()
            .map(|m2| (m2 / self.count as f64).max(0.0))
            .collect()
    }

    pub fn observe(&mut self, x: &[f64]) {
        assert_eq!(x.len(), self.dim(), "normalizer dimension");
        self.count += 1;
        let n = self.count as f64;
        for ((mean, m2), &v) in self.mean.iter_mut().zip(&mut self.m2).zip(x) {
            let delta = v - *mean;
            *mean += delta / n;
            *m2 += delta * (v - *mean);
        }
    }

    /// `(x − mean)/sqrt(var + eps)` clipped to `±clip`; identity before any observation.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.dim(), "normalizer dimension");
        if self.count == 0 {
            return x.to_vec();
        }
        let n = self.count as f64;
        x.iter()
            .zip(&self.mean)
            .zip(&self.m2)
            .map(|((&v, &mean), &m2)| {
                let var = (m2 / n).max(0.0);
                ((v - mean) / (var + self.eps).sqrt()).clamp(-self.clip, self.clip)
            })
            .collect()
    }

    /// Normalizes every row of `rows` in place.
    pub fn apply_rows(&self, rows: &mut Array2<f64>) {
        if self.count == 0 {
            return;
        }
        let denom: Vec<f64> = self
            .variance()
            .iter()
            .map(|v| (v + self.eps).sqrt())
            .collect();
        for mut row in rows.rows_mut() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = ((*v - self.mean[j]) / denom[j]).clamp(-self.clip, self.clip);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::{prop_assert, proptest};

    #[test]
    fn constant_stream_maps_to_zero() {
        let mut n = Normalizer::new(2, 1e-8, 10.0);
        for _ in 0..50 {
            n.observe(&[3.0, -7.5]);
        }
        assert_eq!(n.apply(&[3.0, -7.5]), vec![0.0, 0.0]);
    }

    #[test]
    fn fresh_normalizer_is_identity() {
        let n = Normalizer::new(3, 1e-8, 10.0);
        assert_eq!(n.apply(&[1.0, 200.0, -3.0]), vec![1.0, 200.0, -3.0]);
        assert_eq!(n.variance(), vec![1.0; 3]);
    }

    #[test]
    fn welford_matches_direct_formula() {
        let mut n = Normalizer::new(1, 1e-8, 10.0);
        for v in [1.0, 2.0, 3.0, 4.0] {
            n.observe(&[v]);
        }
        assert_eq!(n.mean(), &[2.5]);
        assert!((n.variance()[0] - 1.25).abs() < 1e-15);
    }

    #[test]
    fn rows_match_single_apply() {
        let mut n = Normalizer::new(2, 1e-8, 10.0);
        for v in [[1.0, 10.0], [2.0, 30.0], [4.0, -5.0]] {
            n.observe(&v);
        }
        let mut rows = ndarray::array![[0.5, 3.0], [9.0, 100.0]];
        let expected: Vec<Vec<f64>> = rows
            .rows()
            .into_iter()
            .map(|r| n.apply(&r.to_vec()))
            .collect();
        n.apply_rows(&mut rows);
        for (r, e) in rows.rows().into_iter().zip(expected) {
            assert_eq!(r.to_vec(), e);
        }
    }

    proptest! {
        #[test]
        fn outputs_clipped_and_variance_nonnegative(
            xs in proptest::collection::vec(-1e6f64..1e6, 1..200),
            probe in -1e7f64..1e7,
        ) {
            let mut n = Normalizer::new(1, 1e-8, 10.0);
            for x in xs {
                n.observe(&[x]);
                prop_assert!(n.variance()[0] >= 0.0);
            }
            let y = n.apply(&[probe])[0];
            prop_assert!((-10.0..=10.0).contains(&y));
        }
    }
}
