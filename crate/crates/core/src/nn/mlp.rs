use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis, Zip};
use rand::Rng;

use crate::error::{Error, Result};

/// One affine layer. `w` is stored `in × out` so a batch forward is `X·W + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub w: Array2<f64>,
    pub b: Array1<f64>,
}

impl Layer {
    pub fn zeros(fan_in: usize, fan_out: usize) -> Self {
        Self {
            w: Array2::zeros((fan_in, fan_out)),
            b: Array1::zeros(fan_out),
        }
    }

    pub fn fan_in(&self) -> usize {
        self.w.nrows()
    }

    pub fn fan_out(&self) -> usize {
        self.w.ncols()
    }
}

/// Feed-forward network: ReLU on hidden layers, identity on the output.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpNet {
    sizes: Vec<usize>,
    layers: Vec<Layer>,
}

/// Layer inputs recorded during a training forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    inputs: Vec<Array2<f64>>,
}

/// Parameter gradients, shaped like the network's layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<Layer>,
}

impl Gradients {
    pub fn global_norm(&self) -> f64 {
        self.layers
            .iter()
            .map(|l| l.w.iter().chain(l.b.iter()).map(|g| g * g).sum::<f64>())
            .sum::<f64>()
            .sqrt()
    }

    pub fn scale(&mut self, k: f64) {
        for l in &mut self.layers {
            l.w *= k;
            l.b *= k;
        }
    }

    /// Rescales so the global norm does not exceed `max_norm`; returns the pre-clip norm.
    pub fn clip_global_norm(&mut self, max_norm: f64) -> f64 {
        let n = self.global_norm();
        if n > max_norm {
            self.scale(max_norm / n);
        }
        n
    }
}

impl MlpNet {
    /// He-uniform initialization: weights in `±sqrt(6 / fan_in)`, zero biases.
    pub fn new<R: Rng + ?Sized>(sizes: &[usize], rng: &mut R) -> Self {
        assert!(sizes.len() >= 2, "a network needs input and output sizes");
        let layers = sizes
            .windows(2)
            .map(|io| {
                let (fan_in, fan_out) = (io[0], io[1]);
                let limit = (6.0 / fan_in as f64).sqrt();
                Layer {
                    w: Array2::from_shape_simple_fn((fan_in, fan_out), || {
                        rng.random_range(-limit..limit)
                    }),
                    b: Array1::zeros(fan_out),
                }
            })
            .collect();
        Self {
            sizes: sizes.to_vec(),
            layers,
        }
    }

    pub fn zeros(sizes: &[usize]) -> Self {
        assert!(sizes.len() >= 2, "a network needs input and output sizes");
        Self {
            sizes: sizes.to_vec(),
            layers: sizes
                .windows(2)
                .map(|io| Layer::zeros(io[0], io[1]))
                .collect(),
        }
    }

    pub fn from_layers(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Domain("network needs at least one layer".into()));
        }
        let mut sizes = vec![layers[0].fan_in()];
        for (i, l) in layers.iter().enumerate() {
            if l.fan_in() != *sizes.last().unwrap() || l.b.len() != l.fan_out() {
                return Err(Error::Domain(format!("layer {i} shape mismatch")));
            }
            sizes.push(l.fan_out());
        }
        Ok(Self { sizes, layers })
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(|l| l.w.len() + l.b.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.w.iter().chain(l.b.iter()).all(|v| v.is_finite()))
    }

    fn affine(&self, i: usize, x: &ArrayView2<f64>) -> Array2<f64> {
        let l = &self.layers[i];
        let mut z = x.dot(&l.w);
        z += &l.b;
        if i + 1 < self.layers.len() {
            z.mapv_inplace(|v| v.max(0.0));
        }
        z
    }

    /// Batched forward pass; rows are samples.
    pub fn forward_batch(&self, x: ArrayView2<f64>) -> Array2<f64> {
        assert_eq!(x.ncols(), self.input_dim(), "input width");
        let mut h = self.affine(0, &x);
        for i in 1..self.layers.len() {
            h = self.affine(i, &h.view());
        }
        h
    }

    /// Single-sample forward pass. Uses matrix-vector products: the GEMM
    /// path packs each weight matrix into a fresh buffer, which on the
    /// per-step acting path fragments the heap badly.
    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.input_dim(), "input width");
        let last = self.layers.len() - 1;
        let mut h = ArrayView1::from(x).to_owned();
        for (i, l) in self.layers.iter().enumerate() {
            let mut z = h.dot(&l.w);
            z += &l.b;
            if i < last {
                z.mapv_inplace(|v| v.max(0.0));
            }
            h = z;
        }
        h.into_raw_vec_and_offset().0
    }

    /// Forward pass that keeps what [`MlpNet::backward`] needs.
    pub fn forward_train(&self, x: ArrayView2<f64>) -> (Array2<f64>, ForwardCache) {
        assert_eq!(x.ncols(), self.input_dim(), "input width");
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut h = x.to_owned();
        for i in 0..self.layers.len() {
            let next = self.affine(i, &h.view());
            inputs.push(h);
            h = next;
        }
        (h, ForwardCache { inputs })
    }

    /// Backpropagates `out_grad` (∂L/∂output, one row per sample) and returns
    /// parameter gradients summed over the batch plus ∂L/∂input.
    pub fn backward(
        &self,
        cache: &ForwardCache,
        out_grad: ArrayView2<f64>,
    ) -> (Gradients, Array2<f64>) {
        assert_eq!(out_grad.ncols(), self.output_dim(), "output gradient width");
        let mut grads: Vec<Layer> = Vec::with_capacity(self.layers.len());
        let mut g = out_grad.to_owned();
        for i in (0..self.layers.len()).rev() {
            let input = &cache.inputs[i];
            let l = &self.layers[i];
            let dw = input.t().dot(&g).as_standard_layout().into_owned();
            let db = g.sum_axis(Axis(0));
            let mut g_in = g.dot(&l.w.t());
            if i > 0 {
                // the input of layer i is a ReLU output of layer i-1
                Zip::from(&mut g_in).and(input).for_each(|gi, &a| {
                    if a <= 0.0 {
                        *gi = 0.0;
                    }
                });
            }
            grads.push(Layer { w: dw, b: db });
            g = g_in;
        }
        grads.reverse();
        (Gradients { layers: grads }, g)
    }

    /// Single-sample gradients of `output·out_grad`.
    pub fn backward_single(&self, x: &[f64], out_grad: &[f64]) -> (Gradients, Vec<f64>) {
        let xv = ArrayView2::from_shape((1, x.len()), x).expect("row view");
        let gv = ArrayView2::from_shape((1, out_grad.len()), out_grad).expect("row view");
        let (_, cache) = self.forward_train(xv);
        let (grads, g_in) = self.backward(&cache, gv);
        (grads, g_in.into_raw_vec_and_offset().0)
    }

    /// Polyak averaging `self ← τ·online + (1 − τ)·self`.
    pub fn soft_update_from(&mut self, online: &MlpNet, tau: f64) {
        assert_eq!(self.sizes, online.sizes, "target/online shape mismatch");
        if tau == 1.0 {
            self.layers.clone_from(&online.layers);
            return;
        }
        if tau == 0.0 {
            return;
        }
        for (t, o) in self.layers.iter_mut().zip(&online.layers) {
            Zip::from(&mut t.w)
                .and(&o.w)
                .for_each(|t, &o| *t = tau * o + (1.0 - tau) * *t);
            Zip::from(&mut t.b)
                .and(&o.b)
                .for_each(|t, &o| *t = tau * o + (1.0 - tau) * *t);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use proptest::prelude::{prop_assert, proptest};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_net_outputs_zero() {
        let net = MlpNet::zeros(&[4, 8, 3]);
        assert_eq!(net.forward(&[1.0, -2.0, 3.0, 0.5]), vec![0.0; 3]);
    }

    #[test]
    fn identity_linear_layer() {
        let mut net = MlpNet::zeros(&[3, 3]);
        net.layers_mut()[0].w = Array2::eye(3);
        assert_eq!(net.forward(&[1.5, -2.0, 7.0]), vec![1.5, -2.0, 7.0]);
    }

    /// Straight-line recomputation with explicit loops.
    fn loop_forward(net: &MlpNet, x: &[f64]) -> Vec<f64> {
        let mut h = x.to_vec();
        let n = net.layers().len();
        for (i, l) in net.layers().iter().enumerate() {
            let mut out = vec![0.0; l.fan_out()];
            for (o, out_o) in out.iter_mut().enumerate() {
                let mut s = l.b[o];
                for (k, hk) in h.iter().enumerate() {
                    s += hk * l.w[[k, o]];
                }
                *out_o = if i + 1 < n { s.max(0.0) } else { s };
            }
            h = out;
        }
        h
    }

    #[test]
    fn forward_matches_loop_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let mut net = MlpNet::new(&[4, 8, 3], &mut rng);
            for l in net.layers_mut() {
                l.b.mapv_inplace(|_| rng.random_range(-0.5..0.5));
            }
            let x: Vec<f64> = (0..4).map(|_| rng.random_range(-2.0..2.0)).collect();
            let a = net.forward(&x);
            let b = loop_forward(&net, &x);
            for (p, q) in a.iter().zip(&b) {
                assert!((p - q).abs() <= 1e-12 * (1.0 + q.abs()));
            }
        }
    }

    #[test]
    fn batch_rows_match_single_forward() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let net = MlpNet::new(&[3, 6, 2], &mut rng);
        let x = array![[0.1, 0.2, 0.3], [-1.0, 0.5, 2.0]];
        let y = net.forward_batch(x.view());
        // summation order differs between the two paths
        for r in 0..2 {
            for (p, q) in y.row(r).iter().zip(net.forward(&x.row(r).to_vec())) {
                assert!((p - q).abs() <= 1e-12 * (1.0 + q.abs()));
            }
        }
    }

    #[test]
    fn zero_out_grad_gives_zero_gradients() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let net = MlpNet::new(&[3, 5, 2], &mut rng);
        let (g, gi) = net.backward_single(&[0.3, -0.1, 0.9], &[0.0, 0.0]);
        assert_eq!(g.global_norm(), 0.0);
        assert!(gi.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn linear_layer_weight_gradient_is_input() {
        let net = MlpNet::zeros(&[3, 1]);
        let x = [0.5, -1.5, 2.0];
        let (g, _) = net.backward_single(&x, &[1.0]);
        assert_eq!(g.layers[0].w.column(0).to_vec(), x.to_vec());
        assert_eq!(g.layers[0].b[0], 1.0);
    }

    #[test]
    fn backward_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let h = 1e-5;
        for _ in 0..5 {
            let mut net = MlpNet::new(&[4, 8, 3], &mut rng);
            for l in net.layers_mut() {
                l.b.mapv_inplace(|_| rng.random_range(-0.3..0.3));
            }
            let x: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
            let c: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
            let objective = |n: &MlpNet| {
                n.forward(&x)
                    .iter()
                    .zip(&c)
                    .map(|(o, c)| o * c)
                    .sum::<f64>()
            };
            let (g, _) = net.backward_single(&x, &c);
            for li in 0..net.layers().len() {
                let shape = net.layers()[li].w.dim();
                for r in 0..shape.0 {
                    for col in 0..shape.1 {
                        let mut p = net.clone();
                        p.layers_mut()[li].w[[r, col]] += h;
                        let mut m = net.clone();
                        m.layers_mut()[li].w[[r, col]] -= h;
                        let fd = (objective(&p) - objective(&m)) / (2.0 * h);
                        let an = g.layers[li].w[[r, col]];
                        assert!((fd - an).abs() <= 1e-6 + 1e-4 * an.abs(), "fd {fd} vs {an}");
                    }
                }
            }
        }
    }

    #[test]
    fn clip_bounds_norm() {
        let net = MlpNet::zeros(&[2, 2]);
        let (mut g, _) = net.backward_single(&[30.0, 40.0], &[1.0, 0.0]);
        let before = g.clip_global_norm(10.0);
        assert!(before > 10.0);
        assert!((g.global_norm() - 10.0).abs() < 1e-12);
    }

    #[test]
    fn polyak_endpoints_and_scalar() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let online = MlpNet::new(&[3, 4, 2], &mut rng);
        let orig = MlpNet::new(&[3, 4, 2], &mut rng);
        let mut t = orig.clone();
        t.soft_update_from(&online, 0.0);
        assert_eq!(t, orig);
        t.soft_update_from(&online, 1.0);
        assert_eq!(t, online);

        let mut one = MlpNet::zeros(&[1, 1]);
        one.layers_mut()[0].w[[0, 0]] = 1.0;
        let mut target = MlpNet::zeros(&[1, 1]);
        target.soft_update_from(&one, 0.01);
        assert_eq!(target.layers()[0].w[[0, 0]], 0.01);
    }

    proptest! {
        #[test]
        fn polyak_contracts(seed in 0u64..1000, tau in 0.0f64..=1.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let online = MlpNet::new(&[3, 4, 2], &mut rng);
            let mut target = MlpNet::new(&[3, 4, 2], &mut rng);
            let gap = |t: &MlpNet| t.layers().iter().zip(online.layers())
                .flat_map(|(a, b)| a.w.iter().zip(b.w.iter()).map(|(x, y)| (x - y).abs()).collect::<Vec<_>>())
                .fold(0.0f64, f64::max);
            let mut prev = gap(&target);
            for _ in 0..10 {
                target.soft_update_from(&online, tau);
                let now = gap(&target);
                prop_assert!(now <= prev + 1e-15);
                prev = now;
            }
        }
    }
}
