use super::mlp::{Gradients, Layer, MlpNet};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamHyper {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

/// In-place Adam update of one parameter tensor at (1-based) step `t`.
pub fn adam_update(
    params: &mut [f64],
    grads: &[f64],
    m: &mut [f64],
    v: &mut [f64],
    t: u64,
    h: &AdamHyper,
) {
    debug_assert!(params.len() == grads.len() && m.len() == grads.len() && v.len() == grads.len());
    let bc1 = 1.0 - h.beta1.powi(t as i32);
    let bc2 = 1.0 - h.beta2.powi(t as i32);
    for i in 0..params.len() {
        let g = grads[i];
        m[i] = h.beta1 * m[i] + (1.0 - h.beta1) * g;
        v[i] = h.beta2 * v[i] + (1.0 - h.beta2) * g * g;
        let m_hat = m[i] / bc1;
        let v_hat = v[i] / bc2;
        params[i] -= h.lr * m_hat / (v_hat.sqrt() + h.eps);
    }
}

/// Adam optimizer state for one network.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub hyper: AdamHyper,
    t: u64,
    m: Vec<Layer>,
    v: Vec<Layer>,
}

impl Adam {
    pub fn new(net: &MlpNet, hyper: AdamHyper) -> Self {
        let zeros: Vec<Layer> = net
            .layers()
            .iter()
            .map(|l| Layer::zeros(l.fan_in(), l.fan_out()))
            .collect();
        Self {
            hyper,
            t: 0,
            m: zeros.clone(),
            v: zeros,
        }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    pub fn first_moments(&self) -> &[Layer] {
        &self.m
    }

    pub fn step(&mut self, net: &mut MlpNet, grads: &Gradients) {
        self.t += 1;
        let t = self.t;
        let h = self.hyper;
        let layers = net.layers_mut();
        assert_eq!(layers.len(), grads.layers.len(), "gradient shape");
        for (i, layer) in layers.iter_mut().enumerate() {
            let g = &grads.layers[i];
            let (m, v) = (&mut self.m[i], &mut self.v[i]);
            adam_update(
                layer.w.as_slice_mut().expect("contiguous"),
                g.w.as_slice().expect("contiguous"),
                m.w.as_slice_mut().expect("contiguous"),
                v.w.as_slice_mut().expect("contiguous"),
                t,
                &h,
            );
            adam_update(
                layer.b.as_slice_mut().expect("contiguous"),
                g.b.as_slice().expect("contiguous"),
                m.b.as_slice_mut().expect("contiguous"),
                v.b.as_slice_mut().expect("contiguous"),
                t,
                &h,
            );
        }
    }
}
