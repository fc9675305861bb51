//! Small fully-connected Q-network with rectified-linear hidden layers,
//! hand-rolled backprop, and SGD / adaptive-moment optimizers.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::rng::Prng;
use crate::types::Observation;

const HUBER_DELTA: f64 = 1.0;
const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OptimizerKind {
    Sgd,
    Adam,
}

#[derive(Debug, Clone)]
struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

/// Dense network: input dim D, ReLU hidden layers, |A| linear outputs.
/// Parameters are stored as one flat vector (weights row-major per
/// layer, then biases per layer) so finite-difference checks can
/// perturb individual entries.
#[derive(Debug, Clone)]
pub struct MlpQ {
    /// Layer widths including input and output: [D, h1, ..., A].
    sizes: Vec<usize>,
    params: Vec<f64>,
    w_off: Vec<usize>,
    b_off: Vec<usize>,
    lr: f64,
    opt_kind: OptimizerKind,
    adam: Option<AdamState>,
}

fn layer_offsets(sizes: &[usize]) -> (Vec<usize>, Vec<usize>, usize) {
    // Weight block offsets then bias block offsets in the flat vector.
    let mut w_off = Vec::new();
    let mut cursor = 0;
    for l in 0..sizes.len() - 1 {
        w_off.push(cursor);
        cursor += sizes[l] * sizes[l + 1];
    }
    let mut b_off = Vec::new();
    for l in 0..sizes.len() - 1 {
        b_off.push(cursor);
        cursor += sizes[l + 1];
    }
    (w_off, b_off, cursor)
}

impl MlpQ {
    pub fn new(
        input_dim: usize,
        hidden: &[usize],
        n_actions: usize,
        lr: f64,
        opt_kind: OptimizerKind,
        rng: &mut Prng,
    ) -> Self {
        let mut sizes = vec![input_dim];
        sizes.extend_from_slice(hidden);
        sizes.push(n_actions);
        let (w_off, b_off, n_params) = layer_offsets(&sizes);
        let mut params = vec![0.0; n_params];
        // He-style init scaled by fan-in; biases start at zero.
        for l in 0..sizes.len() - 1 {
            let (fan_in, fan_out) = (sizes[l], sizes[l + 1]);
            let scale = (2.0 / fan_in as f64).sqrt();
            for k in 0..fan_in * fan_out {
                params[w_off[l] + k] = rng.gen_range(-1.0..1.0) * scale;
            }
        }
        let adam = match opt_kind {
            OptimizerKind::Adam => Some(AdamState {
                m: vec![0.0; n_params],
                v: vec![0.0; n_params],
                t: 0,
            }),
            OptimizerKind::Sgd => None,
        };
        Self {
            sizes,
            params,
            w_off,
            b_off,
            lr,
            opt_kind,
            adam,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn n_actions(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    pub fn param(&self, i: usize) -> f64 {
        self.params[i]
    }

    pub fn set_param(&mut self, i: usize, v: f64) {
        self.params[i] = v;
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn set_params(&mut self, p: Vec<f64>) {
        assert_eq!(p.len(), self.params.len());
        self.params = p;
    }

    fn weight(&self, l: usize, out: usize, inp: usize) -> f64 {
        self.params[self.w_off[l] + out * self.sizes[l] + inp]
    }

    fn bias(&self, l: usize, out: usize) -> f64 {
        self.params[self.b_off[l] + out]
    }

    /// Forward pass returning all layer activations (post-ReLU for
    /// hidden layers, linear for the output).
    fn forward_full(&self, s: &[f64]) -> Vec<Vec<f64>> {
        let n_layers = self.sizes.len() - 1;
        let mut acts = Vec::with_capacity(n_layers + 1);
        acts.push(s.to_vec());
        for l in 0..n_layers {
            let prev = &acts[l];
            let mut out = vec![0.0; self.sizes[l + 1]];
            for (j, o) in out.iter_mut().enumerate() {
                let mut z = self.bias(l, j);
                for (i, &x) in prev.iter().enumerate() {
                    z += self.weight(l, j, i) * x;
                }
                *o = if l + 1 < self.sizes.len() - 1 {
                    z.max(0.0)
                } else {
                    z
                };
            }
            acts.push(out);
        }
        acts
    }

    pub fn q_values(&self, s: &Observation) -> Vec<f64> {
        assert_eq!(s.dim(), self.input_dim(), "observation dimension mismatch");
        self.forward_full(s.as_slice()).pop().unwrap()
    }

    /// Weighted-mean Huber loss over (state, action, target) samples and
    /// its gradient with respect to the flat parameter vector.
    pub fn loss_and_grad(
        &self,
        batch: &[(&Observation, usize, f64, f64)],
    ) -> (f64, Vec<f64>, Vec<f64>) {
        let n = batch.len().max(1) as f64;
        let (w_off, b_off) = (&self.w_off, &self.b_off);
        let mut grad = vec![0.0; self.params.len()];
        let mut loss = 0.0;
        let mut deltas = Vec::with_capacity(batch.len());
        let n_layers = self.sizes.len() - 1;

        for &(s, action, target, weight) in batch {
            let acts = self.forward_full(s.as_slice());
            let q_sa = acts[n_layers][action];
            let delta = target - q_sa;
            deltas.push(delta);
            loss += weight * huber(delta) / n;

            // dL/dq for the taken action only.
            let dq = -weight * huber_grad(delta) / n;
            let mut upstream = vec![0.0; self.sizes[n_layers]];
            upstream[action] = dq;

            for l in (0..n_layers).rev() {
                let prev = &acts[l];
                let mut next_upstream = vec![0.0; self.sizes[l]];
                for (j, &g) in upstream.iter().enumerate() {
                    if g == 0.0 {
                        continue;
                    }
                    grad[b_off[l] + j] += g;
                    let row = w_off[l] + j * self.sizes[l];
                    for (i, &x) in prev.iter().enumerate() {
                        grad[row + i] += g * x;
                        next_upstream[i] += g * self.params[row + i];
                    }
                }
                if l > 0 {
                    // ReLU gate on the hidden activation.
                    for (i, u) in next_upstream.iter_mut().enumerate() {
                        if acts[l][i] <= 0.0 {
                            *u = 0.0;
                        }
                    }
                }
                upstream = next_upstream;
            }
        }
        (loss, grad, deltas)
    }

    /// One optimizer step along `grad`.
    pub fn apply_grad(&mut self, grad: &[f64]) {
        match self.opt_kind {
            OptimizerKind::Sgd => {
                for (p, g) in self.params.iter_mut().zip(grad) {
                    *p -= self.lr * g;
                }
            }
            OptimizerKind::Adam => {
                let st = self.adam.as_mut().expect("adam state");
                st.t += 1;
                let t = st.t as f64;
                let bc1 = 1.0 - ADAM_BETA1.powf(t);
                let bc2 = 1.0 - ADAM_BETA2.powf(t);
                for i in 0..self.params.len() {
                    st.m[i] = ADAM_BETA1 * st.m[i] + (1.0 - ADAM_BETA1) * grad[i];
                    st.v[i] = ADAM_BETA2 * st.v[i] + (1.0 - ADAM_BETA2) * grad[i] * grad[i];
                    let m_hat = st.m[i] / bc1;
                    let v_hat = st.v[i] / bc2;
                    self.params[i] -= self.lr * m_hat / (v_hat.sqrt() + ADAM_EPS);
                }
            }
        }
    }

    /// Train one step toward per-sample targets; returns the TD errors.
    pub fn update_toward(&mut self, batch: &[(&Observation, usize, f64, f64)]) -> Vec<f64> {
        let (_, grad, deltas) = self.loss_and_grad(batch);
        self.apply_grad(&grad);
        deltas
    }
}

pub fn huber(delta: f64) -> f64 {
    let a = delta.abs();
    if a <= HUBER_DELTA {
        0.5 * delta * delta
    } else {
        HUBER_DELTA * (a - 0.5 * HUBER_DELTA)
    }
}

/// d Huber / d delta = clip(delta, -1, 1).
fn huber_grad(delta: f64) -> f64 {
    delta.clamp(-HUBER_DELTA, HUBER_DELTA)
}

/// Compare analytic gradients of the Huber loss to central finite
/// differences over a parameter subset; returns the max relative error.
pub fn gradient_check(
    net: &MlpQ,
    batch: &[(&Observation, usize, f64, f64)],
    n_probe: usize,
    rng: &mut Prng,
) -> f64 {
    let (_, grad, _) = net.loss_and_grad(batch);
    let h = 1e-5;
    let n = net.num_params();
    let probes: Vec<usize> = if n <= n_probe {
        (0..n).collect()
    } else {
        rand::seq::index::sample(rng, n, n_probe).into_vec()
    };
    let mut worst = 0.0f64;
    let mut probe_net = net.clone();
    for i in probes {
        let orig = probe_net.param(i);
        probe_net.set_param(i, orig + h);
        let (lp, _, _) = probe_net.loss_and_grad(batch);
        probe_net.set_param(i, orig - h);
        let (lm, _, _) = probe_net.loss_and_grad(batch);
        probe_net.set_param(i, orig);
        let numeric = (lp - lm) / (2.0 * h);
        let denom = grad[i].abs().max(numeric.abs());
        let rel = if denom < 1e-10 {
            0.0
        } else {
            (grad[i] - numeric).abs() / denom.max(1e-8)
        };
        worst = worst.max(rel);
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream_rng, Stream};

    #[test]
    fn zero_network_outputs_zero() {
        let mut rng = stream_rng(0, Stream::Init);
        let mut net = MlpQ::new(4, &[8], 3, 0.1, OptimizerKind::Sgd, &mut rng);
        net.set_params(vec![0.0; net.num_params()]);
        let q = net.q_values(&Observation(vec![1.0, -2.0, 0.5, 3.0]));
        assert_eq!(q, vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn hand_computed_forward_pass() {
        // 2 inputs -> 2 hidden (ReLU) -> 1 output.
        let mut rng = stream_rng(0, Stream::Init);
        let mut net = MlpQ::new(2, &[2], 1, 0.1, OptimizerKind::Sgd, &mut rng);
        // weights layer0: [[1, 2], [-1, 0.5]]; layer1: [[3, -2]]
        // biases layer0: [0.5, -0.25]; layer1: [1]
        let p = vec![1.0, 2.0, -1.0, 0.5, 3.0, -2.0, 0.5, -0.25, 1.0];
        net.set_params(p);
        let x = [0.5, -1.0];
        // h0 = relu(1*0.5 + 2*(-1) + 0.5) = relu(-1) = 0
        // h1 = relu(-1*0.5 + 0.5*(-1) - 0.25) = relu(-1.25) = 0
        // out = 3*0 - 2*0 + 1 = 1
        let q = net.q_values(&Observation(x.to_vec()));
        assert!((q[0] - 1.0).abs() < 1e-12);

        let y = [1.0, 1.0];
        // h0 = relu(1 + 2 + 0.5) = 3.5; h1 = relu(-1 + 0.5 - 0.25) = 0
        // out = 3*3.5 + 1 = 11.5
        let q = net.q_values(&Observation(y.to_vec()));
        assert!((q[0] - 11.5).abs() < 1e-12);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = stream_rng(7, Stream::Init);
        let net = MlpQ::new(5, &[16, 8], 4, 0.01, OptimizerKind::Sgd, &mut rng);
        let obs: Vec<Observation> = (0..6)
            .map(|_| Observation((0..5).map(|_| rng.gen_range(-1.0..1.0)).collect()))
            .collect();
        let batch: Vec<(&Observation, usize, f64, f64)> = obs
            .iter()
            .enumerate()
            .map(|(i, o)| (o, i % 4, rng.gen_range(-2.0..2.0), 1.0))
            .collect();
        let err = gradient_check(&net, &batch, 64, &mut rng);
        assert!(err < 1e-4, "max relative error {err}");
    }

    #[test]
    fn linear_network_gradient_is_closed_form() {
        // No hidden layer: Q(s, a) = w_a . s + b_a, squared-error regime
        // (|delta| < 1): dL/dw_a = -delta * s / n.
        let mut rng = stream_rng(8, Stream::Init);
        let mut net = MlpQ::new(3, &[], 2, 0.1, OptimizerKind::Sgd, &mut rng);
        net.set_params(vec![0.1, -0.2, 0.3, 0.05, 0.0, -0.1, 0.01, -0.02]);
        let s = Observation(vec![0.2, -0.4, 0.6]);
        let q = net.q_values(&s);
        let target = q[1] + 0.5; // delta = 0.5, inside the quadratic zone
        let batch = vec![(&s, 1usize, target, 1.0)];
        let (_, grad, deltas) = net.loss_and_grad(&batch);
        assert!((deltas[0] - 0.5).abs() < 1e-12);
        // weight block layer0: action0 row then action1 row.
        let expect = [-0.5 * 0.2, -0.5 * -0.4, -0.5 * 0.6];
        for (g, e) in grad[3..6].iter().zip(expect) {
            assert!((g - e).abs() < 1e-10);
        }
        // action-0 row untouched.
        assert!(grad[..3].iter().all(|&g| g == 0.0));
        // bias gradient for action 1 = -delta.
        assert!((grad[7] + 0.5).abs() < 1e-10);
    }

    #[test]
    fn training_on_frozen_batch_decreases_loss() {
        let mut rng = stream_rng(9, Stream::Init);
        let mut net = MlpQ::new(4, &[16], 3, 1e-4, OptimizerKind::Sgd, &mut rng);
        let obs: Vec<Observation> = (0..8)
            .map(|_| Observation((0..4).map(|_| rng.gen_range(-1.0..1.0)).collect()))
            .collect();
        let batch: Vec<(&Observation, usize, f64, f64)> = obs
            .iter()
            .enumerate()
            .map(|(i, o)| (o, i % 3, rng.gen_range(-1.0..1.0), 1.0))
            .collect();
        let mut last = f64::INFINITY;
        let mut non_monotone = 0;
        for _ in 0..50 {
            let (loss, grad, _) = net.loss_and_grad(&batch);
            if loss > last {
                non_monotone += 1;
            }
            last = loss;
            net.apply_grad(&grad);
        }
        assert!(non_monotone <= 2, "{non_monotone} non-monotone steps");
    }
}
