//! Minimal dense network with reverse-mode differentiation and an
//! adaptive-moment optimizer, sized for small sampling policies.
//!
//! Parameters live in flat row-major matrices, gradients in a tape with
//! matching shapes, and every update path is deterministic: identical
//! seeds produce bit-identical parameter trajectories.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Activation applied between hidden layers (never after the last).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Activation {
    LeakyRelu { slope: f64 },
    Identity,
}

impl Activation {
    #[inline]
    fn apply(&self, z: f64) -> f64 {
        match *self {
            Activation::LeakyRelu { slope } => {
                if z >= 0.0 {
                    z
                } else {
                    slope * z
                }
            }
            Activation::Identity => z,
        }
    }

    #[inline]
    fn derivative(&self, z: f64) -> f64 {
        match *self {
            Activation::LeakyRelu { slope } => {
                if z >= 0.0 {
                    1.0
                } else {
                    slope
                }
            }
            Activation::Identity => 1.0,
        }
    }
}

/// Default LeakyReLU slope.
pub const LEAKY_SLOPE: f64 = 0.01;

/// One affine layer, weights stored row-major `[out_dim x in_dim]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DenseLayer {
    pub in_dim: usize,
    pub out_dim: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl DenseLayer {
    fn matvec(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for row in 0..self.out_dim {
            let w = &self.weights[row * self.in_dim..(row + 1) * self.in_dim];
            let mut acc = self.bias[row];
            for (a, b) in w.iter().zip(x) {
                acc += a * b;
            }
            out.push(acc);
        }
    }
}

/// Fully connected network: affine-activation chain, logits from the
/// final affine layer (no output activation).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DenseNet {
    pub layers: Vec<DenseLayer>,
    pub activation: Activation,
}

/// Intermediate values a forward pass leaves behind for backprop: the
/// input and every pre-activation.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    input: Vec<f64>,
    pre_activations: Vec<Vec<f64>>,
}

/// Per-parameter gradient accumulators matching a [`DenseNet`]'s shape.
#[derive(Debug, Clone)]
pub struct GradTape {
    pub d_weights: Vec<Vec<f64>>,
    pub d_bias: Vec<Vec<f64>>,
}

impl GradTape {
    pub fn zeros_like(net: &DenseNet) -> Self {
        Self {
            d_weights: net.layers.iter().map(|l| vec![0.0; l.weights.len()]).collect(),
            d_bias: net.layers.iter().map(|l| vec![0.0; l.bias.len()]).collect(),
        }
    }

    pub fn zero(&mut self) {
        for w in &mut self.d_weights {
            w.iter_mut().for_each(|v| *v = 0.0);
        }
        for b in &mut self.d_bias {
            b.iter_mut().for_each(|v| *v = 0.0);
        }
    }

    /// Accumulates `other` into `self` (shapes must match).
    pub fn add_assign(&mut self, other: &GradTape) {
        for (a, b) in self.d_weights.iter_mut().zip(&other.d_weights) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
        for (a, b) in self.d_bias.iter_mut().zip(&other.d_bias) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for w in &mut self.d_weights {
            w.iter_mut().for_each(|v| *v *= factor);
        }
        for b in &mut self.d_bias {
            b.iter_mut().for_each(|v| *v *= factor);
        }
    }
}

impl DenseNet {
    /// Builds a network with the given layer widths, e.g. `[64, 64, 64, 3]`
    /// starting from `input_dim`. Weights are seeded uniform in
    /// `[-1/sqrt(fan_in), 1/sqrt(fan_in)]`, biases zero.
    pub fn new<R: Rng>(input_dim: usize, widths: &[usize], activation: Activation, rng: &mut R) -> Result<Self> {
        if input_dim == 0 || widths.is_empty() || widths.iter().any(|&w| w == 0) {
            return Err(Error::InvalidInput("layer widths must be positive".into()));
        }
        let mut layers = Vec::with_capacity(widths.len());
        let mut in_dim = input_dim;
        for &out_dim in widths {
            let bound = 1.0 / (in_dim as f64).sqrt();
            let weights = (0..in_dim * out_dim)
                .map(|_| rng.random_range(-bound..=bound))
                .collect();
            layers.push(DenseLayer {
                in_dim,
                out_dim,
                weights,
                bias: vec![0.0; out_dim],
            });
            in_dim = out_dim;
        }
        Ok(Self { layers, activation })
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map(|l| l.out_dim).unwrap_or(0)
    }

    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.bias.len())
            .sum()
    }

    /// Forward pass returning logits and the cache needed by
    /// [`DenseNet::backward`].
    pub fn forward(&self, x: &[f64]) -> Result<(Vec<f64>, ForwardCache)> {
        self.check_input(x)?;
        let n = self.layers.len();
        let mut pre_activations = Vec::with_capacity(n);
        let mut current = x.to_vec();
        for (i, layer) in self.layers.iter().enumerate() {
            let mut z = Vec::new();
            layer.matvec(&current, &mut z);
            pre_activations.push(z.clone());
            if i + 1 < n {
                z.iter_mut().for_each(|v| *v = self.activation.apply(*v));
            }
            current = z;
        }
        Ok((
            current,
            ForwardCache {
                input: x.to_vec(),
                pre_activations,
            },
        ))
    }

    /// Forward pass without the cache, writing logits into `out`.
    pub fn forward_logits(&self, x: &[f64], out: &mut Vec<f64>) -> Result<()> {
        self.check_input(x)?;
        let n = self.layers.len();
        let mut current = x.to_vec();
        let mut next = Vec::new();
        for (i, layer) in self.layers.iter().enumerate() {
            layer.matvec(&current, &mut next);
            if i + 1 < n {
                next.iter_mut().for_each(|v| *v = self.activation.apply(*v));
            }
            std::mem::swap(&mut current, &mut next);
        }
        out.clear();
        out.extend_from_slice(&current);
        Ok(())
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                got: x.len(),
            });
        }
        Ok(())
    }

    /// Reverse pass: accumulates exact gradients of the scalar loss whose
    /// logit gradient is `d_logits` into `tape`.
    pub fn backward(&self, cache: &ForwardCache, d_logits: &[f64], tape: &mut GradTape) -> Result<()> {
        let n = self.layers.len();
        if d_logits.len() != self.output_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.output_dim(),
                got: d_logits.len(),
            });
        }

        let mut dz = d_logits.to_vec();
        for i in (0..n).rev() {
            let layer = &self.layers[i];
            // Input that fed this layer's affine map.
            let layer_input: Vec<f64> = if i == 0 {
                cache.input.clone()
            } else {
                cache.pre_activations[i - 1]
                    .iter()
                    .map(|&z| self.activation.apply(z))
                    .collect()
            };

            let dw = &mut tape.d_weights[i];
            let db = &mut tape.d_bias[i];
            let mut dx = vec![0.0; layer.in_dim];
            for row in 0..layer.out_dim {
                let g = dz[row];
                db[row] += g;
                let w_row = &layer.weights[row * layer.in_dim..(row + 1) * layer.in_dim];
                let dw_row = &mut dw[row * layer.in_dim..(row + 1) * layer.in_dim];
                for j in 0..layer.in_dim {
                    dw_row[j] += g * layer_input[j];
                    dx[j] += g * w_row[j];
                }
            }

            if i > 0 {
                // Pass through the activation of the previous layer.
                dz = dx
                    .iter()
                    .zip(&cache.pre_activations[i - 1])
                    .map(|(&d, &z)| d * self.activation.derivative(z))
                    .collect();
            }
        }
        Ok(())
    }
}

/// Adam accumulators for a [`DenseNet`] plus one standalone scalar.
///
/// The scalar slot exists for a partition-function parameter trained at a
/// multiple of the network learning rate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdamState {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub step: u64,
    m_weights: Vec<Vec<f64>>,
    v_weights: Vec<Vec<f64>>,
    m_bias: Vec<Vec<f64>>,
    v_bias: Vec<Vec<f64>>,
    m_scalar: f64,
    v_scalar: f64,
}

impl AdamState {
    pub fn new(net: &DenseNet) -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            m_weights: net.layers.iter().map(|l| vec![0.0; l.weights.len()]).collect(),
            v_weights: net.layers.iter().map(|l| vec![0.0; l.weights.len()]).collect(),
            m_bias: net.layers.iter().map(|l| vec![0.0; l.bias.len()]).collect(),
            v_bias: net.layers.iter().map(|l| vec![0.0; l.bias.len()]).collect(),
            m_scalar: 0.0,
            v_scalar: 0.0,
        }
    }

    /// One bias-corrected adaptive-moment update of the network and,
    /// optionally, of the standalone scalar (at `scalar_lr`).
    pub fn step(
        &mut self,
        net: &mut DenseNet,
        tape: &GradTape,
        lr: f64,
        scalar: Option<(&mut f64, f64, f64)>,
    ) {
        self.step += 1;
        let t = self.step as f64;
        let bc1 = 1.0 - self.beta1.powf(t);
        let bc2 = 1.0 - self.beta2.powf(t);

        for (i, layer) in net.layers.iter_mut().enumerate() {
            Self::update_slice(
                &mut layer.weights,
                &tape.d_weights[i],
                &mut self.m_weights[i],
                &mut self.v_weights[i],
                self.beta1,
                self.beta2,
                self.eps,
                lr,
                bc1,
                bc2,
            );
            Self::update_slice(
                &mut layer.bias,
                &tape.d_bias[i],
                &mut self.m_bias[i],
                &mut self.v_bias[i],
                self.beta1,
                self.beta2,
                self.eps,
                lr,
                bc1,
                bc2,
            );
        }

        if let Some((value, grad, scalar_lr)) = scalar {
            self.m_scalar = self.beta1 * self.m_scalar + (1.0 - self.beta1) * grad;
            self.v_scalar = self.beta2 * self.v_scalar + (1.0 - self.beta2) * grad * grad;
            let m_hat = self.m_scalar / bc1;
            let v_hat = self.v_scalar / bc2;
            *value -= scalar_lr * m_hat / (v_hat.sqrt() + self.eps);
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn update_slice(
        params: &mut [f64],
        grads: &[f64],
        m: &mut [f64],
        v: &mut [f64],
        beta1: f64,
        beta2: f64,
        eps: f64,
        lr: f64,
        bc1: f64,
        bc2: f64,
    ) {
        for i in 0..params.len() {
            let g = grads[i];
            m[i] = beta1 * m[i] + (1.0 - beta1) * g;
            v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
            let m_hat = m[i] / bc1;
            let v_hat = v[i] / bc2;
            params[i] -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
}

/// Masked, numerically stabilized log-softmax.
///
/// Masked entries come back as `-inf` and are excluded from the
/// normalization; at least one entry must be unmasked.
pub fn log_softmax_masked(logits: &[f64], mask: &[bool]) -> Result<Vec<f64>> {
    if logits.len() != mask.len() {
        return Err(Error::DimensionMismatch {
            expected: logits.len(),
            got: mask.len(),
        });
    }
    let mut max = f64::NEG_INFINITY;
    for (l, &m) in logits.iter().zip(mask) {
        if m && *l > max {
            max = *l;
        }
    }
    if max == f64::NEG_INFINITY {
        return Err(Error::InvalidInput("all actions masked".into()));
    }
    let mut total = 0.0;
    for (l, &m) in logits.iter().zip(mask) {
        if m {
            total += (l - max).exp();
        }
    }
    let log_z = max + total.ln();
    Ok(logits
        .iter()
        .zip(mask)
        .map(|(&l, &m)| if m { l - log_z } else { f64::NEG_INFINITY })
        .collect())
}

/// Writes the network as JSON with full round-trip precision.
pub fn save_checkpoint<T: Serialize>(model: &T, path: &std::path::Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    serde_json::to_writer(std::io::BufWriter::new(file), model)?;
    Ok(())
}

pub fn load_checkpoint<T: for<'de> Deserialize<'de>>(path: &std::path::Path) -> Result<T> {
    let file = std::fs::File::open(path)?;
    Ok(serde_json::from_reader(std::io::BufReader::new(file))?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn single_layer(w: &[f64], b: &[f64], in_dim: usize) -> DenseNet {
        DenseNet {
            layers: vec![DenseLayer {
                in_dim,
                out_dim: b.len(),
                weights: w.to_vec(),
                bias: b.to_vec(),
            }],
            activation: Activation::LeakyRelu { slope: LEAKY_SLOPE },
        }
    }

    #[test]
    fn forward_affine_cases() {
        let net = single_layer(&[2.0], &[1.0], 1);
        let (y, _) = net.forward(&[3.0]).unwrap();
        assert_eq!(y, vec![7.0]);

        let identity = single_layer(&[1.0, 0.0, 0.0, 1.0], &[0.0, 0.0], 2);
        let (y, _) = identity.forward(&[0.3, -0.7]).unwrap();
        assert_eq!(y, vec![0.3, -0.7]);

        let zero = single_layer(&[0.0, 0.0], &[0.0], 2);
        let (y, _) = zero.forward(&[5.0, -3.0]).unwrap();
        assert_eq!(y, vec![0.0]);
    }

    #[test]
    fn backward_linear_case() {
        let net = single_layer(&[2.0], &[1.0], 1);
        let (_, cache) = net.forward(&[3.0]).unwrap();
        let mut tape = GradTape::zeros_like(&net);
        net.backward(&cache, &[1.0], &mut tape).unwrap();
        assert_eq!(tape.d_weights[0], vec![3.0]);
        assert_eq!(tape.d_bias[0], vec![1.0]);

        tape.zero();
        net.backward(&cache, &[0.0], &mut tape).unwrap();
        assert_eq!(tape.d_weights[0], vec![0.0]);
    }

    #[test]
    fn backward_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..25 {
            let mut net = DenseNet::new(
                4,
                &[6, 5, 3],
                Activation::LeakyRelu { slope: LEAKY_SLOPE },
                &mut rng,
            )
            .unwrap();
            let x: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
            let coeff: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();

            // Loss = coeff . logits
            let (_, cache) = net.forward(&x).unwrap();
            let mut tape = GradTape::zeros_like(&net);
            net.backward(&cache, &coeff, &mut tape).unwrap();

            let h = 1e-5;
            let loss = |net: &DenseNet| -> f64 {
                let mut out = Vec::new();
                net.forward_logits(&x, &mut out).unwrap();
                out.iter().zip(&coeff).map(|(a, b)| a * b).sum()
            };
            for li in 0..net.layers.len() {
                for wi in 0..net.layers[li].weights.len() {
                    let orig = net.layers[li].weights[wi];
                    net.layers[li].weights[wi] = orig + h;
                    let up = loss(&net);
                    net.layers[li].weights[wi] = orig - h;
                    let down = loss(&net);
                    net.layers[li].weights[wi] = orig;
                    let fd = (up - down) / (2.0 * h);
                    let ad = tape.d_weights[li][wi];
                    let denom = ad.abs().max(fd.abs()).max(1.0);
                    assert!(
                        ((ad - fd) / denom).abs() <= 1e-4,
                        "layer {li} w {wi}: ad={ad} fd={fd}"
                    );
                }
            }
        }
    }

    #[test]
    fn adam_zero_gradient_keeps_parameters() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut net = DenseNet::new(2, &[3, 1], Activation::Identity, &mut rng).unwrap();
        let before = net.clone();
        let tape = GradTape::zeros_like(&net);
        let mut opt = AdamState::new(&net);
        opt.step(&mut net, &tape, 0.01, None);
        for (a, b) in net.layers.iter().zip(&before.layers) {
            assert_eq!(a.weights, b.weights);
            assert_eq!(a.bias, b.bias);
        }
    }

    #[test]
    fn adam_first_step_magnitude_and_direction() {
        let mut net = single_layer(&[0.0], &[0.0], 1);
        let mut tape = GradTape::zeros_like(&net);
        tape.d_weights[0][0] = 0.37;
        let mut opt = AdamState::new(&net);
        let lr = 0.01;
        opt.step(&mut net, &tape, lr, None);
        // Bias-corrected first step is ~lr against the gradient sign.
        assert_relative_eq!(net.layers[0].weights[0], -lr, epsilon = 1e-6);

        // A constant gradient keeps moving the parameter the same way.
        for _ in 0..50 {
            opt.step(&mut net, &tape, lr, None);
        }
        assert!(net.layers[0].weights[0] < -0.4);
    }

    #[test]
    fn adam_scalar_slot_uses_own_rate() {
        let mut net = single_layer(&[0.0], &[0.0], 1);
        let tape = GradTape::zeros_like(&net);
        let mut opt = AdamState::new(&net);
        let mut z = 0.0;
        opt.step(&mut net, &tape, 0.01, Some((&mut z, 1.0, 0.1)));
        assert_relative_eq!(z, -0.1, epsilon = 1e-6);
    }

    #[test]
    fn log_softmax_cases() {
        let lp = log_softmax_masked(&[0.5, 0.5, 0.5], &[true, true, true]).unwrap();
        for &v in &lp {
            assert_relative_eq!(v, (1.0f64 / 3.0).ln(), epsilon = 1e-12);
        }

        let lp = log_softmax_masked(&[2.0, 9.0], &[true, false]).unwrap();
        assert_relative_eq!(lp[0], 0.0, epsilon = 1e-12);
        assert_eq!(lp[1], f64::NEG_INFINITY);

        let lp = log_softmax_masked(&[0.0, 3.0f64.ln()], &[true, true]).unwrap();
        assert_relative_eq!(lp[0], 0.25f64.ln(), epsilon = 1e-12);
        assert_relative_eq!(lp[1], 0.75f64.ln(), epsilon = 1e-12);

        assert!(log_softmax_masked(&[1.0, 2.0], &[false, false]).is_err());
    }

    #[test]
    fn log_softmax_normalizes_over_unmasked() {
        let lp = log_softmax_masked(&[0.3, -2.0, 1.7, 0.0], &[true, false, true, true]).unwrap();
        let total: f64 = lp
            .iter()
            .filter(|v| v.is_finite())
            .map(|v| v.exp())
            .sum();
        assert_relative_eq!(total, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn checkpoint_roundtrip_is_bit_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let net = DenseNet::new(
            3,
            &[5, 4],
            Activation::LeakyRelu { slope: LEAKY_SLOPE },
            &mut rng,
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("net.json");
        save_checkpoint(&net, &path).unwrap();
        let loaded: DenseNet = load_checkpoint(&path).unwrap();
        for (a, b) in net.layers.iter().zip(&loaded.layers) {
            assert_eq!(a.in_dim, b.in_dim);
            for (x, y) in a.weights.iter().zip(&b.weights) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
            for (x, y) in a.bias.iter().zip(&b.bias) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
    }

    #[test]
    fn seeded_init_is_deterministic() {
        let mk = || {
            let mut rng = ChaCha8Rng::seed_from_u64(9);
            DenseNet::new(4, &[8, 2], Activation::Identity, &mut rng).unwrap()
        };
        let a = mk();
        let b = mk();
        for (la, lb) in a.layers.iter().zip(&b.layers) {
            assert_eq!(la.weights, lb.weights);
        }
    }
}
