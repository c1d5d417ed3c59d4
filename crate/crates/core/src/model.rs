//! Small classifiers with hand-written backpropagation.
//!
//! Parameters are one flat vector. Each layer stores its weight matrix
//! (`out × in`, row-major) followed by its bias. With no hidden layers the
//! model is multinomial logistic regression.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{invalid_arg, Result};
use crate::math;

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Architecture {
    pub input_dim: usize,
    pub hidden: Vec<usize>,
    pub classes: usize,
}

impl Architecture {
    pub fn logistic(input_dim: usize, classes: usize) -> Self {
        Self {
            input_dim,
            hidden: Vec::new(),
            classes,
        }
    }

    pub fn mlp(input_dim: usize, hidden: usize, classes: usize) -> Self {
        Self {
            input_dim,
            hidden: vec![hidden],
            classes,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.classes < 2 || self.hidden.iter().any(|&h| h == 0) {
            return Err(invalid_arg!(
                "architecture needs input_dim >= 1, classes >= 2 and non-zero hidden widths"
            ));
        }
        Ok(())
    }

    /// `(in, out)` per layer.
    pub fn layers(&self) -> Vec<(usize, usize)> {
        let mut dims = Vec::with_capacity(self.hidden.len() + 2);
        dims.push(self.input_dim);
        dims.extend_from_slice(&self.hidden);
        dims.push(self.classes);
        dims.windows(2).map(|w| (w[0], w[1])).collect()
    }

    pub fn param_count(&self) -> usize {
        self.layers().iter().map(|&(i, o)| o * i + o).sum()
    }
}

/// Scratch space for one forward/backward pass.
#[derive(Debug, Clone)]
pub struct Workspace {
    layers: Vec<(usize, usize)>,
    activations: Vec<Vec<f64>>,
    deltas: Vec<Vec<f64>>,
}

impl Workspace {
    pub fn new(arch: &Architecture) -> Self {
        let layers = arch.layers();
        let activations = layers.iter().map(|&(_, o)| vec![0.0; o]).collect();
        let deltas = layers.iter().map(|&(_, o)| vec![0.0; o]).collect();
        Self {
            layers,
            activations,
            deltas,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ModelParams {
    arch: Architecture,
    theta: Vec<f64>,
}

impl ModelParams {
    pub fn zeros(arch: Architecture) -> Result<Self> {
        arch.validate()?;
        let theta = vec![0.0; arch.param_count()];
        Ok(Self { arch, theta })
    }

    pub fn from_vec(arch: Architecture, theta: Vec<f64>) -> Result<Self> {
        arch.validate()?;
        if theta.len() != arch.param_count() {
            return Err(invalid_arg!(
                "expected {} parameters, got {}",
                arch.param_count(),
                theta.len()
            ));
        }
        if theta.iter().any(|v| !v.is_finite()) {
            return Err(invalid_arg!("parameters must be finite"));
        }
        Ok(Self { arch, theta })
    }

    /// He-uniform hidden layers, zero output layer.
    pub fn init<R: Rng + ?Sized>(arch: Architecture, rng: &mut R) -> Result<Self> {
        let mut params = Self::zeros(arch)?;
        let layers = params.arch.layers();
        let mut offset = 0;
        for (l, &(inp, out)) in layers.iter().enumerate() {
            if l + 1 < layers.len() {
                let bound = math::sqrt(6.0 / inp as f64);
                for w in &mut params.theta[offset..offset + out * inp] {
                    *w = rng.random_range(-bound..bound);
                }
            }
            offset += out * inp + out;
        }
        Ok(params)
    }

    pub fn architecture(&self) -> &Architecture {
        &self.arch
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.theta
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.theta
    }

    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.arch.input_dim {
            return Err(invalid_arg!(
                "example has {} features, model expects {}",
                x.len(),
                self.arch.input_dim
            ));
        }
        Ok(())
    }

    fn forward(&self, x: &[f64], ws: &mut Workspace) {
        let mut offset = 0;
        let last = ws.layers.len() - 1;
        for l in 0..ws.layers.len() {
            let (inp, out) = ws.layers[l];
            let (before, rest) = ws.activations.split_at_mut(l);
            let input: &[f64] = if l == 0 { x } else { &before[l - 1] };
            let z = &mut rest[0];
            let w = &self.theta[offset..offset + out * inp];
            let b = &self.theta[offset + out * inp..offset + out * inp + out];
            for o in 0..out {
                let row = &w[o * inp..(o + 1) * inp];
                let mut acc = b[o];
                for (wi, xi) in row.iter().zip(input) {
                    acc += wi * xi;
                }
                z[o] = if l < last && acc < 0.0 { 0.0 } else { acc };
            }
            offset += out * inp + out;
        }
    }

    /// Class scores before the softmax.
    pub fn logits(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        let mut ws = Workspace::new(&self.arch);
        self.forward(x, &mut ws);
        Ok(ws.activations.pop().unwrap_or_default())
    }

    pub fn probabilities(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut p = self.logits(x)?;
        softmax_in_place(&mut p);
        Ok(p)
    }

    /// Cross-entropy of one example.
    pub fn loss(&self, x: &[f64], label: usize) -> Result<f64> {
        let z = self.logits(x)?;
        if label >= z.len() {
            return Err(invalid_arg!("label {label} out of range"));
        }
        Ok(log_sum_exp(&z) - z[label])
    }

    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        Ok(argmax(&self.logits(x)?))
    }

    /// Gradient of the cross-entropy at `(x, label)` written into `grad`.
    /// Returns the loss.
    pub fn example_gradient(
        &self,
        x: &[f64],
        label: usize,
        ws: &mut Workspace,
        grad: &mut [f64],
    ) -> Result<f64> {
        self.check_input(x)?;
        if label >= self.arch.classes {
            return Err(invalid_arg!("label {label} out of range"));
        }
        if grad.len() != self.theta.len() {
            return Err(invalid_arg!("gradient buffer has wrong length"));
        }
        self.forward(x, ws);
        let n_layers = ws.layers.len();
        let last = n_layers - 1;

        let logits = &ws.activations[last];
        let lse = log_sum_exp(logits);
        let loss = lse - logits[label];
        for (d, z) in ws.deltas[last].iter_mut().zip(logits) {
            *d = math::exp(z - lse);
        }
        ws.deltas[last][label] -= 1.0;

        let mut end = self.theta.len();
        for l in (0..n_layers).rev() {
            let (inp, out) = ws.layers[l];
            let start = end - (out * inp + out);
            let input: &[f64] = if l == 0 { x } else { &ws.activations[l - 1] };
            let delta = &ws.deltas[l];
            let (gw, gb) = grad[start..end].split_at_mut(out * inp);
            for o in 0..out {
                let d = delta[o];
                gb[o] = d;
                for (g, xi) in gw[o * inp..(o + 1) * inp].iter_mut().zip(input) {
                    *g = d * xi;
                }
            }
            if l > 0 {
                let w = &self.theta[start..start + out * inp];
                let (lower, upper) = ws.deltas.split_at_mut(l);
                let prev = &mut lower[l - 1];
                let delta = &upper[0];
                let act = &ws.activations[l - 1];
                for (i, p) in prev.iter_mut().enumerate() {
                    if act[i] > 0.0 {
                        let mut acc = 0.0;
                        for o in 0..out {
                            acc += w[o * inp + i] * delta[o];
                        }
                        *p = acc;
                    } else {
                        *p = 0.0;
                    }
                }
            }
            end = start;
        }
        Ok(loss)
    }

    /// One gradient per example. `features` is row-major, one row per label.
    pub fn per_example_gradients(&self, features: &[f64], labels: &[usize]) -> Result<Vec<Vec<f64>>> {
        let d = self.arch.input_dim;
        if labels.is_empty() {
            return Err(invalid_arg!("batch is empty"));
        }
        if features.len() != labels.len() * d {
            return Err(invalid_arg!(
                "{} feature values for {} examples of dimension {d}",
                features.len(),
                labels.len()
            ));
        }
        let mut ws = Workspace::new(&self.arch);
        labels
            .iter()
            .enumerate()
            .map(|(i, &y)| {
                let mut g = vec![0.0; self.theta.len()];
                self.example_gradient(&features[i * d..(i + 1) * d], y, &mut ws, &mut g)?;
                Ok(g)
            })
            .collect()
    }
}

pub(crate) fn log_sum_exp(z: &[f64]) -> f64 {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let s: f64 = z.iter().map(|v| math::exp(v - m)).sum();
    m + math::ln(s)
}

pub(crate) fn softmax_in_place(z: &mut [f64]) {
    let lse = log_sum_exp(z);
    for v in z.iter_mut() {
        *v = math::exp(*v - lse);
    }
}

/// Index of the largest value; the first one on ties.
pub(crate) fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_model(arch: Architecture, seed: u64) -> ModelParams {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = arch.param_count();
        let theta = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        ModelParams::from_vec(arch, theta).unwrap()
    }

    #[test]
    fn param_counts() {
        assert_eq!(Architecture::logistic(20, 5).param_count(), 105);
        assert_eq!(Architecture::mlp(784, 64, 10).param_count(), 784 * 64 + 64 + 64 * 10 + 10);
        assert!(ModelParams::zeros(Architecture::logistic(0, 5)).is_err());
        assert!(ModelParams::zeros(Architecture::logistic(3, 1)).is_err());
    }

    #[test]
    fn logistic_gradient_closed_form() {
        let arch = Architecture::logistic(3, 2);
        // zero weights put every example on the boundary: softmax = (1/2, 1/2)
        let m = ModelParams::zeros(arch).unwrap();
        let x = [0.2, -1.0, 3.0];
        let g = &m.per_example_gradients(&x, &[1]).unwrap()[0];
        let r = [0.5, -0.5];
        for o in 0..2 {
            for i in 0..3 {
                assert!((g[o * 3 + i] - r[o] * x[i]).abs() < 1e-15);
            }
            assert!((g[6 + o] - r[o]).abs() < 1e-15);
        }
        assert!((m.loss(&x, 1).unwrap() - core::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn confident_correct_prediction_has_tiny_gradient() {
        let arch = Architecture::logistic(1, 2);
        let m = ModelParams::from_vec(arch, vec![0.0, 0.0, -40.0, 40.0]).unwrap();
        let g = &m.per_example_gradients(&[1.0], &[1]).unwrap()[0];
        assert!(g.iter().all(|v| v.abs() < 1e-30));
    }

    #[test]
    fn duplicated_examples_share_gradients() {
        let m = random_model(Architecture::mlp(4, 5, 3), 3);
        let x = [0.1, 0.7, -0.3, 0.9];
        let batch: Vec<f64> = x.iter().chain(x.iter()).copied().collect();
        let g = m.per_example_gradients(&batch, &[2, 2]).unwrap();
        assert_eq!(g[0], g[1]);
    }

    #[test]
    fn dimension_errors() {
        let m = ModelParams::zeros(Architecture::logistic(3, 2)).unwrap();
        assert!(m.per_example_gradients(&[1.0, 2.0], &[0]).is_err());
        assert!(m.per_example_gradients(&[], &[]).is_err());
        assert!(m.per_example_gradients(&[1.0, 2.0, 3.0], &[2]).is_err());
        assert!(m.logits(&[1.0]).is_err());
    }

    #[test]
    fn init_is_seeded_and_zeroes_output_layer() {
        let arch = Architecture::mlp(5, 4, 3);
        let a = ModelParams::init(arch.clone(), &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let b = ModelParams::init(arch, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(a, b);
        assert!(a.as_slice()[..20].iter().any(|v| *v != 0.0));
        assert!(a.as_slice()[24..].iter().all(|v| *v == 0.0));
    }

    #[test]
    fn softmax_sums_to_one() {
        let m = random_model(Architecture::mlp(3, 6, 4), 9);
        let p = m.probabilities(&[0.3, 0.1, 0.8]).unwrap();
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(argmax(&[1.0, 3.0, 3.0]), 1);
    }
}
