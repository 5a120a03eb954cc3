//! Biasless feedforward networks with ReLU hidden layers and a linear or
//! tanh head.
//!
//! A network is a sequence of dense weight matrices with no bias terms.
//! Hidden layers all have width `2H`; the head maps the penultimate vector to
//! a scalar. [`forward`] materializes a full [`ForwardTrace`], including the
//! penultimate activation vector and its norm, which the limit validators
//! in [`crate::theory`] and the scatter reports consume.

use crate::error::Error;

/// Activation kinds used across the crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    ReLU,
    Tanh,
    Linear,
}

/// Head activation of the scalar output neuron.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Head {
    Linear,
    Tanh,
}

impl Head {
    pub fn activation(self) -> Activation {
        match self {
            Head::Linear => Activation::Linear,
            Head::Tanh => Activation::Tanh,
        }
    }
}

/// Network shape: `K` layers, hidden width `2H`, scalar output.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FnnArchitecture {
    /// Layer count, at least 2.
    pub depth: usize,
    /// Hidden layers have width `2 * half_width`.
    pub half_width: usize,
    /// Input dimension, 1 in all the BPSK experiments.
    pub input_dim: usize,
    pub head: Head,
}

impl FnnArchitecture {
    pub fn new(depth: usize, half_width: usize, input_dim: usize, head: Head) -> Result<Self, Error> {
        if depth < 2 {
            return Err(Error::InvalidArchitecture(format!("depth must be >= 2, got {depth}")));
        }
        if half_width < 1 {
            return Err(Error::InvalidArchitecture("half_width must be >= 1".into()));
        }
        if input_dim < 1 {
            return Err(Error::InvalidArchitecture("input_dim must be >= 1".into()));
        }
        Ok(FnnArchitecture { depth, half_width, input_dim, head })
    }

    /// Width of layer `k` for `k in 0..=depth` (layer 0 is the input).
    pub fn layer_width(&self, k: usize) -> usize {
        if k == 0 {
            self.input_dim
        } else if k == self.depth {
            1
        } else {
            2 * self.half_width
        }
    }

    /// (rows, cols) of the weight matrix feeding layer `k` for `k in 1..=depth`.
    pub fn weight_shape(&self, k: usize) -> (usize, usize) {
        (self.layer_width(k), self.layer_width(k - 1))
    }
}

/// A network: architecture plus one row-major weight matrix per layer.
/// Row `p` of `weights[k-1]` holds neuron `p`'s incoming weights.
#[derive(Debug, Clone, PartialEq)]
pub struct FnnModel {
    pub arch: FnnArchitecture,
    pub weights: Vec<Vec<Vec<f64>>>,
}

impl FnnModel {
    pub fn new(arch: FnnArchitecture, weights: Vec<Vec<Vec<f64>>>) -> Result<Self, Error> {
        if weights.len() != arch.depth {
            return Err(Error::ShapeMismatch(format!(
                "expected {} weight matrices, got {}",
                arch.depth,
                weights.len()
            )));
        }
        for (k, w) in weights.iter().enumerate() {
            let (rows, cols) = arch.weight_shape(k + 1);
            if w.len() != rows || w.iter().any(|row| row.len() != cols) {
                return Err(Error::ShapeMismatch(format!(
                    "layer {} expects {}x{}",
                    k + 1,
                    rows,
                    cols
                )));
            }
            if w.iter().flatten().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("layer {} weight", k + 1)));
            }
        }
        Ok(FnnModel { arch, weights })
    }

    /// All-zero model of the given shape.
    pub fn zeros(arch: FnnArchitecture) -> Self {
        let weights = (1..=arch.depth)
            .map(|k| {
                let (rows, cols) = arch.weight_shape(k);
                vec![vec![0.0; cols]; rows]
            })
            .collect();
        FnnModel { arch, weights }
    }
}

/// Everything recorded during one forward pass.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    /// Pre-activations `v_k` for layers `1..=K`; the last entry is the
    /// length-1 pre-head vector.
    pub pre_activations: Vec<Vec<f64>>,
    /// Activations `y_k` for layers `1..=K`; the last entry holds the output.
    pub activations: Vec<Vec<f64>>,
    /// ReLU masks for the hidden layers `1..=K-1`, entries in {0, 1}.
    pub masks: Vec<Vec<f64>>,
    /// Activation vector of layer `K-1`.
    pub penultimate: Vec<f64>,
    /// Euclidean norm of the penultimate vector.
    pub penultimate_norm: f64,
    /// Scalar network output.
    pub output: f64,
}

/// Apply an activation to a scalar.
pub fn activate(kind: Activation, v: f64) -> Result<f64, Error> {
    if !v.is_finite() {
        return Err(Error::NonFinite("activation input".into()));
    }
    Ok(match kind {
        Activation::ReLU => v.max(0.0),
        Activation::Tanh => v.tanh(),
        Activation::Linear => v,
    })
}

/// Derivative of an activation. The ReLU derivative at 0 is 1, matching the
/// `v >= 0` mask convention used by the forward pass.
pub fn activate_prime(kind: Activation, v: f64) -> Result<f64, Error> {
    if !v.is_finite() {
        return Err(Error::NonFinite("activation input".into()));
    }
    Ok(match kind {
        Activation::ReLU => {
            if v >= 0.0 {
                1.0
            } else {
                0.0
            }
        }
        Activation::Tanh => {
            let t = v.tanh();
            1.0 - t * t
        }
        Activation::Linear => 1.0,
    })
}

fn mat_vec(w: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    w.iter().map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum()).collect()
}

/// Forward pass with a full trace.
pub fn forward(model: &FnnModel, x: &[f64]) -> Result<ForwardTrace, Error> {
    if x.len() != model.arch.input_dim {
        return Err(Error::ShapeMismatch(format!(
            "input dim {} does not match model input_dim {}",
            x.len(),
            model.arch.input_dim
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("forward input".into()));
    }

    let depth = model.arch.depth;
    let mut pre_activations = Vec::with_capacity(depth);
    let mut activations = Vec::with_capacity(depth);
    let mut masks = Vec::with_capacity(depth - 1);

    let mut current = x.to_vec();
    for k in 1..depth {
        let v = mat_vec(&model.weights[k - 1], &current);
        let mask: Vec<f64> = v.iter().map(|&p| if p >= 0.0 { 1.0 } else { 0.0 }).collect();
        let y: Vec<f64> = v.iter().zip(&mask) .map(|(&p, &m)| m * p).collect();
        pre_activations.push(v);
        masks.push(mask);
        activations.push(y.clone());
        current = y;
    }

    let penultimate = current.clone();
    let penultimate_norm = penultimate.iter().map(|y| y * y).sum::<f64>().sqrt();

    let pre_head = mat_vec(&model.weights[depth - 1], &current);
    let output = activate(model.arch.head.activation(), pre_head[0])?;
    pre_activations.push(pre_head);
    activations.push(vec![output]);

    Ok(ForwardTrace {
        pre_activations,
        activations,
        masks,
        penultimate,
        penultimate_norm,
        output,
    })
}

/// Counts and magnitudes describing a model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetworkMetrics {
    /// Total neurons across all layers, input and output included.
    pub total_neurons: usize,
    /// Number of nonzero weights.
    pub connectivity: usize,
    /// Widest layer.
    pub max_width: usize,
    /// Largest absolute weight entry.
    pub max_abs_weight: f64,
}

pub fn network_metrics(model: &FnnModel) -> NetworkMetrics {
    let arch = &model.arch;
    let total_neurons = (0..=arch.depth).map(|k| arch.layer_width(k)).sum();
    let max_width = (0..=arch.depth).map(|k| arch.layer_width(k)).max().unwrap();
    let mut connectivity = 0;
    let mut max_abs_weight = 0.0_f64;
    for w in &model.weights {
        for row in w {
            for &v in row {
                if v != 0.0 {
                    connectivity += 1;
                }
                max_abs_weight = max_abs_weight.max(v.abs());
            }
        }
    }
    NetworkMetrics { total_neurons, connectivity, max_width, max_abs_weight }
}
