//! Hinge-loss training: backpropagation, a finite-difference gradient
//! oracle, Gaussian initializers, the four optimizers, and the min-max
//! row-norm constraint.
//!
//! Gradient sign convention: [`GradientSet`] stores the partial derivatives
//! of the mean batch hinge loss w.r.t. each weight, so every optimizer
//! subtracts a scaled gradient.

use crate::error::Error;
use crate::fnn::{activate_prime, forward, FnnArchitecture, FnnModel, Head};
use crate::rng::Pcg;

/// Hinge loss `max(0, 1 - t*y)` for a label `t` in {-1, +1}.
pub fn hinge_loss(label: f64, y: f64) -> Result<f64, Error> {
    check_label(label)?;
    if !y.is_finite() {
        return Err(Error::NonFinite("hinge loss prediction".into()));
    }
    Ok((1.0 - label * y).max(0.0))
}

pub(crate) fn check_label(label: f64) -> Result<(), Error> {
    if label != 1.0 && label != -1.0 {
        return Err(Error::InvalidLabel(label));
    }
    Ok(())
}

/// Per-layer gradients of the mean batch hinge loss.
#[derive(Debug, Clone)]
pub struct GradientSet {
    pub grads: Vec<Vec<Vec<f64>>>,
    pub batch_size: usize,
    pub mean_loss: f64,
}

/// One training sample: input vector and a label in {-1, +1}.
pub type Sample<'a> = (&'a [f64], f64);

/// Backpropagate one mini-batch through the network.
///
/// The scalar margin is `f = label * output`; samples with `1 - f <= 0`
/// contribute nothing (the hinge subgradient is taken as zero at the kink).
/// Hidden-layer local gradients follow the backward recursion
/// `delta_k[p] = relu'(v_k[p]) * sum_q delta_{k+1}[q] * W_{k+1}[q][p]`.
pub fn backprop_batch(model: &FnnModel, batch: &[Sample<'_>]) -> Result<GradientSet, Error> {
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let depth = model.arch.depth;
    let mut grads: Vec<Vec<Vec<f64>>> = (1..=depth)
        .map(|k| {
            let (rows, cols) = model.arch.weight_shape(k);
            vec![vec![0.0; cols]; rows]
        })
        .collect();
    let mut loss_sum = 0.0;

    for &(x, label) in batch {
        check_label(label)?;
        let trace = forward(model, x)?;
        let margin = label * trace.output;
        loss_sum += (1.0 - margin).max(0.0);
        if 1.0 - margin <= 0.0 {
            continue;
        }

        // Head local gradient, then walk the hidden layers backward.
        let pre_head = trace.pre_activations[depth - 1][0];
        let head_delta = label * activate_prime(model.arch.head.activation(), pre_head)?;
        let mut delta = vec![head_delta];
        for k in (1..=depth).rev() {
            let below: &[f64] = if k == 1 { x } else { &trace.activations[k - 2] };
            for (p, &dp) in delta.iter().enumerate() {
                for (q, &yq) in below.iter().enumerate() {
                    grads[k - 1][p][q] -= dp * yq;
                }
            }
            if k == 1 {
                break;
            }
            let w = &model.weights[k - 1];
            let v_below = &trace.pre_activations[k - 2];
            delta = (0..v_below.len())
                .map(|p| {
                    let phi_prime = if v_below[p] >= 0.0 { 1.0 } else { 0.0 };
                    phi_prime * delta.iter().zip(w).map(|(dq, row)| dq * row[p]).sum::<f64>()
                })
                .collect();
        }
    }

    let b = batch.len() as f64;
    for layer in &mut grads {
        for row in layer {
            for g in row {
                *g /= b;
            }
        }
    }
    Ok(GradientSet { grads, batch_size: batch.len(), mean_loss: loss_sum / b })
}

/// Mean batch hinge loss, used by the finite-difference oracle.
pub fn batch_loss(model: &FnnModel, batch: &[Sample<'_>]) -> Result<f64, Error> {
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let mut sum = 0.0;
    for &(x, label) in batch {
        let trace = forward(model, x)?;
        sum += hinge_loss(label, trace.output)?;
    }
    Ok(sum / batch.len() as f64)
}

/// Central-difference gradients of the mean batch hinge loss, independent of
/// the backpropagation path.
pub fn finite_diff_gradients(
    model: &FnnModel,
    batch: &[Sample<'_>],
    h: f64,
) -> Result<GradientSet, Error> {
    if h <= 0.0 {
        return Err(Error::InvalidArgument(format!("step h must be positive, got {h}")));
    }
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let mut probe = model.clone();
    let mut grads = Vec::with_capacity(model.arch.depth);
    for k in 0..model.arch.depth {
        let (rows, cols) = model.arch.weight_shape(k + 1);
        let mut layer = vec![vec![0.0; cols]; rows];
        for p in 0..rows {
            for q in 0..cols {
                let w0 = model.weights[k][p][q];
                probe.weights[k][p][q] = w0 + h;
                let plus = batch_loss(&probe, batch)?;
                probe.weights[k][p][q] = w0 - h;
                let minus = batch_loss(&probe, batch)?;
                probe.weights[k][p][q] = w0;
                layer[p][q] = (plus - minus) / (2.0 * h);
            }
        }
        grads.push(layer);
    }
    let mean_loss = batch_loss(model, batch)?;
    Ok(GradientSet { grads, batch_size: batch.len(), mean_loss })
}

/// Gaussian weight initializers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitKind {
    /// Variance 2 / fan-in.
    HeNormal,
    /// Variance 1 / fan-in.
    LecunNormal,
}

impl InitKind {
    /// Numerator of the variance scale.
    pub fn variance_scale(self) -> f64 {
        match self {
            InitKind::HeNormal => 2.0,
            InitKind::LecunNormal => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct InitSpec {
    pub kind: InitKind,
    pub seed: u64,
}

/// Draw a fresh model; each layer uses its own derived stream so the result
/// is fully determined by `(arch, spec.seed)`.
pub fn init_model(arch: FnnArchitecture, spec: &InitSpec) -> FnnModel {
    let scale = spec.kind.variance_scale();
    let weights = (1..=arch.depth)
        .map(|k| {
            let (rows, cols) = arch.weight_shape(k);
            let std = (scale / cols as f64).sqrt();
            let mut rng = Pcg::from_stream(spec.seed, &[k as u64]);
            (0..rows)
                .map(|_| (0..cols).map(|_| std * rng.next_normal()).collect())
                .collect()
        })
        .collect();
    FnnModel { arch, weights }
}

fn zero_buffers(arch: &FnnArchitecture) -> Vec<Vec<Vec<f64>>> {
    (1..=arch.depth)
        .map(|k| {
            let (rows, cols) = arch.weight_shape(k);
            vec![vec![0.0; cols]; rows]
        })
        .collect()
}

/// Optimizer variant plus its mutable buffers.
#[derive(Debug, Clone)]
pub enum OptimizerState {
    Sgd {
        learning_rate: f64,
    },
    Momentum {
        learning_rate: f64,
        momentum: f64,
        velocities: Vec<Vec<Vec<f64>>>,
    },
    RmsProp {
        learning_rate: f64,
        decay: f64,
        stabilizer: f64,
        accumulators: Vec<Vec<Vec<f64>>>,
    },
    Adam {
        learning_rate: f64,
        decay1: f64,
        decay2: f64,
        stabilizer: f64,
        first_moment: Vec<Vec<Vec<f64>>>,
        second_moment: Vec<Vec<Vec<f64>>>,
        step: u64,
    },
}

impl OptimizerState {
    pub fn sgd(learning_rate: f64) -> Self {
        OptimizerState::Sgd { learning_rate }
    }

    pub fn momentum(learning_rate: f64, momentum: f64, arch: &FnnArchitecture) -> Self {
        OptimizerState::Momentum { learning_rate, momentum, velocities: zero_buffers(arch) }
    }

    /// RMSProp with the conventional stabilizer 1e-6.
    pub fn rmsprop(learning_rate: f64, decay: f64, arch: &FnnArchitecture) -> Self {
        OptimizerState::RmsProp {
            learning_rate,
            decay,
            stabilizer: 1e-6,
            accumulators: zero_buffers(arch),
        }
    }

    /// Adam with the conventional decays (0.9, 0.999) and stabilizer 1e-8.
    pub fn adam(learning_rate: f64, arch: &FnnArchitecture) -> Self {
        OptimizerState::Adam {
            learning_rate,
            decay1: 0.9,
            decay2: 0.999,
            stabilizer: 1e-8,
            first_moment: zero_buffers(arch),
            second_moment: zero_buffers(arch),
            step: 0,
        }
    }

    pub fn learning_rate(&self) -> f64 {
        match self {
            OptimizerState::Sgd { learning_rate }
            | OptimizerState::Momentum { learning_rate, .. }
            | OptimizerState::RmsProp { learning_rate, .. }
            | OptimizerState::Adam { learning_rate, .. } => *learning_rate,
        }
    }

    pub fn set_learning_rate(&mut self, lr: f64) {
        match self {
            OptimizerState::Sgd { learning_rate }
            | OptimizerState::Momentum { learning_rate, .. }
            | OptimizerState::RmsProp { learning_rate, .. }
            | OptimizerState::Adam { learning_rate, .. } => *learning_rate = lr,
        }
    }
}

fn check_grads(model: &FnnModel, grads: &GradientSet) -> Result<(), Error> {
    if grads.grads.len() != model.weights.len() {
        return Err(Error::ShapeMismatch("gradient layer count".into()));
    }
    for (k, (g, w)) in grads.grads.iter().zip(&model.weights).enumerate() {
        if g.len() != w.len() || g.iter().zip(w).any(|(gr, wr)| gr.len() != wr.len()) {
            return Err(Error::ShapeMismatch(format!("gradient layer {}", k + 1)));
        }
        if g.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("gradient layer {}", k + 1)));
        }
    }
    Ok(())
}

/// Apply one optimizer update in place.
pub fn optimizer_step(
    state: &mut OptimizerState,
    grads: &GradientSet,
    model: &mut FnnModel,
) -> Result<(), Error> {
    check_grads(model, grads)?;
    match state {
        OptimizerState::Sgd { learning_rate } => {
            for (w, g) in model.weights.iter_mut().zip(&grads.grads) {
                for (wr, gr) in w.iter_mut().zip(g) {
                    for (wv, gv) in wr.iter_mut().zip(gr) {
                        *wv -= *learning_rate * gv;
                    }
                }
            }
        }
        OptimizerState::Momentum { learning_rate, momentum, velocities } => {
            for ((w, g), v) in model.weights.iter_mut().zip(&grads.grads).zip(velocities) {
                for ((wr, gr), vr) in w.iter_mut().zip(g).zip(v) {
                    for ((wv, gv), vv) in wr.iter_mut().zip(gr).zip(vr) {
                        *vv = *momentum * *vv - *learning_rate * gv;
                        *wv += *vv;
                    }
                }
            }
        }
        OptimizerState::RmsProp { learning_rate, decay, stabilizer, accumulators } => {
            for ((w, g), r) in model.weights.iter_mut().zip(&grads.grads).zip(accumulators) {
                for ((wr, gr), rr) in w.iter_mut().zip(g).zip(r) {
                    for ((wv, gv), rv) in wr.iter_mut().zip(gr).zip(rr) {
                        *rv = *decay * *rv + (1.0 - *decay) * gv * gv;
                        *wv -= *learning_rate * gv / (*stabilizer + *rv).sqrt();
                    }
                }
            }
        }
        OptimizerState::Adam {
            learning_rate,
            decay1,
            decay2,
            stabilizer,
            first_moment,
            second_moment,
            step,
        } => {
            let t = *step + 1;
            let c1 = 1.0 - decay1.powi(t as i32);
            let c2 = 1.0 - decay2.powi(t as i32);
            for (((w, g), s), r) in model
                .weights
                .iter_mut()
                .zip(&grads.grads)
                .zip(first_moment)
                .zip(second_moment)
            {
                for (((wr, gr), sr), rr) in w.iter_mut().zip(g).zip(s).zip(r) {
                    for (((wv, gv), sv), rv) in wr.iter_mut().zip(gr).zip(sr).zip(rr) {
                        *sv = *decay1 * *sv + (1.0 - *decay1) * gv;
                        *rv = *decay2 * *rv + (1.0 - *decay2) * gv * gv;
                        let s_hat = *sv / c1;
                        let r_hat = *rv / c2;
                        *wv -= *learning_rate * s_hat / (r_hat.sqrt() + *stabilizer);
                    }
                }
            }
            *step = t;
        }
    }
    Ok(())
}

/// Randomized backprop-vs-finite-difference comparison. Returns the max
/// relative error outside subgradient kink windows and the coordinate count.
pub fn gradient_check(trials: usize) -> Result<(f64, usize), Error> {
    let mut rng = Pcg::new(0xC0FFEE);
    let mut max_err = 0.0f64;
    let mut checked = 0usize;
    for trial in 0..trials {
        let depth = 2 + rng.next_index(5); // K in [2,6]
        let half_width = 1 + rng.next_index(8); // H in [1,8]
        let head = if rng.next_index(2) == 0 { Head::Linear } else { Head::Tanh };
        let arch = FnnArchitecture::new(depth, half_width, 1, head)?;
        let kind = if rng.next_index(2) == 0 { InitKind::HeNormal } else { InitKind::LecunNormal };
        let model = init_model(arch, &InitSpec { kind, seed: trial as u64 });
        let batch_len = 1 + rng.next_index(8);
        let xs: Vec<[f64; 1]> = (0..batch_len).map(|_| [2.0 * rng.next_normal()]).collect();
        let labels: Vec<f64> =
            (0..batch_len).map(|_| if rng.next_index(2) == 0 { 1.0 } else { -1.0 }).collect();
        let batch: Vec<Sample> =
            xs.iter().zip(&labels).map(|(x, &label)| (&x[..], label)).collect();

        // Kink windows: skip coordinates whose analytic/numeric comparison
        // straddles a hinge or ReLU non-differentiability.
        let mut kinky = false;
        for (x, &label) in xs.iter().zip(&labels) {
            let trace = forward(&model, &x[..])?;
            if (1.0 - label * trace.output).abs() < 1e-6 {
                kinky = true;
            }
            for v in trace.pre_activations.iter().flatten() {
                if v.abs() < 1e-6 {
                    kinky = true;
                }
            }
        }
        if kinky {
            continue;
        }

        let exact = backprop_batch(&model, &batch)?;
        let fd = finite_diff_gradients(&model, &batch, 1e-5)?;
        // Floor the denominator at 1e-4 of the gradient's own scale:
        // coordinates that many orders below it (e.g. under a saturated
        // tanh head) sit at the central-difference cancellation noise
        // floor and carry no relative-accuracy information.
        let gmax = exact.grads.iter().flatten().flatten().fold(0.0f64, |a, g| a.max(g.abs()));
        for (ge, gf) in exact
            .grads
            .iter()
            .flatten()
            .flatten()
            .zip(fd.grads.iter().flatten().flatten())
        {
            let denom = ge.abs().max(gf.abs()).max(1e-4 * gmax).max(1e-8);
            max_err = max_err.max((ge - gf).abs() / denom);
            checked += 1;
        }
    }
    Ok((max_err, checked))
}

/// Rescale every row of every weight matrix so its Euclidean norm lies in
/// `[cmin, cmax]`: `w <- w * clip(|w|, cmin, cmax) / (eps + |w|)`.
pub fn apply_weight_constraint(model: &mut FnnModel, cmin: f64, cmax: f64) {
    const EPS: f64 = 1e-7;
    debug_assert!(0.0 < cmin && cmin <= cmax);
    for w in &mut model.weights {
        for row in w.iter_mut() {
            let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            // In-band (and zero) rows stay untouched; this keeps the
            // projection exactly idempotent despite the EPS denominator.
            if norm == 0.0 || (cmin..=cmax).contains(&norm) {
                continue;
            }
            let target = norm.clamp(cmin, cmax);
            let scale = target / (EPS + norm);
            for v in row.iter_mut() {
                *v *= scale;
            }
        }
    }
}
