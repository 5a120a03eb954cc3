//! End-to-end experiment harness: deterministic training with early stopping
//! and plateau learning-rate reduction, per-SNR evaluation, and the
//! penultimate-norm scatter instrumentation.

pub mod checkpoint;
pub mod config;
pub mod reports;

use crate::bpsk::{assemble_scheme, energy_per_bit, optimal_pe, LabeledDataset, LabeledSample};
use crate::error::Error;
use crate::fnn::{forward, FnnArchitecture, FnnModel};
use crate::rng::Pcg;
use crate::theory::lemma1_indicator;
use crate::train::{
    apply_weight_constraint, backprop_batch, hinge_loss, init_model, optimizer_step, InitSpec,
    OptimizerState, Sample,
};

pub use config::{ExperimentConfig, OptimizerChoice};

/// One row of the per-epoch training log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    /// 1-based epoch index.
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    /// Fraction of validation samples with `label * phi > 0`.
    pub val_acc: f64,
    /// Learning rate in force during this epoch's updates.
    pub lr: f64,
}

/// Why training stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    EarlyStopping,
    EpochBudget,
}

impl StopReason {
    pub fn name(&self) -> &'static str {
        match self {
            StopReason::EarlyStopping => "early-stopping",
            StopReason::EpochBudget => "epoch-budget",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub epochs: Vec<EpochRecord>,
    pub stopped_at: usize,
    pub stop_reason: StopReason,
    /// (epoch, new learning rate) pairs, one per plateau reduction.
    pub lr_reductions: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SnrResult {
    pub snr_db: f64,
    pub pe: f64,
    pub optimal_pe: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub per_snr: Vec<SnrResult>,
    /// Sample-weighted mean of the per-SNR error rates.
    pub average_pe: f64,
    pub total_n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormScatterRecord {
    pub n: usize,
    pub snr_db: f64,
    pub norm: f64,
    pub label: f64,
    pub phi: f64,
    pub miscls: bool,
}

/// Improvement threshold for both patience counters.
const IMPROVEMENT_EPS: f64 = 1e-6;

/// Train a model per the config: 80/20 seeded split, per-epoch reshuffle,
/// mini-batch updates with the weight constraint after every step, early
/// stopping and plateau LR reduction on validation loss. Fully deterministic
/// given the config's seed.
pub fn train_experiment(config: &ExperimentConfig) -> Result<(FnnModel, TrainReport), Error> {
    config.validate()?;
    let arch = FnnArchitecture::new(config.depth, config.half_width, 1, config.head)?;
    let dataset = assemble_scheme(config.scheme, config.per_snr_train_n, config.seed)?;
    let (train, val) = split_dataset(&dataset.samples, config.seed)?;
    if config.batch_size > train.len() {
        return Err(Error::InvalidArgument(format!(
            "batch_size {} exceeds the {}-sample training split",
            config.batch_size,
            train.len()
        )));
    }

    let init = InitSpec { kind: config.init, seed: crate::rng::derive_seed(config.seed, &[12]) };
    let mut model = init_model(arch, &init);
    let mut optimizer = match config.optimizer {
        OptimizerChoice::Sgd => OptimizerState::sgd(config.learning_rate),
        OptimizerChoice::Momentum { momentum } => {
            OptimizerState::momentum(config.learning_rate, momentum, &arch)
        }
        OptimizerChoice::RmsProp { decay } => {
            OptimizerState::rmsprop(config.learning_rate, decay, &arch)
        }
        OptimizerChoice::Adam => OptimizerState::adam(config.learning_rate, &arch),
    };

    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut report = TrainReport {
        epochs: Vec::new(),
        stopped_at: 0,
        stop_reason: StopReason::EpochBudget,
        lr_reductions: Vec::new(),
    };
    let mut best_val = f64::INFINITY;
    let mut stop_stall = 0usize;
    let mut lr_stall = 0usize;

    for epoch in 1..=config.max_epochs {
        let mut rng = Pcg::from_stream(config.seed, &[13, epoch as u64]);
        rng.shuffle(&mut order);
        let lr = optimizer.learning_rate();
        for chunk in order.chunks(config.batch_size) {
            let batch: Vec<Sample> =
                chunk.iter().map(|&i| (std::slice::from_ref(&train[i].x), train[i].label)).collect();
            let grads = backprop_batch(&model, &batch)?;
            optimizer_step(&mut optimizer, &grads, &mut model)?;
            if let Some((cmin, cmax)) = config.constraint {
                apply_weight_constraint(&mut model, cmin, cmax);
            }
        }

        let train_loss = mean_loss(&model, &train)?;
        let (val_loss, val_acc) = loss_and_accuracy(&model, &val)?;
        if !train_loss.is_finite() || !val_loss.is_finite() {
            return Err(Error::NonFiniteLoss { epoch });
        }
        report.epochs.push(EpochRecord { epoch, train_loss, val_loss, val_acc, lr });
        report.stopped_at = epoch;

        if best_val - val_loss >= IMPROVEMENT_EPS {
            best_val = val_loss;
            stop_stall = 0;
            lr_stall = 0;
        } else {
            stop_stall += 1;
            lr_stall += 1;
        }
        if stop_stall >= config.early_stop_patience {
            report.stop_reason = StopReason::EarlyStopping;
            break;
        }
        if lr_stall >= config.lr_reduce_patience {
            let new_lr = optimizer.learning_rate() * config.lr_reduce_factor;
            optimizer.set_learning_rate(new_lr);
            report.lr_reductions.push((epoch, new_lr));
            lr_stall = 0;
        }
    }
    Ok((model, report))
}

fn split_dataset(samples: &[LabeledSample], seed: u64) -> Result<(Vec<LabeledSample>, Vec<LabeledSample>), Error> {
    if samples.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut shuffled = samples.to_vec();
    Pcg::from_stream(seed, &[11]).shuffle(&mut shuffled);
    let n_train = samples.len() * 8 / 10;
    if n_train == 0 || n_train == samples.len() {
        return Err(Error::InvalidArgument(format!(
            "{} samples cannot be split 80/20 with both sides nonempty",
            samples.len()
        )));
    }
    let val = shuffled.split_off(n_train);
    Ok((shuffled, val))
}

fn mean_loss(model: &FnnModel, samples: &[LabeledSample]) -> Result<f64, Error> {
    let mut total = 0.0;
    for s in samples {
        let phi = forward(model, &[s.x])?.output;
        total += hinge_loss(s.label, phi)?;
    }
    Ok(total / samples.len() as f64)
}

fn loss_and_accuracy(model: &FnnModel, samples: &[LabeledSample]) -> Result<(f64, f64), Error> {
    let mut total = 0.0;
    let mut correct = 0usize;
    for s in samples {
        let phi = forward(model, &[s.x])?.output;
        total += hinge_loss(s.label, phi)?;
        if lemma1_indicator(s.label, phi)?.1 == 0 {
            correct += 1;
        }
    }
    Ok((total / samples.len() as f64, correct as f64 / samples.len() as f64))
}

/// Per-SNR and overall misclassification rates with the optimal-detector
/// baseline. A zero output counts as an error.
pub fn evaluate_model(model: &FnnModel, testset: &LabeledDataset) -> Result<EvalReport, Error> {
    if testset.samples.is_empty() {
        return Err(Error::EmptyDataset);
    }
    // Group by SNR tag, preserving first-appearance order of ascending-SNR
    // test sets while tolerating arbitrary sample order.
    let mut snrs: Vec<f64> = Vec::new();
    for s in &testset.samples {
        if !snrs.contains(&s.snr_db) {
            snrs.push(s.snr_db);
        }
    }
    snrs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut errors = vec![0usize; snrs.len()];
    let mut counts = vec![0usize; snrs.len()];
    for s in &testset.samples {
        let idx = snrs.iter().position(|&v| v == s.snr_db).unwrap();
        let phi = forward(model, &[s.x])?.output;
        counts[idx] += 1;
        errors[idx] += lemma1_indicator(s.label, phi)?.1 as usize;
    }
    let per_snr: Vec<SnrResult> = snrs
        .iter()
        .zip(errors.iter().zip(&counts))
        .map(|(&snr_db, (&e, &n))| {
            Ok(SnrResult {
                snr_db,
                pe: e as f64 / n as f64,
                optimal_pe: optimal_pe(energy_per_bit(snr_db))?,
                n,
            })
        })
        .collect::<Result<_, Error>>()?;
    let total_n: usize = counts.iter().sum();
    let total_errors: usize = errors.iter().sum();
    Ok(EvalReport { per_snr, average_pe: total_errors as f64 / total_n as f64, total_n })
}

/// One record per test sample: penultimate norm, output, and error flag.
pub fn norm_scatter(model: &FnnModel, testset: &LabeledDataset) -> Result<Vec<NormScatterRecord>, Error> {
    if testset.samples.is_empty() {
        return Err(Error::EmptyDataset);
    }
    testset
        .samples
        .iter()
        .enumerate()
        .map(|(n, s)| {
            let trace = forward(model, &[s.x])?;
            Ok(NormScatterRecord {
                n,
                snr_db: s.snr_db,
                norm: trace.penultimate_norm,
                label: s.label,
                phi: trace.output,
                miscls: lemma1_indicator(s.label, trace.output)?.1 == 1,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bpsk::{test_set, Scheme};
    use crate::fnn::{FnnModel, Head};

    fn smoke_config() -> ExperimentConfig {
        let mut cfg = ExperimentConfig::defaults(Head::Linear);
        cfg.scheme = Scheme::LowSnr;
        cfg.per_snr_train_n = 500;
        cfg.max_epochs = 5;
        cfg.seed = 3;
        cfg
    }

    #[test]
    fn training_is_deterministic() {
        let cfg = smoke_config();
        let (m1, r1) = train_experiment(&cfg).unwrap();
        let (m2, r2) = train_experiment(&cfg).unwrap();
        assert_eq!(m1.weights, m2.weights);
        assert_eq!(r1, r2);
    }

    #[test]
    fn smoke_run_reduces_training_loss() {
        let mut cfg = smoke_config();
        cfg.per_snr_train_n = 2_000;
        cfg.max_epochs = 20;
        let (_, report) = train_experiment(&cfg).unwrap();
        let first = report.epochs.first().unwrap().train_loss;
        let last = report.epochs.last().unwrap().train_loss;
        assert!(last <= first, "loss went {first} -> {last}");
        let indices: Vec<usize> = report.epochs.iter().map(|e| e.epoch).collect();
        assert_eq!(indices, (1..=report.stopped_at).collect::<Vec<_>>());
    }

    #[test]
    fn oversized_batch_is_an_error() {
        let mut cfg = smoke_config();
        cfg.per_snr_train_n = 10;
        cfg.batch_size = 1_000;
        assert!(train_experiment(&cfg).is_err());
    }

    #[test]
    fn early_stopping_fires_no_earlier_than_patience_plus_one() {
        let mut cfg = smoke_config();
        cfg.early_stop_patience = 3;
        cfg.max_epochs = 50;
        // SGD at learning rate ~0 cannot improve, forcing the earliest stop.
        cfg.optimizer = OptimizerChoice::Sgd;
        cfg.learning_rate = 1e-12;
        let (_, report) = train_experiment(&cfg).unwrap();
        assert_eq!(report.stop_reason, StopReason::EarlyStopping);
        assert!(report.stopped_at >= cfg.early_stop_patience + 1, "stopped at {}", report.stopped_at);
    }

    #[test]
    fn lr_reduction_fires_on_plateau() {
        let mut cfg = smoke_config();
        cfg.early_stop_patience = 20;
        cfg.lr_reduce_patience = 4;
        cfg.lr_reduce_factor = 0.5;
        cfg.max_epochs = 12;
        cfg.optimizer = OptimizerChoice::Sgd;
        cfg.learning_rate = 1e-12;
        let (_, report) = train_experiment(&cfg).unwrap();
        assert!(!report.lr_reductions.is_empty());
        // Epoch 1 always improves on the infinite initial best, so the
        // 4-epoch plateau completes after epoch 5.
        let (epoch, lr) = report.lr_reductions[0];
        assert_eq!(epoch, 5);
        assert!((lr - 5e-13).abs() < 1e-25);
        // The epoch after a reduction trains at the reduced rate.
        assert!((report.epochs[5].lr - 5e-13).abs() < 1e-25);
    }

    #[test]
    fn constraint_keeps_row_norms_in_band() {
        let cfg = smoke_config();
        let (model, _) = train_experiment(&cfg).unwrap();
        for w in &model.weights {
            for row in w {
                let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
                if norm > 0.0 {
                    assert!((1.0 - 1e-6..=5.0 + 1e-6).contains(&norm), "norm {norm}");
                }
            }
        }
    }

    fn identity_model() -> FnnModel {
        let arch = crate::fnn::FnnArchitecture::new(2, 1, 1, Head::Linear).unwrap();
        FnnModel::new(arch, vec![vec![vec![1.0], vec![-1.0]], vec![vec![1.0, -1.0]]]).unwrap()
    }

    #[test]
    fn evaluate_zero_model_errs_everywhere() {
        let testset = test_set(100, 5).unwrap();
        let arch = crate::fnn::FnnArchitecture::new(3, 2, 1, Head::Linear).unwrap();
        let report = evaluate_model(&FnnModel::zeros(arch), &testset).unwrap();
        assert_eq!(report.per_snr.len(), 8);
        assert!(report.per_snr.iter().all(|r| r.pe == 1.0));
        assert_eq!(report.average_pe, 1.0);
    }

    #[test]
    fn evaluate_constant_positive_model_is_half() {
        // Identity first layer, head reads only the (always nonnegative)
        // ReLU(x) lane plus the ReLU(-x) lane: use weights summing them so
        // phi = |x| > 0 almost surely -> predicts +1 on everything.
        let arch = crate::fnn::FnnArchitecture::new(2, 1, 1, Head::Linear).unwrap();
        let model =
            FnnModel::new(arch, vec![vec![vec![1.0], vec![-1.0]], vec![vec![1.0, 1.0]]]).unwrap();
        let report = evaluate_model(&model, &test_set(1_000, 5).unwrap()).unwrap();
        assert_eq!(report.average_pe, 0.5);
    }

    #[test]
    fn evaluate_average_is_weighted_mean() {
        let report = evaluate_model(&identity_model(), &test_set(500, 8).unwrap()).unwrap();
        let weighted: f64 =
            report.per_snr.iter().map(|r| r.pe * r.n as f64).sum::<f64>() / report.total_n as f64;
        assert!((report.average_pe - weighted).abs() < 1e-12);
        assert!(report.per_snr.iter().all(|r| (0.0..=1.0).contains(&r.pe)));
    }

    #[test]
    fn scatter_matches_eval_and_hand_norms() {
        let model = identity_model();
        let testset = test_set(200, 9).unwrap();
        let records = norm_scatter(&model, &testset).unwrap();
        assert_eq!(records.len(), testset.samples.len());
        for (r, s) in records.iter().zip(&testset.samples) {
            assert!((r.norm - s.x.abs()).abs() < 1e-12, "identity net norm is |x|");
            assert_eq!(r.phi, s.x);
        }
        let eval = evaluate_model(&model, &testset).unwrap();
        let flag_mean =
            records.iter().filter(|r| r.miscls).count() as f64 / records.len() as f64;
        assert!((flag_mean - eval.average_pe).abs() < 1e-12);
    }
}
