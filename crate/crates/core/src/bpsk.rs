//! BPSK-over-AWGN sample generation, the three SNR training schemes, and
//! the optimal maximum-likelihood threshold detector.
//!
//! The noise power spectral density is fixed at `N_0 = 1`, so the SNR per
//! bit equals the energy per bit and a sample is `x = label * sqrt(E_b) + z`
//! with `z ~ N(0, 1/2)`.

use crate::error::Error;
use crate::rng::Pcg;
use crate::theory::q_function;

/// SNR grid of the experiments, in dB.
pub const SNR_GRID_DB: [f64; 8] = [0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0, 35.0];

/// One received baseband sample with its label and SNR tag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabeledSample {
    pub x: f64,
    /// -1.0 or +1.0.
    pub label: f64,
    pub snr_db: f64,
}

/// How a dataset was built, kept for reproducibility.
#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    pub scheme: Option<Scheme>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub samples: Vec<LabeledSample>,
    pub provenance: Provenance,
}

/// The three training schemes: which SNR blocks the training set combines.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    /// One block per SNR in the full 0..=35 dB grid.
    AllSnr,
    /// Two independent blocks per SNR in {20, 25, 30, 35} dB.
    HighSnr,
    /// Two independent blocks per SNR in {0, 5, 10, 15} dB.
    LowSnr,
}

impl Scheme {
    pub fn parse(s: &str) -> Result<Self, Error> {
        match s.to_ascii_lowercase().as_str() {
            "all" | "all-snr" | "allsnr" => Ok(Scheme::AllSnr),
            "high" | "high-snr" | "highsnr" => Ok(Scheme::HighSnr),
            "low" | "low-snr" | "lowsnr" => Ok(Scheme::LowSnr),
            other => Err(Error::InvalidArgument(format!("unknown scheme '{other}'"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Scheme::AllSnr => "all-snr",
            Scheme::HighSnr => "high-snr",
            Scheme::LowSnr => "low-snr",
        }
    }

    fn id(&self) -> u64 {
        match self {
            Scheme::AllSnr => 0,
            Scheme::HighSnr => 1,
            Scheme::LowSnr => 2,
        }
    }

    /// (snr list, replicas per snr); replicas keep the three schemes the
    /// same total size at equal per-SNR block size.
    fn blocks(&self) -> (&'static [f64], usize) {
        match self {
            Scheme::AllSnr => (&SNR_GRID_DB, 1),
            Scheme::HighSnr => (&SNR_GRID_DB[4..], 2),
            Scheme::LowSnr => (&SNR_GRID_DB[..4], 2),
        }
    }
}

/// Energy per bit for an SNR in dB (with `N_0 = 1`).
pub fn energy_per_bit(snr_db: f64) -> f64 {
    10f64.powf(snr_db / 10.0)
}

/// Generate `n` samples at one SNR: exactly `n/2` per label, interleaved by
/// a seeded shuffle.
pub fn generate_samples(snr_db: f64, n: usize, seed: u64) -> Result<LabeledDataset, Error> {
    if n == 0 || n % 2 != 0 {
        return Err(Error::InvalidArgument(format!("sample count must be even and positive, got {n}")));
    }
    let amplitude = energy_per_bit(snr_db).sqrt();
    let noise_std = (0.5f64).sqrt();
    let mut rng = Pcg::new(seed);
    let mut samples = Vec::with_capacity(n);
    for i in 0..n {
        let label = if i < n / 2 { 1.0 } else { -1.0 };
        let x = label * amplitude + noise_std * rng.next_normal();
        samples.push(LabeledSample { x, label, snr_db });
    }
    rng.shuffle(&mut samples);
    Ok(LabeledDataset { samples, provenance: Provenance { scheme: None, seed } })
}

/// Build a training set for one scheme: `per_snr_n` samples per
/// (SNR, replica) block, concatenated then shuffled. Block seeds derive
/// from `(seed, scheme, snr index, replica)`.
pub fn assemble_scheme(scheme: Scheme, per_snr_n: usize, seed: u64) -> Result<LabeledDataset, Error> {
    if per_snr_n == 0 || per_snr_n % 2 != 0 {
        return Err(Error::InvalidArgument(format!(
            "per-SNR sample count must be even and positive, got {per_snr_n}"
        )));
    }
    let (snrs, replicas) = scheme.blocks();
    let mut samples = Vec::with_capacity(snrs.len() * replicas * per_snr_n);
    for (snr_idx, &snr_db) in snrs.iter().enumerate() {
        for replica in 0..replicas {
            let block_seed =
                crate::rng::derive_seed(seed, &[scheme.id(), snr_idx as u64, replica as u64]);
            samples.extend(generate_samples(snr_db, per_snr_n, block_seed)?.samples);
        }
    }
    let mut rng = Pcg::from_stream(seed, &[scheme.id(), u64::MAX]);
    rng.shuffle(&mut samples);
    Ok(LabeledDataset { samples, provenance: Provenance { scheme: Some(scheme), seed } })
}

/// Build a per-SNR-balanced test set over the full grid.
pub fn test_set(per_snr_n: usize, seed: u64) -> Result<LabeledDataset, Error> {
    let mut samples = Vec::with_capacity(SNR_GRID_DB.len() * per_snr_n);
    for (snr_idx, &snr_db) in SNR_GRID_DB.iter().enumerate() {
        let block_seed = crate::rng::derive_seed(seed, &[3, snr_idx as u64, 0]);
        samples.extend(generate_samples(snr_db, per_snr_n, block_seed)?.samples);
    }
    Ok(LabeledDataset { samples, provenance: Provenance { scheme: None, seed } })
}

/// Optimal threshold detector: +1 for `x > 0`, else -1 (ties break low).
pub fn optimal_detect(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// Bit-error probability of the optimal detector, `Q(sqrt(2 * gamma_b))`
/// for a linear-scale SNR per bit.
pub fn optimal_pe(gamma_b: f64) -> Result<f64, Error> {
    if !(gamma_b > 0.0) {
        return Err(Error::InvalidArgument(format!("gamma_b must be positive, got {gamma_b}")));
    }
    Ok(q_function((2.0 * gamma_b).sqrt()))
}
