//! Q-function, the sign/product misclassification-indicator equivalence, and
//! numerical validators for the asymptotic point-misclassification limits.
//!
//! The closed-form probability treats the pre-head output as `Phi = Y + S`
//! where `Y = w . y_{K-1}` is Gaussian under the random final-layer row `w`
//! and `S` is an empirical shift term with one sample list per hypothesis.

use crate::bpsk::LabeledDataset;
use crate::erf::erfc;
use crate::error::Error;
use crate::fnn::{forward, FnnModel};
use crate::rng::Pcg;

/// Gaussian tail probability `Q(x) = P(N(0,1) > x)`.
///
/// Computed as `erfc(x / sqrt(2)) / 2`; NaN input panics.
pub fn q_function(x: f64) -> f64 {
    assert!(!x.is_nan(), "q_function: NaN input");
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

/// The misclassification indicator for `(label, phi)` computed two ways:
/// `via_sign = I{label != sgn(phi)}` with `sgn(0) = 0`, and
/// `via_product = I{label * phi <= 0}`. The two always agree.
pub fn lemma1_indicator(label: f64, phi: f64) -> Result<(u8, u8), Error> {
    if label != 1.0 && label != -1.0 {
        return Err(Error::InvalidLabel(label));
    }
    let sgn = if phi > 0.0 {
        1.0
    } else if phi < 0.0 {
        -1.0
    } else {
        0.0
    };
    let via_sign = u8::from(label != sgn);
    let via_product = u8::from(label * phi <= 0.0);
    Ok((via_sign, via_product))
}

/// The pieces of the point-misclassification probability: half-width `H`,
/// the initializer variance scale, the penultimate norms under each
/// hypothesis, and empirical samples of the shift term `S` under each.
#[derive(Debug, Clone)]
pub struct PeDecomposition {
    pub half_width: usize,
    pub alpha_init: f64,
    pub norm_m1: f64,
    pub norm_p1: f64,
    pub s_m1: Vec<f64>,
    pub s_p1: Vec<f64>,
}

impl PeDecomposition {
    fn validate(&self, need_positive_norms: bool) -> Result<(), Error> {
        if self.half_width == 0 {
            return Err(Error::InvalidArgument("half_width must be positive".into()));
        }
        if !(self.alpha_init == 1.0 || self.alpha_init == 2.0) {
            return Err(Error::InvalidArgument(format!(
                "alpha_init must be 1 or 2, got {}",
                self.alpha_init
            )));
        }
        for (name, v) in [("norm_m1", self.norm_m1), ("norm_p1", self.norm_p1)] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidArgument(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        if need_positive_norms && (self.norm_m1 <= 0.0 || self.norm_p1 <= 0.0) {
            return Err(Error::Precondition(
                "closed-form oracle needs strictly positive penultimate norms".into(),
            ));
        }
        if self.s_m1.is_empty() || self.s_p1.is_empty() {
            return Err(Error::Precondition("shift sample lists must be nonempty".into()));
        }
        if self.s_m1.iter().chain(&self.s_p1).any(|s| !s.is_finite()) {
            return Err(Error::NonFinite("shift samples".into()));
        }
        Ok(())
    }
}

/// Closed-form point-misclassification probability with empirical shifts:
/// `(1/2) [ mean_s Q(-s sqrt(2H/alpha) / norm_m1)
///        + mean_s Q( s sqrt(2H/alpha) / norm_p1) ]`.
pub fn closed_form_pe(d: &PeDecomposition) -> Result<f64, Error> {
    d.validate(true)?;
    let scale = (2.0 * d.half_width as f64 / d.alpha_init).sqrt();
    let term_m1 = d.s_m1.iter().map(|&s| q_function(-s * scale / d.norm_m1)).sum::<f64>()
        / d.s_m1.len() as f64;
    let term_p1 = d.s_p1.iter().map(|&s| q_function(s * scale / d.norm_p1)).sum::<f64>()
        / d.s_p1.len() as f64;
    Ok(0.5 * (term_m1 + term_p1))
}

/// Direct-simulation oracle for [`closed_form_pe`]: draw a fresh Gaussian
/// final-layer row per trial, add a shift sample, and count sign errors
/// under each hypothesis.
pub fn simulate_pe(
    d: &PeDecomposition,
    y_m1: &[f64],
    y_p1: &[f64],
    n_draws: usize,
    seed: u64,
) -> Result<f64, Error> {
    d.validate(true)?;
    if n_draws < 10_000 {
        return Err(Error::InvalidArgument(format!("n_draws must be >= 10^4, got {n_draws}")));
    }
    for (name, y, norm) in [("y_m1", y_m1, d.norm_m1), ("y_p1", y_p1, d.norm_p1)] {
        let actual = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        if (actual - norm).abs() > 1e-9 {
            return Err(Error::Precondition(format!(
                "{name} norm {actual} disagrees with declared norm {norm}"
            )));
        }
    }
    let w_std = (d.alpha_init / (2.0 * d.half_width as f64)).sqrt();
    let dim = y_m1.len().max(y_p1.len());
    let mut rng = Pcg::new(seed);
    let mut err_m1 = 0usize;
    let mut err_p1 = 0usize;
    let mut w = vec![0.0; dim];
    for _ in 0..n_draws {
        for wi in &mut w {
            *wi = w_std * rng.next_normal();
        }
        let s_m = d.s_m1[rng.next_index(d.s_m1.len())];
        let s_p = d.s_p1[rng.next_index(d.s_p1.len())];
        let phi_m: f64 = w.iter().zip(y_m1).map(|(a, b)| a * b).sum::<f64>() + s_m;
        let phi_p: f64 = w.iter().zip(y_p1).map(|(a, b)| a * b).sum::<f64>() + s_p;
        if phi_m > 0.0 {
            err_m1 += 1;
        }
        if phi_p < 0.0 {
            err_p1 += 1;
        }
    }
    Ok(0.5 * (err_m1 as f64 + err_p1 as f64) / n_draws as f64)
}

/// Degenerate case of the misclassification probability: when the
/// penultimate norm is zero for every test sample, the output is identically
/// zero, every sample counts as an error, and `P_e` is exactly 1.
pub fn zero_norm_pe(model: &FnnModel, testset: &LabeledDataset) -> Result<f64, Error> {
    if testset.samples.is_empty() {
        return Err(Error::EmptyDataset);
    }
    for sample in &testset.samples {
        let trace = forward(model, &[sample.x])?;
        if trace.penultimate_norm != 0.0 {
            return Err(Error::Precondition(format!(
                "penultimate norm {} is nonzero at x = {}",
                trace.penultimate_norm, sample.x
            )));
        }
    }
    Ok(1.0)
}
