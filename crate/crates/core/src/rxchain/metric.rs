//! Per-candidate decision metrics (negative log-likelihoods).
//!
//! All three metrics keep their additive constants: the estimation-aware
//! metric has a candidate-dependent normalisation `M_R ln π(σ_z² +
//! δσ_E²‖s‖²)`, so constants must survive for the metrics to be comparable.

use std::f64::consts::PI;

use crate::error::{BicmError, Result};
use crate::numerics::{CMatrix, CVector};

/// Which likelihood the receiver evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricKind {
    /// Euclidean metric with the true channel.
    PerfectCsi,
    /// Euclidean metric with the estimate substituted for the true channel.
    Mismatched,
    /// Estimation-aware metric: the perfect-CSI likelihood averaged over the
    /// posterior of the true channel given the estimate.
    Improved,
}

impl MetricKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            MetricKind::PerfectCsi => "perfect",
            MetricKind::Mismatched => "mismatched",
            MetricKind::Improved => "improved",
        }
    }
}

impl std::str::FromStr for MetricKind {
    type Err = BicmError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "perfect" | "perfect-csi" => Ok(MetricKind::PerfectCsi),
            "mismatched" => Ok(MetricKind::Mismatched),
            "improved" => Ok(MetricKind::Improved),
            other => Err(BicmError::Config(format!("unknown metric '{other}'"))),
        }
    }
}

fn gaussian_nll(
    s: &CVector,
    y: &CVector,
    g: &CMatrix,
    gain: f64,
    extra_var_per_energy: f64,
    noise_variance: f64,
) -> Result<f64> {
    let eff_var = noise_variance + extra_var_per_energy * s.norm_squared();
    if eff_var <= 0.0 || !eff_var.is_finite() {
        return Err(BicmError::Singularity(format!(
            "nonpositive effective variance {eff_var}"
        )));
    }
    let mr = y.len() as f64;
    let mut residual = 0.0;
    for i in 0..y.len() {
        let mut pred = num_complex::Complex::new(0.0, 0.0);
        for j in 0..s.len() {
            pred += g[(i, j)] * s[j];
        }
        residual += (y[i] - pred * gain).norm_sqr();
    }
    Ok(mr * (PI * eff_var).ln() + residual / eff_var)
}

/// `M_R ln πσ_z² + ‖y − H s‖²/σ_z²` with the true channel.
pub fn metric_perfect(s: &CVector, y: &CVector, h: &CMatrix, noise_variance: f64) -> f64 {
    gaussian_nll(s, y, h, 1.0, 0.0, noise_variance).expect("positive noise variance")
}

/// Perfect-CSI metric with the estimate substituted for the true channel.
pub fn metric_mismatched(s: &CVector, y: &CVector, h_hat: &CMatrix, noise_variance: f64) -> f64 {
    gaussian_nll(s, y, h_hat, 1.0, 0.0, noise_variance).expect("positive noise variance")
}

/// Estimation-aware metric
/// `M_R ln π(σ_z² + δσ_E²‖s‖²) + ‖y − δĤs‖²/(σ_z² + δσ_E²‖s‖²)`.
pub fn metric_improved(
    s: &CVector,
    y: &CVector,
    h_hat: &CMatrix,
    shrinkage: f64,
    error_variance: f64,
    noise_variance: f64,
) -> Result<f64> {
    if !(shrinkage > 0.0 && shrinkage <= 1.0) {
        return Err(BicmError::InvalidInput(format!(
            "shrinkage must lie in (0,1], got {shrinkage}"
        )));
    }
    if error_variance < 0.0 {
        return Err(BicmError::InvalidInput(format!(
            "error variance must be nonnegative, got {error_variance}"
        )));
    }
    gaussian_nll(
        s,
        y,
        h_hat,
        shrinkage,
        shrinkage * error_variance,
        noise_variance,
    )
}
