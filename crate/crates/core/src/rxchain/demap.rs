//! Joint soft demapper: per-coded-bit LLRs from the candidate likelihoods and
//! the decoder's extrinsic priors.
//!
//! The LLR of bit `m` sums the candidate likelihoods over the half of the
//! candidate set where that bit is 1 (resp. 0), each weighted by the priors of
//! the *other* bits of the label. Sums run in the log domain through a single
//! global max shift; outputs are clamped to ±50, far beyond any
//! decision-relevant magnitude.

use crate::error::{BicmError, Result};
use crate::numerics::{CMatrix, CVector};
use crate::rxchain::candidates::CandidateSet;
use crate::rxchain::metric::MetricKind;

pub const LLR_CLAMP: f64 = 50.0;

/// Statistics the demapper needs to turn a channel matrix into candidate
/// likelihoods.
#[derive(Debug, Clone, Copy)]
pub struct DemapParams {
    pub kind: MetricKind,
    pub noise_variance: f64,
    /// Posterior shrinkage `δ`; only read for the improved metric.
    pub shrinkage: f64,
    /// Estimation error variance `σ_E²`; only read for the improved metric.
    pub error_variance: f64,
}

impl DemapParams {
    fn effective(&self) -> Result<(f64, f64)> {
        match self.kind {
            MetricKind::PerfectCsi | MetricKind::Mismatched => Ok((1.0, 0.0)),
            MetricKind::Improved => {
                if !(self.shrinkage > 0.0 && self.shrinkage <= 1.0) {
                    return Err(BicmError::InvalidInput(format!(
                        "shrinkage must lie in (0,1], got {}",
                        self.shrinkage
                    )));
                }
                if self.error_variance < 0.0 {
                    return Err(BicmError::InvalidInput(
                        "error variance must be nonnegative".into(),
                    ));
                }
                Ok((self.shrinkage, self.shrinkage * self.error_variance))
            }
        }
    }
}

/// Precomputed per-candidate quantities for one subcarrier: `G s`, effective
/// variance and its log-normalisation. Building this once per frame keeps the
/// per-iteration cost at one exp per candidate.
#[derive(Debug, Clone)]
pub struct SubcarrierDemapper {
    predicted: Vec<CVector>,
    inv_eff_var: Vec<f64>,
    log_norm: Vec<f64>,
}

impl SubcarrierDemapper {
    pub fn new(cands: &CandidateSet, g: &CMatrix, params: &DemapParams) -> Result<Self> {
        if g.ncols() != cands.tx_antennas {
            return Err(BicmError::DimensionMismatch(format!(
                "channel has {} columns, candidates have {} antennas",
                g.ncols(),
                cands.tx_antennas
            )));
        }
        if params.noise_variance <= 0.0 || !params.noise_variance.is_finite() {
            return Err(BicmError::InvalidInput(format!(
                "noise variance must be positive, got {}",
                params.noise_variance
            )));
        }
        let (gain, extra) = params.effective()?;
        let mr = g.nrows() as f64;
        let mut predicted = Vec::with_capacity(cands.len());
        let mut inv_eff_var = Vec::with_capacity(cands.len());
        let mut log_norm = Vec::with_capacity(cands.len());
        for (s, &energy) in cands.symbols.iter().zip(&cands.energies) {
            let mut p = g * s;
            if gain != 1.0 {
                p *= num_complex::Complex::new(gain, 0.0);
            }
            let eff = params.noise_variance + extra * energy;
            predicted.push(p);
            inv_eff_var.push(1.0 / eff);
            log_norm.push(mr * (std::f64::consts::PI * eff).ln());
        }
        Ok(Self {
            predicted,
            inv_eff_var,
            log_norm,
        })
    }

    /// Log-likelihood (negative metric) of every candidate for observation `y`.
    pub fn candidate_logliks(&self, y: &CVector) -> Vec<f64> {
        self.predicted
            .iter()
            .zip(self.inv_eff_var.iter().zip(&self.log_norm))
            .map(|(p, (&iv, &ln))| {
                let mut residual = 0.0;
                for i in 0..y.len() {
                    residual += (y[i] - p[i]).norm_sqr();
                }
                -(ln + residual * iv)
            })
            .collect()
    }
}

/// Uniform prior pairs for `n` bits.
pub fn uniform_priors(n: usize) -> Vec<(f64, f64)> {
    vec![(0.5, 0.5); n]
}

/// LLRs for the `B·M_T` bits of one subcarrier from precomputed candidate
/// log-likelihoods and per-bit prior pairs `(P⁰, P¹)`.
pub fn demap_from_logliks(
    logliks: &[f64],
    cands: &CandidateSet,
    priors: &[(f64, f64)],
) -> Result<Vec<f64>> {
    let nbits = cands.label_bits();
    if logliks.len() != cands.len() {
        return Err(BicmError::DimensionMismatch(format!(
            "{} log-likelihoods for {} candidates",
            logliks.len(),
            cands.len()
        )));
    }
    if priors.len() != nbits {
        return Err(BicmError::DimensionMismatch(format!(
            "{} priors for {} label bits",
            priors.len(),
            nbits
        )));
    }
    // Normalised log-priors; pairs must carry some mass.
    let mut lp = Vec::with_capacity(nbits);
    for (i, &(p0, p1)) in priors.iter().enumerate() {
        if !(p0.is_finite() && p1.is_finite()) || p0 < 0.0 || p1 < 0.0 || p0 + p1 <= 0.0 {
            return Err(BicmError::DegeneratePrior(format!(
                "bit {i}: prior pair ({p0}, {p1})"
            )));
        }
        let z = p0 + p1;
        lp.push(((p0 / z).max(1e-300).ln(), (p1 / z).max(1e-300).ln()));
    }

    // total_j = loglik_j + sum of log-priors over the candidate's label
    let mut total = Vec::with_capacity(cands.len());
    let mut gmax = f64::NEG_INFINITY;
    for (j, &ll) in logliks.iter().enumerate() {
        let mut t = ll;
        for (m, pair) in lp.iter().enumerate() {
            t += if cands.bit(j, m) == 1 { pair.1 } else { pair.0 };
        }
        gmax = gmax.max(t);
        total.push(t);
    }
    if !gmax.is_finite() {
        return Err(BicmError::DegeneratePrior(
            "all candidates have zero posterior mass".into(),
        ));
    }

    let mut num = vec![0.0f64; nbits];
    let mut den = vec![0.0f64; nbits];
    for (j, &t) in total.iter().enumerate() {
        let w = (t - gmax).exp();
        for m in 0..nbits {
            if cands.bit(j, m) == 1 {
                num[m] += w;
            } else {
                den[m] += w;
            }
        }
    }

    Ok((0..nbits)
        .map(|m| {
            // remove the bit's own prior: the half-sums each carry it as a
            // constant factor
            let l = num[m].ln() - den[m].ln() - (lp[m].1 - lp[m].0);
            l.clamp(-LLR_CLAMP, LLR_CLAMP)
        })
        .collect())
}

/// One-call demapper for a single subcarrier.
pub fn demap_llrs(
    y: &CVector,
    g: &CMatrix,
    params: &DemapParams,
    cands: &CandidateSet,
    priors: &[(f64, f64)],
) -> Result<Vec<f64>> {
    let d = SubcarrierDemapper::new(cands, g, params)?;
    demap_from_logliks(&d.candidate_logliks(y), cands, priors)
}
