//! Instantaneous achievable rates of the three decoders and Monte Carlo
//! outage / expected-outage rates.
//!
//! For each subcarrier the true channel is factorised as `H = U Λ V^H` and the
//! estimate is rotated into that basis, `h̃ = diag(V^H Ĥ^H U)` (zero-padded to
//! `M_R` entries). The rate of a decoder is evaluated on a diagonal auxiliary
//! channel `μ` through
//!
//! `R(μ) = Σ_i log2(1 + P̄|μ_i|² / σ²(μ))`,  `σ²(μ) = (P̄/M_T)(‖Λ‖² − ‖μ‖²) + σ_z²`,
//!
//! at the constrained optimiser of the underlying auxiliary-channel
//! minimisation:
//!
//! * estimation-aware decoder: `μ = (√b/‖h̃‖ − |a|) h̃` when `b ≥ 0`, else `0`,
//!   with `b = ‖H + aĤ‖² − a²(‖Ĥ‖² − ‖h̃‖²)`; the constraint
//!   `‖μ + a h̃‖² ≤ b` is met with equality,
//! * mismatched decoder: `μ = Re{Tr(Λ^H h̃)}/‖h̃‖² · h̃`,
//! * theoretical decoder: `Σ_i log2(1 + P̄λ_i²/σ_z²)` on the true channel.
//!
//! Since `‖μ‖ ≤ ‖Λ‖` holds for both closed forms, `σ²(μ) ≥ σ_z²` and the
//! pipeline cannot hit the singular region; only caller-supplied `μ` can.

use rayon::prelude::*;

use crate::channel::{
    draw_channel, make_orthogonal_pilots, ml_estimate, posterior_draw, ChannelConfig,
    ChannelEstimate,
};
use crate::error::{BicmError, Result};
use crate::numerics::special::lambda_coefficient;
use crate::numerics::{svd, CMatrix, CVector, Cx, RngStream, SvdResult};

/// Statistics needed to evaluate rates for one channel/estimate pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateConfig {
    /// Per-antenna symbol power `P̄`.
    pub symbol_power: f64,
    /// Noise variance per receive dimension `σ_z²`.
    pub noise_variance: f64,
    /// Posterior shrinkage `δ`.
    pub shrinkage: f64,
    /// Estimation error variance `σ_E²`.
    pub error_variance: f64,
    pub tx_antennas: usize,
    pub rx_antennas: usize,
}

impl RateConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("symbol_power", self.symbol_power),
            ("noise_variance", self.noise_variance),
        ] {
            if !v.is_finite() || v <= 0.0 {
                return Err(BicmError::Config(format!(
                    "{name} must be finite and positive, got {v}"
                )));
            }
        }
        if !(self.shrinkage > 0.0 && self.shrinkage <= 1.0) {
            return Err(BicmError::Config(format!(
                "shrinkage must lie in (0,1], got {}",
                self.shrinkage
            )));
        }
        if self.error_variance < 0.0 || !self.error_variance.is_finite() {
            return Err(BicmError::Config("error variance must be >= 0".into()));
        }
        if self.tx_antennas == 0 || self.rx_antennas < self.tx_antennas {
            return Err(BicmError::Config("need M_R >= M_T >= 1".into()));
        }
        Ok(())
    }

    /// Derives the rate statistics from a channel configuration.
    pub fn from_channel(cfg: &ChannelConfig, symbol_power: f64) -> Self {
        Self {
            symbol_power,
            noise_variance: cfg.noise_variance,
            shrinkage: cfg.shrinkage(),
            error_variance: cfg.estimation_error_variance(),
            tx_antennas: cfg.tx_antennas,
            rx_antennas: cfg.rx_antennas,
        }
    }
}

/// Instantaneous rates of the three decoders, bits per channel use.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatePoint {
    pub c_improved: f64,
    pub c_mismatched: f64,
    pub c_theoretical: f64,
}

/// Which decoder a Monte Carlo rate refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecoderKind {
    Improved,
    Mismatched,
    Theoretical,
}

impl DecoderKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            DecoderKind::Improved => "improved",
            DecoderKind::Mismatched => "mismatched",
            DecoderKind::Theoretical => "theoretical",
        }
    }
}

/// `a` coefficient of the constrained optimisation, exactly as printed:
/// `a = δ(δσ_E²P̄ − λ_n σ_z²) / [M_T δσ_E²λ_n P̄ + λ_n σ_z² − δσ_E²P̄]`.
pub fn a_coefficient(
    shrinkage: f64,
    error_variance: f64,
    symbol_power: f64,
    noise_variance: f64,
    lambda_n: f64,
    tx_antennas: usize,
) -> Result<f64> {
    let d = shrinkage;
    let num = d * (d * error_variance * symbol_power - lambda_n * noise_variance);
    let den = tx_antennas as f64 * d * error_variance * lambda_n * symbol_power
        + lambda_n * noise_variance
        - d * error_variance * symbol_power;
    if den.abs() < 1e-14 {
        return Err(BicmError::Singularity(format!(
            "a-coefficient denominator {den:.3e} below threshold"
        )));
    }
    Ok(num / den)
}

/// Constraint constant, exposed for diagnostics only:
/// `Cst = M_T λ_n [‖H‖² − ‖Υ‖² + (TrΣ_z − TrΣ)/P̄] / [1 − σ_z²λ_n/(δP̄σ_E²) − M_T λ_n]`.
#[allow(clippy::too_many_arguments)]
pub fn cst_constant(
    lambda_n: f64,
    tx_antennas: usize,
    h_norm_sq: f64,
    upsilon_norm_sq: f64,
    tr_sigma_z: f64,
    tr_sigma: f64,
    symbol_power: f64,
    shrinkage: f64,
    error_variance: f64,
    noise_variance: f64,
) -> Result<f64> {
    let den = 1.0
        - noise_variance * lambda_n / (shrinkage * symbol_power * error_variance)
        - tx_antennas as f64 * lambda_n;
    if den.abs() < 1e-14 {
        return Err(BicmError::Singularity(
            "constraint-constant denominator vanishes".into(),
        ));
    }
    let num = tx_antennas as f64
        * lambda_n
        * (h_norm_sq - upsilon_norm_sq + (tr_sigma_z - tr_sigma) / symbol_power);
    Ok(num / den)
}

/// Rotated-estimate diagonal `diag(V^H Ĥ^H U)`, zero-padded to `M_R` entries.
pub fn rotated_estimate_diagonal(f: &SvdResult, h_hat: &CMatrix) -> CVector {
    let rot = f.v.adjoint() * h_hat.adjoint() * &f.u; // M_T x M_R
    let m_r = f.u.nrows();
    let m_t = f.v.nrows();
    CVector::from_iterator(
        m_r,
        (0..m_r).map(|i| if i < m_t { rot[(i, i)] } else { Cx::new(0.0, 0.0) }),
    )
}

/// Constraint radius `b = ‖H + aĤ‖² − a²(‖Ĥ‖² − ‖h̃‖²)`, the printed form
/// (`‖H̃‖ = ‖Ĥ‖` by unitary invariance).
pub fn b_threshold(h: &CMatrix, h_hat: &CMatrix, a: f64, f: &SvdResult) -> f64 {
    let h_tilde = rotated_estimate_diagonal(f, h_hat);
    let combined = h + h_hat * Cx::new(a, 0.0);
    combined.norm_squared() - a * a * (h_hat.norm_squared() - h_tilde.norm_squared())
}

/// Per-subcarrier decomposition carrying everything the rate solution needs.
#[derive(Debug, Clone)]
pub struct SubcarrierDecomposition {
    pub svd: SvdResult,
    /// `diag(V^H Ĥ^H U)`, zero-padded to `M_R`.
    pub h_tilde: CVector,
    /// `a` coefficient; meaningless when `degenerate`.
    pub a: f64,
    /// Set when `σ_E² = 0`: both decoders collapse onto the projection
    /// solution.
    pub degenerate: bool,
    /// Constraint radius `b`.
    pub b: f64,
    pub lambda_n: f64,
    lam_sq: f64,
    ht_sq: f64,
    /// `Re Σ λ_i h̃_i`.
    q: f64,
    /// `b − a²‖h̃‖² = ‖λ‖² + 2aq`, assembled without the large-`a`
    /// cancellation of the direct difference.
    excess: f64,
}

impl SubcarrierDecomposition {
    pub fn new(h: &CMatrix, h_hat: &CMatrix, cfg: &RateConfig) -> Result<Self> {
        cfg.validate()?;
        if h.nrows() != cfg.rx_antennas
            || h.ncols() != cfg.tx_antennas
            || h_hat.nrows() != h.nrows()
            || h_hat.ncols() != h.ncols()
        {
            return Err(BicmError::DimensionMismatch(
                "channel/estimate shape does not match the configuration".into(),
            ));
        }
        let f = svd(h)?;
        let h_tilde = rotated_estimate_diagonal(&f, h_hat);
        let lam_sq: f64 = f.singular_values.iter().map(|s| s * s).sum();
        let ht_sq = h_tilde.norm_squared();
        let q: f64 = f
            .singular_values
            .iter()
            .zip(h_tilde.iter())
            .map(|(&l, z)| l * z.re)
            .sum();

        if cfg.error_variance == 0.0 {
            return Ok(Self {
                svd: f,
                h_tilde,
                a: 0.0,
                degenerate: true,
                b: lam_sq,
                lambda_n: 0.0,
                lam_sq,
                ht_sq,
                q,
                excess: lam_sq,
            });
        }

        let t = cfg.noise_variance / (cfg.shrinkage * cfg.symbol_power * cfg.error_variance);
        let lambda_n = lambda_coefficient(cfg.tx_antennas as u32 - 1, t)?;
        let a = match a_coefficient(
            cfg.shrinkage,
            cfg.error_variance,
            cfg.symbol_power,
            cfg.noise_variance,
            lambda_n,
            cfg.tx_antennas,
        ) {
            Ok(a) => a,
            Err(_) => {
                // near-singular denominator: nudge lambda and retry once
                eprintln!("rates: a-coefficient near-singular at t={t:.6e}, perturbing lambda");
                a_coefficient(
                    cfg.shrinkage,
                    cfg.error_variance,
                    cfg.symbol_power,
                    cfg.noise_variance,
                    lambda_n * (1.0 + 1e-12),
                    cfg.tx_antennas,
                )?
            }
        };
        let excess = lam_sq + 2.0 * a * q;
        let b = excess + a * a * ht_sq;
        Ok(Self {
            svd: f,
            h_tilde,
            a,
            degenerate: false,
            b,
            lambda_n,
            lam_sq,
            ht_sq,
            q,
            excess,
        })
    }

    pub fn singular_values(&self) -> &[f64] {
        &self.svd.singular_values
    }

    /// `‖Λ‖²`, the total channel energy.
    pub fn channel_energy(&self) -> f64 {
        self.lam_sq
    }

    /// Estimation-aware optimiser. Uses the identity
    /// `√b/‖h̃‖ − |a| = (b − a²‖h̃‖²)/(‖h̃‖√b + |a|‖h̃‖²)` so the coefficient
    /// stays accurate when `|a|` is large (near-perfect estimates).
    pub fn mu_improved(&self) -> CVector {
        if self.degenerate {
            return self.mu_mismatched();
        }
        if self.b < 0.0 || self.ht_sq == 0.0 {
            return CVector::zeros(self.h_tilde.len());
        }
        let den = self.ht_sq.sqrt() * self.b.sqrt() + self.a.abs() * self.ht_sq;
        if den <= 0.0 {
            return CVector::zeros(self.h_tilde.len());
        }
        let rho = self.excess / den;
        &self.h_tilde * Cx::new(rho, 0.0)
    }

    /// Estimation-aware optimiser for an explicit constraint radius, by the
    /// literal formula `(√b/‖h̃‖ − |a|) h̃` (zero when `b < 0`).
    pub fn mu_improved_for_bound(&self, b: f64) -> CVector {
        let nh = self.ht_sq.sqrt();
        if b < 0.0 || nh == 0.0 {
            return CVector::zeros(self.h_tilde.len());
        }
        let rho = b.sqrt() / nh - self.a.abs();
        &self.h_tilde * Cx::new(rho, 0.0)
    }

    /// Mismatched-decoder optimiser `Re{Tr(Λ^H h̃)}/‖h̃‖² · h̃`.
    pub fn mu_mismatched(&self) -> CVector {
        if self.ht_sq == 0.0 {
            return CVector::zeros(self.h_tilde.len());
        }
        &self.h_tilde * Cx::new(self.q / self.ht_sq, 0.0)
    }

    /// `‖μ + a h̃‖²`, for feasibility checks.
    pub fn constraint_lhs(&self, mu: &CVector) -> f64 {
        (mu + &self.h_tilde * Cx::new(self.a, 0.0)).norm_squared()
    }
}

/// Rate of a diagonal auxiliary channel `μ` against singular values `Λ`.
pub fn rate_from_mu(
    mu: &CVector,
    singular_values: &[f64],
    symbol_power: f64,
    noise_variance: f64,
    tx_antennas: usize,
) -> Result<f64> {
    let lam_sq: f64 = singular_values.iter().map(|s| s * s).sum();
    let mu_sq = mu.norm_squared();
    let sigma2 = symbol_power / tx_antennas as f64 * (lam_sq - mu_sq) + noise_variance;
    if sigma2 <= 0.0 || !sigma2.is_finite() {
        return Err(BicmError::Singularity(format!(
            "auxiliary noise variance {sigma2:.6e} is not positive (‖μ‖² = {mu_sq:.6e}, ‖Λ‖² = {lam_sq:.6e})"
        )));
    }
    Ok(mu
        .iter()
        .map(|z| (1.0 + symbol_power * z.norm_sqr() / sigma2).log2())
        .sum())
}

/// Perfect-CSI rate `Σ log2(1 + P̄ λ_i²/σ_z²)` from singular values.
pub fn theoretical_rate(singular_values: &[f64], symbol_power: f64, noise_variance: f64) -> f64 {
    singular_values
        .iter()
        .map(|&l| (1.0 + symbol_power * l * l / noise_variance).log2())
        .sum()
}

/// Instantaneous rates for a full channel/estimate pair, averaged over
/// subcarriers.
pub fn instantaneous_rates(
    h: &[CMatrix],
    h_hat: &[CMatrix],
    cfg: &RateConfig,
) -> Result<RatePoint> {
    if h.is_empty() || h.len() != h_hat.len() {
        return Err(BicmError::DimensionMismatch(format!(
            "{} channels vs {} estimates",
            h.len(),
            h_hat.len()
        )));
    }
    let m = h.len() as f64;
    let mut c_m = 0.0;
    let mut c_ml = 0.0;
    let mut c_g = 0.0;
    for (hk, ek) in h.iter().zip(h_hat) {
        let d = SubcarrierDecomposition::new(hk, ek, cfg)?;
        c_m += rate_from_mu(
            &d.mu_improved(),
            d.singular_values(),
            cfg.symbol_power,
            cfg.noise_variance,
            cfg.tx_antennas,
        )?;
        c_ml += rate_from_mu(
            &d.mu_mismatched(),
            d.singular_values(),
            cfg.symbol_power,
            cfg.noise_variance,
            cfg.tx_antennas,
        )?;
        c_g += theoretical_rate(d.singular_values(), cfg.symbol_power, cfg.noise_variance);
    }
    Ok(RatePoint {
        c_improved: c_m / m,
        c_mismatched: c_ml / m,
        c_theoretical: c_g / m,
    })
}

/// Lower empirical quantile: the `max(1, ⌊γ·n⌋)`-th order statistic.
pub fn lower_quantile(samples: &mut [f64], gamma: f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(BicmError::InvalidInput("empty sample set".into()));
    }
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(BicmError::InvalidInput(format!(
            "outage probability must lie in (0,1), got {gamma}"
        )));
    }
    samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let k = ((gamma * samples.len() as f64).floor() as usize).max(1);
    Ok(samples[k - 1])
}

/// Per-draw rates of all three decoders under the posterior of the true
/// channel given `est`; the three share draws (common random numbers).
fn posterior_rate_samples(
    est: &ChannelEstimate,
    cfg: &RateConfig,
    n_draws: usize,
    stream: &RngStream,
) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let m = est.per_subcarrier.len();
    let mut cm = Vec::with_capacity(n_draws);
    let mut cml = Vec::with_capacity(n_draws);
    let mut cg = Vec::with_capacity(n_draws);
    for draw in 0..n_draws {
        let ds = stream.substream(draw as u64);
        let mut acc = [0.0f64; 3];
        for k in 0..m {
            let hk = posterior_draw(est, k, &ds.substream(k as u64));
            let d = SubcarrierDecomposition::new(&hk, &est.per_subcarrier[k], cfg)?;
            acc[0] += rate_from_mu(
                &d.mu_improved(),
                d.singular_values(),
                cfg.symbol_power,
                cfg.noise_variance,
                cfg.tx_antennas,
            )?;
            acc[1] += rate_from_mu(
                &d.mu_mismatched(),
                d.singular_values(),
                cfg.symbol_power,
                cfg.noise_variance,
                cfg.tx_antennas,
            )?;
            acc[2] += theoretical_rate(d.singular_values(), cfg.symbol_power, cfg.noise_variance);
        }
        cm.push(acc[0] / m as f64);
        cml.push(acc[1] / m as f64);
        cg.push(acc[2] / m as f64);
    }
    Ok((cm, cml, cg))
}

/// Outage rate of one decoder for a fixed estimate: the `γ`-quantile of the
/// decoder's instantaneous rate under the posterior channel distribution.
pub fn outage_rate(
    est: &ChannelEstimate,
    cfg: &RateConfig,
    gamma: f64,
    decoder: DecoderKind,
    n_posterior_draws: usize,
    stream: &RngStream,
) -> Result<f64> {
    if n_posterior_draws < 100 {
        return Err(BicmError::InvalidInput(
            "need at least 100 posterior draws".into(),
        ));
    }
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(BicmError::InvalidInput(format!(
            "outage probability must lie in (0,1), got {gamma}"
        )));
    }
    let (cm, cml, cg) = posterior_rate_samples(est, cfg, n_posterior_draws, stream)?;
    let mut samples = match decoder {
        DecoderKind::Improved => cm,
        DecoderKind::Mismatched => cml,
        DecoderKind::Theoretical => cg,
    };
    lower_quantile(&mut samples, gamma)
}

/// Expected outage rates over the estimate distribution, plus the ergodic
/// perfect-CSI reference; per-decoder mean and standard error.
#[derive(Debug, Clone, Copy)]
pub struct ExpectedOutage {
    pub improved: (f64, f64),
    pub mismatched: (f64, f64),
    pub theoretical: (f64, f64),
    pub ergodic: (f64, f64),
}

fn mean_se(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    if samples.len() < 2 {
        return (mean, 0.0);
    }
    let var = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Outer Monte Carlo over joint (channel, estimate) draws; inner posterior
/// quantiles. Outer draws run in parallel; the reduction is index-ordered so
/// results do not depend on the worker count.
pub fn expected_outage_rates(
    ch_cfg: &ChannelConfig,
    symbol_power: f64,
    gamma: f64,
    n_estimate_draws: usize,
    n_posterior_draws: usize,
    stream: &RngStream,
) -> Result<ExpectedOutage> {
    ch_cfg.validate()?;
    if n_estimate_draws < 2 {
        return Err(BicmError::InvalidInput(
            "need at least 2 estimate draws".into(),
        ));
    }
    let cfg = RateConfig::from_channel(ch_cfg, symbol_power);
    cfg.validate()?;
    let pilots = make_orthogonal_pilots(ch_cfg)?;

    let per_outer: Vec<(f64, f64, f64, f64)> = (0..n_estimate_draws)
        .into_par_iter()
        .map(|e| {
            let s = stream.substream(e as u64);
            let h = draw_channel(ch_cfg, &s.substream(0));
            let est = ml_estimate(&h, &pilots, ch_cfg, &s.substream(1))?;
            let (mut cm, mut cml, mut cg) =
                posterior_rate_samples(&est, &cfg, n_posterior_draws, &s.substream(2))?;
            let ergodic = h
                .per_subcarrier
                .iter()
                .map(|hk| {
                    Ok(theoretical_rate(
                        &svd(hk)?.singular_values,
                        symbol_power,
                        ch_cfg.noise_variance,
                    ))
                })
                .sum::<Result<f64>>()?
                / h.per_subcarrier.len() as f64;
            Ok((
                lower_quantile(&mut cm, gamma)?,
                lower_quantile(&mut cml, gamma)?,
                lower_quantile(&mut cg, gamma)?,
                ergodic,
            ))
        })
        .collect::<Result<_>>()?;

    let col = |i: usize| -> Vec<f64> {
        per_outer
            .iter()
            .map(|t| match i {
                0 => t.0,
                1 => t.1,
                2 => t.2,
                _ => t.3,
            })
            .collect()
    };
    Ok(ExpectedOutage {
        improved: mean_se(&col(0)),
        mismatched: mean_se(&col(1)),
        theoretical: mean_se(&col(2)),
        ergodic: mean_se(&col(3)),
    })
}

/// Expected outage rate of one decoder: mean and standard error.
pub fn expected_outage_rate(
    ch_cfg: &ChannelConfig,
    symbol_power: f64,
    gamma: f64,
    decoder: DecoderKind,
    n_estimate_draws: usize,
    n_posterior_draws: usize,
    stream: &RngStream,
) -> Result<(f64, f64)> {
    let all = expected_outage_rates(
        ch_cfg,
        symbol_power,
        gamma,
        n_estimate_draws,
        n_posterior_draws,
        stream,
    )?;
    Ok(match decoder {
        DecoderKind::Improved => all.improved,
        DecoderKind::Mismatched => all.mismatched,
        DecoderKind::Theoretical => all.theoretical,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::gaussian_complex;

    fn cfg(noise: f64, err: f64) -> RateConfig {
        RateConfig {
            symbol_power: 1.0,
            noise_variance: noise,
            shrinkage: 1.0 / (1.0 + err),
            error_variance: err,
            tx_antennas: 2,
            rx_antennas: 2,
        }
    }

    fn random_pair(tag: u64, err: f64) -> (CMatrix, CMatrix) {
        let h = CMatrix::from_vec(
            2,
            2,
            gaussian_complex(&RngStream::new(0xA11CE, tag), 4, 1.0).unwrap(),
        );
        let e = CMatrix::from_vec(
            2,
            2,
            gaussian_complex(&RngStream::new(0xB0B, tag), 4, err).unwrap(),
        );
        (h.clone(), h + e)
    }

    #[test]
    fn a_coefficient_numeric_instance() {
        // Independent re-evaluation of the printed quotient at
        // delta=0.5, err=1, P=1, noise=1, Mt=2, lambda=lambda(1,1).
        let lam = lambda_coefficient(1, 1.0).unwrap();
        let a = a_coefficient(0.5, 1.0, 1.0, 1.0, lam, 2).unwrap();
        let num = 0.5 * (0.5 - lam);
        let den = 2.0 * 0.5 * lam + lam - 0.5;
        assert!((a - num / den).abs() < 1e-15);
        assert!(a > 0.15 && a < 0.16, "a = {a}");
    }

    #[test]
    fn a_coefficient_small_lambda_limit() {
        // lambda -> 0 with the other statistics fixed: a -> -delta,
        // approaching from inside (-1, 0).
        let delta = 0.7;
        let mut prev = f64::NEG_INFINITY;
        for &lam in &[1e-4, 1e-6, 1e-8, 1e-10] {
            let a = a_coefficient(delta, 0.3, 1.0, 1.0, lam, 2).unwrap();
            assert!(a > -1.0 && a < 0.0, "a = {a} at lambda = {lam}");
            assert!((a + delta).abs() < (prev + delta).abs() || prev == f64::NEG_INFINITY);
            prev = a;
        }
        assert!((prev + delta).abs() < 1e-9);
    }

    #[test]
    fn a_coefficient_singular_denominator() {
        // denominator = Mt*d*e*l*P + l*z - d*e*P = 0 at l = d*e*P/(Mt*d*e*P + z)
        let (d, e, p, z) = (0.5, 1.0, 1.0, 1.0);
        let lam = d * e * p / (2.0 * d * e * p + z);
        assert!(matches!(
            a_coefficient(d, e, p, z, lam, 2),
            Err(BicmError::Singularity(_))
        ));
    }

    #[test]
    fn cst_constant_vanishes_for_matched_traces() {
        let v = cst_constant(0.3, 2, 4.2, 4.2, 0.4, 0.4, 1.0, 0.9, 0.05, 0.2).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn b_threshold_identities() {
        // perfectly aligned estimate with a = -1 collapses b to zero
        let (h, _) = random_pair(1, 0.0);
        let f = svd(&h).unwrap();
        let b = b_threshold(&h, &h, -1.0, &f);
        assert!(b.abs() < 1e-10, "b = {b}");
        // zero estimate leaves only the channel energy
        let zero = CMatrix::zeros(2, 2);
        let b0 = b_threshold(&h, &zero, 0.77, &f);
        assert!((b0 - h.norm_squared()).abs() < 1e-10);
    }

    #[test]
    fn b_threshold_two_code_paths_agree() {
        // direct printed formula vs the stable assembly in the decomposition
        for tag in 0..50 {
            let (h, hh) = random_pair(100 + tag, 0.25);
            let c = cfg(0.2, 0.125);
            let d = SubcarrierDecomposition::new(&h, &hh, &c).unwrap();
            let direct = b_threshold(&h, &hh, d.a, &d.svd);
            assert!(
                (direct - d.b).abs() <= 1e-9 * d.b.abs().max(1.0),
                "direct {direct} vs assembled {}",
                d.b
            );
        }
    }

    #[test]
    fn mu_improved_meets_constraint_with_equality() {
        for tag in 0..50 {
            let (h, hh) = random_pair(200 + tag, 0.25);
            let c = cfg(0.2, 0.125);
            let d = SubcarrierDecomposition::new(&h, &hh, &c).unwrap();
            assert!(d.b >= 0.0);
            let mu = d.mu_improved();
            let lhs = d.constraint_lhs(&mu);
            assert!(
                (lhs - d.b).abs() <= 1e-9 * d.b.max(1.0),
                "constraint lhs {lhs} vs b {}",
                d.b
            );
        }
    }

    #[test]
    fn mu_improved_zero_branch_and_degenerate_diagonal() {
        let (h, hh) = random_pair(300, 0.25);
        let c = cfg(0.2, 0.125);
        let d = SubcarrierDecomposition::new(&h, &hh, &c).unwrap();
        let mu = d.mu_improved_for_bound(-1.0);
        assert!(mu.norm() == 0.0);
        // zero estimate: ‖h̃‖ = 0 forces the zero vector on both decoders
        let zero = CMatrix::zeros(2, 2);
        let dz = SubcarrierDecomposition::new(&h, &zero, &c).unwrap();
        assert!(dz.mu_improved().norm() == 0.0);
        assert!(dz.mu_mismatched().norm() == 0.0);
    }

    #[test]
    fn mu_improved_perfect_alignment_recovers_singular_values() {
        // forced a near -1 with an exact estimate: |mu_i| -> lambda_i
        let (h, _) = random_pair(301, 0.0);
        let c = cfg(0.2, 0.125);
        let mut d = SubcarrierDecomposition::new(&h, &h, &c).unwrap();
        d.a = -(1.0 - 1e-9);
        let b = b_threshold(&h, &h, d.a, &d.svd);
        let mu = d.mu_improved_for_bound(b);
        for (m, &l) in mu.iter().zip(d.singular_values()) {
            assert!((m.norm() - l).abs() < 1e-6, "|mu| {} vs {l}", m.norm());
        }
    }

    #[test]
    fn mu_mismatched_identities() {
        let (h, _) = random_pair(400, 0.0);
        let c = cfg(0.2, 0.125);
        let d = SubcarrierDecomposition::new(&h, &h, &c).unwrap();
        // perfect estimate: projection coefficient 1, |mu_i| = lambda_i
        let mu = d.mu_mismatched();
        for (m, &l) in mu.iter().zip(d.singular_values()) {
            assert!((m.norm() - l).abs() < 1e-10);
        }
        // scaling invariance: c·Ĥ leaves mu unchanged
        let (h2, hh2) = random_pair(401, 0.3);
        let d1 = SubcarrierDecomposition::new(&h2, &hh2, &c).unwrap();
        let scaled = &hh2 * Cx::new(3.7, 0.0);
        let d2 = SubcarrierDecomposition::new(&h2, &scaled, &c).unwrap();
        assert!((d1.mu_mismatched() - d2.mu_mismatched()).norm() < 1e-9);
    }

    #[test]
    fn rate_from_mu_cases() {
        let lams = [1.5, 0.7];
        let zero = CVector::zeros(2);
        assert_eq!(rate_from_mu(&zero, &lams, 1.0, 0.2, 2).unwrap(), 0.0);
        // |mu_i| = lambda_i collapses sigma² to the noise floor
        let mu = CVector::from_vec(vec![Cx::new(0.0, 1.5), Cx::new(0.7, 0.0)]);
        let r = rate_from_mu(&mu, &lams, 1.0, 0.2, 2).unwrap();
        let expect = (1.0f64 + 1.5 * 1.5 / 0.2).log2() + (1.0f64 + 0.7 * 0.7 / 0.2).log2();
        assert!((r - expect).abs() < 1e-12);
        // exceeding the total channel energy is singular
        let mu_big = CVector::from_vec(vec![Cx::new(3.0, 0.0), Cx::new(0.0, 0.0)]);
        assert!(matches!(
            rate_from_mu(&mu_big, &lams, 1.0, 0.2, 2),
            Err(BicmError::Singularity(_))
        ));
    }

    #[test]
    fn closed_forms_stay_out_of_the_singular_region() {
        // ‖mu‖ <= ‖Λ‖ for both decoders, so sigma² >= noise variance.
        for tag in 0..100 {
            let (h, hh) = random_pair(500 + tag, 0.5);
            let c = cfg(1.0, 0.5);
            let d = SubcarrierDecomposition::new(&h, &hh, &c).unwrap();
            let lam = d.lam_sq.sqrt();
            assert!(d.mu_improved().norm() <= lam * (1.0 + 1e-12));
            assert!(d.mu_mismatched().norm() <= lam * (1.0 + 1e-12));
        }
    }

    #[test]
    fn instantaneous_rates_degeneracy_and_zero_estimate() {
        let (h, _) = random_pair(600, 0.0);
        let c = cfg(0.2, 0.0);
        let p = instantaneous_rates(&[h.clone()], &[h.clone()], &c).unwrap();
        assert!((p.c_improved - p.c_theoretical).abs() < 1e-9);
        assert!((p.c_mismatched - p.c_theoretical).abs() < 1e-9);

        let zero = CMatrix::zeros(2, 2);
        let c2 = cfg(0.2, 0.125);
        let p2 = instantaneous_rates(&[h], &[zero], &c2).unwrap();
        assert_eq!(p2.c_improved, 0.0);
        assert_eq!(p2.c_mismatched, 0.0);
        assert!(p2.c_theoretical > 0.0);
    }

    #[test]
    fn scalar_instance_hand_evaluated() {
        // 1x1: H = 2, Ĥ = 2 (sigma_E² -> 0 limit with exact estimate).
        let h = CMatrix::from_vec(1, 1, vec![Cx::new(2.0, 0.0)]);
        let c = RateConfig {
            symbol_power: 1.0,
            noise_variance: 0.5,
            shrinkage: 1.0,
            error_variance: 0.0,
            tx_antennas: 1,
            rx_antennas: 1,
        };
        let p = instantaneous_rates(&[h.clone()], &[h], &c).unwrap();
        let expect = (1.0f64 + 4.0 / 0.5).log2();
        assert!((p.c_theoretical - expect).abs() < 1e-12);
        assert!((p.c_improved - expect).abs() < 1e-9);
        assert!((p.c_mismatched - expect).abs() < 1e-9);
    }

    #[test]
    fn lower_quantile_order_statistic_convention() {
        let mut xs: Vec<f64> = (1..=100).map(|i| i as f64).collect();
        assert_eq!(lower_quantile(&mut xs, 0.05).unwrap(), 5.0);
        let mut xs: Vec<f64> = (1..=100).map(|i| i as f64).collect();
        assert_eq!(lower_quantile(&mut xs, 0.001).unwrap(), 1.0);
        assert!(lower_quantile(&mut [1.0, 2.0], 1.5).is_err());
    }

    #[test]
    fn outage_rate_degenerate_posterior_equals_instantaneous() {
        let (h, _) = random_pair(700, 0.0);
        let est = ChannelEstimate {
            per_subcarrier: vec![h.clone()],
            error_variance: 0.0,
            shrinkage: 1.0,
        };
        let c = cfg(0.2, 0.0);
        let stream = RngStream::new(7, 7);
        let p = instantaneous_rates(&[h.clone()], &[h], &c).unwrap();
        for (decoder, expect) in [
            (DecoderKind::Improved, p.c_improved),
            (DecoderKind::Mismatched, p.c_mismatched),
            (DecoderKind::Theoretical, p.c_theoretical),
        ] {
            let o = outage_rate(&est, &c, 0.01, decoder, 100, &stream).unwrap();
            assert!((o - expect).abs() < 1e-12);
            let o2 = outage_rate(&est, &c, 0.4, decoder, 100, &stream).unwrap();
            assert!((o2 - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn outage_rate_common_draw_dominance() {
        let (h, hh) = random_pair(800, 0.25);
        let est = ChannelEstimate {
            per_subcarrier: vec![hh],
            error_variance: 0.125,
            shrinkage: 1.0 / 1.125,
        };
        let _ = h;
        let c = cfg(0.25, 0.125);
        let stream = RngStream::new(31, 0);
        let cm = outage_rate(&est, &c, 0.05, DecoderKind::Improved, 400, &stream).unwrap();
        let cml = outage_rate(&est, &c, 0.05, DecoderKind::Mismatched, 400, &stream).unwrap();
        let cg = outage_rate(&est, &c, 0.05, DecoderKind::Theoretical, 400, &stream).unwrap();
        assert!(cm >= cml - 1e-9, "improved {cm} vs mismatched {cml}");
        assert!(cg >= cm - 1e-9, "theoretical {cg} vs improved {cm}");
    }

    #[test]
    fn expected_outage_reproducible_and_degenerate_limit() {
        let ch = ChannelConfig {
            subcarriers: 4,
            tx_antennas: 2,
            rx_antennas: 2,
            gain_variance: 1.0,
            noise_variance: 0.2,
            pilot_length: 2,
            pilot_power: 1.0,
        };
        let s = RngStream::new(99, 0);
        let a = expected_outage_rates(&ch, 1.0, 0.01, 8, 120, &s).unwrap();
        let b = expected_outage_rates(&ch, 1.0, 0.01, 8, 120, &s).unwrap();
        assert_eq!(a.improved, b.improved);
        assert_eq!(a.mismatched, b.mismatched);
        assert_eq!(a.theoretical, b.theoretical);
        assert_eq!(a.ergodic, b.ergodic);

        // near-noiseless training: every decoder approaches the ergodic
        // perfect-CSI reference
        let mut ch2 = ch;
        ch2.pilot_power = 1e9;
        let r = expected_outage_rates(&ch2, 1.0, 0.3, 8, 120, &s).unwrap();
        assert!((r.improved.0 - r.ergodic.0).abs() < 0.05 * r.ergodic.0);
        assert!((r.mismatched.0 - r.ergodic.0).abs() < 0.05 * r.ergodic.0);
    }
}
