//! Block Rayleigh fading MIMO-OFDM channels, pilot-based ML estimation and the
//! posterior statistics of the true channel given its estimate.
//!
//! The channel is simulated directly in the frequency domain: each subcarrier
//! carries an independent flat MIMO channel `y_k = H_k s_k + z_k`, constant
//! over a frame. Orthogonal pilots (`S_T S_T^H = N P_T I`) make the ML
//! estimation error white with per-entry variance `σ_E² = σ_z²/(N P_T)`; the
//! true channel conditioned on the estimate is then complex Gaussian with mean
//! `δ·Ĥ_k` and per-entry variance `δ·σ_E²`, where `δ = σ_h²/(σ_h²+σ_E²)`.

use std::f64::consts::PI;

use crate::error::{BicmError, Result};
use crate::numerics::{gaussian_complex, CMatrix, CVector, Cx, RngStream};

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelConfig {
    /// Number of OFDM subcarriers `M`.
    pub subcarriers: usize,
    /// Transmit antennas `M_T`.
    pub tx_antennas: usize,
    /// Receive antennas `M_R` (must satisfy `M_R >= M_T`).
    pub rx_antennas: usize,
    /// Per-entry channel gain variance `σ_h²`.
    pub gain_variance: f64,
    /// Noise variance per receive dimension `σ_z²`.
    pub noise_variance: f64,
    /// Number of pilot vectors per subcarrier `N`.
    pub pilot_length: usize,
    /// Average pilot symbol energy `P_T`.
    pub pilot_power: f64,
}

impl ChannelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.subcarriers == 0 {
            return Err(BicmError::Config("subcarriers must be >= 1".into()));
        }
        if self.tx_antennas == 0 || self.rx_antennas < self.tx_antennas {
            return Err(BicmError::Config(format!(
                "antenna configuration must satisfy M_R >= M_T >= 1, got {}x{}",
                self.rx_antennas, self.tx_antennas
            )));
        }
        for (name, v) in [
            ("gain_variance", self.gain_variance),
            ("noise_variance", self.noise_variance),
            ("pilot_power", self.pilot_power),
        ] {
            if !v.is_finite() || v <= 0.0 {
                return Err(BicmError::Config(format!(
                    "{name} must be finite and positive, got {v}"
                )));
            }
        }
        if self.pilot_length < self.tx_antennas {
            return Err(BicmError::Config(format!(
                "pilot length N={} must be >= M_T={} for orthogonal pilots",
                self.pilot_length, self.tx_antennas
            )));
        }
        Ok(())
    }

    /// Estimation error variance per entry under orthogonal pilots.
    pub fn estimation_error_variance(&self) -> f64 {
        self.noise_variance / (self.pilot_length as f64 * self.pilot_power)
    }

    /// Posterior shrinkage `δ = σ_h²/(σ_h² + σ_E²)`.
    pub fn shrinkage(&self) -> f64 {
        let se2 = self.estimation_error_variance();
        self.gain_variance / (self.gain_variance + se2)
    }
}

/// True per-subcarrier channel matrices for one fading block.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    pub per_subcarrier: Vec<CMatrix>,
}

/// Pilot-based estimate with its error statistics.
#[derive(Debug, Clone)]
pub struct ChannelEstimate {
    pub per_subcarrier: Vec<CMatrix>,
    /// Per-entry estimation error variance `σ_E²`.
    pub error_variance: f64,
    /// Posterior shrinkage `δ`, in `(0, 1]`.
    pub shrinkage: f64,
}

impl ChannelEstimate {
    /// Degenerate estimate equal to the true channel (`σ_E² = 0`, `δ = 1`).
    pub fn perfect(h: &ChannelRealization) -> Self {
        Self {
            per_subcarrier: h.per_subcarrier.clone(),
            error_variance: 0.0,
            shrinkage: 1.0,
        }
    }
}

/// Draws one fading block: `M` independent matrices with i.i.d. `CN(0, σ_h²)`
/// entries.
pub fn draw_channel(cfg: &ChannelConfig, stream: &RngStream) -> ChannelRealization {
    let (m, rows, cols) = (cfg.subcarriers, cfg.rx_antennas, cfg.tx_antennas);
    let entries = gaussian_complex(stream, m * rows * cols, cfg.gain_variance)
        .expect("validated variance");
    let per_subcarrier = entries
        .chunks_exact(rows * cols)
        .map(|chunk| CMatrix::from_vec(rows, cols, chunk.to_vec()))
        .collect();
    ChannelRealization { per_subcarrier }
}

/// Applies the channel with AWGN: `y_k = H_k s_k + z_k`.
pub fn apply_channel(
    h: &ChannelRealization,
    symbols: &[CVector],
    noise_stream: &RngStream,
    noise_variance: f64,
) -> Result<Vec<CVector>> {
    if symbols.len() != h.per_subcarrier.len() {
        return Err(BicmError::DimensionMismatch(format!(
            "{} symbol vectors for {} subcarriers",
            symbols.len(),
            h.per_subcarrier.len()
        )));
    }
    let rows = h.per_subcarrier[0].nrows();
    let noise = gaussian_complex(noise_stream, symbols.len() * rows, noise_variance)?;
    h.per_subcarrier
        .iter()
        .zip(symbols)
        .enumerate()
        .map(|(k, (hk, sk))| {
            if hk.ncols() != sk.len() {
                return Err(BicmError::DimensionMismatch(format!(
                    "subcarrier {k}: symbol vector of length {} for {} tx antennas",
                    sk.len(),
                    hk.ncols()
                )));
            }
            let mut y = hk * sk;
            for i in 0..rows {
                y[i] += noise[k * rows + i];
            }
            Ok(y)
        })
        .collect()
}

/// Orthogonal pilot matrix (`M_T x N`) built from scaled DFT rows, so that
/// `S_T S_T^H = N P_T I` holds to machine precision.
pub fn make_orthogonal_pilots(cfg: &ChannelConfig) -> Result<CMatrix> {
    if cfg.pilot_length < cfg.tx_antennas {
        return Err(BicmError::Config(format!(
            "pilot length N={} must be >= M_T={}",
            cfg.pilot_length, cfg.tx_antennas
        )));
    }
    let n = cfg.pilot_length;
    let mt = cfg.tx_antennas;
    let amp = cfg.pilot_power.sqrt();
    let mut s = CMatrix::zeros(mt, n);
    for i in 0..mt {
        for j in 0..n {
            let angle = -2.0 * PI * (i as f64) * (j as f64) / n as f64;
            s[(i, j)] = Cx::from_polar(amp, angle);
        }
    }
    Ok(s)
}

/// ML channel estimation from pilot observations:
/// `Ĥ_k = Y_T S_T^H (S_T S_T^H)^{-1}` with `Y_T = H_k S_T + Z_T`.
pub fn ml_estimate(
    h: &ChannelRealization,
    pilots: &CMatrix,
    cfg: &ChannelConfig,
    noise_stream: &RngStream,
) -> Result<ChannelEstimate> {
    let (rows, n) = (cfg.rx_antennas, cfg.pilot_length);
    if pilots.nrows() != cfg.tx_antennas || pilots.ncols() != n {
        return Err(BicmError::DimensionMismatch(format!(
            "pilot matrix is {}x{}, expected {}x{}",
            pilots.nrows(),
            pilots.ncols(),
            cfg.tx_antennas,
            n
        )));
    }
    let gram = pilots * pilots.adjoint();
    let scale = n as f64 * cfg.pilot_power;
    let gram_dev = (&gram - CMatrix::identity(gram.nrows(), gram.nrows()) * Cx::new(scale, 0.0))
        .norm()
        / scale;
    if gram_dev > 1e-9 {
        return Err(BicmError::PilotDesign(format!(
            "pilots are not orthogonal: relative Gram deviation {gram_dev:.2e}"
        )));
    }
    let gram_inv = gram.clone().try_inverse().ok_or_else(|| {
        BicmError::PilotDesign("pilot Gram matrix is singular".into())
    })?;

    let noise = gaussian_complex(
        noise_stream,
        h.per_subcarrier.len() * rows * n,
        cfg.noise_variance,
    )?;
    let per_subcarrier = h
        .per_subcarrier
        .iter()
        .enumerate()
        .map(|(k, hk)| {
            let zt = CMatrix::from_vec(rows, n, noise[k * rows * n..(k + 1) * rows * n].to_vec());
            let yt = hk * pilots + zt;
            yt * pilots.adjoint() * &gram_inv
        })
        .collect();

    Ok(ChannelEstimate {
        per_subcarrier,
        error_variance: cfg.estimation_error_variance(),
        shrinkage: cfg.shrinkage(),
    })
}

/// Samples the true channel of subcarrier `k` from its posterior given the
/// estimate: mean `δ·Ĥ_k`, per-entry variance `δ·σ_E²`.
pub fn posterior_draw(est: &ChannelEstimate, k: usize, stream: &RngStream) -> CMatrix {
    let hk = &est.per_subcarrier[k];
    let mean = hk * Cx::new(est.shrinkage, 0.0);
    if est.error_variance == 0.0 {
        return hk.clone();
    }
    let noise = gaussian_complex(
        stream,
        hk.nrows() * hk.ncols(),
        est.shrinkage * est.error_variance,
    )
    .expect("nonnegative variance");
    let pert = CMatrix::from_vec(hk.nrows(), hk.ncols(), noise);
    mean + pert
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg_2x2() -> ChannelConfig {
        ChannelConfig {
            subcarriers: 4,
            tx_antennas: 2,
            rx_antennas: 2,
            gain_variance: 1.0,
            noise_variance: 0.1,
            pilot_length: 2,
            pilot_power: 1.0,
        }
    }

    #[test]
    fn config_validation() {
        assert!(cfg_2x2().validate().is_ok());
        let mut bad = cfg_2x2();
        bad.rx_antennas = 1;
        assert!(bad.validate().is_err());
        let mut bad = cfg_2x2();
        bad.pilot_length = 1;
        assert!(bad.validate().is_err());
        let mut bad = cfg_2x2();
        bad.noise_variance = 0.0;
        assert!(bad.validate().is_err());
    }

    #[test]
    fn estimate_statistics_formulas() {
        // σ_h²=1, σ_z²=0.1, N=2, P_T=1 -> σ_E²=0.05, δ=1/1.05
        let cfg = cfg_2x2();
        assert!((cfg.estimation_error_variance() - 0.05).abs() < 1e-15);
        assert!((cfg.shrinkage() - 1.0 / 1.05).abs() < 1e-12);
    }

    #[test]
    fn zero_gain_variance_draws_zero_channel() {
        let mut cfg = cfg_2x2();
        cfg.gain_variance = 0.0;
        // validate() rejects zero variance for real runs; the draw itself is
        // still well-defined and must degenerate cleanly.
        let h = draw_channel(&cfg, &RngStream::new(1, 0));
        for hk in &h.per_subcarrier {
            assert!(hk.iter().all(|z| z.norm() == 0.0));
        }
    }

    #[test]
    fn draw_channel_is_deterministic() {
        let cfg = cfg_2x2();
        let a = draw_channel(&cfg, &RngStream::new(5, 9));
        let b = draw_channel(&cfg, &RngStream::new(5, 9));
        for (x, y) in a.per_subcarrier.iter().zip(&b.per_subcarrier) {
            assert_eq!(x, y);
        }
    }

    #[test]
    fn draw_channel_moment_check() {
        let mut cfg = cfg_2x2();
        cfg.subcarriers = 25_000; // 100k matrix entries
        let h = draw_channel(&cfg, &RngStream::new(11, 0));
        let (mut sum, mut count) = (0.0, 0);
        for hk in &h.per_subcarrier {
            for z in hk.iter() {
                sum += z.norm_sqr();
                count += 1;
            }
        }
        let var = sum / count as f64;
        assert!((var - 1.0).abs() < 0.02, "per-entry variance {var}");
    }

    #[test]
    fn identity_channel_no_noise_passes_symbols_through() {
        let cfg = cfg_2x2();
        let h = ChannelRealization {
            per_subcarrier: (0..cfg.subcarriers).map(|_| CMatrix::identity(2, 2)).collect(),
        };
        let symbols: Vec<CVector> = (0..cfg.subcarriers)
            .map(|k| CVector::from_vec(vec![Cx::new(k as f64, 1.0), Cx::new(-1.0, k as f64)]))
            .collect();
        let y = apply_channel(&h, &symbols, &RngStream::new(1, 1), 0.0).unwrap();
        for (yk, sk) in y.iter().zip(&symbols) {
            assert!((yk - sk).norm() < 1e-15);
        }
    }

    #[test]
    fn zero_symbols_give_noise_with_expected_covariance() {
        let mut cfg = cfg_2x2();
        cfg.subcarriers = 50_000;
        let h = ChannelRealization {
            per_subcarrier: (0..cfg.subcarriers).map(|_| CMatrix::zeros(2, 2)).collect(),
        };
        let symbols: Vec<CVector> =
            (0..cfg.subcarriers).map(|_| CVector::zeros(2)).collect();
        let y = apply_channel(&h, &symbols, &RngStream::new(2, 3), 0.25).unwrap();
        let mut diag = [0.0f64; 2];
        let mut cross = Cx::new(0.0, 0.0);
        for yk in &y {
            diag[0] += yk[0].norm_sqr();
            diag[1] += yk[1].norm_sqr();
            cross += yk[0] * yk[1].conj();
        }
        let n = y.len() as f64;
        assert!((diag[0] / n - 0.25).abs() < 0.005);
        assert!((diag[1] / n - 0.25).abs() < 0.005);
        assert!((cross / n).norm() < 0.005);
    }

    #[test]
    fn single_subcarrier_product_matches_hand_computation() {
        let h0 = CMatrix::from_row_slice(
            2,
            2,
            &[
                Cx::new(1.0, 1.0),
                Cx::new(0.0, -2.0),
                Cx::new(-0.5, 0.0),
                Cx::new(2.0, 0.5),
            ],
        );
        let s = CVector::from_vec(vec![Cx::new(1.0, 0.0), Cx::new(0.0, 1.0)]);
        let h = ChannelRealization { per_subcarrier: vec![h0] };
        let y = apply_channel(&h, &[s], &RngStream::new(0, 0), 0.0).unwrap();
        // row 0: (1+j)*1 + (-2j)*(j) = (1+j) + 2 = 3+j
        // row 1: (-0.5)*1 + (2+0.5j)*(j) = -0.5 - 0.5 + 2j = -1+2j
        assert!((y[0][0] - Cx::new(3.0, 1.0)).norm() < 1e-14);
        assert!((y[0][1] - Cx::new(-1.0, 2.0)).norm() < 1e-14);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let cfg = cfg_2x2();
        let h = draw_channel(&cfg, &RngStream::new(1, 0));
        let symbols: Vec<CVector> = (0..cfg.subcarriers - 1).map(|_| CVector::zeros(2)).collect();
        assert!(apply_channel(&h, &symbols, &RngStream::new(1, 1), 0.1).is_err());
    }

    #[test]
    fn pilots_satisfy_orthogonality_exactly() {
        for (mt, n, pt) in [(2, 2, 1.0), (2, 4, 0.5), (4, 4, 2.0)] {
            let cfg = ChannelConfig {
                subcarriers: 1,
                tx_antennas: mt,
                rx_antennas: mt,
                gain_variance: 1.0,
                noise_variance: 1.0,
                pilot_length: n,
                pilot_power: pt,
            };
            let s = make_orthogonal_pilots(&cfg).unwrap();
            let gram = &s * s.adjoint();
            let target = CMatrix::identity(mt, mt) * Cx::new(n as f64 * pt, 0.0);
            assert!((gram - target).norm() < 1e-12, "mt={mt} n={n}");
        }
        let bad = ChannelConfig {
            pilot_length: 1,
            ..cfg_2x2()
        };
        assert!(make_orthogonal_pilots(&bad).is_err());
    }

    #[test]
    fn noiseless_training_recovers_channel_exactly() {
        let mut cfg = cfg_2x2();
        cfg.noise_variance = 1e-30;
        let h = draw_channel(&cfg, &RngStream::new(7, 0));
        let pilots = make_orthogonal_pilots(&cfg).unwrap();
        let est = ml_estimate(&h, &pilots, &cfg, &RngStream::new(7, 1)).unwrap();
        for (hk, ek) in h.per_subcarrier.iter().zip(&est.per_subcarrier) {
            assert!((hk - ek).norm() < 1e-12);
        }
        assert!((est.shrinkage - 1.0).abs() < 1e-15);
    }

    #[test]
    fn estimation_error_covariance_is_white() {
        let mut cfg = cfg_2x2();
        cfg.subcarriers = 25_000;
        let h = draw_channel(&cfg, &RngStream::new(21, 0));
        let pilots = make_orthogonal_pilots(&cfg).unwrap();
        let est = ml_estimate(&h, &pilots, &cfg, &RngStream::new(21, 1)).unwrap();
        let mut sum = 0.0;
        let mut cross = Cx::new(0.0, 0.0);
        let mut count = 0usize;
        for (hk, ek) in h.per_subcarrier.iter().zip(&est.per_subcarrier) {
            let e = ek - hk;
            for z in e.iter() {
                sum += z.norm_sqr();
                count += 1;
            }
            cross += e[(0, 0)] * e[(1, 0)].conj();
        }
        let var = sum / count as f64;
        assert!(
            (var - cfg.estimation_error_variance()).abs() < 0.02 * cfg.estimation_error_variance(),
            "empirical error variance {var}"
        );
        assert!((cross / cfg.subcarriers as f64).norm() < 0.02 * cfg.estimation_error_variance());
    }

    #[test]
    fn posterior_draw_degenerate_and_moments() {
        let cfg = cfg_2x2();
        let h = draw_channel(&cfg, &RngStream::new(31, 0));
        let perfect = ChannelEstimate::perfect(&h);
        let d = posterior_draw(&perfect, 0, &RngStream::new(31, 5));
        assert_eq!(d, h.per_subcarrier[0]);

        let pilots = make_orthogonal_pilots(&cfg).unwrap();
        let est = ml_estimate(&h, &pilots, &cfg, &RngStream::new(31, 1)).unwrap();
        let trials = 100_000;
        let mut mean = CMatrix::zeros(2, 2);
        let mut var = 0.0;
        let root = RngStream::new(31, 9);
        let target_mean = &est.per_subcarrier[1] * Cx::new(est.shrinkage, 0.0);
        for t in 0..trials {
            let d = posterior_draw(&est, 1, &root.substream(t));
            var += (&d - &target_mean).norm_squared();
            mean += d;
        }
        mean /= Cx::new(trials as f64, 0.0);
        let per_entry_var = var / (trials * 4) as f64;
        let expect_var = est.shrinkage * est.error_variance;
        assert!(
            (&mean - &target_mean).norm() / target_mean.norm() < 0.01,
            "posterior mean off"
        );
        assert!(
            (per_entry_var - expect_var).abs() < 0.02 * expect_var,
            "posterior variance {per_entry_var} vs {expect_var}"
        );
    }
}
