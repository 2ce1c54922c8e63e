//! Iterative BICM receiver: demap with current priors, deinterleave, decode,
//! feed the decoder extrinsics back as demapper priors.

use crate::channel::{ChannelEstimate, ChannelRealization};
use crate::error::{BicmError, Result};
use crate::numerics::CVector;
use crate::rxchain::bcjr::{bcjr_decode, TrellisSpec};
use crate::rxchain::candidates::CandidateSet;
use crate::rxchain::demap::{demap_from_logliks, uniform_priors, DemapParams, SubcarrierDemapper};
use crate::rxchain::metric::MetricKind;
use crate::txchain::{CodeSpec, FrameSpec, Interleaver};

/// Channel knowledge available to the receiver.
#[derive(Debug, Clone, Copy)]
pub enum ReceiverCsi<'a> {
    Perfect(&'a ChannelRealization),
    Estimated(&'a ChannelEstimate),
}

/// Runs `iterations` demap/decode passes and returns the payload hard
/// decisions from the final decoding pass.
#[allow(clippy::too_many_arguments)]
pub fn iterative_receive(
    y: &[CVector],
    csi: &ReceiverCsi,
    metric: MetricKind,
    iterations: usize,
    noise_variance: f64,
    frame: &FrameSpec,
    code: &CodeSpec,
    interleaver: &Interleaver,
    cands: &CandidateSet,
) -> Result<Vec<u8>> {
    if iterations == 0 {
        return Err(BicmError::InvalidInput("iterations must be >= 1".into()));
    }
    if y.len() != frame.subcarriers {
        return Err(BicmError::DimensionMismatch(format!(
            "{} received vectors for {} subcarriers",
            y.len(),
            frame.subcarriers
        )));
    }
    if cands.tx_antennas != frame.tx_antennas {
        return Err(BicmError::DimensionMismatch(
            "candidate set antenna count does not match the frame".into(),
        ));
    }

    // One demapper per subcarrier; candidate likelihoods are fixed across
    // iterations, only the priors move.
    let logliks: Vec<Vec<f64>> = match (metric, csi) {
        (MetricKind::PerfectCsi, ReceiverCsi::Perfect(h)) => h
            .per_subcarrier
            .iter()
            .zip(y)
            .map(|(hk, yk)| {
                let params = DemapParams {
                    kind: MetricKind::PerfectCsi,
                    noise_variance,
                    shrinkage: 1.0,
                    error_variance: 0.0,
                };
                Ok(SubcarrierDemapper::new(cands, hk, &params)?.candidate_logliks(yk))
            })
            .collect::<Result<_>>()?,
        (MetricKind::Mismatched | MetricKind::Improved, ReceiverCsi::Estimated(est)) => est
            .per_subcarrier
            .iter()
            .zip(y)
            .map(|(hk, yk)| {
                let params = DemapParams {
                    kind: metric,
                    noise_variance,
                    shrinkage: est.shrinkage,
                    error_variance: est.error_variance,
                };
                Ok(SubcarrierDemapper::new(cands, hk, &params)?.candidate_logliks(yk))
            })
            .collect::<Result<_>>()?,
        (MetricKind::PerfectCsi, _) => {
            return Err(BicmError::InvalidInput(
                "perfect-CSI metric requires the true channel".into(),
            ))
        }
        (_, ReceiverCsi::Perfect(_)) => {
            return Err(BicmError::InvalidInput(
                "mismatched/improved metrics require a channel estimate".into(),
            ))
        }
    };

    let trellis = TrellisSpec::from_code(code)?;
    let lb = cands.label_bits();
    let coded_len = frame.coded_len();
    let payload_len = frame.payload_len(code);

    let mut priors = uniform_priors(coded_len);
    let mut decisions = Vec::new();
    for it in 0..iterations {
        let mut interleaved_llrs = Vec::with_capacity(coded_len);
        for (k, ll) in logliks.iter().enumerate() {
            let slice = &priors[k * lb..(k + 1) * lb];
            interleaved_llrs.extend(demap_from_logliks(ll, cands, slice)?);
        }
        let coded_llrs = interleaver.deinterleave(&interleaved_llrs)?;
        let decoded = bcjr_decode(&coded_llrs, &trellis)?;
        if it + 1 == iterations {
            decisions = decoded.info_llrs[..payload_len]
                .iter()
                .map(|&l| (l > 0.0) as u8)
                .collect();
        } else {
            priors = interleaver.interleave(&decoded.extrinsic)?;
        }
    }
    Ok(decisions)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{apply_channel, draw_channel, ChannelConfig, ChannelEstimate};
    use crate::numerics::RngStream;
    use crate::txchain::{assemble_frame, random_payload};

    fn setup() -> (ChannelConfig, FrameSpec, CodeSpec, Interleaver, CandidateSet) {
        let cfg = ChannelConfig {
            subcarriers: 16,
            tx_antennas: 2,
            rx_antennas: 2,
            gain_variance: 1.0,
            noise_variance: 1e-4,
            pilot_length: 2,
            pilot_power: 1.0,
        };
        let frame = FrameSpec {
            subcarriers: 16,
            tx_antennas: 2,
            bits_per_symbol: 4,
            interleaver_seed: 7,
        };
        let code = CodeSpec::default();
        let il = Interleaver::new(frame.coded_len(), frame.interleaver_seed);
        let cands = CandidateSet::qam16(2).unwrap();
        (cfg, frame, code, il, cands)
    }

    #[test]
    fn perfect_csi_high_snr_recovers_payloads() {
        let (cfg, frame, code, il, cands) = setup();
        let root = RngStream::new(404, 0);
        for trial in 0..20 {
            let s = root.substream(trial);
            let h = draw_channel(&cfg, &s.substream(0));
            let payload = random_payload(&frame, &code, &s.substream(1));
            let tx = assemble_frame(&payload, &frame, &code, &il).unwrap();
            let y = apply_channel(&h, &tx.symbols, &s.substream(2), cfg.noise_variance).unwrap();
            let decided = iterative_receive(
                &y,
                &ReceiverCsi::Perfect(&h),
                MetricKind::PerfectCsi,
                4,
                cfg.noise_variance,
                &frame,
                &code,
                &il,
                &cands,
            )
            .unwrap();
            assert_eq!(decided, payload, "trial {trial}");
        }
    }

    #[test]
    fn improved_and_mismatched_agree_bit_for_bit_with_perfect_estimate() {
        let (mut cfg, frame, code, il, cands) = setup();
        cfg.noise_variance = 0.15; // moderate SNR, decisions non-trivial
        let root = RngStream::new(405, 0);
        for trial in 0..25 {
            let s = root.substream(trial);
            let h = draw_channel(&cfg, &s.substream(0));
            let est = ChannelEstimate::perfect(&h);
            let payload = random_payload(&frame, &code, &s.substream(1));
            let tx = assemble_frame(&payload, &frame, &code, &il).unwrap();
            let y = apply_channel(&h, &tx.symbols, &s.substream(2), cfg.noise_variance).unwrap();
            let run = |metric| {
                iterative_receive(
                    &y,
                    &ReceiverCsi::Estimated(&est),
                    metric,
                    4,
                    cfg.noise_variance,
                    &frame,
                    &code,
                    &il,
                    &cands,
                )
                .unwrap()
            };
            assert_eq!(run(MetricKind::Improved), run(MetricKind::Mismatched));
        }
    }

    #[test]
    fn metric_and_csi_must_be_compatible() {
        let (cfg, frame, code, il, cands) = setup();
        let h = draw_channel(&cfg, &RngStream::new(1, 0));
        let est = ChannelEstimate::perfect(&h);
        let y: Vec<_> = (0..frame.subcarriers)
            .map(|_| crate::numerics::CVector::zeros(2))
            .collect();
        assert!(iterative_receive(
            &y,
            &ReceiverCsi::Perfect(&h),
            MetricKind::Improved,
            1,
            0.1,
            &frame,
            &code,
            &il,
            &cands
        )
        .is_err());
        assert!(iterative_receive(
            &y,
            &ReceiverCsi::Estimated(&est),
            MetricKind::PerfectCsi,
            1,
            0.1,
            &frame,
            &code,
            &il,
            &cands
        )
        .is_err());
        assert!(iterative_receive(
            &y,
            &ReceiverCsi::Perfect(&h),
            MetricKind::PerfectCsi,
            0,
            0.1,
            &frame,
            &code,
            &il,
            &cands
        )
        .is_err());
    }
}
