//! Sweep drivers. All Monte Carlo work is parallelised over trial indices
//! with counter-based substreams and index-ordered reductions, so output is
//! byte-identical for any worker count.

use rayon::prelude::*;

use crate::channel::{apply_channel, draw_channel, make_orthogonal_pilots, ml_estimate};
use crate::error::{BicmError, Result};
use crate::harness::config::{ExperimentConfig, Mode};
use crate::harness::csv::ResultRow;
use crate::numerics::RngStream;
use crate::rates::{expected_outage_rates, instantaneous_rates, RateConfig};
use crate::rxchain::{iterative_receive, CandidateSet, MetricKind, ReceiverCsi};
use crate::txchain::{assemble_frame, random_payload, Interleaver};

const BER_STREAM: u64 = 0x0BE5;
const OUTAGE_STREAM: u64 = 0x007A;
const RATES_STREAM: u64 = 0x0A7E;

/// Dispatches on the configured mode inside a dedicated thread pool.
pub fn run_experiment(cfg: &ExperimentConfig, threads: usize) -> Result<Vec<ResultRow>> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| BicmError::Config(format!("thread pool: {e}")))?;
    pool.install(|| match cfg.mode {
        Mode::Ber => ber_sweep_inner(cfg),
        Mode::Outage => outage_sweep_inner(cfg),
        Mode::RatesPoint => run_rates_point(cfg),
    })
}

/// BER sweep over (pilot length, Eb/N0, metric).
pub fn run_ber_sweep(cfg: &ExperimentConfig, threads: usize) -> Result<Vec<ResultRow>> {
    let mut cfg = cfg.clone();
    cfg.mode = Mode::Ber;
    run_experiment(&cfg, threads)
}

/// Expected-outage sweep over SNR.
pub fn run_outage_sweep(cfg: &ExperimentConfig, threads: usize) -> Result<Vec<ResultRow>> {
    let mut cfg = cfg.clone();
    cfg.mode = Mode::Outage;
    run_experiment(&cfg, threads)
}

fn ber_sweep_inner(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    let code = cfg.code_spec();
    let frame = cfg.frame_spec();
    let interleaver = Interleaver::new(frame.coded_len(), frame.interleaver_seed);
    let cands = CandidateSet::qam16(frame.tx_antennas)?;
    let metrics = cfg.metric_kinds()?;
    let payload_len = frame.payload_len(&code) as u64;
    let root = RngStream::new(cfg.sim.seed, 0).substream(BER_STREAM);

    let mut rows = Vec::new();
    for (pi, &pilot_len) in cfg.sim.pilot_lengths.iter().enumerate() {
        for (si, &grid_db) in cfg.sim.snr_grid_db.iter().enumerate() {
            let noise = cfg.noise_variance_for(grid_db);
            let ch = cfg.channel_config(noise, pilot_len);
            let pilots = make_orthogonal_pilots(&ch)?;
            let point = root.substream(pi as u64).substream(si as u64);

            let mut frames = 0u64;
            let mut errors = vec![0u64; metrics.len()];
            loop {
                let chunk = cfg.sim.chunk_frames.min(cfg.sim.max_frames - frames);
                if chunk == 0 {
                    break;
                }
                let chunk_errors: Vec<Vec<u64>> = (frames..frames + chunk)
                    .into_par_iter()
                    .map(|fidx| {
                        let fs = point.substream(fidx);
                        let payload = random_payload(&frame, &code, &fs.substream(0));
                        let h = draw_channel(&ch, &fs.substream(1));
                        let est = ml_estimate(&h, &pilots, &ch, &fs.substream(2))?;
                        let tx = assemble_frame(&payload, &frame, &code, &interleaver)?;
                        let y =
                            apply_channel(&h, &tx.symbols, &fs.substream(3), ch.noise_variance)?;
                        metrics
                            .iter()
                            .map(|&metric| {
                                let csi = match metric {
                                    MetricKind::PerfectCsi => ReceiverCsi::Perfect(&h),
                                    _ => ReceiverCsi::Estimated(&est),
                                };
                                let decided = iterative_receive(
                                    &y,
                                    &csi,
                                    metric,
                                    cfg.sim.iterations,
                                    ch.noise_variance,
                                    &frame,
                                    &code,
                                    &interleaver,
                                    &cands,
                                )?;
                                Ok(decided
                                    .iter()
                                    .zip(&payload)
                                    .filter(|(a, b)| a != b)
                                    .count() as u64)
                            })
                            .collect::<Result<Vec<u64>>>()
                    })
                    .collect::<Result<_>>()?;
                for per_frame in &chunk_errors {
                    for (acc, e) in errors.iter_mut().zip(per_frame) {
                        *acc += e;
                    }
                }
                frames += chunk;
                let floors_met = frames >= cfg.sim.min_frames
                    && errors.iter().all(|&e| e >= cfg.sim.min_bit_errors);
                if floors_met {
                    break;
                }
            }

            let bits = frames * payload_len;
            for (metric, &errs) in metrics.iter().zip(&errors) {
                let ber = errs as f64 / bits as f64;
                eprintln!(
                    "ber: N={pilot_len} grid={grid_db} dB metric={} frames={frames} errors={errs} ber={ber:.3e}",
                    metric.as_str()
                );
                rows.push(ResultRow {
                    experiment: "ber".into(),
                    snr_db: grid_db,
                    pilots: pilot_len,
                    metric: metric.as_str().into(),
                    value: ber,
                    n_trials: frames,
                    n_samples: bits,
                    std_error: (ber * (1.0 - ber) / bits as f64).max(0.0).sqrt(),
                    censored: errs < cfg.sim.min_bit_errors,
                    seed: cfg.sim.seed,
                });
            }
        }
    }
    Ok(rows)
}

fn outage_sweep_inner(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    let root = RngStream::new(cfg.sim.seed, 0).substream(OUTAGE_STREAM);
    let mut rows = Vec::new();
    for (si, &snr_db) in cfg.sim.snr_grid_db.iter().enumerate() {
        let noise = cfg.noise_variance_for(snr_db);
        let ch = cfg.channel_config(noise, cfg.channel.pilot_length);
        let eo = expected_outage_rates(
            &ch,
            cfg.sim.symbol_power,
            cfg.outage.gamma,
            cfg.outage.estimate_draws,
            cfg.outage.posterior_draws,
            &root.substream(si as u64),
        )?;
        eprintln!(
            "outage: snr={snr_db} dB improved={:.3} mismatched={:.3} theoretical={:.3} ergodic={:.3}",
            eo.improved.0, eo.mismatched.0, eo.theoretical.0, eo.ergodic.0
        );
        for (name, (mean, se)) in [
            ("improved", eo.improved),
            ("mismatched", eo.mismatched),
            ("theoretical", eo.theoretical),
            ("ergodic", eo.ergodic),
        ] {
            rows.push(ResultRow {
                experiment: "outage".into(),
                snr_db,
                pilots: ch.pilot_length,
                metric: name.into(),
                value: mean,
                n_trials: cfg.outage.estimate_draws as u64,
                n_samples: cfg.outage.posterior_draws as u64,
                std_error: se,
                censored: false,
                seed: cfg.sim.seed,
            });
        }
    }
    Ok(rows)
}

/// Instantaneous rates for a single seeded channel/estimate draw at the first
/// grid SNR.
pub fn run_rates_point(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    cfg.validate()?;
    let snr_db = cfg.sim.snr_grid_db[0];
    let noise = cfg.noise_variance_for(snr_db);
    let ch = cfg.channel_config(noise, cfg.channel.pilot_length);
    let stream = RngStream::new(cfg.sim.seed, 0).substream(RATES_STREAM);
    let h = draw_channel(&ch, &stream.substream(0));
    let pilots = make_orthogonal_pilots(&ch)?;
    let est = ml_estimate(&h, &pilots, &ch, &stream.substream(1))?;
    let rate_cfg = RateConfig::from_channel(&ch, cfg.sim.symbol_power);
    let p = instantaneous_rates(&h.per_subcarrier, &est.per_subcarrier, &rate_cfg)?;
    Ok([
        ("improved", p.c_improved),
        ("mismatched", p.c_mismatched),
        ("theoretical", p.c_theoretical),
    ]
    .into_iter()
    .map(|(name, value)| ResultRow {
        experiment: "rates-point".into(),
        snr_db,
        pilots: ch.pilot_length,
        metric: name.into(),
        value,
        n_trials: 1,
        n_samples: ch.subcarriers as u64,
        std_error: 0.0,
        censored: false,
        seed: cfg.sim.seed,
    })
    .collect())
}
