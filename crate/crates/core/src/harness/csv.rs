//! Result rows, CSV emission/parsing and the reproducibility manifest.
//!
//! Output bytes are deterministic for fixed inputs: floats are printed with 9
//! significant digits in scientific notation, rows in the order produced by
//! the sweep.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{BicmError, Result};
use crate::harness::config::ExperimentConfig;

pub const CSV_HEADER: &str =
    "experiment,snr_db,pilots,metric,value,n_trials,n_samples,std_error,censored,seed";

/// One measured point.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub experiment: String,
    /// Eb/N0 for BER rows, total SNR otherwise (dB).
    pub snr_db: f64,
    pub pilots: usize,
    /// Metric or decoder name ("ergodic" for the reference curve).
    pub metric: String,
    /// BER or bits per channel use.
    pub value: f64,
    /// Frames (BER) or estimate draws (outage).
    pub n_trials: u64,
    /// Information bits counted (BER) or posterior draws (outage).
    pub n_samples: u64,
    pub std_error: f64,
    /// Set when the stopping rule was cut short by the frame cap.
    pub censored: bool,
    pub seed: u64,
}

fn fmt_float(v: f64) -> String {
    format!("{v:.8e}")
}

/// Serialises rows to CSV text (header plus one line per row).
pub fn emit_csv(rows: &[ResultRow]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            r.experiment,
            fmt_float(r.snr_db),
            r.pilots,
            r.metric,
            fmt_float(r.value),
            r.n_trials,
            r.n_samples,
            fmt_float(r.std_error),
            r.censored,
            r.seed
        ));
    }
    out
}

/// Writes CSV text to a file, surfacing the path on failure.
pub fn write_csv(rows: &[ResultRow], path: &Path) -> Result<()> {
    let text = emit_csv(rows);
    let mut f = std::fs::File::create(path).map_err(|e| BicmError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    f.write_all(text.as_bytes()).map_err(|e| BicmError::Io {
        path: path.display().to_string(),
        source: e,
    })
}

/// Parses CSV text produced by [`emit_csv`].
pub fn parse_csv(text: &str) -> Result<Vec<ResultRow>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == CSV_HEADER => {}
        other => {
            return Err(BicmError::InvalidInput(format!(
                "unexpected csv header: {other:?}"
            )))
        }
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 10 {
                return Err(BicmError::InvalidInput(format!(
                    "line {}: expected 10 fields, got {}",
                    i + 2,
                    fields.len()
                )));
            }
            let parse_f = |s: &str| {
                s.parse::<f64>().map_err(|e| {
                    BicmError::InvalidInput(format!("line {}: bad float '{s}': {e}", i + 2))
                })
            };
            let parse_u = |s: &str| {
                s.parse::<u64>().map_err(|e| {
                    BicmError::InvalidInput(format!("line {}: bad integer '{s}': {e}", i + 2))
                })
            };
            Ok(ResultRow {
                experiment: fields[0].to_string(),
                snr_db: parse_f(fields[1])?,
                pilots: parse_u(fields[2])? as usize,
                metric: fields[3].to_string(),
                value: parse_f(fields[4])?,
                n_trials: parse_u(fields[5])?,
                n_samples: parse_u(fields[6])?,
                std_error: parse_f(fields[7])?,
                censored: match fields[8] {
                    "true" => true,
                    "false" => false,
                    other => {
                        return Err(BicmError::InvalidInput(format!(
                            "line {}: bad bool '{other}'",
                            i + 2
                        )))
                    }
                },
                seed: parse_u(fields[9])?,
            })
        })
        .collect()
}

/// Sidecar manifest recording the resolved configuration and conventions.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub mode: String,
    pub seed: u64,
    pub threads: usize,
    pub config: ExperimentConfig,
    pub conventions: Conventions,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Conventions {
    pub ebn0: String,
    pub snr: String,
    pub pilot_energy: String,
    pub quantile: String,
}

impl Conventions {
    pub fn stated() -> Self {
        Self {
            ebn0: "Eb/N0 = P / (Rc * B * sigma_z^2), P = per-antenna symbol energy".into(),
            snr: "SNR = P * Mt / sigma_z^2 (total transmit power over per-dimension noise)".into(),
            pilot_energy: "average pilot symbol energy equals data symbol energy".into(),
            quantile: "lower empirical quantile, k = max(1, floor(gamma * n))".into(),
        }
    }
}

/// Writes `<csv path>.manifest.json` next to the CSV output.
pub fn write_manifest(
    csv_path: &Path,
    cfg: &ExperimentConfig,
    seed: u64,
    threads: usize,
) -> Result<()> {
    let manifest = Manifest {
        tool: "bicmlab".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        mode: cfg.mode.as_str().into(),
        seed,
        threads,
        config: cfg.clone(),
        conventions: Conventions::stated(),
    };
    let path = csv_path.with_extension("csv.manifest.json");
    let text = serde_json::to_string_pretty(&manifest)
        .map_err(|e| BicmError::InvalidInput(format!("manifest serialisation: {e}")))?;
    std::fs::write(&path, text).map_err(|e| BicmError::Io {
        path: path.display().to_string(),
        source: e,
    })
}
