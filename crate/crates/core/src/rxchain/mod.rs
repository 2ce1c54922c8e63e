//! Receiver: decision metrics, joint soft demapping with extrinsic priors,
//! BCJR decoding and the demap/decode iteration loop.

pub mod bcjr;
pub mod candidates;
pub mod demap;
pub mod metric;
pub mod receiver;

pub use bcjr::{bcjr_decode, BcjrOutput, TrellisSpec};
pub use candidates::CandidateSet;
pub use demap::{demap_from_logliks, demap_llrs, uniform_priors, DemapParams, SubcarrierDemapper, LLR_CLAMP};
pub use metric::{metric_improved, metric_mismatched, metric_perfect, MetricKind};
pub use receiver::{iterative_receive, ReceiverCsi};
