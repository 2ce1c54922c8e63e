//! Link-level Monte Carlo laboratory for bit-interleaved coded modulation
//! (BICM) over MIMO-OFDM channels that are known at the receiver only through
//! a pilot-based estimate.
//!
//! The crate is organised around the signal path:
//!
//! * [`numerics`] — complex linear algebra (small dense SVD), the special
//!   functions entering the achievable-rate solution, and deterministic
//!   counter-based random streams.
//! * [`channel`] — block Rayleigh fading generation, AWGN application,
//!   maximum-likelihood pilot estimation and the posterior statistics of the
//!   true channel given its estimate.
//! * [`txchain`] — convolutional encoding, pseudo-random interleaving, Gray
//!   16-QAM mapping and frame assembly.
//! * [`rxchain`] — decision metrics (perfect-CSI, mismatched, estimation-aware),
//!   joint soft demapping, BCJR decoding and the iterative receiver loop.
//! * [`rates`] — instantaneous achievable rates of the three decoders and
//!   Monte Carlo outage / expected-outage rates.
//! * [`harness`] — experiment configuration, BER and outage sweeps, CSV and
//!   manifest emission.

pub mod channel;
pub mod error;
pub mod harness;
pub mod numerics;
pub mod rates;
pub mod rxchain;
pub mod txchain;

pub use error::{BicmError, Result};
